// Copyright (c) 2026 The sesscomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SESSCOMP_CLI_CLI_H_
#define SESSCOMP_CLI_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace sesscomp::cli {

// Runs the command line `args` (without the program name). Returns the
// process exit status: 0 on success, 1 for usage errors, 2 for runtime errors.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sesscomp::cli

#endif  // SESSCOMP_CLI_CLI_H_
