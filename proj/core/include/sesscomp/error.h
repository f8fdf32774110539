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

#ifndef SESSCOMP_ERROR_H_
#define SESSCOMP_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sesscomp {

enum class Errc {
  kInvalidArgument,
  kDimensionMismatch,
  kDegenerate,     // zero-norm vectors, single-class protocols, etc.
  kNonFinite,
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kNotFound,
  kStaleCache,
};

std::string_view ErrcName(Errc code);

// Every failure in the library is reported through this exception. The code
// lets callers (and tests) distinguish failure classes without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace sesscomp

#endif  // SESSCOMP_ERROR_H_
