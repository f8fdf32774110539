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

#ifndef SESSCOMP_BINARY_IO_H_
#define SESSCOMP_BINARY_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

namespace sesscomp {

// Little-endian primitive writer used by all binary file formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void Magic(std::string_view magic);
  void U8(std::uint8_t v);
  void U16(std::uint16_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void F64(double v);
  // u16 length prefix followed by raw bytes.
  void String(std::string_view s);

 private:
  void Raw(const void* data, std::size_t n);
  std::ostream& os_;
};

// Reader counterpart. Short reads raise Errc::kTruncated.
class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  // Raises kBadMagic if the next bytes differ from `magic`.
  void ExpectMagic(std::string_view magic);
  std::uint8_t U8();
  std::uint16_t U16();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  double F64();
  std::string String();
  // True when the stream has no bytes left.
  bool AtEnd();

 private:
  void Raw(void* data, std::size_t n);
  std::istream& is_;
  std::string what_;
};

}  // namespace sesscomp

#endif  // SESSCOMP_BINARY_IO_H_
