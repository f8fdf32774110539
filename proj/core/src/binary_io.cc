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

#include "sesscomp/binary_io.h"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "sesscomp/error.h"

namespace sesscomp {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kDimensionMismatch: return "dimension mismatch";
    case Errc::kDegenerate: return "degenerate input";
    case Errc::kNonFinite: return "non-finite value";
    case Errc::kIo: return "i/o error";
    case Errc::kBadMagic: return "bad magic";
    case Errc::kVersionMismatch: return "version mismatch";
    case Errc::kTruncated: return "truncated";
    case Errc::kNotFound: return "not found";
    case Errc::kStaleCache: return "stale cache";
  }
  return "error";
}

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void BinaryWriter::Raw(const void* data, std::size_t n) {
  os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os_) throw Error(Errc::kIo, "write failed");
}

void BinaryWriter::Magic(std::string_view magic) { Raw(magic.data(), magic.size()); }
void BinaryWriter::U8(std::uint8_t v) { Raw(&v, sizeof v); }
void BinaryWriter::U16(std::uint16_t v) { Raw(&v, sizeof v); }
void BinaryWriter::U32(std::uint32_t v) { Raw(&v, sizeof v); }
void BinaryWriter::U64(std::uint64_t v) { Raw(&v, sizeof v); }
void BinaryWriter::F32(float v) { Raw(&v, sizeof v); }
void BinaryWriter::F64(double v) { Raw(&v, sizeof v); }

void BinaryWriter::String(std::string_view s) {
  if (s.size() > 0xFFFF) {
    throw Error(Errc::kInvalidArgument, "string longer than 65535 bytes");
  }
  U16(static_cast<std::uint16_t>(s.size()));
  Raw(s.data(), s.size());
}

void BinaryReader::Raw(void* data, std::size_t n) {
  is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is_.gcount()) != n) {
    throw Error(Errc::kTruncated, what_ + ": unexpected end of file");
  }
}

void BinaryReader::ExpectMagic(std::string_view magic) {
  std::string got(magic.size(), '\0');
  is_.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (static_cast<std::size_t>(is_.gcount()) != magic.size() || got != magic) {
    throw Error(Errc::kBadMagic, what_ + ": expected magic " + std::string(magic));
  }
}

std::uint8_t BinaryReader::U8() { std::uint8_t v; Raw(&v, sizeof v); return v; }
std::uint16_t BinaryReader::U16() { std::uint16_t v; Raw(&v, sizeof v); return v; }
std::uint32_t BinaryReader::U32() { std::uint32_t v; Raw(&v, sizeof v); return v; }
std::uint64_t BinaryReader::U64() { std::uint64_t v; Raw(&v, sizeof v); return v; }
float BinaryReader::F32() { float v; Raw(&v, sizeof v); return v; }
double BinaryReader::F64() { double v; Raw(&v, sizeof v); return v; }

std::string BinaryReader::String() {
  std::string s(U16(), '\0');
  if (!s.empty()) Raw(s.data(), s.size());
  return s;
}

bool BinaryReader::AtEnd() {
  return is_.peek() == std::istream::traits_type::eof();
}

}  // namespace sesscomp
