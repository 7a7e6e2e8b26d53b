// Copyright 2026 The SND Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian encoding helpers for the SNDM / SNDS / SNDP file formats.

#ifndef SND_BINARY_IO_H_
#define SND_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "snd/errors.h"

namespace snd {

class ByteWriter {
 public:
  void Magic(std::string_view magic) { out_.append(magic); }
  void U16(std::uint16_t v) {
    out_.push_back(static_cast<char>(v & 0xff));
    out_.push_back(static_cast<char>(v >> 8));
  }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void Bytes(std::string_view s) { out_.append(s); }

  const std::string& data() const { return out_; }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

// Reads from a byte buffer; every failure is a FormatError carrying the
// offset of the field that could not be decoded.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  void ExpectMagic(std::string_view magic) {
    Need(magic.size(), "magic");
    if (bytes_.substr(pos_, magic.size()) != magic) {
      throw FormatError("bad magic, expected \"" + std::string(magic) + "\"",
                        pos_);
    }
    pos_ += magic.size();
  }
  std::uint16_t U16(const char* field) {
    Need(2, field);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t U32(const char* field) {
    Need(4, field);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float F32(const char* field) { return std::bit_cast<float>(U32(field)); }
  std::string_view Bytes(std::size_t n, const char* field) {
    Need(n, field);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void ExpectEnd() {
    if (pos_ != bytes_.size()) throw FormatError("trailing bytes", pos_);
  }
  std::size_t offset() const { return pos_; }

 private:
  void Need(std::size_t n, const char* field) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated payload reading ") + field,
                        pos_);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace snd

#endif  // SND_BINARY_IO_H_
