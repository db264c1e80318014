// Copyright 2026 The rrsitr Authors.
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

// Little-endian byte streams shared by the RRSE and RRSP containers.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "rrsitr/errors.hpp"

namespace rrsitr::detail {

template <typename T>
T to_little(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    value = to_little(value);
    const auto* p = reinterpret_cast<const unsigned char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_array(const T* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const unsigned char*>(data);
      bytes_.insert(bytes_.end(), p, p + count * sizeof(T));
    } else {
      for (std::size_t i = 0; i < count; ++i) put(data[i]);
    }
  }

  void put_magic(const char (&magic)[5]) {
    bytes_.insert(bytes_.end(), magic, magic + 4);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
  }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  }

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void require(std::uint64_t count, const std::string& section) const {
    if (remaining() < count) {
      throw FormatError("truncated file: section '" + section + "' needs " +
                            std::to_string(count) + " bytes, " +
                            std::to_string(remaining()) + " left",
                        pos_);
    }
  }

  template <typename T>
  T get(const std::string& section) {
    require(sizeof(T), section);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }

  template <typename T>
  void get_array(T* data, std::size_t count, const std::string& section) {
    require(static_cast<std::uint64_t>(count) * sizeof(T), section);
    std::memcpy(data, bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    if constexpr (std::endian::native != std::endian::little) {
      for (std::size_t i = 0; i < count; ++i) data[i] = to_little(data[i]);
    }
  }

  void expect_magic(const char (&magic)[5]) {
    require(4, "magic");
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
      throw FormatError(std::string("bad magic, expected \"") + magic + "\"",
                        pos_);
    }
    pos_ += 4;
  }

 private:
  std::vector<char> bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace rrsitr::detail
