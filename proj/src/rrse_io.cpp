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

#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "rrsitr/dataset.hpp"

namespace rrsitr {
namespace {

constexpr char kMagic[5] = "RRSE";
constexpr std::uint32_t kVersion = 1;

std::uint32_t narrow(std::size_t v, const char* field) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError(std::string("RRSE field '") + field +
                      "' exceeds u32 range");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  detail::ByteWriter w;
  w.put_magic(kMagic);
  w.put(kVersion);
  w.put(narrow(dataset.n_pairs(), "n"));
  w.put(narrow(dataset.dim, "dim"));
  w.put(narrow(dataset.d1, "d1"));
  w.put(narrow(dataset.d2, "d2"));
  for (const EmbeddingBlock* block :
       {&dataset.image_global, &dataset.image_local, &dataset.text_global,
        &dataset.text_local}) {
    w.put_array(block->data(), static_cast<std::size_t>(block->size()));
  }
  w.put_array(dataset.y.data(), dataset.y.size());
  w.put<std::uint8_t>(dataset.class_id ? 1 : 0);
  if (dataset.class_id) {
    w.put_array(dataset.class_id->data(), dataset.class_id->size());
  }
  w.save(path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic(kMagic);
  const auto version_offset = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw FormatError("unsupported RRSE version " + std::to_string(version),
                      version_offset);
  }
  const auto n = r.get<std::uint32_t>("header.n");
  const auto dim_offset = r.offset();
  const auto dim = r.get<std::uint32_t>("header.dim");
  const auto d1 = r.get<std::uint32_t>("header.d1");
  const auto d2 = r.get<std::uint32_t>("header.d2");
  if (dim < 2) {
    throw FormatError("header dim=" + std::to_string(dim) + " violates dim >= 2",
                      dim_offset);
  }
  if (d1 < 1 || d2 < 1) {
    throw FormatError("header d1/d2 must be >= 1", dim_offset + 4);
  }

  Dataset out;
  out.dim = dim;
  out.d1 = d1;
  out.d2 = d2;
  const auto read_block = [&](EmbeddingBlock& block, std::uint64_t rows,
                              const char* section) {
    r.require(rows * dim * sizeof(float), section);
    const auto start = r.offset();
    block.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    r.get_array(block.data(), static_cast<std::size_t>(block.size()), section);
    for (Eigen::Index k = 0; k < block.size(); ++k) {
      if (!std::isfinite(block.data()[k])) {
        throw FormatError(std::string("non-finite value in section '") + section + "'",
                          start + static_cast<std::uint64_t>(k) * sizeof(float));
      }
    }
  };
  read_block(out.image_global, n, "image_global");
  read_block(out.image_local, std::uint64_t{n} * d1, "image_local");
  read_block(out.text_global, n, "text_global");
  read_block(out.text_local, std::uint64_t{n} * d2, "text_local");

  out.y.resize(n);
  const auto labels_offset = r.offset();
  r.get_array(out.y.data(), n, "labels");
  const auto flag_offset = r.offset();
  const auto has_class = r.get<std::uint8_t>("class_id flag");
  if (has_class > 1) {
    throw FormatError("class_id presence flag must be 0 or 1", flag_offset);
  }
  if (has_class == 1) {
    std::vector<std::uint32_t> ids(n);
    r.get_array(ids.data(), n, "class_id");
    out.class_id = std::move(ids);
  }
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after RRSE payload", r.offset());
  }
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    if (out.y[i] > 1) {
      throw FormatError("label must be 0 or 1", labels_offset + i);
    }
  }
  out.validate();
  return out;
}

}  // namespace rrsitr
