// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "lkca/rng.hpp"
#include "lkca/train.hpp"

namespace lkca {

void Dataset::validate(std::size_t num_classes) const {
  if (images.rank() != 4 || images.dim(0) != labels.size()) {
    throw DimensionError("dataset has images " + shape_str(images.shape()) + " but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (!offsets.empty() && offsets.size() != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(offsets.size()) + " offsets for " +
                         std::to_string(labels.size()) + " samples");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::out_of_range("label " + std::to_string(labels[i]) + " of sample " +
                              std::to_string(i) + " is outside [0, " +
                              std::to_string(num_classes) + ")");
    }
  }
}

Dataset gen_stripes(std::size_t n, std::size_t grid, std::uint64_t seed,
                    std::span<const std::size_t> allowed_offsets, double noise) {
  if (grid < 4) throw std::invalid_argument("gen_stripes: grid must be at least 4");
  std::vector<std::size_t> allowed(allowed_offsets.begin(), allowed_offsets.end());
  if (allowed.empty()) {
    for (std::size_t o = 0; o + 1 < grid; ++o) allowed.push_back(o);
  }
  for (std::size_t o : allowed) {
    if (o + 1 >= grid) {
      throw std::invalid_argument("gen_stripes: offset " + std::to_string(o) +
                                  " leaves no room for a 2-pixel bar on grid " +
                                  std::to_string(grid));
    }
  }
  SeededRng rng(seed);
  Dataset d;
  d.images = TensorF({n, grid, grid, 1});
  d.labels.resize(n);
  d.offsets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const std::size_t off = allowed[rng.uniform_index(allowed.size())];
    d.labels[i] = label;
    d.offsets[i] = off;
    float* img = d.images.ptr() + i * grid * grid;
    for (std::size_t r = 0; r < grid; ++r) {
      for (std::size_t c = 0; c < grid; ++c) {
        const std::size_t pos = label == 0 ? r : c;
        const double clean = (pos == off || pos == off + 1) ? 1.0 : 0.0;
        const double v = clean + noise * rng.normal();
        img[r * grid + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return d;
}

IdxError::IdxError(Kind kind, std::size_t offset, const std::string& detail)
    : std::runtime_error(detail + " (byte offset " + std::to_string(offset) + ")"),
      kind_(kind),
      offset_(offset),
      detail_(detail) {}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  using K = IdxError::Kind;
  const auto need = [&](std::size_t offset, std::size_t n, const char* what) {
    if (bytes.size() < offset + n) {
      throw IdxError(K::truncated, bytes.size(), std::string("truncated IDX ") + what);
    }
  };
  for (std::size_t i = 0; i < 2; ++i) {
    need(i, 1, "header");
    if (bytes[i] != 0) throw IdxError(K::bad_magic, i, "bad IDX magic: expected zero byte");
  }
  need(2, 1, "header");
  if (bytes[2] != 0x08) {
    char type[8];
    std::snprintf(type, sizeof type, "0x%02x", static_cast<unsigned>(bytes[2]));
    throw IdxError(K::unsupported_type, 2,
                   std::string("unsupported IDX element type ") + type +
                       ", only unsigned byte 0x08 is supported");
  }
  need(3, 1, "header");
  const std::size_t rank = bytes[3];
  if (rank == 0) throw IdxError(K::bad_magic, 3, "bad IDX magic: rank must be positive");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t off = 4 + 4 * k;
    need(off, 4, "extents");
    const std::size_t e = (std::size_t{bytes[off]} << 24) | (std::size_t{bytes[off + 1]} << 16) |
                          (std::size_t{bytes[off + 2]} << 8) | std::size_t{bytes[off + 3]};
    out.shape.push_back(e);
    if (e != 0 && count > std::numeric_limits<std::size_t>::max() / e) {
      throw IdxError(K::truncated, bytes.size(), "truncated IDX payload: extents overflow");
    }
    count *= e;
  }
  const std::size_t data_at = 4 + 4 * rank;
  need(data_at, count, "payload");
  if (bytes.size() > data_at + count) {
    throw IdxError(K::trailing_bytes, data_at + count, "unexpected bytes after IDX payload");
  }
  out.data.assign(bytes.begin() + data_at, bytes.end());
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open IDX file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const IdxError& e) {
    throw IdxError(e.kind(), e.offset(), path.string() + ": " + e.detail());
  }
}

TensorF load_idx_images(const std::filesystem::path& path) {
  const IdxArray a = read_idx(path);
  Shape shape = a.shape;
  if (shape.size() == 3) shape.push_back(1);
  if (shape.size() != 4) {
    throw DimensionError(path.string() + ": image file must have rank 3 or 4, got " +
                         std::to_string(a.shape.size()));
  }
  std::vector<float> data(a.data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(a.data[i]) / 255.0f;
  return TensorF(std::move(shape), std::move(data));
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const IdxArray a = read_idx(path);
  if (a.shape.size() != 1) {
    throw DimensionError(path.string() + ": label file must have rank 1, got " +
                         std::to_string(a.shape.size()));
  }
  return std::vector<int>(a.data.begin(), a.data.end());
}

}  // namespace lkca
