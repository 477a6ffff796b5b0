// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <utility>

#include "lkca/model.hpp"

namespace lkca {

namespace {

constexpr std::string_view kMagic = "LKCA1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t checked_u32(std::size_t v, const std::string& what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw CheckpointError(what + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError("checkpoint " + path_ + ": " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated");
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

template <Real T>
void save_checkpoint(const std::filesystem::path& path, const VisionModel<T>& model) {
  std::string out(kMagic);
  for_each_param(model, [&](const std::string& name, const Tensor<T>& t) {
    put_u32(out, checked_u32(name.size(), "name length of '" + name + "'"));
    out += name;
    put_u32(out, checked_u32(t.rank(), "rank of '" + name + "'"));
    for (std::size_t e : t.shape()) put_u32(out, checked_u32(e, "extent of '" + name + "'"));
    for (T v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  });
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(bytes, path.string());
  if (bytes.size() < kMagic.size() || bytes.compare(0, kMagic.size(), kMagic) != 0) {
    r.fail("bad magic");
  }
  r.bytes(kMagic.size());
  std::vector<CheckpointEntry> out;
  while (!r.done()) {
    CheckpointEntry e;
    e.name = r.bytes(r.u32());
    Shape shape(r.u32());
    for (std::size_t& s : shape) s = r.u32();
    const std::size_t n = shape_numel(shape);
    if (n > (bytes.size() - r.pos()) / 4) r.fail("truncated data for '" + e.name + "'");
    std::vector<float> data(n);
    for (float& v : data) v = std::bit_cast<float>(r.u32());
    e.value = TensorF(std::move(shape), std::move(data));
    out.push_back(std::move(e));
  }
  return out;
}

template <Real T>
void load_checkpoint(const std::filesystem::path& path, VisionModel<T>& model) {
  std::map<std::string, TensorF> entries;
  for (CheckpointEntry& e : read_checkpoint(path)) {
    const std::string name = e.name;
    if (!entries.emplace(name, std::move(e.value)).second) {
      throw CheckpointError("checkpoint " + path.string() + " repeats tensor '" + name + "'");
    }
  }
  std::size_t matched = 0;
  for_each_param(std::as_const(model), [&](const std::string& name, const Tensor<T>& t) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      throw CheckpointError("checkpoint " + path.string() + " is missing tensor '" + name + "'");
    }
    if (it->second.shape() != t.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_str(it->second.shape()) +
                            " in " + path.string() + " but the config expects " +
                            shape_str(t.shape()));
    }
    ++matched;
  });
  if (matched != entries.size()) {
    std::map<std::string, bool> known;
    for_each_param(std::as_const(model),
                   [&](const std::string& name, const Tensor<T>&) { known[name] = true; });
    for (const auto& [name, _] : entries) {
      if (!known.contains(name)) {
        throw CheckpointError("checkpoint " + path.string() + " has unexpected tensor '" + name +
                              "'");
      }
    }
  }
  for_each_param(model, [&](const std::string& name, Tensor<T>& t) {
    t = entries.at(name).template cast<T>();
  });
}

template void save_checkpoint(const std::filesystem::path&, const VisionModel<float>&);
template void save_checkpoint(const std::filesystem::path&, const VisionModel<double>&);
template void load_checkpoint(const std::filesystem::path&, VisionModel<float>&);
template void load_checkpoint(const std::filesystem::path&, VisionModel<double>&);

}  // namespace lkca
