// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lkca/cli.hpp"

namespace lkca::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

std::size_t to_size(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(out);
}

double to_double(const std::string& v) {
  // from_chars for double is missing from older libstdc++.
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Key {
  std::string name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define LKCA_SIZE_KEY(path, name)                                            \
  Key{#name, [](TrainConfig& c, const std::string& v) { c.path = to_size(v); }, \
      [](const TrainConfig& c) { return std::to_string(c.path); }}
#define LKCA_DOUBLE_KEY(path, name)                                            \
  Key{#name, [](TrainConfig& c, const std::string& v) { c.path = to_double(v); }, \
      [](const TrainConfig& c) { return num(c.path); }}
#define LKCA_STRING_KEY(path, name)                                     \
  Key{#name, [](TrainConfig& c, const std::string& v) { c.path = v; }, \
      [](const TrainConfig& c) { return c.path; }}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys{
      LKCA_SIZE_KEY(model.image_h, image_h),
      LKCA_SIZE_KEY(model.image_w, image_w),
      LKCA_SIZE_KEY(model.channels, channels),
      LKCA_SIZE_KEY(model.patch_size, patch_size),
      LKCA_SIZE_KEY(model.dim, dim),
      LKCA_SIZE_KEY(model.depth, depth),
      LKCA_DOUBLE_KEY(model.mlp_ratio, mlp_ratio),
      LKCA_SIZE_KEY(model.num_heads, num_heads),
      LKCA_SIZE_KEY(model.num_classes, num_classes),
      LKCA_STRING_KEY(model.block_pattern, block_pattern),
      Key{"use_pos_embed", [](TrainConfig& c, const std::string& v) { c.model.use_pos_embed = to_bool(v); },
          [](const TrainConfig& c) { return std::string(c.model.use_pos_embed ? "true" : "false"); }},
      Key{"kernel_init",
          [](TrainConfig& c, const std::string& v) {
            const auto k = parse_kernel_init(v);
            if (!k) throw std::invalid_argument("expected zeros or trunc_normal, got '" + v + "'");
            c.model.kernel_init = *k;
          },
          [](const TrainConfig& c) { return std::string(kernel_init_name(c.model.kernel_init)); }},
      Key{"lkca_view",
          [](TrainConfig& c, const std::string& v) {
            const auto k = parse_view(v);
            if (!k) throw std::invalid_argument("expected attention, convolution or spectral, got '" + v + "'");
            c.model.lkca_view = *k;
          },
          [](const TrainConfig& c) { return std::string(view_name(c.model.lkca_view)); }},
      LKCA_SIZE_KEY(batch_size, batch_size),
      LKCA_SIZE_KEY(total_steps, total_steps),
      Key{"seed", [](TrainConfig& c, const std::string& v) { c.seed = to_size(v); },
          [](const TrainConfig& c) { return std::to_string(c.seed); }},
      LKCA_DOUBLE_KEY(label_smoothing, label_smoothing),
      LKCA_DOUBLE_KEY(base_lr, base_lr),
      LKCA_DOUBLE_KEY(min_lr, min_lr),
      LKCA_DOUBLE_KEY(weight_decay, weight_decay),
      LKCA_DOUBLE_KEY(warmup_fraction, warmup_fraction),
      LKCA_SIZE_KEY(eval_every, eval_every),
      Key{"data",
          [](TrainConfig& c, const std::string& v) {
            if (v == "stripes") {
              c.data = DataSource::stripes;
            } else if (v == "idx") {
              c.data = DataSource::idx;
            } else {
              throw std::invalid_argument("expected stripes or idx, got '" + v + "'");
            }
          },
          [](const TrainConfig& c) { return std::string(c.data == DataSource::stripes ? "stripes" : "idx"); }},
      LKCA_SIZE_KEY(train_samples, train_samples),
      LKCA_SIZE_KEY(test_samples, test_samples),
      LKCA_STRING_KEY(stripe_offsets, stripe_offsets),
      LKCA_DOUBLE_KEY(stripe_noise, stripe_noise),
      LKCA_STRING_KEY(train_images, train_images),
      LKCA_STRING_KEY(train_labels, train_labels),
      LKCA_STRING_KEY(test_images, test_images),
      LKCA_STRING_KEY(test_labels, test_labels),
  };
  return keys;
}

#undef LKCA_SIZE_KEY
#undef LKCA_DOUBLE_KEY
#undef LKCA_STRING_KEY

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Key& k : key_table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

ParsedConfig parse_config(const std::string& text) {
  ParsedConfig out;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    const std::string s = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    const std::string where = "config line " + std::to_string(line);
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value', got '" + s + "'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) throw UsageError(where + ": unknown key '" + key + "'");
    if (!out.explicit_keys.insert(key).second) throw UsageError(where + ": key '" + key + "' given twice");
    try {
      it->set(out.train, value);
    } catch (const std::invalid_argument& e) {
      throw UsageError(where + ": " + key + ": " + e.what());
    }
  }
  try {
    out.train.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  return out;
}

ParsedConfig read_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const UsageError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string describe_config(const ParsedConfig& cfg) {
  std::string out;
  for (const Key& k : key_table()) {
    out += k.name + " = " + k.get(cfg.train);
    if (!cfg.explicit_keys.count(k.name)) out += "  # default";
    out += "\n";
  }
  return out;
}

}  // namespace lkca::cli
