// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lkca/autodiff.hpp"
#include "lkca/layer.hpp"
#include "lkca/rng.hpp"
#include "lkca/tensor.hpp"

namespace lkca {

struct ModelConfig {
  std::size_t image_h = 8;
  std::size_t image_w = 8;
  std::size_t channels = 1;
  std::size_t patch_size = 1;
  std::size_t dim = 32;
  std::size_t depth = 2;
  double mlp_ratio = 2.0;
  std::size_t num_heads = 4;
  std::size_t num_classes = 2;
  std::string block_pattern;  // empty means all "L"
  bool use_pos_embed = true;
  KernelInit kernel_init = KernelInit::zeros;
  View lkca_view = View::attention;

  /// Throws DimensionError or std::invalid_argument on an inconsistent config.
  void validate() const;

  std::size_t grid_h() const { return image_h / patch_size; }
  std::size_t grid_w() const { return image_w / patch_size; }
  std::size_t tokens() const { return grid_h() * grid_w(); }
  std::size_t patch_dim() const { return patch_size * patch_size * channels; }
  /// mlp_ratio * dim; validate() requires this to be a whole number.
  std::size_t hidden_dim() const;
  /// block_pattern with the empty default expanded to depth * "L".
  std::string pattern() const;
};

template <Real T>
struct LayerNormParams {
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// y = x W + b with W stored [in, out].
template <Real T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;
};

template <Real T>
struct PatchEmbedder {
  Tensor<T> E;                   // [P^2 C, D]
  std::optional<Tensor<T>> pos;  // [N, D]
};

template <Real T>
struct MHSALayer {
  Linear<T> q, k, v, o;
  std::size_t num_heads = 1;

  std::size_t dim() const { return q.weight.dim(0); }
};

template <Real T>
struct MLPLayer {
  Linear<T> fc1;  // [D, rD]
  Linear<T> fc2;  // [rD, D]
};

template <Real T>
struct EncoderBlock {
  std::variant<LKCALayer<T>, MHSALayer<T>> mixer;
  LayerNormParams<T> ln1;
  LayerNormParams<T> ln2;
  MLPLayer<T> mlp;

  bool is_lkca() const { return std::holds_alternative<LKCALayer<T>>(mixer); }
};

template <Real T>
struct VisionModel {
  ModelConfig config;
  PatchEmbedder<T> embedder;
  std::vector<EncoderBlock<T>> blocks;
  LayerNormParams<T> final_ln;
  Linear<T> head;  // [D, classes]
};

/// Calls fn(name, tensor) for every learnable tensor in a fixed order. This
/// order defines the parameter registry and the checkpoint layout.
template <typename Model, typename Fn>
void for_each_param(Model& m, Fn&& fn) {
  fn(std::string("embed.E"), m.embedder.E);
  if (m.embedder.pos) fn(std::string("embed.pos"), *m.embedder.pos);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& b = m.blocks[i];
    const std::string p = "blocks." + std::to_string(i) + ".";
    fn(p + "ln1.gamma", b.ln1.gamma);
    fn(p + "ln1.beta", b.ln1.beta);
    if (auto* l = std::get_if<0>(&b.mixer)) {
      fn(p + "mixer.kernel", l->kernel.weights());
      fn(p + "mixer.value.weight", l->value.weight());
      fn(p + "mixer.value.bias", l->value.bias());
    } else {
      auto& a = std::get<1>(b.mixer);
      fn(p + "mixer.q.weight", a.q.weight);
      fn(p + "mixer.q.bias", a.q.bias);
      fn(p + "mixer.k.weight", a.k.weight);
      fn(p + "mixer.k.bias", a.k.bias);
      fn(p + "mixer.v.weight", a.v.weight);
      fn(p + "mixer.v.bias", a.v.bias);
      fn(p + "mixer.o.weight", a.o.weight);
      fn(p + "mixer.o.bias", a.o.bias);
    }
    fn(p + "ln2.gamma", b.ln2.gamma);
    fn(p + "ln2.beta", b.ln2.beta);
    fn(p + "mlp.fc1.weight", b.mlp.fc1.weight);
    fn(p + "mlp.fc1.bias", b.mlp.fc1.bias);
    fn(p + "mlp.fc2.weight", b.mlp.fc2.weight);
    fn(p + "mlp.fc2.bias", b.mlp.fc2.bias);
  }
  fn(std::string("final_ln.gamma"), m.final_ln.gamma);
  fn(std::string("final_ln.beta"), m.final_ln.beta);
  fn(std::string("head.weight"), m.head.weight);
  fn(std::string("head.bias"), m.head.bias);
}

/// Mutable registry view of a model, in for_each_param order.
template <Real T>
std::vector<ad::ParamRef<T>> parameters(VisionModel<T>& model);

/// Trunc-normal(0, 0.02) linear maps and embeddings, zero biases, LN gamma=1
/// beta=0, LKCA kernels per config.kernel_init.
template <Real T>
VisionModel<T> make_model(const ModelConfig& config, SeededRng& rng);

/// Same structure as make_model with every tensor zero.
template <Real T>
VisionModel<T> zero_model(const ModelConfig& config);

template <Real U, Real T>
VisionModel<U> cast_model(const VisionModel<T>& model);

/// Sets the evaluation view of every LKCA mixer.
template <Real T>
void set_lkca_view(VisionModel<T>& model, View view);

/// [b, H, W, C] -> [b, N, P^2 C]; patches row-major over the patch grid,
/// pixels row-major then channel-minor inside a patch.
template <Real T>
Tensor<T> patchify(const Tensor<T>& images, std::size_t patch);

template <Real T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t image_h, std::size_t image_w,
                     std::size_t channels, std::size_t patch);

// Tape recording. Each function registers its parameters under `prefix`.
template <Real T>
ad::Var record_mhsa(ad::Tape<T>& tape, ad::Var x, const MHSALayer<T>& layer,
                    const std::string& prefix);
template <Real T>
ad::Var record_block(ad::Tape<T>& tape, ad::Var z, const EncoderBlock<T>& block,
                     const std::string& prefix);
/// Logits [b, classes] for images [b, H, W, C]; every parameter is registered
/// under its registry name.
template <Real T>
ad::Var record_model(ad::Tape<T>& tape, const VisionModel<T>& model, const Tensor<T>& images);

// Eager wrappers.
template <Real T>
Tensor<T> embed(const Tensor<T>& patches, const PatchEmbedder<T>& embedder);
template <Real T>
Tensor<T> mhsa_forward(const Tensor<T>& x, const MHSALayer<T>& layer);
template <Real T>
Tensor<T> block_forward(const Tensor<T>& z, const EncoderBlock<T>& block);
template <Real T>
Tensor<T> model_forward(const Tensor<T>& images, const VisionModel<T>& model);

/// Closed-form parameter count from the config alone.
std::uint64_t count_model_params(const ModelConfig& config);
/// Element count summed over the registry.
template <Real T>
std::uint64_t count_registry_params(const VisionModel<T>& model);

struct ParamGroupCount {
  std::string name;
  Shape shape;
  std::uint64_t elements;
};
template <Real T>
std::vector<ParamGroupCount> param_breakdown(const VisionModel<T>& model);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  std::string name;
  TensorF value;
};

/// "LKCA1" then per tensor: u32 name length, name, u32 rank, u32 extents,
/// f32 data; all little-endian.
template <Real T>
void save_checkpoint(const std::filesystem::path& path, const VisionModel<T>& model);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);
/// Loads into a model built from the matching config. Every registry tensor
/// must be present with the same shape and no extras may appear.
template <Real T>
void load_checkpoint(const std::filesystem::path& path, VisionModel<T>& model);

}  // namespace lkca
