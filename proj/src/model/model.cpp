// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include "lkca/model.hpp"

#include <cmath>

#include "lkca/ops.hpp"

namespace lkca {

std::size_t ModelConfig::hidden_dim() const {
  const double r = mlp_ratio * static_cast<double>(dim);
  return static_cast<std::size_t>(std::llround(r));
}

std::string ModelConfig::pattern() const {
  return block_pattern.empty() ? std::string(depth, 'L') : block_pattern;
}

void ModelConfig::validate() const {
  if (image_h == 0 || image_w == 0 || channels == 0 || patch_size == 0 || dim == 0 ||
      num_classes == 0) {
    throw std::invalid_argument(
        "image_h, image_w, channels, patch_size, dim and num_classes must be positive");
  }
  if (image_h % patch_size != 0 || image_w % patch_size != 0) {
    throw DimensionError("image " + std::to_string(image_h) + "x" + std::to_string(image_w) +
                         " is not divisible by patch_size " + std::to_string(patch_size));
  }
  const std::string p = pattern();
  if (p.size() != depth) {
    throw std::invalid_argument("block_pattern '" + block_pattern + "' has length " +
                                std::to_string(p.size()) + " but depth is " +
                                std::to_string(depth));
  }
  if (p.find_first_not_of("LA") != std::string::npos) {
    throw std::invalid_argument("block_pattern '" + block_pattern + "' may only contain L and A");
  }
  if (p.find('A') != std::string::npos && (num_heads == 0 || dim % num_heads != 0)) {
    throw DimensionError("dim " + std::to_string(dim) + " is not divisible by num_heads " +
                         std::to_string(num_heads));
  }
  const double r = mlp_ratio * static_cast<double>(dim);
  if (!(mlp_ratio > 0.0) || std::abs(r - std::round(r)) > 1e-9 || std::round(r) < 1.0) {
    throw std::invalid_argument("mlp_ratio * dim must be a positive whole number");
  }
}

template <Real T>
std::vector<ad::ParamRef<T>> parameters(VisionModel<T>& model) {
  std::vector<ad::ParamRef<T>> out;
  for_each_param(model, [&](const std::string& name, Tensor<T>& t) { out.push_back({name, &t}); });
  return out;
}

template <Real T>
VisionModel<T> zero_model(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.dim, h = config.hidden_dim();
  const auto linear = [](std::size_t in, std::size_t out) {
    return Linear<T>{Tensor<T>({in, out}), Tensor<T>({out})};
  };
  const auto ln = [d] { return LayerNormParams<T>{Tensor<T>({d}), Tensor<T>({d})}; };

  VisionModel<T> m;
  m.config = config;
  m.embedder.E = Tensor<T>({config.patch_dim(), d});
  if (config.use_pos_embed) m.embedder.pos = Tensor<T>({config.tokens(), d});
  for (char kind : config.pattern()) {
    EncoderBlock<T> b{LKCALayer<T>{LKCAKernel<T>(config.grid_h(), config.grid_w()),
                                   ValueProjection<T>(d), config.lkca_view},
                      ln(), ln(), MLPLayer<T>{linear(d, h), linear(h, d)}};
    if (kind == 'A') {
      b.mixer = MHSALayer<T>{linear(d, d), linear(d, d), linear(d, d), linear(d, d),
                             config.num_heads};
    }
    m.blocks.push_back(std::move(b));
  }
  m.final_ln = ln();
  m.head = linear(d, config.num_classes);
  return m;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

template <Real T>
VisionModel<T> make_model(const ModelConfig& config, SeededRng& rng) {
  VisionModel<T> m = zero_model<T>(config);
  for_each_param(m, [&](const std::string& name, Tensor<T>& t) {
    if (ends_with(name, ".gamma")) {
      t = Tensor<T>::full(t.shape(), T(1));
    } else if (ends_with(name, ".bias") || ends_with(name, ".beta")) {
      // zero
    } else if (ends_with(name, "mixer.kernel") && config.kernel_init == KernelInit::zeros) {
      // zero
    } else {
      t = rand_trunc_normal<T>(rng, t.shape(), T(0), T(0.02));
    }
  });
  return m;
}

template <Real U, Real T>
VisionModel<U> cast_model(const VisionModel<T>& model) {
  VisionModel<U> out = zero_model<U>(model.config);
  std::vector<const Tensor<T>*> src;
  for_each_param(model, [&](const std::string&, const Tensor<T>& t) { src.push_back(&t); });
  std::size_t i = 0;
  for_each_param(out, [&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    if (const auto* l = std::get_if<0>(&model.blocks[b].mixer)) {
      std::get<0>(out.blocks[b].mixer).view = l->view;
    }
  }
  return out;
}

template <Real T>
void set_lkca_view(VisionModel<T>& model, View view) {
  model.config.lkca_view = view;
  for (EncoderBlock<T>& b : model.blocks) {
    if (auto* l = std::get_if<0>(&b.mixer)) l->view = view;
  }
}

template <Real T>
Tensor<T> patchify(const Tensor<T>& images, std::size_t patch) {
  if (images.rank() != 4 || patch == 0 || images.dim(1) % patch != 0 ||
      images.dim(2) % patch != 0) {
    throw DimensionError("patchify: images " + shape_str(images.shape()) +
                         " cannot be cut into " + std::to_string(patch) + "x" +
                         std::to_string(patch) + " patches");
  }
  const std::size_t b = images.dim(0), h = images.dim(1), w = images.dim(2), c = images.dim(3);
  const std::size_t gh = h / patch, gw = w / patch, len = patch * patch * c;
  Tensor<T> out({b, gh * gw, len});
  T* o = out.ptr();
  const T* in = images.ptr();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t gi = 0; gi < gh; ++gi)
      for (std::size_t gj = 0; gj < gw; ++gj)
        for (std::size_t pi = 0; pi < patch; ++pi)
          for (std::size_t pj = 0; pj < patch; ++pj)
            for (std::size_t ch = 0; ch < c; ++ch)
              *o++ = in[((bi * h + gi * patch + pi) * w + gj * patch + pj) * c + ch];
  return out;
}

template <Real T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t image_h, std::size_t image_w,
                     std::size_t channels, std::size_t patch) {
  if (patch == 0 || image_h % patch != 0 || image_w % patch != 0 || patches.rank() != 3 ||
      patches.dim(1) != (image_h / patch) * (image_w / patch) ||
      patches.dim(2) != patch * patch * channels) {
    throw DimensionError("unpatchify: patches " + shape_str(patches.shape()) +
                         " do not tile a " + std::to_string(image_h) + "x" +
                         std::to_string(image_w) + "x" + std::to_string(channels) + " image");
  }
  const std::size_t b = patches.dim(0), gh = image_h / patch, gw = image_w / patch;
  Tensor<T> out({b, image_h, image_w, channels});
  const T* p = patches.ptr();
  T* o = out.ptr();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t gi = 0; gi < gh; ++gi)
      for (std::size_t gj = 0; gj < gw; ++gj)
        for (std::size_t pi = 0; pi < patch; ++pi)
          for (std::size_t pj = 0; pj < patch; ++pj)
            for (std::size_t ch = 0; ch < channels; ++ch)
              o[((bi * image_h + gi * patch + pi) * image_w + gj * patch + pj) * channels + ch] =
                  *p++;
  return out;
}

namespace {

template <Real T>
ad::Var record_linear(ad::Tape<T>& tape, ad::Var x, const Linear<T>& lin,
                      const std::string& prefix) {
  return tape.add(tape.matmul(x, tape.parameter(prefix + "weight", lin.weight)),
                  tape.parameter(prefix + "bias", lin.bias));
}

template <Real T>
ad::Var record_ln(ad::Tape<T>& tape, ad::Var x, const LayerNormParams<T>& ln,
                  const std::string& prefix) {
  return tape.layer_norm(x, tape.parameter(prefix + "gamma", ln.gamma),
                         tape.parameter(prefix + "beta", ln.beta));
}

template <Real T>
ad::Var record_embed(ad::Tape<T>& tape, ad::Var patches, const PatchEmbedder<T>& embedder) {
  const Tensor<T>& p = tape.value(patches);
  if (p.rank() != 3 || p.dim(2) != embedder.E.dim(0) ||
      (embedder.pos && embedder.pos->dim(0) != p.dim(1))) {
    throw DimensionError("embed: patches " + shape_str(p.shape()) + " do not match E " +
                         shape_str(embedder.E.shape()) +
                         (embedder.pos ? " and E_pos " + shape_str(embedder.pos->shape()) : ""));
  }
  ad::Var z = tape.matmul(patches, tape.parameter("embed.E", embedder.E));
  if (embedder.pos) z = tape.add(z, tape.parameter("embed.pos", *embedder.pos));
  return z;
}

}  // namespace

template <Real T>
ad::Var record_mhsa(ad::Tape<T>& tape, ad::Var x, const MHSALayer<T>& layer,
                    const std::string& prefix) {
  const Shape xs = tape.value(x).shape();
  const std::size_t d = layer.dim(), heads = layer.num_heads;
  if (xs.size() != 3 || xs[2] != d) {
    throw DimensionError("mhsa: input " + shape_str(xs) + " does not match dim " +
                         std::to_string(d));
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("mhsa: dim " + std::to_string(d) + " is not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t b = xs[0];
  const ad::Var q = tape.split_heads(record_linear(tape, x, layer.q, prefix + "q."), heads);
  const ad::Var k = tape.split_heads(record_linear(tape, x, layer.k, prefix + "k."), heads);
  const ad::Var v = tape.split_heads(record_linear(tape, x, layer.v, prefix + "v."), heads);
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d / heads));
  const ad::Var attn = tape.softmax_rows(tape.scale(tape.batched_matmul(q, k, true), inv_sqrt));
  const ad::Var ctx = tape.merge_heads(tape.batched_matmul(attn, v, false), b);
  return record_linear(tape, ctx, layer.o, prefix + "o.");
}

template <Real T>
ad::Var record_block(ad::Tape<T>& tape, ad::Var z, const EncoderBlock<T>& block,
                     const std::string& prefix) {
  // Copy: recording invalidates references into the tape.
  const Shape zs = tape.value(z).shape();
  if (zs.size() != 3) throw DimensionError("block: input must be [b, N, D], got " + shape_str(zs));
  const ad::Var h = record_ln(tape, z, block.ln1, prefix + "ln1.");
  ad::Var mixed;
  if (const auto* l = std::get_if<0>(&block.mixer)) {
    if (zs[1] != l->tokens() || zs[2] != l->dim()) {
      throw DimensionError("block: input " + shape_str(zs) + " does not match LKCA grid " +
                           std::to_string(l->kernel.grid_h()) + "x" +
                           std::to_string(l->kernel.grid_w()) + " with dim " +
                           std::to_string(l->dim()));
    }
    mixed = ad::record_lkca(tape, h, tape.parameter(prefix + "mixer.kernel", l->kernel.weights()),
                            tape.parameter(prefix + "mixer.value.weight", l->value.weight()),
                            tape.parameter(prefix + "mixer.value.bias", l->value.bias()),
                            l->kernel.grid_h(), l->kernel.grid_w(), l->view);
  } else {
    mixed = record_mhsa(tape, h, std::get<1>(block.mixer), prefix + "mixer.");
  }
  const ad::Var z1 = tape.add(mixed, z);
  const ad::Var h2 = record_ln(tape, z1, block.ln2, prefix + "ln2.");
  const ad::Var f = record_linear(
      tape, tape.gelu(record_linear(tape, h2, block.mlp.fc1, prefix + "mlp.fc1.")),
      block.mlp.fc2, prefix + "mlp.fc2.");
  return tape.add(f, z1);
}

template <Real T>
ad::Var record_model(ad::Tape<T>& tape, const VisionModel<T>& model, const Tensor<T>& images) {
  const ModelConfig& c = model.config;
  if (images.rank() != 4 || images.dim(1) != c.image_h || images.dim(2) != c.image_w ||
      images.dim(3) != c.channels) {
    throw DimensionError("model: images " + shape_str(images.shape()) + " do not match [b, " +
                         std::to_string(c.image_h) + ", " + std::to_string(c.image_w) + ", " +
                         std::to_string(c.channels) + "]");
  }
  ad::Var z = record_embed(tape, tape.constant(patchify(images, c.patch_size)), model.embedder);
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    z = record_block(tape, z, model.blocks[i], "blocks." + std::to_string(i) + ".");
  }
  const ad::Var pooled = record_ln(tape, tape.mean_tokens(z), model.final_ln, "final_ln.");
  return record_linear(tape, pooled, model.head, "head.");
}

template <Real T>
Tensor<T> embed(const Tensor<T>& patches, const PatchEmbedder<T>& embedder) {
  ad::Tape<T> tape;
  return tape.value(record_embed(tape, tape.constant(patches), embedder));
}

template <Real T>
Tensor<T> mhsa_forward(const Tensor<T>& x, const MHSALayer<T>& layer) {
  ad::Tape<T> tape;
  return tape.value(record_mhsa(tape, tape.constant(x), layer, ""));
}

template <Real T>
Tensor<T> block_forward(const Tensor<T>& z, const EncoderBlock<T>& block) {
  ad::Tape<T> tape;
  return tape.value(record_block(tape, tape.constant(z), block, ""));
}

template <Real T>
Tensor<T> model_forward(const Tensor<T>& images, const VisionModel<T>& model) {
  ad::Tape<T> tape;
  return tape.value(record_model(tape, model, images));
}

std::uint64_t count_model_params(const ModelConfig& c) {
  c.validate();
  const std::uint64_t d = c.dim, h = c.hidden_dim(), k = c.num_classes;
  std::uint64_t total = c.patch_dim() * d;
  if (c.use_pos_embed) total += c.tokens() * d;
  for (char kind : c.pattern()) {
    total += kind == 'L' ? lkca_param_count(c.grid_h(), c.grid_w(), c.dim) : 4 * d * d + 4 * d;
    total += d * h + h + h * d + d;
    total += 4 * d;
  }
  total += 2 * d + d * k + k;
  return total;
}

template <Real T>
std::uint64_t count_registry_params(const VisionModel<T>& model) {
  std::uint64_t total = 0;
  for_each_param(model, [&](const std::string&, const Tensor<T>& t) { total += t.numel(); });
  return total;
}

template <Real T>
std::vector<ParamGroupCount> param_breakdown(const VisionModel<T>& model) {
  std::vector<ParamGroupCount> out;
  for_each_param(model, [&](const std::string& name, const Tensor<T>& t) {
    out.push_back({name, t.shape(), t.numel()});
  });
  return out;
}

#define LKCA_INSTANTIATE_MODEL(T)                                                              \
  template std::vector<ad::ParamRef<T>> parameters(VisionModel<T>&);                           \
  template VisionModel<T> make_model(const ModelConfig&, SeededRng&);                          \
  template VisionModel<T> zero_model(const ModelConfig&);                                      \
  template void set_lkca_view(VisionModel<T>&, View);                                          \
  template Tensor<T> patchify(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> unpatchify(const Tensor<T>&, std::size_t, std::size_t, std::size_t,       \
                                std::size_t);                                                  \
  template ad::Var record_mhsa(ad::Tape<T>&, ad::Var, const MHSALayer<T>&, const std::string&); \
  template ad::Var record_block(ad::Tape<T>&, ad::Var, const EncoderBlock<T>&,                 \
                                const std::string&);                                           \
  template ad::Var record_model(ad::Tape<T>&, const VisionModel<T>&, const Tensor<T>&);        \
  template Tensor<T> embed(const Tensor<T>&, const PatchEmbedder<T>&);                         \
  template Tensor<T> mhsa_forward(const Tensor<T>&, const MHSALayer<T>&);                      \
  template Tensor<T> block_forward(const Tensor<T>&, const EncoderBlock<T>&);                  \
  template Tensor<T> model_forward(const Tensor<T>&, const VisionModel<T>&);                   \
  template std::uint64_t count_registry_params(const VisionModel<T>&);                         \
  template std::vector<ParamGroupCount> param_breakdown(const VisionModel<T>&);

LKCA_INSTANTIATE_MODEL(float)
LKCA_INSTANTIATE_MODEL(double)

#undef LKCA_INSTANTIATE_MODEL

template VisionModel<double> cast_model<double, float>(const VisionModel<float>&);
template VisionModel<float> cast_model<float, double>(const VisionModel<double>&);
template VisionModel<float> cast_model<float, float>(const VisionModel<float>&);
template VisionModel<double> cast_model<double, double>(const VisionModel<double>&);

}  // namespace lkca
