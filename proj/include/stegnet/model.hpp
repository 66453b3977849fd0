#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/init.hpp"
#include "stegnet/ops.hpp"
#include "stegnet/rng.hpp"
#include "stegnet/tensor.hpp"

namespace stegnet {

// Architecture description for the two-branch encoder and the decoder. The
// reference network is merge_depth 7, 16-filter branches, 1x1 fusion chain
// 16-8-3 and decoder chain 16-16-8-8-3-3 with a final 1x1 conv to one channel.
// Smaller instances share the same code path.
struct NetworkConfig {
  int merge_depth = 7;  // k; guest features are concatenated into the host
                        // branch input at layers 1,3,...,k. Must be odd.
  int branch_filters = 16;
  std::vector<int> fusion_filters = {16, 8, 3};  // 1x1 convs after the merge
  std::vector<int> decoder_filters = {16, 16, 8, 8, 3, 3};
  int kernel_size = 3;
  int host_channels = 3;
  int guest_channels = 1;
  int height = 300;  // dims the model is trained at; inference may resize
  int width = 300;

  void validate() const {
    if (merge_depth < 1 || merge_depth % 2 == 0) {
      throw ConfigError("merge_depth must be odd and >= 1, got " +
                        std::to_string(merge_depth));
    }
    if (branch_filters < 1) throw ConfigError("branch_filters must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0) {
      throw ConfigError("kernel_size must be odd and >= 1");
    }
    if (host_channels != 3 || guest_channels != 1) {
      throw ConfigError("host must be RGB (3 channels) and guest single-channel");
    }
    if (fusion_filters.empty() || fusion_filters.back() != host_channels) {
      throw ConfigError("fusion chain must end in " +
                        std::to_string(host_channels) +
                        " channels (the hybrid is RGB)");
    }
    for (int f : fusion_filters) {
      if (f < 1) throw ConfigError("fusion filter counts must be >= 1");
    }
    for (int f : decoder_filters) {
      if (f < 1) throw ConfigError("decoder filter counts must be >= 1");
    }
    if (height < 1 || width < 1) throw ConfigError("image dims must be >= 1");
  }

  bool is_merge_layer(int layer) const { return layer % 2 == 1; }

  // 1-based layer indices throughout, matching the dataflow description.
  int guest_in_channels(int layer) const {
    return layer == 1 ? guest_channels : branch_filters;
  }
  int host_in_channels(int layer) const {
    const int carry = layer == 1 ? host_channels : branch_filters;
    if (!is_merge_layer(layer)) return carry;
    return carry + (layer == 1 ? guest_channels : branch_filters);
  }
  int fusion_in_channels(int idx) const {
    return idx == 1 ? branch_filters : fusion_filters[idx - 2];
  }
  int decoder_in_channels(int idx) const {
    return idx == 1 ? host_channels : decoder_filters[idx - 2];
  }

  bool operator==(const NetworkConfig&) const = default;
};

inline NetworkConfig paper_config() { return NetworkConfig{}; }

// Shrunken net for quick experiments: same topology, fewer filters.
inline NetworkConfig desk_config(int merge_depth, int filters, int height,
                                 int width) {
  NetworkConfig cfg;
  cfg.merge_depth = merge_depth;
  cfg.branch_filters = filters;
  const int half = std::max(1, filters / 2);
  cfg.fusion_filters = {filters, half, 3};
  cfg.decoder_filters = {filters, filters, half, half, 3, 3};
  cfg.height = height;
  cfg.width = width;
  return cfg;
}

// Ordered kernel collection: encoder holds guest kernels 1..k, then host
// kernels 1..k, then the fusion kernels; decoder holds its conv chain with
// the final 1x1 kernel last.
template <typename T>
struct ModelParams {
  NetworkConfig config;
  std::vector<ConvKernel<T>> encoder;
  std::vector<ConvKernel<T>> decoder;

  ConvKernel<T>& guest_kernel(int layer) { return encoder[layer - 1]; }
  const ConvKernel<T>& guest_kernel(int layer) const { return encoder[layer - 1]; }
  ConvKernel<T>& host_kernel(int layer) {
    return encoder[config.merge_depth + layer - 1];
  }
  const ConvKernel<T>& host_kernel(int layer) const {
    return encoder[config.merge_depth + layer - 1];
  }
  ConvKernel<T>& fusion_kernel(int idx) {
    return encoder[2 * config.merge_depth + idx - 1];
  }
  const ConvKernel<T>& fusion_kernel(int idx) const {
    return encoder[2 * config.merge_depth + idx - 1];
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& k : encoder) total += k.weight_count() + k.bias.size();
    for (const auto& k : decoder) total += k.weight_count() + k.bias.size();
    return total;
  }
};

// Per-kernel gradient buffers, shape-matched to ModelParams.
template <typename T>
struct ModelGrads {
  std::vector<ConvKernel<T>> encoder;
  std::vector<ConvKernel<T>> decoder;
};

template <typename T>
ModelGrads<T> zero_grads(const ModelParams<T>& params) {
  ModelGrads<T> g;
  g.encoder.reserve(params.encoder.size());
  g.decoder.reserve(params.decoder.size());
  for (const auto& k : params.encoder) {
    g.encoder.emplace_back(k.out_channels, k.in_channels, k.kh, k.kw);
  }
  for (const auto& k : params.decoder) {
    g.decoder.emplace_back(k.out_channels, k.in_channels, k.kh, k.kw);
  }
  return g;
}

// Flat view over all weight/bias arrays in canonical order (encoder kernels
// then decoder kernels; weights before bias). Adam state and the checkpoint
// format rely on this ordering.
template <typename T>
struct ParamBlock {
  std::span<T> values;
  bool is_bias;
};

template <typename T>
std::vector<ParamBlock<T>> kernel_blocks(std::vector<ConvKernel<T>>& encoder,
                                         std::vector<ConvKernel<T>>& decoder) {
  std::vector<ParamBlock<T>> blocks;
  blocks.reserve(2 * (encoder.size() + decoder.size()));
  for (auto* list : {&encoder, &decoder}) {
    for (auto& k : *list) {
      blocks.push_back({std::span<T>(k.weights), false});
      blocks.push_back({std::span<T>(k.bias), true});
    }
  }
  return blocks;
}

template <typename T>
std::vector<ParamBlock<const T>> kernel_blocks(
    const std::vector<ConvKernel<T>>& encoder,
    const std::vector<ConvKernel<T>>& decoder) {
  std::vector<ParamBlock<const T>> blocks;
  blocks.reserve(2 * (encoder.size() + decoder.size()));
  for (const auto* list : {&encoder, &decoder}) {
    for (const auto& k : *list) {
      blocks.push_back({std::span<const T>(k.weights), false});
      blocks.push_back({std::span<const T>(k.bias), true});
    }
  }
  return blocks;
}

template <typename T>
std::vector<ParamBlock<T>> param_blocks(ModelParams<T>& p) {
  return kernel_blocks(p.encoder, p.decoder);
}
template <typename T>
std::vector<ParamBlock<const T>> param_blocks(const ModelParams<T>& p) {
  return kernel_blocks(p.encoder, p.decoder);
}
template <typename T>
std::vector<ParamBlock<T>> grad_blocks(ModelGrads<T>& g) {
  return kernel_blocks(g.encoder, g.decoder);
}
template <typename T>
std::vector<ParamBlock<const T>> grad_blocks(const ModelGrads<T>& g) {
  return kernel_blocks(g.encoder, g.decoder);
}

// Xavier-initialized weights, zero biases. Deterministic for a fixed seed.
template <typename T>
ModelParams<T> build_model(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams<T> params;
  params.config = config;

  auto make = [&](int out, int in, int kh, int kw) {
    ConvKernel<T> kernel(out, in, kh, kw);
    kernel.weights = xavier_init<T>(in * kh * kw, out * kh * kw,
                                    kernel.weight_count(), rng);
    return kernel;
  };

  const int k = config.merge_depth;
  const int ks = config.kernel_size;
  for (int i = 1; i <= k; ++i) {
    params.encoder.push_back(
        make(config.branch_filters, config.guest_in_channels(i), ks, ks));
  }
  for (int i = 1; i <= k; ++i) {
    params.encoder.push_back(
        make(config.branch_filters, config.host_in_channels(i), ks, ks));
  }
  for (int j = 1; j <= static_cast<int>(config.fusion_filters.size()); ++j) {
    params.encoder.push_back(
        make(config.fusion_filters[j - 1], config.fusion_in_channels(j), 1, 1));
  }
  for (int j = 1; j <= static_cast<int>(config.decoder_filters.size()); ++j) {
    params.decoder.push_back(
        make(config.decoder_filters[j - 1], config.decoder_in_channels(j), ks, ks));
  }
  const int last = config.decoder_filters.empty() ? config.host_channels
                                                  : config.decoder_filters.back();
  params.decoder.push_back(make(config.guest_channels, last, 1, 1));
  return params;
}

// One conv layer's forward record: the tensor fed to the conv and the
// pre-activation output (needed to mask the ReLU gradient).
template <typename T>
struct LayerTrace {
  Tensor<T> input;
  Tensor<T> pre;
};

template <typename T>
struct EncoderCache {
  std::vector<LayerTrace<T>> guest;
  std::vector<LayerTrace<T>> host;
  std::vector<LayerTrace<T>> fusion;
};

template <typename T>
struct DecoderCache {
  std::vector<LayerTrace<T>> layers;  // last one has no ReLU
};

template <typename T>
struct EncoderResult {
  Tensor<T> hybrid;
  EncoderCache<T> cache;
};

template <typename T>
struct DecoderResult {
  Tensor<T> recovered;
  DecoderCache<T> cache;
};

// Guest branch: g0 = guest, gi = ReLU(conv(g_{i-1})), i = 1..k.
// Host branch: hi = ReLU(conv(x_{i-1})) where x_{i-1} = concat(h_{i-1}, g_{i-1})
// at merge layers (odd i) and h_{i-1} otherwise, so layer 1 sees the raw guest
// image and layers 3,5,... see g2, g4, ...  After layer k the guest branch is
// fully absorbed; the 1x1 fusion chain then produces the RGB hybrid, ReLU on
// every fusion layer except the last.
template <typename T>
EncoderResult<T> encoder_forward(const ModelParams<T>& params,
                                 const Tensor<T>& host,
                                 const Tensor<T>& guest) {
  const NetworkConfig& cfg = params.config;
  if (host.channels() != cfg.host_channels) {
    throw std::invalid_argument("encoder: host must have " +
                                std::to_string(cfg.host_channels) +
                                " channels, got " + shape_string(host));
  }
  if (guest.channels() != cfg.guest_channels) {
    throw std::invalid_argument("encoder: guest must have " +
                                std::to_string(cfg.guest_channels) +
                                " channels, got " + shape_string(guest));
  }
  if (host.batch() != guest.batch() || host.height() != guest.height() ||
      host.width() != guest.width()) {
    throw std::invalid_argument("encoder: host " + shape_string(host) +
                                " and guest " + shape_string(guest) +
                                " disagree on batch or spatial dims");
  }

  EncoderResult<T> res;
  EncoderCache<T>& cache = res.cache;
  const int k = cfg.merge_depth;

  std::vector<Tensor<T>> g;
  g.reserve(k + 1);
  g.push_back(guest);
  for (int i = 1; i <= k; ++i) {
    Tensor<T> pre = conv2d_forward(g[i - 1], params.guest_kernel(i));
    g.push_back(relu_forward(pre));
    cache.guest.push_back({g[i - 1], std::move(pre)});
  }

  Tensor<T> h = host;
  for (int i = 1; i <= k; ++i) {
    Tensor<T> x = cfg.is_merge_layer(i) ? concat_channels(h, g[i - 1]) : h;
    Tensor<T> pre = conv2d_forward(x, params.host_kernel(i));
    h = relu_forward(pre);
    cache.host.push_back({std::move(x), std::move(pre)});
  }

  const int nf = static_cast<int>(cfg.fusion_filters.size());
  Tensor<T> f = std::move(h);
  for (int j = 1; j <= nf; ++j) {
    Tensor<T> pre = conv2d_forward(f, params.fusion_kernel(j));
    Tensor<T> out = j < nf ? relu_forward(pre) : pre;
    cache.fusion.push_back({std::move(f), std::move(pre)});
    f = std::move(out);
  }
  res.hybrid = std::move(f);
  return res;
}

// Conv+ReLU chain over the hybrid, final 1x1 conv to one channel without ReLU.
template <typename T>
DecoderResult<T> decoder_forward(const ModelParams<T>& params,
                                 const Tensor<T>& hybrid) {
  const NetworkConfig& cfg = params.config;
  if (hybrid.channels() != cfg.host_channels) {
    throw std::invalid_argument("decoder: hybrid must have " +
                                std::to_string(cfg.host_channels) +
                                " channels, got " + shape_string(hybrid));
  }
  DecoderResult<T> res;
  const int nd = static_cast<int>(cfg.decoder_filters.size());
  Tensor<T> d = hybrid;
  for (int j = 1; j <= nd + 1; ++j) {
    Tensor<T> pre = conv2d_forward(d, params.decoder[j - 1]);
    Tensor<T> out = j <= nd ? relu_forward(pre) : pre;
    res.cache.layers.push_back({std::move(d), std::move(pre)});
    d = std::move(out);
  }
  res.recovered = std::move(d);
  return res;
}

namespace detail {

template <typename T>
void add_into(std::vector<T>& dst, const std::vector<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void add_tensor(Tensor<T>& dst, const Tensor<T>& src) {
  add_into(dst.data(), src.data());
}

}  // namespace detail

// Joint backward pass: pushes grad_recovered through the decoder, adds the
// resulting hybrid gradient to grad_hybrid, and continues through the fusion
// chain and both encoder branches. Concat nodes split their gradient between
// the host carry and the guest activation that was merged in.
template <typename T>
ModelGrads<T> model_backward(const ModelParams<T>& params,
                             const EncoderCache<T>& enc_cache,
                             const DecoderCache<T>& dec_cache,
                             const Tensor<T>& grad_hybrid,
                             const Tensor<T>& grad_recovered) {
  const NetworkConfig& cfg = params.config;
  const int k = cfg.merge_depth;
  const int nf = static_cast<int>(cfg.fusion_filters.size());
  const int ndec = static_cast<int>(params.decoder.size());

  if (static_cast<int>(enc_cache.guest.size()) != k ||
      static_cast<int>(enc_cache.host.size()) != k ||
      static_cast<int>(enc_cache.fusion.size()) != nf) {
    throw std::invalid_argument("model_backward: encoder cache does not match config");
  }
  if (static_cast<int>(dec_cache.layers.size()) != ndec) {
    throw std::invalid_argument("model_backward: decoder cache does not match config");
  }
  if (grad_recovered.channels() != cfg.guest_channels ||
      !grad_recovered.same_shape(dec_cache.layers.back().pre)) {
    throw std::invalid_argument("model_backward: grad_recovered shape mismatch");
  }
  if (grad_hybrid.channels() != cfg.host_channels ||
      !grad_hybrid.same_shape(enc_cache.fusion.back().pre)) {
    throw std::invalid_argument("model_backward: grad_hybrid shape mismatch");
  }

  ModelGrads<T> grads = zero_grads(params);

  Tensor<T> grad = grad_recovered;
  for (int j = ndec; j >= 1; --j) {
    if (j < ndec) grad = relu_backward(grad, dec_cache.layers[j - 1].pre);
    ConvGrads<T> cg =
        conv2d_backward(grad, dec_cache.layers[j - 1].input, params.decoder[j - 1]);
    detail::add_into(grads.decoder[j - 1].weights, cg.weights);
    detail::add_into(grads.decoder[j - 1].bias, cg.bias);
    grad = std::move(cg.input);
  }

  // Decoder loss flows back through the hybrid into the encoder.
  detail::add_tensor(grad, grad_hybrid);

  for (int j = nf; j >= 1; --j) {
    if (j < nf) grad = relu_backward(grad, enc_cache.fusion[j - 1].pre);
    ConvGrads<T> cg = conv2d_backward(grad, enc_cache.fusion[j - 1].input,
                                      params.fusion_kernel(j));
    detail::add_into(grads.encoder[2 * k + j - 1].weights, cg.weights);
    detail::add_into(grads.encoder[2 * k + j - 1].bias, cg.bias);
    grad = std::move(cg.input);
  }

  // Gradient accumulators for the guest activations g0..gk. gk has no
  // consumer, so its slot stays zero and guest layer k receives a zero
  // upstream gradient.
  std::vector<Tensor<T>> grad_g;
  grad_g.reserve(k + 1);
  const int N = grad.batch(), H = grad.height(), W = grad.width();
  grad_g.emplace_back(N, cfg.guest_channels, H, W);
  for (int i = 1; i <= k; ++i) grad_g.emplace_back(N, cfg.branch_filters, H, W);

  for (int i = k; i >= 1; --i) {
    grad = relu_backward(grad, enc_cache.host[i - 1].pre);
    ConvGrads<T> cg =
        conv2d_backward(grad, enc_cache.host[i - 1].input, params.host_kernel(i));
    detail::add_into(grads.encoder[k + i - 1].weights, cg.weights);
    detail::add_into(grads.encoder[k + i - 1].bias, cg.bias);
    if (cfg.is_merge_layer(i)) {
      const int carry = i == 1 ? cfg.host_channels : cfg.branch_filters;
      auto [gh, gg] = split_channels(cg.input, carry);
      detail::add_tensor(grad_g[i - 1], gg);
      grad = std::move(gh);
    } else {
      grad = std::move(cg.input);
    }
  }

  for (int i = k; i >= 1; --i) {
    Tensor<T> gz = relu_backward(grad_g[i], enc_cache.guest[i - 1].pre);
    ConvGrads<T> cg =
        conv2d_backward(gz, enc_cache.guest[i - 1].input, params.guest_kernel(i));
    detail::add_into(grads.encoder[i - 1].weights, cg.weights);
    detail::add_into(grads.encoder[i - 1].bias, cg.bias);
    detail::add_tensor(grad_g[i - 1], cg.input);
  }

  return grads;
}

}  // namespace stegnet
