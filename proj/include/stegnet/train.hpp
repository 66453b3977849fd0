#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/checkpoint.hpp"
#include "stegnet/dataset.hpp"
#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"
#include "stegnet/loss.hpp"
#include "stegnet/model.hpp"
#include "stegnet/optimizer.hpp"
#include "stegnet/rng.hpp"

namespace stegnet {

struct TrainOptions {
  int epochs = 1;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lr = 1e-4;
  LossWeights loss;
  std::function<void(const TrainLogRow&)> on_epoch;  // optional progress hook
};

// Thrown when the loss or a gradient goes non-finite; carries the last
// consistent state so the caller can write a diagnostic checkpoint.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& msg, Checkpoint snapshot)
      : NumericError(msg), snapshot(std::move(snapshot)) {}
  Checkpoint snapshot;
};

namespace detail {

inline double psnr_from_normalized_mse(double mse) {
  // MSE in [-0.5,0.5] units scales by 255^2 in 8-bit space, so the peaks cancel.
  if (mse <= 0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace detail

// Joint end-to-end training: per batch, draw disjoint cover/payload samples,
// run encoder and decoder, backpropagate the joint loss through both networks
// and take one Adam step. Payloads are the luma-grayscaled versions of their
// source images. Deterministic for a fixed seed.
inline Checkpoint train(const NetworkConfig& config,
                        const std::vector<ImageSample>& data,
                        const TrainOptions& opt) {
  config.validate();
  opt.loss.validate();
  if (opt.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (opt.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (data.empty()) throw DataError("train: dataset is empty");
  for (const auto& s : data) {
    if (s.channels != 3) {
      throw DataError("train: cover dataset must be RGB, sample '" + s.id +
                      "' has " + std::to_string(s.channels) + " channel(s)");
    }
    if (s.height != config.height || s.width != config.width) {
      throw DataError("train: sample '" + s.id + "' is " +
                      std::to_string(s.height) + "x" + std::to_string(s.width) +
                      ", config expects " + std::to_string(config.height) + "x" +
                      std::to_string(config.width));
    }
  }
  const std::size_t n = data.size();
  if (opt.epochs > 0 && n < 2 * static_cast<std::size_t>(opt.batch_size)) {
    throw DataError("train: need at least " +
                    std::to_string(2 * opt.batch_size) + " images for batch size " +
                    std::to_string(opt.batch_size) + ", have " + std::to_string(n));
  }

  std::vector<Tensor<float>> hosts, guests;
  hosts.reserve(n);
  guests.reserve(n);
  for (const auto& s : data) {
    hosts.push_back(normalize<float>(s));
    guests.push_back(normalize<float>(to_grayscale(s)));
  }

  ModelParams<float> params = build_model<float>(config, opt.seed);
  AdamState<float> adam = AdamState<float>::like(params, opt.lr);
  std::vector<TrainLogRow> log;
  Rng rng(opt.seed + 0x9e3779b97f4a7c15ULL);  // decouple sampling from init

  const auto snapshot = [&](std::int64_t epoch) {
    Checkpoint c;
    c.params = params;
    c.adam = adam;
    c.epoch = epoch;
    c.log = log;
    return c;
  };

  const int batches =
      std::max<int>(1, static_cast<int>(n / (2 * static_cast<std::size_t>(opt.batch_size))));

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    double loss_sum = 0, enc_psnr_sum = 0, dec_psnr_sum = 0;
    for (int b = 0; b < batches; ++b) {
      const auto pairs = sample_pair_indices(n, opt.batch_size, rng);
      std::vector<Tensor<float>> hb, gb;
      hb.reserve(pairs.size());
      gb.reserve(pairs.size());
      for (const auto& [ci, pi] : pairs) {
        hb.push_back(hosts[ci]);
        gb.push_back(guests[pi]);
      }
      const Tensor<float> host = stack_batch(hb);
      const Tensor<float> guest = stack_batch(gb);

      EncoderResult<float> enc = encoder_forward(params, host, guest);
      DecoderResult<float> dec = decoder_forward(params, enc.hybrid);
      const LossBreakdown lb =
          joint_loss(host, guest, enc.hybrid, dec.recovered, params, opt.loss);
      if (!std::isfinite(lb.total())) {
        std::cerr << "train: non-finite loss at epoch " << epoch << " batch "
                  << b << ", halting\n";
        throw TrainingDiverged("train: loss diverged at epoch " +
                                   std::to_string(epoch),
                               snapshot(epoch - 1));
      }

      auto [grad_hybrid, grad_recovered] =
          reconstruction_grads(host, guest, enc.hybrid, dec.recovered, opt.loss);
      ModelGrads<float> grads = model_backward(params, enc.cache, dec.cache,
                                               grad_hybrid, grad_recovered);
      add_weight_decay(grads, params, opt.loss.lambda);
      try {
        adam_step(params, grads, adam);
      } catch (const NumericError& e) {
        std::cerr << "train: " << e.what() << " (epoch " << epoch << ")\n";
        throw TrainingDiverged(e.what(), snapshot(epoch - 1));
      }

      loss_sum += lb.total();
      enc_psnr_sum +=
          detail::psnr_from_normalized_mse(mean_squared_error(host, enc.hybrid));
      dec_psnr_sum += detail::psnr_from_normalized_mse(
          mean_squared_error(guest, dec.recovered));
    }
    TrainLogRow row;
    row.epoch = epoch;
    row.loss = loss_sum / batches;
    row.encoder_psnr = enc_psnr_sum / batches;
    row.decoder_psnr = dec_psnr_sum / batches;
    log.push_back(row);
    if (opt.on_epoch) opt.on_epoch(row);
  }

  return snapshot(opt.epochs);
}

}  // namespace stegnet
