#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stegnet/checkpoint.hpp"
#include "stegnet/init.hpp"
#include "stegnet/loss.hpp"
#include "stegnet/model.hpp"
#include "stegnet/optimizer.hpp"
#include "stegnet/train.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using stegnet::AdamState;
using stegnet::build_model;
using stegnet::Checkpoint;
using stegnet::desk_config;
using stegnet::joint_loss;
using stegnet::load_checkpoint;
using stegnet::LossWeights;
using stegnet::ModelParams;
using stegnet::NetworkConfig;
using stegnet::Rng;
using stegnet::save_checkpoint;
using stegnet::Tensor;
using stegnet::TrainOptions;

namespace {

NetworkConfig small_config() {
  NetworkConfig cfg;
  cfg.merge_depth = 3;
  cfg.branch_filters = 4;
  cfg.fusion_filters = {4, 3};
  cfg.decoder_filters = {4};
  cfg.height = 8;
  cfg.width = 8;
  return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST(JointLoss, PerfectReconstructionZeroWeightsGivesZero) {
  auto params = build_model<float>(small_config(), 1);
  for (auto& block : stegnet::param_blocks(params)) {
    for (float& v : block.values) v = 0.f;
  }
  Rng rng(2);
  const auto host = testutil::random_tensor<float>(rng, 1, 3, 8, 8);
  const auto guest = testutil::random_tensor<float>(rng, 1, 1, 8, 8);
  const auto lb = joint_loss(host, guest, host, guest, params, LossWeights{});
  EXPECT_EQ(lb.total(), 0.0);
  EXPECT_EQ(lb.encoder_term, 0.0);
  EXPECT_EQ(lb.decoder_term, 0.0);
  EXPECT_EQ(lb.regularizer_term, 0.0);
}

TEST(JointLoss, RegularizerOnlySingleWeight) {
  auto params = build_model<float>(small_config(), 1);
  for (auto& block : stegnet::param_blocks(params)) {
    for (float& v : block.values) v = 0.f;
  }
  params.encoder[0].weights[0] = 2.f;
  LossWeights w;
  w.alpha = 0;
  w.beta = 0;
  w.lambda = 1e-4;
  Rng rng(3);
  const auto host = testutil::random_tensor<float>(rng, 1, 3, 8, 8);
  const auto guest = testutil::random_tensor<float>(rng, 1, 1, 8, 8);
  const auto lb = joint_loss(host, guest, host, guest, params, w);
  EXPECT_NEAR(lb.total(), 0.0004, 1e-12);
}

TEST(JointLoss, MatchesScalarLoopRecomputation) {
  auto params = build_model<double>(small_config(), 4);
  Rng rng(5);
  const auto host = testutil::random_tensor<double>(rng, 2, 3, 8, 8);
  const auto guest = testutil::random_tensor<double>(rng, 2, 1, 8, 8);
  const auto hybrid = testutil::random_tensor<double>(rng, 2, 3, 8, 8);
  const auto recovered = testutil::random_tensor<double>(rng, 2, 1, 8, 8);
  LossWeights w;
  w.alpha = 0.7;
  w.beta = 1.3;
  w.lambda = 2e-3;

  const auto lb = joint_loss(host, guest, hybrid, recovered, params, w);

  // independent recomputation, plain loops
  double enc = 0;
  for (std::size_t i = 0; i < host.size(); ++i) {
    const double d = host.data()[i] - hybrid.data()[i];
    enc += d * d;
  }
  enc = w.alpha * enc / static_cast<double>(host.size());
  double dec = 0;
  for (std::size_t i = 0; i < guest.size(); ++i) {
    const double d = guest.data()[i] - recovered.data()[i];
    dec += d * d;
  }
  dec = w.beta * dec / static_cast<double>(guest.size());
  double reg = 0;
  for (const auto& k : params.encoder) {
    for (double v : k.weights) reg += v * v;
  }
  for (const auto& k : params.decoder) {
    for (double v : k.weights) reg += v * v;
  }
  reg *= w.lambda;

  EXPECT_NEAR(lb.encoder_term, enc, 1e-6 * std::abs(enc));
  EXPECT_NEAR(lb.decoder_term, dec, 1e-6 * std::abs(dec));
  EXPECT_NEAR(lb.regularizer_term, reg, 1e-6 * std::abs(reg));
  EXPECT_GE(lb.total(), 0.0);
}

TEST(JointLoss, EqualsRegularizerWhenReconstructionsPerfect) {
  const auto params = build_model<float>(small_config(), 6);
  Rng rng(7);
  const auto host = testutil::random_tensor<float>(rng, 1, 3, 8, 8);
  const auto guest = testutil::random_tensor<float>(rng, 1, 1, 8, 8);
  LossWeights w;
  const auto lb = joint_loss(host, guest, host, guest, params, w);
  EXPECT_EQ(lb.encoder_term, 0.0);
  EXPECT_EQ(lb.decoder_term, 0.0);
  EXPECT_EQ(lb.total(), lb.regularizer_term);
  EXPECT_GT(lb.regularizer_term, 0.0);
}

TEST(JointLoss, RejectsShapeMismatch) {
  const auto params = build_model<float>(small_config(), 6);
  EXPECT_THROW(joint_loss(Tensor<float>(1, 3, 8, 8), Tensor<float>(1, 1, 8, 8),
                          Tensor<float>(1, 3, 8, 7), Tensor<float>(1, 1, 8, 8),
                          params, LossWeights{}),
               std::invalid_argument);
}

TEST(XavierInit, BoundForEqualFans) {
  Rng rng(8);
  const auto samples = stegnet::xavier_init<double>(3, 3, 1000, rng);
  // a = sqrt(6/6) = 1
  for (double v : samples) {
    EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(XavierInit, UniformMoments) {
  Rng rng(9);
  const int fan = 300;
  const std::size_t n = 100000;
  const auto samples = stegnet::xavier_init<double>(fan, fan, n, rng);
  const double a = stegnet::xavier_bound(fan, fan);
  double mean = 0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(var, a * a / 3.0, 0.1 * a * a / 3.0);
}

TEST(XavierInit, DeterministicForFixedSeed) {
  Rng a(10), b(10);
  EXPECT_EQ(stegnet::xavier_init<float>(9, 16, 64, a),
            stegnet::xavier_init<float>(9, 16, 64, b));
  EXPECT_THROW(stegnet::xavier_init<float>(0, 1, 4, a), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  auto params = build_model<float>(small_config(), 11);
  const auto before = params.encoder;
  auto state = AdamState<float>::like(params, 1e-4);
  const auto grads = stegnet::zero_grads(params);
  adam_step(params, grads, state);
  EXPECT_EQ(params.encoder, before);
  EXPECT_EQ(state.step_count, 1);
}

TEST(Adam, HandComputedFirstStep) {
  // p=1, g=1, lr=0.1: mhat = vhat = 1, so p -> 1 - 0.1/(1+1e-8) ~ 0.9
  NetworkConfig cfg;
  cfg.merge_depth = 1;
  cfg.branch_filters = 1;
  cfg.fusion_filters = {1, 3};
  cfg.decoder_filters = {};
  cfg.height = 1;
  cfg.width = 1;
  auto params = build_model<float>(cfg, 0);
  params.encoder[0].weights[0] = 1.f;
  auto grads = stegnet::zero_grads(params);
  grads.encoder[0].weights[0] = 1.f;
  auto state = AdamState<float>::like(params, 0.1);
  adam_step(params, grads, state);
  EXPECT_NEAR(params.encoder[0].weights[0], 0.9f, 1e-6);
}

TEST(Adam, RejectsNonFiniteGradient) {
  auto params = build_model<float>(small_config(), 12);
  auto grads = stegnet::zero_grads(params);
  grads.decoder[0].weights[0] = std::numeric_limits<float>::quiet_NaN();
  auto state = AdamState<float>::like(params, 1e-4);
  const auto before = params.encoder;
  EXPECT_THROW(adam_step(params, grads, state), stegnet::NumericError);
  EXPECT_EQ(params.encoder, before);  // state untouched by the rejected step
  EXPECT_EQ(state.step_count, 0);
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = [] {
    auto params = build_model<float>(small_config(), 13);
    auto state = AdamState<float>::like(params, 1e-3);
    Rng rng(14);
    for (int step = 0; step < 5; ++step) {
      auto grads = stegnet::zero_grads(params);
      for (auto& block : stegnet::grad_blocks(grads)) {
        for (float& v : block.values) v = static_cast<float>(rng.uniform(-1, 1));
      }
      adam_step(params, grads, state);
    }
    return params;
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.encoder, b.encoder);
  EXPECT_EQ(a.decoder, b.decoder);
}

namespace {

Checkpoint make_test_checkpoint() {
  Checkpoint c;
  c.params = build_model<float>(small_config(), 15);
  c.adam = AdamState<float>::like(c.params, 1e-4);
  c.adam.step_count = 7;
  c.adam.m[0][0] = 0.25f;
  c.adam.v[0][0] = 0.125f;
  c.epoch = 3;
  c.log = {{1, 0.5, 12.0, 10.0},
           {2, 0.25, 15.0, 13.0},
           {3, 0.175, std::numeric_limits<double>::infinity(), 14.0}};
  return c;
}

}  // namespace

TEST(Checkpoint, RoundTripDeepEquality) {
  const Checkpoint c = make_test_checkpoint();
  const auto path = temp_path("ckpt_roundtrip.sgn");
  save_checkpoint(c, path);
  const Checkpoint loaded = load_checkpoint(path);
  EXPECT_TRUE(loaded == c);
  std::filesystem::remove(path);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const Checkpoint c = make_test_checkpoint();
  const auto p1 = temp_path("ckpt_a.sgn");
  const auto p2 = temp_path("ckpt_b.sgn");
  save_checkpoint(c, p1);
  save_checkpoint(load_checkpoint(p1), p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::vector<char> b1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
  const std::vector<char> b2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
  EXPECT_EQ(b1, b2);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(Checkpoint, DetectsSingleByteFlipInWeights) {
  const Checkpoint c = make_test_checkpoint();
  const auto path = temp_path("ckpt_flip.sgn");
  save_checkpoint(c, path);

  // Walk the section table to a byte in the middle of the PARM payload.
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  in.close();
  std::size_t pos = 8;
  std::size_t target = 0;
  while (pos + 16 < bytes.size()) {
    const std::string name(bytes.begin() + pos, bytes.begin() + pos + 4);
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) {
      len |= static_cast<std::uint64_t>(
                 static_cast<unsigned char>(bytes[pos + 4 + i]))
             << (8 * i);
    }
    if (name == "PARM") {
      target = pos + 12 + len / 2;
      break;
    }
    pos += 12 + len + 4;
  }
  ASSERT_GT(target, 0u);
  bytes[target] = static_cast<char>(bytes[target] ^ 0x40);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();

  try {
    load_checkpoint(path);
    FAIL() << "corrupted checkpoint was accepted";
  } catch (const stegnet::IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("PARM"), std::string::npos)
        << "error should name the failing section: " << e.what();
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsEmptyAndForeignFiles) {
  const auto path = temp_path("ckpt_empty.sgn");
  { std::ofstream f(path, std::ios::trunc); }
  EXPECT_THROW(load_checkpoint(path), stegnet::IntegrityError);

  { std::ofstream f(path, std::ios::trunc); f << "not a checkpoint at all"; }
  EXPECT_THROW(load_checkpoint(path), stegnet::IntegrityError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsTruncation) {
  const Checkpoint c = make_test_checkpoint();
  const auto path = temp_path("ckpt_trunc.sgn");
  save_checkpoint(c, path);
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  in.close();
  bytes.resize(bytes.size() * 2 / 3);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  EXPECT_THROW(load_checkpoint(path), stegnet::IntegrityError);
  std::filesystem::remove(path);
}

TEST(Train, ZeroEpochsReturnsInitialParamsAndEmptyLog) {
  const auto data = testutil::synth_dataset(20, 8, 8, 8);
  NetworkConfig cfg = small_config();
  TrainOptions opt;
  opt.epochs = 0;
  opt.batch_size = 2;
  opt.seed = 21;
  const Checkpoint c = train(cfg, data, opt);
  EXPECT_TRUE(c.log.empty());
  EXPECT_EQ(c.epoch, 0);
  const auto fresh = build_model<float>(cfg, 21);
  EXPECT_EQ(c.params.encoder, fresh.encoder);
  EXPECT_EQ(c.params.decoder, fresh.decoder);
}

TEST(Train, RejectsBadData) {
  NetworkConfig cfg = small_config();
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch_size = 4;
  EXPECT_THROW(train(cfg, {}, opt), stegnet::DataError);
  // too few images for one disjoint batch
  const auto tiny = testutil::synth_dataset(22, 4, 8, 8);
  EXPECT_THROW(train(cfg, tiny, opt), stegnet::DataError);
  // wrong dims
  const auto wrong = testutil::synth_dataset(23, 16, 12, 12);
  EXPECT_THROW(train(cfg, wrong, opt), stegnet::DataError);
}

TEST(Train, LossDescendsOnTinyRun) {
  // 200 smooth 16x16 images, merge depth 3, 8 filters, 20 epochs.
  const auto data = testutil::synth_dataset(24, 200, 16, 16);
  const NetworkConfig cfg = desk_config(3, 8, 16, 16);
  TrainOptions opt;
  opt.epochs = 20;
  opt.batch_size = 8;
  opt.seed = 25;
  opt.lr = 1e-3;
  const Checkpoint c = train(cfg, data, opt);
  ASSERT_EQ(c.log.size(), 20u);
  EXPECT_LT(c.log.back().loss, 0.5 * c.log.front().loss)
      << "epoch-20 loss " << c.log.back().loss << " vs epoch-1 "
      << c.log.front().loss;
}

TEST(Train, DeterministicForFixedSeed) {
  const auto data = testutil::synth_dataset(26, 24, 8, 8);
  NetworkConfig cfg = small_config();
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch_size = 4;
  opt.seed = 27;
  const Checkpoint a = train(cfg, data, opt);
  const Checkpoint b = train(cfg, data, opt);
  EXPECT_TRUE(a == b);
}

TEST(Train, DivergenceAbortsWithDiagnosticSnapshot) {
  const auto data = testutil::synth_dataset(28, 24, 8, 8);
  NetworkConfig cfg = small_config();
  TrainOptions opt;
  opt.epochs = 50;
  opt.batch_size = 4;
  opt.seed = 29;
  opt.lr = 1e8;  // guaranteed blow-up
  try {
    train(cfg, data, opt);
    FAIL() << "expected divergence";
  } catch (const stegnet::TrainingDiverged& e) {
    EXPECT_GE(e.snapshot.epoch, 0);
  }
}
