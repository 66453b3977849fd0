#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stegnet/image.hpp"
#include "stegnet/image_io.hpp"
#include "stegnet/rng.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

RunResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "steg_cli_out.txt";
  const fs::path err = fs::temp_directory_path() / "steg_cli_err.txt";
  const std::string cmd = std::string(STEG_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "steg_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "toy");
    stegnet::Rng rng(1234);
    for (int i = 0; i < 24; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "img%02d.png", i);
      stegnet::write_image(testutil::synth_image(rng, 16, 16, name),
                           dir_ / "toy" / name);
    }
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static fs::path dir_;
};

fs::path CliTest::dir_;

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_F(CliTest, TrainWritesCheckpointAndLog) {
  const auto ckpt = dir_ / "a.sgn";
  const auto r = run_cli("train --data " + q(dir_ / "toy") +
                         " --epochs 2 --k 3 --filters 8 --seed 7 --batch 4 --out " +
                         q(ckpt));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_NE(r.out.find("resolved configuration [train]"), std::string::npos);

  const std::string log = slurp(dir_ / "a.csv");
  EXPECT_NE(log.find("epoch,loss,enc_psnr,dec_psnr"), std::string::npos);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);  // header + 2 rows
}

TEST_F(CliTest, TrainIsByteDeterministic) {
  const auto c1 = dir_ / "d1.sgn";
  const auto c2 = dir_ / "d2.sgn";
  const std::string common = "train --data " + q(dir_ / "toy") +
                             " --epochs 2 --k 3 --filters 4 --seed 9 --batch 4 --out ";
  ASSERT_EQ(run_cli(common + q(c1)).exit_code, 0);
  ASSERT_EQ(run_cli(common + q(c2)).exit_code, 0);
  EXPECT_EQ(slurp(c1), slurp(c2));
  EXPECT_FALSE(slurp(c1).empty());
}

TEST_F(CliTest, MissingDataDirFailsWithPathInMessage) {
  const auto r = run_cli("train --data /does/not/exist --out " + q(dir_ / "x.sgn"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("/does/not/exist"), std::string::npos) << r.err;
}

TEST_F(CliTest, EmbedExtractRoundTripShapes) {
  const auto ckpt = dir_ / "flow.sgn";
  ASSERT_EQ(run_cli("train --data " + q(dir_ / "toy") +
                    " --epochs 1 --k 3 --filters 4 --seed 3 --batch 4 --out " + q(ckpt))
                .exit_code,
            0);

  const auto hybrid = dir_ / "hybrid.png";
  const auto r = run_cli("embed --checkpoint " + q(ckpt) + " --cover " +
                         q(dir_ / "toy/img00.png") + " --payload " +
                         q(dir_ / "toy/img01.png") + " --out " + q(hybrid));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("PSNR"), std::string::npos);
  EXPECT_NE(r.out.find("SSIM"), std::string::npos);
  const auto himg = stegnet::read_image(hybrid);
  EXPECT_EQ(himg.channels, 3);
  EXPECT_EQ(himg.height, 16);

  const auto recovered = dir_ / "rec.png";
  const auto e = run_cli("extract --checkpoint " + q(ckpt) + " --hybrid " + q(hybrid) +
                         " --out " + q(recovered) + " --truth " +
                         q(dir_ / "toy/img01.png"));
  ASSERT_EQ(e.exit_code, 0) << e.err;
  EXPECT_NE(e.out.find("truth/recovered PSNR"), std::string::npos);
  const auto rimg = stegnet::read_image(recovered);
  EXPECT_EQ(rimg.channels, 1);
  EXPECT_EQ(rimg.height, 16);

  // same image as cover and payload source is fine at inference
  const auto self = run_cli("embed --checkpoint " + q(ckpt) + " --cover " +
                            q(dir_ / "toy/img02.png") + " --payload " +
                            q(dir_ / "toy/img02.png") + " --out " +
                            q(dir_ / "self.png"));
  EXPECT_EQ(self.exit_code, 0) << self.err;
}

TEST_F(CliTest, CorruptCheckpointGivesIntegrityExitCode) {
  const auto ckpt = dir_ / "corrupt.sgn";
  ASSERT_EQ(run_cli("train --data " + q(dir_ / "toy") +
                    " --epochs 0 --k 3 --filters 4 --out " + q(ckpt))
                .exit_code,
            0);
  auto bytes = slurp(ckpt);
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x10);
  std::ofstream(ckpt, std::ios::binary | std::ios::trunc) << bytes;

  const auto r = run_cli("embed --checkpoint " + q(ckpt) + " --cover " +
                         q(dir_ / "toy/img00.png") + " --payload " +
                         q(dir_ / "toy/img01.png") + " --out " + q(dir_ / "h.png"));
  EXPECT_EQ(r.exit_code, 4);
  EXPECT_NE(r.err.find("integrity"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvalHeaderOnlyAndDeterministicRows) {
  const auto ckpt = dir_ / "eval.sgn";
  ASSERT_EQ(run_cli("train --data " + q(dir_ / "toy") +
                    " --epochs 1 --k 3 --filters 4 --seed 5 --batch 4 --out " + q(ckpt))
                .exit_code,
            0);

  const auto empty = run_cli("eval --checkpoint " + q(ckpt) + " --data " +
                             q(dir_ / "toy") + " --pairs 0");
  ASSERT_EQ(empty.exit_code, 0) << empty.err;
  EXPECT_NE(empty.out.find("pair_id,enc_psnr,dec_psnr,enc_ssim,dec_ssim,bpp,payload_pct"),
            std::string::npos);
  EXPECT_EQ(empty.out.find("img"), std::string::npos);

  const auto csv1 = dir_ / "r1.csv";
  const auto csv2 = dir_ / "r2.csv";
  const std::string common = "eval --checkpoint " + q(ckpt) + " --data " +
                             q(dir_ / "toy") + " --pairs 3 --seed 11 --baseline lsb --out ";
  ASSERT_EQ(run_cli(common + q(csv1)).exit_code, 0);
  ASSERT_EQ(run_cli(common + q(csv2)).exit_code, 0);
  const std::string rows = slurp(csv1);
  EXPECT_EQ(rows, slurp(csv2));
  EXPECT_NE(rows.find("mean,"), std::string::npos);
  EXPECT_NE(rows.find("lsb:mean,"), std::string::npos);
  EXPECT_NE(rows.find("8.000000,33.333333"), std::string::npos);
}

TEST_F(CliTest, ConfigFileValuesAndFlagPrecedence) {
  const auto cfg = dir_ / "train.cfg";
  std::ofstream(cfg) << "# toy config\nepochs = 9\nbatch = 4\nk = 3\nfilters = 4\n";

  // flag wins over file: one epoch, not nine
  const auto r = run_cli("train --data " + q(dir_ / "toy") + " --config " + q(cfg) +
                         " --epochs 1 --seed 2 --out " + q(dir_ / "cfg.sgn"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("epochs=1"), std::string::npos);
  const std::string log = slurp(dir_ / "cfg.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);  // header + 1 row

  const auto bad = dir_ / "bad.cfg";
  std::ofstream(bad) << "no_such_option = 1\n";
  const auto b = run_cli("train --data " + q(dir_ / "toy") + " --config " + q(bad) +
                         " --out " + q(dir_ / "never.sgn"));
  EXPECT_EQ(b.exit_code, 1);
  EXPECT_NE(b.err.find("no_such_option"), std::string::npos) << b.err;
}

TEST_F(CliTest, LsbCommandsRoundTrip) {
  const auto stego = dir_ / "stego.png";
  const auto r = run_cli("lsb-embed --cover " + q(dir_ / "toy/img03.png") +
                         " --payload " + q(dir_ / "toy/img04.png") + " --out " +
                         q(stego) + " --alloc 3,3,2");
  ASSERT_EQ(r.exit_code, 0) << r.err;

  const auto out = dir_ / "lsb_payload.png";
  ASSERT_EQ(run_cli("lsb-extract --stego " + q(stego) + " --out " + q(out) +
                    " --alloc 3,3,2")
                .exit_code,
            0);

  const auto truth = to_grayscale(stegnet::read_image(dir_ / "toy/img04.png"));
  const auto extracted = stegnet::read_image(out);
  EXPECT_EQ(extracted.pixels, truth.pixels);

  const auto bad = run_cli("lsb-embed --cover " + q(dir_ / "toy/img03.png") +
                           " --payload " + q(dir_ / "toy/img04.png") + " --out " +
                           q(stego) + " --alloc 4,4,4");
  EXPECT_EQ(bad.exit_code, 1);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli("no-such-command").exit_code, 1);
  EXPECT_EQ(run_cli("train").exit_code, 1);  // missing required --data
  EXPECT_EQ(run_cli("--help").exit_code, 0);
}
