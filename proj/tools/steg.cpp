// steg: train, run and evaluate the image-in-image steganography models,
// plus the classical LSB substitution baseline.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/stegnet.hpp"

namespace fs = std::filesystem;
using namespace stegnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIntegrity = 4;

void echo_config(const CLI::App* sub) {
  std::cout << "resolved configuration [" << sub->get_name() << "]\n";
  std::istringstream dump(sub->config_to_str(true, false));
  for (std::string line; std::getline(dump, line);) {
    if (!line.empty()) std::cout << "  " << line << "\n";
  }
}

std::pair<int, int> parse_dims(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    throw ConfigError("expected HxW dimensions, got '" + text + "'");
  }
  try {
    const int h = std::stoi(text.substr(0, x));
    const int w = std::stoi(text.substr(x + 1));
    if (h < 1 || w < 1) throw ConfigError("dimensions must be positive");
    return {h, w};
  } catch (const std::logic_error&) {
    throw ConfigError("expected HxW dimensions, got '" + text + "'");
  }
}

BitAllocation parse_alloc(const std::string& text) {
  BitAllocation alloc;
  if (std::sscanf(text.c_str(), "%d,%d,%d", &alloc.r, &alloc.g, &alloc.b) != 3) {
    throw ConfigError("expected R,G,B bit allocation, got '" + text + "'");
  }
  try {
    alloc.validate();
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return alloc;
}

ImageSample load_cover(const fs::path& path) {
  ImageSample img = read_image(path);
  if (img.channels == 1) {
    std::cerr << "warning: cover " << path << " is grayscale; replicating to RGB\n";
    ImageSample rgb(img.height, img.width, 3, img.id);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = img.at(y, x, 0);
      }
    }
    return rgb;
  }
  return img;
}

ImageSample load_payload(const fs::path& path) {
  ImageSample img = read_image(path);
  if (img.channels == 3) {
    std::cout << "payload converted to grayscale (luma)\n";
    return to_grayscale(img);
  }
  return img;
}

// Dimension policy shared by embed and the LSB commands: covers resize to the
// target (warn) unless --strict; payloads pad when smaller, resize when larger.
ImageSample fit_cover(ImageSample cover, int h, int w, bool strict) {
  if (cover.height == h && cover.width == w) return cover;
  if (strict) {
    throw DataError("cover is " + std::to_string(cover.height) + "x" +
                    std::to_string(cover.width) + " but " + std::to_string(h) +
                    "x" + std::to_string(w) + " is required (--strict)");
  }
  std::cerr << "warning: resizing cover from " << cover.height << "x"
            << cover.width << " to " << h << "x" << w << "\n";
  return resize_bilinear(cover, h, w);
}

ImageSample fit_payload(ImageSample payload, int h, int w, bool strict) {
  if (payload.height == h && payload.width == w) return payload;
  if (payload.height <= h && payload.width <= w) {
    std::cerr << "warning: zero-padding payload from " << payload.height << "x"
              << payload.width << " to " << h << "x" << w << " (centered)\n";
    return pad_to_center(payload, h, w);
  }
  if (strict) {
    throw DataError("payload exceeds " + std::to_string(h) + "x" +
                    std::to_string(w) + " (--strict)");
  }
  std::cerr << "warning: resizing payload from " << payload.height << "x"
            << payload.width << " to " << h << "x" << w << "\n";
  return resize_bilinear(payload, h, w);
}

struct TrainCli {
  std::string config;
  std::string data;
  std::string out = "checkpoint.sgn";
  std::string log;
  std::string resize;
  int epochs = 1;
  int batch = 32;
  int k = 7;
  int filters = 16;
  double lr = 1e-4;
  double lambda = 1e-4;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

std::vector<ImageSample> load_train_data(const std::string& data,
                                         const std::optional<std::pair<int, int>>& resize) {
  const fs::path path(data);
  if (!fs::exists(path)) throw DataError("data path does not exist: " + data);
  if (fs::is_directory(path)) {
    return load_image_dir(path, resize).samples;
  }
  // IDX files hold single-channel images; replicate so they can serve as covers.
  std::vector<ImageSample> samples = load_idx(path);
  for (auto& s : samples) {
    ImageSample rgb(s.height, s.width, 3, s.id);
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = s.at(y, x, 0);
      }
    }
    s = std::move(rgb);
    if (resize) s = resize_bilinear(s, resize->first, resize->second);
  }
  return samples;
}

int run_train(const TrainCli& cli) {
  std::optional<std::pair<int, int>> resize;
  if (!cli.resize.empty()) resize = parse_dims(cli.resize);

  const std::vector<ImageSample> data = load_train_data(cli.data, resize);
  const int height = data.front().height;
  const int width = data.front().width;
  const NetworkConfig config = desk_config(cli.k, cli.filters, height, width);

  TrainOptions opt;
  opt.epochs = cli.epochs;
  opt.batch_size = cli.batch;
  opt.seed = cli.seed;
  opt.lr = cli.lr;
  opt.loss.alpha = cli.alpha;
  opt.loss.beta = cli.beta;
  opt.loss.lambda = cli.lambda;
  opt.on_epoch = [](const TrainLogRow& row) {
    std::cout << "epoch " << row.epoch << ": loss " << row.loss << ", enc "
              << format_metric(row.encoder_psnr) << " dB, dec "
              << format_metric(row.decoder_psnr) << " dB\n";
  };

  const fs::path out(cli.out);
  const fs::path log_path =
      cli.log.empty() ? fs::path(cli.out).replace_extension(".csv") : fs::path(cli.log);

  Checkpoint ckpt;
  try {
    ckpt = train(config, data, opt);
  } catch (const TrainingDiverged& e) {
    const fs::path diag = out.string() + ".diag";
    save_checkpoint(e.snapshot, diag);
    std::cerr << "error: " << e.what() << "; diagnostic checkpoint written to "
              << diag << "\n";
    return kExitNumeric;
  }
  save_checkpoint(ckpt, out);
  write_train_log_csv(ckpt.log, log_path);
  std::cout << "checkpoint written to " << out << " (" << ckpt.params.parameter_count()
            << " parameters), log to " << log_path << "\n";
  return kExitOk;
}

struct EmbedCli {
  std::string config;
  std::string checkpoint;
  std::string cover;
  std::string payload;
  std::string out;
  bool strict = false;
};

int run_embed(const EmbedCli& cli) {
  const Checkpoint ckpt = load_checkpoint(cli.checkpoint);
  const NetworkConfig& cfg = ckpt.params.config;

  const ImageSample cover =
      fit_cover(load_cover(cli.cover), cfg.height, cfg.width, cli.strict);
  const ImageSample payload =
      fit_payload(load_payload(cli.payload), cfg.height, cfg.width, cli.strict);

  const auto enc =
      encoder_forward(ckpt.params, normalize<float>(cover), normalize<float>(payload));
  ImageSample hybrid = denormalize(enc.hybrid);
  hybrid.id = cover.id;
  write_image(hybrid, cli.out);

  const auto cap = capacity(cover.height, cover.width, payload.height, payload.width);
  std::cout << "hybrid written to " << cli.out << "\n";
  std::cout << "cover/hybrid PSNR: " << format_metric(psnr(cover, hybrid))
            << " dB, SSIM: " << format_metric(ssim(cover, hybrid)) << "\n";
  std::cout << "capacity: " << cap.bpp << " bpp (" << format_metric(cap.payload_percent)
            << "% payload)\n";
  return kExitOk;
}

struct ExtractCli {
  std::string config;
  std::string checkpoint;
  std::string hybrid;
  std::string out;
  std::string truth;
  bool strict = false;
};

int run_extract(const ExtractCli& cli) {
  const Checkpoint ckpt = load_checkpoint(cli.checkpoint);
  const NetworkConfig& cfg = ckpt.params.config;

  ImageSample hybrid = read_image(cli.hybrid);
  if (hybrid.channels != 3) {
    throw DataError("hybrid must be RGB, got " + std::to_string(hybrid.channels) +
                    " channel(s)");
  }
  hybrid = fit_cover(std::move(hybrid), cfg.height, cfg.width, cli.strict);

  const auto dec = decoder_forward(ckpt.params, normalize<float>(hybrid));
  ImageSample recovered = denormalize(dec.recovered);
  recovered.id = hybrid.id;
  write_image(recovered, cli.out);
  std::cout << "recovered payload written to " << cli.out << "\n";

  if (!cli.truth.empty()) {
    const ImageSample truth =
        fit_payload(load_payload(cli.truth), cfg.height, cfg.width, cli.strict);
    std::cout << "truth/recovered PSNR: " << format_metric(psnr(truth, recovered))
              << " dB, SSIM: " << format_metric(ssim(truth, recovered)) << "\n";
  }
  return kExitOk;
}

struct EvalCli {
  std::string config;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string baseline;
  int pairs = 10;
  std::uint64_t seed = 0;
};

struct EvalRow {
  std::string pair_id;
  double enc_psnr, dec_psnr, enc_ssim, dec_ssim, bpp, payload_pct;
};

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows) {
  os << "# per-pair image metrics; the mean rows average per-image values\n";
  os << "pair_id,enc_psnr,dec_psnr,enc_ssim,dec_ssim,bpp,payload_pct\n";
  for (const auto& r : rows) {
    os << r.pair_id << "," << format_metric(r.enc_psnr) << ","
       << format_metric(r.dec_psnr) << "," << format_metric(r.enc_ssim) << ","
       << format_metric(r.dec_ssim) << "," << format_metric(r.bpp) << ","
       << format_metric(r.payload_pct) << "\n";
  }
}

EvalRow mean_row(const std::string& id, const std::vector<EvalRow>& rows) {
  EvalRow m{id, 0, 0, 0, 0, 0, 0};
  for (const auto& r : rows) {
    m.enc_psnr += r.enc_psnr;
    m.dec_psnr += r.dec_psnr;
    m.enc_ssim += r.enc_ssim;
    m.dec_ssim += r.dec_ssim;
    m.bpp += r.bpp;
    m.payload_pct += r.payload_pct;
  }
  const double n = static_cast<double>(rows.size());
  m.enc_psnr /= n;
  m.dec_psnr /= n;
  m.enc_ssim /= n;
  m.dec_ssim /= n;
  m.bpp /= n;
  m.payload_pct /= n;
  return m;
}

int run_eval(const EvalCli& cli) {
  if (cli.pairs < 0) throw ConfigError("--pairs must be >= 0");
  if (!cli.baseline.empty() && cli.baseline != "lsb") {
    throw ConfigError("unknown baseline '" + cli.baseline + "' (expected: lsb)");
  }
  const Checkpoint ckpt = load_checkpoint(cli.checkpoint);
  const NetworkConfig& cfg = ckpt.params.config;

  std::vector<EvalRow> rows;
  if (cli.pairs > 0) {
    const auto load =
        load_image_dir(cli.data, std::make_pair(cfg.height, cfg.width));
    Rng rng(cli.seed);
    const auto pair_idx =
        sample_pair_indices(load.samples.size(), cli.pairs, rng);

    std::vector<EvalRow> model_rows, lsb_rows;
    for (const auto& [ci, pi] : pair_idx) {
      const ImageSample& cover = load.samples[ci];
      const ImageSample payload = to_grayscale(load.samples[pi]);
      const auto cap = capacity(cover.height, cover.width, payload.height, payload.width);

      const auto enc = encoder_forward(ckpt.params, normalize<float>(cover),
                                       normalize<float>(payload));
      const auto dec = decoder_forward(ckpt.params, enc.hybrid);
      const ImageSample hybrid = denormalize(enc.hybrid);
      const ImageSample recovered = denormalize(dec.recovered);

      const std::string pair_id = cover.id + "+" + payload.id;
      model_rows.push_back({pair_id, psnr(cover, hybrid), psnr(payload, recovered),
                            ssim(cover, hybrid), ssim(payload, recovered), cap.bpp,
                            cap.payload_percent});

      if (cli.baseline == "lsb") {
        const ImageSample stego = lsb_embed(cover, payload);
        const ImageSample extracted = lsb_extract(stego);
        lsb_rows.push_back({"lsb:" + pair_id, psnr(cover, stego),
                            psnr(payload, extracted), ssim(cover, stego),
                            ssim(payload, extracted), cap.bpp, cap.payload_percent});
      }
    }
    rows = model_rows;
    rows.push_back(mean_row("mean", model_rows));
    if (!lsb_rows.empty()) {
      rows.insert(rows.end(), lsb_rows.begin(), lsb_rows.end());
      rows.push_back(mean_row("lsb:mean", lsb_rows));
    }
  }

  write_eval_csv(std::cout, rows);
  if (!cli.out.empty()) {
    std::ofstream file(cli.out, std::ios::trunc);
    if (!file) throw DataError("cannot open " + cli.out + " for writing");
    write_eval_csv(file, rows);
  }
  return kExitOk;
}

struct LsbEmbedCli {
  std::string config;
  std::string cover;
  std::string payload;
  std::string out;
  std::string alloc = "3,3,2";
  bool strict = false;
};

int run_lsb_embed(const LsbEmbedCli& cli) {
  const BitAllocation alloc = parse_alloc(cli.alloc);
  const ImageSample cover = load_cover(cli.cover);
  const ImageSample payload =
      fit_payload(load_payload(cli.payload), cover.height, cover.width, cli.strict);
  const ImageSample stego = lsb_embed(cover, payload, alloc);
  write_image(stego, cli.out);
  std::cout << "stego written to " << cli.out << "\n";
  std::cout << "cover/stego PSNR: " << format_metric(psnr(cover, stego))
            << " dB, SSIM: " << format_metric(ssim(cover, stego)) << "\n";
  return kExitOk;
}

struct LsbExtractCli {
  std::string config;
  std::string stego;
  std::string out;
  std::string alloc = "3,3,2";
};

int run_lsb_extract(const LsbExtractCli& cli) {
  const BitAllocation alloc = parse_alloc(cli.alloc);
  const ImageSample stego = read_image(cli.stego);
  const ImageSample payload = lsb_extract(stego, alloc);
  write_image(payload, cli.out);
  std::cout << "payload written to " << cli.out << "\n";
  return kExitOk;
}

void add_config_file(CLI::App* sub, std::string& var) {
  sub->add_option("--config", var, "key = value config file; flags override file values");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Flat `key = value` config file with '#' comments. Values for options already
// given on the command line are ignored, so flags override the file. Unknown
// keys are errors.
std::vector<std::string> expand_config_file(const std::vector<std::string>& args,
                                            CLI::App& app) {
  std::size_t sub_pos = args.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      sub = app.get_subcommand_no_throw(args[i]);
      if (sub) sub_pos = i;
      break;
    }
  }
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!sub || config_path.empty()) return args;

  std::ifstream file(config_path);
  if (!file) throw ConfigError("cannot open config file " + config_path);

  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(config_path + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(config_path + ":" + std::to_string(line_no) + ": empty key");
    }
    if (key == "config") {
      throw ConfigError(config_path + ": config files cannot nest");
    }
    const std::string flag = "--" + key;
    if (sub->get_option_no_throw(flag) == nullptr) {
      throw ConfigError(config_path + ":" + std::to_string(line_no) +
                        ": unknown config key '" + key + "'");
    }
    bool on_command_line = false;
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) {
        on_command_line = true;
        break;
      }
    }
    if (!on_command_line) injected.push_back(flag + "=" + value);
  }

  std::vector<std::string> out(args.begin(), args.begin() + sub_pos + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + sub_pos + 1, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"image-in-image steganography: CNN encoder-decoder and LSB baseline"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);

  TrainCli train_cli;
  auto* train_cmd = app.add_subcommand("train", "train an encoder-decoder model");
  train_cmd->add_option("--data", train_cli.data, "image directory or IDX file")->required();
  train_cmd->add_option("--out", train_cli.out, "output checkpoint path");
  train_cmd->add_option("--log", train_cli.log, "training log CSV (default: <out>.csv)");
  train_cmd->add_option("--epochs", train_cli.epochs, "training epochs");
  train_cmd->add_option("--batch", train_cli.batch, "batch size");
  train_cmd->add_option("--k", train_cli.k, "merge depth (odd)");
  train_cmd->add_option("--filters", train_cli.filters, "branch filter count");
  train_cmd->add_option("--lr", train_cli.lr, "Adam learning rate");
  train_cmd->add_option("--lambda", train_cli.lambda, "L2 regularization weight");
  train_cmd->add_option("--alpha", train_cli.alpha, "encoder reconstruction weight");
  train_cmd->add_option("--beta", train_cli.beta, "decoder reconstruction weight");
  train_cmd->add_option("--resize", train_cli.resize, "resize training images to HxW");
  train_cmd->add_option("--seed", train_cli.seed, "RNG seed");
  add_config_file(train_cmd, train_cli.config);

  EmbedCli embed_cli;
  auto* embed_cmd = app.add_subcommand("embed", "hide a payload image in a cover image");
  embed_cmd->add_option("--checkpoint", embed_cli.checkpoint, "trained model")->required();
  embed_cmd->add_option("--cover", embed_cli.cover, "RGB cover image")->required();
  embed_cmd->add_option("--payload", embed_cli.payload, "payload image")->required();
  embed_cmd->add_option("--out", embed_cli.out, "hybrid output image")->required();
  embed_cmd->add_flag("--strict", embed_cli.strict, "fail on dimension mismatch");
  add_config_file(embed_cmd, embed_cli.config);

  ExtractCli extract_cli;
  auto* extract_cmd = app.add_subcommand("extract", "recover the payload from a hybrid");
  extract_cmd->add_option("--checkpoint", extract_cli.checkpoint, "trained model")->required();
  extract_cmd->add_option("--hybrid", extract_cli.hybrid, "hybrid image")->required();
  extract_cmd->add_option("--out", extract_cli.out, "recovered payload image")->required();
  extract_cmd->add_option("--truth", extract_cli.truth, "ground-truth payload for metrics");
  extract_cmd->add_flag("--strict", extract_cli.strict, "fail on dimension mismatch");
  add_config_file(extract_cmd, extract_cli.config);

  EvalCli eval_cli;
  auto* eval_cmd = app.add_subcommand("eval", "embed+extract over sampled pairs, CSV report");
  eval_cmd->add_option("--checkpoint", eval_cli.checkpoint, "trained model")->required();
  eval_cmd->add_option("--data", eval_cli.data, "image directory")->required();
  eval_cmd->add_option("--pairs", eval_cli.pairs, "number of disjoint cover/payload pairs");
  eval_cmd->add_option("--seed", eval_cli.seed, "RNG seed");
  eval_cmd->add_option("--out", eval_cli.out, "also write the CSV here");
  eval_cmd->add_option("--baseline", eval_cli.baseline, "add baseline rows (lsb)");
  add_config_file(eval_cmd, eval_cli.config);

  LsbEmbedCli lsb_embed_cli;
  auto* lsb_embed_cmd = app.add_subcommand("lsb-embed", "classical LSB substitution embed");
  lsb_embed_cmd->add_option("--cover", lsb_embed_cli.cover, "RGB cover image")->required();
  lsb_embed_cmd->add_option("--payload", lsb_embed_cli.payload, "payload image")->required();
  lsb_embed_cmd->add_option("--out", lsb_embed_cli.out, "stego output image")->required();
  lsb_embed_cmd->add_option("--alloc", lsb_embed_cli.alloc, "bits per channel R,G,B (sum 8)");
  lsb_embed_cmd->add_flag("--strict", lsb_embed_cli.strict, "fail on dimension mismatch");
  add_config_file(lsb_embed_cmd, lsb_embed_cli.config);

  LsbExtractCli lsb_extract_cli;
  auto* lsb_extract_cmd = app.add_subcommand("lsb-extract", "LSB substitution extract");
  lsb_extract_cmd->add_option("--stego", lsb_extract_cli.stego, "stego image")->required();
  lsb_extract_cmd->add_option("--out", lsb_extract_cli.out, "payload output image")->required();
  lsb_extract_cmd->add_option("--alloc", lsb_extract_cli.alloc, "bits per channel R,G,B (sum 8)");
  add_config_file(lsb_extract_cmd, lsb_extract_cli.config);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config_file(args, app);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    std::reverse(args.begin(), args.end());  // CLI11 consumes args back to front
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      echo_config(train_cmd);
      return run_train(train_cli);
    }
    if (embed_cmd->parsed()) {
      echo_config(embed_cmd);
      return run_embed(embed_cli);
    }
    if (extract_cmd->parsed()) {
      echo_config(extract_cmd);
      return run_extract(extract_cli);
    }
    if (eval_cmd->parsed()) {
      echo_config(eval_cmd);
      return run_eval(eval_cli);
    }
    if (lsb_embed_cmd->parsed()) {
      echo_config(lsb_embed_cmd);
      return run_lsb_embed(lsb_embed_cli);
    }
    if (lsb_extract_cmd->parsed()) {
      echo_config(lsb_extract_cmd);
      return run_lsb_extract(lsb_extract_cli);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
