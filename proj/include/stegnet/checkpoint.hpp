#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/model.hpp"
#include "stegnet/optimizer.hpp"

namespace stegnet {

struct TrainLogRow {
  int epoch = 0;
  double loss = 0;
  double encoder_psnr = 0;
  double decoder_psnr = 0;
  bool operator==(const TrainLogRow&) const = default;
};

// Everything needed to resume or run a trained model. Round-trips through
// save/load bit-exactly.
struct Checkpoint {
  std::uint32_t version = 1;
  ModelParams<float> params;  // carries the NetworkConfig
  AdamState<float> adam;
  std::int64_t epoch = 0;
  std::vector<TrainLogRow> log;
};

inline bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.version == b.version && a.params.config == b.params.config &&
         a.params.encoder == b.params.encoder &&
         a.params.decoder == b.params.decoder && a.adam.lr == b.adam.lr &&
         a.adam.beta1 == b.adam.beta1 && a.adam.beta2 == b.adam.beta2 &&
         a.adam.epsilon == b.adam.epsilon &&
         a.adam.step_count == b.adam.step_count && a.adam.m == b.adam.m &&
         a.adam.v == b.adam.v && a.epoch == b.epoch && a.log == b.log;
}

namespace detail {

// File layout, all integers little-endian:
//   "SGN1" | u32 version | section* | u32 crc32(all preceding bytes)
// section := 4-byte name | u64 payload length | payload | u32 crc32(payload)
// Sections appear in fixed order: CONF PARM ADAM META TLOG.
constexpr char kMagic[4] = {'S', 'G', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t n, std::string context)
      : data_(data), size_(n), context_(std::move(context)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<std::uint8_t> raw(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > size_) {
      throw IntegrityError("checkpoint: unexpected end of data in " + context_ +
                           " at offset " + std::to_string(pos_));
    }
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

inline std::string config_text(const NetworkConfig& c) {
  std::string t;
  t += "k = " + std::to_string(c.merge_depth) + "\n";
  t += "branch_filters = " + std::to_string(c.branch_filters) + "\n";
  t += "fusion_filters = " + join_ints(c.fusion_filters) + "\n";
  t += "decoder_filters = " + join_ints(c.decoder_filters) + "\n";
  t += "kernel_size = " + std::to_string(c.kernel_size) + "\n";
  t += "host_channels = " + std::to_string(c.host_channels) + "\n";
  t += "guest_channels = " + std::to_string(c.guest_channels) + "\n";
  t += "height = " + std::to_string(c.height) + "\n";
  t += "width = " + std::to_string(c.width) + "\n";
  return t;
}

inline NetworkConfig parse_config_text(const std::string& text) {
  NetworkConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw IntegrityError("checkpoint: malformed config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    if (key == "k") c.merge_depth = std::stoi(val);
    else if (key == "branch_filters") c.branch_filters = std::stoi(val);
    else if (key == "fusion_filters") c.fusion_filters = parse_int_list(val);
    else if (key == "decoder_filters") c.decoder_filters = parse_int_list(val);
    else if (key == "kernel_size") c.kernel_size = std::stoi(val);
    else if (key == "host_channels") c.host_channels = std::stoi(val);
    else if (key == "guest_channels") c.guest_channels = std::stoi(val);
    else if (key == "height") c.height = std::stoi(val);
    else if (key == "width") c.width = std::stoi(val);
    else throw IntegrityError("checkpoint: unknown config key '" + key + "'");
  }
  return c;
}

inline void append_section(ByteWriter& out, const char name[4],
                           const ByteWriter& payload) {
  out.raw(name, 4);
  out.u64(payload.bytes().size());
  out.raw(payload.bytes().data(), payload.bytes().size());
  out.u32(crc32_of(payload.bytes().data(), payload.bytes().size()));
}

inline void write_kernels(ByteWriter& w, const std::vector<ConvKernel<float>>& ks) {
  for (const auto& k : ks) {
    w.u32(static_cast<std::uint32_t>(k.out_channels));
    w.u32(static_cast<std::uint32_t>(k.in_channels));
    w.u32(static_cast<std::uint32_t>(k.kh));
    w.u32(static_cast<std::uint32_t>(k.kw));
    for (float x : k.weights) w.f32(x);
    for (float x : k.bias) w.f32(x);
  }
}

inline std::vector<ConvKernel<float>> read_kernels(ByteReader& r, std::size_t count) {
  std::vector<ConvKernel<float>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int oc = static_cast<int>(r.u32());
    const int ic = static_cast<int>(r.u32());
    const int kh = static_cast<int>(r.u32());
    const int kw = static_cast<int>(r.u32());
    if (oc < 1 || ic < 1 || kh < 1 || kw < 1 || kh % 2 == 0 || kw % 2 == 0) {
      throw IntegrityError("checkpoint: invalid kernel shape in PARM section");
    }
    ConvKernel<float> k(oc, ic, kh, kw);
    for (float& x : k.weights) x = r.f32();
    for (float& x : k.bias) x = r.f32();
    out.push_back(std::move(k));
  }
  return out;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  using namespace detail;
  ByteWriter file;
  file.raw(kMagic, 4);
  file.u32(kVersion);

  ByteWriter conf;
  const std::string text = config_text(c.params.config);
  conf.raw(text.data(), text.size());
  append_section(file, "CONF", conf);

  ByteWriter parm;
  parm.u32(static_cast<std::uint32_t>(c.params.encoder.size()));
  parm.u32(static_cast<std::uint32_t>(c.params.decoder.size()));
  write_kernels(parm, c.params.encoder);
  write_kernels(parm, c.params.decoder);
  append_section(file, "PARM", parm);

  ByteWriter adam;
  adam.f64(c.adam.lr);
  adam.f64(c.adam.beta1);
  adam.f64(c.adam.beta2);
  adam.f64(c.adam.epsilon);
  adam.u64(static_cast<std::uint64_t>(c.adam.step_count));
  adam.u32(static_cast<std::uint32_t>(c.adam.m.size()));
  for (std::size_t i = 0; i < c.adam.m.size(); ++i) {
    adam.u64(c.adam.m[i].size());
    for (float x : c.adam.m[i]) adam.f32(x);
    for (float x : c.adam.v[i]) adam.f32(x);
  }
  append_section(file, "ADAM", adam);

  ByteWriter meta;
  meta.u64(static_cast<std::uint64_t>(c.epoch));
  append_section(file, "META", meta);

  ByteWriter tlog;
  tlog.u32(static_cast<std::uint32_t>(c.log.size()));
  for (const auto& row : c.log) {
    tlog.u32(static_cast<std::uint32_t>(row.epoch));
    tlog.f64(row.loss);
    tlog.f64(row.encoder_psnr);
    tlog.f64(row.decoder_psnr);
  }
  append_section(file, "TLOG", tlog);

  file.u32(crc32_of(file.bytes().data(), file.bytes().size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(file.bytes().data()),
            static_cast<std::streamsize>(file.bytes().size()));
  if (!out) throw DataError("failed writing checkpoint to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < 8) {
    throw IntegrityError("checkpoint: file too short for magic/version header");
  }
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw IntegrityError("checkpoint: bad magic (expected SGN1)");
  }
  ByteReader header(bytes.data(), bytes.size(), "header");
  header.raw(4);
  const std::uint32_t version = header.u32();
  if (version != kVersion) {
    throw IntegrityError("checkpoint: unsupported version " + std::to_string(version));
  }

  // Structural pass: locate the five sections, verify each payload CRC.
  static const char* kSectionOrder[] = {"CONF", "PARM", "ADAM", "META", "TLOG"};
  std::vector<std::vector<std::uint8_t>> payloads;
  std::size_t pos = 8;  // past magic + version
  for (const char* name : kSectionOrder) {
    ByteReader sec(bytes.data() + pos, bytes.size() - pos,
                   std::string("section ") + name);
    const auto tag = sec.raw(4);
    if (!std::equal(tag.begin(), tag.end(), name)) {
      throw IntegrityError(std::string("checkpoint: expected section ") + name +
                           " at offset " + std::to_string(pos));
    }
    const std::uint64_t len = sec.u64();
    auto payload = sec.raw(len);
    const std::uint32_t stored = sec.u32();
    if (stored != crc32_of(payload.data(), payload.size())) {
      throw IntegrityError(std::string("checkpoint: section ") + name +
                           " checksum mismatch");
    }
    payloads.push_back(std::move(payload));
    pos += sec.pos();
  }
  if (bytes.size() - pos != 4) {
    throw IntegrityError("checkpoint: trailing bytes after final section");
  }
  ByteReader tail(bytes.data() + pos, 4, "file checksum");
  if (tail.u32() != crc32_of(bytes.data(), bytes.size() - 4)) {
    throw IntegrityError("checkpoint: whole-file checksum mismatch");
  }

  Checkpoint c;
  c.version = version;

  {
    const auto& p = payloads[0];
    c.params.config = parse_config_text(std::string(p.begin(), p.end()));
    c.params.config.validate();
  }
  {
    ByteReader pr(payloads[1].data(), payloads[1].size(), "section PARM");
    const std::size_t n_enc = pr.u32();
    const std::size_t n_dec = pr.u32();
    c.params.encoder = read_kernels(pr, n_enc);
    c.params.decoder = read_kernels(pr, n_dec);
    if (pr.remaining() != 0) {
      throw IntegrityError("checkpoint: section PARM has trailing bytes");
    }
  }
  {
    ByteReader ar(payloads[2].data(), payloads[2].size(), "section ADAM");
    c.adam.lr = ar.f64();
    c.adam.beta1 = ar.f64();
    c.adam.beta2 = ar.f64();
    c.adam.epsilon = ar.f64();
    c.adam.step_count = static_cast<std::int64_t>(ar.u64());
    const std::size_t n_blocks = ar.u32();
    c.adam.m.resize(n_blocks);
    c.adam.v.resize(n_blocks);
    for (std::size_t i = 0; i < n_blocks; ++i) {
      const std::size_t len = ar.u64();
      c.adam.m[i].resize(len);
      c.adam.v[i].resize(len);
      for (float& x : c.adam.m[i]) x = ar.f32();
      for (float& x : c.adam.v[i]) x = ar.f32();
    }
    if (ar.remaining() != 0) {
      throw IntegrityError("checkpoint: section ADAM has trailing bytes");
    }
  }
  {
    ByteReader mr(payloads[3].data(), payloads[3].size(), "section META");
    c.epoch = static_cast<std::int64_t>(mr.u64());
  }
  {
    ByteReader lr(payloads[4].data(), payloads[4].size(), "section TLOG");
    const std::size_t rows = lr.u32();
    c.log.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      TrainLogRow row;
      row.epoch = static_cast<int>(lr.u32());
      row.loss = lr.f64();
      row.encoder_psnr = lr.f64();
      row.decoder_psnr = lr.f64();
      c.log.push_back(row);
    }
  }

  // Cross-check stored kernels against the architecture the config implies.
  const ModelParams<float> expect = build_model<float>(c.params.config, 0);
  auto shapes_match = [](const std::vector<ConvKernel<float>>& a,
                         const std::vector<ConvKernel<float>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].out_channels != b[i].out_channels ||
          a[i].in_channels != b[i].in_channels || a[i].kh != b[i].kh ||
          a[i].kw != b[i].kw) {
        return false;
      }
    }
    return true;
  };
  if (!shapes_match(c.params.encoder, expect.encoder) ||
      !shapes_match(c.params.decoder, expect.decoder)) {
    throw IntegrityError("checkpoint: stored kernels do not match the config architecture");
  }
  if (!c.adam.m.empty() && c.adam.m.size() != param_blocks(c.params).size()) {
    throw IntegrityError("checkpoint: Adam state does not match parameter layout");
  }
  return c;
}

// Log rows as CSV ("inf" for perfect reconstructions).
inline void write_train_log_csv(const std::vector<TrainLogRow>& log,
                                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "epoch,loss,enc_psnr,dec_psnr\n";
  char buf[160];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", row.epoch, row.loss,
                  row.encoder_psnr, row.decoder_psnr);
    out << buf;
  }
}

}  // namespace stegnet
