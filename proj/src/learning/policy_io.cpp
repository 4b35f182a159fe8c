#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hapcompass/core/errors.hpp"
#include "hapcompass/learning/policy.hpp"

namespace hapcompass::learning {

namespace {

constexpr char kMagic[8] = {'H', 'C', 'P', 'O', 'L', 'I', 'C', 'Y'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void bytes(const std::string& s) { buf_ += s; }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  std::uint8_t u8() {
    need(1, "byte");
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8, "f64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string bytes(std::size_t n) {
    need(n, "string");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (buf_.size() - pos_ < n) throw DecodeError(pos_, std::string("policy file truncated reading ") + what);
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

void write_group(Writer& w, const std::vector<Dense>& layers) {
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.u8(l.tanh ? 1 : 0);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
  }
}

std::vector<Dense> read_group(Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > 64) throw DecodeError(r.pos() - 4, "implausible layer count");
  std::vector<Dense> layers(n);
  for (auto& l : layers) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows > 1u << 16 || cols > 1u << 16) throw DecodeError(r.pos() - 8, "implausible layer shape");
    const std::uint8_t act = r.u8();
    if (act > 1) throw DecodeError(r.pos() - 1, "bad activation flag");
    l.tanh = act == 1;
    l.weight.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) l.weight(i, j) = r.f64();
    }
    l.bias.resize(rows);
    for (std::uint32_t i = 0; i < rows; ++i) l.bias(i) = r.f64();
  }
  return layers;
}

}  // namespace

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  policy.validate();
  Writer w;
  w.bytes(std::string(kMagic, sizeof kMagic));
  w.u32(kPolicyFileVersion);
  const json header{{"hidden", policy.shape.hidden},
                    {"horizon", policy.shape.horizon},
                    {"replan", policy.shape.replan},
                    {"config", policy.provenance}};
  const std::string text = header.dump();
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (double v : policy.norm.in_mean) w.f64(v);
  for (double v : policy.norm.in_std) w.f64(v);
  for (double v : policy.norm.out_mean) w.f64(v);
  for (double v : policy.norm.out_std) w.f64(v);
  write_group(w, policy.net.tactile);
  write_group(w, policy.net.proprio);
  write_group(w, policy.net.decoder);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw DecodeError(0, "not a policy file");
  const std::uint32_t version = r.u32();
  if (version != kPolicyFileVersion) {
    throw DecodeError(8, "unsupported policy file version " + std::to_string(version));
  }
  const std::uint32_t len = r.u32();
  const std::size_t header_at = r.pos();
  Policy p;
  try {
    const json header = json::parse(r.bytes(len));
    p.shape = {header.at("hidden").get<int>(), header.at("horizon").get<int>(), header.at("replan").get<int>()};
    p.provenance = header.value("config", json::object());
  } catch (const json::exception& e) {
    throw DecodeError(header_at, std::string("bad policy header: ") + e.what());
  }
  for (double& v : p.norm.in_mean) v = r.f64();
  for (double& v : p.norm.in_std) v = r.f64();
  for (double& v : p.norm.out_mean) v = r.f64();
  for (double& v : p.norm.out_std) v = r.f64();
  p.net.tactile = read_group(r);
  p.net.proprio = read_group(r);
  p.net.decoder = read_group(r);
  if (!r.done()) throw DecodeError(r.pos(), "trailing bytes after policy weights");
  try {
    p.shape.validate();
  } catch (const ConfigError& e) {
    throw ShapeError(std::string("policy header: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace hapcompass::learning
