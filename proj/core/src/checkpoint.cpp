#include "bidgen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {
namespace {

constexpr char kMagic[4] = {'B', 'G', 'C', 'P'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64_array(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const char* p, std::size_t n) : p_(p), n_(n) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64_array() {
    const std::uint64_t n = u64();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(p_ + pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(p_ + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ >= n_; }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  unsigned char byte() { return static_cast<unsigned char>(p_[pos_++]); }
  void need(std::uint64_t n) {
    if (pos_ + n > n_) fail(Errc::truncated_file, "checkpoint section underrun");
  }
  const char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::string encode_denoiser(const DenoiserParams& d, const NoiseSchedule& s) {
  Writer w;
  const auto& c = d.config;
  w.i32(c.T);
  w.i32(c.D);
  w.i32(c.n_blocks);
  w.u64(c.channels.size());
  for (int ch : c.channels) w.i32(ch);
  w.i32(c.embed_dim);
  w.i32(c.embed_hidden);
  w.i32(c.cond_dim);
  w.f64(c.dropout_p);
  w.i32(c.kernel_size);
  w.i32(c.gn_groups);
  w.f64(c.gn_eps);

  w.i32(s.K);
  w.f64(s.gamma);
  w.u32(s.cosine_squared ? 1 : 0);
  w.f64_array(s.alpha_bar);
  w.f64_array(s.beta);
  w.f64_array(s.alpha);

  w.f64_array(d.w);
  return w.data();
}

void decode_denoiser(Reader& r, PolicyBundle& b) {
  DenoiserConfig c;
  c.T = r.i32();
  c.D = r.i32();
  c.n_blocks = r.i32();
  const auto nch = r.u64();
  c.channels.clear();
  for (std::uint64_t i = 0; i < nch; ++i) c.channels.push_back(r.i32());
  c.embed_dim = r.i32();
  c.embed_hidden = r.i32();
  c.cond_dim = r.i32();
  c.dropout_p = r.f64();
  c.kernel_size = r.i32();
  c.gn_groups = r.i32();
  c.gn_eps = r.f64();
  c.validate();

  NoiseSchedule s;
  s.K = r.i32();
  s.gamma = r.f64();
  s.cosine_squared = r.u32() != 0;
  s.alpha_bar = r.f64_array();
  s.beta = r.f64_array();
  s.alpha = r.f64_array();
  s.validate();

  DenoiserParams d;
  d.config = c;
  d.w = r.f64_array();
  if (d.w.size() != c.param_count())
    fail(Errc::truncated_file, "denoiser parameter array length mismatch");
  b.denoiser = std::move(d);
  b.schedule = std::move(s);
}

std::string encode_invdyn(const InvDynParams& p) {
  Writer w;
  const auto& c = p.config;
  w.i32(c.L);
  w.i32(c.D);
  w.i32(c.hidden);
  w.i32(c.action_dim);
  w.f64(c.lambda_max);
  w.f64_array(p.w);
  return w.data();
}

void decode_invdyn(Reader& r, PolicyBundle& b) {
  InvDynConfig c;
  c.L = r.i32();
  c.D = r.i32();
  c.hidden = r.i32();
  c.action_dim = r.i32();
  c.lambda_max = r.f64();
  c.validate();
  InvDynParams p;
  p.config = c;
  p.w = r.f64_array();
  if (p.w.size() != c.param_count())
    fail(Errc::truncated_file, "invdyn parameter array length mismatch");
  b.invdyn = std::move(p);
}

std::string encode_context(const PolicyBundle& b) {
  Writer w;
  w.str(b.conditions.layout.to_string());
  w.f64(b.conditions.cpc_norm.lo);
  w.f64(b.conditions.cpc_norm.hi);
  w.f64(b.conditions.cpc_threshold);
  w.f64(b.conditions.smoothness_threshold);
  w.f64(b.conditions.early_spend_threshold);
  w.f64(b.conditions.returns.r_min);
  w.f64(b.conditions.returns.r_max);
  for (int d = 0; d < BidState::kDim; ++d) w.f64(b.feature_stats.min[d]);
  for (int d = 0; d < BidState::kDim; ++d) w.f64(b.feature_stats.max[d]);
  w.f64(b.sampler.omega);
  w.f64(b.sampler.temperature);
  w.u32(b.sampler.unit_prior ? 1 : 0);
  w.u32(b.sampler.noised_history ? 1 : 0);
  w.u32(b.sampler.clip_x0 ? 1 : 0);
  w.f64(b.sampler.x0_max);
  return w.data();
}

void decode_context(Reader& r, PolicyBundle& b) {
  b.conditions.layout = ConditionLayout::parse(r.str());
  b.conditions.cpc_norm.lo = r.f64();
  b.conditions.cpc_norm.hi = r.f64();
  b.conditions.cpc_threshold = r.f64();
  b.conditions.smoothness_threshold = r.f64();
  b.conditions.early_spend_threshold = r.f64();
  b.conditions.returns.r_min = r.f64();
  b.conditions.returns.r_max = r.f64();
  for (int d = 0; d < BidState::kDim; ++d) b.feature_stats.min[d] = r.f64();
  for (int d = 0; d < BidState::kDim; ++d) b.feature_stats.max[d] = r.f64();
  b.sampler.omega = r.f64();
  b.sampler.temperature = r.f64();
  b.sampler.unit_prior = r.u32() != 0;
  b.sampler.noised_history = r.u32() != 0;
  b.sampler.clip_x0 = r.u32() != 0;
  b.sampler.x0_max = r.f64();
}

}  // namespace

void PolicyBundle::require_generation() const {
  if (!denoiser || !schedule)
    fail(Errc::invalid_argument, "bundle is missing the denoiser/schedule section");
  if (!invdyn)
    fail(Errc::invalid_argument, "bundle is missing the inverse-dynamics section");
  if (denoiser->config.cond_dim != conditions.layout.size())
    fail(Errc::layout_mismatch, "denoiser cond_dim disagrees with the condition layout");
}

void save_bundle(const PolicyBundle& bundle, const std::string& path) {
  Writer file;
  file.raw(kMagic, 4);
  file.u32(kCheckpointVersion);

  auto section = [&file](const char tag[4], const std::string& payload) {
    file.raw(tag, 4);
    file.u64(payload.size());
    file.raw(payload.data(), payload.size());
  };

  section("CTXT", encode_context(bundle));
  if (bundle.denoiser) {
    if (!bundle.schedule)
      fail(Errc::invalid_argument, "save_bundle: denoiser requires a schedule");
    section("DNSR", encode_denoiser(*bundle.denoiser, *bundle.schedule));
  }
  if (bundle.invdyn) section("IDYN", encode_invdyn(*bundle.invdyn));

  const std::uint64_t checksum = fnv1a64(file.data().data(), file.data().size());
  Writer tail;
  tail.u64(checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  out.write(file.data().data(), static_cast<std::streamsize>(file.data().size()));
  out.write(tail.data().data(), static_cast<std::streamsize>(tail.data().size()));
  out.flush();
  if (!out) fail(Errc::io_error, "write failure on '" + path + "'");
}

PolicyBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < 4 + 4 + 8) fail(Errc::truncated_file, "checkpoint too short");
  if (std::memcmp(data.data(), kMagic, 4) != 0)
    fail(Errc::version_mismatch, "bad checkpoint magic");

  const std::size_t body_len = data.size() - 8;
  Reader tail(data.data() + body_len, 8);
  const std::uint64_t stored = tail.u64();
  const std::uint64_t actual = fnv1a64(data.data(), body_len);
  if (stored != actual) fail(Errc::checksum_failure, "checkpoint checksum mismatch");

  Reader r(data.data() + 4, body_len - 4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail(Errc::version_mismatch, "unsupported checkpoint version " + std::to_string(version));

  PolicyBundle bundle;
  bool saw_context = false;
  while (!r.done()) {
    if (r.remaining() < 12) fail(Errc::truncated_file, "dangling section header");
    const std::string tag = r.raw(4);
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) fail(Errc::truncated_file, "section length overruns file");
    const std::string payload = r.raw(len);
    Reader section(payload.data(), payload.size());
    if (tag == "CTXT") {
      decode_context(section, bundle);
      saw_context = true;
    } else if (tag == "DNSR") {
      decode_denoiser(section, bundle);
    } else if (tag == "IDYN") {
      decode_invdyn(section, bundle);
    } else {
      // Unknown sections are skipped for forward compatibility.
      log_warn("load_bundle: skipping unknown section '" + tag + "'");
    }
  }
  if (!saw_context) fail(Errc::truncated_file, "checkpoint missing context section");
  if (bundle.denoiser &&
      bundle.denoiser->config.cond_dim != bundle.conditions.layout.size())
    fail(Errc::layout_mismatch,
         "checkpoint denoiser cond_dim disagrees with stored condition layout");
  return bundle;
}

void merge_invdyn(PolicyBundle& dst, const PolicyBundle& other) {
  if (!other.invdyn) fail(Errc::invalid_argument, "merge_invdyn: no invdyn section");
  if (dst.conditions.layout.hash() != other.conditions.layout.hash())
    fail(Errc::layout_mismatch, "merge_invdyn: condition layouts differ");
  dst.invdyn = other.invdyn;
}

}  // namespace bidgen
