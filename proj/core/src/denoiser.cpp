#include "bidgen/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

namespace {

/// Flat-parameter offsets, derived from the config in declaration order:
/// timestep MLP, condition MLP, null embedding, then per block
/// (conv1, gn1, emb_proj, conv2, gn2, [skip]), then the 1x1 output head.
struct Layout {
  struct BlockOffsets {
    int c_in = 0, c_out = 0;
    std::size_t conv1_w = 0, conv1_b = 0;
    std::size_t gn1_gamma = 0, gn1_beta = 0;
    std::size_t emb_w = 0, emb_b = 0;
    std::size_t conv2_w = 0, conv2_b = 0;
    std::size_t gn2_gamma = 0, gn2_beta = 0;
    bool has_skip = false;
    std::size_t skip_w = 0, skip_b = 0;
  };

  std::size_t t_w1 = 0, t_b1 = 0, t_w2 = 0, t_b2 = 0;
  std::size_t c_w1 = 0, c_b1 = 0, c_w2 = 0, c_b2 = 0;
  std::size_t null_emb = 0;
  std::vector<BlockOffsets> blocks;
  std::size_t out_w = 0, out_b = 0;
  std::size_t total = 0;

  explicit Layout(const DenoiserConfig& cfg) {
    std::size_t p = 0;
    auto take = [&p](std::size_t n) {
      const std::size_t at = p;
      p += n;
      return at;
    };
    const std::size_t E = cfg.embed_dim;
    const std::size_t H = cfg.embed_hidden;
    t_w1 = take(H * E);
    t_b1 = take(H);
    t_w2 = take(E * H);
    t_b2 = take(E);
    c_w1 = take(H * cfg.cond_dim);
    c_b1 = take(H);
    c_w2 = take(E * H);
    c_b2 = take(E);
    null_emb = take(E);

    const std::size_t ks = cfg.kernel_size;
    for (int b = 0; b < cfg.n_blocks; ++b) {
      BlockOffsets blk;
      blk.c_in = b == 0 ? cfg.D : cfg.block_channels(b - 1);
      blk.c_out = cfg.block_channels(b);
      const std::size_t ci = blk.c_in, co = blk.c_out;
      blk.conv1_w = take(co * ci * ks);
      blk.conv1_b = take(co);
      blk.gn1_gamma = take(co);
      blk.gn1_beta = take(co);
      blk.emb_w = take(co * 2 * E);
      blk.emb_b = take(co);
      blk.conv2_w = take(co * co * ks);
      blk.conv2_b = take(co);
      blk.gn2_gamma = take(co);
      blk.gn2_beta = take(co);
      blk.has_skip = ci != co;
      if (blk.has_skip) {
        blk.skip_w = take(co * ci);
        blk.skip_b = take(co);
      }
      blocks.push_back(blk);
    }
    const std::size_t c_last = blocks.back().c_out;
    out_w = take(static_cast<std::size_t>(cfg.D) * c_last);
    out_b = take(cfg.D);
    total = p;
  }
};

/// Per-block activation buffers kept for the backward pass.
struct BlockTrace {
  std::vector<double> in;      // c_in x T
  std::vector<double> u1;      // conv1 out, c x T
  std::vector<double> u2;      // gn1 out
  nn::GroupNormCache gn1;
  std::vector<double> u3;      // mish(u2) + emb bias
  std::vector<double> u4;      // conv2 out
  std::vector<double> u5;      // gn2 out
  nn::GroupNormCache gn2;
  std::vector<double> g;       // per-channel embedding bias
};

/// Buffers are resized, never shrunk, so a trace reused across calls stops
/// allocating after the first forward.
struct ForwardTrace {
  std::vector<double> t_feats, t_hidden_pre, t_hidden, t_emb;
  std::vector<double> c_input, c_hidden_pre, c_hidden, c_emb;
  std::vector<double> embed;  // concat(t_emb, c_emb)
  bool used_null = false;
  std::vector<BlockTrace> blocks;
  std::vector<double> h_work;
  std::vector<double> h_last;  // c_last x T
  std::vector<double> out;     // D x T channel-major
};

void transpose_td_to_ct(const double* td, int T, int D, double* ct) {
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) ct[static_cast<std::size_t>(d) * T + t] = td[t * D + d];
}

void transpose_ct_to_td(const double* ct, int T, int D, double* td) {
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) td[t * D + d] = ct[static_cast<std::size_t>(d) * T + t];
}

void forward_impl(const DenoiserParams& params, const Layout& L, const double* x_ct, int k,
                  const double* y, ForwardTrace& tr) {
  const auto& cfg = params.config;
  const double* w = params.w.data();
  const int T = cfg.T;
  const int E = cfg.embed_dim;
  const int H = cfg.embed_hidden;

  tr.t_feats.resize(E);
  nn::sinusoidal_features(static_cast<double>(k), E, tr.t_feats.data());
  tr.t_hidden_pre.resize(H);
  nn::linear_forward(tr.t_feats.data(), w + L.t_w1, w + L.t_b1, E, H,
                     tr.t_hidden_pre.data());
  tr.t_hidden.resize(H);
  nn::mish_forward(tr.t_hidden_pre.data(), H, tr.t_hidden.data());
  tr.t_emb.resize(E);
  nn::linear_forward(tr.t_hidden.data(), w + L.t_w2, w + L.t_b2, H, E, tr.t_emb.data());

  tr.used_null = y == nullptr;
  tr.c_emb.resize(E);
  if (tr.used_null) {
    std::copy(w + L.null_emb, w + L.null_emb + E, tr.c_emb.begin());
  } else {
    tr.c_input.assign(y, y + cfg.cond_dim);
    tr.c_hidden_pre.resize(H);
    nn::linear_forward(y, w + L.c_w1, w + L.c_b1, cfg.cond_dim, H, tr.c_hidden_pre.data());
    tr.c_hidden.resize(H);
    nn::mish_forward(tr.c_hidden_pre.data(), H, tr.c_hidden.data());
    nn::linear_forward(tr.c_hidden.data(), w + L.c_w2, w + L.c_b2, H, E, tr.c_emb.data());
  }

  tr.embed.resize(2 * E);
  std::copy(tr.t_emb.begin(), tr.t_emb.end(), tr.embed.begin());
  std::copy(tr.c_emb.begin(), tr.c_emb.end(), tr.embed.begin() + E);

  tr.blocks.resize(cfg.n_blocks);
  tr.h_work.assign(x_ct, x_ct + static_cast<std::size_t>(cfg.D) * T);
  std::vector<double>& h = tr.h_work;

  for (int b = 0; b < cfg.n_blocks; ++b) {
    const auto& blk = L.blocks[b];
    auto& bt = tr.blocks[b];
    const int ci = blk.c_in, co = blk.c_out;
    const std::size_t n_out = static_cast<std::size_t>(co) * T;

    bt.in = h;
    bt.u1.resize(n_out);
    nn::conv1d_forward(bt.in.data(), w + blk.conv1_w, w + blk.conv1_b, ci, co, T,
                       cfg.kernel_size, bt.u1.data());
    bt.u2.resize(n_out);
    nn::groupnorm_forward(bt.u1.data(), w + blk.gn1_gamma, w + blk.gn1_beta, co, T,
                          cfg.gn_groups, cfg.gn_eps, bt.u2.data(), bt.gn1);

    // Per-channel embedding bias lands on the post-activation signal.
    bt.g.resize(co);
    std::vector<double>& g = bt.g;
    nn::linear_forward(tr.embed.data(), w + blk.emb_w, w + blk.emb_b, 2 * E, co, g.data());
    bt.u3.resize(n_out);
    for (int c = 0; c < co; ++c) {
      const double* src = bt.u2.data() + static_cast<std::size_t>(c) * T;
      double* dst = bt.u3.data() + static_cast<std::size_t>(c) * T;
      const double gc = g[c];
      for (int t = 0; t < T; ++t) dst[t] = nn::mish(src[t]) + gc;
    }

    bt.u4.resize(n_out);
    nn::conv1d_forward(bt.u3.data(), w + blk.conv2_w, w + blk.conv2_b, co, co, T,
                       cfg.kernel_size, bt.u4.data());
    bt.u5.resize(n_out);
    nn::groupnorm_forward(bt.u4.data(), w + blk.gn2_gamma, w + blk.gn2_beta, co, T,
                          cfg.gn_groups, cfg.gn_eps, bt.u5.data(), bt.gn2);

    h.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i) h[i] = nn::mish(bt.u5[i]);
    if (blk.has_skip) {
      // 1x1 projection of the block input.
      for (int c = 0; c < co; ++c) {
        const double* wrow = w + blk.skip_w + static_cast<std::size_t>(c) * ci;
        double* dst = h.data() + static_cast<std::size_t>(c) * T;
        const double bias = w[blk.skip_b + c];
        for (int t = 0; t < T; ++t) {
          double acc = bias;
          for (int i = 0; i < ci; ++i) acc += wrow[i] * bt.in[static_cast<std::size_t>(i) * T + t];
          dst[t] += acc;
        }
      }
    } else {
      for (std::size_t i = 0; i < n_out; ++i) h[i] += bt.in[i];
    }
  }

  tr.h_last = h;
  const int c_last = L.blocks.back().c_out;
  tr.out.resize(static_cast<std::size_t>(cfg.D) * T);
  for (int d = 0; d < cfg.D; ++d) {
    const double* wrow = w + L.out_w + static_cast<std::size_t>(d) * c_last;
    double* dst = tr.out.data() + static_cast<std::size_t>(d) * T;
    const double bias = w[L.out_b + d];
    for (int t = 0; t < T; ++t) {
      double acc = bias;
      for (int c = 0; c < c_last; ++c) acc += wrow[c] * h[static_cast<std::size_t>(c) * T + t];
      dst[t] = acc;
    }
  }
}

struct BackwardScratch {
  std::vector<double> dh, d_in, d_u5, d_u4, d_u3, d_u2, d_u1, d_g;
  std::vector<double> d_embed, d_t_hidden, d_t_pre, d_c_hidden, d_c_pre;
};

/// Backward through forward_impl. d_out is D x T channel-major; gradients are
/// accumulated into grad (same layout as params.w).
void backward_impl(const DenoiserParams& params, const Layout& L, const ForwardTrace& tr,
                   const double* d_out, double* grad, BackwardScratch& s) {
  const auto& cfg = params.config;
  const double* w = params.w.data();
  const int T = cfg.T;
  const int E = cfg.embed_dim;
  const int H = cfg.embed_hidden;
  const int c_last = L.blocks.back().c_out;

  // Output head.
  std::vector<double>& dh = s.dh;
  dh.assign(static_cast<std::size_t>(c_last) * T, 0.0);
  for (int d = 0; d < cfg.D; ++d) {
    const double* g = d_out + static_cast<std::size_t>(d) * T;
    const double* wrow = w + L.out_w + static_cast<std::size_t>(d) * c_last;
    double* dW = grad + L.out_w + static_cast<std::size_t>(d) * c_last;
    double gb = 0.0;
    for (int t = 0; t < T; ++t) gb += g[t];
    grad[L.out_b + d] += gb;
    for (int c = 0; c < c_last; ++c) {
      const double* hrow = tr.h_last.data() + static_cast<std::size_t>(c) * T;
      double s = 0.0;
      for (int t = 0; t < T; ++t) s += g[t] * hrow[t];
      dW[c] += s;
      double* dhrow = dh.data() + static_cast<std::size_t>(c) * T;
      const double wv = wrow[c];
      for (int t = 0; t < T; ++t) dhrow[t] += wv * g[t];
    }
  }

  std::vector<double>& d_embed = s.d_embed;
  d_embed.assign(2 * E, 0.0);

  for (int b = cfg.n_blocks - 1; b >= 0; --b) {
    const auto& blk = L.blocks[b];
    const auto& bt = tr.blocks[b];
    const int ci = blk.c_in, co = blk.c_out;
    const std::size_t n_out = static_cast<std::size_t>(co) * T;
    const std::size_t n_in = static_cast<std::size_t>(ci) * T;

    std::vector<double>& d_in = s.d_in;
    d_in.assign(n_in, 0.0);

    // Residual split: dh flows into mish(u5) and the skip path.
    if (blk.has_skip) {
      for (int c = 0; c < co; ++c) {
        const double* g = dh.data() + static_cast<std::size_t>(c) * T;
        const double* wrow = w + blk.skip_w + static_cast<std::size_t>(c) * ci;
        double* dWrow = grad + blk.skip_w + static_cast<std::size_t>(c) * ci;
        double gb = 0.0;
        for (int t = 0; t < T; ++t) gb += g[t];
        grad[blk.skip_b + c] += gb;
        for (int i = 0; i < ci; ++i) {
          const double* irow = bt.in.data() + static_cast<std::size_t>(i) * T;
          double s = 0.0;
          for (int t = 0; t < T; ++t) s += g[t] * irow[t];
          dWrow[i] += s;
          double* drow = d_in.data() + static_cast<std::size_t>(i) * T;
          const double wv = wrow[i];
          for (int t = 0; t < T; ++t) drow[t] += wv * g[t];
        }
      }
    } else {
      for (std::size_t i = 0; i < n_out; ++i) d_in[i] += dh[i];
    }

    // mish(u5)
    std::vector<double>& d_u5 = s.d_u5;
    d_u5.assign(n_out, 0.0);
    nn::mish_backward(bt.u5.data(), dh.data(), n_out, d_u5.data());

    // gn2
    std::vector<double>& d_u4 = s.d_u4;
    d_u4.assign(n_out, 0.0);
    nn::groupnorm_backward(d_u5.data(), w + blk.gn2_gamma, co, T, cfg.gn_groups, bt.gn2,
                           grad + blk.gn2_gamma, grad + blk.gn2_beta, d_u4.data());

    // conv2
    std::vector<double>& d_u3 = s.d_u3;
    d_u3.assign(n_out, 0.0);
    nn::conv1d_backward(bt.u3.data(), w + blk.conv2_w, d_u4.data(), co, co, T,
                        cfg.kernel_size, grad + blk.conv2_w, grad + blk.conv2_b,
                        d_u3.data());

    // Embedding bias: per-channel sum of d_u3, through the projection.
    std::vector<double>& d_g = s.d_g;
    d_g.assign(co, 0.0);
    for (int c = 0; c < co; ++c) {
      const double* g = d_u3.data() + static_cast<std::size_t>(c) * T;
      double s = 0.0;
      for (int t = 0; t < T; ++t) s += g[t];
      d_g[c] = s;
    }
    nn::linear_backward(tr.embed.data(), w + blk.emb_w, d_g.data(), 2 * E, co,
                        grad + blk.emb_w, grad + blk.emb_b, d_embed.data());

    // mish(u2)
    std::vector<double>& d_u2 = s.d_u2;
    d_u2.assign(n_out, 0.0);
    nn::mish_backward(bt.u2.data(), d_u3.data(), n_out, d_u2.data());

    // gn1
    std::vector<double>& d_u1 = s.d_u1;
    d_u1.assign(n_out, 0.0);
    nn::groupnorm_backward(d_u2.data(), w + blk.gn1_gamma, co, T, cfg.gn_groups, bt.gn1,
                           grad + blk.gn1_gamma, grad + blk.gn1_beta, d_u1.data());

    // conv1
    nn::conv1d_backward(bt.in.data(), w + blk.conv1_w, d_u1.data(), ci, co, T,
                        cfg.kernel_size, grad + blk.conv1_w, grad + blk.conv1_b,
                        d_in.data());

    dh.swap(d_in);
  }

  // Embedding MLPs (condition first: its gradient is the tail of d_embed).
  const double* d_t_emb = d_embed.data();
  const double* d_c_emb = d_embed.data() + E;

  if (tr.used_null) {
    for (int i = 0; i < E; ++i) grad[L.null_emb + i] += d_c_emb[i];
  } else {
    std::vector<double>& d_c_hidden = s.d_c_hidden;
    d_c_hidden.assign(H, 0.0);
    nn::linear_backward(tr.c_hidden.data(), w + L.c_w2, d_c_emb, H, E, grad + L.c_w2,
                        grad + L.c_b2, d_c_hidden.data());
    std::vector<double>& d_c_pre = s.d_c_pre;
    d_c_pre.assign(H, 0.0);
    nn::mish_backward(tr.c_hidden_pre.data(), d_c_hidden.data(), H, d_c_pre.data());
    nn::linear_backward(tr.c_input.data(), w + L.c_w1, d_c_pre.data(), cfg.cond_dim, H,
                        grad + L.c_w1, grad + L.c_b1, nullptr);
  }

  std::vector<double>& d_t_hidden = s.d_t_hidden;
  d_t_hidden.assign(H, 0.0);
  nn::linear_backward(tr.t_hidden.data(), w + L.t_w2, d_t_emb, H, E, grad + L.t_w2,
                      grad + L.t_b2, d_t_hidden.data());
  std::vector<double>& d_t_pre = s.d_t_pre;
  d_t_pre.assign(H, 0.0);
  nn::mish_backward(tr.t_hidden_pre.data(), d_t_hidden.data(), H, d_t_pre.data());
  nn::linear_backward(tr.t_feats.data(), w + L.t_w1, d_t_pre.data(), E, H, grad + L.t_w1,
                      grad + L.t_b1, nullptr);
}

}  // namespace

void DenoiserConfig::validate() const {
  if (T < 2) fail(Errc::invalid_config, "denoiser: T must be >= 2");
  if (D < 1) fail(Errc::invalid_config, "denoiser: D must be >= 1");
  if (n_blocks < 1) fail(Errc::invalid_config, "denoiser: n_blocks must be >= 1");
  if (channels.empty()) fail(Errc::invalid_config, "denoiser: channels must be non-empty");
  for (int c : channels)
    if (c < 1) fail(Errc::invalid_config, "denoiser: channel widths must be positive");
  if (embed_dim < 2 || embed_dim % 2 != 0)
    fail(Errc::invalid_config, "denoiser: embed_dim must be even and >= 2");
  if (embed_hidden < 1) fail(Errc::invalid_config, "denoiser: embed_hidden must be >= 1");
  if (cond_dim < 1) fail(Errc::invalid_config, "denoiser: cond_dim must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    fail(Errc::invalid_config, "denoiser: dropout_p must be in [0,1)");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    fail(Errc::invalid_config, "denoiser: kernel_size must be odd");
  if (gn_groups < 1) fail(Errc::invalid_config, "denoiser: gn_groups must be >= 1");
  for (int b = 0; b < n_blocks; ++b)
    if (block_channels(b) % gn_groups != 0)
      fail(Errc::invalid_config, "denoiser: every block width must divide by gn_groups");
}

int DenoiserConfig::block_channels(int b) const {
  const int i = std::min<int>(b, static_cast<int>(channels.size()) - 1);
  return channels[i];
}

std::size_t DenoiserConfig::param_count() const { return Layout(*this).total; }

DenoiserParams init_denoiser(const DenoiserConfig& config, Rng& rng) {
  config.validate();
  const Layout L(config);
  DenoiserParams p;
  p.config = config;
  p.w.assign(L.total, 0.0);

  auto uniform_fill = [&](std::size_t at, std::size_t n, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) p.w[at + i] = rng.uniform(-s, s);
  };

  const std::size_t E = config.embed_dim;
  const std::size_t H = config.embed_hidden;
  uniform_fill(L.t_w1, H * E, E);
  uniform_fill(L.t_b1, H, E);
  uniform_fill(L.t_w2, E * H, H);
  uniform_fill(L.t_b2, E, H);
  uniform_fill(L.c_w1, H * config.cond_dim, config.cond_dim);
  uniform_fill(L.c_b1, H, config.cond_dim);
  uniform_fill(L.c_w2, E * H, H);
  uniform_fill(L.c_b2, E, H);
  uniform_fill(L.null_emb, E, E);

  const std::size_t ks = config.kernel_size;
  for (const auto& blk : L.blocks) {
    const std::size_t ci = blk.c_in, co = blk.c_out;
    uniform_fill(blk.conv1_w, co * ci * ks, ci * ks);
    uniform_fill(blk.conv1_b, co, ci * ks);
    std::fill(p.w.begin() + blk.gn1_gamma, p.w.begin() + blk.gn1_gamma + co, 1.0);
    std::fill(p.w.begin() + blk.gn1_beta, p.w.begin() + blk.gn1_beta + co, 0.0);
    uniform_fill(blk.emb_w, co * 2 * E, 2 * E);
    uniform_fill(blk.emb_b, co, 2 * E);
    uniform_fill(blk.conv2_w, co * co * ks, co * ks);
    uniform_fill(blk.conv2_b, co, co * ks);
    std::fill(p.w.begin() + blk.gn2_gamma, p.w.begin() + blk.gn2_gamma + co, 1.0);
    std::fill(p.w.begin() + blk.gn2_beta, p.w.begin() + blk.gn2_beta + co, 0.0);
    if (blk.has_skip) {
      uniform_fill(blk.skip_w, co * ci, ci);
      uniform_fill(blk.skip_b, co, ci);
    }
  }
  const std::size_t c_last = L.blocks.back().c_out;
  uniform_fill(L.out_w, static_cast<std::size_t>(config.D) * c_last, c_last);
  uniform_fill(L.out_b, config.D, c_last);
  return p;
}

void predict_noise(const DenoiserParams& params, const double* x_k, int k, const double* y,
                   double* out) {
  const auto& cfg = params.config;
  if (k < 1) fail(Errc::invalid_argument, "predict_noise: k must be >= 1");
  const std::size_t n = static_cast<std::size_t>(cfg.T) * cfg.D;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x_k[i])) fail(Errc::non_finite, "predict_noise: non-finite input");

  const Layout L(cfg);
  thread_local ForwardTrace tr;
  thread_local std::vector<double> x_ct;
  x_ct.resize(n);
  transpose_td_to_ct(x_k, cfg.T, cfg.D, x_ct.data());
  forward_impl(params, L, x_ct.data(), k, y, tr);
  transpose_ct_to_td(tr.out.data(), cfg.T, cfg.D, out);
}

std::vector<double> predict_noise(const DenoiserParams& params,
                                  const std::vector<double>& x_k, int k, const double* y) {
  const auto& cfg = params.config;
  if (x_k.size() != static_cast<std::size_t>(cfg.T) * cfg.D)
    fail(Errc::shape_mismatch, "predict_noise: input size != T*D");
  std::vector<double> out(x_k.size());
  predict_noise(params, x_k.data(), k, y, out.data());
  return out;
}

double denoiser_loss(const DenoiserParams& params, const NoiseSchedule& schedule,
                     const DenoiserSample& sample) {
  const auto& cfg = params.config;
  const std::size_t n = static_cast<std::size_t>(cfg.T) * cfg.D;
  if (sample.x0.size() != n || sample.eps.size() != n)
    fail(Errc::shape_mismatch, "denoiser_loss: sample size != T*D");
  if (!sample.cond.empty() && sample.cond.size() != static_cast<std::size_t>(cfg.cond_dim))
    fail(Errc::shape_mismatch, "denoiser_loss: cond size != cond_dim");

  std::vector<double> x_k(n);
  forward_sample(sample.x0.data(), sample.eps.data(), n, sample.k, schedule, x_k.data());

  std::vector<double> pred(n);
  predict_noise(params, x_k.data(), sample.k,
                sample.cond.empty() ? nullptr : sample.cond.data(), pred.data());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - sample.eps[i];
    loss += d * d;
  }
  return loss / static_cast<double>(n);
}

double denoiser_loss_grad(const DenoiserParams& params, const NoiseSchedule& schedule,
                          const DenoiserSample& sample, double weight,
                          std::vector<double>& grad_accum) {
  const auto& cfg = params.config;
  const std::size_t n = static_cast<std::size_t>(cfg.T) * cfg.D;
  if (sample.x0.size() != n || sample.eps.size() != n)
    fail(Errc::shape_mismatch, "denoiser_loss_grad: sample size != T*D");
  if (grad_accum.size() != params.w.size())
    fail(Errc::shape_mismatch, "denoiser_loss_grad: grad buffer size mismatch");

  thread_local std::vector<double> x_k, x_ct, eps_ct, d_out;
  thread_local ForwardTrace tr;
  thread_local BackwardScratch scratch;

  x_k.resize(n);
  forward_sample(sample.x0.data(), sample.eps.data(), n, sample.k, schedule, x_k.data());

  const Layout L(cfg);
  x_ct.resize(n);
  transpose_td_to_ct(x_k.data(), cfg.T, cfg.D, x_ct.data());
  forward_impl(params, L, x_ct.data(), sample.k,
               sample.cond.empty() ? nullptr : sample.cond.data(), tr);

  // Loss and its gradient w.r.t. the network output (channel-major).
  eps_ct.resize(n);
  transpose_td_to_ct(sample.eps.data(), cfg.T, cfg.D, eps_ct.data());
  double loss = 0.0;
  d_out.resize(n);
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = tr.out[i] - eps_ct[i];
    loss += d * d;
    d_out[i] = weight * scale * d;
  }
  loss /= static_cast<double>(n);

  backward_impl(params, L, tr, d_out.data(), grad_accum.data(), scratch);
  return loss;
}

DenoiserTrainResult train_denoiser(const TrainSet& data, const NoiseSchedule& schedule,
                                   const DenoiserConfig& config,
                                   const DenoiserTrainHyper& hyper) {
  config.validate();
  schedule.validate();
  if (data.size() == 0) fail(Errc::invalid_argument, "train_denoiser: empty dataset");
  if (data.T != config.T || data.D != config.D)
    fail(Errc::shape_mismatch, "train_denoiser: dataset T/D disagree with config");
  if (data.cond_dim != config.cond_dim)
    fail(Errc::shape_mismatch, "train_denoiser: dataset cond_dim disagrees with config");

  const std::size_t n_data = data.size();
  const std::size_t n_elem = static_cast<std::size_t>(config.T) * config.D;
  const int batch_size =
      std::max<int>(1, static_cast<int>(std::llround(hyper.batch_frac * n_data)));

  Rng rng(derive_seed(hyper.seed, 0xd1f));
  DenoiserParams params = init_denoiser(config, rng);

  nn::AdamState adam;
  adam.init(params.w.size());
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = hyper.lr;

  nn::Ema ema;
  ema.decay = hyper.ema_decay;
  ema.period = hyper.ema_period;
  ema.init(params.w.size());

  DenoiserTrainResult result;
  result.loss_history.reserve(hyper.epochs);

  const std::size_t n_chunks = std::max(1, hyper.grad_chunks);
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<double> grad(params.w.size(), 0.0);

  std::vector<DenoiserSample> batch(batch_size);

  for (int step = 0; step < hyper.epochs; ++step) {
    // All randomness is drawn up front on one thread in a fixed order, so
    // chunked workers never touch the stream.
    for (int i = 0; i < batch_size; ++i) {
      auto& s = batch[i];
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(n_data) - 1));
      s.x0 = data.states[idx];
      s.k = static_cast<int>(rng.uniform_int(1, schedule.K));
      s.eps.resize(n_elem);
      for (auto& e : s.eps) e = rng.normal();
      const bool drop = rng.uniform() < config.dropout_p;
      s.cond = drop ? std::vector<double>{} : data.conds[idx];
    }

    const double weight = 1.0 / batch_size;
    parallel_chunks(batch_size, n_chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
      auto& cg = chunk_grads[c];
      if (cg.size() != params.w.size()) cg.assign(params.w.size(), 0.0);
      else std::fill(cg.begin(), cg.end(), 0.0);
      double loss = 0.0;
      for (std::size_t i = b; i < e; ++i)
        loss += denoiser_loss_grad(params, schedule, batch[i], weight, cg);
      chunk_loss[c] = loss;
    });

    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      loss += chunk_loss[c];
      chunk_loss[c] = 0.0;
      if (chunk_grads[c].empty()) continue;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += chunk_grads[c][i];
    }
    loss /= batch_size;
    result.loss_history.push_back(loss);

    if (!std::isfinite(loss)) {
      double gnorm = 0.0;
      for (double g : grad) gnorm += g * g;
      fail(Errc::non_finite, "train_denoiser: non-finite loss at step " +
                                 std::to_string(step) + " (lr=" + format_double(hyper.lr) +
                                 ", grad_norm=" + format_double(std::sqrt(gnorm)) + ")");
    }

    nn::adam_step(params.w, grad, adam, adam_cfg);
    ema.observe(params.w);
  }

  result.last = params;
  result.params = params;
  if (ema.started()) result.params.w = ema.snapshot();
  return result;
}

double finite_diff_check_denoiser(const DenoiserParams& params, const NoiseSchedule& schedule,
                                  const DenoiserSample& sample, int n_coords,
                                  std::uint64_t coord_seed, double h) {
  auto loss = [&](const std::vector<double>& w) {
    DenoiserParams p{params.config, w};
    return denoiser_loss(p, schedule, sample);
  };
  auto grad = [&](const std::vector<double>& w) {
    DenoiserParams p{params.config, w};
    std::vector<double> g(w.size(), 0.0);
    denoiser_loss_grad(p, schedule, sample, 1.0, g);
    return g;
  };
  return nn::finite_diff_check(loss, grad, params.w, n_coords, coord_seed, h);
}

}  // namespace bidgen
