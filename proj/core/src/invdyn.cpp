#include "bidgen/invdyn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bidgen/errors.hpp"
#include "bidgen/nn.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

namespace {

struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;
  std::size_t total = 0;

  explicit Layout(const InvDynConfig& cfg) {
    const std::size_t in = cfg.input_dim();
    const std::size_t h = cfg.hidden;
    const std::size_t a = cfg.action_dim;
    std::size_t p = 0;
    auto take = [&p](std::size_t n) {
      const std::size_t at = p;
      p += n;
      return at;
    };
    w1 = take(h * in);
    b1 = take(h);
    w2 = take(h * h);
    b2 = take(h);
    w3 = take(a * h);
    b3 = take(a);
    total = p;
  }
};

struct Trace {
  std::vector<double> h1_pre, h1, h2_pre, h2, out;
};

void forward_impl(const InvDynParams& p, const Layout& L, const double* window, Trace& tr) {
  const auto& cfg = p.config;
  const double* w = p.w.data();
  const int in = cfg.input_dim();
  const int H = cfg.hidden;
  tr.h1_pre.resize(H);
  nn::linear_forward(window, w + L.w1, w + L.b1, in, H, tr.h1_pre.data());
  tr.h1.resize(H);
  nn::mish_forward(tr.h1_pre.data(), H, tr.h1.data());
  tr.h2_pre.resize(H);
  nn::linear_forward(tr.h1.data(), w + L.w2, w + L.b2, H, H, tr.h2_pre.data());
  tr.h2.resize(H);
  nn::mish_forward(tr.h2_pre.data(), H, tr.h2.data());
  tr.out.resize(cfg.action_dim);
  nn::linear_forward(tr.h2.data(), w + L.w3, w + L.b3, H, cfg.action_dim, tr.out.data());
}

void backward_impl(const InvDynParams& p, const Layout& L, const double* window,
                   const Trace& tr, const double* d_out, double* grad) {
  const auto& cfg = p.config;
  const double* w = p.w.data();
  const int in = cfg.input_dim();
  const int H = cfg.hidden;
  std::vector<double> d_h2(H, 0.0);
  nn::linear_backward(tr.h2.data(), w + L.w3, d_out, H, cfg.action_dim, grad + L.w3,
                      grad + L.b3, d_h2.data());
  std::vector<double> d_h2_pre(H, 0.0);
  nn::mish_backward(tr.h2_pre.data(), d_h2.data(), H, d_h2_pre.data());
  std::vector<double> d_h1(H, 0.0);
  nn::linear_backward(tr.h1.data(), w + L.w2, d_h2_pre.data(), H, H, grad + L.w2,
                      grad + L.b2, d_h1.data());
  std::vector<double> d_h1_pre(H, 0.0);
  nn::mish_backward(tr.h1_pre.data(), d_h1.data(), H, d_h1_pre.data());
  nn::linear_backward(window, w + L.w1, d_h1_pre.data(), in, H, grad + L.w1, grad + L.b1,
                      nullptr);
}

}  // namespace

void InvDynConfig::validate() const {
  if (L < 0) fail(Errc::invalid_config, "invdyn: L must be >= 0");
  if (D < 1) fail(Errc::invalid_config, "invdyn: D must be >= 1");
  if (hidden < 1) fail(Errc::invalid_config, "invdyn: hidden must be >= 1");
  if (action_dim < 1) fail(Errc::invalid_config, "invdyn: action_dim must be >= 1");
  if (!(lambda_max > 0.0)) fail(Errc::invalid_config, "invdyn: lambda_max must be > 0");
}

std::size_t InvDynConfig::param_count() const { return Layout(*this).total; }

InvDynParams init_invdyn(const InvDynConfig& config, Rng& rng) {
  config.validate();
  const Layout L(config);
  InvDynParams p;
  p.config = config;
  p.w.assign(L.total, 0.0);
  auto uniform_fill = [&](std::size_t at, std::size_t n, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) p.w[at + i] = rng.uniform(-s, s);
  };
  const std::size_t in = config.input_dim();
  const std::size_t H = config.hidden;
  uniform_fill(L.w1, H * in, in);
  uniform_fill(L.b1, H, in);
  uniform_fill(L.w2, H * H, H);
  uniform_fill(L.b2, H, H);
  uniform_fill(L.w3, static_cast<std::size_t>(config.action_dim) * H, H);
  uniform_fill(L.b3, config.action_dim, H);
  return p;
}

std::vector<double> invdyn_forward(const InvDynParams& params, const double* window) {
  const Layout L(params.config);
  Trace tr;
  forward_impl(params, L, window, tr);
  return tr.out;
}

Action predict_action(const InvDynParams& params, const std::vector<double>& history,
                      const std::vector<double>& next_state) {
  const auto& cfg = params.config;
  const std::size_t hist_len = static_cast<std::size_t>(cfg.L + 1) * cfg.D;
  if (history.size() != hist_len)
    fail(Errc::shape_mismatch, "predict_action: history must hold L+1 states");
  if (next_state.size() != static_cast<std::size_t>(cfg.D))
    fail(Errc::shape_mismatch, "predict_action: next_state must hold D features");

  std::vector<double> window;
  window.reserve(hist_len + cfg.D);
  window.insert(window.end(), history.begin(), history.end());
  window.insert(window.end(), next_state.begin(), next_state.end());

  auto raw = invdyn_forward(params, window.data());
  Action a;
  a.lambdas.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    a.lambdas[i] = std::clamp(raw[i], 0.0, cfg.lambda_max);
  return a;
}

double invdyn_loss(const InvDynParams& params, const InvDynSample& sample) {
  const Layout L(params.config);
  Trace tr;
  forward_impl(params, L, sample.window.data(), tr);
  double loss = 0.0;
  for (std::size_t i = 0; i < tr.out.size(); ++i) {
    const double d = tr.out[i] - sample.target[i];
    loss += d * d;
  }
  return loss / static_cast<double>(tr.out.size());
}

double invdyn_loss_grad(const InvDynParams& params, const InvDynSample& sample,
                        double weight, std::vector<double>& grad_accum) {
  if (grad_accum.size() != params.w.size())
    fail(Errc::shape_mismatch, "invdyn_loss_grad: grad buffer size mismatch");
  const Layout L(params.config);
  Trace tr;
  forward_impl(params, L, sample.window.data(), tr);
  const std::size_t a = tr.out.size();
  double loss = 0.0;
  std::vector<double> d_out(a);
  for (std::size_t i = 0; i < a; ++i) {
    const double d = tr.out[i] - sample.target[i];
    loss += d * d;
    d_out[i] = weight * 2.0 * d / static_cast<double>(a);
  }
  backward_impl(params, L, sample.window.data(), tr, d_out.data(), grad_accum.data());
  return loss / static_cast<double>(a);
}

std::vector<InvDynSample> build_invdyn_windows(const TrainSet& data, int L) {
  if (L < 0) fail(Errc::invalid_argument, "build_invdyn_windows: L must be >= 0");
  if (data.T < L + 2)
    fail(Errc::invalid_argument, "build_invdyn_windows: trajectories shorter than L+2");
  std::vector<InvDynSample> windows;
  const int D = data.D;
  windows.reserve(data.size() * (data.T - 1));
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& states = data.states[n];
    const auto& actions = data.actions[n];
    for (int t = 0; t + 1 < data.T; ++t) {
      InvDynSample s;
      s.window.reserve(static_cast<std::size_t>(L + 2) * D);
      for (int u = t - L; u <= t + 1; ++u) {
        const int uu = std::max(u, 0);  // repeat s_0 on the left edge
        const double* row = states.data() + static_cast<std::size_t>(uu) * D;
        s.window.insert(s.window.end(), row, row + D);
      }
      const double* act = actions.data() + static_cast<std::size_t>(t) * data.action_dim;
      s.target.assign(act, act + data.action_dim);
      windows.push_back(std::move(s));
    }
  }
  if (windows.empty()) fail(Errc::invalid_argument, "build_invdyn_windows: empty window set");
  return windows;
}

InvDynTrainResult train_invdyn(const TrainSet& data, int L, const InvDynTrainHyper& hyper,
                               InvDynConfig base) {
  base.L = L;
  base.D = data.D;
  base.action_dim = data.action_dim;
  base.validate();

  const auto windows = build_invdyn_windows(data, L);
  const std::size_t n = windows.size();

  Rng rng(derive_seed(hyper.seed, 0x1d));
  InvDynParams params = init_invdyn(base, rng);

  nn::AdamState adam;
  adam.init(params.w.size());
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = hyper.lr;

  InvDynTrainResult result;
  result.loss_history.reserve(hyper.epochs);

  const int batch_size = std::max(1, std::min<int>(hyper.batch_size, static_cast<int>(n)));
  const std::size_t n_chunks = std::max(1, hyper.grad_chunks);
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<double> grad(params.w.size(), 0.0);
  std::vector<const InvDynSample*> batch(batch_size);

  for (int step = 0; step < hyper.epochs; ++step) {
    for (int i = 0; i < batch_size; ++i)
      batch[i] =
          &windows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))];

    const double weight = 1.0 / batch_size;
    parallel_chunks(batch_size, n_chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
      auto& cg = chunk_grads[c];
      if (cg.size() != params.w.size()) cg.assign(params.w.size(), 0.0);
      else std::fill(cg.begin(), cg.end(), 0.0);
      double loss = 0.0;
      for (std::size_t i = b; i < e; ++i)
        loss += invdyn_loss_grad(params, *batch[i], weight, cg);
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
    if (!std::isfinite(loss))
      fail(Errc::non_finite,
           "train_invdyn: non-finite loss at step " + std::to_string(step));

    nn::adam_step(params.w, grad, adam, adam_cfg);
  }

  result.params = std::move(params);
  return result;
}

double finite_diff_check_invdyn(const InvDynParams& params, const InvDynSample& sample,
                                int n_coords, std::uint64_t coord_seed, double h) {
  auto loss = [&](const std::vector<double>& w) {
    InvDynParams p{params.config, w};
    return invdyn_loss(p, sample);
  };
  auto grad = [&](const std::vector<double>& w) {
    InvDynParams p{params.config, w};
    std::vector<double> g(w.size(), 0.0);
    invdyn_loss_grad(p, sample, 1.0, g);
    return g;
  };
  return nn::finite_diff_check(loss, grad, params.w, n_coords, coord_seed, h);
}

}  // namespace bidgen
