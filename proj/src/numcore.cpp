#include "gaunet/numcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gaunet {

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "leaky_relu") return Activation::LeakyReLU;
  if (s == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + s + "' (expected tanh, leaky_relu, or identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::Identity: return "identity";
  }
  return "tanh";
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double activate(Activation act, double slope, double x) {
  switch (act) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::LeakyReLU: return x > 0.0 ? x : slope * x;
    case Activation::Identity: return x;
  }
  return x;
}

// Derivative at the preactivation; LeakyReLU at exactly 0 uses the
// negative-side slope so the subgradient choice is deterministic.
inline double activate_grad(Activation act, double slope, double pre, double post) {
  switch (act) {
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::LeakyReLU: return pre > 0.0 ? 1.0 : slope;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
  // Mix the stream id through one splitmix round so adjacent ids land far apart.
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(s);
  return Rng(s);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform01() {
  // 53-bit mantissa shifted into (0,1): never exactly 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
  // Rejection sampling on the top bits to avoid modulo bias.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n) - 1;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x > limit);
  return x % n;
}

double gumbel_from_uniform(double u, double location, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("gumbel scale must be positive");
  return location - scale * std::log(-std::log(u));
}

double gumbel_sample(Rng& rng, double location, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("gumbel scale must be positive");
  return gumbel_from_uniform(rng.uniform01(), location, scale);
}

int Mlp::param_count() const {
  int n = 0;
  for (int l = 0; l < layer_count(); ++l) n += weights[l].rows * weights[l].cols + weights[l].rows;
  return n;
}

namespace {

void validate_sizes(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
  if (layer_sizes.back() != 1) throw std::invalid_argument("Mlp output width must be 1");
}

}  // namespace

Mlp make_mlp(std::span<const int> layer_sizes, Activation act, Rng& rng, double leaky_slope) {
  validate_sizes(layer_sizes);
  Mlp net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  net.activation = act;
  net.leaky_slope = leaky_slope;
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int in = layer_sizes[l];
    int out = layer_sizes[l + 1];
    Matrix w(out, in);
    double s = std::sqrt(6.0 / (in + out));
    for (double& v : w.a) v = rng.uniform(-s, s);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(out, 0.0);
  }
  return net;
}

Mlp make_zero_mlp(std::span<const int> layer_sizes, Activation act, double leaky_slope) {
  validate_sizes(layer_sizes);
  Mlp net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  net.activation = act;
  net.leaky_slope = leaky_slope;
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    net.weights.emplace_back(layer_sizes[l + 1], layer_sizes[l]);
    net.biases.emplace_back(layer_sizes[l + 1], 0.0);
  }
  return net;
}

void get_mlp_params(const Mlp& net, std::span<double> out) {
  if (static_cast<int>(out.size()) != net.param_count())
    throw std::invalid_argument("get_mlp_params: span size does not match parameter count");
  size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double v : net.weights[l].a) out[k++] = v;
    for (double v : net.biases[l]) out[k++] = v;
  }
}

void set_mlp_params(Mlp& net, std::span<const double> in) {
  if (static_cast<int>(in.size()) != net.param_count())
    throw std::invalid_argument("set_mlp_params: span size does not match parameter count");
  size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& v : net.weights[l].a) v = in[k++];
    for (double& v : net.biases[l]) v = in[k++];
  }
}

namespace {

bool workspace_matches(const Mlp& net, const MlpWorkspace& ws) {
  if (static_cast<int>(ws.pre.size()) != net.layer_count()) return false;
  for (int l = 0; l < net.layer_count(); ++l)
    if (static_cast<int>(ws.pre[l].size()) != net.weights[l].rows) return false;
  return true;
}

}  // namespace

double mlp_forward(const Mlp& net, std::span<const double> x, MlpWorkspace& ws) {
  const int L = net.layer_count();
  if (static_cast<int>(x.size()) != net.input_width())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (!workspace_matches(net, ws)) {
    ws.pre.resize(L);
    ws.post.resize(L);
    ws.delta.resize(L);
    for (int l = 0; l < L; ++l) {
      ws.pre[l].resize(net.weights[l].rows);
      ws.post[l].resize(net.weights[l].rows);
      ws.delta[l].resize(net.weights[l].rows);
    }
  }
  const double* in = x.data();
  for (int l = 0; l < L; ++l) {
    const Matrix& w = net.weights[l];
    const bool last = (l == L - 1);
    for (int r = 0; r < w.rows; ++r) {
      double acc = net.biases[l][r];
      const double* wr = w.a.data() + static_cast<size_t>(r) * w.cols;
      for (int c = 0; c < w.cols; ++c) acc += wr[c] * in[c];
      ws.pre[l][r] = acc;
      ws.post[l][r] = last ? acc : activate(net.activation, net.leaky_slope, acc);
    }
    in = ws.post[l].data();
  }
  return ws.post[L - 1][0];
}

double mlp_forward(const Mlp& net, std::span<const double> x) {
  MlpWorkspace ws;
  return mlp_forward(net, x, ws);
}

void mlp_backward(const Mlp& net, std::span<const double> x, MlpWorkspace& ws,
                  double upstream, std::span<double> grad, std::span<double> dx) {
  const int L = net.layer_count();
  if (static_cast<int>(x.size()) != net.input_width())
    throw std::invalid_argument("mlp_backward: input width mismatch");
  if (static_cast<int>(grad.size()) != net.param_count())
    throw std::invalid_argument("mlp_backward: gradient span size mismatch");
  if (!dx.empty() && static_cast<int>(dx.size()) != net.input_width())
    throw std::invalid_argument("mlp_backward: dx span size mismatch");
  if (static_cast<int>(ws.post.size()) != L || ws.post[L - 1].empty())
    throw std::invalid_argument("mlp_backward: workspace not populated by a forward pass");

  ws.delta[L - 1][0] = upstream;  // output layer is affine
  for (int l = L - 1; l > 0; --l) {
    const Matrix& w = net.weights[l];
    std::vector<double>& below = ws.delta[l - 1];
    std::fill(below.begin(), below.end(), 0.0);
    for (int r = 0; r < w.rows; ++r) {
      double d = ws.delta[l][r];
      const double* wr = w.a.data() + static_cast<size_t>(r) * w.cols;
      for (int c = 0; c < w.cols; ++c) below[c] += d * wr[c];
    }
    for (int c = 0; c < net.weights[l - 1].rows; ++c)
      below[c] *= activate_grad(net.activation, net.leaky_slope, ws.pre[l - 1][c], ws.post[l - 1][c]);
  }

  size_t k = 0;
  for (int l = 0; l < L; ++l) {
    const Matrix& w = net.weights[l];
    const double* in = (l == 0) ? x.data() : ws.post[l - 1].data();
    for (int r = 0; r < w.rows; ++r) {
      double d = ws.delta[l][r];
      for (int c = 0; c < w.cols; ++c) grad[k++] += d * in[c];
    }
    for (int r = 0; r < w.rows; ++r) grad[k++] += ws.delta[l][r];
  }

  if (!dx.empty()) {
    const Matrix& w0 = net.weights[0];
    for (int r = 0; r < w0.rows; ++r) {
      double d = ws.delta[0][r];
      const double* wr = w0.a.data() + static_cast<size_t>(r) * w0.cols;
      for (int c = 0; c < w0.cols; ++c) dx[c] += d * wr[c];
    }
  }
}

double grad_check(const Mlp& net, std::span<const double> x, double h) {
  if (h <= 0.0) throw std::invalid_argument("grad_check: h must be positive");
  const int n = net.param_count();
  std::vector<double> analytic(n, 0.0);
  MlpWorkspace ws;
  mlp_forward(net, x, ws);
  mlp_backward(net, x, ws, 1.0, analytic);

  Mlp probe = net;
  std::vector<double> params(n);
  get_mlp_params(probe, params);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double saved = params[i];
    params[i] = saved + h;
    set_mlp_params(probe, params);
    double fp = mlp_forward(probe, x, ws);
    params[i] = saved - h;
    set_mlp_params(probe, params);
    double fm = mlp_forward(probe, x, ws);
    params[i] = saved;
    double numeric = (fp - fm) / (2.0 * h);
    double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  set_mlp_params(probe, params);
  return worst;
}

AdamState::AdamState(size_t n, AdamConfig cfg)
    : cfg_(cfg), first_moment_(n, 0.0), second_moment_(n, 0.0) {
  if (cfg.learning_rate <= 0 || cfg.beta1 <= 0 || cfg.beta1 >= 1 || cfg.beta2 <= 0 ||
      cfg.beta2 >= 1 || cfg.epsilon <= 0)
    throw std::invalid_argument("AdamState: hyperparameters out of range");
}

void AdamState::step(std::span<double* const> params, std::span<const double> grads,
                     const std::vector<std::uint8_t>* trainable) {
  const size_t n = first_moment_.size();
  if (params.size() != n || grads.size() != n)
    throw std::invalid_argument("AdamState::step: parameter/gradient size mismatch");
  if (trainable && trainable->size() != n)
    throw std::invalid_argument("AdamState::step: trainable mask size mismatch");
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i]))
      throw std::runtime_error("AdamState::step: non-finite gradient at index " + std::to_string(i));
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (size_t i = 0; i < n; ++i) {
    if (trainable && !(*trainable)[i]) continue;
    double g = grads[i];
    first_moment_[i] = cfg_.beta1 * first_moment_[i] + (1.0 - cfg_.beta1) * g;
    second_moment_[i] = cfg_.beta2 * second_moment_[i] + (1.0 - cfg_.beta2) * g * g;
    double mhat = first_moment_[i] / bc1;
    double vhat = second_moment_[i] / bc2;
    *params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
  }
}

}  // namespace gaunet
