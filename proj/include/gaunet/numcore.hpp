#ifndef GAUNET_NUMCORE_HPP
#define GAUNET_NUMCORE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gaunet {

// Dense row-major matrix, sized once and mutated in place.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

enum class Activation { Tanh, LeakyReLU, Identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Counter-based SplitMix64 stream. Identical seed and call sequence produce
// identical output on every platform, which keeps fits and generated data
// reproducible bit-for-bit. substream() derives independent streams so that
// parallel consumers (one per candidate, fold, or delta) stay deterministic
// regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform01();
  double uniform(double lo, double hi);

  // Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Inverse-CDF transform: location - scale * ln(-ln(u)), u in (0,1).
double gumbel_from_uniform(double u, double location, double scale);
double gumbel_sample(Rng& rng, double location, double scale);

// Small fully connected network with scalar output. Hidden layers use the
// configured activation; the output layer is affine. layer_sizes lists the
// input width, hidden widths, and the final width (always 1).
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;  // per layer, out x in
  std::vector<std::vector<double>> biases;
  Activation activation = Activation::Tanh;
  double leaky_slope = 0.01;

  int input_width() const { return layer_sizes.front(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  int param_count() const;
};

// Glorot-uniform weights in [-s, s], s = sqrt(6/(fan_in+fan_out)); zero biases.
Mlp make_mlp(std::span<const int> layer_sizes, Activation act, Rng& rng, double leaky_slope = 0.01);
Mlp make_zero_mlp(std::span<const int> layer_sizes, Activation act, double leaky_slope = 0.01);

// Canonical flat parameter order: for each layer, weights row-major, then biases.
void get_mlp_params(const Mlp& net, std::span<double> out);
void set_mlp_params(Mlp& net, std::span<const double> in);

// Per-layer buffers reused across forward/backward calls; sized lazily.
struct MlpWorkspace {
  std::vector<std::vector<double>> pre;   // preactivations
  std::vector<std::vector<double>> post;  // activations
  std::vector<std::vector<double>> delta;
};

double mlp_forward(const Mlp& net, std::span<const double> x, MlpWorkspace& ws);
double mlp_forward(const Mlp& net, std::span<const double> x);

// Accumulates d(upstream * output)/dparam into grad, laid out as in
// get_mlp_params, and d/dx into dx when dx is nonempty. Requires the
// workspace from the matching forward call.
void mlp_backward(const Mlp& net, std::span<const double> x, MlpWorkspace& ws,
                  double upstream, std::span<double> grad, std::span<double> dx = {});

// Worst relative error between analytic parameter gradients and central
// finite differences of the forward pass at step h.
double grad_check(const Mlp& net, std::span<const double> x, double h);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias correction, minimizing. Callers maximizing an
// objective pass negated gradients. Slots excluded by the trainable mask are
// left untouched (parameters and moments), so frozen parameters stay
// bit-identical across steps.
class AdamState {
 public:
  AdamState(size_t n, AdamConfig cfg);

  void step(std::span<double* const> params, std::span<const double> grads,
            const std::vector<std::uint8_t>* trainable = nullptr);

  long step_count() const { return step_count_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  double learning_rate() const { return cfg_.learning_rate; }

 private:
  AdamConfig cfg_;
  long step_count_ = 0;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
};

}  // namespace gaunet

#endif  // GAUNET_NUMCORE_HPP
