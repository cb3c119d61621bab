#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "agefair/errors.hpp"
#include "agefair/rng.hpp"

namespace agefair::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kNone };
enum class NoiseMode { kSampled, kZero };

class CategoricalQNetwork;

// Raised when a gradient step would write non-finite parameters. Carries the
// network as it was before the offending step.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, std::shared_ptr<const CategoricalQNetwork> last);
  const std::shared_ptr<const CategoricalQNetwork>& last_finite() const { return last_finite_; }

 private:
  std::shared_ptr<const CategoricalQNetwork> last_finite_;
};

// f(x) = sgn(x) * sqrt(|x|), applied to factorized Gaussian noise.
double noise_transform(double x);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::kRelu;

  // Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  static DenseLayer create(int in, int out, Activation activation, Rng& rng);

  int inputs() const { return static_cast<int>(weights.cols()); }
  int outputs() const { return static_cast<int>(weights.rows()); }
};

// y = (mu_w + sigma_w .* eps_w) x + (mu_b + sigma_b .* eps_b) with factorized
// noise eps_w = f(eps_out) f(eps_in)^T, eps_b = f(eps_out).
struct NoisyLayer {
  Matrix mu_w;
  Matrix sigma_w;
  Vector mu_b;
  Vector sigma_b;
  Vector eps_in;   // f-transformed input-side noise
  Vector eps_out;  // f-transformed output-side noise
  Activation activation = Activation::kRelu;

  // mu ~ Uniform(-1/sqrt(in), 1/sqrt(in)); sigma = sigma0 / sqrt(in); noise zero.
  static NoisyLayer create(int in, int out, double sigma0, Activation activation, Rng& rng);

  void resample(Rng& rng);
  void clear_noise();

  Matrix noise_weights() const { return eps_out * eps_in.transpose(); }
  Matrix effective_weights(NoiseMode mode) const;
  Vector effective_biases(NoiseMode mode) const;

  int inputs() const { return static_cast<int>(mu_w.cols()); }
  int outputs() const { return static_cast<int>(mu_w.rows()); }
};

struct NetworkShape {
  int inputs = 4;
  int hidden = 64;
  int actions = 7;
  int atoms = 51;
  double v_min = 45.0;
  double v_max = 50.0;
  double sigma0 = 0.4;

  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

// Evenly spaced support v_min + i (v_max - v_min) / (atoms - 1).
Vector make_atoms(int atoms, double v_min, double v_max);

// Per-sample forward quantities kept for backpropagation. Column b of every
// matrix belongs to sample b. Head outputs are laid out action-major:
// row a * atoms + i holds atom i of action a.
struct ForwardPass {
  Matrix input;
  std::array<Matrix, 2> trunk;      // post-activation
  std::array<Matrix, 2> value;      // hidden, output logits
  std::array<Matrix, 2> advantage;  // hidden, output logits
  Matrix probabilities;             // (actions * atoms) x batch

  // atoms x actions view of sample b.
  Eigen::Map<const Matrix> distribution(Eigen::Index b, int atoms, int actions) const {
    return {probabilities.col(b).data(), atoms, actions};
  }
};

// Dueling, distributional Q-network: two dense ReLU layers shared by a value
// branch and an advantage branch, each made of two noisy layers. Per-action
// logits V(i) + A(a,i) - mean_a A(a,i) are softmaxed over atoms.
class CategoricalQNetwork {
 public:
  CategoricalQNetwork() = default;
  CategoricalQNetwork(const NetworkShape& shape, Rng& init_rng);

  const NetworkShape& shape() const { return shape_; }
  const Vector& atoms() const { return atoms_; }

  // atoms x actions matrix of probabilities; column a is action a.
  Matrix forward(std::span<const double> input, NoiseMode mode) const;
  ForwardPass forward_batch(const Matrix& inputs, NoiseMode mode) const;

  void resample_noise(Rng& rng);
  void clear_noise();

  // Number of samples pushed through forward passes since construction.
  std::uint64_t forward_count() const { return forward_count_; }
  void reset_forward_count() { forward_count_ = 0; }

  std::array<DenseLayer, 2> trunk;
  std::array<NoisyLayer, 2> value;
  std::array<NoisyLayer, 2> advantage;

 private:
  friend CategoricalQNetwork read_checkpoint(std::istream& in);

  NetworkShape shape_;
  Vector atoms_;
  mutable std::uint64_t forward_count_ = 0;
};

// Expected value per action: Q(a) = sum_i p(a,i) z_i.
Vector q_values(const Matrix& distribution, const Vector& atoms);

// Lowest index wins ties.
int argmax(const Vector& values);

// Categorical projection of r + gamma z onto the support. `next` is
// atoms x batch, one distribution per column; output has the same layout.
Matrix project_target(std::span<const double> rewards, const Matrix& next,
                      std::span<const double> gamma_eff, const Vector& atoms);

struct DenseGrad {
  Matrix weights;
  Vector biases;
};

struct NoisyGrad {
  Matrix mu_w;
  Matrix sigma_w;
  Vector mu_b;
  Vector sigma_b;
};

struct NetworkGradients {
  std::array<DenseGrad, 2> trunk;
  std::array<NoisyGrad, 2> value;
  std::array<NoisyGrad, 2> advantage;

  bool all_finite() const;
};

// Mean over the batch of the cross-entropy between target column b and the
// predicted distribution of action actions[b]. Noise is whatever the network
// currently holds (mode kSampled) or zero.
double cross_entropy_loss(const CategoricalQNetwork& net, const Matrix& inputs,
                          std::span<const int> actions, const Matrix& targets, NoiseMode mode);

double compute_gradients(const CategoricalQNetwork& net, const Matrix& inputs,
                         std::span<const int> actions, const Matrix& targets, NoiseMode mode,
                         NetworkGradients& grads);

// theta <- theta - lr * grad. Throws TrainingDivergedError, leaving `net`
// untouched, if any gradient entry is non-finite.
void apply_gradients(CategoricalQNetwork& net, const NetworkGradients& grads, double lr);

// One plain gradient-descent step on the batch. Returns the pre-step loss.
double backward_and_step(CategoricalQNetwork& net, const Matrix& inputs,
                         std::span<const int> actions, const Matrix& targets, double lr,
                         NoiseMode mode = NoiseMode::kSampled);

// Checkpoint text format, version 1:
//   AGEFAIR-CKPT v1
//   network <inputs> <hidden> <actions> <atoms> <v_min> <v_max> <sigma0>
//   layer <dense|noisy> <name> <out> <in> <relu|none>
//   <param> <values...>          (one line per parameter, row-major)
//   end
// Reals are written with 17 significant digits, which round-trips doubles.
void write_checkpoint(std::ostream& out, const CategoricalQNetwork& net);
CategoricalQNetwork read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const CategoricalQNetwork& net);
CategoricalQNetwork load_checkpoint(const std::string& path);

// Bitwise parameter equality (noise excluded).
bool same_parameters(const CategoricalQNetwork& a, const CategoricalQNetwork& b);

}  // namespace agefair::nn
