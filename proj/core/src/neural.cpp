#include "agefair/neural.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace agefair::nn {

TrainingDivergedError::TrainingDivergedError(const std::string& what,
                                             std::shared_ptr<const CategoricalQNetwork> last)
    : Error(what), last_finite_(std::move(last)) {}

double noise_transform(double x) {
  return x < 0.0 ? -std::sqrt(-x) : std::sqrt(x);
}

namespace {

Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  // Row-major fill so the draw order matches the checkpoint layout.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

Vector uniform_vector(int n, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = dist(rng);
  }
  return v;
}

void activate(Matrix& z, Activation activation) {
  if (activation == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  }
}

Matrix affine(const Matrix& w, const Vector& b, const Matrix& x) {
  Matrix z = w * x;
  z.colwise() += b;
  return z;
}

// dL/dz from dL/dy for post-activation output y.
Matrix through_activation(const Matrix& dy, const Matrix& y, Activation activation) {
  if (activation == Activation::kNone) {
    return dy;
  }
  return (y.array() > 0.0).select(dy, 0.0);
}

}  // namespace

DenseLayer DenseLayer::create(int in, int out, Activation activation, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  DenseLayer layer;
  layer.weights = uniform_matrix(out, in, bound, rng);
  layer.biases = uniform_vector(out, bound, rng);
  layer.activation = activation;
  return layer;
}

NoisyLayer NoisyLayer::create(int in, int out, double sigma0, Activation activation, Rng& rng) {
  const double root = std::sqrt(static_cast<double>(in));
  NoisyLayer layer;
  layer.mu_w = uniform_matrix(out, in, 1.0 / root, rng);
  layer.mu_b = uniform_vector(out, 1.0 / root, rng);
  layer.sigma_w = Matrix::Constant(out, in, sigma0 / root);
  layer.sigma_b = Vector::Constant(out, sigma0 / root);
  layer.eps_in = Vector::Zero(in);
  layer.eps_out = Vector::Zero(out);
  layer.activation = activation;
  return layer;
}

void NoisyLayer::resample(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < eps_in.size(); ++i) {
    eps_in(i) = noise_transform(normal(rng));
  }
  for (Eigen::Index i = 0; i < eps_out.size(); ++i) {
    eps_out(i) = noise_transform(normal(rng));
  }
}

void NoisyLayer::clear_noise() {
  eps_in.setZero();
  eps_out.setZero();
}

Matrix NoisyLayer::effective_weights(NoiseMode mode) const {
  if (mode == NoiseMode::kZero) {
    return mu_w;
  }
  return mu_w + sigma_w.cwiseProduct(noise_weights());
}

Vector NoisyLayer::effective_biases(NoiseMode mode) const {
  if (mode == NoiseMode::kZero) {
    return mu_b;
  }
  return mu_b + sigma_b.cwiseProduct(eps_out);
}

void NetworkShape::validate() const {
  if (inputs < 1 || hidden < 1 || actions < 1) {
    throw ConfigError("network dimensions must be positive");
  }
  if (atoms < 2) {
    throw ConfigError("network needs at least two atoms");
  }
  if (!(v_max > v_min)) {
    throw ConfigError("v_max must exceed v_min");
  }
  if (!(sigma0 >= 0.0)) {
    throw ConfigError("noisy sigma0 must be non-negative");
  }
}

Vector make_atoms(int atoms, double v_min, double v_max) {
  Vector z(atoms);
  const double delta = (v_max - v_min) / static_cast<double>(atoms - 1);
  for (int i = 0; i < atoms; ++i) {
    z(i) = v_min + static_cast<double>(i) * delta;
  }
  z(atoms - 1) = v_max;
  return z;
}

CategoricalQNetwork::CategoricalQNetwork(const NetworkShape& shape, Rng& init_rng)
    : shape_(shape) {
  shape_.validate();
  atoms_ = make_atoms(shape_.atoms, shape_.v_min, shape_.v_max);
  const int h = shape_.hidden;
  trunk[0] = DenseLayer::create(shape_.inputs, h, Activation::kRelu, init_rng);
  trunk[1] = DenseLayer::create(h, h, Activation::kRelu, init_rng);
  value[0] = NoisyLayer::create(h, h, shape_.sigma0, Activation::kRelu, init_rng);
  value[1] = NoisyLayer::create(h, shape_.atoms, shape_.sigma0, Activation::kNone, init_rng);
  advantage[0] = NoisyLayer::create(h, h, shape_.sigma0, Activation::kRelu, init_rng);
  advantage[1] = NoisyLayer::create(h, shape_.actions * shape_.atoms, shape_.sigma0,
                                    Activation::kNone, init_rng);
}

void CategoricalQNetwork::resample_noise(Rng& rng) {
  for (auto* layer : {&value[0], &value[1], &advantage[0], &advantage[1]}) {
    layer->resample(rng);
  }
}

void CategoricalQNetwork::clear_noise() {
  for (auto* layer : {&value[0], &value[1], &advantage[0], &advantage[1]}) {
    layer->clear_noise();
  }
}

ForwardPass CategoricalQNetwork::forward_batch(const Matrix& inputs, NoiseMode mode) const {
  if (inputs.rows() != shape_.inputs) {
    throw InvalidInputError("network input has wrong dimension");
  }
  if (!inputs.allFinite()) {
    throw InvalidInputError("network input is not finite");
  }
  forward_count_ += static_cast<std::uint64_t>(inputs.cols());

  ForwardPass fp;
  fp.input = inputs;
  const Matrix* x = &fp.input;
  for (std::size_t l = 0; l < trunk.size(); ++l) {
    fp.trunk[l] = affine(trunk[l].weights, trunk[l].biases, *x);
    activate(fp.trunk[l], trunk[l].activation);
    x = &fp.trunk[l];
  }
  const auto run_branch = [&](const std::array<NoisyLayer, 2>& layers, std::array<Matrix, 2>& out) {
    const Matrix* h = &fp.trunk[1];
    for (std::size_t l = 0; l < layers.size(); ++l) {
      out[l] = affine(layers[l].effective_weights(mode), layers[l].effective_biases(mode), *h);
      activate(out[l], layers[l].activation);
      h = &out[l];
    }
  };
  run_branch(value, fp.value);
  run_branch(advantage, fp.advantage);

  const int n = shape_.atoms;
  const int a_count = shape_.actions;
  const Eigen::Index batch = inputs.cols();
  fp.probabilities.resize(static_cast<Eigen::Index>(a_count) * n, batch);
  Vector mean_adv(n);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::Map<const Matrix> adv(fp.advantage[1].col(b).data(), n, a_count);
    Eigen::Map<Matrix> probs(fp.probabilities.col(b).data(), n, a_count);
    mean_adv = adv.rowwise().mean();
    for (int a = 0; a < a_count; ++a) {
      auto logits = probs.col(a);
      logits = fp.value[1].col(b) + adv.col(a) - mean_adv;
      const double top = logits.maxCoeff();
      logits = (logits.array() - top).exp();
      logits /= logits.sum();
    }
  }
  return fp;
}

Matrix CategoricalQNetwork::forward(std::span<const double> input, NoiseMode mode) const {
  const Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  const ForwardPass fp = forward_batch(x, mode);
  return fp.distribution(0, shape_.atoms, shape_.actions);
}

Vector q_values(const Matrix& distribution, const Vector& atoms) {
  return distribution.transpose() * atoms;
}

int argmax(const Vector& values) {
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

Matrix project_target(std::span<const double> rewards, const Matrix& next,
                      std::span<const double> gamma_eff, const Vector& atoms) {
  const Eigen::Index n = atoms.size();
  const double v_min = atoms(0);
  const double v_max = atoms(n - 1);
  const double delta = (v_max - v_min) / static_cast<double>(n - 1);
  Matrix out = Matrix::Zero(n, next.cols());
  for (Eigen::Index b = 0; b < next.cols(); ++b) {
    const double r = rewards[static_cast<std::size_t>(b)];
    const double g = gamma_eff[static_cast<std::size_t>(b)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double mass = next(j, b);
      if (mass == 0.0) {
        continue;
      }
      const double tz = std::clamp(r + g * atoms(j), v_min, v_max);
      const double pos = std::clamp((tz - v_min) / delta, 0.0, static_cast<double>(n - 1));
      const auto lower = static_cast<Eigen::Index>(std::floor(pos));
      const auto upper = static_cast<Eigen::Index>(std::ceil(pos));
      if (lower == upper) {
        out(lower, b) += mass;
      } else {
        out(lower, b) += mass * (static_cast<double>(upper) - pos);
        out(upper, b) += mass * (pos - static_cast<double>(lower));
      }
    }
  }
  return out;
}

bool NetworkGradients::all_finite() const {
  for (const auto& g : trunk) {
    if (!g.weights.allFinite() || !g.biases.allFinite()) return false;
  }
  for (const auto* branch : {&value, &advantage}) {
    for (const auto& g : *branch) {
      if (!g.mu_w.allFinite() || !g.sigma_w.allFinite() || !g.mu_b.allFinite() ||
          !g.sigma_b.allFinite()) {
        return false;
      }
    }
  }
  return true;
}

namespace {

void check_batch(const CategoricalQNetwork& net, const Matrix& inputs, std::span<const int> actions,
                 const Matrix& targets) {
  const auto batch = static_cast<std::size_t>(inputs.cols());
  if (actions.size() != batch || static_cast<std::size_t>(targets.cols()) != batch ||
      targets.rows() != net.shape().atoms) {
    throw InvalidInputError("batch dimensions disagree");
  }
  for (int a : actions) {
    if (a < 0 || a >= net.shape().actions) {
      throw InvalidInputError("batch action out of range");
    }
  }
}

double batch_loss(const ForwardPass& fp, std::span<const int> actions, const Matrix& targets,
                  int atoms, int action_count) {
  double loss = 0.0;
  for (Eigen::Index b = 0; b < targets.cols(); ++b) {
    const auto dist = fp.distribution(b, atoms, action_count);
    const auto a = actions[static_cast<std::size_t>(b)];
    for (int i = 0; i < atoms; ++i) {
      const double t = targets(i, b);
      if (t != 0.0) {
        loss -= t * std::log(std::max(dist(i, a), std::numeric_limits<double>::min()));
      }
    }
  }
  return loss / static_cast<double>(targets.cols());
}

// Backpropagates dz through a noisy layer; returns dL/dx.
Matrix noisy_backward(const NoisyLayer& layer, const Matrix& x, const Matrix& dz, NoiseMode mode,
                      NoisyGrad& grad) {
  grad.mu_w = dz * x.transpose();
  grad.mu_b = dz.rowwise().sum();
  if (mode == NoiseMode::kZero) {
    grad.sigma_w = Matrix::Zero(grad.mu_w.rows(), grad.mu_w.cols());
    grad.sigma_b = Vector::Zero(grad.mu_b.size());
  } else {
    grad.sigma_w = grad.mu_w.cwiseProduct(layer.noise_weights());
    grad.sigma_b = grad.mu_b.cwiseProduct(layer.eps_out);
  }
  return layer.effective_weights(mode).transpose() * dz;
}

Matrix branch_backward(const std::array<NoisyLayer, 2>& layers, const std::array<Matrix, 2>& outs,
                       const Matrix& trunk_out, Matrix d_logits, NoiseMode mode,
                       std::array<NoisyGrad, 2>& grads) {
  Matrix dz = through_activation(d_logits, outs[1], layers[1].activation);
  Matrix dh = noisy_backward(layers[1], outs[0], dz, mode, grads[1]);
  dz = through_activation(dh, outs[0], layers[0].activation);
  return noisy_backward(layers[0], trunk_out, dz, mode, grads[0]);
}

}  // namespace

double cross_entropy_loss(const CategoricalQNetwork& net, const Matrix& inputs,
                          std::span<const int> actions, const Matrix& targets, NoiseMode mode) {
  check_batch(net, inputs, actions, targets);
  const ForwardPass fp = net.forward_batch(inputs, mode);
  return batch_loss(fp, actions, targets, net.shape().atoms, net.shape().actions);
}

double compute_gradients(const CategoricalQNetwork& net, const Matrix& inputs,
                         std::span<const int> actions, const Matrix& targets, NoiseMode mode,
                         NetworkGradients& grads) {
  check_batch(net, inputs, actions, targets);
  const int n = net.shape().atoms;
  const int a_count = net.shape().actions;
  const ForwardPass fp = net.forward_batch(inputs, mode);
  const double loss = batch_loss(fp, actions, targets, n, a_count);

  const Eigen::Index batch = inputs.cols();
  const double scale = 1.0 / static_cast<double>(batch);
  Matrix d_value(n, batch);
  Matrix d_adv = Matrix::Zero(static_cast<Eigen::Index>(a_count) * n, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int a = actions[static_cast<std::size_t>(b)];
    const auto dist = fp.distribution(b, n, a_count);
    // Softmax + cross-entropy: d loss / d logit = p - t for the taken action.
    const Vector g = (dist.col(a) - targets.col(b)) * scale;
    d_value.col(b) = g;
    Eigen::Map<Matrix> da(d_adv.col(b).data(), n, a_count);
    da.colwise() -= g / static_cast<double>(a_count);
    da.col(a) += g;
  }

  Matrix d_trunk = branch_backward(net.value, fp.value, fp.trunk[1], d_value, mode, grads.value);
  d_trunk += branch_backward(net.advantage, fp.advantage, fp.trunk[1], d_adv, mode, grads.advantage);

  for (int l = 1; l >= 0; --l) {
    const auto& layer = net.trunk[static_cast<std::size_t>(l)];
    const Matrix& x = l == 0 ? fp.input : fp.trunk[0];
    const Matrix dz = through_activation(d_trunk, fp.trunk[static_cast<std::size_t>(l)], layer.activation);
    auto& g = grads.trunk[static_cast<std::size_t>(l)];
    g.weights = dz * x.transpose();
    g.biases = dz.rowwise().sum();
    if (l > 0) {
      d_trunk = layer.weights.transpose() * dz;
    }
  }
  return loss;
}

void apply_gradients(CategoricalQNetwork& net, const NetworkGradients& grads, double lr) {
  if (!grads.all_finite()) {
    throw TrainingDivergedError("non-finite gradient",
                                std::make_shared<const CategoricalQNetwork>(net));
  }
  for (std::size_t l = 0; l < 2; ++l) {
    net.trunk[l].weights -= lr * grads.trunk[l].weights;
    net.trunk[l].biases -= lr * grads.trunk[l].biases;
  }
  for (auto [layers, g] : {std::pair{&net.value, &grads.value},
                           std::pair{&net.advantage, &grads.advantage}}) {
    for (std::size_t l = 0; l < 2; ++l) {
      (*layers)[l].mu_w -= lr * (*g)[l].mu_w;
      (*layers)[l].sigma_w -= lr * (*g)[l].sigma_w;
      (*layers)[l].mu_b -= lr * (*g)[l].mu_b;
      (*layers)[l].sigma_b -= lr * (*g)[l].sigma_b;
    }
  }
}

double backward_and_step(CategoricalQNetwork& net, const Matrix& inputs,
                         std::span<const int> actions, const Matrix& targets, double lr,
                         NoiseMode mode) {
  if (!(lr > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
  NetworkGradients grads;
  const double loss = compute_gradients(net, inputs, actions, targets, mode, grads);
  if (!std::isfinite(loss)) {
    throw TrainingDivergedError("non-finite loss", std::make_shared<const CategoricalQNetwork>(net));
  }
  apply_gradients(net, grads, lr);
  return loss;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointHeader = "AGEFAIR-CKPT v1";

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "none"; }

void write_values(std::ostream& out, const char* name, const Matrix& m) {
  out << name;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ' ' << format_real(m(r, c));
    }
  }
  out << '\n';
}

void write_values(std::ostream& out, const char* name, const Vector& v) {
  out << name;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << ' ' << format_real(v(i));
  }
  out << '\n';
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next_line() {
    std::string line;
    if (!std::getline(in_, line)) {
      fail("unexpected end of file");
    }
    ++line_no_;
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    for (std::string tok; ss >> tok;) {
      tokens.push_back(std::move(tok));
    }
    return tokens;
  }

  std::string raw_line() {
    std::string line;
    if (!std::getline(in_, line)) {
      fail("empty checkpoint");
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  double real(const std::string& tok) {
    double value = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("bad real '" + tok + "'");
    }
    return value;
  }

  int integer(const std::string& tok) {
    int value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("bad integer '" + tok + "'");
    }
    return value;
  }

  void read_matrix(const char* name, Matrix& m, int rows, int cols) {
    const auto tokens = next_line();
    expect_param(tokens, name, static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    m.resize(rows, cols);
    std::size_t k = 1;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = real(tokens[k++]);
      }
    }
  }

  void read_vector(const char* name, Vector& v, int n) {
    const auto tokens = next_line();
    expect_param(tokens, name, static_cast<std::size_t>(n));
    v.resize(n);
    for (int i = 0; i < n; ++i) {
      v(i) = real(tokens[static_cast<std::size_t>(i) + 1]);
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError("checkpoint line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  void expect_param(const std::vector<std::string>& tokens, const char* name, std::size_t count) {
    if (tokens.empty() || tokens[0] != name) {
      fail(std::string("expected parameter '") + name + "'");
    }
    if (tokens.size() != count + 1) {
      fail(std::string("parameter '") + name + "' has " + std::to_string(tokens.size() - 1) +
           " values, expected " + std::to_string(count));
    }
  }

  std::istream& in_;
  int line_no_ = 0;
};

struct LayerHeader {
  std::string kind;
  int out = 0;
  int in = 0;
  Activation activation = Activation::kRelu;
};

LayerHeader read_layer_header(CheckpointReader& reader, const std::string& kind,
                              const std::string& name, int out, int in) {
  const auto tokens = reader.next_line();
  if (tokens.size() != 6 || tokens[0] != "layer") {
    reader.fail("expected layer record");
  }
  if (tokens[1] != kind || tokens[2] != name) {
    reader.fail("expected " + kind + " layer '" + name + "', found " + tokens[1] + " '" +
                tokens[2] + "'");
  }
  LayerHeader h;
  h.kind = tokens[1];
  h.out = reader.integer(tokens[3]);
  h.in = reader.integer(tokens[4]);
  if (h.out != out || h.in != in) {
    reader.fail("layer '" + name + "' dimensions disagree with network header");
  }
  if (tokens[5] == "relu") {
    h.activation = Activation::kRelu;
  } else if (tokens[5] == "none") {
    h.activation = Activation::kNone;
  } else {
    reader.fail("unknown activation '" + tokens[5] + "'");
  }
  return h;
}

void read_end(CheckpointReader& reader) {
  const auto tokens = reader.next_line();
  if (tokens.size() != 1 || tokens[0] != "end") {
    reader.fail("expected 'end'");
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const CategoricalQNetwork& net) {
  const NetworkShape& s = net.shape();
  out << kCheckpointHeader << '\n';
  out << "network " << s.inputs << ' ' << s.hidden << ' ' << s.actions << ' ' << s.atoms << ' '
      << format_real(s.v_min) << ' ' << format_real(s.v_max) << ' ' << format_real(s.sigma0)
      << '\n';
  const char* trunk_names[] = {"trunk0", "trunk1"};
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& layer = net.trunk[l];
    out << "layer dense " << trunk_names[l] << ' ' << layer.outputs() << ' ' << layer.inputs()
        << ' ' << activation_name(layer.activation) << '\n';
    write_values(out, "W", layer.weights);
    write_values(out, "b", layer.biases);
    out << "end\n";
  }
  const std::pair<const char*, const std::array<NoisyLayer, 2>*> branches[] = {
      {"value", &net.value}, {"advantage", &net.advantage}};
  for (const auto& [prefix, layers] : branches) {
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& layer = (*layers)[l];
      out << "layer noisy " << prefix << l << ' ' << layer.outputs() << ' ' << layer.inputs()
          << ' ' << activation_name(layer.activation) << '\n';
      write_values(out, "mu_w", layer.mu_w);
      write_values(out, "sigma_w", layer.sigma_w);
      write_values(out, "mu_b", layer.mu_b);
      write_values(out, "sigma_b", layer.sigma_b);
      out << "end\n";
    }
  }
}

CategoricalQNetwork read_checkpoint(std::istream& in) {
  CheckpointReader reader(in);
  if (reader.raw_line() != kCheckpointHeader) {
    reader.fail("missing 'AGEFAIR-CKPT v1' header");
  }
  const auto net_tokens = reader.next_line();
  if (net_tokens.size() != 8 || net_tokens[0] != "network") {
    reader.fail("expected network record");
  }
  NetworkShape shape;
  shape.inputs = reader.integer(net_tokens[1]);
  shape.hidden = reader.integer(net_tokens[2]);
  shape.actions = reader.integer(net_tokens[3]);
  shape.atoms = reader.integer(net_tokens[4]);
  shape.v_min = reader.real(net_tokens[5]);
  shape.v_max = reader.real(net_tokens[6]);
  shape.sigma0 = reader.real(net_tokens[7]);
  try {
    shape.validate();
  } catch (const ConfigError& e) {
    reader.fail(e.what());
  }

  CategoricalQNetwork net;
  net.shape_ = shape;
  net.atoms_ = make_atoms(shape.atoms, shape.v_min, shape.v_max);

  const int h = shape.hidden;
  const std::array<std::pair<int, int>, 2> trunk_dims{{{h, shape.inputs}, {h, h}}};
  for (std::size_t l = 0; l < 2; ++l) {
    const auto [out, inp] = trunk_dims[l];
    const auto hdr = read_layer_header(reader, "dense", "trunk" + std::to_string(l), out, inp);
    auto& layer = net.trunk[l];
    layer.activation = hdr.activation;
    reader.read_matrix("W", layer.weights, out, inp);
    reader.read_vector("b", layer.biases, out);
    read_end(reader);
  }
  const std::pair<const char*, std::array<NoisyLayer, 2>*> branches[] = {
      {"value", &net.value}, {"advantage", &net.advantage}};
  for (const auto& [prefix, layers] : branches) {
    const int head = std::string(prefix) == "value" ? shape.atoms : shape.actions * shape.atoms;
    const std::array<std::pair<int, int>, 2> dims{{{h, h}, {head, h}}};
    for (std::size_t l = 0; l < 2; ++l) {
      const auto [out, inp] = dims[l];
      const auto hdr =
          read_layer_header(reader, "noisy", std::string(prefix) + std::to_string(l), out, inp);
      auto& layer = (*layers)[l];
      layer.activation = hdr.activation;
      reader.read_matrix("mu_w", layer.mu_w, out, inp);
      reader.read_matrix("sigma_w", layer.sigma_w, out, inp);
      reader.read_vector("mu_b", layer.mu_b, out);
      reader.read_vector("sigma_b", layer.sigma_b, out);
      layer.eps_in = Vector::Zero(inp);
      layer.eps_out = Vector::Zero(out);
      read_end(reader);
    }
  }
  return net;
}

void save_checkpoint(const std::string& path, const CategoricalQNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CheckpointError("cannot open '" + path + "' for writing");
  }
  write_checkpoint(out, net);
  if (!out) {
    throw CheckpointError("failed writing '" + path + "'");
  }
}

CategoricalQNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open '" + path + "'");
  }
  return read_checkpoint(in);
}

bool same_parameters(const CategoricalQNetwork& a, const CategoricalQNetwork& b) {
  if (!(a.shape() == b.shape())) {
    return false;
  }
  for (std::size_t l = 0; l < 2; ++l) {
    if (a.trunk[l].weights != b.trunk[l].weights || a.trunk[l].biases != b.trunk[l].biases) {
      return false;
    }
  }
  for (auto [x, y] : {std::pair{&a.value, &b.value}, std::pair{&a.advantage, &b.advantage}}) {
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& p = (*x)[l];
      const auto& q = (*y)[l];
      if (p.mu_w != q.mu_w || p.sigma_w != q.sigma_w || p.mu_b != q.mu_b || p.sigma_b != q.sigma_b) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace agefair::nn
