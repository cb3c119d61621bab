#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "agefair/neural.hpp"
#include "oracles/finite_difference.hpp"

using namespace agefair;
using namespace agefair::nn;

namespace {

NetworkShape small_shape() {
  NetworkShape s;
  s.hidden = 8;
  s.atoms = 11;
  s.v_min = 43.0;
  s.v_max = 50.0;
  return s;
}

std::vector<double> input4(double a, double b, double c, double d) { return {a, b, c, d}; }

}  // namespace

TEST(Atoms, ExactGrid) {
  const Vector z = make_atoms(51, 45.0, 50.0);
  EXPECT_EQ(z(0), 45.0);
  EXPECT_EQ(z(50), 50.0);
  for (int i = 1; i < 51; ++i) EXPECT_NEAR(z(i) - z(i - 1), 0.1, 1e-12);
}

TEST(NoiseTransform, SignedRoot) {
  EXPECT_EQ(noise_transform(4.0), 2.0);
  EXPECT_EQ(noise_transform(-9.0), -3.0);
  EXPECT_EQ(noise_transform(0.0), 0.0);
}

TEST(NoiseTransform, MeanZeroOverDraws) {
  Rng rng(3);
  std::normal_distribution<double> normal;
  const int n = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = noise_transform(normal(rng));
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(NoisyLayer, InitialisationRanges) {
  Rng rng(1);
  const NoisyLayer l = NoisyLayer::create(16, 9, 0.4, Activation::kRelu, rng);
  const double bound = 1.0 / std::sqrt(16.0);
  EXPECT_LE(l.mu_w.cwiseAbs().maxCoeff(), bound);
  EXPECT_LE(l.mu_b.cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE((l.sigma_w.array() == 0.4 / 4.0).all());
  EXPECT_TRUE((l.sigma_b.array() == 0.4 / 4.0).all());
}

TEST(NoisyLayer, FactorisedNoise) {
  Rng rng(2);
  NoisyLayer l = NoisyLayer::create(5, 3, 0.4, Activation::kRelu, rng);
  l.resample(rng);
  const Matrix eps = l.noise_weights();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(eps(i, j), l.eps_out(i) * l.eps_in(j));
  }
  const Matrix w = l.effective_weights(NoiseMode::kSampled);
  EXPECT_TRUE(w.isApprox(l.mu_w + l.sigma_w.cwiseProduct(eps)));
  EXPECT_TRUE(l.effective_weights(NoiseMode::kZero) == l.mu_w);
}

TEST(NoisyLayer, ZeroSigmaEqualsDense) {
  Rng rng(3);
  NoisyLayer l = NoisyLayer::create(6, 4, 0.0, Activation::kNone, rng);
  l.resample(rng);
  DenseLayer d{l.mu_w, l.mu_b, Activation::kNone};
  const Vector x = Vector::LinSpaced(6, -1.0, 2.0);
  const Vector yn = l.effective_weights(NoiseMode::kSampled) * x + l.effective_biases(NoiseMode::kSampled);
  const Vector yd = d.weights * x + d.biases;
  EXPECT_TRUE(yn == yd);
}

TEST(Network, RowsSumToOne) {
  Rng rng(4);
  CategoricalQNetwork net(small_shape(), rng);
  net.resample_noise(rng);
  for (int t = 0; t < 20; ++t) {
    const auto in = input4(0.05 * t, 1.0 - 0.05 * t, 0.3, t % 2);
    for (auto mode : {NoiseMode::kSampled, NoiseMode::kZero}) {
      const Matrix d = net.forward(in, mode);
      ASSERT_EQ(d.rows(), 11);
      ASSERT_EQ(d.cols(), 7);
      for (int a = 0; a < 7; ++a) EXPECT_NEAR(d.col(a).sum(), 1.0, 1e-9);
    }
  }
}

TEST(Network, RejectsNonFinite) {
  Rng rng(4);
  CategoricalQNetwork net(small_shape(), rng);
  EXPECT_THROW(net.forward(input4(0, std::nan(""), 0, 0), NoiseMode::kZero), InvalidInputError);
  EXPECT_THROW(net.forward(input4(0, std::numeric_limits<double>::infinity(), 0, 0), NoiseMode::kZero),
               InvalidInputError);
  Matrix wrong(3, 2);
  wrong.setZero();
  EXPECT_THROW(net.forward_batch(wrong, NoiseMode::kZero), InvalidInputError);
}

TEST(Network, ZeroAdvantageGivesEqualActions) {
  Rng rng(5);
  CategoricalQNetwork net(small_shape(), rng);
  auto& adv = net.advantage[1];
  adv.mu_w.setZero();
  adv.sigma_w.setZero();
  adv.mu_b.setZero();
  adv.sigma_b.setZero();
  net.resample_noise(rng);
  const Matrix d = net.forward(input4(0.2, 0.4, 0.6, 0.8), NoiseMode::kSampled);
  for (int a = 1; a < 7; ++a) EXPECT_LT((d.col(a) - d.col(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Network, ZeroModeDeterministic) {
  Rng rng(6);
  CategoricalQNetwork net(small_shape(), rng);
  net.resample_noise(rng);
  const auto in = input4(0.1, 0.2, 0.3, 0.4);
  EXPECT_TRUE(net.forward(in, NoiseMode::kZero) == net.forward(in, NoiseMode::kZero));
}

TEST(Network, ResampleChangesSampledOutput) {
  Rng rng(7);
  CategoricalQNetwork net(small_shape(), rng);
  const auto in = input4(0.5, 0.5, 0.5, 0.5);
  net.resample_noise(rng);
  EXPECT_FALSE(net.forward(in, NoiseMode::kSampled) == net.forward(in, NoiseMode::kZero));
}

TEST(Network, ZeroSigmaMatchesZeroNoise) {
  Rng rng(8);
  CategoricalQNetwork net(small_shape(), rng);
  for (auto* l : {&net.value[0], &net.value[1], &net.advantage[0], &net.advantage[1]}) {
    l->sigma_w.setZero();
    l->sigma_b.setZero();
  }
  net.resample_noise(rng);
  const auto in = input4(0.9, 0.1, 0.25, 0.5);
  EXPECT_TRUE(net.forward(in, NoiseMode::kSampled) == net.forward(in, NoiseMode::kZero));
}

TEST(Network, DuelingShiftInvariance) {
  Rng rng(9);
  CategoricalQNetwork net(small_shape(), rng);
  const auto in = input4(0.3, 0.6, 0.1, 0.2);
  const Matrix before = net.forward(in, NoiseMode::kZero);
  // Same per-atom constant on every action's advantage logit.
  const int atoms = net.shape().atoms;
  for (int a = 0; a < 7; ++a) {
    for (int i = 0; i < atoms; ++i) net.advantage[1].mu_b(a * atoms + i) += 0.37 * (i + 1);
  }
  const Matrix after = net.forward(in, NoiseMode::kZero);
  EXPECT_LT((after - before).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, ForwardCountTracksSamples) {
  Rng rng(10);
  CategoricalQNetwork net(small_shape(), rng);
  net.forward(input4(0, 0, 0, 0), NoiseMode::kZero);
  Matrix batch(4, 5);
  batch.setConstant(0.1);
  net.forward_batch(batch, NoiseMode::kZero);
  EXPECT_EQ(net.forward_count(), 6u);
  net.reset_forward_count();
  EXPECT_EQ(net.forward_count(), 0u);
}

TEST(QValues, PointMassAndUniform) {
  const Vector z = make_atoms(11, 43.0, 50.0);
  Matrix d = Matrix::Zero(11, 2);
  d(4, 0) = 1.0;
  d.col(1).setConstant(1.0 / 11.0);
  const Vector q = q_values(d, z);
  EXPECT_DOUBLE_EQ(q(0), z(4));
  EXPECT_NEAR(q(1), 46.5, 1e-12);
}

TEST(QValues, MatchesBruteForce) {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector z = make_atoms(21, -3.0, 7.0);
  Matrix d(21, 7);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = unit(rng);
  for (int a = 0; a < 7; ++a) d.col(a) /= d.col(a).sum();
  const Vector q = q_values(d, z);
  for (int a = 0; a < 7; ++a) {
    double s = 0.0;
    for (int i = 0; i < 21; ++i) s += d(i, a) * z(i);
    EXPECT_NEAR(q(a), s, 1e-12);
  }
}

TEST(Argmax, LowestIndexOnTies) {
  Vector v(4);
  v << 1.0, 3.0, 3.0, 2.0;
  EXPECT_EQ(argmax(v), 1);
}

TEST(Projection, IdentityOnSupport) {
  const Vector z = make_atoms(11, 0.0, 10.0);
  Rng rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix next(11, 1);
  for (int i = 0; i < 11; ++i) next(i, 0) = unit(rng);
  next /= next.sum();
  const std::vector<double> r{0.0};
  const std::vector<double> g{1.0};
  const Matrix out = project_target(r, next, g, z);
  EXPECT_LT((out - next).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, ClampsToTop) {
  const Vector z = make_atoms(11, 0.0, 10.0);
  Matrix next = Matrix::Constant(11, 1, 1.0 / 11.0);
  const std::vector<double> r{25.0};
  const std::vector<double> g{0.9};
  const Matrix out = project_target(r, next, g, z);
  EXPECT_NEAR(out(10, 0), 1.0, 1e-12);
  EXPECT_NEAR(out.col(0).head(10).sum(), 0.0, 1e-12);
}

TEST(Projection, PreservesClampedMeanAndMass) {
  const Vector z = make_atoms(51, 0.0, 3.0);
  Rng rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int batch = 200;
  Matrix next(51, batch);
  std::vector<double> r(batch);
  std::vector<double> g(batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < 51; ++i) next(i, b) = unit(rng);
    next.col(b) /= next.col(b).sum();
    r[static_cast<std::size_t>(b)] = 4.0 * unit(rng) - 0.5;
    g[static_cast<std::size_t>(b)] = unit(rng);
  }
  const Matrix out = project_target(r, next, g, z);
  for (int b = 0; b < batch; ++b) {
    EXPECT_NEAR(out.col(b).sum(), 1.0, 1e-9);
    EXPECT_GE(out.col(b).minCoeff(), 0.0);
    double expect = 0.0;
    for (int i = 0; i < 51; ++i) {
      expect += next(i, b) * std::clamp(r[static_cast<std::size_t>(b)] + g[static_cast<std::size_t>(b)] * z(i), 0.0, 3.0);
    }
    EXPECT_NEAR(out.col(b).dot(z), expect, 1e-9);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = oracle::random_instance(seed);
    const auto err = oracle::check_gradients(inst.net, inst.x, inst.actions, inst.targets, NoiseMode::kSampled);
    EXPECT_LT(err.dense, 1e-3) << "seed " << seed;
    EXPECT_LT(err.noisy_mu, 1e-3) << "seed " << seed;
    EXPECT_LT(err.noisy_sigma, 1e-3) << "seed " << seed;
  }
}

TEST(Gradients, ZeroNoiseModeHasNoSigmaGradient) {
  auto inst = oracle::random_instance(3);
  NetworkGradients g;
  compute_gradients(inst.net, inst.x, inst.actions, inst.targets, NoiseMode::kZero, g);
  EXPECT_EQ(g.value[0].sigma_w.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.advantage[1].sigma_b.cwiseAbs().maxCoeff(), 0.0);
  const auto err = oracle::check_gradients(inst.net, inst.x, inst.actions, inst.targets, NoiseMode::kZero);
  EXPECT_LT(err.worst(), 1e-3);
}

TEST(Training, TargetEqualPredictionHasEntropyLoss) {
  Rng rng(14);
  CategoricalQNetwork net(small_shape(), rng);
  net.resample_noise(rng);
  Matrix x(4, 1);
  x << 0.2, 0.4, 0.1, 0.9;
  const Matrix d = net.forward(std::span<const double>(x.data(), 4), NoiseMode::kSampled);
  const Matrix target = d.col(2);
  const std::vector<int> a{2};
  double entropy = 0.0;
  for (int i = 0; i < target.rows(); ++i) entropy -= target(i, 0) * std::log(target(i, 0));
  NetworkGradients g;
  const double loss = compute_gradients(net, x, a, target, NoiseMode::kSampled, g);
  EXPECT_NEAR(loss, entropy, 1e-12);
  EXPECT_LT(g.advantage[1].mu_b.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.value[1].mu_b.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.trunk[0].weights.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Training, IdenticalNetsStayIdentical) {
  auto inst = oracle::random_instance(5);
  CategoricalQNetwork a = inst.net;
  CategoricalQNetwork b = inst.net;
  backward_and_step(a, inst.x, inst.actions, inst.targets, 0.05);
  backward_and_step(b, inst.x, inst.actions, inst.targets, 0.05);
  EXPECT_TRUE(same_parameters(a, b));
  EXPECT_FALSE(same_parameters(a, inst.net));
}

TEST(Training, StepReducesLoss) {
  auto inst = oracle::random_instance(6);
  const double before = backward_and_step(inst.net, inst.x, inst.actions, inst.targets, 0.01);
  const double after = cross_entropy_loss(inst.net, inst.x, inst.actions, inst.targets, NoiseMode::kSampled);
  EXPECT_LT(after, before);
}

TEST(Training, RejectsBadLearningRate) {
  auto inst = oracle::random_instance(7);
  EXPECT_THROW(backward_and_step(inst.net, inst.x, inst.actions, inst.targets, 0.0), ConfigError);
}

TEST(Training, DivergenceLeavesNetworkUntouched) {
  auto inst = oracle::random_instance(8);
  const CategoricalQNetwork before = inst.net;
  inst.targets(0, 0) = std::nan("");
  try {
    backward_and_step(inst.net, inst.x, inst.actions, inst.targets, 0.1);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    ASSERT_TRUE(e.last_finite());
    EXPECT_TRUE(same_parameters(*e.last_finite(), before));
  }
  EXPECT_TRUE(same_parameters(inst.net, before));
}

TEST(Checkpoint, RoundTripBitIdentical) {
  Rng rng(15);
  CategoricalQNetwork net(small_shape(), rng);
  std::ostringstream first;
  write_checkpoint(first, net);
  std::istringstream in(first.str());
  const CategoricalQNetwork back = read_checkpoint(in);
  EXPECT_TRUE(same_parameters(net, back));
  EXPECT_TRUE(back.shape() == net.shape());
  std::ostringstream second;
  write_checkpoint(second, back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(first.str().rfind("AGEFAIR-CKPT v1\n", 0), 0u);
}

TEST(Checkpoint, RejectsCorruption) {
  Rng rng(16);
  CategoricalQNetwork net(small_shape(), rng);
  std::ostringstream out;
  write_checkpoint(out, net);
  const std::string text = out.str();

  std::istringstream bad_header("AGEFAIR-CKPT v9\n" + text.substr(text.find('\n') + 1));
  EXPECT_THROW(read_checkpoint(bad_header), CheckpointError);

  std::string truncated = text.substr(0, text.size() / 2);
  std::istringstream cut(truncated);
  EXPECT_THROW(read_checkpoint(cut), CheckpointError);

  std::string garbled = text;
  const auto pos = garbled.find("W ");
  garbled.replace(pos + 2, 3, "x!?");
  std::istringstream junk(garbled);
  EXPECT_THROW(read_checkpoint(junk), CheckpointError);
}

TEST(Shape, Validation) {
  NetworkShape s;
  s.atoms = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = NetworkShape{};
  s.v_max = s.v_min;
  EXPECT_THROW(s.validate(), ConfigError);
  s = NetworkShape{};
  s.hidden = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}
