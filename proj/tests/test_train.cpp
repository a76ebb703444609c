#include <doctest.h>

#include "oracles.hpp"
#include "qfed/rng.hpp"
#include "qfed/train.hpp"

using namespace qfed;
using model::ModelParams;
using train::AdamState;
using train::Batch;

namespace {

ModelParams random_params(int n, int k, bool personal, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, M_PI - 0.05);
  ModelParams p = ModelParams::zeros(n, k, personal);
  for (Eigen::Index i = 0; i < p.theta_b.size(); ++i) p.theta_b[i] = angle(rng);
  for (Eigen::Index i = 0; i < p.theta_p.size(); ++i) p.theta_p[i] = angle(rng);
  return p;
}

Batch random_batch(Eigen::Index size, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Batch b;
  b.inputs.resize(16, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    Eigen::VectorXd v(16);
    for (Eigen::Index j = 0; j < 16; ++j) v[j] = u(rng);
    b.inputs.col(i) = v / v.norm();
    b.labels.push_back(int(i % 2));
  }
  return b;
}

}  // namespace

TEST_CASE("cross entropy closed forms") {
  Eigen::Matrix2Xd scores(2, 1);
  const int label0[] = {0};
  const int label1[] = {1};

  scores << 0.37, 0.37;
  CHECK(train::cross_entropy_loss(scores, label0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  scores << 1.0, -1.0;
  CHECK(train::cross_entropy_loss(scores, label0) ==
        doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(train::cross_entropy_loss(scores, label1) ==
        doctest::Approx(std::log(1.0 + std::exp(2.0))).epsilon(1e-12));

  CHECK_THROWS_AS(train::cross_entropy_loss(Eigen::Matrix2Xd(2, 0), std::span<const int>{}),
                  std::invalid_argument);
}

TEST_CASE("losses stay positive and hit ln 2 at equal scores") {
  auto rng = make_rng(88);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::Matrix2Xd scores(2, 3);
    std::vector<int> labels = {0, 1, 0};
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = u(rng);
    CHECK(train::cross_entropy_loss(scores, labels) > 0.0);
    scores.row(1) = scores.row(0);
    CHECK(train::cross_entropy_loss(scores, labels) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("symmetric batches at the zero point have zero gradient") {
  // Identity circuit on a basis input scores (+1, +1); the same sample
  // labeled both ways contributes opposite softmax weights that cancel.
  const ModelParams zeros = ModelParams::zeros(4, 3, true);
  Batch b;
  b.inputs = Eigen::MatrixXd::Zero(16, 2);
  b.inputs.row(0).setOnes();
  b.labels = {0, 1};
  const Eigen::VectorXd g = train::loss_gradient(zeros, b);
  CHECK(g.size() == 56);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("parameter-shift gradients match central finite differences") {
  for (int rep = 0; rep < 4; ++rep) {
    const ModelParams p = random_params(4, 3, true, 300 + std::uint64_t(rep));
    const Batch b = random_batch(2, 400 + std::uint64_t(rep));
    const Eigen::VectorXd analytic = train::loss_gradient(p, b);
    const Eigen::VectorXd fd = oracles::fd_loss_gradient(p, b);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double rel = std::abs(analytic[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-6);
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("adam: zero gradient leaves parameters, advances the clock") {
  AdamState s = AdamState::init(4);
  Eigen::VectorXd params = Eigen::VectorXd::Constant(4, 0.3);
  const Eigen::VectorXd before = params;
  train::adam_step(s, params, Eigen::VectorXd::Zero(4));
  CHECK(params == before);
  CHECK(s.t == 1);
  CHECK_THROWS_AS(train::adam_step(s, params, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("adam: first step has magnitude close to the learning rate") {
  AdamState s = AdamState::init(3, 0.01);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd grad(3);
  grad << 0.5, -2.0, 1e-3;
  train::adam_step(s, params, grad);
  for (Eigen::Index i = 0; i < 3; ++i) {
    // t=1 closed form: -lr * g / (|g| + eps), i.e. -lr * sign(g) up to eps.
    const double expected = -s.lr * grad[i] / (std::abs(grad[i]) + s.epsilon);
    CHECK(params[i] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("adam: constant gradient drives steps of magnitude -> lr") {
  AdamState s = AdamState::init(2, 0.01);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd grad(2);
  grad << 0.7, -0.2;
  double prev0 = params[0];
  for (int t = 0; t < 400; ++t) {
    prev0 = params[0];
    train::adam_step(s, params, grad);
  }
  const double step0 = params[0] - prev0;
  CHECK(step0 < 0.0);  // moves against the gradient sign
  CHECK(std::abs(std::abs(step0) - s.lr) < 0.05 * s.lr);
  CHECK(params[1] > 0.0);
}

TEST_CASE("local_train: zero epochs is a no-op") {
  ModelParams p = random_params(4, 3, true, 9);
  const ModelParams before = p;
  AdamState adam = AdamState::init(p.total_params());
  const Batch b = random_batch(4, 10);
  const std::vector<int> idx = {0, 1, 2, 3};
  const auto r = train::local_train(b.inputs, b.labels, idx, p, 0, 2, adam, 7);
  CHECK(r.epoch_loss.empty());
  CHECK(p.theta_b == before.theta_b);
  CHECK(p.theta_p == before.theta_p);
}

TEST_CASE("local_train improves a separable two-sample problem") {
  ModelParams p = random_params(4, 3, true, 21);
  AdamState adam = AdamState::init(p.total_params());

  Batch b;
  b.inputs.resize(16, 2);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(16), c = Eigen::VectorXd::Zero(16);
  a[0] = 1.0;
  c[15] = 1.0;
  b.inputs.col(0) = a;
  b.inputs.col(1) = c;
  b.labels = {0, 1};

  const double before = train::batch_loss(p, b);
  const std::vector<int> idx = {0, 1};
  for (int round = 0; round < 5; ++round)
    train::local_train(b.inputs, b.labels, idx, p, 1, 2, adam, 100 + std::uint64_t(round));
  const double after = train::batch_loss(p, b);
  CHECK(after < before);
}

TEST_CASE("local_train is deterministic under a fixed seed") {
  const Batch b = random_batch(10, 33);
  const std::vector<int> idx = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  ModelParams p1 = random_params(4, 3, true, 50);
  ModelParams p2 = p1;
  AdamState a1 = AdamState::init(p1.total_params());
  AdamState a2 = AdamState::init(p2.total_params());
  train::local_train(b.inputs, b.labels, idx, p1, 2, 4, a1, 777);
  train::local_train(b.inputs, b.labels, idx, p2, 2, 4, a2, 777);
  CHECK(p1.theta_b == p2.theta_b);
  CHECK(p1.theta_p == p2.theta_p);
}

TEST_CASE("local_train rejects an empty client dataset") {
  ModelParams p = ModelParams::zeros(4, 3, true);
  AdamState adam = AdamState::init(p.total_params());
  const Batch b = random_batch(2, 1);
  CHECK_THROWS_AS(
      train::local_train(b.inputs, b.labels, std::span<const int>{}, p, 1, 2, adam, 1),
      std::invalid_argument);
}

TEST_CASE("the base-angle clamp projects and counts") {
  ModelParams p = random_params(4, 3, true, 60);
  AdamState adam = AdamState::init(p.total_params(), 0.5);  // big steps force clamping
  const Batch b = random_batch(6, 61);
  const std::vector<int> idx = {0, 1, 2, 3, 4, 5};
  const train::AngleClamp clamp{0.0, M_PI - 0.05};
  const auto r = train::local_train(b.inputs, b.labels, idx, p, 3, 2, adam, 62, clamp);
  CHECK(p.theta_b.minCoeff() >= 0.0);
  CHECK(p.theta_b.maxCoeff() <= M_PI - 0.05);
  CHECK(r.clamped_params > 0);
}

TEST_CASE("server-architecture training updates base angles only") {
  ModelParams p = random_params(4, 3, false, 70);
  CHECK(p.total_params() == 48);
  AdamState adam = AdamState::init(48);
  const Batch b = random_batch(4, 71);
  const std::vector<int> idx = {0, 1, 2, 3};
  const ModelParams before = p;
  train::local_train(b.inputs, b.labels, idx, p, 1, 4, adam, 72);
  CHECK(p.theta_p.size() == 0);
  CHECK(p.theta_b != before.theta_b);
}
