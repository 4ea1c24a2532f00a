#include "gammase/babble_nhmm.h"

#include <cmath>
#include <doctest.h>
#include <random>
#include <vector>

#include "gammase/common.h"
#include "gammase/corpus.h"
#include "gammase/special.h"
#include "oracles.h"

namespace {

using gammase::BabbleNhmm;
using gammase::BabbleStateLogLik;
using gammase::CccpStats;
using gammase::CccpStep;
using gammase::CccpWeightGradient;
using gammase::CccpWeightHessian;
using gammase::CccpWeightObjective;
using gammase::InitBabbleWeights;
using gammase::InputError;
using gammase::ShapeUpdateStats;
using gammase::SpeechHmm;
using gammase::UpdateBabbleShapes;

SpeechHmm SmallSpeechModel() {
  SpeechHmm m;
  m.trans.resize(2, 2);
  m.trans << 0.8, 0.2, 0.3, 0.7;
  m.basis.resize(4, 2);
  m.basis << 1.0, 0.2, 0.5, 1.5, 2.0, 0.7, 0.3, 1.1;
  m.shape = Eigen::VectorXd::Ones(4);
  m.gain_shape = 12.0;
  return m;
}

struct CccpInstance {
  CccpStats stats;
  Eigen::MatrixXd basis;
  Eigen::VectorXd shape;
  Eigen::VectorXd x;
};

CccpInstance RandomInstance(int K, int nbar, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> ln(0.0, 0.6);
  std::uniform_real_distribution<double> shape_dist(0.3, 3.0);
  CccpInstance inst;
  inst.basis.resize(K, nbar);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < nbar; ++m) inst.basis(k, m) = ln(rng);
  inst.shape.resize(K);
  inst.stats.weighted_obs.resize(K);
  for (int k = 0; k < K; ++k) {
    inst.shape[k] = shape_dist(rng);
    inst.stats.weighted_obs[k] = 5.0 * ln(rng);
  }
  inst.stats.occupancy = 3.0 * ln(rng);
  inst.x = Eigen::VectorXd::Constant(nbar, 1.0);
  for (int m = 0; m < nbar; ++m) inst.x[m] = ln(rng);
  return inst;
}

TEST_CASE("a babble model over an identity mixing matrix reduces to the speech model") {
  SpeechHmm speech = SmallSpeechModel();
  BabbleNhmm babble;
  babble.speech_basis = speech.basis;
  babble.weights = Eigen::MatrixXd::Identity(2, 2);
  babble.trans = speech.trans;
  babble.shape = speech.shape;
  babble.gain_shape = speech.gain_shape;
  babble.Validate();
  CHECK((babble.StateScales() - speech.basis).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> ln(0.0, 0.5);
  Eigen::MatrixXd power(4, 6);
  for (int k = 0; k < 4; ++k)
    for (int t = 0; t < 6; ++t) power(k, t) = ln(rng);
  Eigen::MatrixXd a = BabbleStateLogLik(babble, 0.3, power);
  Eigen::MatrixXd b = gammase::StateLogLik(speech, 0.3, power);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("babble validation rejects inconsistent pieces") {
  SpeechHmm speech = SmallSpeechModel();
  BabbleNhmm babble;
  babble.speech_basis = speech.basis;
  babble.weights = Eigen::MatrixXd::Constant(2, 3, 0.5);
  babble.trans = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  babble.shape = Eigen::VectorXd::Ones(4);
  babble.gain_shape = 15.0;
  babble.Validate();

  BabbleNhmm bad = babble;
  bad.weights(0, 1) = -0.1;
  CHECK_THROWS_AS(bad.Validate(), InputError);

  BabbleNhmm zero_col = babble;
  zero_col.weights.col(2).setZero();  // zero spectral response
  CHECK_THROWS_AS(zero_col.Validate(), InputError);

  BabbleNhmm misaligned = babble;
  misaligned.weights = Eigen::MatrixXd::Constant(3, 3, 0.5);
  CHECK_THROWS_AS(misaligned.Validate(), InputError);
}

TEST_CASE("shape update inverts the digamma of the average statistic") {
  ShapeUpdateStats stats;
  stats.total_weight = 7.0;
  stats.rhs_sum.resize(2);
  stats.rhs_sum << 7.0 * gammase::Digamma(1.0), 7.0 * gammase::Digamma(5.0);
  Eigen::VectorXd beta = UpdateBabbleShapes(stats);
  CHECK(std::fabs(beta[0] - 1.0) < 1e-8);
  CHECK(std::fabs(beta[1] - 5.0) < 1e-7);

  ShapeUpdateStats empty;
  empty.total_weight = 0.0;
  empty.rhs_sum = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(UpdateBabbleShapes(empty), InputError);
}

TEST_CASE("weight objective derivatives match finite differences") {
  auto inst = RandomInstance(5, 3, 21);
  auto f = [&](const Eigen::VectorXd& x) {
    return CccpWeightObjective(x, inst.stats, inst.basis, inst.shape);
  };
  Eigen::VectorXd grad =
      CccpWeightGradient(inst.x, inst.stats, inst.basis, inst.shape);
  Eigen::VectorXd fd_grad = gammase::oracles::FdGradient(f, inst.x, 1e-6);
  CHECK((grad - fd_grad).cwiseAbs().maxCoeff() <
        1e-6 * std::max(1.0, grad.cwiseAbs().maxCoeff()));

  Eigen::MatrixXd hess =
      CccpWeightHessian(inst.x, inst.stats, inst.basis, inst.shape);
  Eigen::MatrixXd fd_hess = gammase::oracles::FdHessian(f, inst.x, 1e-4);
  CHECK((hess - fd_hess).cwiseAbs().maxCoeff() <
        1e-4 * std::max(1.0, hess.cwiseAbs().maxCoeff()));
}

TEST_CASE("weight objective is infinite outside its domain") {
  auto inst = RandomInstance(4, 2, 22);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(std::isinf(
      CccpWeightObjective(zero, inst.stats, inst.basis, inst.shape)));
  CHECK_THROWS_AS(
      CccpWeightGradient(zero, inst.stats, inst.basis, inst.shape),
      InputError);
}

TEST_CASE("the data half of the weight curvature is positive semidefinite") {
  for (std::uint64_t seed : {31, 32, 33}) {
    auto inst = RandomInstance(6, 4, seed);
    Eigen::VectorXd zero_shape = Eigen::VectorXd::Zero(6);
    Eigen::MatrixXd convex_part =
        CccpWeightHessian(inst.x, inst.stats, inst.basis, zero_shape);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(convex_part);
    CAPTURE(seed);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("scalar weight update has a known fixed point") {
  // One bin, one basis column: objective 2/x + 2 ln(3x), minimized at 1.
  Eigen::MatrixXd basis(1, 1);
  basis << 3.0;
  Eigen::VectorXd shape(1);
  shape << 2.0;
  CccpStats stats;
  stats.weighted_obs.resize(1);
  stats.weighted_obs << 6.0;
  stats.occupancy = 1.0;

  Eigen::VectorXd x(1);
  x << 0.25;
  double prev = CccpWeightObjective(x, stats, basis, shape);
  for (int round = 0; round < 60; ++round) {
    x = CccpStep(x, stats, basis, shape);
    double cur = CccpWeightObjective(x, stats, basis, shape);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
  CHECK(std::fabs(x[0] - 1.0) < 1e-6);

  Eigen::VectorXd fixed(1);
  fixed << 1.0;
  Eigen::VectorXd next = CccpStep(fixed, stats, basis, shape);
  CHECK(std::fabs(next[0] - 1.0) < 1e-6);
}

TEST_CASE("weight updates never increase the objective") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    auto inst = RandomInstance(6, 4, seed);
    Eigen::VectorXd x = inst.x;
    double prev = CccpWeightObjective(x, inst.stats, inst.basis, inst.shape);
    for (int round = 0; round < 5; ++round) {
      x = CccpStep(x, inst.stats, inst.basis, inst.shape);
      CHECK(x.minCoeff() >= 0.0);
      double cur = CccpWeightObjective(x, inst.stats, inst.basis, inst.shape);
      CAPTURE(seed);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("weight seeding from coefficient streams") {
  // Columns alternate between two far-apart activation patterns; the
  // seeded weight columns must recover both.
  Eigen::MatrixXd stream(2, 8);
  for (int t = 0; t < 8; ++t) {
    if (t % 2 == 0)
      stream.col(t) << 10.0 + 0.01 * t, 0.1;
    else
      stream.col(t) << 0.1, 5.0 + 0.01 * t;
  }
  Eigen::MatrixXd w = InitBabbleWeights({stream}, 2);
  REQUIRE(w.rows() == 2);
  REQUIRE(w.cols() == 2);
  bool first_heavy0 = w(0, 0) > w(1, 0);
  bool second_heavy0 = w(0, 1) > w(1, 1);
  CHECK(first_heavy0 != second_heavy0);  // one column per cluster
  CHECK(w.minCoeff() >= 0.0);

  // Two aligned streams act like their sum.
  Eigen::MatrixXd doubled = InitBabbleWeights({stream, stream}, 2);
  Eigen::MatrixXd summed = InitBabbleWeights({Eigen::MatrixXd(2.0 * stream)}, 2);
  CHECK((doubled - summed).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(InitBabbleWeights(std::vector<Eigen::MatrixXd>{}, 2),
                  InputError);
  CHECK_THROWS_AS(InitBabbleWeights({stream}, 9), InputError);
  Eigen::MatrixXd other(3, 8);
  other.setOnes();
  CHECK_THROWS_AS(InitBabbleWeights({stream, other}, 2), InputError);
}

TEST_CASE("babble training increases the likelihood") {
  gammase::SyntheticSpeechConfig gen;
  gen.num_states = 2;
  gen.num_bins = 8;
  gen.num_frames = 220;
  gen.seed = 55;
  auto speech_data = gammase::GenSyntheticSpeech(gen);

  gammase::SpeechTrainOptions sopts;
  sopts.num_states = 2;
  sopts.max_iters = 4;
  auto strained = gammase::TrainSpeechHmm({speech_data.power}, sopts);

  // Babble material: a different draw through the same spectral space.
  gen.seed = 56;
  gen.self_loop = 0.6;
  auto babble_data = gammase::GenSyntheticSpeech(gen);

  gammase::BabbleTrainOptions bopts;
  bopts.num_states = 2;
  bopts.max_iters = 5;
  bopts.cccp_rounds = 2;
  auto result = gammase::TrainBabbleNhmm(strained.model, {babble_data.power},
                                         bopts);
  result.model.Validate();
  REQUIRE(result.loglik_history.size() == 5);
  CHECK(result.model.weights.minCoeff() >= 0.0);
  REQUIRE(result.gain_scales.size() == 1);
  CHECK(result.gain_scales[0] > 0.0);
  for (std::size_t i = 1; i < result.loglik_history.size(); ++i) {
    CAPTURE(i);
    CHECK(result.loglik_history[i] >=
          result.loglik_history[i - 1] -
              1e-6 * std::fabs(result.loglik_history[i - 1]));
  }
}

TEST_CASE("babble moment matching goes through the combined scales") {
  SpeechHmm speech = SmallSpeechModel();
  BabbleNhmm babble;
  babble.speech_basis = speech.basis;
  babble.weights.resize(2, 2);
  babble.weights << 0.7, 0.1, 0.3, 0.9;
  babble.trans = speech.trans;
  babble.shape = Eigen::VectorXd::Constant(4, 1.2);
  babble.gain_shape = 9.0;

  SpeechHmm wrapped;
  wrapped.trans = babble.trans;
  wrapped.basis = babble.StateScales();
  wrapped.shape = babble.shape;
  wrapped.gain_shape = babble.gain_shape;

  Eigen::MatrixXd power = Eigen::MatrixXd::Constant(4, 5, 1.7);
  CHECK(gammase::BabbleMomentMatchGainScale(babble, power) ==
        gammase::MomentMatchGainScale(wrapped, power));
}

}  // namespace
