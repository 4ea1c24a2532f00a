#include "gammase/speech_hmm.h"

#include <cmath>
#include <doctest.h>
#include <random>
#include <vector>

#include "gammase/common.h"
#include "gammase/corpus.h"
#include "oracles.h"

namespace {

using gammase::ForwardBackward;
using gammase::GainPosterior;
using gammase::InputError;
using gammase::MomentMatchGainScale;
using gammase::NmfProject;
using gammase::SpeechHmm;
using gammase::SpeechTrainOptions;
using gammase::StateLogLik;
using gammase::StationaryDistribution;
using gammase::TrainSpeechHmm;

SpeechHmm TwoStateModel() {
  SpeechHmm m;
  m.trans.resize(2, 2);
  m.trans << 0.9, 0.1, 0.5, 0.5;
  m.basis.resize(3, 2);
  m.basis << 1.0, 2.0, 0.5, 1.0, 2.0, 0.25;
  m.shape.resize(3);
  m.shape << 1.0, 0.8, 1.5;
  m.gain_shape = 10.0;
  return m;
}

Eigen::MatrixXd RandomStochastic(int n, std::mt19937_64* rng) {
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      m(i, j) = dist(*rng);
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
  return m;
}

TEST_CASE("stationary distribution of a two-state chain") {
  Eigen::MatrixXd trans(2, 2);
  trans << 0.9, 0.1, 0.5, 0.5;
  Eigen::VectorXd pi = StationaryDistribution(trans);
  CHECK(std::fabs(pi[0] - 5.0 / 6.0) < 1e-10);
  CHECK(std::fabs(pi[1] - 1.0 / 6.0) < 1e-10);
  CHECK(std::fabs(pi.sum() - 1.0) < 1e-12);
}

TEST_CASE("model validation rejects malformed pieces") {
  SpeechHmm m = TwoStateModel();
  m.Validate();

  SpeechHmm bad_rows = m;
  bad_rows.trans(0, 0) = 0.8;  // row no longer sums to 1
  CHECK_THROWS_AS(bad_rows.Validate(), InputError);

  SpeechHmm bad_basis = m;
  bad_basis.basis(1, 1) = 0.0;
  CHECK_THROWS_AS(bad_basis.Validate(), InputError);

  SpeechHmm bad_shape = m;
  bad_shape.shape[0] = -1.0;
  CHECK_THROWS_AS(bad_shape.Validate(), InputError);

  SpeechHmm bad_gain = m;
  bad_gain.gain_shape = 0.0;
  CHECK_THROWS_AS(bad_gain.Validate(), InputError);
}

TEST_CASE("single-bin state log-likelihood has a closed form") {
  // One bin, unit shapes: the marginal likelihood collapses to
  // 2/(b*theta) * K_0(2*sqrt(o/(b*theta))) evaluated at o/b = 3/4,
  // theta = 3, which is K_0(1)/3.
  SpeechHmm m;
  m.trans.resize(1, 1);
  m.trans << 1.0;
  m.basis.resize(1, 1);
  m.basis << 2.0;
  m.shape.resize(1);
  m.shape << 1.0;
  m.gain_shape = 1.0;
  Eigen::MatrixXd power(1, 1);
  power << 1.5;
  Eigen::MatrixXd ll = StateLogLik(m, 3.0, power);
  double want = std::log(0.42102443824070834 / 3.0);
  CHECK(std::fabs(ll(0, 0) - want) < 1e-12);
}

TEST_CASE("state log-likelihood matches direct gain integration") {
  std::mt19937_64 rng(42);
  std::lognormal_distribution<double> ln(0.0, 0.8);
  std::uniform_real_distribution<double> shape_dist(0.4, 3.0);
  SpeechHmm m;
  const int K = 3, N = 2, T = 2;
  m.trans = RandomStochastic(N, &rng);
  m.basis.resize(K, N);
  m.shape.resize(K);
  for (int k = 0; k < K; ++k) {
    m.shape[k] = shape_dist(rng);
    for (int i = 0; i < N; ++i) m.basis(k, i) = ln(rng);
  }
  m.gain_shape = 7.5;
  double theta = 0.4;
  Eigen::MatrixXd power(K, T);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) power(k, t) = ln(rng);

  Eigen::MatrixXd ll = StateLogLik(m, theta, power);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      double want = gammase::oracles::StateLogLikQuadrature(
          power.col(t), m.shape, m.basis.col(i), m.gain_shape, theta);
      CAPTURE(t);
      CAPTURE(i);
      CHECK(std::fabs(ll(t, i) - want) <
            1e-8 * std::max(1.0, std::fabs(want)));
    }
  }
}

TEST_CASE("state log-likelihood input checks") {
  SpeechHmm m = TwoStateModel();
  Eigen::MatrixXd power = Eigen::MatrixXd::Constant(3, 4, 1.0);
  CHECK_THROWS_AS(StateLogLik(m, 0.0, power), InputError);
  CHECK_THROWS_AS(StateLogLik(m, -1.0, power), InputError);
  Eigen::MatrixXd bad_rows = Eigen::MatrixXd::Constant(2, 4, 1.0);
  CHECK_THROWS_AS(StateLogLik(m, 1.0, bad_rows), InputError);
  Eigen::MatrixXd with_zero = power;
  with_zero(1, 2) = 0.0;
  CHECK_THROWS_AS(StateLogLik(m, 1.0, with_zero), InputError);
}

TEST_CASE("forward-backward agrees with brute-force path enumeration") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ll_dist(-3.0, 1.0);
  const int N = 2, T = 3;
  Eigen::MatrixXd trans = RandomStochastic(N, &rng);
  Eigen::VectorXd initial = StationaryDistribution(trans);
  Eigen::MatrixXd frame_ll(T, N);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) frame_ll(t, i) = ll_dist(rng);

  auto got = ForwardBackward(frame_ll, trans, initial);
  auto want = gammase::oracles::EnumeratePaths(frame_ll, trans, initial);
  CHECK(std::fabs(got.loglik - want.loglik) < 1e-12);
  CHECK((got.posteriors - want.posteriors).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got.pairwise_sum - want.pairwise_sum).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward-backward posterior structure") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ll_dist(-40.0, 0.0);
  const int N = 4, T = 25;
  Eigen::MatrixXd trans = RandomStochastic(N, &rng);
  Eigen::VectorXd initial = StationaryDistribution(trans);
  Eigen::MatrixXd frame_ll(T, N);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) frame_ll(t, i) = ll_dist(rng);

  auto res = ForwardBackward(frame_ll, trans, initial);
  for (int t = 0; t < T; ++t)
    CHECK(std::fabs(res.posteriors.row(t).sum() - 1.0) < 1e-10);
  CHECK(res.posteriors.minCoeff() >= 0.0);
  CHECK(std::fabs(res.pairwise_sum.sum() - (T - 1)) < 1e-9);
}

TEST_CASE("forward-backward survives very unlikely frames") {
  Eigen::MatrixXd trans(2, 2);
  trans << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd initial(2);
  initial << 0.5, 0.5;
  Eigen::MatrixXd frame_ll(3, 2);
  frame_ll << -1e4, -1e4, -2e4, -1.9e4, -5.0, -5.0;
  auto res = ForwardBackward(frame_ll, trans, initial);
  CHECK(std::isfinite(res.loglik));
  for (int t = 0; t < 3; ++t)
    CHECK(std::fabs(res.posteriors.row(t).sum() - 1.0) < 1e-9);
}

TEST_CASE("gain posterior parameters") {
  SpeechHmm m;
  m.trans.resize(1, 1);
  m.trans << 1.0;
  m.basis.resize(2, 1);
  m.basis << 1.0, 2.0;
  m.shape.resize(2);
  m.shape << 1.0, 1.0;
  m.gain_shape = 15.0;
  Eigen::VectorXd frame(2);
  frame << 2.0, 6.0;
  auto p = GainPosterior(m, 0.1, frame, 0);
  CHECK(p.order == 13.0);
  CHECK(p.rate == doctest::Approx(10.0));
  CHECK(p.tau == doctest::Approx(5.0));

  // A zero-length frame means no evidence: the posterior is the prior.
  auto prior = GainPosterior(m, 0.1, Eigen::VectorXd(), 0);
  CHECK(prior.order == 15.0);
  CHECK(prior.tau == 0.0);
  CHECK(prior.rate == doctest::Approx(10.0));

  CHECK_THROWS_AS(GainPosterior(m, 0.1, frame, 1), InputError);
  CHECK_THROWS_AS(GainPosterior(m, 0.0, frame, 0), InputError);
}

TEST_CASE("moment-matched gain scale") {
  SpeechHmm m = TwoStateModel();
  Eigen::MatrixXd power = Eigen::MatrixXd::Constant(3, 5, 2.0);
  // mean power 2, mean basis response mean_k,i(alpha_k b_ki).
  double mean_ab = (m.basis.array().colwise() * m.shape.array()).mean();
  double want = 2.0 / (m.gain_shape * mean_ab);
  CHECK(MomentMatchGainScale(m, power) == doctest::Approx(want));
}

TEST_CASE("basis projection produces a consistent factorization") {
  SpeechHmm m = TwoStateModel();
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(0.0, 0.5);
  Eigen::MatrixXd power(3, 12);
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < 12; ++t) power(k, t) = ln(rng);
  double theta = MomentMatchGainScale(m, power);
  auto proj = NmfProject(m, theta, power);
  CHECK(proj.coefficients.rows() == 2);
  CHECK(proj.coefficients.cols() == 12);
  CHECK(proj.coefficients.minCoeff() >= 0.0);
  Eigen::MatrixXd scaled =
      (m.basis.array().colwise() * m.shape.array()).matrix();
  CHECK((proj.approx - scaled * proj.coefficients).cwiseAbs().maxCoeff() <
        1e-12);
  // Same call twice is bit-identical.
  auto again = NmfProject(m, theta, power);
  CHECK((proj.coefficients - again.coefficients).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("speech training increases the likelihood") {
  gammase::SyntheticSpeechConfig gen;
  gen.num_states = 3;
  gen.num_bins = 9;
  gen.num_frames = 300;
  gen.seed = 99;
  auto data = gammase::GenSyntheticSpeech(gen);

  SpeechTrainOptions opts;
  opts.num_states = 3;
  opts.max_iters = 8;
  opts.seed = 1;
  opts.threads = 1;
  auto result = TrainSpeechHmm({data.power}, opts);
  result.model.Validate();
  REQUIRE(result.loglik_history.size() == 8);
  REQUIRE(result.gain_scales.size() == 1);
  CHECK(result.gain_scales[0] > 0.0);
  for (std::size_t i = 1; i < result.loglik_history.size(); ++i) {
    CAPTURE(i);
    CHECK(result.loglik_history[i] >=
          result.loglik_history[i - 1] -
              1e-8 * std::fabs(result.loglik_history[i - 1]));
  }
}

}  // namespace
