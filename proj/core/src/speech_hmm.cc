#include "gammase/speech_hmm.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "em_stats.h"
#include "gammase/common.h"
#include "gammase/dsp.h"
#include "gammase/kmeans.h"
#include "gammase/parallel.h"
#include "gammase/special.h"

namespace gammase {

namespace {

constexpr double kScaleFloor = 1e-300;
constexpr double kEmptyStateOccupancy = 1e-8;

void CheckRowStochastic(const Eigen::MatrixXd& m, const char* what) {
  GS_CHECK_INPUT(m.rows() == m.cols() && m.rows() > 0, what,
                 " must be square and non-empty");
  GS_CHECK_INPUT(m.minCoeff() >= 0.0, what, " has negative entries");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    GS_CHECK_INPUT(std::fabs(m.row(i).sum() - 1.0) < 1e-8, what, " row ", i,
                   " sums to ", m.row(i).sum());
}

}  // namespace

void SpeechHmm::Validate() const {
  CheckRowStochastic(trans, "transition matrix");
  GS_CHECK_INPUT(basis.rows() > 0 && basis.cols() == trans.rows(),
                 "basis must be K x N with N matching the chain");
  GS_CHECK_INPUT(basis.allFinite() && basis.minCoeff() > 0.0,
                 "basis entries must be positive and finite");
  GS_CHECK_INPUT(shape.size() == basis.rows(),
                 "shape vector length must equal the bin count");
  GS_CHECK_INPUT(shape.allFinite() && shape.minCoeff() > 0.0,
                 "shapes must be positive and finite");
  GS_CHECK_INPUT(gain_shape > 0.0 && std::isfinite(gain_shape),
                 "gain shape must be positive");
}

Eigen::VectorXd StationaryDistribution(const Eigen::MatrixXd& trans) {
  CheckRowStochastic(trans, "transition matrix");
  const Eigen::Index n = trans.rows();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd next = trans.transpose() * p;
    next /= next.sum();
    double delta = (next - p).lpNorm<1>();
    p = next;
    if (delta < 1e-12) return p;
  }
  GS_CHECK_NUMERIC(false,
                   "stationary distribution power iteration did not converge");
  return p;
}

Eigen::MatrixXd StateLogLik(const SpeechHmm& model, double theta,
                            const Eigen::MatrixXd& power) {
  model.Validate();
  GS_CHECK_INPUT(theta > 0.0 && std::isfinite(theta),
                 "gain scale must be positive, got ", theta);
  GS_CHECK_INPUT(power.rows() == model.num_bins(), "power has ", power.rows(),
                 " bins, model expects ", model.num_bins());
  GS_CHECK_INPUT(power.allFinite() && power.minCoeff() > 0.0,
                 "power must be strictly positive; apply FloorPeriodogram");

  const int N = model.num_states();
  const int K = model.num_bins();
  const Eigen::Index T = power.cols();
  const double phi = model.gain_shape;
  const double vartheta = phi - model.shape.sum();
  const double rate = 1.0 / theta;

  double const_term = std::log(2.0) - phi * std::log(theta) - std::lgamma(phi);
  for (int k = 0; k < K; ++k) const_term -= std::lgamma(model.shape[k]);

  // Per-state: -sum_k alpha_k ln b_ki.  Per-frame: sum_k (alpha_k-1) ln o_kt.
  Eigen::MatrixXd log_basis = model.basis.array().log().matrix();
  Eigen::VectorXd state_term = -(log_basis.transpose() * model.shape);
  Eigen::MatrixXd log_power = power.array().log().matrix();
  Eigen::VectorXd frame_term =
      log_power.transpose() * (model.shape.array() - 1.0).matrix();

  // tau(t,i) = sum_k o_kt / b_ki via one GEMM.
  Eigen::MatrixXd inv_basis = model.basis.cwiseInverse();
  Eigen::MatrixXd tau = power.transpose() * inv_basis;  // T x N

  Eigen::MatrixXd out(T, N);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      double tau_ti = tau(t, i);
      double bessel = LogBesselK(vartheta, 2.0 * std::sqrt(rate * tau_ti));
      out(t, i) = const_term + frame_term[t] + state_term[i] +
                  0.5 * vartheta * (std::log(tau_ti) - std::log(rate)) + bessel;
    }
  }
  GS_CHECK_NUMERIC(out.allFinite(), "state log-likelihood overflowed");
  return out;
}

ForwardBackwardResult ForwardBackward(const Eigen::MatrixXd& frame_loglik,
                                      const Eigen::MatrixXd& trans,
                                      const Eigen::VectorXd& initial) {
  const Eigen::Index T = frame_loglik.rows();
  const Eigen::Index N = frame_loglik.cols();
  CheckRowStochastic(trans, "transition matrix");
  GS_CHECK_INPUT(trans.rows() == N, "transition size mismatch");
  GS_CHECK_INPUT(initial.size() == N && initial.minCoeff() >= 0.0 &&
                     std::fabs(initial.sum() - 1.0) < 1e-8,
                 "initial distribution must be a length-N probability vector");
  GS_CHECK_INPUT(T > 0, "no frames");
  GS_CHECK_INPUT(frame_loglik.allFinite(), "non-finite frame log-likelihood");

  // Per-frame max subtraction keeps the scaled likelihoods in range.
  Eigen::VectorXd frame_max = frame_loglik.rowwise().maxCoeff();
  Eigen::MatrixXd lik =
      (frame_loglik.colwise() - frame_max).array().exp().matrix();

  Eigen::MatrixXd fwd(T, N);
  Eigen::VectorXd scale(T);
  Eigen::VectorXd f = initial.cwiseProduct(lik.row(0).transpose());
  scale[0] = std::max(f.sum(), kScaleFloor);
  f /= scale[0];
  fwd.row(0) = f.transpose();
  for (Eigen::Index t = 1; t < T; ++t) {
    f = (trans.transpose() * f).cwiseProduct(lik.row(t).transpose());
    scale[t] = std::max(f.sum(), kScaleFloor);
    f /= scale[t];
    fwd.row(t) = f.transpose();
  }

  ForwardBackwardResult res;
  res.posteriors.resize(T, N);
  Eigen::MatrixXd outer_sum = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(N);
  res.posteriors.row(T - 1) = fwd.row(T - 1);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    Eigen::VectorXd wb =
        lik.row(t + 1).transpose().cwiseProduct(b) / scale[t + 1];
    outer_sum.noalias() += fwd.row(t).transpose() * wb.transpose();
    b = trans * wb;
    Eigen::VectorXd post = fwd.row(t).transpose().cwiseProduct(b);
    double z = std::max(post.sum(), kScaleFloor);
    res.posteriors.row(t) = (post / z).transpose();
  }
  res.pairwise_sum = trans.cwiseProduct(outer_sum);
  res.loglik = scale.array().log().sum() + frame_max.sum();
  return res;
}

GigParams GainPosterior(const SpeechHmm& model, double theta,
                        const Eigen::VectorXd& power_frame, int state) {
  GS_CHECK_INPUT(state >= 0 && state < model.num_states(), "state ", state,
                 " out of range");
  GS_CHECK_INPUT(theta > 0.0, "gain scale must be positive");
  GigParams p;
  p.rate = 1.0 / theta;
  if (power_frame.size() == 0) {
    p.order = model.gain_shape;
    p.tau = 0.0;
    return p;
  }
  GS_CHECK_INPUT(power_frame.size() == model.num_bins(),
                 "frame length mismatch");
  GS_CHECK_INPUT(power_frame.minCoeff() > 0.0,
                 "power must be strictly positive; apply FloorPeriodogram");
  p.order = model.gain_shape - model.shape.sum();
  p.tau = (power_frame.cwiseQuotient(model.basis.col(state))).sum();
  return p;
}

double MomentMatchGainScale(const SpeechHmm& model,
                            const Eigen::MatrixXd& power) {
  double mean_power = power.mean();
  double mean_scaled_basis =
      (model.basis.array().colwise() * model.shape.array()).mean();
  double theta = mean_power / (model.gain_shape * mean_scaled_basis);
  return std::max(theta, 1e-12);
}

namespace internal {

UtteranceStats AccumulateUtterance(const SpeechHmm& model, double theta,
                                   const Eigen::VectorXd& initial,
                                   const Eigen::MatrixXd& power) {
  const int N = model.num_states();
  const Eigen::Index T = power.cols();
  Eigen::MatrixXd loglik = StateLogLik(model, theta, power);
  ForwardBackwardResult fb = ForwardBackward(loglik, model.trans, initial);

  const double vartheta = model.gain_shape - model.shape.sum();
  const double rate = 1.0 / theta;
  Eigen::MatrixXd tau = power.transpose() * model.basis.cwiseInverse();

  Eigen::MatrixXd w_inv_gain(T, N);  // w_ti * E(1/G)
  UtteranceStats st;
  st.loglik = fb.loglik;
  st.pairwise = fb.pairwise_sum;
  st.occupancy = fb.posteriors.colwise().sum();
  st.sum_log_power = power.array().log().matrix().rowwise().sum();
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      double w = fb.posteriors(t, i);
      GigMoments m = ComputeGigMoments({vartheta, rate, tau(t, i)});
      w_inv_gain(t, i) = w * m.mean_inv;
      st.sum_post_gain += w * m.mean;
      st.sum_post_log_gain += w * m.mean_log;
    }
  }
  st.weighted_obs = power * w_inv_gain;  // K x N
  return st;
}

}  // namespace internal

using internal::UtteranceStats;
using internal::AccumulateUtterance;

SpeechTrainResult TrainSpeechHmm(const std::vector<Eigen::MatrixXd>& powers,
                                 const SpeechTrainOptions& opts) {
  GS_CHECK_INPUT(!powers.empty(), "no training spectrograms");
  GS_CHECK_INPUT(opts.num_states > 0 && opts.max_iters > 0,
                 "invalid training options");
  const int N = opts.num_states;
  const int K = static_cast<int>(powers[0].rows());
  const std::size_t R = powers.size();

  std::vector<Eigen::MatrixXd> floored(R);
  Eigen::Index total_frames = 0;
  for (std::size_t r = 0; r < R; ++r) {
    GS_CHECK_INPUT(powers[r].rows() == K,
                   "all spectrograms must share the bin count");
    GS_CHECK_INPUT(powers[r].cols() > 0, "empty spectrogram at index ", r);
    floored[r] = FloorPeriodogram(powers[r]);
    total_frames += floored[r].cols();
  }
  GS_CHECK_INPUT(total_frames >= N, "need at least ", N, " frames, got ",
                 total_frames);

  // ---- Initialization ----
  // Basis from k-means centroids of log-power frames; flat shapes; uniform
  // transitions; per-recording gain scale by moment matching.
  Eigen::Index kmeans_frames =
      std::min<Eigen::Index>(total_frames, opts.max_kmeans_frames);
  Eigen::MatrixXd sample(K, kmeans_frames);
  {
    std::vector<Eigen::Index> index(total_frames);
    std::iota(index.begin(), index.end(), 0);
    if (kmeans_frames < total_frames) {
      std::mt19937_64 rng(opts.seed);
      std::shuffle(index.begin(), index.end(), rng);
      index.resize(kmeans_frames);
      std::sort(index.begin(), index.end());
    }
    std::vector<const Eigen::MatrixXd*> source(total_frames);
    std::vector<Eigen::Index> column(total_frames);
    Eigen::Index pos = 0;
    for (std::size_t r = 0; r < R; ++r)
      for (Eigen::Index t = 0; t < floored[r].cols(); ++t, ++pos) {
        source[pos] = &floored[r];
        column[pos] = t;
      }
    for (Eigen::Index j = 0; j < kmeans_frames; ++j)
      sample.col(j) =
          source[index[j]]->col(column[index[j]]).array().log().matrix();
  }
  SpeechHmm model;
  model.basis = KMeansColumns(sample, N).array().exp().matrix();
  model.basis = model.basis.cwiseMax(1e-300);
  model.shape = Eigen::VectorXd::Ones(K);
  model.gain_shape = opts.gain_shape_init;
  model.trans = Eigen::MatrixXd::Constant(N, N, 1.0 / N);

  SpeechTrainResult result;
  result.gain_scales.resize(R);
  for (std::size_t r = 0; r < R; ++r)
    result.gain_scales[r] = MomentMatchGainScale(model, floored[r]);

  // ---- EM ----
  std::vector<UtteranceStats> stats(R);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::VectorXd initial = StationaryDistribution(model.trans);
    ParallelFor(0, R, opts.threads, [&](std::size_t r) {
      stats[r] = AccumulateUtterance(model, result.gain_scales[r], initial,
                                     floored[r]);
    });

    // Deterministic reduction in recording order.
    double loglik = 0.0;
    Eigen::MatrixXd pairwise = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd weighted_obs = Eigen::MatrixXd::Zero(K, N);
    Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd sum_log_power = Eigen::VectorXd::Zero(K);
    double sum_post_log_gain = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      loglik += stats[r].loglik;
      pairwise += stats[r].pairwise;
      weighted_obs += stats[r].weighted_obs;
      occupancy += stats[r].occupancy;
      sum_log_power += stats[r].sum_log_power;
      sum_post_log_gain += stats[r].sum_post_log_gain;
    }
    result.loglik_history.push_back(loglik);
    Info(internal::StrCat("speech EM iter ", iter, " loglik ", loglik));

    // Transitions.
    for (int i = 0; i < N; ++i) {
      double row_sum = pairwise.row(i).sum();
      if (row_sum > kScaleFloor) {
        model.trans.row(i) = pairwise.row(i) / row_sum;
      } else {
        Warn(internal::StrCat("state ", i,
                              " has no transition mass; keeping its row"));
      }
    }

    // Weighted observation means; empty states keep their basis column.
    Eigen::MatrixXd mu = model.basis.array().colwise() * model.shape.array();
    std::vector<bool> active(N);
    for (int i = 0; i < N; ++i) {
      active[i] = occupancy[i] >= kEmptyStateOccupancy;
      if (!active[i]) {
        Warn(internal::StrCat("state ", i,
                              " occupancy ~ 0; basis column unchanged"));
        continue;
      }
      mu.col(i) = (weighted_obs.col(i) / occupancy[i]).cwiseMax(1e-300);
    }

    // Per-bin shapes: psi(a) - ln a = mean of (ln o - E(lnG) - ln mu).
    const double tf = static_cast<double>(total_frames);
    for (int k = 0; k < K; ++k) {
      double mu_log_term = 0.0;
      for (int i = 0; i < N; ++i)
        if (active[i]) mu_log_term += occupancy[i] * std::log(mu(k, i));
      double rhs =
          (sum_log_power[k] - sum_post_log_gain - mu_log_term) / tf;
      model.shape[k] = SolveShapeEquation(rhs);
    }
    for (int i = 0; i < N; ++i)
      if (active[i])
        model.basis.col(i) =
            (mu.col(i).array() / model.shape.array()).cwiseMax(1e-300);

    // Gain prior: shared shape, per-recording scale.
    double gain_rhs_num = 0.0;
    std::vector<double> gain_mean(R);
    for (std::size_t r = 0; r < R; ++r) {
      double t_r = static_cast<double>(floored[r].cols());
      gain_mean[r] = stats[r].sum_post_gain / t_r;
      gain_rhs_num +=
          stats[r].sum_post_log_gain - t_r * std::log(gain_mean[r]);
    }
    model.gain_shape = SolveShapeEquation(gain_rhs_num / tf);
    for (std::size_t r = 0; r < R; ++r)
      result.gain_scales[r] = gain_mean[r] / model.gain_shape;
  }

  result.model = model;
  return result;
}

NmfProjection NmfProject(const SpeechHmm& model, double theta,
                         const Eigen::MatrixXd& power) {
  Eigen::MatrixXd floored = FloorPeriodogram(power);
  Eigen::MatrixXd loglik = StateLogLik(model, theta, floored);
  Eigen::VectorXd initial = StationaryDistribution(model.trans);
  ForwardBackwardResult fb = ForwardBackward(loglik, model.trans, initial);

  const int N = model.num_states();
  const Eigen::Index T = floored.cols();
  const double vartheta = model.gain_shape - model.shape.sum();
  const double rate = 1.0 / theta;
  Eigen::MatrixXd tau = floored.transpose() * model.basis.cwiseInverse();

  NmfProjection proj;
  proj.coefficients.resize(N, T);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) {
      GigMoments m = ComputeGigMoments({vartheta, rate, tau(t, i)});
      proj.coefficients(i, t) = fb.posteriors(t, i) * m.mean;
    }
  Eigen::MatrixXd scaled_basis =
      model.basis.array().colwise() * model.shape.array();
  proj.approx = scaled_basis * proj.coefficients;
  return proj;
}

}  // namespace gammase
