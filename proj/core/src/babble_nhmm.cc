#include "gammase/babble_nhmm.h"

#include <cmath>
#include <limits>
#include <vector>

#include "em_stats.h"
#include "gammase/common.h"
#include "gammase/dsp.h"
#include "gammase/kmeans.h"
#include "gammase/parallel.h"
#include "gammase/special.h"

namespace gammase {

namespace {

constexpr double kEmptyStateOccupancy = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// The shared gain-marginalized likelihood machinery operates on a model
// holding explicit per-state scale vectors, which for babble are the
// basis-combined columns.
SpeechHmm AsScaledModel(const BabbleNhmm& model) {
  SpeechHmm wrapped;
  wrapped.trans = model.trans;
  wrapped.basis = model.StateScales();
  wrapped.shape = model.shape;
  wrapped.gain_shape = model.gain_shape;
  return wrapped;
}

}  // namespace

void BabbleNhmm::Validate() const {
  GS_CHECK_INPUT(trans.rows() == trans.cols() && trans.rows() > 0,
                 "babble transition matrix must be square");
  GS_CHECK_INPUT(weights.rows() == speech_basis.cols() &&
                     weights.cols() == trans.rows(),
                 "weights must be Nbar x N2 against the speech basis");
  GS_CHECK_INPUT(weights.allFinite() && weights.minCoeff() >= 0.0,
                 "weights must be nonnegative and finite");
  AsScaledModel(*this).Validate();  // positivity of combined scales etc.
}

Eigen::MatrixXd BabbleStateLogLik(const BabbleNhmm& model, double gamma,
                                  const Eigen::MatrixXd& power) {
  return StateLogLik(AsScaledModel(model), gamma, power);
}

GigParams BabbleGainPosterior(const BabbleNhmm& model, double gamma,
                              const Eigen::VectorXd& power_frame, int state) {
  return GainPosterior(AsScaledModel(model), gamma, power_frame, state);
}

Eigen::VectorXd UpdateBabbleShapes(const ShapeUpdateStats& stats) {
  GS_CHECK_INPUT(stats.total_weight > 0.0, "shape update with zero weight");
  GS_CHECK_INPUT(stats.rhs_sum.allFinite(),
                 "shape update statistics are not finite");
  Eigen::VectorXd beta(stats.rhs_sum.size());
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    beta[k] = DigammaInverse(stats.rhs_sum[k] / stats.total_weight);
  return beta;
}

double CccpWeightObjective(const Eigen::VectorXd& x, const CccpStats& stats,
                           const Eigen::MatrixXd& speech_basis,
                           const Eigen::VectorXd& shape) {
  Eigen::VectorXd v = speech_basis * x;
  if (!(v.minCoeff() > 0.0)) return kInf;
  double convex = (stats.weighted_obs.array() / v.array()).sum();
  double concave = stats.occupancy * (shape.array() * v.array().log()).sum();
  return convex + concave;
}

Eigen::VectorXd CccpWeightGradient(const Eigen::VectorXd& x,
                                   const CccpStats& stats,
                                   const Eigen::MatrixXd& speech_basis,
                                   const Eigen::VectorXd& shape) {
  Eigen::VectorXd v = speech_basis * x;
  GS_CHECK_INPUT(v.minCoeff() > 0.0, "gradient outside the domain");
  Eigen::VectorXd inner =
      (stats.occupancy * shape.array() / v.array() -
       stats.weighted_obs.array() / (v.array() * v.array()))
          .matrix();
  return speech_basis.transpose() * inner;
}

Eigen::MatrixXd CccpWeightHessian(const Eigen::VectorXd& x,
                                  const CccpStats& stats,
                                  const Eigen::MatrixXd& speech_basis,
                                  const Eigen::VectorXd& shape) {
  Eigen::VectorXd v = speech_basis * x;
  GS_CHECK_INPUT(v.minCoeff() > 0.0, "hessian outside the domain");
  Eigen::VectorXd inner =
      (2.0 * stats.weighted_obs.array() / (v.array() * v.array() * v.array()) -
       stats.occupancy * shape.array() / (v.array() * v.array()))
          .matrix();
  return speech_basis.transpose() * inner.asDiagonal() * speech_basis;
}

namespace {

// minimize C(x) = sum_k W_k/[Bx]_k + d.x over x >= 0 (strictly convex in
// the data term).  Projected Newton on the free set; falls back to a
// projected gradient step when the reduced Hessian is numerically
// unusable.
Eigen::VectorXd SolveConvexSubproblem(const Eigen::VectorXd& x0,
                                      const Eigen::VectorXd& d,
                                      const Eigen::VectorXd& W,
                                      const Eigen::MatrixXd& B) {
  const Eigen::Index n = x0.size();
  auto value = [&](const Eigen::VectorXd& x) -> double {
    Eigen::VectorXd v = B * x;
    if (!(v.minCoeff() > 0.0)) return kInf;
    return (W.array() / v.array()).sum() + d.dot(x);
  };

  Eigen::VectorXd x = x0.cwiseMax(0.0);
  if (!std::isfinite(value(x))) x = x0.cwiseMax(1e-12);
  double fx = value(x);
  GS_CHECK_NUMERIC(std::isfinite(fx),
                   "weight subproblem started outside its domain");

  const double active_tol = 1e-12;
  for (int it = 0; it < 80; ++it) {
    Eigen::VectorXd v = B * x;
    Eigen::VectorXd w_over_v2 = W.array() / (v.array() * v.array());
    Eigen::VectorXd grad = d - B.transpose() * w_over_v2;

    // Projected-gradient stationarity.
    double pg = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      double g = (x[m] > active_tol) ? grad[m] : std::min(grad[m], 0.0);
      pg = std::max(pg, std::fabs(g));
    }
    if (pg < 1e-11 * std::max(1.0, d.lpNorm<Eigen::Infinity>())) break;

    std::vector<Eigen::Index> free_set;
    for (Eigen::Index m = 0; m < n; ++m)
      if (x[m] > active_tol || grad[m] < 0.0) free_set.push_back(m);
    if (free_set.empty()) break;

    Eigen::MatrixXd Bf(B.rows(), free_set.size());
    Eigen::VectorXd gf(free_set.size());
    for (std::size_t j = 0; j < free_set.size(); ++j) {
      Bf.col(j) = B.col(free_set[j]);
      gf[j] = grad[free_set[j]];
    }
    Eigen::VectorXd curv = 2.0 * W.array() / (v.array() * v.array() * v.array());
    Eigen::MatrixXd H = Bf.transpose() * curv.asDiagonal() * Bf;

    Eigen::VectorXd pf;
    bool newton_ok = false;
    double damping = 0.0;
    for (int attempt = 0; attempt < 4 && !newton_ok; ++attempt) {
      Eigen::MatrixXd Hd = H;
      if (damping > 0.0)
        Hd.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      if (ldlt.info() == Eigen::Success) {
        pf = -ldlt.solve(gf);
        if (pf.allFinite() && pf.dot(gf) < 0.0) newton_ok = true;
      }
      damping = (damping == 0.0) ? 1e-8 * (1.0 + H.trace()) : damping * 100.0;
    }
    if (!newton_ok) pf = -gf;  // projected gradient fallback

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < free_set.size(); ++j)
      p[free_set[j]] = pf[j];

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      Eigen::VectorXd xn = (x + t * p).cwiseMax(0.0);
      double fn = value(xn);
      if (std::isfinite(fn) &&
          fn <= fx + 1e-4 * grad.dot(xn - x)) {
        double move = (xn - x).lpNorm<Eigen::Infinity>();
        x = xn;
        fx = fn;
        accepted = true;
        if (move < 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>()))
          return x;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return x;
}

}  // namespace

Eigen::VectorXd CccpStep(const Eigen::VectorXd& current,
                         const CccpStats& stats,
                         const Eigen::MatrixXd& speech_basis,
                         const Eigen::VectorXd& shape) {
  GS_CHECK_INPUT(current.size() == speech_basis.cols(),
                 "weight vector length mismatch");
  GS_CHECK_INPUT(stats.weighted_obs.size() == speech_basis.rows() &&
                     shape.size() == speech_basis.rows(),
                 "statistics/shape length mismatch");
  GS_CHECK_INPUT(stats.weighted_obs.minCoeff() >= 0.0 &&
                     stats.weighted_obs.allFinite(),
                 "weighted observations must be nonnegative");
  GS_CHECK_INPUT(stats.occupancy > 0.0, "weight update needs occupancy > 0");

  Eigen::VectorXd v = speech_basis * current;
  GS_CHECK_NUMERIC(v.minCoeff() > 0.0,
                   "weight update started with a zero spectral response");
  // Linearize the concave term at the current point.
  Eigen::VectorXd d =
      stats.occupancy *
      (speech_basis.transpose() * (shape.array() / v.array()).matrix());
  Eigen::VectorXd next =
      SolveConvexSubproblem(current, d, stats.weighted_obs, speech_basis);
  // The majorizer guarantees descent mathematically; keep it true in
  // floating point too.
  double before = CccpWeightObjective(current, stats, speech_basis, shape);
  double after = CccpWeightObjective(next, stats, speech_basis, shape);
  return (after <= before) ? next : current;
}

Eigen::MatrixXd InitBabbleWeights(
    const std::vector<Eigen::MatrixXd>& coefficient_streams, int num_states) {
  GS_CHECK_INPUT(!coefficient_streams.empty(), "no coefficient streams");
  const Eigen::Index nbar = coefficient_streams[0].rows();
  const Eigen::Index T = coefficient_streams[0].cols();
  Eigen::MatrixXd summed = Eigen::MatrixXd::Zero(nbar, T);
  for (const auto& stream : coefficient_streams) {
    GS_CHECK_INPUT(stream.rows() == nbar && stream.cols() == T,
                   "coefficient streams must be aligned (same shape)");
    summed += stream;
  }
  GS_CHECK_INPUT(T >= num_states, "need at least ", num_states,
                 " frames to seed ", num_states, " states, got ", T);
  Eigen::MatrixXd centroids = KMeansColumns(summed, num_states);
  centroids = centroids.cwiseMax(0.0);
  for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
    if (centroids.col(j).sum() <= 0.0) {
      Warn(internal::StrCat("babble seed state ", j,
                            " is empty; using a flat weight vector"));
      centroids.col(j).setConstant(1.0 / static_cast<double>(nbar));
    }
  }
  return centroids;
}

BabbleTrainResult TrainBabbleNhmm(
    const SpeechHmm& speech, const std::vector<Eigen::MatrixXd>& powers,
    const BabbleTrainOptions& opts,
    const std::vector<Eigen::MatrixXd>* speaker_coefficients) {
  speech.Validate();
  GS_CHECK_INPUT(!powers.empty(), "no babble training spectrograms");
  GS_CHECK_INPUT(opts.num_states > 0 && opts.max_iters > 0 &&
                     opts.cccp_rounds > 0,
                 "invalid training options");
  const int N2 = opts.num_states;
  const int K = speech.num_bins();
  const std::size_t R = powers.size();

  std::vector<Eigen::MatrixXd> floored(R);
  Eigen::Index total_frames = 0;
  for (std::size_t r = 0; r < R; ++r) {
    GS_CHECK_INPUT(powers[r].rows() == K,
                   "babble spectrogram bin count must match the speech model");
    floored[r] = FloorPeriodogram(powers[r]);
    total_frames += floored[r].cols();
  }

  // ---- Initialization ----
  BabbleNhmm model;
  model.speech_basis = speech.basis;
  model.trans = Eigen::MatrixXd::Constant(N2, N2, 1.0 / N2);
  model.shape = Eigen::VectorXd::Ones(K);
  model.gain_shape = opts.gain_shape_init;
  if (speaker_coefficients != nullptr) {
    model.weights = InitBabbleWeights(*speaker_coefficients, N2);
  } else {
    // No per-speaker streams: project the babble recordings themselves.
    Eigen::MatrixXd all(speech.num_states(), total_frames);
    Eigen::Index pos = 0;
    for (std::size_t r = 0; r < R; ++r) {
      double theta = MomentMatchGainScale(speech, floored[r]);
      NmfProjection proj = NmfProject(speech, theta, floored[r]);
      all.middleCols(pos, proj.coefficients.cols()) = proj.coefficients;
      pos += proj.coefficients.cols();
    }
    model.weights = InitBabbleWeights({all}, N2);
  }

  BabbleTrainResult result;
  result.gain_scales.resize(R);
  for (std::size_t r = 0; r < R; ++r)
    result.gain_scales[r] = BabbleMomentMatchGainScale(model, floored[r]);

  // ---- EM ----
  std::vector<internal::UtteranceStats> stats(R);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    SpeechHmm wrapped = AsScaledModel(model);
    Eigen::VectorXd initial = StationaryDistribution(model.trans);
    ParallelFor(0, R, opts.threads, [&](std::size_t r) {
      stats[r] = internal::AccumulateUtterance(
          wrapped, result.gain_scales[r], initial, floored[r]);
    });

    double loglik = 0.0;
    Eigen::MatrixXd pairwise = Eigen::MatrixXd::Zero(N2, N2);
    Eigen::MatrixXd weighted_obs = Eigen::MatrixXd::Zero(K, N2);
    Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(N2);
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
    Info(internal::StrCat("babble EM iter ", iter, " loglik ", loglik));

    for (int i = 0; i < N2; ++i) {
      double row_sum = pairwise.row(i).sum();
      if (row_sum > 1e-300) model.trans.row(i) = pairwise.row(i) / row_sum;
    }

    // Per-bin shapes against the pre-update scales.
    const double tf = static_cast<double>(total_frames);
    Eigen::MatrixXd old_scales = wrapped.basis;
    ShapeUpdateStats shape_stats;
    shape_stats.total_weight = tf;
    shape_stats.rhs_sum =
        sum_log_power - Eigen::VectorXd::Constant(K, sum_post_log_gain);
    Eigen::VectorXd log_scale_mix =
        old_scales.array().log().matrix() * occupancy;  // K
    shape_stats.rhs_sum -= log_scale_mix;
    model.shape = UpdateBabbleShapes(shape_stats);

    // Weight vectors by concave-convex descent, one state at a time.
    for (int i = 0; i < N2; ++i) {
      if (occupancy[i] < kEmptyStateOccupancy) {
        Warn(internal::StrCat("babble state ", i,
                              " occupancy ~ 0; weights unchanged"));
        continue;
      }
      CccpStats cs{weighted_obs.col(i), occupancy[i]};
      Eigen::VectorXd x = model.weights.col(i);
      for (int round = 0; round < opts.cccp_rounds; ++round)
        x = CccpStep(x, cs, model.speech_basis, model.shape);
      model.weights.col(i) = x;
    }

    // Gain prior.
    double gain_rhs_num = 0.0;
    std::vector<double> gain_mean(R);
    for (std::size_t r = 0; r < R; ++r) {
      double t_r = static_cast<double>(floored[r].cols());
      gain_mean[r] = stats[r].sum_post_gain / t_r;
      gain_rhs_num += stats[r].sum_post_log_gain - t_r * std::log(gain_mean[r]);
    }
    model.gain_shape = SolveShapeEquation(gain_rhs_num / tf);
    for (std::size_t r = 0; r < R; ++r)
      result.gain_scales[r] = gain_mean[r] / model.gain_shape;

    // The basis-weight and gain-scale parametrization carries a single
    // global scale ambiguity; pull the occupancy-weighted mean weight
    // norm back to one and fold it into every gain scale.  This exact
    // fold leaves the likelihood untouched.
    double norm_acc = 0.0, occ_acc = 0.0;
    for (int i = 0; i < N2; ++i) {
      norm_acc += occupancy[i] * model.weights.col(i).lpNorm<1>();
      occ_acc += occupancy[i];
    }
    double scale = (occ_acc > 0.0) ? norm_acc / occ_acc : 0.0;
    if (scale > 0.0 && std::isfinite(scale)) {
      model.weights /= scale;
      for (std::size_t r = 0; r < R; ++r) result.gain_scales[r] *= scale;
    }
  }

  result.model = model;
  return result;
}

NmfProjection BabbleNmfProject(const BabbleNhmm& model, double gamma,
                               const Eigen::MatrixXd& power) {
  NmfProjection proj = NmfProject(AsScaledModel(model), gamma, power);
  return proj;
}

double BabbleMomentMatchGainScale(const BabbleNhmm& model,
                                  const Eigen::MatrixXd& power) {
  return MomentMatchGainScale(AsScaledModel(model), power);
}

}  // namespace gammase
