#include "gammase/corpus.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gammase/common.h"
#include "gammase/metrics.h"

namespace gammase {

SyntheticSpeech GenSyntheticSpeech(const SyntheticSpeechConfig& config) {
  GS_CHECK_INPUT(config.num_states > 0 && config.num_bins > 0 &&
                     config.num_frames > 0,
                 "synthetic corpus dimensions must be positive");
  GS_CHECK_INPUT(config.bin_shape > 0.0 && config.gain_shape > 0.0 &&
                     config.gain_scale > 0.0 && config.basis_floor > 0.0,
                 "synthetic corpus shapes/scales must be positive");
  GS_CHECK_INPUT(config.self_loop > 0.0 && config.self_loop < 1.0,
                 "self loop probability must lie in (0, 1)");
  const int N = config.num_states;
  const int K = config.num_bins;
  const int T = config.num_frames;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Smooth, well-separated spectral prototypes: one broad bump per
  // state over a small floor.
  Eigen::MatrixXd basis(K, N);
  for (int i = 0; i < N; ++i) {
    double center = (static_cast<double>(i) + 0.5 + 0.4 * (unit(rng) - 0.5)) *
                    static_cast<double>(K) / N;
    double width =
        (0.8 + 0.4 * unit(rng)) * static_cast<double>(K) / (1.5 * N);
    double level = std::pow(10.0, 0.4 * (unit(rng) - 0.5));
    for (int k = 0; k < K; ++k) {
      double z = (static_cast<double>(k) - center) / width;
      basis(k, i) = level * (config.basis_floor + std::exp(-0.5 * z * z));
    }
  }

  Eigen::MatrixXd trans(N, N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd off(N);
    for (int j = 0; j < N; ++j) off[j] = 0.1 + unit(rng);
    off[i] = 0.0;
    double off_sum = off.sum();
    for (int j = 0; j < N; ++j)
      trans(i, j) = (i == j) ? config.self_loop
                             : (1.0 - config.self_loop) * off[j] / off_sum;
  }
  if (N == 1) trans(0, 0) = 1.0;

  SyntheticSpeech out;
  out.model.trans = trans;
  out.model.basis = basis;
  out.model.shape = Eigen::VectorXd::Constant(K, config.bin_shape);
  out.model.gain_shape = config.gain_shape;
  out.gain_scale = config.gain_scale;
  out.power.resize(K, T);
  out.states.resize(T);
  out.gains.resize(T);

  std::mt19937_64 path_rng(config.path_seed);
  std::mt19937_64& seq = config.path_seed != 0 ? path_rng : rng;
  Eigen::VectorXd stationary = StationaryDistribution(trans);
  auto draw_state = [&](const Eigen::VectorXd& probs) {
    double u = unit(seq);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return N - 1;
  };

  std::gamma_distribution<double> gain_dist(config.gain_shape,
                                            config.gain_scale);
  int state = draw_state(stationary);
  for (int t = 0; t < T; ++t) {
    if (t > 0) state = draw_state(trans.row(state).transpose());
    out.states[t] = state;
    double gain = gain_dist(seq);
    out.gains[t] = gain;
    for (int k = 0; k < K; ++k) {
      std::gamma_distribution<double> bin_dist(config.bin_shape,
                                               gain * basis(k, state));
      out.power(k, t) = bin_dist(seq);
    }
  }
  return out;
}

Eigen::VectorXd SynthesizeFromPower(const Eigen::MatrixXd& power,
                                    const FrameConfig& frame,
                                    std::uint64_t seed) {
  frame.Validate();
  GS_CHECK_INPUT(power.rows() == frame.num_bins(),
                 "power envelope rows must equal the bin count");
  GS_CHECK_INPUT(power.minCoeff() >= 0.0 && power.allFinite(),
                 "power envelope must be nonnegative and finite");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  Spectrogram spec;
  spec.config = frame;
  spec.frames.resize(power.rows(), power.cols());
  const Eigen::Index last = power.rows() - 1;
  for (Eigen::Index t = 0; t < power.cols(); ++t) {
    for (Eigen::Index k = 0; k < power.rows(); ++k) {
      double mag = std::sqrt(power(k, t));
      if (k == 0 || k == last) {
        // Real bins keep a random sign.
        double sign = (phase(rng) < M_PI) ? 1.0 : -1.0;
        spec.frames(k, t) = std::complex<double>(sign * mag, 0.0);
      } else {
        double p = phase(rng);
        spec.frames(k, t) =
            std::complex<double>(mag * std::cos(p), mag * std::sin(p));
      }
    }
  }
  return Istft(spec);
}

BabbleSynthResult SynthBabble(const std::vector<Eigen::VectorXd>& sources,
                              const MixSpec& spec, const FrameConfig& frame) {
  GS_CHECK_INPUT(!sources.empty(), "babble synthesis needs sources");
  GS_CHECK_INPUT(
      spec.offsets_db.empty() || spec.offsets_db.size() == sources.size(),
      "level offset list must match the number of sources");
  Eigen::Index len = sources[0].size();
  for (const auto& s : sources) len = std::min(len, s.size());
  GS_CHECK_INPUT(len >= frame.frame_len, "sources shorter than one frame");

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(len);
  for (std::size_t m = 0; m < sources.size(); ++m) {
    double level = ActiveLevel(sources[m].head(len), frame);
    GS_CHECK_INPUT(level > 0.0, "source ", m, " is silent");
    double offset_db =
        spec.offsets_db.empty() ? 0.0 : spec.offsets_db[m];
    double scale = std::pow(10.0, offset_db / 20.0) / std::sqrt(level);
    sum += scale * sources[m].head(len);
  }

  BabbleSynthResult result;
  double peak = sum.cwiseAbs().maxCoeff();
  GS_CHECK_INPUT(peak > 0.0, "summed babble is silent");
  result.output_scale = 0.95 / peak;
  result.signal = result.output_scale * sum;
  return result;
}

MixResult MixAtSnr(const Eigen::VectorXd& speech, const Eigen::VectorXd& noise,
                   double snr_db, const FrameConfig& frame,
                   std::uint64_t seed) {
  GS_CHECK_INPUT(speech.size() >= frame.frame_len,
                 "speech shorter than one frame");
  if (std::isinf(snr_db) && snr_db > 0.0) {
    return MixResult{speech, 0.0};
  }
  GS_CHECK_INPUT(std::isfinite(snr_db), "invalid target snr");
  GS_CHECK_INPUT(noise.size() > 0, "empty noise signal");

  double speech_level = ActiveLevel(speech, frame);
  GS_CHECK_INPUT(speech_level > 0.0, "speech signal is silent");

  // Loop the noise from a seeded offset so its statistics stay
  // stationary across the whole mix.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> offset_dist(0, noise.size() - 1);
  Eigen::Index offset = offset_dist(rng);
  Eigen::VectorXd looped(speech.size());
  for (Eigen::Index n = 0; n < speech.size(); ++n)
    looped[n] = noise[(offset + n) % noise.size()];

  double noise_power =
      looped.squaredNorm() / static_cast<double>(looped.size());
  GS_CHECK_INPUT(noise_power > 0.0, "noise signal is silent");

  double scale = std::sqrt(speech_level / noise_power *
                           std::pow(10.0, -snr_db / 10.0));
  MixResult result;
  result.noise_scale = scale;
  result.noisy = speech + scale * looped;
  return result;
}

std::vector<ManifestEntry> Manifest::WithRole(const std::string& role) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.role == role) out.push_back(e);
  return out;
}

Manifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  GS_CHECK_INPUT(in.good(), "cannot read manifest ", path);
  Manifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    ManifestEntry entry;
    if (!(tokens >> entry.role)) continue;
    GS_CHECK_INPUT(static_cast<bool>(tokens >> entry.value), "manifest ", path,
                   " line ", line_no, ": role without value");
    std::string kv;
    while (tokens >> kv) {
      auto eq = kv.find('=');
      GS_CHECK_INPUT(eq != std::string::npos && eq > 0, "manifest ", path,
                     " line ", line_no, ": expected key=value, got ", kv);
      entry.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    manifest.entries.push_back(entry);
  }
  return manifest;
}

}  // namespace gammase
