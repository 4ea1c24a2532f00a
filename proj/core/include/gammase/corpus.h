#ifndef GAMMASE_CORPUS_H_
#define GAMMASE_CORPUS_H_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gammase/dsp.h"
#include "gammase/speech_hmm.h"

namespace gammase {

// Hidden-chain gamma spectral sampler for desk-scale experiments; the
// generating parameters are returned as ground truth.
struct SyntheticSpeechConfig {
  int num_states = 10;
  int num_bins = 161;
  int num_frames = 3000;
  double bin_shape = 1.0;
  double gain_shape = 12.0;
  double gain_scale = 0.1;
  // Spectral floor of each state template relative to its peak.
  double basis_floor = 0.05;
  double self_loop = 0.9;
  std::uint64_t seed = 1;
  // Nonzero: the state path, gains and bin draws use this separate stream,
  // yielding fresh material from the same speaker templates.
  std::uint64_t path_seed = 0;
};

struct SyntheticSpeech {
  SpeechHmm model;
  double gain_scale = 0.0;
  Eigen::MatrixXd power;  // K x T
  std::vector<int> states;
  Eigen::VectorXd gains;
};

SyntheticSpeech GenSyntheticSpeech(const SyntheticSpeechConfig& config);

// Random-phase resynthesis of a power envelope.
Eigen::VectorXd SynthesizeFromPower(const Eigen::MatrixXd& power,
                                    const FrameConfig& frame,
                                    std::uint64_t seed);

struct MixSpec {
  double target_snr_db = 0.0;
  std::vector<double> offsets_db;  // one per speaker; empty = all zero
  std::uint64_t seed = 0;
};

// Equal-active-level multi-speaker sum, peak normalized.
struct BabbleSynthResult {
  Eigen::VectorXd signal;
  double output_scale = 1.0;
};
BabbleSynthResult SynthBabble(const std::vector<Eigen::VectorXd>& sources,
                              const MixSpec& spec, const FrameConfig& frame);

// Scales (looped, seed-offset) noise so that the active-speech to mean
// noise power ratio hits the requested SNR; +inf passes speech through.
struct MixResult {
  Eigen::VectorXd noisy;
  double noise_scale = 0.0;
};
MixResult MixAtSnr(const Eigen::VectorXd& speech, const Eigen::VectorXd& noise,
                   double snr_db, const FrameConfig& frame, std::uint64_t seed);

// Plain-text corpus listing: one entry per line, `role value key=val...`,
// `#` comments.  Values are file paths or `synth:` generator specs.
struct ManifestEntry {
  std::string role;
  std::string value;
  std::map<std::string, std::string> params;
};
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<ManifestEntry> WithRole(const std::string& role) const;
};
Manifest ReadManifest(const std::string& path);

}  // namespace gammase

#endif  // GAMMASE_CORPUS_H_
