#ifndef GAMMASE_MODEL_IO_H_
#define GAMMASE_MODEL_IO_H_

#include <cstdint>
#include <string>

#include "gammase/babble_nhmm.h"
#include "gammase/speech_hmm.h"

namespace gammase {

// Binary model containers (native little-endian layout) with a JSON
// metadata trailer.  Loaders re-validate all model invariants.
std::uint64_t HashMatrix(const Eigen::MatrixXd& matrix);

void SaveSpeechModel(const std::string& path, const SpeechHmm& model,
                     const std::string& meta_json = "{}");

struct LoadedSpeechModel {
  SpeechHmm model;
  std::string meta_json;
};
LoadedSpeechModel LoadSpeechModel(const std::string& path);

void SaveBabbleModel(const std::string& path, const BabbleNhmm& model,
                     const std::string& meta_json = "{}");

struct LoadedBabbleModel {
  BabbleNhmm model;
  std::string meta_json;
  std::uint64_t speech_basis_hash = 0;
};
LoadedBabbleModel LoadBabbleModel(const std::string& path);

}  // namespace gammase

#endif  // GAMMASE_MODEL_IO_H_
