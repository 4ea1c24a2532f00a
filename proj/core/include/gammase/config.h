#ifndef GAMMASE_CONFIG_H_
#define GAMMASE_CONFIG_H_

#include <cstdint>
#include <string>

#include "gammase/dsp.h"
#include "gammase/enhancer.h"

namespace gammase {

// One configuration object for the whole pipeline; every output
// directory gets the resolved snapshot so runs can be replayed.
struct RunConfig {
  FrameConfig frame;
  int speech_states = 55;
  int babble_states = 10;
  int speech_iters = 30;
  int babble_iters = 30;
  int cccp_rounds = 3;
  EnhancerConfig enhancer;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = all cores

  void Validate() const;
};

std::string RunConfigToJson(const RunConfig& config);
// Starts from defaults, overlays present keys, rejects unknown ones.
RunConfig RunConfigFromJson(const std::string& json_text);

RunConfig LoadRunConfig(const std::string& path);
void SaveRunConfig(const RunConfig& config, const std::string& path);

}  // namespace gammase

#endif  // GAMMASE_CONFIG_H_
