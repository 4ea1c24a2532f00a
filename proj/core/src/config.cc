#include "gammase/config.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gammase/common.h"

namespace gammase {

namespace {

using nlohmann::json;

void CheckKnownKeys(const json& object, const char* where,
                    std::initializer_list<const char*> known) {
  for (const auto& item : object.items()) {
    bool found = false;
    for (const char* key : known)
      if (item.key() == key) found = true;
    GS_CHECK_INPUT(found, "unknown config key ", where, ".", item.key());
  }
}

template <typename T>
void Assign(const json& object, const char* key, T* out) {
  if (object.contains(key)) *out = object.at(key).get<T>();
}

}  // namespace

void RunConfig::Validate() const {
  frame.Validate();
  GS_CHECK_INPUT(speech_states > 0 && babble_states > 0,
                 "state counts must be positive");
  GS_CHECK_INPUT(speech_iters > 0 && babble_iters > 0 && cccp_rounds > 0,
                 "iteration counts must be positive");
  GS_CHECK_INPUT(enhancer.speech_gain_shape > 0.0 &&
                     enhancer.babble_gain_shape > 0.0,
                 "gain shapes must be positive");
  GS_CHECK_INPUT(enhancer.theta_forget > 0.0 && enhancer.theta_forget <= 1.0 &&
                     enhancer.gamma_forget > 0.0 &&
                     enhancer.gamma_forget <= 1.0,
                 "forgetting factors must lie in (0, 1]");
  GS_CHECK_INPUT(enhancer.smooth_prev >= 0.0 && enhancer.smooth_new > 0.0,
                 "invalid smoothing weights");
  GS_CHECK_INPUT(threads >= 0, "threads must be >= 0");
}

std::string RunConfigToJson(const RunConfig& config) {
  json j;
  j["frame"]["frame_len"] = config.frame.frame_len;
  j["frame"]["hop"] = config.frame.hop;
  j["frame"]["sample_rate"] = config.frame.sample_rate;
  j["frame"]["window"] = config.frame.window;
  j["training"]["speech_states"] = config.speech_states;
  j["training"]["babble_states"] = config.babble_states;
  j["training"]["speech_iters"] = config.speech_iters;
  j["training"]["babble_iters"] = config.babble_iters;
  j["training"]["cccp_rounds"] = config.cccp_rounds;
  j["enhancer"]["speech_gain_shape"] = config.enhancer.speech_gain_shape;
  j["enhancer"]["babble_gain_shape"] = config.enhancer.babble_gain_shape;
  j["enhancer"]["theta_forget"] = config.enhancer.theta_forget;
  j["enhancer"]["gamma_forget"] = config.enhancer.gamma_forget;
  j["enhancer"]["curvature_floor"] = config.enhancer.curvature_floor;
  j["enhancer"]["initial_information"] = config.enhancer.initial_information;
  j["enhancer"]["smooth_prev"] = config.enhancer.smooth_prev;
  j["enhancer"]["smooth_new"] = config.enhancer.smooth_new;
  j["enhancer"]["init_frames"] = config.enhancer.init_frames;
  j["enhancer"]["init_theta"] = config.enhancer.init_theta;
  j["enhancer"]["init_gamma"] = config.enhancer.init_gamma;
  j["enhancer"]["map_max_iters"] = config.enhancer.map_max_iters;
  j["enhancer"]["map_tol"] = config.enhancer.map_tol;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  return j.dump(2) + "\n";
}

RunConfig RunConfigFromJson(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  GS_CHECK_INPUT(!j.is_discarded() && j.is_object(),
                 "config is not a JSON object");
  CheckKnownKeys(j, "",
                 {"frame", "training", "enhancer", "seed", "threads"});
  RunConfig config;
  if (j.contains("frame")) {
    const json& f = j["frame"];
    CheckKnownKeys(f, "frame", {"frame_len", "hop", "sample_rate", "window"});
    Assign(f, "frame_len", &config.frame.frame_len);
    Assign(f, "hop", &config.frame.hop);
    Assign(f, "sample_rate", &config.frame.sample_rate);
    Assign(f, "window", &config.frame.window);
  }
  if (j.contains("training")) {
    const json& t = j["training"];
    CheckKnownKeys(t, "training",
                   {"speech_states", "babble_states", "speech_iters",
                    "babble_iters", "cccp_rounds"});
    Assign(t, "speech_states", &config.speech_states);
    Assign(t, "babble_states", &config.babble_states);
    Assign(t, "speech_iters", &config.speech_iters);
    Assign(t, "babble_iters", &config.babble_iters);
    Assign(t, "cccp_rounds", &config.cccp_rounds);
  }
  if (j.contains("enhancer")) {
    const json& e = j["enhancer"];
    CheckKnownKeys(e, "enhancer",
                   {"speech_gain_shape", "babble_gain_shape", "theta_forget",
                    "gamma_forget", "curvature_floor", "initial_information",
                    "smooth_prev", "smooth_new", "init_frames", "init_theta",
                    "init_gamma", "map_max_iters", "map_tol"});
    Assign(e, "speech_gain_shape", &config.enhancer.speech_gain_shape);
    Assign(e, "babble_gain_shape", &config.enhancer.babble_gain_shape);
    Assign(e, "theta_forget", &config.enhancer.theta_forget);
    Assign(e, "gamma_forget", &config.enhancer.gamma_forget);
    Assign(e, "curvature_floor", &config.enhancer.curvature_floor);
    Assign(e, "initial_information", &config.enhancer.initial_information);
    Assign(e, "smooth_prev", &config.enhancer.smooth_prev);
    Assign(e, "smooth_new", &config.enhancer.smooth_new);
    Assign(e, "init_frames", &config.enhancer.init_frames);
    Assign(e, "init_theta", &config.enhancer.init_theta);
    Assign(e, "init_gamma", &config.enhancer.init_gamma);
    Assign(e, "map_max_iters", &config.enhancer.map_max_iters);
    Assign(e, "map_tol", &config.enhancer.map_tol);
  }
  Assign(j, "seed", &config.seed);
  Assign(j, "threads", &config.threads);
  config.Validate();
  return config;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  GS_CHECK_INPUT(in.good(), "cannot read config ", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return RunConfigFromJson(buffer.str());
}

void SaveRunConfig(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  GS_CHECK_INPUT(out.good(), "cannot write config ", path);
  out << RunConfigToJson(config);
  GS_CHECK_INPUT(out.good(), "failed while writing ", path);
}

}  // namespace gammase
