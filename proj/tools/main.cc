#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gammase/babble_nhmm.h"
#include "gammase/common.h"
#include "gammase/config.h"
#include "gammase/corpus.h"
#include "gammase/dsp.h"
#include "gammase/enhancer.h"
#include "gammase/metrics.h"
#include "gammase/model_io.h"
#include "gammase/speech_hmm.h"
#include "gammase/wav.h"

namespace gammase {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitNumeric = 3;

double ParamDouble(const ManifestEntry& entry, const std::string& key,
                   double fallback) {
  auto it = entry.params.find(key);
  if (it == entry.params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw InputError(internal::StrCat("invalid input: manifest param ", key,
                                      "=", it->second));
  }
}

std::int64_t ParamInt(const ManifestEntry& entry, const std::string& key,
                      std::int64_t fallback) {
  auto it = entry.params.find(key);
  if (it == entry.params.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw InputError(internal::StrCat("invalid input: manifest param ", key,
                                      "=", it->second));
  }
}

SyntheticSpeechConfig SynthConfigFromEntry(const ManifestEntry& entry,
                                           const FrameConfig& frame,
                                           std::uint64_t base_seed) {
  SyntheticSpeechConfig cfg;
  cfg.num_bins = frame.num_bins();
  cfg.num_states = static_cast<int>(ParamInt(entry, "states", 10));
  cfg.num_frames = static_cast<int>(ParamInt(entry, "frames", 3000));
  cfg.seed = static_cast<std::uint64_t>(ParamInt(
      entry, "seed", static_cast<std::int64_t>(base_seed)));
  cfg.path_seed = static_cast<std::uint64_t>(ParamInt(entry, "path_seed", 0));
  cfg.bin_shape = ParamDouble(entry, "bin_shape", 1.0);
  cfg.gain_shape = ParamDouble(entry, "gain_shape", 12.0);
  cfg.gain_scale = ParamDouble(entry, "gain_scale", 0.1);
  cfg.basis_floor = ParamDouble(entry, "basis_floor", 0.05);
  cfg.self_loop = ParamDouble(entry, "self_loop", 0.9);
  return cfg;
}

// Turns one manifest entry into a waveform: either a wav file on disk
// or a `synth:` generator spec.
Eigen::VectorXd MaterializeSignal(const ManifestEntry& entry,
                                  const FrameConfig& frame,
                                  std::uint64_t base_seed) {
  if (entry.value == "synth:speech") {
    SyntheticSpeechConfig cfg = SynthConfigFromEntry(entry, frame, base_seed);
    SyntheticSpeech synth = GenSyntheticSpeech(cfg);
    std::uint64_t phase_seed = static_cast<std::uint64_t>(
        ParamInt(entry, "phase_seed",
                 static_cast<std::int64_t>(cfg.seed + 1000003)));
    return SynthesizeFromPower(synth.power, frame, phase_seed);
  }
  if (entry.value == "synth:babble") {
    int speakers = static_cast<int>(ParamInt(entry, "speakers", 5));
    GS_CHECK_INPUT(speakers >= 1, "speakers must be >= 1");
    std::vector<Eigen::VectorXd> sources;
    for (int m = 0; m < speakers; ++m) {
      ManifestEntry speaker = entry;
      speaker.params["seed"] = std::to_string(
          ParamInt(entry, "seed", static_cast<std::int64_t>(base_seed)) +
          7919 * (m + 1));
      speaker.value = "synth:speech";
      sources.push_back(MaterializeSignal(speaker, frame, base_seed));
    }
    MixSpec spec;
    spec.seed = static_cast<std::uint64_t>(
        ParamInt(entry, "seed", static_cast<std::int64_t>(base_seed)));
    return SynthBabble(sources, spec, frame).signal;
  }
  GS_CHECK_INPUT(entry.value.rfind("synth:", 0) != 0,
                 "unknown generator spec ", entry.value);
  WavData wav = ReadWav(entry.value);
  CheckSampleRate(frame, wav.sample_rate, entry.value);
  return wav.samples;
}

// Spectral powers for training: synthetic entries keep their exactly
// gamma-distributed draws instead of going through a waveform.
Eigen::MatrixXd MaterializePower(const ManifestEntry& entry,
                                 const FrameConfig& frame,
                                 std::uint64_t base_seed) {
  if (entry.value == "synth:speech") {
    SyntheticSpeechConfig cfg = SynthConfigFromEntry(entry, frame, base_seed);
    return GenSyntheticSpeech(cfg).power;
  }
  Eigen::VectorXd signal = MaterializeSignal(entry, frame, base_seed);
  return Periodogram(Stft(signal, frame));
}

void WriteConfigSnapshot(const RunConfig& config, const std::string& out_path) {
  SaveRunConfig(config, out_path + ".config.json");
}

void WriteTrainLog(const std::vector<double>& logliks,
                   const std::string& out_path) {
  std::ofstream log(out_path + ".train.csv");
  GS_CHECK_INPUT(log.good(), "cannot write training log for ", out_path);
  log << "iter,loglik\n";
  char line[64];
  for (std::size_t i = 0; i < logliks.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.12g\n", i, logliks[i]);
    log << line;
  }
}

json MetaFromConfig(const RunConfig& config) {
  // Model files must be byte-identical across thread counts, so the
  // embedded snapshot drops the execution-only key.
  json cfg = json::parse(RunConfigToJson(config));
  cfg.erase("threads");
  json meta;
  meta["config"] = cfg;
  return meta;
}

int CmdTrainSpeech(const RunConfig& config, const std::string& manifest_path,
                   const std::string& out_path) {
  Manifest manifest = ReadManifest(manifest_path);
  auto entries = manifest.WithRole("speech-train");
  GS_CHECK_INPUT(!entries.empty(), "manifest ", manifest_path,
                 " has no speech-train entries");
  std::vector<Eigen::MatrixXd> powers;
  for (const auto& entry : entries)
    powers.push_back(MaterializePower(entry, config.frame, config.seed));

  SpeechTrainOptions opts;
  opts.num_states = config.speech_states;
  opts.max_iters = config.speech_iters;
  opts.gain_shape_init = config.enhancer.speech_gain_shape;
  opts.seed = config.seed;
  opts.threads = config.threads;
  SpeechTrainResult result = TrainSpeechHmm(powers, opts);

  json meta = MetaFromConfig(config);
  meta["gain_scales"] = result.gain_scales;
  SaveSpeechModel(out_path, result.model, meta.dump());
  WriteTrainLog(result.loglik_history, out_path);
  WriteConfigSnapshot(config, out_path);
  std::cout << "wrote " << out_path << " (" << result.model.num_states()
            << " states, " << result.model.num_bins() << " bins)\n";
  return kExitOk;
}

int CmdTrainBabble(const RunConfig& config, const std::string& manifest_path,
                   const std::string& speech_model_path,
                   const std::string& out_path) {
  LoadedSpeechModel speech = LoadSpeechModel(speech_model_path);
  GS_CHECK_INPUT(speech.model.num_bins() == config.frame.num_bins(),
                 "speech model bins do not match the frame config");
  Manifest manifest = ReadManifest(manifest_path);
  auto entries = manifest.WithRole("babble-train");
  GS_CHECK_INPUT(!entries.empty(), "manifest ", manifest_path,
                 " has no babble-train entries");
  std::vector<Eigen::MatrixXd> powers;
  for (const auto& entry : entries)
    powers.push_back(MaterializePower(entry, config.frame, config.seed));

  // Individual voices of the babble, when listed, give the state weights a
  // better start than projecting the already-mixed recordings.
  std::vector<Eigen::MatrixXd> source_coeffs;
  for (const auto& entry : manifest.WithRole("babble-source")) {
    Eigen::MatrixXd p =
        FloorPeriodogram(MaterializePower(entry, config.frame, config.seed));
    double theta = MomentMatchGainScale(speech.model, p);
    source_coeffs.push_back(NmfProject(speech.model, theta, p).coefficients);
  }

  BabbleTrainOptions opts;
  opts.num_states = config.babble_states;
  opts.max_iters = config.babble_iters;
  opts.gain_shape_init = config.enhancer.babble_gain_shape;
  opts.cccp_rounds = config.cccp_rounds;
  opts.threads = config.threads;
  BabbleTrainResult result =
      TrainBabbleNhmm(speech.model, powers, opts,
                      source_coeffs.empty() ? nullptr : &source_coeffs);

  json meta = MetaFromConfig(config);
  meta["gain_scales"] = result.gain_scales;
  meta["speech_model"] = fs::path(speech_model_path).filename().string();
  SaveBabbleModel(out_path, result.model, meta.dump());
  WriteTrainLog(result.loglik_history, out_path);
  WriteConfigSnapshot(config, out_path);
  std::cout << "wrote " << out_path << " (" << result.model.num_states()
            << " states over " << result.model.weights.rows()
            << " basis vectors)\n";
  return kExitOk;
}

int CmdEnhance(const RunConfig& config, const std::string& input_path,
               const std::string& speech_model_path,
               const std::string& babble_model_path,
               const std::string& out_path) {
  LoadedSpeechModel speech = LoadSpeechModel(speech_model_path);
  LoadedBabbleModel babble = LoadBabbleModel(babble_model_path);
  GS_CHECK_INPUT(speech.model.num_bins() == config.frame.num_bins(),
                 "speech model bins do not match the frame config");
  if (HashMatrix(speech.model.basis) != babble.speech_basis_hash)
    Warn("babble model was trained against a different speech model");

  WavData wav = ReadWav(input_path);
  CheckSampleRate(config.frame, wav.sample_rate, input_path);

  EnhancerConfig cfg = config.enhancer;
  cfg.threads = config.threads;
  CompositeModel model =
      CompositeModel::Build(speech.model, babble.model, cfg);
  EnhanceResult result =
      EnhanceSignal(model, wav.samples, config.frame, cfg);

  WriteWav(out_path, result.signal, config.frame.sample_rate);
  std::ofstream diag(out_path + ".diag.jsonl");
  GS_CHECK_INPUT(diag.good(), "cannot write diagnostics for ", out_path);
  for (const auto& d : result.diagnostics) {
    json line;
    line["frame"] = d.frame;
    line["theta"] = d.theta;
    line["gamma"] = d.gamma;
    line["speech_state"] = d.best_speech_state;
    line["babble_state"] = d.best_babble_state;
    line["mean_gain"] = d.mean_gain;
    line["map_restarts"] = d.map_restarts;
    line["laplace_clamped"] = d.laplace_clamped;
    line["underflow"] = d.underflow;
    diag << line.dump() << "\n";
  }
  WriteConfigSnapshot(config, out_path);
  std::cout << "wrote " << out_path << " (" << result.diagnostics.size()
            << " frames)\n";
  return kExitOk;
}

int CmdEvaluate(const RunConfig& config, const std::string& clean_path,
                const std::string& noisy_path, const std::string& enhanced_path,
                std::string name, double snr_db, const std::string& out_path) {
  WavData clean = ReadWav(clean_path);
  WavData noisy = ReadWav(noisy_path);
  WavData enhanced = ReadWav(enhanced_path);
  CheckSampleRate(config.frame, clean.sample_rate, clean_path);
  GS_CHECK_INPUT(clean.samples.size() == noisy.samples.size() &&
                     clean.samples.size() == enhanced.samples.size(),
                 "evaluate inputs must have equal length");
  if (name.empty()) name = fs::path(enhanced_path).filename().string();

  const FrameConfig& frame = config.frame;
  EvalRow row;
  row.name = name;
  Eigen::VectorXd noise = noisy.samples - clean.samples;
  row.snr_db = std::isfinite(snr_db)
                   ? snr_db
                   : LongTermSnr(clean.samples, noise);
  row.sdr_noisy = Sdr(noisy.samples, clean.samples);
  row.sdr_enhanced = Sdr(enhanced.samples, clean.samples);
  row.snr_noisy = LongTermSnr(clean.samples, noise);
  row.snr_enhanced =
      LongTermSnr(clean.samples, enhanced.samples - clean.samples);
  row.segsnr_noisy = SegSnr(noisy.samples, clean.samples, frame);
  row.segsnr_enhanced = SegSnr(enhanced.samples, clean.samples, frame);
  row.sd_noisy = SpectralDistortion(noisy.samples, clean.samples, frame);
  row.sd_enhanced = SpectralDistortion(enhanced.samples, clean.samples, frame);

  EvalReport report;
  report.rows.push_back(row);
  WriteEvalCsv(report, out_path);
  WriteConfigSnapshot(config, out_path);
  std::cout << FormatEvalTable(report);
  return kExitOk;
}

int CmdCrossPredict(const RunConfig& config, const std::string& manifest_path,
                    const std::string& speech_model_path,
                    const std::string& babble_model_path,
                    const std::string& out_path) {
  LoadedSpeechModel speech = LoadSpeechModel(speech_model_path);
  LoadedBabbleModel babble = LoadBabbleModel(babble_model_path);
  Manifest manifest = ReadManifest(manifest_path);
  auto speech_entries = manifest.WithRole("speech-test");
  auto babble_entries = manifest.WithRole("babble-test");
  GS_CHECK_INPUT(!speech_entries.empty() && !babble_entries.empty(),
                 "manifest needs speech-test and babble-test entries");
  std::vector<Eigen::VectorXd> speech_signals, babble_signals;
  for (const auto& e : speech_entries)
    speech_signals.push_back(MaterializeSignal(e, config.frame, config.seed));
  for (const auto& e : babble_entries)
    babble_signals.push_back(MaterializeSignal(e, config.frame, config.seed));

  CrossPredictResult result = CrossPredict(
      speech.model, babble.model, speech_signals, babble_signals,
      config.frame);

  std::ofstream out(out_path);
  GS_CHECK_INPUT(out.good(), "cannot write ", out_path);
  out << "# gammase-cross-predict-v1\n";
  out << "data,metric,speech_model,babble_model\n";
  char line[256];
  std::snprintf(line, sizeof(line), "speech,sd,%.6f,%.6f\n",
                result.speech_under_speech.sd, result.speech_under_babble.sd);
  out << line;
  std::snprintf(line, sizeof(line), "babble,sd,%.6f,%.6f\n",
                result.babble_under_speech.sd, result.babble_under_babble.sd);
  out << line;
  std::snprintf(line, sizeof(line), "speech,segsnr,%.6f,%.6f\n",
                result.speech_under_speech.segsnr,
                result.speech_under_babble.segsnr);
  out << line;
  std::snprintf(line, sizeof(line), "babble,segsnr,%.6f,%.6f\n",
                result.babble_under_speech.segsnr,
                result.babble_under_babble.segsnr);
  out << line;
  std::snprintf(line, sizeof(line), "summary,row_diagonal_dominant,%d,%d\n",
                result.RowDiagonalDominant() ? 1 : 0,
                result.RowDiagonalDominant() ? 1 : 0);
  out << line;
  WriteConfigSnapshot(config, out_path);

  std::cout << "              speech model   babble model\n";
  std::snprintf(line, sizeof(line), "speech sd     %12.3f  %12.3f\n",
                result.speech_under_speech.sd, result.speech_under_babble.sd);
  std::cout << line;
  std::snprintf(line, sizeof(line), "babble sd     %12.3f  %12.3f\n",
                result.babble_under_speech.sd, result.babble_under_babble.sd);
  std::cout << line;
  std::snprintf(line, sizeof(line), "speech segsnr %12.3f  %12.3f\n",
                result.speech_under_speech.segsnr,
                result.speech_under_babble.segsnr);
  std::cout << line;
  std::snprintf(line, sizeof(line), "babble segsnr %12.3f  %12.3f\n",
                result.babble_under_speech.segsnr,
                result.babble_under_babble.segsnr);
  std::cout << line;
  std::cout << "row-diagonal dominant: "
            << (result.RowDiagonalDominant() ? "yes" : "no") << "\n";
  return kExitOk;
}

int CmdSynthBabble(const RunConfig& config, const std::string& manifest_path,
                   const std::string& offsets_arg, const std::string& out_path) {
  Manifest manifest = ReadManifest(manifest_path);
  auto entries = manifest.WithRole("babble-source");
  GS_CHECK_INPUT(!entries.empty(), "manifest ", manifest_path,
                 " has no babble-source entries");
  std::vector<Eigen::VectorXd> sources;
  for (const auto& e : entries)
    sources.push_back(MaterializeSignal(e, config.frame, config.seed));

  MixSpec spec;
  spec.seed = config.seed;
  if (!offsets_arg.empty()) {
    std::istringstream ss(offsets_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        spec.offsets_db.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InputError(
            internal::StrCat("invalid input: bad offset value ", item));
      }
    }
    GS_CHECK_INPUT(spec.offsets_db.size() == sources.size(),
                   "need one offset per source (", sources.size(), "), got ",
                   spec.offsets_db.size());
  }
  BabbleSynthResult result = SynthBabble(sources, spec, config.frame);
  WriteWav(out_path, result.signal, config.frame.sample_rate);
  WriteConfigSnapshot(config, out_path);
  std::cout << "wrote " << out_path << " (scale "
            << result.output_scale << ")\n";
  return kExitOk;
}

int Run(int argc, char** argv) {
  CLI::App app{"Gamma-model speech enhancement toolkit"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_path;
  std::string speech_model_path, babble_model_path;
  std::string input_path, clean_path, noisy_path, enhanced_path;
  std::string name, offsets_arg;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  int threads = -1;
  std::int64_t seed = -1;
  int speech_states = 0, babble_states = 0;
  int speech_iters = 0, babble_iters = 0, cccp_rounds = 0;
  double init_theta = -1.0, init_gamma = -1.0;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  CLI::App* train_speech =
      app.add_subcommand("train-speech", "Train the clean-speech model");
  add_common(train_speech);
  train_speech->add_option("--manifest", manifest_path, "corpus manifest")
      ->required();
  train_speech->add_option("--out", out_path, "output model file")->required();
  train_speech->add_option("--speech-states", speech_states,
                           "number of hidden states");
  train_speech->add_option("--speech-iters", speech_iters, "EM iterations");

  CLI::App* train_babble =
      app.add_subcommand("train-babble", "Train the babble model");
  add_common(train_babble);
  train_babble->add_option("--manifest", manifest_path, "corpus manifest")
      ->required();
  train_babble
      ->add_option("--speech-model", speech_model_path, "trained speech model")
      ->required();
  train_babble->add_option("--out", out_path, "output model file")->required();
  train_babble->add_option("--babble-states", babble_states,
                           "number of hidden states");
  train_babble->add_option("--babble-iters", babble_iters, "EM iterations");
  train_babble->add_option("--cccp-rounds", cccp_rounds,
                           "weight-update rounds per EM iteration");

  CLI::App* enhance = app.add_subcommand("enhance", "Enhance a noisy wav");
  add_common(enhance);
  enhance->add_option("--input", input_path, "noisy wav")->required();
  enhance
      ->add_option("--speech-model", speech_model_path, "trained speech model")
      ->required();
  enhance
      ->add_option("--babble-model", babble_model_path, "trained babble model")
      ->required();
  enhance->add_option("--out", out_path, "output wav")->required();
  enhance->add_option("--init-theta", init_theta,
                      "initial speech gain scale (overrides warmup)");
  enhance->add_option("--init-gamma", init_gamma,
                      "initial babble gain scale (overrides warmup)");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score an enhanced wav against clean");
  add_common(evaluate);
  evaluate->add_option("--clean", clean_path, "clean reference wav")
      ->required();
  evaluate->add_option("--noisy", noisy_path, "noisy wav")->required();
  evaluate->add_option("--enhanced", enhanced_path, "enhanced wav")
      ->required();
  evaluate->add_option("--out", out_path, "report csv path")->required();
  evaluate->add_option("--name", name, "row label (default: enhanced file)");
  evaluate->add_option("--snr", snr_db, "nominal mixing snr for the report");

  CLI::App* cross =
      app.add_subcommand("cross-predict", "Model-fit confusion grid");
  add_common(cross);
  cross->add_option("--manifest", manifest_path, "held-out corpus manifest")
      ->required();
  cross->add_option("--speech-model", speech_model_path, "speech model")
      ->required();
  cross->add_option("--babble-model", babble_model_path, "babble model")
      ->required();
  cross->add_option("--out", out_path, "report csv path")->required();

  CLI::App* synth =
      app.add_subcommand("synth-babble", "Mix sources into a babble wav");
  add_common(synth);
  synth->add_option("--manifest", manifest_path, "source manifest")
      ->required();
  synth->add_option("--out", out_path, "output wav")->required();
  synth->add_option("--offsets", offsets_arg,
                    "comma-separated per-source level offsets in dB");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }
  SetQuiet(quiet);

  RunConfig config;
  if (!config_path.empty()) config = LoadRunConfig(config_path);
  if (threads >= 0) config.threads = threads;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  if (speech_states > 0) config.speech_states = speech_states;
  if (babble_states > 0) config.babble_states = babble_states;
  if (speech_iters > 0) config.speech_iters = speech_iters;
  if (babble_iters > 0) config.babble_iters = babble_iters;
  if (cccp_rounds > 0) config.cccp_rounds = cccp_rounds;
  if (init_theta > 0.0) config.enhancer.init_theta = init_theta;
  if (init_gamma > 0.0) config.enhancer.init_gamma = init_gamma;
  config.Validate();

  if (train_speech->parsed())
    return CmdTrainSpeech(config, manifest_path, out_path);
  if (train_babble->parsed())
    return CmdTrainBabble(config, manifest_path, speech_model_path, out_path);
  if (enhance->parsed())
    return CmdEnhance(config, input_path, speech_model_path,
                      babble_model_path, out_path);
  if (evaluate->parsed())
    return CmdEvaluate(config, clean_path, noisy_path, enhanced_path, name,
                       snr_db, out_path);
  if (cross->parsed())
    return CmdCrossPredict(config, manifest_path, speech_model_path,
                           babble_model_path, out_path);
  if (synth->parsed())
    return CmdSynthBabble(config, manifest_path, offsets_arg, out_path);
  return kExitBadInput;
}

}  // namespace
}  // namespace gammase

int main(int argc, char** argv) {
  try {
    return gammase::Run(argc, argv);
  } catch (const gammase::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gammase::kExitBadInput;
  } catch (const gammase::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gammase::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gammase::kExitNumeric;
  }
}
