#include "gammase/config.h"
#include "gammase/model_io.h"

#include <cstring>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "gammase/common.h"

namespace {

using gammase::BabbleNhmm;
using gammase::HashMatrix;
using gammase::InputError;
using gammase::LoadBabbleModel;
using gammase::LoadRunConfig;
using gammase::LoadSpeechModel;
using gammase::RunConfig;
using gammase::RunConfigFromJson;
using gammase::RunConfigToJson;
using gammase::SaveBabbleModel;
using gammase::SaveRunConfig;
using gammase::SaveSpeechModel;
using gammase::SpeechHmm;

std::filesystem::path TempFile(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

SpeechHmm TestSpeechModel() {
  SpeechHmm m;
  m.trans.resize(2, 2);
  m.trans << 0.9, 0.1, 0.5, 0.5;
  m.basis.resize(4, 2);
  m.basis << 1.0, 0.2, 0.5, 1.5, 2.0, 0.7, 0.3, 1.1;
  m.shape.resize(4);
  m.shape << 0.5, 1.0, 1.5, 2.0;
  m.gain_shape = 11.25;
  return m;
}

BabbleNhmm TestBabbleModel() {
  BabbleNhmm m;
  m.trans.resize(2, 2);
  m.trans << 0.7, 0.3, 0.4, 0.6;
  m.weights.resize(2, 2);
  m.weights << 1.0, 0.5, 0.25, 1.0;
  m.shape.resize(4);
  m.shape << 0.5, 1.0, 1.5, 2.0;
  m.gain_shape = 9.5;
  m.speech_basis = TestSpeechModel().basis;
  return m;
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void Dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST_CASE("speech model files round-trip bitwise") {
  auto path = TempFile("gammase_speech.gshm");
  SpeechHmm m = TestSpeechModel();
  SaveSpeechModel(path.string(), m, R"({"b": 1, "a": 2})");
  auto loaded = LoadSpeechModel(path.string());
  CHECK((loaded.model.trans - m.trans).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.basis - m.basis).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.shape - m.shape).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.model.gain_shape == m.gain_shape);
  CHECK(loaded.meta_json == R"({"a":2,"b":1})");
  std::filesystem::remove(path);
}

TEST_CASE("speech model metadata must be a json object") {
  auto path = TempFile("gammase_meta.gshm");
  SpeechHmm m = TestSpeechModel();
  CHECK_THROWS_AS(SaveSpeechModel(path.string(), m, "[1, 2]"), InputError);
  CHECK_THROWS_AS(SaveSpeechModel(path.string(), m, "{broken"), InputError);
  SaveSpeechModel(path.string(), m);
  CHECK(LoadSpeechModel(path.string()).meta_json == "{}");
  std::filesystem::remove(path);
}

TEST_CASE("corrupt speech model files are rejected") {
  auto path = TempFile("gammase_corrupt.gshm");
  SaveSpeechModel(path.string(), TestSpeechModel());
  const std::string good = Slurp(path);
  REQUIRE(good.size() > 32);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  Dump(path, bad_magic);
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);

  std::string bad_version = good;
  std::uint32_t v2 = 2;
  std::memcpy(bad_version.data() + 4, &v2, sizeof(v2));
  Dump(path, bad_version);
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);

  Dump(path, good.substr(0, 20));
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);

  // A negative gain shape survives parsing but fails model validation.
  std::string bad_shape = good;
  double neg = -5.0;
  std::memcpy(bad_shape.data() + 8, &neg, sizeof(neg));
  Dump(path, bad_shape);
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);

  Dump(path, good);
  CHECK(LoadSpeechModel(path.string()).model.gain_shape == 11.25);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);
}

TEST_CASE("babble model files round-trip with a basis fingerprint") {
  auto path = TempFile("gammase_babble.gbnh");
  BabbleNhmm m = TestBabbleModel();
  SaveBabbleModel(path.string(), m, R"({"iters": 7})");
  auto loaded = LoadBabbleModel(path.string());
  CHECK((loaded.model.trans - m.trans).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.weights - m.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.shape - m.shape).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.model.speech_basis - m.speech_basis).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(loaded.model.gain_shape == 9.5);
  CHECK(loaded.speech_basis_hash == HashMatrix(m.speech_basis));
  CHECK(loaded.meta_json == R"({"iters":7})");

  // Model kinds are not interchangeable.
  CHECK_THROWS_AS(LoadSpeechModel(path.string()), InputError);
  auto speech_path = TempFile("gammase_cross.gshm");
  SaveSpeechModel(speech_path.string(), TestSpeechModel());
  CHECK_THROWS_AS(LoadBabbleModel(speech_path.string()), InputError);
  std::filesystem::remove(path);
  std::filesystem::remove(speech_path);
}

TEST_CASE("matrix hashing reacts to value changes") {
  Eigen::MatrixXd a = TestSpeechModel().basis;
  Eigen::MatrixXd b = a;
  CHECK(HashMatrix(a) == HashMatrix(b));
  b(2, 1) += 1e-9;
  CHECK(HashMatrix(a) != HashMatrix(b));
  b = a;
  b(0, 0) = -b(0, 0);
  CHECK(HashMatrix(a) != HashMatrix(b));
}

TEST_CASE("empty config json yields the documented defaults") {
  RunConfig c = RunConfigFromJson("{}");
  CHECK(c.frame.frame_len == 320);
  CHECK(c.frame.hop == 160);
  CHECK(c.frame.sample_rate == 16000);
  CHECK(c.frame.window == "hann");
  CHECK(c.speech_states == 55);
  CHECK(c.babble_states == 10);
  CHECK(c.speech_iters == 30);
  CHECK(c.babble_iters == 30);
  CHECK(c.cccp_rounds == 3);
  CHECK(c.enhancer.speech_gain_shape == 15.0);
  CHECK(c.enhancer.babble_gain_shape == 15.0);
  CHECK(c.enhancer.theta_forget == 0.99);
  CHECK(c.enhancer.gamma_forget == 0.98);
  CHECK(c.enhancer.curvature_floor == 100.0);
  CHECK(c.enhancer.initial_information == 100.0);
  CHECK(c.enhancer.smooth_prev == 0.4);
  CHECK(c.enhancer.smooth_new == 0.6);
  CHECK(c.enhancer.init_frames == 6);
  CHECK(c.enhancer.map_max_iters == 50);
  CHECK(c.enhancer.map_tol == 1e-6);
  CHECK(c.seed == 1);
  CHECK(c.threads == 0);
}

TEST_CASE("unknown config keys are rejected at every level") {
  CHECK_THROWS_AS(RunConfigFromJson(R"({"foo": 1})"), InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"frame": {"hopp": 80}})"), InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"training": {"states": 5}})"),
                  InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"enhancer": {"bogus": 2}})"),
                  InputError);
}

TEST_CASE("partial config overlays keep the other defaults") {
  RunConfig c = RunConfigFromJson(
      R"({"training": {"speech_states": 12}, "seed": 7,
          "enhancer": {"map_tol": 1e-8}})");
  CHECK(c.speech_states == 12);
  CHECK(c.babble_states == 10);
  CHECK(c.seed == 7);
  CHECK(c.enhancer.map_tol == 1e-8);
  CHECK(c.enhancer.map_max_iters == 50);
}

TEST_CASE("invalid config values fail validation") {
  CHECK_THROWS_AS(RunConfigFromJson(R"({"training": {"speech_states": 0}})"),
                  InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"enhancer": {"theta_forget": 1.5}})"),
                  InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"threads": -1})"), InputError);
  CHECK_THROWS_AS(RunConfigFromJson(R"({"frame": {"frame_len": 321}})"),
                  InputError);
  CHECK_THROWS_AS(RunConfigFromJson("3"), InputError);
  CHECK_THROWS_AS(RunConfigFromJson("{broken"), InputError);
}

TEST_CASE("config serialization is stable") {
  RunConfig c;
  c.speech_states = 8;
  c.enhancer.init_theta = 0.25;
  std::string text = RunConfigToJson(c);
  RunConfig back = RunConfigFromJson(text);
  CHECK(back.speech_states == 8);
  CHECK(back.enhancer.init_theta == 0.25);
  CHECK(RunConfigToJson(back) == text);

  auto path = TempFile("gammase_config.json");
  SaveRunConfig(c, path.string());
  CHECK(Slurp(path) == text);
  RunConfig loaded = LoadRunConfig(path.string());
  CHECK(RunConfigToJson(loaded) == text);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(LoadRunConfig(path.string()), InputError);
}

}  // namespace
