#include "gammase/model_io.h"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gammase/common.h"

namespace gammase {

namespace {

constexpr std::uint32_t kSpeechMagic = 0x4d485347;  // "GSHM"
constexpr std::uint32_t kBabbleMagic = 0x484e4247;  // "GBNH"
constexpr std::uint32_t kVersion = 1;

void WriteU32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void WriteU64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void WriteMatrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  WriteU32(out, static_cast<std::uint32_t>(m.rows()));
  WriteU32(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

void WriteVector(std::ofstream& out, const Eigen::VectorXd& v) {
  WriteU32(out, static_cast<std::uint32_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}

void WriteDouble(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void WriteMeta(std::ofstream& out, const std::string& meta_json) {
  nlohmann::json parsed = nlohmann::json::parse(meta_json, nullptr, false);
  GS_CHECK_INPUT(!parsed.is_discarded() && parsed.is_object(),
                 "model metadata must be a JSON object");
  std::string canonical = parsed.dump();
  WriteU64(out, canonical.size());
  out.write(canonical.data(), static_cast<std::streamsize>(canonical.size()));
}

std::uint32_t ReadU32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  GS_CHECK_INPUT(in.good(), "truncated model file ", path);
  return v;
}

std::uint64_t ReadU64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  GS_CHECK_INPUT(in.good(), "truncated model file ", path);
  return v;
}

double ReadDouble(std::ifstream& in, const std::string& path) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  GS_CHECK_INPUT(in.good(), "truncated model file ", path);
  return v;
}

Eigen::MatrixXd ReadMatrix(std::ifstream& in, const std::string& path) {
  std::uint32_t rows = ReadU32(in, path);
  std::uint32_t cols = ReadU32(in, path);
  GS_CHECK_INPUT(rows > 0 && cols > 0 && rows < (1u << 24) &&
                     cols < (1u << 24),
                 "implausible matrix dimensions in ", path);
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  GS_CHECK_INPUT(in.good(), "truncated model file ", path);
  return m;
}

Eigen::VectorXd ReadVector(std::ifstream& in, const std::string& path) {
  std::uint32_t n = ReadU32(in, path);
  GS_CHECK_INPUT(n > 0 && n < (1u << 24), "implausible vector length in ",
                 path);
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * v.size()));
  GS_CHECK_INPUT(in.good(), "truncated model file ", path);
  return v;
}

std::string ReadMeta(std::ifstream& in, const std::string& path) {
  std::uint64_t len = ReadU64(in, path);
  GS_CHECK_INPUT(len < (1u << 26), "implausible metadata length in ", path);
  std::string meta(len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(len));
  GS_CHECK_INPUT(in.good() || in.eof(), "truncated model file ", path);
  GS_CHECK_INPUT(in.gcount() == static_cast<std::streamsize>(len),
                 "truncated model file ", path);
  return meta;
}

}  // namespace

std::uint64_t HashMatrix(const Eigen::MatrixXd& matrix) {
  return Fnv1a64(matrix.data(), sizeof(double) * matrix.size());
}

void SaveSpeechModel(const std::string& path, const SpeechHmm& model,
                     const std::string& meta_json) {
  model.Validate();
  std::ofstream out(path, std::ios::binary);
  GS_CHECK_INPUT(out.good(), "cannot write ", path);
  WriteU32(out, kSpeechMagic);
  WriteU32(out, kVersion);
  WriteDouble(out, model.gain_shape);
  WriteMatrix(out, model.trans);
  WriteMatrix(out, model.basis);
  WriteVector(out, model.shape);
  WriteMeta(out, meta_json);
  GS_CHECK_INPUT(out.good(), "failed while writing ", path);
}

LoadedSpeechModel LoadSpeechModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  GS_CHECK_INPUT(in.good(), "cannot read ", path);
  GS_CHECK_INPUT(ReadU32(in, path) == kSpeechMagic,
                 path, " is not a speech model file");
  std::uint32_t version = ReadU32(in, path);
  GS_CHECK_INPUT(version == kVersion, "unsupported model version ", version,
                 " in ", path);
  LoadedSpeechModel loaded;
  loaded.model.gain_shape = ReadDouble(in, path);
  loaded.model.trans = ReadMatrix(in, path);
  loaded.model.basis = ReadMatrix(in, path);
  loaded.model.shape = ReadVector(in, path);
  loaded.meta_json = ReadMeta(in, path);
  loaded.model.Validate();
  return loaded;
}

void SaveBabbleModel(const std::string& path, const BabbleNhmm& model,
                     const std::string& meta_json) {
  model.Validate();
  std::ofstream out(path, std::ios::binary);
  GS_CHECK_INPUT(out.good(), "cannot write ", path);
  WriteU32(out, kBabbleMagic);
  WriteU32(out, kVersion);
  WriteDouble(out, model.gain_shape);
  WriteMatrix(out, model.trans);
  WriteMatrix(out, model.weights);
  WriteVector(out, model.shape);
  WriteMatrix(out, model.speech_basis);
  WriteU64(out, HashMatrix(model.speech_basis));
  WriteMeta(out, meta_json);
  GS_CHECK_INPUT(out.good(), "failed while writing ", path);
}

LoadedBabbleModel LoadBabbleModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  GS_CHECK_INPUT(in.good(), "cannot read ", path);
  GS_CHECK_INPUT(ReadU32(in, path) == kBabbleMagic,
                 path, " is not a babble model file");
  std::uint32_t version = ReadU32(in, path);
  GS_CHECK_INPUT(version == kVersion, "unsupported model version ", version,
                 " in ", path);
  LoadedBabbleModel loaded;
  loaded.model.gain_shape = ReadDouble(in, path);
  loaded.model.trans = ReadMatrix(in, path);
  loaded.model.weights = ReadMatrix(in, path);
  loaded.model.shape = ReadVector(in, path);
  loaded.model.speech_basis = ReadMatrix(in, path);
  loaded.speech_basis_hash = ReadU64(in, path);
  loaded.meta_json = ReadMeta(in, path);
  if (HashMatrix(loaded.model.speech_basis) != loaded.speech_basis_hash)
    Warn(internal::StrCat("speech basis stored in ", path,
                          " does not match its recorded hash"));
  loaded.model.Validate();
  return loaded;
}

}  // namespace gammase
