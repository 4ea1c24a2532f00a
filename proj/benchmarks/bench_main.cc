#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "gammase/babble_nhmm.h"
#include "gammase/dsp.h"
#include "gammase/enhancer.h"
#include "gammase/gig.h"
#include "gammase/speech_hmm.h"

namespace gammase {
namespace {

Eigen::MatrixXd LogNormalMat(int rows, int cols, double sigma,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = std::exp(gauss(rng));
  return m;
}

Eigen::MatrixXd RandomStochastic(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = 0.05 + unit(rng);
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

SpeechHmm MakeSpeechModel(int num_bins, int num_states) {
  std::mt19937_64 rng(7);
  SpeechHmm model;
  model.trans = RandomStochastic(num_states, rng);
  model.basis = LogNormalMat(num_bins, num_states, 0.7, rng);
  model.shape = Eigen::VectorXd::Ones(num_bins);
  model.gain_shape = 15.0;
  return model;
}

void BM_GigMomentsBessel(benchmark::State& state) {
  GigParams p;
  p.order = -140.0;
  p.rate = 30.0;
  p.tau = 250.0;
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGigMoments(p));
}
BENCHMARK(BM_GigMomentsBessel);

void BM_GigMomentsGammaLimit(benchmark::State& state) {
  GigParams p;
  p.order = 12.5;
  p.rate = 4.0;
  p.tau = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGigMoments(p));
}
BENCHMARK(BM_GigMomentsGammaLimit);

void BM_StateLogLik(benchmark::State& state) {
  const int num_states = static_cast<int>(state.range(0));
  SpeechHmm model = MakeSpeechModel(161, num_states);
  std::mt19937_64 rng(11);
  Eigen::MatrixXd power = LogNormalMat(161, 100, 1.0, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(StateLogLik(model, 0.3, power));
  state.SetItemsProcessed(state.iterations() * 100 * num_states);
}
BENCHMARK(BM_StateLogLik)->Arg(10)->Arg(55);

void BM_ForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(13);
  const int n = 55, t = 500;
  Eigen::MatrixXd trans = RandomStochastic(n, rng);
  Eigen::VectorXd initial = StationaryDistribution(trans);
  std::normal_distribution<double> gauss(-50.0, 20.0);
  Eigen::MatrixXd ll(t, n);
  for (int r = 0; r < t; ++r)
    for (int i = 0; i < n; ++i) ll(r, i) = gauss(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(ForwardBackward(ll, trans, initial));
}
BENCHMARK(BM_ForwardBackward);

void BM_MapGains(benchmark::State& state) {
  std::mt19937_64 rng(17);
  const int k = 161;
  Eigen::VectorXd a = LogNormalMat(k, 1, 0.6, rng);
  Eigen::VectorXd c = LogNormalMat(k, 1, 0.6, rng);
  Eigen::VectorXd y = LogNormalMat(k, 1, 1.0, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        MapGains(y, a, c, 15.0, 0.3, 15.0, 0.2, 1e-6, 50, nullptr));
}
BENCHMARK(BM_MapGains);

void BM_ProcessFrame(benchmark::State& state) {
  std::mt19937_64 rng(19);
  SpeechHmm speech = MakeSpeechModel(161, 55);
  BabbleNhmm babble;
  babble.speech_basis = speech.basis;
  babble.trans = RandomStochastic(10, rng);
  babble.weights = LogNormalMat(55, 10, 0.5, rng);
  babble.shape = Eigen::VectorXd::Ones(161);
  babble.gain_shape = 15.0;
  EnhancerConfig cfg;
  cfg.threads = static_cast<int>(state.range(0));
  CompositeModel model = CompositeModel::Build(speech, babble, cfg);
  OnlineEnhancer enhancer(model, cfg);
  enhancer.InitializeScales(0.1, 0.1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd frame(161);
  for (int i = 0; i < 161; ++i)
    frame[i] = std::complex<double>(gauss(rng), gauss(rng));
  for (auto _ : state)
    benchmark::DoNotOptimize(enhancer.ProcessFrame(frame));
}
BENCHMARK(BM_ProcessFrame)->Arg(1)->Arg(4);

void BM_Stft(benchmark::State& state) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 0.2);
  Eigen::VectorXd x(16000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
  FrameConfig frame;
  for (auto _ : state) benchmark::DoNotOptimize(Stft(x, frame));
}
BENCHMARK(BM_Stft);

}  // namespace
}  // namespace gammase

BENCHMARK_MAIN();
