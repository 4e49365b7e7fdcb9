#include "ser/dsp/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

namespace ser::dsp {

namespace {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  const fftw_complex* output() const { return out_.get(); }
  void execute() { fftw_execute(plan_); }
  int size() const { return n_; }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

int StftConfig::window_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

int StftConfig::hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate_hz / 1000.0));
}

int StftConfig::fft_size(int sample_rate_hz) const {
  const int win = window_samples(sample_rate_hz);
  int n = 1;
  while (n < win) n <<= 1;
  return n;
}

void StftConfig::validate() const {
  if (!(hop_ms > 0.0) || !(window_ms > hop_ms)) {
    throw ConfigError("STFT requires window_ms > hop_ms > 0");
  }
}

int frame_count(long n_samples, int window_samples, int hop_samples) {
  if (n_samples < window_samples) return 0;
  return static_cast<int>((n_samples - window_samples) / hop_samples) + 1;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

Grid stft_magnitude(const AudioSignal& signal, const StftConfig& cfg) {
  cfg.validate();
  const int sr = signal.sample_rate_hz;
  const int win = cfg.window_samples(sr);
  const int hop = cfg.hop_samples(sr);
  const int nfft = cfg.fft_size(sr);
  const int frames = frame_count(static_cast<long>(signal.samples.size()), win, hop);
  if (frames == 0) {
    throw DataError("signal too short for one analysis window (" + std::to_string(signal.samples.size()) +
                    " < " + std::to_string(win) + " samples): " + signal.source_path);
  }

  const auto window = hann_window(win);
  RealFft fft(nfft);
  const int bins = nfft / 2 + 1;
  Grid mag(frames, bins);
  double* in = fft.input();
  for (int t = 0; t < frames; ++t) {
    const float* x = signal.samples.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) in[i] = window[i] * x[i];
    for (int i = win; i < nfft; ++i) in[i] = 0.0;
    fft.execute();
    const fftw_complex* out = fft.output();
    for (int k = 0; k < bins; ++k) mag(t, k) = std::hypot(out[k][0], out[k][1]);
  }
  return mag;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges_hz(int sample_rate_hz, int n_mels) {
  const double top = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(top * i / (n_mels + 1));
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(int sample_rate_hz, int n_mels) {
  const auto edges = mel_edges_hz(sample_rate_hz, n_mels);
  return {edges.begin() + 1, edges.end() - 1};
}

Grid mel_filterbank(int fft_size, int sample_rate_hz, int n_mels) {
  if (n_mels < 2) throw ConfigError("n_mels must be >= 2");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("fft_size must be a power of two, got " + std::to_string(fft_size));
  }
  const int bins = fft_size / 2 + 1;
  const auto edges = mel_edges_hz(sample_rate_hz, n_mels);
  Grid fb = Grid::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb(m, k) = w;
    }
    if (!(fb.row(m).sum() > 0.0)) {
      throw ConfigError("mel filter " + std::to_string(m) + " covers no FFT bin (n_mels=" +
                        std::to_string(n_mels) + ", fft_size=" + std::to_string(fft_size) + ")");
    }
  }
  return fb;
}

Grid apply_log_mel(const Grid& magnitudes, const Grid& filterbank) {
  if (magnitudes.cols() != filterbank.cols()) {
    throw ShapeError("log-mel: magnitude bins " + std::to_string(magnitudes.cols()) + " != filterbank bins " +
                     std::to_string(filterbank.cols()));
  }
  Grid energy = magnitudes * filterbank.transpose();
  return energy.unaryExpr([](double e) { return std::log(e + kLogFloor); });
}

Grid compute_deltas(const Grid& features, int window_n) {
  if (features.rows() < 1) throw ShapeError("deltas need at least one frame");
  if (window_n < 1) throw ConfigError("delta window must be >= 1");
  const Eigen::Index frames = features.rows();
  double denom = 0.0;
  for (int n = 1; n <= window_n; ++n) denom += 2.0 * n * n;

  auto clamp_row = [frames](Eigen::Index t) { return std::clamp<Eigen::Index>(t, 0, frames - 1); };
  Grid out = Grid::Zero(frames, features.cols());
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int n = 1; n <= window_n; ++n) {
      out.row(t) += n * (features.row(clamp_row(t + n)) - features.row(clamp_row(t - n)));
    }
  }
  out /= denom;
  return out;
}

}  // namespace ser::dsp
