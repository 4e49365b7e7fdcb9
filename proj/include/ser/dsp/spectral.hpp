#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ser/dsp/wav.hpp"

namespace ser::dsp {

// Row-major time x bins grid used by the spectral stages.
using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLogFloor = 1e-10;

struct StftConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;

  int window_samples(int sample_rate_hz) const;
  int hop_samples(int sample_rate_hz) const;
  // Smallest power of two >= window_samples.
  int fft_size(int sample_rate_hz) const;
  void validate() const;
};

// floor((n - win) / hop) + 1, or 0 when the signal is shorter than a window.
int frame_count(long n_samples, int window_samples, int hop_samples);

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// |FFT| of Hann-weighted frames; frame t covers samples [t*hop, t*hop + win),
// zero-padded to fft_size. Shape: frames x (fft_size/2 + 1).
Grid stft_magnitude(const AudioSignal& signal, const StftConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequencies (Hz) of the n_mels triangular filters.
std::vector<double> mel_center_frequencies(int sample_rate_hz, int n_mels);

// Triangular filters equally spaced on the Mel scale between 0 Hz and Nyquist.
// Shape: n_mels x (fft_size/2 + 1).
Grid mel_filterbank(int fft_size, int sample_rate_hz, int n_mels);

// ln(filterbank * magnitude + kLogFloor), shape frames x n_mels.
Grid apply_log_mel(const Grid& magnitudes, const Grid& filterbank);

// Regression deltas over +-window_n frames with edge replication.
Grid compute_deltas(const Grid& features, int window_n = 2);

}  // namespace ser::dsp
