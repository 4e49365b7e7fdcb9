#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ser/corpus/manifest.hpp"

namespace ser::corpus {

// Acoustic family of one synthetic emotion class: amplitude-modulated
// band-limited noise around `center_hz`.
struct ClassAcoustics {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  double am_rate_hz = 0.0;
};

// `shift` scales every band center and modulation rate by (1 + shift).
ClassAcoustics class_acoustics(int class_index, double shift = 0.0);

struct SynthConfig {
  std::uint64_t seed = 7;
  int n_speakers = 24;
  int segments_per_speaker = 40;
  std::vector<std::string> class_names{"anger", "fear", "positive", "neutral"};
  std::vector<double> class_shares{0.25, 0.25, 0.25, 0.25};
  double min_duration_s = 1.0;
  double max_duration_s = 4.0;
  int sample_rate_hz = 8000;
  double acoustic_shift = 0.0;
  std::string speaker_prefix = "spk";
  // When positive, records carry dual annotations; coder B agrees with
  // coder A with this probability.
  double annotation_agreement = 0.0;

  void validate() const;
};

// Class shares presets: "balanced", "cemo-like", "iemocap-like".
void apply_shares_preset(SynthConfig& cfg, const std::string& name);

// Largest-remainder rounding of shares * total.
std::vector<int> class_counts_from_shares(const std::vector<double>& shares, int total);

struct PlannedUtterance {
  UtteranceRecord record;
  int class_index = 0;
  double f0_hz = 0.0;
  long samples = 0;
  std::uint64_t render_seed = 0;
};

// Deterministic corpus layout (labels, speakers, durations) without audio.
std::vector<PlannedUtterance> plan_synthetic_corpus(const SynthConfig& cfg);

std::vector<float> render_utterance(const PlannedUtterance& plan, const SynthConfig& cfg);

// Writes wav/<id>.wav files and manifest.jsonl under `out_dir`.
CorpusManifest generate_synthetic_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace ser::corpus
