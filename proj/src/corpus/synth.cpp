#include "ser/corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "ser/dsp/wav.hpp"
#include "ser/rng.hpp"

namespace ser::corpus {

ClassAcoustics class_acoustics(int class_index, double shift) {
  ClassAcoustics a;
  a.center_hz = 350.0 * std::pow(1.8, class_index) * (1.0 + shift);
  a.bandwidth_hz = 0.3 * a.center_hz;
  a.am_rate_hz = (3.0 + 2.5 * class_index) * (1.0 + shift);
  return a;
}

void SynthConfig::validate() const {
  if (n_speakers < 1 || segments_per_speaker < 1) throw ConfigError("synthetic corpus needs speakers and segments");
  if (class_names.empty() || class_names.size() != class_shares.size()) {
    throw ConfigError("class names and shares must be nonempty and of equal length");
  }
  double total = 0.0;
  for (double s : class_shares) {
    if (!(s >= 0.0)) throw ConfigError("class shares must be nonnegative");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("class shares must sum to 1");
  if (!(min_duration_s >= 0.3) || !(max_duration_s <= 30.0) || !(min_duration_s <= max_duration_s)) {
    throw ConfigError("durations must satisfy 0.3 <= min <= max <= 30 s");
  }
  if (!dsp::is_supported_rate(sample_rate_hz)) throw ConfigError("sample rate must be 8000 or 16000");
  if (!(acoustic_shift > -0.5) || !(acoustic_shift < 1.0)) throw ConfigError("acoustic shift must lie in (-0.5, 1)");
  const double nyquist = sample_rate_hz / 2.0;
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const auto a = class_acoustics(static_cast<int>(c), acoustic_shift);
    if (a.center_hz + a.bandwidth_hz / 2 > 0.95 * nyquist) {
      throw ConfigError("too many classes for the sample rate: class " + std::to_string(c) + " band exceeds Nyquist");
    }
  }
  if (annotation_agreement < 0.0 || annotation_agreement > 1.0) {
    throw ConfigError("annotation agreement must lie in [0, 1]");
  }
}

void apply_shares_preset(SynthConfig& cfg, const std::string& name) {
  if (name == "balanced") {
    cfg.class_names = {"anger", "fear", "positive", "neutral"};
    cfg.class_shares = {0.25, 0.25, 0.25, 0.25};
  } else if (name == "cemo-like") {
    cfg.class_names = {"anger", "fear", "positive", "neutral"};
    cfg.class_shares = {0.10, 0.05, 0.07, 0.78};
  } else if (name == "iemocap-like") {
    cfg.class_names = {"anger", "sadness", "happy", "neutral"};
    cfg.class_shares = {0.127, 0.267, 0.124, 0.482};
  } else {
    throw ConfigError("unknown shares preset '" + name + "'");
  }
}

std::vector<int> class_counts_from_shares(const std::vector<double>& shares, int total) {
  std::vector<int> counts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * total;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  // Largest remainder first; lower class index wins ties.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    counts[remainders[k].second] += 1;
  }
  return counts;
}

std::vector<PlannedUtterance> plan_synthetic_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const int total = cfg.n_speakers * cfg.segments_per_speaker;
  const auto counts = class_counts_from_shares(cfg.class_shares, total);

  // Deal class-sorted labels round-robin so each speaker sees as many
  // classes as the counts allow.
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  std::vector<std::vector<int>> per_speaker(cfg.n_speakers);
  for (std::size_t j = 0; j < labels.size(); ++j) per_speaker[j % cfg.n_speakers].push_back(labels[j]);

  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5EED));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<PlannedUtterance> plan;
  plan.reserve(total);
  for (int s = 0; s < cfg.n_speakers; ++s) {
    char spk[64];
    std::snprintf(spk, sizeof spk, "%s%03d", cfg.speaker_prefix.c_str(), s);
    const Gender gender = s % 2 == 0 ? Gender::kMale : Gender::kFemale;
    const double f0 = gender == Gender::kMale ? 95.0 + 40.0 * unit(rng) : 185.0 + 60.0 * unit(rng);
    auto& mine = per_speaker[s];
    std::shuffle(mine.begin(), mine.end(), rng);
    for (std::size_t k = 0; k < mine.size(); ++k) {
      PlannedUtterance u;
      u.class_index = mine[k];
      u.f0_hz = f0;
      const double dur = cfg.min_duration_s + (cfg.max_duration_s - cfg.min_duration_s) * unit(rng);
      u.samples = std::lround(std::round(dur * 100.0) / 100.0 * cfg.sample_rate_hz);
      char id[96];
      std::snprintf(id, sizeof id, "%s_%04zu", spk, k);
      u.record.id = id;
      u.record.audio_path = "wav/" + u.record.id + ".wav";
      u.record.speaker_id = spk;
      u.record.gender = gender;
      u.record.emotion = cfg.class_names[u.class_index];
      u.record.duration_s = static_cast<double>(u.samples) / cfg.sample_rate_hz;
      if (cfg.annotation_agreement > 0.0) {
        DualAnnotation ann;
        ann.coder_a = {u.record.emotion};
        std::string b = u.record.emotion;
        if (unit(rng) >= cfg.annotation_agreement && cfg.class_names.size() > 1) {
          std::uniform_int_distribution<std::size_t> other(1, cfg.class_names.size() - 1);
          b = cfg.class_names[(u.class_index + other(rng)) % cfg.class_names.size()];
        }
        ann.coder_b = {b};
        u.record.annotations = std::move(ann);
      }
      u.render_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(s), k + 1);
      plan.push_back(std::move(u));
    }
  }
  return plan;
}

namespace {

// Sum of unit phasors advanced by constant rotations.
class OscillatorBank {
 public:
  void add(double freq_hz, double amplitude, double phase, int sample_rate_hz) {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    state_.emplace_back(std::polar(amplitude, phase));
    step_.emplace_back(std::polar(1.0, w));
  }
  double next() {
    double y = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      y += state_[i].imag();
      state_[i] *= step_[i];
    }
    return y;
  }

 private:
  std::vector<std::complex<double>> state_;
  std::vector<std::complex<double>> step_;
};

}  // namespace

std::vector<float> render_utterance(const PlannedUtterance& plan, const SynthConfig& cfg) {
  const int sr = cfg.sample_rate_hz;
  std::mt19937_64 rng(plan.render_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  // Voiced register: harmonic series on the speaker's f0.
  OscillatorBank voice;
  const double f0 = plan.f0_hz * (0.97 + 0.06 * unit(rng));
  for (int h = 1; h <= 6; ++h) voice.add(f0 * h, 1.0 / h, two_pi * unit(rng), sr);

  // Emotion family: band-limited noise with class-specific AM.
  const ClassAcoustics ac = class_acoustics(plan.class_index, cfg.acoustic_shift);
  const double center = ac.center_hz * (0.96 + 0.08 * unit(rng));
  OscillatorBank band;
  constexpr int kPartials = 10;
  for (int p = 0; p < kPartials; ++p) {
    const double f = center + ac.bandwidth_hz * (unit(rng) - 0.5);
    band.add(f, 1.0 / std::sqrt(static_cast<double>(kPartials)), two_pi * unit(rng), sr);
  }
  const double am_rate = ac.am_rate_hz * (0.9 + 0.2 * unit(rng));
  const double am_phase = two_pi * unit(rng);
  const double voice_level = 0.4 + 0.2 * unit(rng);
  const double band_level = 0.8 + 0.3 * unit(rng);
  std::normal_distribution<double> hiss(0.0, 0.01);

  std::vector<double> y(plan.samples);
  double peak = 0.0;
  for (long n = 0; n < plan.samples; ++n) {
    const double t = static_cast<double>(n) / sr;
    const double am = 1.0 + 0.7 * std::sin(two_pi * am_rate * t + am_phase);
    y[n] = voice_level * voice.next() + band_level * am * band.next() + hiss(rng);
    peak = std::max(peak, std::abs(y[n]));
  }
  const double gain = (0.35 + 0.45 * unit(rng)) / std::max(peak, 1e-9);
  std::vector<float> out(plan.samples);
  for (long n = 0; n < plan.samples; ++n) out[n] = static_cast<float>(y[n] * gain);
  return out;
}

CorpusManifest generate_synthetic_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const auto plan = plan_synthetic_corpus(cfg);
  std::filesystem::create_directories(out_dir / "wav");
  CorpusManifest manifest;
  manifest.base_dir = out_dir;
  for (const auto& u : plan) {
    const auto audio = render_utterance(u, cfg);
    dsp::write_wav(out_dir / u.record.audio_path, audio, cfg.sample_rate_hz);
    manifest.records.push_back(u.record);
  }
  save_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace ser::corpus
