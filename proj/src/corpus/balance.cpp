#include "ser/corpus/balance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ser/corpus/label_map.hpp"

namespace ser::corpus {

std::vector<std::size_t> downsample_neutral_indices(std::span<const std::string> speakers,
                                                    const std::vector<bool>& is_neutral, double target_fraction,
                                                    std::uint64_t seed, int per_speaker_min) {
  if (speakers.size() != is_neutral.size()) throw ShapeError("speaker and label lists differ in length");
  if (!(target_fraction > 0.0) || target_fraction > 1.0) {
    throw ConfigError("neutral target fraction must lie in (0, 1]");
  }
  if (per_speaker_min < 0) throw ConfigError("per-speaker minimum must be nonnegative");

  std::map<std::string, std::vector<std::size_t>> neutral_by_speaker;
  std::size_t n_neutral = 0;
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    if (is_neutral[i]) {
      neutral_by_speaker[speakers[i]].push_back(i);
      ++n_neutral;
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> keep(speakers.size(), false);
  for (std::size_t i = 0; i < speakers.size(); ++i) keep[i] = !is_neutral[i];

  std::vector<std::size_t> rest;
  std::size_t kept = 0;
  for (auto& [spk, idx] : neutral_by_speaker) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t floor_n = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_speaker_min));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (j < floor_n) {
        keep[idx[j]] = true;
        ++kept;
      } else {
        rest.push_back(idx[j]);
      }
    }
  }

  const auto target = static_cast<std::size_t>(std::llround(target_fraction * static_cast<double>(n_neutral)));
  if (target > kept) {
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    const std::size_t extra = std::min(rest.size(), target - kept);
    for (std::size_t j = 0; j < extra; ++j) keep[rest[j]] = true;
  }

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

std::vector<UtteranceRecord> downsample_neutral(std::span<const UtteranceRecord> records,
                                                const std::string& neutral_label, double target_fraction,
                                                std::uint64_t seed, int per_speaker_min) {
  std::vector<std::string> speakers;
  std::vector<bool> neutral;
  const std::string key = lowercase(neutral_label);
  for (const auto& r : records) {
    speakers.push_back(r.speaker_id);
    neutral.push_back(lowercase(r.emotion) == key);
  }
  const auto idx = downsample_neutral_indices(speakers, neutral, target_fraction, seed, per_speaker_min);
  std::vector<UtteranceRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records[i]);
  return out;
}

std::vector<std::size_t> oversample_balance(std::span<const int> labels, int n_classes, std::uint64_t seed) {
  if (n_classes < 1) throw ConfigError("oversampling needs at least one class");
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw DataError("label out of range during oversampling");
    by_class[labels[i]].push_back(i);
  }
  std::size_t target = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (by_class[c].empty()) throw DataError("class " + std::to_string(c) + " has no items to oversample");
    target = std::max(target, by_class[c].size());
  }

  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < n_classes; ++c) {
    const auto& pool = by_class[c];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = pool.size(); k < target; ++k) out.push_back(pool[pick(rng)]);
  }
  return out;
}

}  // namespace ser::corpus
