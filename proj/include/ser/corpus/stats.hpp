#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/corpus/manifest.hpp"

namespace ser::corpus {

// Cohen's kappa between two label sequences: (p_o - p_e) / (1 - p_e).
// Returns 1.0 when chance agreement is 1 (both coders constant and equal).
double cohen_kappa(std::span<const std::string> labels_a, std::span<const std::string> labels_b);

struct ClassShare {
  std::string label;
  int segments = 0;
  double share = 0.0;
};

struct DurationStats {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double total = 0.0;
};

struct CorpusStats {
  int n_records = 0;
  int n_speakers = 0;
  std::vector<ClassShare> classes;  // sorted by label
  // emotions_per_speaker[k-1]: share of speakers expressing exactly k distinct labels.
  std::vector<double> emotions_per_speaker;
  // speakers_per_class[i]: share of speakers with at least one record of classes[i].
  std::vector<double> speakers_per_class;
  int male_speakers = 0;
  int female_speakers = 0;
  int male_segments = 0;
  int female_segments = 0;
  DurationStats duration;
  // Kappa on the Major (first) labels of records carrying dual annotations.
  std::optional<double> kappa;
  int annotated_records = 0;
};

CorpusStats corpus_stats(const CorpusManifest& manifest);

nlohmann::ordered_json stats_to_json(const CorpusStats& stats);

// Writes stats.json plus class_distribution.csv, emotions_per_speaker.csv
// and speakers_per_class.csv into `dir`.
void write_stats_report(const std::filesystem::path& dir, const CorpusStats& stats);

}  // namespace ser::corpus
