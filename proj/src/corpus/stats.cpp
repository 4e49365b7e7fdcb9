#include "ser/corpus/stats.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace ser::corpus {

double cohen_kappa(std::span<const std::string> labels_a, std::span<const std::string> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw ShapeError("kappa needs equal-length label sequences (" + std::to_string(labels_a.size()) + " vs " +
                     std::to_string(labels_b.size()) + ")");
  }
  if (labels_a.empty()) throw ShapeError("kappa needs nonempty label sequences");
  const double n = static_cast<double>(labels_a.size());
  std::map<std::string, double> count_a, count_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    count_a[labels_a[i]] += 1.0;
    count_b[labels_b[i]] += 1.0;
    if (labels_a[i] == labels_b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, ca] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end()) p_e += (ca / n) * (it->second / n);
  }
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

CorpusStats corpus_stats(const CorpusManifest& manifest) {
  if (manifest.records.empty()) throw DataError("cannot compute statistics of an empty manifest");
  CorpusStats s;
  s.n_records = static_cast<int>(manifest.records.size());

  std::map<std::string, int> class_counts;
  std::map<std::string, std::set<std::string>> labels_by_speaker;
  std::map<std::string, Gender> gender_by_speaker;
  std::vector<double> durations;
  std::vector<std::string> ann_a, ann_b;
  for (const auto& r : manifest.records) {
    class_counts[r.emotion] += 1;
    labels_by_speaker[r.speaker_id].insert(r.emotion);
    gender_by_speaker.emplace(r.speaker_id, r.gender);
    (r.gender == Gender::kMale ? s.male_segments : s.female_segments) += 1;
    durations.push_back(r.duration_s);
    if (r.annotations) {
      ann_a.push_back(r.annotations->coder_a.front());
      ann_b.push_back(r.annotations->coder_b.front());
    }
  }

  s.n_speakers = static_cast<int>(labels_by_speaker.size());
  for (const auto& [label, count] : class_counts) {
    s.classes.push_back({label, count, static_cast<double>(count) / s.n_records});
  }

  const int n_labels = static_cast<int>(class_counts.size());
  s.emotions_per_speaker.assign(n_labels, 0.0);
  s.speakers_per_class.assign(n_labels, 0.0);
  for (const auto& [spk, labels] : labels_by_speaker) {
    s.emotions_per_speaker[labels.size() - 1] += 1.0;
    for (std::size_t i = 0; i < s.classes.size(); ++i) {
      if (labels.count(s.classes[i].label)) s.speakers_per_class[i] += 1.0;
    }
  }
  for (double& v : s.emotions_per_speaker) v /= s.n_speakers;
  for (double& v : s.speakers_per_class) v /= s.n_speakers;
  for (const auto& [spk, g] : gender_by_speaker) (g == Gender::kMale ? s.male_speakers : s.female_speakers) += 1;

  std::sort(durations.begin(), durations.end());
  const std::size_t n = durations.size();
  s.duration.min = durations.front();
  s.duration.max = durations.back();
  s.duration.median = n % 2 ? durations[n / 2] : 0.5 * (durations[n / 2 - 1] + durations[n / 2]);
  for (double d : durations) s.duration.total += d;
  s.duration.mean = s.duration.total / static_cast<double>(n);

  s.annotated_records = static_cast<int>(ann_a.size());
  if (!ann_a.empty()) s.kappa = cohen_kappa(ann_a, ann_b);
  return s;
}

nlohmann::ordered_json stats_to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["n_records"] = s.n_records;
  j["n_speakers"] = s.n_speakers;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.classes.size(); ++i) {
    nlohmann::ordered_json c;
    c["label"] = s.classes[i].label;
    c["segments"] = s.classes[i].segments;
    c["share"] = s.classes[i].share;
    c["speaker_share"] = s.speakers_per_class[i];
    classes.push_back(c);
  }
  j["classes"] = classes;
  auto hist = nlohmann::ordered_json::array();
  for (std::size_t k = s.emotions_per_speaker.size(); k >= 1; --k) {
    nlohmann::ordered_json h;
    h["emotions"] = k;
    h["speaker_share"] = s.emotions_per_speaker[k - 1];
    hist.push_back(h);
  }
  j["emotions_per_speaker"] = hist;
  j["gender"] = {{"male_speakers", s.male_speakers},
                 {"female_speakers", s.female_speakers},
                 {"male_segments", s.male_segments},
                 {"female_segments", s.female_segments}};
  j["duration_s"] = {{"mean", s.duration.mean},
                     {"median", s.duration.median},
                     {"min", s.duration.min},
                     {"max", s.duration.max},
                     {"total", s.duration.total}};
  j["annotated_records"] = s.annotated_records;
  j["kappa"] = s.kappa ? nlohmann::ordered_json(*s.kappa) : nlohmann::ordered_json(nullptr);
  return j;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

}  // namespace

void write_stats_report(const std::filesystem::path& dir, const CorpusStats& s) {
  std::filesystem::create_directories(dir);
  open_out(dir / "stats.json") << stats_to_json(s).dump(2) << '\n';

  auto classes = open_out(dir / "class_distribution.csv");
  classes << "label,segments,share\n";
  for (const auto& c : s.classes) classes << c.label << ',' << c.segments << ',' << c.share << '\n';

  auto hist = open_out(dir / "emotions_per_speaker.csv");
  hist << "emotions,speaker_share\n";
  for (std::size_t k = s.emotions_per_speaker.size(); k >= 1; --k) {
    hist << k << ',' << s.emotions_per_speaker[k - 1] << '\n';
  }

  auto per_class = open_out(dir / "speakers_per_class.csv");
  per_class << "label,speaker_share\n";
  for (std::size_t i = 0; i < s.classes.size(); ++i) {
    per_class << s.classes[i].label << ',' << s.speakers_per_class[i] << '\n';
  }
}

}  // namespace ser::corpus
