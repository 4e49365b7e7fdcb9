#include "ser/corpus/label_map.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace ser::corpus {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

LabelMap LabelMap::identity(const std::vector<std::string>& labels) {
  LabelMap m;
  for (const auto& l : labels) {
    if (m.entries.emplace(lowercase(l), l).second) m.task_classes.push_back(l);
  }
  return m;
}

std::optional<int> LabelMap::class_index(const std::string& source_label) const {
  auto it = entries.find(lowercase(source_label));
  if (it == entries.end()) throw ConfigError("label '" + source_label + "' is not covered by the label map");
  if (!it->second) return std::nullopt;
  auto pos = std::find(task_classes.begin(), task_classes.end(), *it->second);
  if (pos == task_classes.end()) throw ConfigError("label map target '" + *it->second + "' is not a task class");
  return static_cast<int>(pos - task_classes.begin());
}

void LabelMap::validate() const {
  if (task_classes.empty()) throw ConfigError("label map defines no task classes");
  std::set<std::string> reachable;
  for (const auto& [src, dst] : entries) {
    if (!dst) continue;
    if (std::find(task_classes.begin(), task_classes.end(), *dst) == task_classes.end()) {
      throw ConfigError("label map target '" + *dst + "' is not a task class");
    }
    reachable.insert(*dst);
  }
  std::set<std::string> seen;
  for (const auto& c : task_classes) {
    if (!seen.insert(c).second) throw ConfigError("duplicate task class '" + c + "'");
    if (!reachable.count(c)) throw ConfigError("task class '" + c + "' has no source label");
  }
}

namespace {

LabelMap make_map(std::vector<std::pair<std::string, std::optional<std::string>>> pairs,
                  std::vector<std::string> classes) {
  LabelMap m;
  for (auto& [src, dst] : pairs) m.entries[lowercase(src)] = dst;
  m.task_classes = std::move(classes);
  m.validate();
  return m;
}

}  // namespace

LabelMap label_map_preset(const std::string& name) {
  using P = std::vector<std::pair<std::string, std::optional<std::string>>>;
  if (name == "4") {
    return make_map(P{{"anger", "Anger"}, {"fear", "Fear"}, {"positive", "Positive"}, {"neutral", "Neutral"}},
                    {"Anger", "Fear", "Positive", "Neutral"});
  }
  if (name == "3") {
    return make_map(P{{"anger", "Anger"}, {"fear", std::nullopt}, {"positive", "Positive"}, {"neutral", "Neutral"}},
                    {"Anger", "Positive", "Neutral"});
  }
  if (name == "3-neg") {
    return make_map(
        P{{"anger", "Negative"}, {"fear", "Negative"}, {"positive", "Positive"}, {"neutral", "Neutral"}},
        {"Negative", "Positive", "Neutral"});
  }
  if (name == "2") {
    return make_map(
        P{{"anger", "Anger"}, {"fear", std::nullopt}, {"positive", std::nullopt}, {"neutral", "Neutral"}},
        {"Anger", "Neutral"});
  }
  if (name == "2-neg") {
    return make_map(
        P{{"anger", "Negative"}, {"fear", "Negative"}, {"positive", std::nullopt}, {"neutral", "Neutral"}},
        {"Negative", "Neutral"});
  }
  if (name == "2-posneg") {
    return make_map(
        P{{"anger", "Negative"}, {"fear", "Negative"}, {"positive", "Positive"}, {"neutral", std::nullopt}},
        {"Positive", "Negative"});
  }
  throw ConfigError("unknown class preset '" + name + "'");
}

std::vector<std::string> label_map_preset_names() { return {"4", "3", "3-neg", "2", "2-neg", "2-posneg"}; }

LabelMap apply_overrides(const LabelMap& base, const std::vector<std::string>& specs) {
  LabelMap m = base;
  std::vector<std::string> override_classes;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ConfigError("label override '" + spec + "' must look like task=src1+src2");
    }
    const std::string target = spec.substr(0, eq);
    const bool drop = target == "DROP";
    std::stringstream sources(spec.substr(eq + 1));
    std::string src;
    bool any = false;
    while (std::getline(sources, src, '+')) {
      if (src.empty()) throw ConfigError("empty source label in override '" + spec + "'");
      m.entries[lowercase(src)] = drop ? std::nullopt : std::optional<std::string>(target);
      any = true;
    }
    if (!any) throw ConfigError("override '" + spec + "' lists no source labels");
    if (!drop && std::find(override_classes.begin(), override_classes.end(), target) == override_classes.end()) {
      override_classes.push_back(target);
    }
  }

  std::set<std::string> reachable;
  for (const auto& [src, dst] : m.entries) {
    if (dst) reachable.insert(*dst);
  }
  std::vector<std::string> classes = override_classes;
  for (const auto& c : base.task_classes) {
    if (reachable.count(c) && std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  }
  m.task_classes = std::move(classes);
  m.validate();
  return m;
}

CorpusManifest apply_label_map(const CorpusManifest& manifest, const LabelMap& map) {
  map.validate();
  CorpusManifest out;
  out.base_dir = manifest.base_dir;
  for (const auto& rec : manifest.records) {
    const auto idx = map.class_index(rec.emotion);
    if (!idx) continue;
    UtteranceRecord r = rec;
    r.emotion = map.task_classes[*idx];
    out.records.push_back(std::move(r));
  }
  return out;
}

CorpusManifest exclude_single_label_speakers(const CorpusManifest& manifest, const std::string& label) {
  const std::string key = lowercase(label);
  std::set<std::string> keep;
  for (const auto& r : manifest.records) {
    if (lowercase(r.emotion) != key) keep.insert(r.speaker_id);
  }
  CorpusManifest out;
  out.base_dir = manifest.base_dir;
  for (const auto& r : manifest.records) {
    if (keep.count(r.speaker_id)) out.records.push_back(r);
  }
  return out;
}

}  // namespace ser::corpus
