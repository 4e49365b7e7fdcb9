#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ser/corpus/manifest.hpp"

namespace ser::corpus {

// Maps source emotion labels onto task classes. A mapped value of nullopt
// drops the label. Source labels match case-insensitively.
struct LabelMap {
  std::map<std::string, std::optional<std::string>> entries;  // keys lowercased
  std::vector<std::string> task_classes;

  static LabelMap identity(const std::vector<std::string>& labels);

  // Throws ConfigError for unmapped labels; nullopt means DROP.
  std::optional<int> class_index(const std::string& source_label) const;
  void validate() const;
};

// Named class-task presets:
//   "4"        Anger, Fear, Positive, Neutral
//   "3"        Anger, Positive, Neutral            (Fear dropped)
//   "3-neg"    Negative(Anger+Fear), Positive, Neutral
//   "2"        Anger, Neutral
//   "2-neg"    Negative(Anger+Fear), Neutral
//   "2-posneg" Positive, Negative(Anger+Fear)      (Neutral dropped)
LabelMap label_map_preset(const std::string& name);
std::vector<std::string> label_map_preset_names();

// Applies `task=src1+src2` overrides on top of `base`. The target "DROP"
// drops the listed sources. Base classes that lose every source vanish;
// override classes come first in the resulting class order.
LabelMap apply_overrides(const LabelMap& base, const std::vector<std::string>& specs);

// Keeps mapped records and renames their emotion to the task class.
CorpusManifest apply_label_map(const CorpusManifest& manifest, const LabelMap& map);

// Removes every speaker whose records all carry `label` (case-insensitive).
CorpusManifest exclude_single_label_speakers(const CorpusManifest& manifest, const std::string& label);

std::string lowercase(std::string s);

}  // namespace ser::corpus
