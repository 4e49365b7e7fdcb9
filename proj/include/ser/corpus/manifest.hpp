#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ser/error.hpp"

namespace ser::corpus {

enum class Gender { kMale, kFemale };

const char* to_string(Gender g);
Gender parse_gender(const std::string& text);  // "M" / "F"

struct DualAnnotation {
  std::vector<std::string> coder_a;  // Major label first, optional Minor after
  std::vector<std::string> coder_b;
};

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  std::string speaker_id;
  Gender gender = Gender::kMale;
  std::string emotion;
  double duration_s = 0.0;
  std::optional<DualAnnotation> annotations;
};

class ManifestError : public DataError {
 public:
  ManifestError(int line, const std::string& what)
      : DataError("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  // Directory that relative audio paths resolve against.
  std::filesystem::path base_dir;

  std::vector<std::string> speakers() const;  // sorted, unique
  std::filesystem::path resolve_audio(const UtteranceRecord& rec) const;
};

UtteranceRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const UtteranceRecord& rec);

// One JSON object per line; blank lines are skipped. Duplicate ids are rejected.
CorpusManifest parse_manifest(std::istream& in);
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

}  // namespace ser::corpus
