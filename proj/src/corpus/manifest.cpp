#include "ser/corpus/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

namespace ser::corpus {

const char* to_string(Gender g) { return g == Gender::kMale ? "M" : "F"; }

Gender parse_gender(const std::string& text) {
  if (text == "M" || text == "m") return Gender::kMale;
  if (text == "F" || text == "f") return Gender::kFemale;
  throw DataError("unknown gender '" + text + "'");
}

std::vector<std::string> CorpusManifest::speakers() const {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.speaker_id);
  return {s.begin(), s.end()};
}

std::filesystem::path CorpusManifest::resolve_audio(const UtteranceRecord& rec) const {
  std::filesystem::path p(rec.audio_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  auto s = v.get<std::string>();
  if (s.empty()) throw DataError(std::string("field '") + key + "' is empty");
  return s;
}

std::vector<std::string> label_list(const nlohmann::json& v, const char* key) {
  if (!v.is_array()) throw DataError(std::string("field '") + key + "' must be an array of labels");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw DataError(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

UtteranceRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  UtteranceRecord r;
  r.id = require_string(j, "id");
  r.audio_path = require_string(j, "audio_path");
  r.speaker_id = require_string(j, "speaker_id");
  r.gender = parse_gender(require_string(j, "gender"));
  r.emotion = require_string(j, "emotion");
  const auto& dur = require(j, "duration_s");
  if (!dur.is_number()) throw DataError("field 'duration_s' must be a number");
  r.duration_s = dur.get<double>();
  if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s)) throw DataError("duration_s must be positive");

  const bool has_a = j.contains("ann_a") && !j["ann_a"].is_null();
  const bool has_b = j.contains("ann_b") && !j["ann_b"].is_null();
  if (has_a != has_b) throw DataError("ann_a and ann_b must be given together");
  if (has_a) {
    DualAnnotation ann{label_list(j["ann_a"], "ann_a"), label_list(j["ann_b"], "ann_b")};
    if (ann.coder_a.empty() || ann.coder_b.empty()) throw DataError("annotations must hold at least one label");
    r.annotations = std::move(ann);
  }
  return r;
}

nlohmann::ordered_json record_to_json(const UtteranceRecord& rec) {
  nlohmann::ordered_json j;
  j["id"] = rec.id;
  j["audio_path"] = rec.audio_path;
  j["speaker_id"] = rec.speaker_id;
  j["gender"] = to_string(rec.gender);
  j["emotion"] = rec.emotion;
  j["duration_s"] = rec.duration_s;
  if (rec.annotations) {
    j["ann_a"] = rec.annotations->coder_a;
    j["ann_b"] = rec.annotations->coder_b;
  }
  return j;
}

CorpusManifest parse_manifest(std::istream& in) {
  CorpusManifest m;
  std::unordered_set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(lineno, std::string("malformed JSON: ") + e.what());
    }
    UtteranceRecord rec;
    try {
      rec = record_from_json(j);
    } catch (const DataError& e) {
      throw ManifestError(lineno, e.what());
    }
    if (!ids.insert(rec.id).second) throw ManifestError(lineno, "duplicate id '" + rec.id + "'");
    m.records.push_back(std::move(rec));
  }
  return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  CorpusManifest m = parse_manifest(in);
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : manifest.records) out << record_to_json(r).dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ser::corpus
