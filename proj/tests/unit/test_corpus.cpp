#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ser/corpus/balance.hpp"
#include "ser/corpus/folds.hpp"
#include "ser/corpus/label_map.hpp"
#include "ser/corpus/manifest.hpp"
#include "ser/corpus/stats.hpp"
#include "ser/corpus/synth.hpp"
#include "ser/dsp/spectral.hpp"
#include "ser/dsp/wav.hpp"

using namespace ser;
using namespace ser::corpus;

namespace {

UtteranceRecord rec(const std::string& id, const std::string& spk, const std::string& emo, Gender g = Gender::kMale) {
  UtteranceRecord r;
  r.id = id;
  r.audio_path = id + ".wav";
  r.speaker_id = spk;
  r.gender = g;
  r.emotion = emo;
  r.duration_s = 1.5;
  return r;
}

CorpusManifest counts_manifest(const std::map<std::string, int>& counts) {
  CorpusManifest m;
  int id = 0;
  for (const auto& [label, n] : counts) {
    for (int i = 0; i < n; ++i, ++id) m.records.push_back(rec("u" + std::to_string(id), "s" + std::to_string(id % 7), label));
  }
  return m;
}

std::map<std::string, int> class_counts(const CorpusManifest& m) {
  std::map<std::string, int> c;
  for (const auto& r : m.records) c[r.emotion] += 1;
  return c;
}

std::vector<std::string> speaker_names(int n) {
  std::vector<std::string> s;
  for (int i = 0; i < n; ++i) s.push_back("sp" + std::to_string(i));
  return s;
}

}  // namespace

TEST_CASE("manifest parsing") {
  std::istringstream empty("");
  CHECK(parse_manifest(empty).records.empty());

  std::istringstream good(
      R"({"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"M","emotion":"anger","duration_s":1.2}

{"id":"b","audio_path":"b.wav","speaker_id":"s2","gender":"F","emotion":"neutral","duration_s":2.0,"ann_a":["neutral"],"ann_b":["anger","fear"]}
)");
  const auto m = parse_manifest(good);
  REQUIRE(m.records.size() == 2);
  CHECK(m.records[1].gender == Gender::kFemale);
  REQUIRE(m.records[1].annotations.has_value());
  CHECK(m.records[1].annotations->coder_b.size() == 2);
  CHECK(m.speakers() == std::vector<std::string>{"s1", "s2"});

  auto line_of_error = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_manifest(in);
    } catch (const ManifestError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of_error(R"({"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"M","emotion":"x","duration_s":1}
{"id":"b","audio_path":"b.wav","gender":"M","emotion":"x","duration_s":1})") == 2);
  CHECK(line_of_error(R"({"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"X","emotion":"x","duration_s":1})") == 1);
  CHECK(line_of_error("{not json") == 1);
  CHECK(line_of_error(R"({"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"M","emotion":"x","duration_s":1}
{"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"M","emotion":"x","duration_s":1})") == 2);
  CHECK(line_of_error(R"({"id":"a","audio_path":"a.wav","speaker_id":"s1","gender":"M","emotion":"x","duration_s":0})") == 1);
}

TEST_CASE("manifest save/load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "ser_test_manifest";
  std::filesystem::create_directories(dir);
  CorpusManifest m;
  m.records.push_back(rec("x1", "s1", "anger"));
  m.records.push_back(rec("x2", "s2", "fear", Gender::kFemale));
  m.records[1].annotations = DualAnnotation{{"fear"}, {"anger"}};
  save_manifest(dir / "m.jsonl", m);
  const auto back = load_manifest(dir / "m.jsonl");
  REQUIRE(back.records.size() == 2);
  CHECK(back.base_dir == dir);
  CHECK(back.records[1].annotations->coder_b == std::vector<std::string>{"anger"});
  CHECK(back.resolve_audio(back.records[0]) == dir / "x1.wav");
  std::filesystem::remove_all(dir);
}

TEST_CASE("label map presets and apply") {
  const auto m = counts_manifest({{"anger", 672}, {"fear", 312}, {"neutral", 3382}, {"positive", 459}});
  const auto two_neg = label_map_preset("2-neg");
  const auto mapped = apply_label_map(m, two_neg);
  const auto counts = class_counts(mapped);
  CHECK(counts.at("Negative") == 984);
  CHECK(counts.at("Neutral") == 3382);
  CHECK(counts.size() == 2);
  CHECK(mapped.records.size() == m.records.size() - 459);

  const auto id = apply_label_map(m, LabelMap::identity({"anger", "fear", "neutral", "positive"}));
  CHECK(class_counts(id) == class_counts(m));

  LabelMap partial;
  partial.entries = {{"anger", "Anger"}};
  partial.task_classes = {"Anger"};
  CHECK_THROWS_AS(apply_label_map(m, partial), ConfigError);

  for (const auto& name : label_map_preset_names()) CHECK_NOTHROW(label_map_preset(name).validate());
  CHECK(label_map_preset("4").task_classes.size() == 4);
  CHECK(label_map_preset("3-neg").task_classes.size() == 3);
  CHECK_THROWS(label_map_preset("5"));
}

TEST_CASE("label map overrides") {
  const auto base = label_map_preset("4");
  const auto neg = apply_overrides(label_map_preset("2"), {"neg=anger+fear"});
  CHECK(neg.task_classes == std::vector<std::string>{"neg", "Neutral"});
  CHECK(neg.class_index("Fear") == 0);
  CHECK(neg.class_index("anger") == 0);
  CHECK(neg.class_index("neutral") == 1);
  CHECK_FALSE(neg.class_index("positive").has_value());
  const auto dropped = apply_overrides(base, {"DROP=positive"});
  CHECK(dropped.task_classes.size() == 3);
  CHECK_THROWS(apply_overrides(base, {"nonsense"}));
}

TEST_CASE("exclude single-label speakers") {
  CorpusManifest m;
  m.records = {rec("a", "s1", "neutral"), rec("b", "s1", "Neutral"), rec("c", "s2", "neutral"), rec("d", "s2", "anger")};
  const auto out = exclude_single_label_speakers(m, "neutral");
  CHECK(out.records.size() == 2);
  CHECK(out.speakers() == std::vector<std::string>{"s2"});
}

TEST_CASE("speaker_kfold examples") {
  const auto folds = speaker_kfold(speaker_names(10), 5, 1);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    CHECK(f.test_speakers.size() == 2);
    CHECK(f.val_speakers.size() == 1);
    CHECK(f.train_speakers.size() == 7);
  }
  CHECK_THROWS_AS(speaker_kfold(speaker_names(5), 5, 1), DataError);

  const auto big = speaker_kfold(speaker_names(485), 5, 3);
  std::set<std::string> tested;
  for (const auto& f : big) {
    CHECK(f.test_speakers.size() == 97);
    tested.insert(f.test_speakers.begin(), f.test_speakers.end());
  }
  CHECK(tested.size() == 485);
  CHECK(speaker_kfold(speaker_names(24), 5, 9)[2].test_speakers == speaker_kfold(speaker_names(24), 5, 9)[2].test_speakers);
}

TEST_CASE("speaker_kfold properties over random speaker sets") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 5);
    const int n = 2 * k + static_cast<int>(rng() % 40);
    const auto speakers = speaker_names(n);
    const auto folds = speaker_kfold(speakers, k, rng());
    REQUIRE(static_cast<int>(folds.size()) == k);
    std::map<std::string, int> tested;
    for (const auto& f : folds) {
      CHECK_NOTHROW(check_disjoint(f));
      CHECK(f.train_speakers.size() + f.val_speakers.size() + f.test_speakers.size() == speakers.size());
      CHECK(!f.val_speakers.empty());
      for (const auto& s : f.test_speakers) tested[s] += 1;
    }
    CHECK(static_cast<int>(tested.size()) == n);
    for (const auto& [s, c] : tested) CHECK(c == 1);
  }
}

TEST_CASE("oversample_balance") {
  const std::vector<int> ab{0, 0, 0, 1};
  const auto idx = oversample_balance(ab, 2, 5);
  CHECK(idx.size() == 6);
  CHECK(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return ab[i] == 1; }) == 3);

  const std::vector<int> balanced{0, 1, 2, 0, 1, 2};
  const auto same = oversample_balance(balanced, 3, 5);
  CHECK(same == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});

  std::vector<int> table1;
  for (auto [c, n] : {std::pair{0, 1325}, {1, 826}, {2, 594}, {3, 3916}}) table1.insert(table1.end(), n, c);
  const auto big = oversample_balance(table1, 4, 1);
  std::vector<int> counts(4, 0);
  for (auto i : big) counts[table1[i]] += 1;
  CHECK(counts == std::vector<int>{3916, 3916, 3916, 3916});

  CHECK_THROWS_AS(oversample_balance(std::vector<int>{0, 0}, 2, 1), DataError);
}

TEST_CASE("balancing properties over random corpora") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng() % 4);
    const int n = n_classes + static_cast<int>(rng() % 200);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < n_classes ? i : static_cast<int>(rng() % n_classes);
    const auto idx = oversample_balance(labels, n_classes, rng());
    std::vector<int> counts(n_classes, 0);
    std::vector<int> seen(n, 0);
    for (auto i : idx) {
      counts[labels[i]] += 1;
      seen[i] += 1;
    }
    for (int c : counts) CHECK(c == counts[0]);
    for (int s : seen) CHECK(s >= 1);

    std::vector<std::string> speakers(n);
    std::vector<bool> neutral(n);
    for (int i = 0; i < n; ++i) {
      speakers[i] = "s" + std::to_string(rng() % 12);
      neutral[i] = labels[i] == 0;
    }
    const double frac = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
    const auto keep = downsample_neutral_indices(speakers, neutral, frac, rng());
    std::set<std::string> had, kept_spk;
    std::set<std::size_t> kept(keep.begin(), keep.end());
    for (int i = 0; i < n; ++i) {
      if (neutral[i]) had.insert(speakers[i]);
      if (!neutral[i]) CHECK(kept.count(i) == 1);
      if (neutral[i] && kept.count(i)) kept_spk.insert(speakers[i]);
    }
    CHECK(had == kept_spk);
  }
}

TEST_CASE("downsample_neutral") {
  std::vector<UtteranceRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(rec("n" + std::to_string(i), "s" + std::to_string(i % 5), "neutral"));
  for (int i = 0; i < 10; ++i) recs.push_back(rec("a" + std::to_string(i), "s" + std::to_string(i % 5), "anger"));
  recs.push_back(rec("solo", "s9", "neutral"));
  CHECK(downsample_neutral(recs, "neutral", 1.0, 3).size() == recs.size());
  const auto out = downsample_neutral(recs, "neutral", 0.3, 3);
  int neutral = 0;
  bool solo = false;
  for (const auto& r : out) {
    neutral += r.emotion == "neutral";
    solo |= r.id == "solo";
  }
  CHECK(solo);
  CHECK(neutral == static_cast<int>(std::lround(0.3 * 101)));
  CHECK(out.size() - neutral == 10);
}

TEST_CASE("cohen_kappa") {
  const std::vector<std::string> a{"x", "x", "y", "y"}, b{"x", "y", "y", "y"};
  CHECK(cohen_kappa(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cohen_kappa(b, a) == cohen_kappa(a, b));
  CHECK(cohen_kappa(a, a) == 1.0);
  const std::vector<std::string> c{"z", "z"};
  CHECK(cohen_kappa(c, c) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(a, c), ShapeError);

  // Renaming labels consistently leaves kappa unchanged.
  std::mt19937_64 rng(2);
  std::vector<std::string> x, y, xr, yr;
  const std::vector<std::string> names{"p", "q", "r"}, renamed{"R", "P", "Q"};
  for (int i = 0; i < 200; ++i) {
    const int u = static_cast<int>(rng() % 3), v = rng() % 4 == 0 ? static_cast<int>(rng() % 3) : u;
    x.push_back(names[u]);
    y.push_back(names[v]);
    xr.push_back(renamed[u]);
    yr.push_back(renamed[v]);
  }
  CHECK(cohen_kappa(xr, yr) == doctest::Approx(cohen_kappa(x, y)).epsilon(1e-12));

  std::vector<std::string> constant(20000, "n"), coin;
  for (int i = 0; i < 20000; ++i) coin.push_back(rng() % 2 ? "n" : "a");
  CHECK(std::abs(cohen_kappa(constant, coin)) < 1e-12);
}

TEST_CASE("corpus_stats") {
  CorpusManifest one;
  one.records = {rec("a", "s1", "anger"), rec("b", "s1", "anger")};
  const auto s1 = corpus_stats(one);
  CHECK(s1.emotions_per_speaker == std::vector<double>{1.0});
  CHECK(s1.n_speakers == 1);
  CHECK_FALSE(s1.kappa.has_value());

  SynthConfig cfg;
  apply_shares_preset(cfg, "cemo-like");
  cfg.n_speakers = 100;
  cfg.segments_per_speaker = 69;
  cfg.annotation_agreement = 0.8;
  CorpusManifest synth;
  for (const auto& p : plan_synthetic_corpus(cfg)) synth.records.push_back(p.record);
  const auto s = corpus_stats(synth);
  CHECK(s.n_records == 6900);
  const auto neutral = std::find_if(s.classes.begin(), s.classes.end(), [](const ClassShare& c) { return c.label == "neutral"; });
  CHECK(neutral->share == doctest::Approx(0.78).epsilon(1e-3));
  CHECK(s.duration.min >= cfg.min_duration_s);
  CHECK(s.duration.max <= cfg.max_duration_s);
  CHECK(s.duration.median == doctest::Approx(2.5).epsilon(0.03));
  REQUIRE(s.kappa.has_value());
  CHECK(*s.kappa > 0.5);
  CHECK(*s.kappa < 0.95);
  CHECK(s.male_speakers == 50);
  CHECK(s.female_speakers == 50);

  const auto j = stats_to_json(s);
  CHECK(j["n_records"] == 6900);
  CHECK(j["emotions_per_speaker"].size() == 4);
  CHECK_THROWS_AS(corpus_stats(CorpusManifest{}), DataError);
}

TEST_CASE("synthetic plan shares and emotions per speaker") {
  CHECK(class_counts_from_shares({0.14, 0.06, 0.10, 0.70}, 6931) == std::vector<int>{970, 416, 693, 4852});
  SynthConfig cfg;
  cfg.n_speakers = 10;
  cfg.segments_per_speaker = 8;
  CorpusManifest m;
  for (const auto& p : plan_synthetic_corpus(cfg)) m.records.push_back(p.record);
  const auto s = corpus_stats(m);
  CHECK(s.emotions_per_speaker.back() == 1.0);

  SynthConfig bad;
  bad.class_shares = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("synthetic corpus is deterministic and class bands separate") {
  const auto root = std::filesystem::temp_directory_path() / "ser_test_synth";
  std::filesystem::remove_all(root);
  SynthConfig cfg;
  cfg.n_speakers = 4;
  cfg.segments_per_speaker = 8;
  const auto m1 = generate_synthetic_corpus(cfg, root / "a");
  generate_synthetic_corpus(cfg, root / "b");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(root / "a" / "manifest.jsonl") == slurp(root / "b" / "manifest.jsonl"));
  for (const auto& r : m1.records) REQUIRE(slurp(root / "a" / r.audio_path) == slurp(root / "b" / r.audio_path));

  // Spectral centroid over 250 Hz..4 kHz increases with the class index.
  std::map<std::string, std::vector<double>> centroids;
  for (const auto& r : m1.records) {
    const auto sig = dsp::load_wav(m1.resolve_audio(r));
    const auto mag = dsp::stft_magnitude(sig, dsp::StftConfig{});
    const double bin_hz = 8000.0 / 256.0;
    double num = 0.0, den = 0.0;
    for (Eigen::Index t = 0; t < mag.rows(); ++t) {
      for (Eigen::Index k = 8; k < mag.cols(); ++k) {
        const double p = mag(t, k) * mag(t, k);
        num += p * k * bin_hz;
        den += p;
      }
    }
    centroids[r.emotion].push_back(num / den);
  }
  auto range = [&](const std::string& c) {
    const auto& v = centroids.at(c);
    return std::pair{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
  };
  CHECK(range("anger").second < range("fear").first);
  CHECK(range("fear").second < range("positive").first);
  CHECK(range("positive").second < range("neutral").first);
  std::filesystem::remove_all(root);
}
