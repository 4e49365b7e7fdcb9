#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "ser/dsp/features.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ser::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file below `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ser_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

const std::vector<std::string> kSmallCorpus{"--speakers", "10", "--per-speaker", "4", "--min-duration", "1",
                                            "--max-duration", "2"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("synth is deterministic and validates shares") {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  REQUIRE(run(cat({"synth", "--seed", "7", "--out", a.string()}, kSmallCorpus)).code == 0);
  REQUIRE(run(cat({"synth", "--seed", "7", "--out", b.string()}, kSmallCorpus)).code == 0);
  CHECK(tree(a) == tree(b));

  const auto bad = run({"synth", "--shares", "0.5,0.6,0,0", "--out", scratch("synth_bad").string()});
  CHECK(bad.code == ser::cli::kExitUsage);
  const auto rec = nlohmann::json::parse(bad.err);
  CHECK(rec.at("error").at("kind") == "usage");
  CHECK(rec.at("error").at("exit_code") == 1);

  const auto cemo = scratch("synth_cemo");
  REQUIRE(run({"synth", "--preset", "cemo-like", "--speakers", "20", "--per-speaker", "10", "--out", cemo.string()})
              .code == 0);
  const auto stats = run({"stats", "--manifest", (cemo / "manifest.jsonl").string(), "--out", (cemo / "st").string()});
  REQUIRE(stats.code == 0);
  const auto j = nlohmann::json::parse(stats.out);
  for (const auto& c : j.at("classes")) {
    if (c.at("label") == "neutral") CHECK(c.at("share").get<double>() == doctest::Approx(0.78));
  }
  CHECK(fs::exists(cemo / "st" / "class_distribution.csv"));
  CHECK(fs::exists(cemo / "st" / "emotions_per_speaker.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(cemo);
}

TEST_CASE("featurize writes caches once and reports bad files") {
  const auto dir = scratch("feat");
  REQUIRE(run({"synth", "--speakers", "2", "--per-speaker", "2", "--min-duration", "3", "--max-duration", "3",
               "--out", dir.string()})
              .code == 0);
  const auto manifest = (dir / "manifest.jsonl").string();
  const auto first = run({"featurize", "--manifest", manifest});
  REQUIRE(first.code == 0);
  CHECK(nlohmann::json::parse(first.out).at("computed") == 4);
  const auto fm = ser::dsp::read_feature_cache(dir / "features" / "spk000_0000.serf");
  CHECK(fm.frames() == 298);
  CHECK(fm.dims() == 120);

  const auto again = run({"featurize", "--manifest", manifest});
  CHECK(nlohmann::json::parse(again.out).at("computed") == 0);
  CHECK(nlohmann::json::parse(again.out).at("cached") == 4);

  std::ofstream(dir / "wav" / "spk001_0001.wav", std::ios::trunc) << "not a wav";
  fs::remove(dir / "features" / "spk001_0001.serf");
  const auto broken = run({"featurize", "--manifest", manifest});
  CHECK(broken.code == ser::cli::kExitData);
  const auto j = nlohmann::json::parse(broken.out);
  REQUIRE(j.at("errors").size() == 1);
  CHECK(j.at("errors")[0].at("id") == "spk001_0001");
  fs::remove_all(dir);
}

TEST_CASE("crossval conditions, label maps and determinism") {
  const auto dir = scratch("cv");
  REQUIRE(run(cat({"synth", "--out", (dir / "corpus").string()}, kSmallCorpus)).code == 0);
  const auto manifest = (dir / "corpus" / "manifest.jsonl").string();
  const std::vector<std::string> quick{"--seed", "3", "--epochs", "1", "--channels", "4"};
  const auto comparison = (dir / "comparison.csv").string();

  auto r1 = run(cat({"crossval", "--manifest", manifest, "--out", (dir / "a").string(), "--classes", "2", "--map",
                     "neg=anger+fear", "--comparison", comparison},
                    quick));
  REQUIRE(r1.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report.at("classes") == nlohmann::json::array({"neg", "Neutral"}));
  CHECK(report.at("folds").size() == 5);

  auto r2 = run(cat({"crossval", "--manifest", manifest, "--out", (dir / "b").string(), "--no-multitask",
                     "--no-deltas", "--comparison", comparison},
                    quick));
  REQUIRE(r2.code == 0);
  std::ifstream csv(comparison);
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].rfind("deltas/multitask/temporal,neg|Neutral", 0) == 0);
  CHECK(lines[2].rfind("no-deltas/single-task/temporal,Anger|Fear|Positive|Neutral", 0) == 0);

  REQUIRE(run(cat({"crossval", "--manifest", manifest, "--out", (dir / "a2").string(), "--classes", "2", "--map",
                   "neg=anger+fear"},
                  quick))
              .code == 0);
  CHECK(tree(dir / "a") == tree(dir / "a2"));
  fs::remove_all(dir);
}

TEST_CASE("train, eval and crosscorpus round trip") {
  const auto dir = scratch("train");
  REQUIRE(run(cat({"synth", "--out", (dir / "A").string()}, kSmallCorpus)).code == 0);
  REQUIRE(run(cat({"synth", "--out", (dir / "B").string(), "--prefix", "sb", "--seed", "9"}, kSmallCorpus)).code == 0);
  const auto a = (dir / "A" / "manifest.jsonl").string(), b = (dir / "B" / "manifest.jsonl").string();
  const std::vector<std::string> quick{"--seed", "3", "--epochs", "1", "--channels", "4"};

  REQUIRE(run(cat({"train", "--manifest", a, "--out", (dir / "m").string()}, quick)).code == 0);
  for (const char* f : {"model.json", "model.serm", "train_log.jsonl", "train.json"}) CHECK(fs::exists(dir / "m" / f));
  const auto ev = run({"eval", "--manifest", b, "--model", (dir / "m").string(), "--out", (dir / "ev").string()});
  REQUIRE(ev.code == 0);
  CHECK(nlohmann::json::parse(ev.out).at("test").at("n_segments") == 40);

  const auto mismatch = run({"eval", "--manifest", b, "--model", (dir / "m").string(), "--classes", "2"});
  CHECK(mismatch.code == ser::cli::kExitUsage);

  const auto xc = run(cat({"crosscorpus", "--train-manifest", a, "--test-manifest", b, "--out", (dir / "xc").string()},
                          quick));
  CHECK(xc.code == 0);
  CHECK(fs::exists(dir / "xc" / "report.json"));
  const auto same = run(cat({"crosscorpus", "--train-manifest", a, "--test-manifest", a}, quick));
  CHECK(same.code == ser::cli::kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("gradcheck, usage errors and the output root") {
  const auto root = scratch("root");
  ::setenv("SER_OUTPUT_ROOT", root.string().c_str(), 1);
  const auto gc = run({"gradcheck"});
  CHECK(gc.code == 0);
  CHECK(nlohmann::json::parse(gc.out).at("passed") == true);
  CHECK(fs::exists(root / "gradcheck" / "gradcheck.json"));
  const auto tight = run({"gradcheck", "--kernel", "temporal", "--tolerance", "1e-15"});
  CHECK(tight.code == ser::cli::kExitNumerical);
  ::unsetenv("SER_OUTPUT_ROOT");

  CHECK(run({}).code == ser::cli::kExitUsage);
  CHECK(run({"bogus"}).code == ser::cli::kExitUsage);
  CHECK(run({"crossval", "--manifest", "x.jsonl"}).code == ser::cli::kExitUsage);
  CHECK(run({"gradcheck", "--kernel", "3d"}).code == ser::cli::kExitUsage);
  const auto missing = run({"stats", "--manifest", (root / "none.jsonl").string()});
  CHECK(missing.code == ser::cli::kExitData);
  CHECK(nlohmann::json::parse(missing.err).at("error").at("kind") == "data");
  CHECK(run({"--help"}).code == 0);
  fs::remove_all(root);
}
