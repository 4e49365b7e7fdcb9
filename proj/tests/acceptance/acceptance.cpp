// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.
//
//   acceptance [--work DIR] [--keep] [criterion numbers...]
//
// The end-to-end criteria (8-11) generate synthetic corpora under the work
// directory and train the default temporal model; they take several minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ser/corpus/balance.hpp"
#include "ser/corpus/folds.hpp"
#include "ser/corpus/label_map.hpp"
#include "ser/corpus/synth.hpp"
#include "ser/eval/experiment.hpp"
#include "ser/eval/metrics.hpp"
#include "ser/net/layers.hpp"
#include "ser/net/model.hpp"
#include "ser/segmenter.hpp"
#include "ser/train/gradcheck.hpp"
#include "ser/train/optimizer.hpp"

using namespace ser;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradcheckSeconds = 120.0;
constexpr double kMetricTolerance = 1e-12;
constexpr int kMetricTrials = 1000;
constexpr int kMaskTrialsPerMode = 200;
constexpr int kChopTrials = 500;
constexpr int kBalanceTrials = 100;
constexpr int kFoldTrials = 100;
constexpr int kEpochs = 10;  // the criterion allows up to 30
constexpr double kBestFoldUa = 0.90;
constexpr double kMeanFoldUa = 0.80;
constexpr double kCrossvalSeconds = 15 * 60.0;
constexpr double kChanceUa = 0.25;
constexpr double kChanceBand = 0.10;
constexpr double kMultitaskTolerance = 1e-12;
constexpr double kGenderUa = 0.95;
constexpr std::uint64_t kExperimentSeed = 1234;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- 1 ----

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::set<std::string> layers;
  for (const auto mode : {net::ConvMode::kTemporal, net::ConvMode::k2D}) {
    const auto report = train::gradcheck(train::gradcheck_tiny_spec(mode), 7);
    worst = std::max(worst, report.worst());
    for (const auto& e : report.entries) layers.insert(e.layer);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  for (const char* want :
       {"dense", "relu", "dropout", "conv_temporal", "conv_2d", "maxpool", "bilstm", "softmax_xent", "model"}) {
    if (!layers.count(want)) {
      o.pass = false;
      o.detail += std::string("missing layer ") + want + "; ";
    }
  }
  o.pass = o.pass && worst <= kGradTolerance && secs <= kGradcheckSeconds;
  o.detail += "worst rel err " + fmt(worst, 3) + " (<= " + fmt(kGradTolerance) + "), " + fmt(secs, 3) + " s";
  return o;
}

// ---- 2 ----

Outcome metric_oracle() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  int defined = 0;
  for (int trial = 0; trial < kMetricTrials; ++trial) {
    const int e = 2 + static_cast<int>(rng() % 6);
    std::vector<std::string> names;
    for (int c = 0; c < e; ++c) names.push_back("c" + std::to_string(c));
    eval::ConfusionMatrix cm{names};
    std::vector<std::pair<int, int>> pairs;
    const int n = static_cast<int>(rng() % 300);
    for (int i = 0; i < n; ++i) pairs.emplace_back(static_cast<int>(rng() % e), static_cast<int>(rng() % e));
    for (const auto& [t, p] : pairs) cm.add(t, p);

    // Brute force from the pair list.
    std::vector<double> hit(e, 0.0), support(e, 0.0);
    double correct = 0.0;
    for (const auto& [t, p] : pairs) {
      support[t] += 1.0;
      if (t == p) {
        hit[t] += 1.0;
        correct += 1.0;
      }
    }
    const bool all_defined = std::all_of(support.begin(), support.end(), [](double s) { return s > 0.0; });
    if (n > 0) {
      worst = std::max(worst, std::abs(eval::wa(cm) - correct / n));
      worst = std::max(worst, std::abs(eval::wa(cm) - static_cast<double>(cm.trace()) / cm.total()));
    }
    if (!all_defined) {
      if (eval::try_ua(cm)) return {false, "UA defined with an empty class at trial " + std::to_string(trial)};
      continue;
    }
    ++defined;
    const auto recall = eval::recall_per_class(cm);
    double ua = 0.0;
    for (int c = 0; c < e; ++c) {
      worst = std::max(worst, std::abs(recall[c] - hit[c] / support[c]));
      ua += hit[c] / support[c];
    }
    worst = std::max(worst, std::abs(eval::ua(cm) - ua / e));
  }

  // Balanced supports: UA equals WA.
  double balanced = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int e = 2 + static_cast<int>(rng() % 6), per = 1 + static_cast<int>(rng() % 50);
    std::vector<std::string> names(e, "");
    for (int c = 0; c < e; ++c) names[c] = "c" + std::to_string(c);
    eval::ConfusionMatrix cm{names};
    for (int t = 0; t < e; ++t) {
      for (int i = 0; i < per; ++i) cm.add(t, static_cast<int>(rng() % e));
    }
    balanced = std::max(balanced, std::abs(eval::ua(cm) - eval::wa(cm)));
  }
  return {worst <= kMetricTolerance && balanced <= kMetricTolerance,
          std::to_string(kMetricTrials) + " matrices (" + std::to_string(defined) + " with UA), max dev " +
              fmt(worst, 3) + ", balanced |UA-WA| " + fmt(balanced, 3)};
}

// ---- 3 ----

int placements(int in, int k, int s, int p) {
  int n = 0;
  for (int start = -p; start + k <= in + p; start += s) ++n;
  return n;
}

Outcome mask_formula() {
  std::mt19937_64 rng(3);
  auto u = [&](int n) { return static_cast<int>(rng() % n); };
  int mismatches = 0;
  std::map<net::ConvMode, int> checked;
  for (const auto mode : {net::ConvMode::kTemporal, net::ConvMode::k2D}) {
    const bool temporal = mode == net::ConvMode::kTemporal;
    for (int trial = 0; checked[mode] < kMaskTrialsPerMode; ++trial) {
      if (trial > 20 * kMaskTrialsPerMode) return {false, "could not draw enough valid specs"};
      const net::Shape2D input{8 + u(60), 3 + u(20)};
      net::ModelSpec spec;
      const int n_stages = 1 + u(3);
      for (int s = 0; s < n_stages; ++s) {
        net::StageSpec st;
        st.conv = {1 + u(5), 1 + u(4), 1 + u(3), 1 + u(3), u(3), 1 + u(3), mode};
        st.pool_h = 1 + u(2);
        st.pool_w = temporal ? 1 : 1 + u(2);
        spec.stages.push_back(st);
      }
      std::vector<net::StageShape> predicted;
      try {
        predicted = net::trace_shapes(spec, input);
      } catch (const Error&) {
        continue;
      }
      ++checked[mode];

      net::ParameterSet<double> params;
      std::mt19937_64 init(trial);
      std::normal_distribution<double> n01;
      net::Activation<double> a;
      a.batch = 2;
      a.height = input.height;
      a.width = input.width;
      a.channels = 1;
      a.valid = {input.height, 1 + u(input.height)};
      a.data.resize(2 * input.height, input.width);
      for (Eigen::Index i = 0; i < a.data.size(); ++i) a.data.data()[i] = n01(init);
      net::Shape2D shape = input;
      int channels = 1;
      for (std::size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& st = spec.stages[s];
        const net::Shape2D brute{
            placements(shape.height, st.conv.kernel_h, st.conv.stride_h, st.conv.padding),
            temporal ? 1 : placements(shape.width, st.conv.kernel_w, st.conv.stride_w, st.conv.padding)};
        net::Conv2D<double> conv("c" + std::to_string(s), st.conv, shape, channels, params, init);
        a = conv.forward(a);
        if (a.height != brute.height || a.width != brute.width) ++mismatches;
        if (st.pool_h > 1 || st.pool_w > 1) {
          net::MaxPool<double> pool(st.pool_h, st.pool_w);
          a = pool.forward(a);
        }
        shape = {a.height, a.width};
        channels = a.channels;
        if (!(predicted[s + 1].shape == shape) || predicted[s + 1].channels != channels) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(checked[net::ConvMode::kTemporal]) + " temporal + " +
                               std::to_string(checked[net::ConvMode::k2D]) + " 2d specs, " +
                               std::to_string(mismatches) + " mismatches"};
}

// ---- 4 ----

Outcome padding_invisibility() {
  int cases = 0, failures = 0;
  auto run = [&](const net::ModelSpec& spec, net::Shape2D input, std::vector<int> valid, std::uint64_t seed) {
    net::Model<double> model(spec, input, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const int batch = static_cast<int>(valid.size());
    net::Mat<double> x(batch * input.height, input.width);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
    std::vector<int> emo, gen;
    for (int b = 0; b < batch; ++b) {
      emo.push_back(b % spec.n_emotions);
      gen.push_back(b % 2);
    }
    const net::ForwardOptions fo{true, seed + 1};
    const auto l1 = model.loss(x, valid, emo, gen, fo, true);
    std::vector<net::Mat<double>> g1;
    for (const auto& t : model.params()) g1.push_back(t.grad);
    for (int b = 0; b < batch; ++b) {
      for (int t = valid[b]; t < input.height; ++t) {
        for (int c = 0; c < input.width; ++c) x(b * input.height + t, c) = 1e3 * n01(rng);
      }
    }
    const auto l2 = model.loss(x, valid, emo, gen, fo, true);
    ++cases;
    bool same = l1.total == l2.total;
    std::size_t k = 0;
    for (const auto& t : model.params()) same = same && t.grad == g1[k++];
    if (!same) ++failures;
  };
  for (const auto mode : {net::ConvMode::kTemporal, net::ConvMode::k2D}) {
    run(train::gradcheck_tiny_spec(mode), {train::kGradcheckHeight, 9}, {train::kGradcheckHeight, 7, 3}, 5);
  }
  run(net::default_temporal_spec(4, true, 8), {300, 120}, {300, 230, 101, 40}, 9);
  return {failures == 0, std::to_string(cases) + " models, " + std::to_string(failures) + " with any difference"};
}

// ---- 5 ----

Outcome chopper_oracle() {
  const seg::ChopConfig cfg;
  const int window = cfg.window_frames(), hop = cfg.hop_frames();
  if (window != 300 || hop != 200) return {false, "window/hop frames " + std::to_string(window) + "/" +
                                                      std::to_string(hop)};
  std::mt19937_64 rng(5);
  int failures = 0, total_subs = 0;
  for (int trial = 0; trial < kChopTrials; ++trial) {
    const int frames = 1 + static_cast<int>(rng() % 2500);
    dsp::FeatureMatrix fm;
    fm.values.resize(frames, 3);
    for (int t = 0; t < frames; ++t) {
      for (int c = 0; c < 3; ++c) fm.values(t, c) = static_cast<float>(t * 3 + c + 1);
    }
    const auto subs = seg::chop(fm, cfg);
    const int want_n =
        frames <= window ? 1 : static_cast<int>(std::ceil(static_cast<double>(frames - window) / hop)) + 1;
    bool ok = static_cast<int>(subs.size()) == want_n && seg::subsegment_count(frames, cfg) == want_n;

    // Sliding-window enumeration.
    std::vector<int> covered(frames, 0);
    for (int k = 0; ok && k < want_n; ++k) {
      const int start = k * hop, valid = std::min(window, frames - start);
      const auto& s = subs[k];
      ok = s.offset_frames == start && s.valid_frames == valid && s.values.rows() == window && s.values.cols() == 3;
      for (int r = 0; ok && r < window; ++r) {
        for (int c = 0; c < 3; ++c) {
          const float want = r < valid ? fm.values(start + r, c) : 0.0f;
          ok = ok && s.values(r, c) == want;
        }
      }
      for (int r = 0; ok && r < valid; ++r) ++covered[start + r];
      if (ok && k > 0) {
        const auto& p = subs[k - 1];
        const int overlap = p.offset_frames + p.valid_frames - s.offset_frames;
        ok = overlap == window - hop;
      }
    }
    ok = ok && std::all_of(covered.begin(), covered.end(), [](int c) { return c >= 1; });
    total_subs += static_cast<int>(subs.size());
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(kChopTrials) + " lengths, " + std::to_string(total_subs) +
                             " sub-segments, " + std::to_string(failures) + " mismatches"};
}

// ---- 6 ----

Outcome balancing() {
  std::mt19937_64 rng(6);
  int failures = 0;
  for (int trial = 0; trial < kBalanceTrials; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng() % 5);
    const int n = n_classes + static_cast<int>(rng() % 400);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < n_classes ? i : static_cast<int>(rng() % n_classes);
    // Skew toward class 0 so oversampling has work to do.
    for (int i = n_classes; i < n; ++i) {
      if (rng() % 2) labels[i] = 0;
    }
    const auto idx = corpus::oversample_balance(labels, n_classes, rng());
    bool ok = idx.size() >= static_cast<std::size_t>(n);
    for (int i = 0; ok && i < n; ++i) ok = idx[i] == static_cast<std::size_t>(i);
    std::vector<int> counts(n_classes, 0);
    for (const auto i : idx) {
      ok = ok && i < static_cast<std::size_t>(n);
      if (ok) ++counts[labels[i]];
    }
    ok = ok && std::all_of(counts.begin(), counts.end(), [&](int c) { return c == counts[0]; });

    // Neutral thinning on a random multi-speaker corpus.
    const int speakers = 2 + static_cast<int>(rng() % 12);
    std::vector<corpus::UtteranceRecord> records;
    std::map<std::string, int> neutral_before;
    for (int i = 0; i < n; ++i) {
      corpus::UtteranceRecord r;
      r.id = "u" + std::to_string(i);
      r.audio_path = r.id + ".wav";
      r.speaker_id = "s" + std::to_string(rng() % speakers);
      r.emotion = rng() % 10 < 7 ? "neutral" : "anger";
      r.duration_s = 1.0;
      if (r.emotion == "neutral") ++neutral_before[r.speaker_id];
      records.push_back(r);
    }
    const double fraction = 0.05 + 0.9 * std::uniform_real_distribution<double>()(rng);
    const auto kept = corpus::downsample_neutral(records, "neutral", fraction, rng());
    std::map<std::string, int> neutral_after;
    int non_neutral_before = 0, non_neutral_after = 0;
    for (const auto& r : records) non_neutral_before += r.emotion != "neutral";
    for (const auto& r : kept) {
      if (r.emotion == "neutral") ++neutral_after[r.speaker_id];
      else ++non_neutral_after;
    }
    ok = ok && non_neutral_after == non_neutral_before;
    for (const auto& [spk, c] : neutral_before) ok = ok && c > 0 && neutral_after[spk] >= 1;
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(kBalanceTrials) + " corpora, " + std::to_string(failures) + " violations"};
}

// ---- 7 ----

Outcome protocol_hygiene() {
  std::mt19937_64 rng(8);
  int failures = 0;
  for (int trial = 0; trial < kFoldTrials; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 9);
    const int n = 2 * k + static_cast<int>(rng() % 40);
    corpus::CorpusManifest m;
    std::set<std::string> all;
    for (int i = 0; i < n * 3; ++i) {
      corpus::UtteranceRecord r;
      r.id = "u" + std::to_string(i);
      r.audio_path = r.id + ".wav";
      r.speaker_id = "p" + std::to_string(i % n * 7919 % 100003);
      r.emotion = "neutral";
      r.duration_s = 1.0;
      all.insert(r.speaker_id);
      m.records.push_back(r);
    }
    const auto folds = corpus::speaker_kfold(m, k, rng());
    bool ok = static_cast<int>(folds.size()) == k;
    std::map<std::string, int> tested;
    for (const auto& f : folds) {
      std::set<std::string> tr(f.train_speakers.begin(), f.train_speakers.end());
      std::set<std::string> va(f.val_speakers.begin(), f.val_speakers.end());
      std::set<std::string> te(f.test_speakers.begin(), f.test_speakers.end());
      ok = ok && !va.empty() && !te.empty() && !tr.empty();
      for (const auto& s : va) ok = ok && !tr.count(s) && !te.count(s);
      for (const auto& s : te) ok = ok && !tr.count(s);
      ok = ok && tr.size() + va.size() + te.size() == all.size();
      for (const auto& s : te) ++tested[s];
    }
    ok = ok && tested.size() == all.size();
    for (const auto& [s, c] : tested) ok = ok && c == 1 && all.count(s);
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(kFoldTrials) + " manifests, " + std::to_string(failures) + " violations"};
}

// ---- 8-11 ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

struct EndToEnd {
  fs::path work;
  corpus::LabelMap map = corpus::label_map_preset("4");
  std::optional<eval::LabeledCorpus> a, b;
  std::optional<eval::CrossvalReport> cv_a;
  double cv_a_seconds = 0.0;

  eval::ExperimentConfig config() const {
    eval::ExperimentConfig cfg;
    cfg.optimizer.max_epochs = kEpochs;
    cfg.seed = kExperimentSeed;
    return cfg;
  }

  eval::LabeledCorpus load(const corpus::SynthConfig& sc, const std::string& name) {
    const fs::path dir = work / name;
    if (!fs::exists(dir / "manifest.jsonl")) corpus::generate_synthetic_corpus(sc, dir);
    const auto mapped = corpus::apply_label_map(corpus::load_manifest(dir / "manifest.jsonl"), map);
    return eval::load_labeled_corpus(mapped, map.task_classes, config().features, dir / "features");
  }

  // Corpus A uses the default generator settings: 24 speakers x 40 segments.
  const eval::LabeledCorpus& corpus_a() {
    if (!a) a = load(corpus::SynthConfig{}, "corpus_a");
    return *a;
  }

  // Corpus B: other speakers, other seed, every class band and modulation shifted up by 35%.
  const eval::LabeledCorpus& corpus_b() {
    if (!b) {
      corpus::SynthConfig sc;
      sc.seed = 11;
      sc.speaker_prefix = "sb";
      sc.acoustic_shift = 0.35;
      b = load(sc, "corpus_b");
    }
    return *b;
  }

  eval::CrossvalReport run_crossval(const eval::LabeledCorpus& corpus, eval::ExperimentConfig cfg,
                                    const fs::path& out) {
    fs::remove_all(out);
    eval::NetLearner learner(cfg);
    return eval::crossval(corpus, cfg, learner, out);
  }

  const eval::CrossvalReport& crossval_a() {
    if (!cv_a) {
      const auto t0 = Clock::now();
      corpus_a();
      cv_a = run_crossval(*a, config(), work / "crossval_a");
      cv_a_seconds = seconds_since(t0);
    }
    return *cv_a;
  }
};

std::string fold_list(const eval::CrossvalReport& r) {
  std::string s;
  for (const auto& f : r.folds) s += (s.empty() ? "" : "/") + fmt(f.test.ua.value_or(-1.0), 3);
  return s;
}

Outcome learnability(EndToEnd& e2e) {
  const auto& r = e2e.crossval_a();
  const double best = r.best_fold ? r.folds[*r.best_fold].test.ua.value_or(0.0) : 0.0;
  const double mean = r.mean_ua.value_or(0.0);

  auto cfg = e2e.config();
  cfg.shuffle_labels = true;
  const auto shuffled = e2e.run_crossval(e2e.corpus_a(), cfg, e2e.work / "crossval_a_shuffled");
  const double control = shuffled.mean_ua.value_or(-1.0);

  const bool pass = best >= kBestFoldUa && mean >= kMeanFoldUa && e2e.cv_a_seconds <= kCrossvalSeconds &&
                    std::abs(control - kChanceUa) <= kChanceBand;
  return {pass, "fold UA " + fold_list(r) + ", best " + fmt(best) + " (>= " + fmt(kBestFoldUa) + "), mean " +
                    fmt(mean) + " (>= " + fmt(kMeanFoldUa) + "), " + std::to_string(kEpochs) + " epochs in " +
                    fmt(e2e.cv_a_seconds, 4) + " s; shuffled control mean UA " + fmt(control) + " (" +
                    fold_list(shuffled) + "), band " + fmt(kChanceUa) + " +/- " + fmt(kChanceBand)};
}

Outcome multitask_contract(EndToEnd& e2e) {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double le = std::exponential_distribution<double>(0.5)(rng);
    const double lg = std::exponential_distribution<double>(0.5)(rng);
    const auto t = net::multitask_total(le, lg, true);
    worst = std::max(worst, std::abs(t.total - (t.loss_emotion + t.loss_gender.value_or(NAN))));
    worst = std::max(worst, std::abs(t.total - (le + lg)));
  }
  for (const auto mode : {net::ConvMode::kTemporal, net::ConvMode::k2D}) {
    net::Model<double> model(train::gradcheck_tiny_spec(mode), {train::kGradcheckHeight, 9}, 4);
    net::Mat<double> x(3 * train::kGradcheckHeight, 9);
    std::normal_distribution<double> n01;
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
    const std::vector<int> valid{train::kGradcheckHeight, 5, 9}, emo{0, 2, 3}, gen{1, 0, 1};
    const auto t = model.loss(x, valid, emo, gen, {}, false);
    worst = std::max(worst, std::abs(t.total - (t.loss_emotion + t.loss_gender.value_or(NAN))));
  }
  const auto& r = e2e.crossval_a();
  const double gender = r.mean_gender_ua.value_or(0.0);
  return {worst <= kMultitaskTolerance && gender >= kGenderUa,
          "max |total - sum| " + fmt(worst, 3) + " (<= " + fmt(kMultitaskTolerance) + "), mean gender UA " +
              fmt(gender) + " (>= " + fmt(kGenderUa) + ")"};
}

Outcome cross_corpus_direction(EndToEnd& e2e) {
  const auto within = e2e.run_crossval(e2e.corpus_b(), e2e.config(), e2e.work / "crossval_b");
  eval::NetLearner learner(e2e.config());
  fs::remove_all(e2e.work / "a_to_b");
  const auto x = eval::cross_corpus(e2e.corpus_a(), e2e.corpus_b(), e2e.config(), learner, e2e.work / "a_to_b");
  const double across = x.test.ua.value_or(1.0), inside = within.mean_ua.value_or(0.0);
  return {across < inside, "A->B UA " + fmt(across) + " < within-B mean UA " + fmt(inside)};
}

Outcome determinism(EndToEnd& e2e) {
  e2e.crossval_a();
  const auto again = e2e.run_crossval(e2e.corpus_a(), e2e.config(), e2e.work / "crossval_a_repeat");
  const auto first = tree(e2e.work / "crossval_a"), second = tree(e2e.work / "crossval_a_repeat");
  int logs = 0, checkpoints = 0, reports = 0, differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) ++differing;
    if (name.ends_with(".jsonl")) ++logs;
    else if (name.ends_with(".serm")) ++checkpoints;
    else if (name.ends_with("report.json") || name.ends_with(".csv")) ++reports;
  }
  const bool pass = differing == 0 && first.size() == second.size() && logs == 5 && checkpoints == 5 && reports >= 2;
  return {pass, std::to_string(first.size()) + " files (" + std::to_string(logs) + " logs, " +
                    std::to_string(checkpoints) + " checkpoints, " + std::to_string(reports) + " reports), " +
                    std::to_string(differing) + " differ"};
}

// ---- 12 ----

Outcome lr_schedule() {
  const train::OptimizerConfig cfg;
  const std::vector<std::pair<std::int64_t, double>> want{{0, 1e-4}, {999, 1e-4}, {1000, 9e-5}, {2500, 8.1e-5}};
  bool ok = true;
  std::string got;
  for (const auto& [step, lr] : want) {
    const double v = train::lr_at_step(step, cfg);
    ok = ok && v == lr;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%lld:%.17g", got.empty() ? "" : ", ", static_cast<long long>(step), v);
    got += buf;
  }
  return {ok, got};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "ser_acceptance";
  bool keep = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) work = argv[++i];
    else if (arg == "--keep") keep = true;
    else only.insert(std::stoi(arg));
  }
  fs::create_directories(work);
  EndToEnd e2e;
  e2e.work = work;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient integrity", gradient_integrity},
      {"metric oracle", metric_oracle},
      {"mask formula", mask_formula},
      {"padding invisibility", padding_invisibility},
      {"chopper oracle", chopper_oracle},
      {"balancing", balancing},
      {"protocol hygiene", protocol_hygiene},
      {"end-to-end learnability", [&] { return learnability(e2e); }},
      {"multitask contract", [&] { return multitask_contract(e2e); }},
      {"cross-corpus direction", [&] { return cross_corpus_direction(e2e); }},
      {"determinism", [&] { return determinism(e2e); }},
      {"lr schedule", lr_schedule},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  if (!keep) fs::remove_all(work);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
