#include "ser/eval/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ser/corpus/balance.hpp"
#include "ser/corpus/label_map.hpp"
#include "ser/net/checkpoint.hpp"
#include "ser/rng.hpp"

namespace ser::eval {

using nlohmann::ordered_json;

namespace {

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

[[noreturn]] void rethrow_prefixed(const Error& e, const std::string& prefix) {
  const std::string msg = prefix + e.what();
  switch (e.kind()) {
    case ErrorKind::kUsage:
      throw ConfigError(msg);
    case ErrorKind::kData:
      throw DataError(msg);
    case ErrorKind::kNumerical:
      throw NumericalError(msg);
  }
  throw DataError(msg);
}

std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(p, mode);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

net::Mat<float> rows_of(const net::Mat<float>& m, const std::vector<std::size_t>& rows) {
  net::Mat<float> out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

ordered_json norm_to_json(const dsp::NormStats& n) { return {{"mean", n.mean}, {"stddev", n.stddev}}; }

// Training-side preparation shared by the fold loop and whole-corpus training.
struct PreparedSplit {
  std::vector<std::size_t> train_records;
  dsp::NormStats norm;
  SegmentSet train_set, val_set;
  std::vector<train::Sample> train_samples;
};

PreparedSplit prepare_split(const LabeledCorpus& corpus, const ExperimentConfig& cfg,
                            std::vector<std::size_t> train_records, const std::vector<std::size_t>& val_records,
                            std::uint64_t seed) {
  PreparedSplit p;
  const int n_classes = static_cast<int>(corpus.classes.size());
  if (cfg.neutral_fraction) {
    const auto it = std::find_if(corpus.classes.begin(), corpus.classes.end(), [&](const std::string& c) {
      return corpus::lowercase(c) == corpus::lowercase(cfg.neutral_class);
    });
    if (it == corpus.classes.end()) {
      throw ConfigError("neutral class '" + cfg.neutral_class + "' is not a task class");
    }
    const int neutral = static_cast<int>(it - corpus.classes.begin());
    std::vector<std::string> speakers;
    std::vector<bool> is_neutral;
    for (auto i : train_records) {
      speakers.push_back(corpus.manifest.records[i].speaker_id);
      is_neutral.push_back(corpus.emotion[i] == neutral);
    }
    const auto keep = corpus::downsample_neutral_indices(speakers, is_neutral, *cfg.neutral_fraction,
                                                         derive_seed(seed, 0x4E));
    std::vector<std::size_t> kept;
    for (auto k : keep) kept.push_back(train_records[k]);
    train_records = std::move(kept);
  }
  if (train_records.empty()) throw DataError("no training records");

  std::vector<int> override;
  if (cfg.shuffle_labels) {
    override = corpus.emotion;
    std::vector<std::size_t> idx = train_records;
    idx.insert(idx.end(), val_records.begin(), val_records.end());
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(corpus.emotion[i]);
    std::mt19937_64 rng(derive_seed(seed, 0x5A));
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) override[idx[k]] = labels[k];
  }

  p.norm = norm_stats_for(corpus, train_records);
  p.train_set = build_segments(corpus, train_records, p.norm, cfg.chop, override);
  p.val_set = build_segments(corpus, val_records, p.norm, cfg.chop, override);
  if (cfg.oversample) {
    std::vector<int> labels;
    for (const auto& s : p.train_set.samples) labels.push_back(s.emotion);
    for (auto k : corpus::oversample_balance(labels, n_classes, derive_seed(seed, 0x0A))) {
      p.train_samples.push_back(p.train_set.samples[k]);
    }
  } else {
    p.train_samples = p.train_set.samples;
  }
  p.train_records = std::move(train_records);
  return p;
}

Strategy choose_on_val(Predictor& predictor, const SegmentSet& val, const std::vector<std::string>& classes,
                       std::array<std::optional<double>, 3>* val_ua) {
  const auto p = predictor.predict(val.samples);
  const auto r = evaluate_strategies(p, val, classes);
  if (val_ua) *val_ua = r.ua;
  return select_strategy(r.ua);
}

void write_bundle_json(const std::filesystem::path& dir, const ModelBundle& b) {
  std::filesystem::create_directories(dir);
  open_out(dir / "model.json") << bundle_to_json(b).dump(2) << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
  features.stft.validate();
  chop.validate();
  optimizer.validate();
  if (conv_channels < 1) throw ConfigError("conv channels must be positive");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (neutral_fraction && !(*neutral_fraction > 0.0 && *neutral_fraction <= 1.0)) {
    throw ConfigError("neutral fraction must lie in (0, 1]");
  }
  if (!(val_speaker_fraction > 0.0 && val_speaker_fraction < 1.0)) {
    throw ConfigError("validation speaker fraction must lie in (0, 1)");
  }
}

ordered_json config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["features"] = {{"window_ms", cfg.features.stft.window_ms},
                   {"hop_ms", cfg.features.stft.hop_ms},
                   {"n_mels", cfg.features.n_mels},
                   {"use_deltas", cfg.features.use_deltas},
                   {"delta_window", cfg.features.delta_window}};
  j["chop"] = {{"window_s", cfg.chop.window_s}, {"overlap_s", cfg.chop.overlap_s}, {"frame_hop_s", cfg.chop.frame_hop_s}};
  j["kernel"] = net::to_string(cfg.kernel);
  j["conv_channels"] = cfg.conv_channels;
  j["multitask"] = cfg.multitask;
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"lr0", o.lr0},           {"decay_rate", o.decay_rate}, {"decay_steps", o.decay_steps},
                    {"beta1", o.adam_beta1},  {"beta2", o.adam_beta2},      {"eps", o.adam_eps},
                    {"clip_lo", o.clip_lo},   {"clip_hi", o.clip_hi},       {"batch_size", o.batch_size},
                    {"max_epochs", o.max_epochs}};
  j["folds"] = cfg.folds;
  j["seed"] = cfg.seed;
  j["neutral_fraction"] = opt_json(cfg.neutral_fraction);
  j["neutral_class"] = cfg.neutral_class;
  j["oversample"] = cfg.oversample;
  j["shuffle_labels"] = cfg.shuffle_labels;
  j["val_speaker_fraction"] = cfg.val_speaker_fraction;
  return j;
}

net::ModelSpec model_spec_for(const ExperimentConfig& cfg, int n_emotions) {
  return cfg.kernel == net::ConvMode::kTemporal ? net::default_temporal_spec(n_emotions, cfg.multitask, cfg.conv_channels)
                                                : net::default_2d_spec(n_emotions, cfg.multitask);
}

StrategyResults evaluate_strategies(const Posteriors& p, const SegmentSet& set, const std::vector<std::string>& classes) {
  if (p.emotion.rows() != static_cast<Eigen::Index>(set.samples.size())) {
    throw ShapeError("posterior rows do not match the segment set");
  }
  StrategyResults r;
  for (auto& cm : r.emotion) cm = ConfusionMatrix(classes);
  for (std::size_t seg = 0; seg < set.n_segments(); ++seg) {
    const auto m = rows_of(p.emotion, set.segment_subs[seg]);
    for (std::size_t s = 0; s < kStrategies.size(); ++s) {
      r.emotion[s].add(set.segment_emotion[seg], aggregate_segment(m, kStrategies[s]).predicted);
    }
  }
  for (std::size_t s = 0; s < kStrategies.size(); ++s) {
    r.ua[s] = try_ua(r.emotion[s]);
    r.wa[s] = r.emotion[s].total() > 0 ? wa(r.emotion[s]) : 0.0;
  }
  return r;
}

ConfusionMatrix evaluate_gender(const Posteriors& p, const SegmentSet& set, Strategy strategy) {
  if (p.gender.rows() != static_cast<Eigen::Index>(set.samples.size())) {
    throw ShapeError("gender posterior rows do not match the segment set");
  }
  ConfusionMatrix cm({"male", "female"});
  for (std::size_t seg = 0; seg < set.n_segments(); ++seg) {
    cm.add(set.segment_gender[seg], aggregate_segment(rows_of(p.gender, set.segment_subs[seg]), strategy).predicted);
  }
  return cm;
}

SetReport make_set_report(const Posteriors& p, const SegmentSet& set, const std::vector<std::string>& classes,
                          Strategy strategy) {
  SetReport r;
  r.strategy = strategy;
  r.n_segments = static_cast<int>(set.n_segments());
  r.confusion = ConfusionMatrix(classes);
  for (std::size_t seg = 0; seg < set.n_segments(); ++seg) {
    r.confusion.add(set.segment_emotion[seg],
                    aggregate_segment(rows_of(p.emotion, set.segment_subs[seg]), strategy).predicted);
  }
  r.ua = try_ua(r.confusion);
  if (r.ua) r.recall = recall_per_class(r.confusion);
  r.wa = r.confusion.total() > 0 ? wa(r.confusion) : 0.0;
  if (p.gender.rows() > 0) {
    r.gender_confusion = evaluate_gender(p, set, strategy);
    r.gender_ua = try_ua(*r.gender_confusion);
  }
  return r;
}

Posteriors NetPredictor::predict(std::span<const train::Sample> samples) { return eval::predict(*model_, samples); }

TrainingOutcome NetLearner::train(const TrainingContext& ctx) {
  if (ctx.train.empty()) throw DataError("no training samples");
  const auto& classes = *ctx.classes;
  const auto spec = model_spec_for(cfg_, static_cast<int>(classes.size()));
  const net::Shape2D input{cfg_.chop.window_frames(), static_cast<int>(ctx.train.front().values->cols())};
  auto model = std::make_unique<net::Model<float>>(spec, input, derive_seed(ctx.seed, 0xA0));

  train::OptimizerConfig opt = cfg_.optimizer;
  opt.seed = derive_seed(ctx.seed, 0x0B);
  const SegmentSet& val = *ctx.val;
  const train::ValidationFn validate = [&](net::Model<float>& m) {
    const auto r = evaluate_strategies(predict(m, val.samples), val, classes);
    const Strategy s = select_strategy(r.ua);
    const auto k = static_cast<std::size_t>(s);
    return train::ValidationResult{r.ua[k], r.wa[k], to_string(s)};
  };

  std::optional<std::ofstream> log;
  if (ctx.out_dir) {
    std::filesystem::create_directories(*ctx.out_dir);
    log.emplace(open_out(*ctx.out_dir / "train_log.jsonl"));
  }
  TrainingOutcome out;
  out.fit = train::fit(*model, ctx.train, opt, validate, log ? &*log : nullptr);
  if (ctx.out_dir) net::save_checkpoint(*ctx.out_dir / "model.serm", model->params());
  out.predictor = std::make_unique<NetPredictor>(std::move(model));
  return out;
}

ordered_json bundle_to_json(const ModelBundle& b) {
  ordered_json j;
  j["spec"] = net::spec_to_json(b.spec);
  j["input"] = {{"height", b.input.height}, {"width", b.input.width}};
  j["classes"] = b.classes;
  j["features"] = {{"window_ms", b.features.stft.window_ms},
                   {"hop_ms", b.features.stft.hop_ms},
                   {"n_mels", b.features.n_mels},
                   {"use_deltas", b.features.use_deltas},
                   {"delta_window", b.features.delta_window}};
  j["chop"] = {{"window_s", b.chop.window_s}, {"overlap_s", b.chop.overlap_s}, {"frame_hop_s", b.chop.frame_hop_s}};
  j["strategy"] = to_string(b.strategy);
  j["norm"] = norm_to_json(b.norm);
  return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  try {
    ModelBundle b;
    b.spec = net::spec_from_json(j.at("spec"));
    b.input = {j.at("input").at("height").get<int>(), j.at("input").at("width").get<int>()};
    b.classes = j.at("classes").get<std::vector<std::string>>();
    const auto& f = j.at("features");
    b.features.stft.window_ms = f.at("window_ms").get<double>();
    b.features.stft.hop_ms = f.at("hop_ms").get<double>();
    b.features.n_mels = f.at("n_mels").get<int>();
    b.features.use_deltas = f.at("use_deltas").get<bool>();
    b.features.delta_window = f.at("delta_window").get<int>();
    const auto& c = j.at("chop");
    b.chop.window_s = c.at("window_s").get<double>();
    b.chop.overlap_s = c.at("overlap_s").get<double>();
    b.chop.frame_hop_s = c.at("frame_hop_s").get<double>();
    b.strategy = parse_strategy(j.at("strategy").get<std::string>());
    b.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
    b.norm.stddev = j.at("norm").at("stddev").get<std::vector<double>>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model description: ") + e.what());
  }
}

void save_bundle(const std::filesystem::path& dir, const ModelBundle& b, const net::Model<float>& model) {
  write_bundle_json(dir, b);
  net::save_checkpoint(dir / "model.serm", model.params());
}

std::pair<ModelBundle, std::unique_ptr<net::Model<float>>> load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw DataError("cannot open " + (dir / "model.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + (dir / "model.json").string() + ": " + e.what());
  }
  auto b = bundle_from_json(j);
  auto model = std::make_unique<net::Model<float>>(b.spec, b.input, 0);
  net::load_checkpoint(dir / "model.serm", model->params());
  return {std::move(b), std::move(model)};
}

CrossvalReport crossval(const LabeledCorpus& corpus, const ExperimentConfig& cfg, Learner& learner,
                        const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const auto folds = corpus::speaker_kfold(corpus.manifest, cfg.folds, cfg.seed);
  CrossvalReport report;
  report.classes = corpus.classes;
  report.pooled = ConfusionMatrix(corpus.classes);
  for (const auto& f : folds) {
    try {
      corpus::check_disjoint(f);
      const std::uint64_t fold_seed = derive_seed(cfg.seed, 0xF0, static_cast<std::uint64_t>(f.fold_index));
      auto prep = prepare_split(corpus, cfg, records_of_speakers(corpus, f.train_speakers),
                                records_of_speakers(corpus, f.val_speakers), fold_seed);
      const auto test_set = build_segments(corpus, records_of_speakers(corpus, f.test_speakers), prep.norm, cfg.chop);

      std::optional<std::filesystem::path> fold_dir;
      if (out_dir) fold_dir = *out_dir / ("fold" + std::to_string(f.fold_index));
      TrainingContext ctx{f.fold_index, fold_seed, &corpus.classes, prep.train_samples, &prep.val_set, &prep.norm,
                          fold_dir};
      auto outcome = learner.train(ctx);

      FoldReport fr;
      fr.fold_index = f.fold_index;
      fr.train_speakers = f.train_speakers;
      fr.val_speakers = f.val_speakers;
      fr.test_speakers = f.test_speakers;
      fr.best_epoch = outcome.fit.best_epoch;
      fr.train_subsegments = static_cast<int>(prep.train_samples.size());
      const Strategy strategy = choose_on_val(*outcome.predictor, prep.val_set, corpus.classes, &fr.val_ua);
      fr.test = make_set_report(outcome.predictor->predict(test_set.samples), test_set, corpus.classes, strategy);
      if (fold_dir) {
        if (auto* np = dynamic_cast<NetPredictor*>(outcome.predictor.get())) {
          write_bundle_json(*fold_dir, {np->model().spec(), np->model().input_shape(), corpus.classes, prep.norm,
                                        cfg.features, cfg.chop, strategy});
        }
      }
      report.pooled.merge(fr.test.confusion);
      report.folds.push_back(std::move(fr));
    } catch (const Error& e) {
      rethrow_prefixed(e, "fold " + std::to_string(f.fold_index) + ": ");
    }
  }

  double ua_sum = 0.0, wa_sum = 0.0, g_sum = 0.0;
  int ua_n = 0, g_n = 0;
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& t = report.folds[i].test;
    wa_sum += t.wa;
    if (t.ua) {
      ua_sum += *t.ua;
      ++ua_n;
      if (!report.best_fold || *t.ua > *report.folds[*report.best_fold].test.ua) report.best_fold = static_cast<int>(i);
    }
    if (t.gender_ua) {
      g_sum += *t.gender_ua;
      ++g_n;
    }
  }
  if (ua_n > 0) report.mean_ua = ua_sum / ua_n;
  if (g_n > 0) report.mean_gender_ua = g_sum / g_n;
  report.mean_wa = report.folds.empty() ? 0.0 : wa_sum / static_cast<double>(report.folds.size());
  report.pooled_ua = try_ua(report.pooled);
  report.pooled_wa = report.pooled.total() > 0 ? wa(report.pooled) : 0.0;

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    auto j = crossval_to_json(report);
    j["config"] = config_to_json(cfg);
    open_out(*out_dir / "report.json") << j.dump(2) << '\n';
    write_folds_csv(*out_dir / "folds.csv", report);
  }
  return report;
}

WholeCorpusModel train_on_corpus(const LabeledCorpus& corpus, const ExperimentConfig& cfg, Learner& learner,
                                 const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  std::set<std::string> unique;
  for (const auto& r : corpus.manifest.records) unique.insert(r.speaker_id);
  std::vector<std::string> speakers(unique.begin(), unique.end());
  if (speakers.size() < 2) throw DataError("training on a corpus needs at least 2 speakers");
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x7A));
  std::shuffle(speakers.begin(), speakers.end(), rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.val_speaker_fraction * static_cast<double>(speakers.size()))), 1,
      speakers.size() - 1);
  WholeCorpusModel w;
  w.val_speakers.assign(speakers.begin(), speakers.begin() + static_cast<std::ptrdiff_t>(n_val));
  w.train_speakers.assign(speakers.begin() + static_cast<std::ptrdiff_t>(n_val), speakers.end());
  std::sort(w.val_speakers.begin(), w.val_speakers.end());
  std::sort(w.train_speakers.begin(), w.train_speakers.end());

  const std::uint64_t seed = derive_seed(cfg.seed, 0xC0);
  auto prep = prepare_split(corpus, cfg, records_of_speakers(corpus, w.train_speakers),
                            records_of_speakers(corpus, w.val_speakers), seed);
  TrainingContext ctx{-1, seed, &corpus.classes, prep.train_samples, &prep.val_set, &prep.norm, out_dir};
  auto outcome = learner.train(ctx);
  const Strategy strategy = choose_on_val(*outcome.predictor, prep.val_set, corpus.classes, nullptr);
  w.bundle = {model_spec_for(cfg, static_cast<int>(corpus.classes.size())),
              {cfg.chop.window_frames(), cfg.features.dims()},
              corpus.classes,
              prep.norm,
              cfg.features,
              cfg.chop,
              strategy};
  if (auto* np = dynamic_cast<NetPredictor*>(outcome.predictor.get())) {
    w.bundle.spec = np->model().spec();
    w.bundle.input = np->model().input_shape();
    if (out_dir) write_bundle_json(*out_dir, w.bundle);
  }
  w.predictor = std::move(outcome.predictor);
  w.fit = std::move(outcome.fit);
  return w;
}

SetReport evaluate_on_corpus(Predictor& predictor, const ModelBundle& bundle, const LabeledCorpus& corpus) {
  if (corpus.classes != bundle.classes) throw ConfigError("corpus task classes differ from the model's classes");
  std::vector<std::size_t> all(corpus.manifest.records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (all.empty()) throw DataError("evaluation corpus is empty");
  const auto set = build_segments(corpus, all, bundle.norm, bundle.chop);
  return make_set_report(predictor.predict(set.samples), set, corpus.classes, bundle.strategy);
}

CrossCorpusReport cross_corpus(const LabeledCorpus& train_corpus, const LabeledCorpus& test_corpus,
                               const ExperimentConfig& cfg, Learner& learner,
                               const std::optional<std::filesystem::path>& out_dir) {
  std::set<std::string> ids_a, ids_b, spk_a, spk_b, labels_a, labels_b;
  for (const auto& r : train_corpus.manifest.records) {
    ids_a.insert(r.id);
    spk_a.insert(r.speaker_id);
    labels_a.insert(r.emotion);
  }
  for (const auto& r : test_corpus.manifest.records) {
    ids_b.insert(r.id);
    spk_b.insert(r.speaker_id);
    labels_b.insert(r.emotion);
  }
  if (ids_a == ids_b) throw ConfigError("cross-corpus evaluation needs two different corpora");
  for (const auto& s : spk_a) {
    if (spk_b.count(s)) throw ConfigError("corpora share speaker '" + s + "'");
  }
  if (train_corpus.classes != test_corpus.classes || labels_a != labels_b) {
    throw ConfigError("class sets differ between corpora after label mapping");
  }

  auto w = train_on_corpus(train_corpus, cfg, learner, out_dir);
  CrossCorpusReport r;
  r.classes = train_corpus.classes;
  r.train_speakers = w.train_speakers;
  r.val_speakers = w.val_speakers;
  r.best_epoch = w.fit.best_epoch;
  r.test = evaluate_on_corpus(*w.predictor, w.bundle, test_corpus);
  if (out_dir) {
    auto j = cross_corpus_to_json(r);
    j["config"] = config_to_json(cfg);
    open_out(*out_dir / "report.json") << j.dump(2) << '\n';
  }
  return r;
}

ordered_json set_report_to_json(const SetReport& r) {
  ordered_json j;
  j["ua"] = opt_json(r.ua);
  j["wa"] = r.wa;
  j["strategy"] = to_string(r.strategy);
  j["n_segments"] = r.n_segments;
  j["recall"] = r.recall ? ordered_json(*r.recall) : ordered_json(nullptr);
  j["confusion"] = confusion_to_json(r.confusion);
  j["gender_ua"] = opt_json(r.gender_ua);
  j["gender_confusion"] = r.gender_confusion ? confusion_to_json(*r.gender_confusion) : ordered_json(nullptr);
  return j;
}

ordered_json crossval_to_json(const CrossvalReport& r) {
  ordered_json j;
  j["kind"] = "crossval";
  j["classes"] = r.classes;
  auto folds = ordered_json::array();
  for (const auto& f : r.folds) {
    ordered_json fj;
    fj["fold"] = f.fold_index;
    fj["train_speakers"] = f.train_speakers;
    fj["val_speakers"] = f.val_speakers;
    fj["test_speakers"] = f.test_speakers;
    fj["val_ua"] = {{"majority", opt_json(f.val_ua[0])}, {"mean", opt_json(f.val_ua[1])}, {"max", opt_json(f.val_ua[2])}};
    fj["best_epoch"] = f.best_epoch;
    fj["train_subsegments"] = f.train_subsegments;
    fj["test"] = set_report_to_json(f.test);
    folds.push_back(fj);
  }
  j["folds"] = folds;
  j["mean_ua"] = opt_json(r.mean_ua);
  j["mean_wa"] = r.mean_wa;
  j["best_fold"] = r.best_fold ? ordered_json(*r.best_fold) : ordered_json(nullptr);
  j["best_ua"] = r.best_fold ? opt_json(r.folds[*r.best_fold].test.ua) : ordered_json(nullptr);
  j["best_wa"] = r.best_fold ? ordered_json(r.folds[*r.best_fold].test.wa) : ordered_json(nullptr);
  j["mean_gender_ua"] = opt_json(r.mean_gender_ua);
  ordered_json pooled;
  pooled["ua"] = opt_json(r.pooled_ua);
  pooled["wa"] = r.pooled_wa;
  pooled["confusion"] = confusion_to_json(r.pooled);
  j["pooled"] = pooled;
  return j;
}

ordered_json cross_corpus_to_json(const CrossCorpusReport& r) {
  ordered_json j;
  j["kind"] = "cross_corpus";
  j["classes"] = r.classes;
  j["train_speakers"] = r.train_speakers;
  j["val_speakers"] = r.val_speakers;
  j["best_epoch"] = r.best_epoch;
  j["test"] = set_report_to_json(r.test);
  return j;
}

void write_folds_csv(const std::filesystem::path& path, const CrossvalReport& r) {
  auto out = open_out(path);
  out << "fold,ua,wa,strategy,gender_ua,test_segments,best_epoch\n";
  for (const auto& f : r.folds) {
    out << f.fold_index << ',' << fmt(f.test.ua) << ',' << fmt(f.test.wa) << ',' << to_string(f.test.strategy) << ','
        << fmt(f.test.gender_ua) << ',' << f.test.n_segments << ',' << f.best_epoch << '\n';
  }
  out << "mean," << fmt(r.mean_ua) << ',' << fmt(r.mean_wa) << ",," << fmt(r.mean_gender_ua) << ",,\n";
  if (r.best_fold) {
    const auto& b = r.folds[*r.best_fold];
    out << "best," << fmt(b.test.ua) << ',' << fmt(b.test.wa) << ',' << to_string(b.test.strategy) << ','
        << fmt(b.test.gender_ua) << ',' << b.test.n_segments << ',' << b.best_epoch << '\n';
  }
  out << "pooled," << fmt(r.pooled_ua) << ',' << fmt(r.pooled_wa) << ",,," << r.pooled.total() << ",\n";
}

void append_comparison_row(const std::filesystem::path& path, const std::string& condition,
                           const ExperimentConfig& cfg, const CrossvalReport& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_out(path, std::ios::app);
  if (fresh) {
    out << "condition,classes,kernel,deltas,multitask,mean_ua,mean_wa,best_ua,best_wa,pooled_ua,pooled_wa,"
           "mean_gender_ua\n";
  }
  std::string classes;
  for (const auto& c : r.classes) classes += (classes.empty() ? "" : "|") + c;
  std::optional<double> best_ua, best_wa;
  if (r.best_fold) {
    best_ua = r.folds[*r.best_fold].test.ua;
    best_wa = r.folds[*r.best_fold].test.wa;
  }
  out << condition << ',' << classes << ',' << net::to_string(cfg.kernel) << ',' << (cfg.features.use_deltas ? 1 : 0)
      << ',' << (cfg.multitask ? 1 : 0) << ',' << fmt(r.mean_ua) << ',' << fmt(r.mean_wa) << ',' << fmt(best_ua)
      << ',' << fmt(best_wa) << ',' << fmt(r.pooled_ua) << ',' << fmt(r.pooled_wa) << ','
      << fmt(r.mean_gender_ua) << '\n';
}

}  // namespace ser::eval
