#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <set>

#include "ser/corpus/label_map.hpp"
#include "ser/corpus/stats.hpp"
#include "ser/corpus/synth.hpp"
#include "ser/eval/experiment.hpp"
#include "ser/train/gradcheck.hpp"

namespace ser::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

fs::path default_out(const std::string& command) {
  const char* root = std::getenv("SER_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "ser_output") / command;
}

void write_json(const fs::path& path, const ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct TaskArgs {
  std::string preset = "4";
  std::vector<std::string> overrides;

  void add(CLI::App* app) {
    app->add_option("--classes", preset, "class-task preset: 4, 3, 3-neg, 2, 2-neg, 2-posneg, identity")
        ->capture_default_str();
    app->add_option("--map", overrides, "class override task=src1+src2 (repeatable; target DROP drops sources)");
  }

  corpus::LabelMap resolve(const corpus::CorpusManifest& m) const {
    corpus::LabelMap base;
    if (preset == "identity") {
      std::set<std::string> labels;
      for (const auto& r : m.records) labels.insert(corpus::lowercase(r.emotion));
      base = corpus::LabelMap::identity({labels.begin(), labels.end()});
    } else {
      base = corpus::label_map_preset(preset);
    }
    return overrides.empty() ? base : corpus::apply_overrides(base, overrides);
  }
};

struct FeatureArgs {
  bool deltas = true;
  int n_mels = 40;
  std::string cache;

  void add(CLI::App* app) {
    app->add_flag("--deltas,!--no-deltas", deltas, "append delta and delta-delta features")->capture_default_str();
    app->add_option("--mels", n_mels, "mel bands")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--cache", cache, "feature cache directory (default <manifest dir>/features)");
  }

  dsp::FeatureConfig config() const {
    dsp::FeatureConfig f;
    f.use_deltas = deltas;
    f.n_mels = n_mels;
    return f;
  }

  fs::path cache_dir(const fs::path& manifest) const {
    return cache.empty() ? manifest.parent_path() / "features" : fs::path(cache);
  }
};

struct ExperimentArgs {
  TaskArgs task;
  FeatureArgs features;
  bool multitask = true;
  std::string kernel = "temporal";
  int channels = 64;
  int epochs = 30;
  int batch = 32;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  int folds = 5;
  std::optional<double> neutral_fraction;
  std::string neutral_class = "neutral";
  bool oversample = false;
  bool shuffle_labels = false;
  double val_fraction = 0.2;

  void add(CLI::App* app) {
    task.add(app);
    features.add(app);
    app->add_flag("--multitask,!--no-multitask", multitask, "add the gender head")->capture_default_str();
    app->add_option("--kernel", kernel, "convolution mode")
        ->check(CLI::IsMember({"temporal", "2d"}))
        ->capture_default_str();
    app->add_option("--channels", channels, "channels per temporal conv layer")->capture_default_str();
    app->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();
    app->add_option("--batch", batch, "mini-batch size")->capture_default_str();
    app->add_option("--lr", lr, "initial learning rate")->capture_default_str();
    app->add_option("--seed", seed, "experiment seed")->required();
    app->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    app->add_option("--neutral-fraction", neutral_fraction, "keep this share of training neutral segments");
    app->add_option("--neutral-class", neutral_class, "task class thinned by --neutral-fraction")
        ->capture_default_str();
    app->add_flag("--oversample", oversample, "oversample training classes to equal counts");
    app->add_flag("--shuffle-labels", shuffle_labels, "permute training labels (chance-level control)");
    app->add_option("--val-fraction", val_fraction, "validation speaker share for whole-corpus training")
        ->capture_default_str();
  }

  eval::ExperimentConfig config() const {
    eval::ExperimentConfig c;
    c.features = features.config();
    c.kernel = net::parse_conv_mode(kernel);
    c.conv_channels = channels;
    c.multitask = multitask;
    c.optimizer.max_epochs = epochs;
    c.optimizer.batch_size = batch;
    c.optimizer.lr0 = lr;
    c.seed = seed;
    c.folds = folds;
    c.neutral_fraction = neutral_fraction;
    c.neutral_class = neutral_class;
    c.oversample = oversample;
    c.shuffle_labels = shuffle_labels;
    c.val_speaker_fraction = val_fraction;
    c.validate();
    return c;
  }
};

eval::LabeledCorpus load_corpus(const fs::path& manifest_path, const TaskArgs& task, const FeatureArgs& features) {
  const auto manifest = corpus::load_manifest(manifest_path);
  const auto map = task.resolve(manifest);
  const auto mapped = corpus::apply_label_map(manifest, map);
  if (mapped.records.empty()) throw DataError("no records left after label mapping");
  return eval::load_labeled_corpus(mapped, map.task_classes, features.config(), features.cache_dir(manifest_path));
}

ordered_json error_record(const std::string& command, const std::string& kind, const std::string& message,
                          int code) {
  ordered_json j;
  j["error"] = {{"command", command}, {"kind", kind}, {"message", message}, {"exit_code", code}};
  return j;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kNumerical:
      return kExitNumerical;
  }
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech emotion recognition experiments"};
  app.name("ser");
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  corpus::SynthConfig sc;
  std::string synth_out, shares_preset;
  std::vector<std::string> class_names;
  std::vector<double> shares;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", sc.seed, "generator seed")->capture_default_str();
  synth->add_option("--speakers", sc.n_speakers, "speaker count")->capture_default_str();
  synth->add_option("--per-speaker", sc.segments_per_speaker, "segments per speaker")->capture_default_str();
  synth->add_option("--preset", shares_preset, "class shares preset: balanced, cemo-like, iemocap-like");
  synth->add_option("--class-names", class_names, "class names")->delimiter(',');
  synth->add_option("--shares", shares, "class shares summing to 1")->delimiter(',');
  synth->add_option("--rate", sc.sample_rate_hz, "sample rate (8000 or 16000)")->capture_default_str();
  synth->add_option("--min-duration", sc.min_duration_s, "shortest segment in seconds")->capture_default_str();
  synth->add_option("--max-duration", sc.max_duration_s, "longest segment in seconds")->capture_default_str();
  synth->add_option("--shift", sc.acoustic_shift, "relative shift of class acoustics")->capture_default_str();
  synth->add_option("--prefix", sc.speaker_prefix, "speaker id prefix")->capture_default_str();
  synth->add_option("--agreement", sc.annotation_agreement, "second-annotator agreement (0 disables)")
      ->capture_default_str();

  // featurize
  auto* featurize = app.add_subcommand("featurize", "compute the feature cache");
  std::string feat_manifest;
  FeatureArgs feat_args;
  featurize->add_option("--manifest", feat_manifest, "manifest.jsonl")->required();
  feat_args.add(featurize);

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  std::string stats_manifest, stats_out;
  stats->add_option("--manifest", stats_manifest, "manifest.jsonl")->required();
  stats->add_option("--out", stats_out, "output directory");

  // train
  auto* train = app.add_subcommand("train", "train on a whole corpus with a speaker validation split");
  std::string train_manifest, train_out;
  ExperimentArgs train_args;
  train->add_option("--manifest", train_manifest, "manifest.jsonl")->required();
  train->add_option("--out", train_out, "output directory");
  train_args.add(train);

  // eval
  auto* evaluate = app.add_subcommand("eval", "evaluate a trained model on a corpus");
  std::string eval_manifest, eval_model, eval_out;
  TaskArgs eval_task;
  std::string eval_cache;
  evaluate->add_option("--manifest", eval_manifest, "manifest.jsonl")->required();
  evaluate->add_option("--model", eval_model, "directory holding model.json and model.serm")->required();
  evaluate->add_option("--out", eval_out, "output directory");
  evaluate->add_option("--cache", eval_cache, "feature cache directory (default <manifest dir>/features)");
  eval_task.add(evaluate);

  // crossval
  auto* crossval = app.add_subcommand("crossval", "speaker-independent k-fold cross-validation");
  std::string cv_manifest, cv_out, cv_comparison, cv_condition;
  ExperimentArgs cv_args;
  crossval->add_option("--manifest", cv_manifest, "manifest.jsonl")->required();
  crossval->add_option("--out", cv_out, "output directory");
  crossval->add_option("--comparison", cv_comparison, "append a condition row to this CSV");
  crossval->add_option("--condition", cv_condition, "condition label for the comparison row");
  cv_args.add(crossval);

  // crosscorpus
  auto* crosscorpus = app.add_subcommand("crosscorpus", "train on corpus A, test on corpus B");
  std::string xc_train, xc_test, xc_out, xc_test_cache;
  ExperimentArgs xc_args;
  crosscorpus->add_option("--train-manifest", xc_train, "corpus A manifest")->required();
  crosscorpus->add_option("--test-manifest", xc_test, "corpus B manifest")->required();
  crosscorpus->add_option("--test-cache", xc_test_cache, "feature cache for corpus B (default <manifest dir>/features)");
  crosscorpus->add_option("--out", xc_out, "output directory");
  xc_args.add(crosscorpus);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  std::uint64_t gc_seed = 1;
  std::string gc_kernel = "both", gc_out;
  double gc_tol = 1e-4;
  gradcheck->add_option("--seed", gc_seed, "seed")->capture_default_str();
  gradcheck->add_option("--kernel", gc_kernel, "temporal, 2d or both")
      ->check(CLI::IsMember({"temporal", "2d", "both"}))
      ->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tol, "maximum relative error")->capture_default_str();
  gradcheck->add_option("--out", gc_out, "output directory");

  std::string command = "ser";
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << error_record(command, "usage", e.what(), kExitUsage).dump() << '\n';
    return kExitUsage;
  }

  const auto sub = app.get_subcommands().front();
  command = sub->get_name();
  const auto out_dir = [&](const std::string& given) { return given.empty() ? default_out(command) : fs::path(given); };

  try {
    if (sub == synth) {
      if (!shares_preset.empty()) corpus::apply_shares_preset(sc, shares_preset);
      if (!class_names.empty()) sc.class_names = class_names;
      if (!shares.empty()) sc.class_shares = shares;
      const fs::path dir = out_dir(synth_out);
      const auto m = corpus::generate_synthetic_corpus(sc, dir);
      out << ordered_json{{"manifest", (dir / "manifest.jsonl").string()}, {"records", m.records.size()}}.dump()
          << '\n';
    } else if (sub == featurize) {
      const auto manifest = corpus::load_manifest(feat_manifest);
      const auto cfg = feat_args.config();
      const auto cache = feat_args.cache_dir(feat_manifest);
      int computed = 0, cached = 0;
      auto errors = ordered_json::array();
      for (const auto& r : manifest.records) {
        try {
          bool hit = false;
          eval::featurize_cached(manifest, r, cfg, cache, nullptr, &hit);
          (hit ? cached : computed) += 1;
        } catch (const Error& e) {
          errors.push_back({{"id", r.id}, {"message", e.what()}});
        }
      }
      ordered_json j{{"cache", cache.string()}, {"computed", computed}, {"cached", cached}, {"errors", errors}};
      out << j.dump() << '\n';
      if (!errors.empty()) {
        err << error_record(command, "data", std::to_string(errors.size()) + " file(s) failed", kExitData).dump()
            << '\n';
        return kExitData;
      }
    } else if (sub == stats) {
      const auto s = corpus::corpus_stats(corpus::load_manifest(stats_manifest));
      corpus::write_stats_report(out_dir(stats_out), s);
      out << corpus::stats_to_json(s).dump() << '\n';
    } else if (sub == train) {
      const auto cfg = train_args.config();
      const auto corpus = load_corpus(train_manifest, train_args.task, train_args.features);
      eval::NetLearner learner(cfg);
      const fs::path dir = out_dir(train_out);
      const auto w = eval::train_on_corpus(corpus, cfg, learner, dir);
      ordered_json j;
      j["kind"] = "train";
      j["classes"] = corpus.classes;
      j["train_speakers"] = w.train_speakers;
      j["val_speakers"] = w.val_speakers;
      j["best_epoch"] = w.fit.best_epoch;
      j["best_val_ua"] = w.fit.best_val_ua ? ordered_json(*w.fit.best_val_ua) : ordered_json(nullptr);
      j["strategy"] = eval::to_string(w.bundle.strategy);
      j["config"] = eval::config_to_json(cfg);
      write_json(dir / "train.json", j);
      out << j.dump() << '\n';
    } else if (sub == evaluate) {
      auto [bundle, model] = eval::load_bundle(eval_model);
      FeatureArgs fa;
      fa.deltas = bundle.features.use_deltas;
      fa.n_mels = bundle.features.n_mels;
      fa.cache = eval_cache;
      const auto corpus = load_corpus(eval_manifest, eval_task, fa);
      eval::NetPredictor predictor(std::move(model));
      const auto r = eval::evaluate_on_corpus(predictor, bundle, corpus);
      ordered_json j;
      j["kind"] = "eval";
      j["classes"] = corpus.classes;
      j["test"] = eval::set_report_to_json(r);
      write_json(out_dir(eval_out) / "report.json", j);
      out << j.dump() << '\n';
    } else if (sub == crossval) {
      const auto cfg = cv_args.config();
      const auto corpus = load_corpus(cv_manifest, cv_args.task, cv_args.features);
      eval::NetLearner learner(cfg);
      const fs::path dir = out_dir(cv_out);
      const auto r = eval::crossval(corpus, cfg, learner, dir);
      if (!cv_comparison.empty()) {
        const std::string condition =
            cv_condition.empty() ? std::string(cfg.features.use_deltas ? "deltas" : "no-deltas") + "/" +
                                       (cfg.multitask ? "multitask" : "single-task") + "/" + net::to_string(cfg.kernel)
                                 : cv_condition;
        eval::append_comparison_row(cv_comparison, condition, cfg, r);
      }
      out << ordered_json{{"report", (dir / "report.json").string()},
                          {"mean_ua", r.mean_ua ? ordered_json(*r.mean_ua) : ordered_json(nullptr)},
                          {"pooled_ua", r.pooled_ua ? ordered_json(*r.pooled_ua) : ordered_json(nullptr)}}
                 .dump()
          << '\n';
    } else if (sub == crosscorpus) {
      const auto cfg = xc_args.config();
      const auto a = load_corpus(xc_train, xc_args.task, xc_args.features);
      FeatureArgs fb = xc_args.features;
      fb.cache = xc_test_cache;
      const auto b = load_corpus(xc_test, xc_args.task, fb);
      if (fs::weakly_canonical(xc_train) == fs::weakly_canonical(xc_test)) {
        throw ConfigError("cross-corpus evaluation needs two different corpora");
      }
      eval::NetLearner learner(cfg);
      const fs::path dir = out_dir(xc_out);
      const auto r = eval::cross_corpus(a, b, cfg, learner, dir);
      out << ordered_json{{"report", (dir / "report.json").string()},
                          {"ua", r.test.ua ? ordered_json(*r.test.ua) : ordered_json(nullptr)}}
                 .dump()
          << '\n';
    } else if (sub == gradcheck) {
      std::vector<net::ConvMode> modes;
      if (gc_kernel != "2d") modes.push_back(net::ConvMode::kTemporal);
      if (gc_kernel != "temporal") modes.push_back(net::ConvMode::k2D);
      ordered_json j;
      j["tolerance"] = gc_tol;
      auto runs = ordered_json::array();
      bool passed = true;
      for (auto mode : modes) {
        const auto report = train::gradcheck(train::gradcheck_tiny_spec(mode), gc_seed);
        auto r = train::gradcheck_to_json(report, gc_tol);
        r["kernel"] = net::to_string(mode);
        passed = passed && report.passed(gc_tol);
        runs.push_back(r);
      }
      j["runs"] = runs;
      j["passed"] = passed;
      write_json(out_dir(gc_out) / "gradcheck.json", j);
      out << j.dump() << '\n';
      if (!passed) {
        err << error_record(command, "numerical", "gradient check exceeded tolerance", kExitNumerical).dump()
            << '\n';
        return kExitNumerical;
      }
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_record(command, to_string(e.kind()), e.what(), code).dump() << '\n';
    return code;
  } catch (const fs::filesystem_error& e) {
    err << error_record(command, "data", e.what(), kExitData).dump() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << error_record(command, "data", e.what(), kExitData).dump() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace ser::cli
