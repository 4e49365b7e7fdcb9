#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/corpus/folds.hpp"
#include "ser/eval/aggregate.hpp"
#include "ser/eval/dataset.hpp"
#include "ser/eval/metrics.hpp"
#include "ser/net/spec.hpp"
#include "ser/train/fit.hpp"

namespace ser::eval {

struct ExperimentConfig {
  dsp::FeatureConfig features;
  seg::ChopConfig chop;
  net::ConvMode kernel = net::ConvMode::kTemporal;
  int conv_channels = 64;  // temporal mode only
  bool multitask = true;
  train::OptimizerConfig optimizer;
  int folds = 5;
  std::uint64_t seed = 1;
  // Training-side neutral thinning; nullopt keeps every neutral segment.
  std::optional<double> neutral_fraction;
  std::string neutral_class = "neutral";
  bool oversample = false;
  // Permutes emotion labels among training and validation segments.
  bool shuffle_labels = false;
  // Share of speakers held out for validation when training on a whole corpus.
  double val_speaker_fraction = 0.2;

  void validate() const;
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

net::ModelSpec model_spec_for(const ExperimentConfig& cfg, int n_emotions);

// Per-strategy segment decisions for one SegmentSet.
struct StrategyResults {
  std::array<ConfusionMatrix, 3> emotion;
  std::array<std::optional<double>, 3> ua;
  std::array<double, 3> wa{};
};

StrategyResults evaluate_strategies(const Posteriors& p, const SegmentSet& set,
                                    const std::vector<std::string>& classes);

// Segment-level gender confusion using `strategy` on the gender posteriors.
ConfusionMatrix evaluate_gender(const Posteriors& p, const SegmentSet& set, Strategy strategy);

// Produces sub-segment posteriors for a trained model.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Posteriors predict(std::span<const train::Sample> samples) = 0;
};

struct TrainingContext {
  int fold_index = 0;  // -1 for whole-corpus training
  std::uint64_t seed = 0;
  const std::vector<std::string>* classes = nullptr;
  std::span<const train::Sample> train;
  const SegmentSet* val = nullptr;
  const dsp::NormStats* norm = nullptr;
  std::optional<std::filesystem::path> out_dir;  // fold artifacts go here when set
};

struct TrainingOutcome {
  std::unique_ptr<Predictor> predictor;
  train::FitResult fit;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual TrainingOutcome train(const TrainingContext& ctx) = 0;
};

// CNN/BiLSTM learner driven by train::fit. Writes train_log.jsonl,
// model.serm and model.json into the context's output directory.
class NetLearner : public Learner {
 public:
  explicit NetLearner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}
  TrainingOutcome train(const TrainingContext& ctx) override;

 private:
  ExperimentConfig cfg_;
};

// Everything needed to rebuild a trained network for evaluation.
struct ModelBundle {
  net::ModelSpec spec;
  net::Shape2D input;
  std::vector<std::string> classes;
  dsp::NormStats norm;
  dsp::FeatureConfig features;
  seg::ChopConfig chop;
  Strategy strategy = Strategy::kMajority;
};

nlohmann::ordered_json bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const nlohmann::json& j);
void save_bundle(const std::filesystem::path& dir, const ModelBundle& b, const net::Model<float>& model);
// Reads model.json and model.serm from `dir`.
std::pair<ModelBundle, std::unique_ptr<net::Model<float>>> load_bundle(const std::filesystem::path& dir);

class NetPredictor : public Predictor {
 public:
  explicit NetPredictor(std::unique_ptr<net::Model<float>> model) : model_(std::move(model)) {}
  Posteriors predict(std::span<const train::Sample> samples) override;
  net::Model<float>& model() { return *model_; }

 private:
  std::unique_ptr<net::Model<float>> model_;
};

struct SetReport {
  ConfusionMatrix confusion;
  std::optional<std::vector<double>> recall;  // nullopt when a class is absent
  std::optional<double> ua;
  double wa = 0.0;
  Strategy strategy = Strategy::kMajority;
  std::optional<ConfusionMatrix> gender_confusion;
  std::optional<double> gender_ua;
  int n_segments = 0;
};

SetReport make_set_report(const Posteriors& p, const SegmentSet& set, const std::vector<std::string>& classes,
                          Strategy strategy);

struct FoldReport {
  int fold_index = 0;
  std::vector<std::string> train_speakers, val_speakers, test_speakers;
  std::array<std::optional<double>, 3> val_ua;
  int best_epoch = 0;
  int train_subsegments = 0;
  SetReport test;
};

struct CrossvalReport {
  std::vector<std::string> classes;
  std::vector<FoldReport> folds;
  std::optional<double> mean_ua;  // over folds with a defined UA
  double mean_wa = 0.0;
  std::optional<int> best_fold;  // highest test UA, lowest index on ties
  ConfusionMatrix pooled;
  std::optional<double> pooled_ua;
  double pooled_wa = 0.0;
  std::optional<double> mean_gender_ua;
};

// Speaker-independent k-fold protocol. Any fold failure is rethrown with the
// fold index prefixed.
CrossvalReport crossval(const LabeledCorpus& corpus, const ExperimentConfig& cfg, Learner& learner,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct WholeCorpusModel {
  std::unique_ptr<Predictor> predictor;
  ModelBundle bundle;
  train::FitResult fit;
  std::vector<std::string> train_speakers, val_speakers;
};

// Trains on every speaker of `corpus`, holding out a speaker subset for
// validation and strategy selection.
WholeCorpusModel train_on_corpus(const LabeledCorpus& corpus, const ExperimentConfig& cfg, Learner& learner,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Normalizes with the bundle's statistics and scores every record of `corpus`.
SetReport evaluate_on_corpus(Predictor& predictor, const ModelBundle& bundle, const LabeledCorpus& corpus);

struct CrossCorpusReport {
  std::vector<std::string> classes;
  std::vector<std::string> train_speakers, val_speakers;
  int best_epoch = 0;
  SetReport test;
};

// Train on all of `train_corpus`, test on all of `test_corpus`. Rejects
// identical or overlapping corpora and mismatched class sets.
CrossCorpusReport cross_corpus(const LabeledCorpus& train_corpus, const LabeledCorpus& test_corpus,
                               const ExperimentConfig& cfg, Learner& learner,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt);

nlohmann::ordered_json set_report_to_json(const SetReport& r);
nlohmann::ordered_json crossval_to_json(const CrossvalReport& r);
nlohmann::ordered_json cross_corpus_to_json(const CrossCorpusReport& r);

// One row per fold plus "mean", "best" and "pooled" rows.
void write_folds_csv(const std::filesystem::path& path, const CrossvalReport& r);

// Appends a condition row (creating the header when the file is new).
void append_comparison_row(const std::filesystem::path& path, const std::string& condition,
                           const ExperimentConfig& cfg, const CrossvalReport& r);

}  // namespace ser::eval
