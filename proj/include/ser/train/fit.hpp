#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/net/model.hpp"
#include "ser/train/optimizer.hpp"
#include "ser/train/sample.hpp"

namespace ser::train {

struct ValidationResult {
  std::optional<double> ua;  // best over strategies; nullopt when undefined for all
  double wa = 0.0;
  std::string strategy;
};

using ValidationFn = std::function<ValidationResult(net::Model<float>&)>;

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_ua;
  double val_wa = 0.0;
  std::string strategy;
  double lr = 0.0;  // rate used by the epoch's last batch
};

nlohmann::ordered_json epoch_to_json(const EpochLog& e);

struct FitResult {
  std::vector<EpochLog> log;
  std::optional<double> best_val_ua;
  std::string best_strategy;
  int best_epoch = 0;  // 0: initial parameters kept
  std::int64_t steps = 0;
};

// Stacks samples into a batch matrix and matching label/valid vectors.
struct Batch {
  net::Mat<float> x;
  std::vector<int> valid;
  std::vector<int> emotion;
  std::vector<int> gender;
};
Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> order, std::size_t begin,
                 std::size_t end);

// Per epoch: seeded shuffle, mini-batches with clipping and Adam, then the
// validation hook. The parameters of the epoch with the highest validation
// UA (earliest on ties) are restored into `model` before returning. Each
// epoch record is also written as one JSON line to `log_out` when given.
FitResult fit(net::Model<float>& model, std::span<const Sample> train, const OptimizerConfig& cfg,
              const ValidationFn& validate, std::ostream* log_out = nullptr);

}  // namespace ser::train
