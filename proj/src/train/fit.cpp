#include "ser/train/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ser/rng.hpp"

namespace ser::train {

nlohmann::ordered_json epoch_to_json(const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_ua"] = e.val_ua ? nlohmann::ordered_json(*e.val_ua) : nlohmann::ordered_json(nullptr);
  j["val_wa"] = e.val_wa;
  j["strategy"] = e.strategy;
  j["lr"] = e.lr;
  return j;
}

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> order, std::size_t begin,
                 std::size_t end) {
  Batch b;
  const auto& first = *samples[order[begin]].values;
  const Eigen::Index h = first.rows(), w = first.cols();
  b.x.resize(static_cast<Eigen::Index>(end - begin) * h, w);
  for (std::size_t k = begin; k < end; ++k) {
    const Sample& s = samples[order[k]];
    if (s.values->rows() != h || s.values->cols() != w) throw ShapeError("samples in a batch differ in shape");
    b.x.middleRows(static_cast<Eigen::Index>(k - begin) * h, h) = *s.values;
    b.valid.push_back(s.valid);
    b.emotion.push_back(s.emotion);
    b.gender.push_back(s.gender);
  }
  return b;
}

FitResult fit(net::Model<float>& model, std::span<const Sample> train, const OptimizerConfig& cfg,
              const ValidationFn& validate, std::ostream* log_out) {
  cfg.validate();
  FitResult result;
  if (cfg.max_epochs == 0) return result;
  if (train.empty()) throw DataError("empty training set");

  AdamState<float> adam;
  std::vector<net::Mat<float>> best;
  std::vector<std::size_t> order(train.size());
  const bool multitask = model.spec().multitask;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xE0, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    double last_lr = lr_at_step(adam.step, cfg);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const Batch b = make_batch(train, order, begin, end);
      const net::ForwardOptions fo{true, derive_seed(cfg.seed, 0xD0, static_cast<std::uint64_t>(adam.step))};
      const auto loss = model.loss(b.x, b.valid, b.emotion, multitask ? std::span<const int>(b.gender)
                                                                      : std::span<const int>(), fo, true);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(adam.step));
      }
      clip_gradients(model.params(), cfg.clip_lo, cfg.clip_hi);
      last_lr = lr_at_step(adam.step, cfg);
      adam_step(model.params(), adam, cfg);
      loss_sum += loss.total;
      ++batches;
    }

    const ValidationResult v = validate(model);
    EpochLog e{epoch, loss_sum / batches, v.ua, v.wa, v.strategy, last_lr};
    result.log.push_back(e);
    if (log_out) *log_out << epoch_to_json(e).dump() << '\n';

    const double score = v.ua.value_or(-1.0);
    if (result.best_epoch == 0 || score > result.best_val_ua.value_or(-1.0)) {
      result.best_epoch = epoch;
      result.best_val_ua = v.ua;
      result.best_strategy = v.strategy;
      best.clear();
      for (const auto& t : model.params()) best.push_back(t.value);
    }
  }
  std::size_t k = 0;
  for (auto& t : model.params()) t.value = best[k++];
  result.steps = adam.step;
  return result;
}

}  // namespace ser::train
