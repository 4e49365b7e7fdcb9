#include "ser/eval/metrics.hpp"

namespace ser::eval {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

void ConfusionMatrix::add(int true_class, int predicted_class, std::int64_t count) {
  const int e = n_classes();
  if (true_class < 0 || true_class >= e || predicted_class < 0 || predicted_class >= e) {
    throw ShapeError("class index outside the confusion matrix");
  }
  if (count < 0) throw ShapeError("confusion counts must be nonnegative");
  counts_[static_cast<std::size_t>(true_class) * e + predicted_class] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.names_ != names_) throw ShapeError("cannot merge confusion matrices over different classes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::at(int true_class, int predicted_class) const {
  return counts_.at(static_cast<std::size_t>(true_class) * n_classes() + predicted_class);
}

std::int64_t ConfusionMatrix::row_sum(int true_class) const {
  std::int64_t s = 0;
  for (int j = 0; j < n_classes(); ++j) s += at(true_class, j);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int i = 0; i < n_classes(); ++i) s += at(i, i);
  return s;
}

std::vector<double> recall_per_class(const ConfusionMatrix& cm) {
  std::vector<double> r(cm.n_classes());
  for (int i = 0; i < cm.n_classes(); ++i) {
    const auto n = cm.row_sum(i);
    if (n == 0) throw UndefinedRecallError(cm.class_names()[i]);
    r[i] = static_cast<double>(cm.at(i, i)) / static_cast<double>(n);
  }
  return r;
}

double ua(const ConfusionMatrix& cm) {
  if (cm.n_classes() == 0) throw ShapeError("UA of an empty class set");
  const auto r = recall_per_class(cm);
  double s = 0.0;
  for (double v : r) s += v;
  return s / static_cast<double>(r.size());
}

double wa(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw DataError("WA of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::optional<double> try_ua(const ConfusionMatrix& cm) {
  try {
    return ua(cm);
  } catch (const UndefinedRecallError&) {
    return std::nullopt;
  }
}

nlohmann::ordered_json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["classes"] = cm.class_names();
  auto rows = nlohmann::ordered_json::array();
  for (int i = 0; i < cm.n_classes(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int k = 0; k < cm.n_classes(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["counts"] = rows;
  return j;
}

}  // namespace ser::eval
