#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/error.hpp"

namespace ser::eval {

class UndefinedRecallError : public DataError {
 public:
  explicit UndefinedRecallError(const std::string& class_name)
      : DataError("recall undefined for class '" + class_name + "' (no true instances)"), class_name_(class_name) {}
  const std::string& class_name() const noexcept { return class_name_; }

 private:
  std::string class_name_;
};

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);

  void add(int true_class, int predicted_class, std::int64_t count = 1);
  void merge(const ConfusionMatrix& other);

  int n_classes() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& class_names() const { return names_; }
  std::int64_t at(int true_class, int predicted_class) const;
  std::int64_t row_sum(int true_class) const;
  std::int64_t total() const;
  std::int64_t trace() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::int64_t> counts_;
};

// diagonal_i / row_sum_i; throws UndefinedRecallError on an empty row.
std::vector<double> recall_per_class(const ConfusionMatrix& cm);
// Unweighted mean of the per-class recalls.
double ua(const ConfusionMatrix& cm);
// Support-weighted recall mean, i.e. trace / N. Throws on an empty matrix.
double wa(const ConfusionMatrix& cm);
// UA, or nullopt when some class has no true instances.
std::optional<double> try_ua(const ConfusionMatrix& cm);

nlohmann::ordered_json confusion_to_json(const ConfusionMatrix& cm);

}  // namespace ser::eval
