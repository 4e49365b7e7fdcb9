#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ser::eval {

enum class Strategy { kMajority, kMean, kMax };
inline constexpr std::array<Strategy, 3> kStrategies{Strategy::kMajority, Strategy::kMean, Strategy::kMax};

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct SegmentDecision {
  int predicted = 0;
  std::vector<double> posterior;  // aggregated scores; for majority the vote shares
};

// Rows of `posteriors` are sub-segment class distributions. Majority votes on
// per-row argmax and falls back to the mean strategy on a tied vote. Argmax
// ties go to the lowest class index.
template <class Derived>
SegmentDecision aggregate_segment(const Eigen::MatrixBase<Derived>& posteriors, Strategy strategy);

// Highest validation UA; undefined entries are skipped; ties resolve in the
// order majority, mean, max. Defaults to majority when all are undefined.
Strategy select_strategy(const std::array<std::optional<double>, 3>& val_ua);

int argmax_lowest(const std::vector<double>& v);

}  // namespace ser::eval
