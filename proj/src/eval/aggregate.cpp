#include "ser/eval/aggregate.hpp"

#include <algorithm>

#include "ser/error.hpp"
#include "ser/net/tensor.hpp"

namespace ser::eval {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kMajority: return "majority";
    case Strategy::kMean: return "mean";
    case Strategy::kMax: return "max";
  }
  return "?";
}

Strategy parse_strategy(const std::string& text) {
  for (auto s : kStrategies) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown aggregation strategy '" + text + "'");
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

template <class Derived>
SegmentDecision aggregate_segment(const Eigen::MatrixBase<Derived>& posteriors, Strategy strategy) {
  const Eigen::Index n = posteriors.rows(), e = posteriors.cols();
  if (n == 0 || e == 0) throw ShapeError("cannot aggregate an empty segment");
  SegmentDecision d;
  d.posterior.assign(e, 0.0);
  if (strategy == Strategy::kMajority) {
    std::vector<double> row(e);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < e; ++c) row[c] = static_cast<double>(posteriors(r, c));
      d.posterior[argmax_lowest(row)] += 1.0 / static_cast<double>(n);
    }
    const double top = d.posterior[argmax_lowest(d.posterior)];
    int winners = 0;
    for (double v : d.posterior) winners += v == top;
    if (winners > 1) {
      SegmentDecision m = aggregate_segment(posteriors, Strategy::kMean);
      d.predicted = m.predicted;
    } else {
      d.predicted = argmax_lowest(d.posterior);
    }
    return d;
  }
  for (Eigen::Index c = 0; c < e; ++c) {
    double acc = strategy == Strategy::kMean ? 0.0 : -1.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double v = static_cast<double>(posteriors(r, c));
      if (strategy == Strategy::kMean) {
        acc += v;
      } else {
        acc = std::max(acc, v);
      }
    }
    d.posterior[c] = strategy == Strategy::kMean ? acc / static_cast<double>(n) : acc;
  }
  d.predicted = argmax_lowest(d.posterior);
  return d;
}

Strategy select_strategy(const std::array<std::optional<double>, 3>& val_ua) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < val_ua.size(); ++i) {
    if (val_ua[i] && (!best || *val_ua[i] > *val_ua[*best])) best = i;
  }
  return best ? kStrategies[*best] : Strategy::kMajority;
}

template SegmentDecision aggregate_segment(const Eigen::MatrixBase<net::Mat<float>>&, Strategy);
template SegmentDecision aggregate_segment(const Eigen::MatrixBase<net::Mat<double>>&, Strategy);

}  // namespace ser::eval
