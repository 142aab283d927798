#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "spi/errors.hpp"

namespace spi {

inline constexpr double kPlusInf = std::numeric_limits<double>::infinity();
inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// A finite multiset of nonconformity scores with sorted access. Order statistics
// are 1-based; rank 0 maps to -inf and rank size()+1 maps to +inf, the sentinel
// conventions used throughout the calibration formulas.
class ScoreVector {
 public:
  ScoreVector() = default;

  explicit ScoreVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!std::isfinite(v)) throw DomainError("ScoreVector: scores must be finite");
    }
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
  }

  long size() const { return static_cast<long>(values_.size()); }
  bool empty() const { return values_.empty(); }

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const { return sorted_; }

  // r-th smallest value, r in [1, size]; r = 0 and r = size+1 are the -inf/+inf
  // sentinels. Anything else is a caller bug.
  double order_stat(long r) const {
    if (r == 0) return kMinusInf;
    if (r == size() + 1) return kPlusInf;
    if (r < 0 || r > size() + 1) throw DomainError("ScoreVector: order statistic rank out of range");
    return sorted_[static_cast<std::size_t>(r - 1)];
  }

  double min() const { return sorted_.empty() ? kPlusInf : sorted_.front(); }
  double max() const { return sorted_.empty() ? kMinusInf : sorted_.back(); }

  bool distinct() const {
    return std::adjacent_find(sorted_.begin(), sorted_.end()) == sorted_.end();
  }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

}  // namespace spi
