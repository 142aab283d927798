#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "spi/errors.hpp"
#include "spi/score_vector.hpp"

namespace spi {

// Equally sized subsets of the synthetic calibration set, kept in input order.
struct GroupedScores {
  struct Group {
    std::string id;
    ScoreVector scores;
  };
  std::vector<Group> groups;

  long group_size() const { return groups.empty() ? 0 : groups.front().scores.size(); }

  void validate() const {
    if (groups.empty()) throw ConfigError("GroupedScores: no groups");
    const long n = groups.front().scores.size();
    for (const auto& g : groups) {
      if (g.scores.size() != n) {
        throw ConfigError("GroupedScores: group '" + g.id + "' differs in size");
      }
    }
  }
};

// Two-sample Cramer-von Mises statistic on pooled ranks:
//   U = N sum_i (r_(i) - i)^2 + M sum_j (s_(j) - j)^2
//   T = U / (N M (N+M)) - (4MN - 1) / (6 (M+N)).
// Requires all pooled values distinct; ties are the caller's problem to jitter.
inline double cvm_statistic(const ScoreVector& x, const ScoreVector& y) {
  const long n = x.size(), m = y.size();
  if (n < 1 || m < 1) throw DomainError("cvm_statistic: both samples must be nonempty");

  const auto& xs = x.sorted();
  const auto& ys = y.sorted();
  double ux = 0.0, uy = 0.0;
  long i = 0, j = 0;
  while (i < n || j < m) {
    const long rank = i + j + 1;
    const bool take_x = j >= m || (i < n && xs[static_cast<std::size_t>(i)] <=
                                                 ys[static_cast<std::size_t>(j)]);
    if (i < n && j < m && xs[static_cast<std::size_t>(i)] == ys[static_cast<std::size_t>(j)]) {
      throw TieError("cvm_statistic: pooled samples contain ties; jitter the scores first");
    }
    if (take_x) {
      if (i + 1 < n && xs[static_cast<std::size_t>(i)] == xs[static_cast<std::size_t>(i + 1)]) {
        throw TieError("cvm_statistic: pooled samples contain ties; jitter the scores first");
      }
      const double d = static_cast<double>(rank - (i + 1));
      ux += d * d;
      ++i;
    } else {
      if (j + 1 < m && ys[static_cast<std::size_t>(j)] == ys[static_cast<std::size_t>(j + 1)]) {
        throw TieError("cvm_statistic: pooled samples contain ties; jitter the scores first");
      }
      const double d = static_cast<double>(rank - (j + 1));
      uy += d * d;
      ++j;
    }
  }
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  const double u = dn * ux + dm * uy;
  return u / (dn * dm * (dn + dm)) - (4.0 * dm * dn - 1.0) / (6.0 * (dm + dn));
}

// Indices of the k groups nearest to the real scores in Cramer-von Mises
// distance. Distance ties break by ascending group position so repeated runs
// select the same subset. Output is in ascending group position.
inline std::vector<std::size_t> select_subset_indices(const ScoreVector& real,
                                                      const GroupedScores& grouped, long k) {
  grouped.validate();
  const long L = static_cast<long>(grouped.groups.size());
  if (k < 1 || k > L) throw DomainError("select_subset_indices: k outside [1, L]");

  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(grouped.groups.size());
  for (std::size_t l = 0; l < grouped.groups.size(); ++l) {
    ranked.emplace_back(cvm_statistic(real, grouped.groups[l].scores), l);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> selected;
  selected.reserve(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) selected.push_back(ranked[static_cast<std::size_t>(i)].second);
  std::sort(selected.begin(), selected.end());
  return selected;
}

// Pool the selected groups into one synthetic score vector of size n*k.
inline ScoreVector pool_selected(const GroupedScores& grouped,
                                 const std::vector<std::size_t>& selected) {
  std::vector<double> pooled;
  pooled.reserve(selected.size() * static_cast<std::size_t>(grouped.group_size()));
  for (std::size_t l : selected) {
    const auto& vals = grouped.groups[l].scores.values();
    pooled.insert(pooled.end(), vals.begin(), vals.end());
  }
  return ScoreVector(std::move(pooled));
}

}  // namespace spi
