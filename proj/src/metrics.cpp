#include "cas/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

namespace cas::metrics {

std::size_t plan_difference(const ActionSequence& a, const ActionSequence& b) {
  std::map<actions::ActionInstance, long> counts;
  for (const auto& x : a) ++counts[x];
  for (const auto& x : b) --counts[x];
  std::size_t diff = 0;
  for (const auto& [_, c] : counts) diff += static_cast<std::size_t>(std::labs(c));
  return diff;
}

std::size_t levenshtein(const ActionSequence& a, const ActionSequence& b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  // One row plus a diagonal carry is all the classic DP table needs.
  std::vector<std::size_t> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      std::size_t old = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = old;
    }
  }
  return row[n];
}

double final_state_similarity(const WorldState& initial, const WorldState& reference_final,
                              const WorldState& candidate_final) {
  const std::size_t num = domain::state_difference(reference_final, candidate_final);
  const std::size_t den = domain::state_difference(reference_final, initial);
  if (den == 0) return num == 0 ? 1.0 : 0.0;
  return 1.0 - static_cast<double>(num) / static_cast<double>(den);
}

std::size_t length_discrepancy(const ActionSequence& a, const ActionSequence& b) {
  return a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
}

MetricMeans aggregate(const std::vector<MetricValues>& per_summary) {
  if (per_summary.empty()) throw EmptyInput("aggregate over empty metric list");
  MetricMeans m;
  for (const auto& v : per_summary) {
    m.plan_difference += static_cast<double>(v.plan_difference);
    m.levenshtein += static_cast<double>(v.levenshtein);
    m.final_state_similarity += v.final_state_similarity;
    m.length_discrepancy += static_cast<double>(v.length_discrepancy);
  }
  const double n = static_cast<double>(per_summary.size());
  m.plan_difference /= n;
  m.levenshtein /= n;
  m.final_state_similarity /= n;
  m.length_discrepancy /= n;
  return m;
}

}  // namespace cas::metrics
