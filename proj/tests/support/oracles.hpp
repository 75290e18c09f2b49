#pragma once

// Independent reference implementations used to cross-check the production
// metrics and statistics. Deliberately naive: these stay far away from the
// code paths they verify.

#include <algorithm>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "cas/actionseq.hpp"

namespace cas::testing {

/// Plain recursive definition of edit distance, exponential time.
inline std::size_t levenshtein_recursive(std::span<const actions::ActionInstance> a,
                                         std::span<const actions::ActionInstance> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t same = a.front() == b.front() ? 0 : 1;
  const std::size_t replace = levenshtein_recursive(a.subspan(1), b.subspan(1)) + same;
  const std::size_t del = levenshtein_recursive(a.subspan(1), b) + 1;
  const std::size_t ins = levenshtein_recursive(a, b.subspan(1)) + 1;
  return std::min({replace, del, ins});
}

/// Naive multiset difference: for each occurrence in a, cross off one
/// matching occurrence in b; leftovers on both sides count.
inline std::size_t plan_difference_naive(const actions::ActionSequence& a,
                                         const actions::ActionSequence& b) {
  std::vector<actions::ActionInstance> rest(b.begin(), b.end());
  std::size_t only_in_a = 0;
  for (const auto& x : a) {
    auto it = std::find(rest.begin(), rest.end(), x);
    if (it != rest.end())
      rest.erase(it);
    else
      ++only_in_a;
  }
  return only_in_a + rest.size();
}

/// Friedman chi-square via the textbook rank formula
///   T = (k-1) * sum_j (R_j - n(k+1)/2)^2 / (A - C)
/// with A the sum of squared within-block mid-ranks and C = nk(k+1)^2/4.
/// Algebraically equal to the tie-corrected production formula, reached by
/// a different route.
inline double friedman_rank_formula(const std::vector<std::vector<double>>& values) {
  const std::size_t n = values.size();
  const std::size_t k = values[0].size();
  std::vector<double> column_rank_sum(k, 0.0);
  double a_sum = 0.0;
  for (const auto& row : values) {
    // mid-ranks computed locally, the slow way
    std::vector<double> ranks(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      double less = 0.0, equal = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (row[j] < row[i]) ++less;
        if (row[j] == row[i]) ++equal;
      }
      ranks[i] = less + (equal + 1.0) / 2.0;
    }
    for (std::size_t i = 0; i < k; ++i) {
      column_rank_sum[i] += ranks[i];
      a_sum += ranks[i] * ranks[i];
    }
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double c = nd * kd * (kd + 1.0) * (kd + 1.0) / 4.0;
  double numerator = 0.0;
  for (double rj : column_rank_sum) {
    const double d = rj - nd * (kd + 1.0) / 2.0;
    numerator += d * d;
  }
  return (kd - 1.0) * numerator / (a_sum - c);
}

/// Random action sequences over a tiny alphabet, for metric properties.
class SequenceGen {
public:
  explicit SequenceGen(unsigned seed, std::size_t alphabet = 5, std::size_t max_len = 10)
      : rng_(seed), alphabet_(alphabet), max_len_(max_len) {}

  actions::ActionSequence next() {
    std::uniform_int_distribution<std::size_t> len(0, max_len_);
    std::uniform_int_distribution<std::size_t> sym(0, alphabet_ - 1);
    actions::ActionSequence seq;
    const std::size_t n = len(rng_);
    for (std::size_t i = 0; i < n; ++i) {
      actions::ActionInstance a;
      a.name = "act" + std::to_string(sym(rng_));
      a.args.push_back(actions::entity_arg("e" + std::to_string(sym(rng_) % 3)));
      seq.push_back(std::move(a));
    }
    return seq;
  }

private:
  std::mt19937 rng_;
  std::size_t alphabet_;
  std::size_t max_len_;
};

/// All sequences over an alphabet of `symbols` one-arg actions with length
/// up to `max_len`, for exhaustive oracle comparisons.
inline std::vector<actions::ActionSequence> enumerate_sequences(std::size_t symbols,
                                                                std::size_t max_len) {
  std::vector<actions::ActionSequence> out = {{}};
  std::vector<actions::ActionSequence> frontier = {{}};
  for (std::size_t l = 1; l <= max_len; ++l) {
    std::vector<actions::ActionSequence> next;
    for (const auto& seq : frontier) {
      for (std::size_t s = 0; s < symbols; ++s) {
        actions::ActionSequence longer = seq;
        actions::ActionInstance a;
        a.name = "act" + std::to_string(s);
        longer.push_back(std::move(a));
        next.push_back(longer);
        out.push_back(longer);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace cas::testing
