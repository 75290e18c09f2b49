#pragma once

#include <cstddef>
#include <vector>

#include "cas/actionseq.hpp"
#include "cas/domain.hpp"
#include "cas/errors.hpp"

namespace cas::metrics {

using actions::ActionSequence;
using domain::WorldState;

/// The four human-likeness measures for one (candidate, reference) pair.
struct MetricValues {
  std::size_t plan_difference = 0;
  std::size_t levenshtein = 0;
  double final_state_similarity = 0.0;
  std::size_t length_discrepancy = 0;
};

/// Mean of each measure over several summaries.
struct MetricMeans {
  double plan_difference = 0.0;
  double levenshtein = 0.0;
  double final_state_similarity = 0.0;
  double length_discrepancy = 0.0;
};

/// Order-insensitive distance |A−B| + |B−A| with multiset semantics:
/// repeated actions count once per unmatched occurrence. Symmetric, zero
/// iff the sequences are equal as multisets, bounded by |A|+|B|.
std::size_t plan_difference(const ActionSequence& a, const ActionSequence& b);

/// Unit-cost edit distance (insert/delete/replace) over whole grounded
/// actions as tokens.
std::size_t levenshtein(const ActionSequence& a, const ActionSequence& b);

/// 1 − |F_h △ F_l| / |F_h △ I|, where △ is symmetric set difference over
/// fluents. When F_h equals the initial state (zero denominator) the value
/// is 1 if the candidate also reproduced it exactly, else 0. At most 1;
/// may be negative when the candidate diverges more than the reference
/// progressed.
double final_state_similarity(const WorldState& initial, const WorldState& reference_final,
                              const WorldState& candidate_final);

/// | |A| − |B| |.
std::size_t length_discrepancy(const ActionSequence& a, const ActionSequence& b);

class EmptyInput : public Error {
public:
  explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

/// Field-wise arithmetic mean. Throws EmptyInput on an empty list.
MetricMeans aggregate(const std::vector<MetricValues>& per_summary);

}  // namespace cas::metrics
