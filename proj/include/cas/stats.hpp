#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cas/errors.hpp"

namespace cas::stats {

/// n blocks (rows) by k treatments (columns), no missing cells.
struct BlockedSample {
  std::vector<std::vector<double>> values;

  std::size_t blocks() const { return values.size(); }
  std::size_t treatments() const { return values.empty() ? 0 : values[0].size(); }
};

struct TestResult {
  double statistic = 0.0;
  std::optional<int> df;
  double p_value = 1.0;
  std::string method;
};

class DegenerateSample : public Error {
public:
  explicit DegenerateSample(const std::string& msg) : Error(msg) {}
};

class AllZeroDifferences : public Error {
public:
  explicit AllZeroDifferences(const std::string& msg) : Error(msg) {}
};

/// Ranks with mid-rank tie handling (average of the positions a tie group
/// would occupy), 1-based.
std::vector<double> mid_ranks(std::span<const double> values);

/// Friedman rank test across treatments with blocks as repeated measures.
/// Within-block mid-ranks, chi-square statistic with the standard tie
/// correction, p from the chi-square upper tail with df = k-1. A sample
/// whose blocks are each fully tied carries no rank information and yields
/// statistic 0, p 1. Throws DegenerateSample when n < 2 or k < 2.
TestResult friedman(const BlockedSample& sample);

/// Auto picks exact enumeration for effective n <= 12, the normal
/// approximation above that. Forcing a mode is mainly for cross-checks.
enum class WilcoxonMode { Auto, Exact, Approximate };

/// Two-sided paired Wilcoxon signed-rank test. Zero differences are
/// dropped; |d| is ranked with mid-ranks. Exact p by enumerating all 2^n
/// sign assignments when the effective n <= 12, otherwise a normal
/// approximation with tie and continuity corrections. The statistic is
/// min(W+, W-). Throws AllZeroDifferences when every pair is tied.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                WilcoxonMode mode = WilcoxonMode::Auto);

/// wilcoxon_signed_rank of x against the constant mu0.
TestResult wilcoxon_one_sample(std::span<const double> x, double mu0,
                               WilcoxonMode mode = WilcoxonMode::Auto);

/// min(1, p*m). Requires p in [0,1] and m >= 1.
double bonferroni(double p, int m);

/// Distribution of W+ over all 2^n sign assignments of the given ranks:
/// value of W+ -> number of assignments attaining it. Basis of the exact
/// Wilcoxon p; exposed so tests can check the enumeration integrates to 1.
std::map<double, std::uint64_t> exact_signed_rank_distribution(std::span<const double> ranks);

/// P(Z > z) for a standard normal.
double normal_sf(double z);

/// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_squared_sf(double x, int df);

}  // namespace cas::stats
