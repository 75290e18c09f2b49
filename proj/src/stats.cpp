#include "cas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cas::stats {

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Sum of (t^3 - t) over tie groups of a ranked vector's source values.
double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    total += t * t * t - t;
    i = j + 1;
  }
  return total;
}

}  // namespace

TestResult friedman(const BlockedSample& sample) {
  const std::size_t n = sample.blocks();
  const std::size_t k = sample.treatments();
  if (n < 2 || k < 2)
    throw DegenerateSample("friedman needs at least 2 blocks and 2 treatments (n=" +
                           std::to_string(n) + ", k=" + std::to_string(k) + ")");
  for (const auto& row : sample.values) {
    if (row.size() != k)
      throw DegenerateSample("ragged sample: block with " + std::to_string(row.size()) +
                             " cells, expected " + std::to_string(k));
  }

  std::vector<double> column_rank_sum(k, 0.0);
  double ties = 0.0;
  for (const auto& row : sample.values) {
    const auto ranks = mid_ranks(row);
    for (std::size_t j = 0; j < k; ++j) column_rank_sum[j] += ranks[j];
    ties += tie_term(row);
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double correction = 1.0 - ties / (nd * kd * (kd * kd - 1.0));

  TestResult r;
  r.df = static_cast<int>(k) - 1;
  if (correction <= 0.0) {
    // every block fully tied: ranks carry no information
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.method = "friedman (all blocks tied)";
    return r;
  }
  double ssbn = 0.0;
  for (double rj : column_rank_sum) ssbn += rj * rj;
  const double uncorrected = 12.0 * ssbn / (nd * kd * (kd + 1.0)) - 3.0 * nd * (kd + 1.0);
  r.statistic = uncorrected / correction;
  r.p_value = chi_squared_sf(r.statistic, static_cast<int>(k) - 1);
  r.method = "friedman";
  return r;
}

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // ranks of |d| for nonzero d
  std::vector<bool> positive;
  double w_plus = 0.0;
  double w_minus = 0.0;
};

SignedRanks signed_ranks(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error("wilcoxon: samples differ in length (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  if (x.size() < 2) throw Error("wilcoxon: need at least 2 pairs");

  std::vector<double> abs_d;
  std::vector<bool> pos;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;  // Wilcoxon's original zero handling: drop
    abs_d.push_back(std::fabs(d));
    pos.push_back(d > 0.0);
  }
  if (abs_d.empty()) throw AllZeroDifferences("every difference is zero");

  SignedRanks sr;
  sr.ranks = mid_ranks(abs_d);
  sr.positive = std::move(pos);
  for (std::size_t i = 0; i < sr.ranks.size(); ++i) {
    if (sr.positive[i])
      sr.w_plus += sr.ranks[i];
    else
      sr.w_minus += sr.ranks[i];
  }
  return sr;
}

double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  const std::uint64_t total = std::uint64_t{1} << ranks.size();
  std::uint64_t count_le = 0;
  std::uint64_t count_ge = 0;
  // Mid-ranks are multiples of 0.5, so sums compare exactly in doubles.
  for (const auto& [w, count] : exact_signed_rank_distribution(ranks)) {
    if (w <= w_plus) count_le += count;
    if (w >= w_plus) count_ge += count;
  }
  const double tail = static_cast<double>(std::min(count_le, count_ge));
  return std::min(1.0, 2.0 * tail / static_cast<double>(total));
}

double approx_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  const double n = static_cast<double>(ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  variance -= tie_term(ranks) / 48.0;
  if (variance <= 0.0) return 1.0;
  double num = w_plus - mean;
  // continuity correction toward the mean
  if (num > 0.5)
    num -= 0.5;
  else if (num < -0.5)
    num += 0.5;
  else
    num = 0.0;
  const double z = num / std::sqrt(variance);
  return std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
}

constexpr std::size_t kExactLimit = 12;

TestResult signed_rank_result(const SignedRanks& sr, WilcoxonMode mode) {
  const bool exact = mode == WilcoxonMode::Exact ||
                     (mode == WilcoxonMode::Auto && sr.ranks.size() <= kExactLimit);
  TestResult r;
  r.statistic = std::min(sr.w_plus, sr.w_minus);
  if (exact) {
    r.p_value = exact_two_sided_p(sr.ranks, sr.w_plus);
    r.method = "wilcoxon signed-rank (exact)";
  } else {
    r.p_value = approx_two_sided_p(sr.ranks, sr.w_plus);
    r.method = "wilcoxon signed-rank (normal approximation)";
  }
  return r;
}

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                WilcoxonMode mode) {
  return signed_rank_result(signed_ranks(x, y), mode);
}

TestResult wilcoxon_one_sample(std::span<const double> x, double mu0, WilcoxonMode mode) {
  std::vector<double> y(x.size(), mu0);
  return signed_rank_result(signed_ranks(x, y), mode);
}

std::map<double, std::uint64_t> exact_signed_rank_distribution(std::span<const double> ranks) {
  const std::size_t n = ranks.size();
  if (n > 24) throw Error("exact enumeration limited to n <= 24");
  std::map<double, std::uint64_t> dist;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) w += ranks[i];
    }
    ++dist[w];
  }
  return dist;
}

double bonferroni(double p, int m) {
  if (p < 0.0 || p > 1.0) throw Error("bonferroni: p must be in [0,1]");
  if (m < 1) throw Error("bonferroni: m must be >= 1");
  return std::min(1.0, p * static_cast<double>(m));
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace {

// Regularized incomplete gamma functions, series and continued-fraction
// forms (Numerical Recipes style). Accurate to ~1e-14 for the arguments a
// chi-square tail ever sees.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

}  // namespace

double chi_squared_sf(double x, int df) {
  if (df < 1) throw Error("chi_squared_sf: df must be >= 1");
  if (x <= 0.0) return 1.0;
  return gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

}  // namespace cas::stats
