#include "nimai/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nimai/common.hpp"

namespace nimai {

namespace {

// Regularized incomplete gamma, series and continued-fraction branches
// (Numerical Recipes style). Relative accuracy far beyond the 1e-9 the
// statistical oracles require.
constexpr int kMaxIter = 500;
constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-15;

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw ConfigError("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

}  // namespace

double chi2_sf(double x, double df) {
  if (df <= 0.0) throw ConfigError("chi2_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a] < pooled[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // Positions i..j share the average of ranks i+1..j+1.
    const double avg = 0.5 * double(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

struct RankLayout {
  std::vector<double> ranks;        // pooled order: group 0 rows, group 1, ...
  std::vector<std::size_t> sizes;
  std::size_t n = 0;
  double tie_sum = 0.0;  // sum over tie groups of t^3 - t
  bool all_identical = false;
};

RankLayout rank_groups(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2)
    throw ConfigError("rank test: need at least 2 groups");
  RankLayout lay;
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("rank test: empty group");
    lay.sizes.push_back(g.size());
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  lay.n = pooled.size();
  lay.ranks = midranks(pooled);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  lay.all_identical = sorted.front() == sorted.back();
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = double(j - i + 1);
    lay.tie_sum += t * t * t - t;
    i = j + 1;
  }
  return lay;
}

}  // namespace

KruskalWallisResult kruskal_wallis(
    const std::vector<std::vector<double>>& groups) {
  RankLayout lay = rank_groups(groups);
  KruskalWallisResult res;
  res.df = groups.size() - 1;
  if (lay.all_identical) {
    res.h = 0.0;
    res.p = 1.0;
    return res;
  }
  const double n = double(lay.n);
  double stat = 0.0;
  std::size_t offset = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < lay.sizes[g]; ++i)
      rank_sum += lay.ranks[offset + i];
    stat += rank_sum * rank_sum / double(lay.sizes[g]);
    offset += lay.sizes[g];
  }
  double h = 12.0 / (n * (n + 1.0)) * stat - 3.0 * (n + 1.0);
  const double correction = 1.0 - lay.tie_sum / (n * n * n - n);
  h /= correction;
  res.h = h;
  res.p = chi2_sf(h, double(res.df));
  return res;
}

DunnResult dunn_test(const std::vector<std::vector<double>>& groups,
                     double alpha, DunnAdjustment adjust) {
  KruskalWallisResult kw = kruskal_wallis(groups);
  if (kw.p >= alpha)
    throw ConfigError(
        "dunn_test: Kruskal-Wallis not significant (p = " +
        std::to_string(kw.p) + "), post-hoc comparison is invalid");

  RankLayout lay = rank_groups(groups);
  const std::size_t k = groups.size();
  const double n = double(lay.n);
  std::vector<double> mean_rank(k, 0.0);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < k; ++g) {
    for (std::size_t i = 0; i < lay.sizes[g]; ++i)
      mean_rank[g] += lay.ranks[offset + i];
    mean_rank[g] /= double(lay.sizes[g]);
    offset += lay.sizes[g];
  }
  const double variance_base =
      n * (n + 1.0) / 12.0 - lay.tie_sum / (12.0 * (n - 1.0));

  DunnResult out;
  out.p = Mat(k, k, 1.0);
  out.z = Mat(k, k, 0.0);
  const double n_pairs = double(k * (k - 1)) / 2.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double se = std::sqrt(
          variance_base * (1.0 / double(lay.sizes[a]) + 1.0 / double(lay.sizes[b])));
      const double z = se == 0.0 ? 0.0 : (mean_rank[a] - mean_rank[b]) / se;
      double p = 2.0 * normal_sf(std::abs(z));
      if (adjust == DunnAdjustment::kBonferroni)
        p = std::min(1.0, p * n_pairs);
      out.z(a, b) = z;
      out.z(b, a) = -z;
      out.p(a, b) = p;
      out.p(b, a) = p;
    }
  }
  return out;
}

}  // namespace nimai
