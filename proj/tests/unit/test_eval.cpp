#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "nimai/eval/feature_shift.hpp"
#include "nimai/eval/metrics.hpp"
#include "nimai/eval/stats.hpp"
#include "nimai/eval/trials.hpp"
#include "nimai/splits.hpp"
#include "nimai/toygen.hpp"

using namespace nimai;

namespace {

// Rank-based oracle on a different algebraic route: tie-corrected H as the
// variance decomposition (N-1) * SSB / SST over midranks.
double oracle_kw_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  std::vector<double> ranks = midranks(pooled);
  const double n = double(pooled.size());
  double grand = 0.0;
  for (double r : ranks) grand += r;
  grand /= n;
  double ssb = 0.0, sst = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mean += ranks[offset + i];
    mean /= double(g.size());
    ssb += double(g.size()) * (mean - grand) * (mean - grand);
    offset += g.size();
  }
  for (double r : ranks) sst += (r - grand) * (r - grand);
  return (n - 1.0) * ssb / sst;
}

// Chi-squared survival probability by adaptive Simpson quadrature of the
// upper tail, fully independent of the incomplete-gamma implementation.
// Integrating x..infinity avoids both the density singularity at 0 (df < 2)
// and the 1 - cdf cancellation.
double oracle_chi2_pdf(double x, double df) {
  const double k2 = df / 2.0;
  return std::exp((k2 - 1.0) * std::log(x) - x / 2.0 - k2 * std::log(2.0) -
                  std::lgamma(k2));
}

double simpson(double a, double b, double df, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fa = oracle_chi2_pdf(a, df), fb = oracle_chi2_pdf(b, df),
               fm = oracle_chi2_pdf(m, df);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double left = (m - a) / 6.0 *
                      (fa + 4.0 * oracle_chi2_pdf(lm, df) + fm);
  const double right = (b - m) / 6.0 *
                       (fm + 4.0 * oracle_chi2_pdf(rm, df) + fb);
  if (depth <= 0 || std::abs(left + right - whole) < tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(a, m, df, tol / 2.0, depth - 1) +
         simpson(m, b, df, tol / 2.0, depth - 1);
}

double oracle_chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  const double hi = x + 90.0 + 20.0 * df;  // tail mass beyond ~ e^-45
  return simpson(x, hi, df, 1e-13, 48);
}

}  // namespace

TEST_CASE("macro F on hand-computed tallies") {
  SUBCASE("perfect predictions score 1") {
    std::vector<int> labels = {0, 1, 2, 0, 1, 2};
    CHECK(macro_f(labels, labels, {}) == doctest::Approx(1.0));
  }
  SUBCASE("P=(1,0.5), R=(0.5,1) averages to 2/3") {
    std::vector<int> labels = {0, 0, 1};
    std::vector<int> preds = {0, 1, 1};
    CHECK(macro_f(preds, labels, {}) == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("small classes drop under the exclusion rule") {
    std::vector<int> labels, preds;
    for (int i = 0; i < 50; ++i) {
      labels.push_back(0);
      preds.push_back(0);
    }
    for (int i = 0; i < 15; ++i) {
      labels.push_back(1);
      preds.push_back(0);  // class 1 scores 0 when retained
    }
    auto excluded = small_classes(labels, 20);
    CHECK(excluded == std::set<int>{1});
    // Class 0: P = 50/65, R = 1, F = 20/23. Excluding the 15-sample class
    // removes it from the average only; its rows still cost precision.
    CHECK(macro_f(preds, labels, excluded) == doctest::Approx(20.0 / 23.0));
    CHECK(macro_f(preds, labels, {}) == doctest::Approx(10.0 / 23.0));
  }
  SUBCASE("excluding every class is an error") {
    std::vector<int> labels = {0, 1};
    std::vector<int> preds = {0, 1};
    CHECK_THROWS_AS(macro_f(preds, labels, {0, 1}), DataError);
  }
}

TEST_CASE("single-class F") {
  SUBCASE("perfect") {
    std::vector<int> labels = {1, 0, 1};
    CHECK(single_class_f(labels, labels, 1) == doctest::Approx(1.0));
  }
  SUBCASE("TP=1 FP=1 FN=1 gives 0.5") {
    std::vector<int> labels = {1, 0, 1};
    std::vector<int> preds = {1, 1, 0};
    CHECK(single_class_f(preds, labels, 1) == doctest::Approx(0.5));
  }
  SUBCASE("absent class scores 0") {
    std::vector<int> labels = {0, 0};
    std::vector<int> preds = {0, 0};
    CHECK(single_class_f(preds, labels, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("delta_g arithmetic") {
  CHECK(delta_g(0.5, 0.5) == doctest::Approx(0.0));
  CHECK(delta_g(0.5, 0.6) == doctest::Approx(0.2));
  // BGP: F 60.5 -> 80.2 is a 32.56% gain.
  CHECK(delta_g(0.605, 0.802) == doctest::Approx(0.3256).epsilon(1e-3));
  CHECK_THROWS_AS(delta_g(0.0, 0.5), DataError);
  CHECK(delta_g(0.5, 0.4) < 0.0);
}

TEST_CASE("cv_reliability reproduces the published reliability calls") {
  struct Row {
    double mean, stddev;
    bool reliable;
  };
  // Mean/std pairs with their reliability verdicts.
  const Row rows[] = {
      {17.37, 0.28, true},   {32.61, 3.76, true},  {-0.69, 1.21, false},
      {0.51, 6.76, false},   {-20.83, 3.22, true}, {14.23, 0.23, true},
      {0.27, 0.37, false},   {6.89, 6.47, true},   {-0.22, 0.38, false},
      {-10.05, 10.01, true}, {-16.64, 17.09, false}};
  for (const auto& row : rows) {
    CvResult cv = cv_reliability(row.mean, row.stddev);
    CHECK(cv.reliable == row.reliable);
  }
  CHECK(cv_reliability(17.37, 0.28).cv == doctest::Approx(0.0161).epsilon(1e-2));
  CHECK(cv_reliability(0.51, 6.76).cv == doctest::Approx(13.25).epsilon(1e-2));
  CHECK(cv_reliability(-0.69, 1.21).cv == doctest::Approx(1.7536).epsilon(1e-3));
  // Zero mean is unreliable by convention.
  CHECK(!cv_reliability(0.0, 1.0).reliable);
  CHECK(!cv_reliability(0.0, 0.0).reliable);
}

TEST_CASE("marks follow sign and reliability") {
  CHECK(classify_mark(5.0, 1.0) == Mark::kUp);
  CHECK(classify_mark(-5.0, 1.0) == Mark::kDown);
  CHECK(classify_mark(1.0, 2.0) == Mark::kUnreliable);
  CHECK(mark_symbol(Mark::kFailure) == "x");
}

TEST_CASE("kruskal-wallis hand example: H = 7.2, df = 2") {
  std::vector<std::vector<double>> groups = {
      {1, 2, 3}, {101, 102, 103}, {201, 202, 203}};
  KruskalWallisResult res = kruskal_wallis(groups);
  CHECK(res.h == doctest::Approx(7.2).epsilon(1e-12));
  CHECK(res.df == 2);
  // df = 2 has the closed form sf(x) = exp(-x/2).
  CHECK(res.p == doctest::Approx(std::exp(-3.6)).epsilon(1e-9));
  CHECK(res.p < 0.05);
}

TEST_CASE("identical pooled values take the p = 1 convention") {
  std::vector<std::vector<double>> groups = {{5, 5, 5}, {5, 5}, {5, 5, 5, 5}};
  KruskalWallisResult res = kruskal_wallis(groups);
  CHECK(res.p == 1.0);
  CHECK(res.h == 0.0);
}

TEST_CASE("kruskal-wallis matches the independent oracle on random data") {
  RngStream rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.index(4);
    std::vector<std::vector<double>> groups(k);
    bool distinct = false;
    for (auto& g : groups) {
      const std::size_t n = 3 + rng.index(12);
      for (std::size_t i = 0; i < n; ++i)
        g.push_back(double(rng.integer(12)));  // integer grid forces ties
    }
    double first = groups[0][0];
    for (const auto& g : groups)
      for (double v : g)
        if (v != first) distinct = true;
    if (!distinct) continue;
    KruskalWallisResult res = kruskal_wallis(groups);
    CHECK(res.h == doctest::Approx(oracle_kw_h(groups)).epsilon(1e-9));
    CHECK(res.p ==
          doctest::Approx(oracle_chi2_sf(res.h, double(res.df))).epsilon(1e-9));
  }
}

TEST_CASE("kruskal-wallis is invariant under monotone transforms") {
  RngStream rng(405);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> groups(3);
    for (auto& g : groups)
      for (int i = 0; i < 8; ++i) g.push_back(rng.uniform(0.0, 5.0));
    auto transformed = groups;
    for (auto& g : transformed)
      for (auto& v : g) v = std::exp(2.0 * v + 1.0);
    KruskalWallisResult a = kruskal_wallis(groups);
    KruskalWallisResult b = kruskal_wallis(transformed);
    CHECK(a.h == doctest::Approx(b.h).epsilon(1e-12));
  }
}

TEST_CASE("chi-squared tail matches closed forms") {
  CHECK(chi2_sf(7.2, 2) == doctest::Approx(std::exp(-3.6)).epsilon(1e-12));
  CHECK(chi2_sf(3.0, 4) ==
        doctest::Approx((1.0 + 1.5) * std::exp(-1.5)).epsilon(1e-12));
  CHECK(chi2_sf(2.0, 1) ==
        doctest::Approx(std::erfc(std::sqrt(1.0))).epsilon(1e-12));
  CHECK(chi2_sf(0.0, 3) == 1.0);
}

TEST_CASE("dunn test structure and hand z computation") {
  SUBCASE("identical groups among three give pairwise p near 1") {
    std::vector<std::vector<double>> groups = {
        {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {101, 102, 103, 104, 105}};
    DunnResult dunn = dunn_test(groups);
    CHECK(dunn.p(0, 1) == doctest::Approx(1.0));
    CHECK(dunn.p(0, 0) == 1.0);
    CHECK(dunn.p(1, 1) == 1.0);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        CHECK(dunn.p(a, b) == dunn.p(b, a));
    CHECK(dunn.p(0, 2) < 0.05);
    CHECK(dunn.p(1, 2) < 0.05);
  }

  SUBCASE("separated groups: z from mean ranks, all pairs significant") {
    std::vector<std::vector<double>> groups = {
        {1, 2, 3, 4, 5, 6, 7},
        {101, 102, 103, 104, 105, 106, 107},
        {201, 202, 203, 204, 205, 206, 207}};
    // No ties: mean ranks 4, 11, 18; variance base N(N+1)/12 = 38.5;
    // se = sqrt(38.5 * 2/7) = sqrt(11); z12 = -7/sqrt(11).
    DunnResult dunn = dunn_test(groups);
    const double z_expected = -7.0 / std::sqrt(11.0);
    CHECK(dunn.z(0, 1) == doctest::Approx(z_expected).epsilon(1e-12));
    CHECK(dunn.z(0, 2) == doctest::Approx(2.0 * z_expected).epsilon(1e-12));
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b)
        CHECK(dunn.p(a, b) < 0.05);
  }

  SUBCASE("calling dunn on a non-significant omnibus is an error") {
    std::vector<std::vector<double>> groups = {{1, 2, 3}, {1.5, 2.5, 3.5}};
    CHECK_THROWS_AS(dunn_test(groups), ConfigError);
  }

  SUBCASE("bonferroni adjustment scales p upward") {
    std::vector<std::vector<double>> groups = {
        {1, 2, 3, 4, 5}, {11, 12, 13, 14, 15}, {101, 102, 103, 104, 105}};
    DunnResult plain = dunn_test(groups, 0.05, DunnAdjustment::kNone);
    DunnResult adj = dunn_test(groups, 0.05, DunnAdjustment::kBonferroni);
    CHECK(adj.p(0, 1) >= plain.p(0, 1));
    CHECK(adj.p(0, 1) <= 1.0);
  }
}

TEST_CASE("feature shift diagnostics") {
  SUBCASE("mirror pairs around 0.5 have zero skewness") {
    std::vector<double> sym = {0.1, 0.9, 0.3, 0.7, 0.45, 0.55, 0.5};
    CHECK(sample_skewness(sym) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("a single repeated value has zero entropy") {
    std::vector<double> flat(100, 0.37);
    CHECK(histogram_entropy(flat) == 0.0);
  }
  SUBCASE("uniform draws approach ln 20") {
    RngStream rng(9);
    std::vector<double> u(20000);
    for (auto& v : u) v = rng.uniform();
    CHECK(histogram_entropy(u) ==
          doctest::Approx(std::log(20.0)).epsilon(0.01));
  }
  SUBCASE("report aggregates entropy and skew changes") {
    Schema schema = make_toy_schema(2, 2);
    Dataset real = make_gaussian_dataset(
        schema, {{{0.2, 0.2}, 0.03, 100, 0}, {{0.8, 0.8}, 0.03, 10, 1}}, 3);
    Dataset wider = make_gaussian_dataset(
        schema, {{{0.2, 0.2}, 0.03, 100, 0}, {{0.8, 0.8}, 0.03, 10, 1},
                 {{0.5, 0.5}, 0.2, 120, 1}},
        4);
    std::vector<std::size_t> subset = {0, 1};
    FeatureShiftReport report = feature_shift_report(real, wider, subset);
    CHECK(report.rows.size() == 2);
    CHECK(report.entropy_change_pct > 0.0);  // spread increased
    CHECK_THROWS_AS(feature_shift_report(real, wider, {}), DataError);
  }
}

TEST_CASE("builtin classifier fits separable data deterministically") {
  Schema schema = make_toy_schema(4, 2);
  Dataset train = make_gaussian_dataset(
      schema,
      {{{0.2, 0.2, 0.2, 0.2}, 0.05, 60, 0}, {{0.8, 0.8, 0.8, 0.8}, 0.05, 60, 1}},
      12);
  auto factory = builtin_classifier();
  auto clf = factory();
  clf->fit(train, 3);

  Mat probs = clf->predict_proba(train.features);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) sum += probs(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  auto preds = argmax_rows(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    hits += preds[i] == train.labels[i] ? 1 : 0;
  CHECK(double(hits) / double(preds.size()) >= 0.99);

  auto clf2 = factory();
  clf2->fit(train, 3);
  Mat probs2 = clf2->predict_proba(train.features);
  CHECK(probs.a == probs2.a);
}

TEST_CASE("run_trials handles the zero-sample degenerate generator") {
  Schema schema = make_toy_schema(3, 2);
  Dataset data = make_gaussian_dataset(
      schema,
      {{{0.3, 0.3, 0.3}, 0.05, 40, 0}, {{0.7, 0.7, 0.7}, 0.05, 40, 1}}, 8);
  auto [train, test] = stratified_split(data, 0.5, 1);

  TrialsConfig config;
  config.train = &train;
  config.test = &test;
  config.generator = [&](std::uint64_t) { return SyntheticBatch{}; };
  config.classifier = builtin_classifier();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  TrialResult result = run_trials(config, seeds);
  for (double dg : result.delta_g) CHECK(dg == 0.0);
  CHECK(result.mean_dg == 0.0);
  CHECK(!result.reliable);  // CV undefined at zero mean
}

TEST_CASE("run_trials seeds flow into generation and training") {
  Schema schema = make_toy_schema(3, 2);
  Dataset data = make_gaussian_dataset(
      schema,
      {{{0.25, 0.25, 0.25}, 0.07, 120, 0}, {{0.72, 0.72, 0.72}, 0.07, 14, 1}},
      9);
  auto [train, test] = stratified_split(data, 0.6, 2);

  TrialsConfig config;
  config.train = &train;
  config.test = &test;
  // SMOTE balancing as a cheap nontrivial generator.
  config.generator = [&](std::uint64_t seed) {
    auto counts = train.class_counts();
    return smote_generate(train, 1, counts[0] - counts[1], 5, seed);
  };
  config.classifier = builtin_classifier();
  config.metric.focus_class = 1;
  std::vector<std::uint64_t> seeds = {11, 22, 33, 44, 55};
  TrialResult a = run_trials(config, seeds);
  TrialResult b = run_trials(config, seeds);
  CHECK(a.delta_g == b.delta_g);
  // Multithreaded run agrees with serial.
  config.workers = 4;
  TrialResult c = run_trials(config, seeds);
  CHECK(a.delta_g == c.delta_g);
}

#ifdef NIMAI_EXTERNAL_STUB
TEST_CASE("external classifier protocol round trips") {
  namespace fs = std::filesystem;
  Schema schema = make_toy_schema(3, 2);
  Dataset data = make_gaussian_dataset(
      schema,
      {{{0.3, 0.3, 0.3}, 0.05, 30, 0}, {{0.7, 0.7, 0.7}, 0.05, 10, 1}}, 10);

  ExternalClassifierSpec spec;
  spec.command = NIMAI_EXTERNAL_STUB;
  spec.workdir = fs::temp_directory_path() / "nimai_test_external";
  fs::remove_all(spec.workdir);
  auto factory = external_classifier(spec);
  auto clf = factory();
  clf->fit(data, 7);
  Mat probs = clf->predict_proba(data.features);
  CHECK(probs.rows == data.n_samples());
  // The stub answers class frequencies: 30/40 and 10/40.
  for (std::size_t r = 0; r < probs.rows; ++r) {
    CHECK(probs(r, 0) == doctest::Approx(0.75));
    CHECK(probs(r, 1) == doctest::Approx(0.25));
  }
}
#endif
