#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nimai/balance.hpp"
#include "nimai/csv.hpp"
#include "nimai/normalizer.hpp"
#include "nimai/rng.hpp"
#include "nimai/splits.hpp"
#include "nimai/toygen.hpp"

using namespace nimai;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "nimai_test_data_core";
  fs::create_directories(dir);
  return dir / name;
}

Schema two_feature_schema() {
  Schema s;
  s.feature_names = {"x0", "x1"};
  s.label_name = "label";
  s.class_names = {"a", "b"};
  return s;
}

Dataset from_rows(const Schema& schema,
                  const std::vector<std::vector<double>>& rows,
                  const std::vector<int>& labels) {
  Dataset d;
  d.schema = schema;
  d.features = Mat(rows.size(), schema.n_features());
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), d.features.row(r).begin());
  d.labels = labels;
  return d;
}

}  // namespace

TEST_CASE("ingest_csv parses a small file") {
  auto path = temp_file("small.csv");
  {
    std::ofstream out(path);
    out << "x0,x1,label\n1.5,2,a\n3,4.25,b\n-1,0,a\n";
  }
  Dataset d = ingest_csv(path, two_feature_schema());
  CHECK(d.n_samples() == 3);
  CHECK(d.features(0, 0) == doctest::Approx(1.5));
  CHECK(d.features(1, 1) == doctest::Approx(4.25));
  CHECK(d.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("ingest_csv reports unknown class labels with position") {
  auto path = temp_file("bad_label.csv");
  {
    std::ofstream out(path);
    out << "x0,x1,label\n1,2,a\n3,4,z\n";
  }
  CHECK_THROWS_WITH_AS(ingest_csv(path, two_feature_schema()),
                       doctest::Contains("unknown class label 'z'"),
                       DataError);
}

TEST_CASE("ingest_csv reports unparseable cells and missing columns") {
  auto path = temp_file("bad_cell.csv");
  {
    std::ofstream out(path);
    out << "x0,x1,label\n1,oops,a\n";
  }
  CHECK_THROWS_WITH_AS(ingest_csv(path, two_feature_schema()),
                       doctest::Contains("unparseable cell"), DataError);

  auto path2 = temp_file("bad_header.csv");
  {
    std::ofstream out(path2);
    out << "x0,wrong,label\n1,2,a\n";
  }
  CHECK_THROWS_WITH_AS(ingest_csv(path2, two_feature_schema()),
                       doctest::Contains("missing column"), DataError);
}

TEST_CASE("ingest_csv handles a BGP-shaped 180x52 table") {
  Schema schema;
  for (int i = 0; i < 52; ++i)
    schema.feature_names.push_back("f" + std::to_string(i));
  schema.label_name = "label";
  schema.class_names = {"benign", "hijacker"};
  auto path = temp_file("bgp_shape.csv");
  {
    std::ofstream out(path);
    for (int i = 0; i < 52; ++i) out << "f" << i << ',';
    out << "label\n";
    RngStream rng(11);
    for (int r = 0; r < 180; ++r) {
      for (int c = 0; c < 52; ++c) out << format_double(rng.uniform()) << ',';
      out << (r < 163 ? "benign" : "hijacker") << '\n';
    }
  }
  Dataset d = ingest_csv(path, schema);
  CHECK(d.n_samples() == 180);
  CHECK(d.features.cols == 52);
  auto counts = d.class_counts();
  CHECK(counts[0] == 163);
  CHECK(counts[1] == 17);
}

TEST_CASE("csv write/read round trip is exact") {
  Schema schema = two_feature_schema();
  Dataset d = from_rows(schema, {{0.1234567890123, 1.0 / 3.0}, {1e-17, 0.25}},
                        {0, 1});
  auto path = temp_file("roundtrip.csv");
  write_csv(path, d);
  Dataset back = ingest_csv(path, schema);
  CHECK(back.features.a == d.features.a);
  CHECK(back.labels == d.labels);
}

TEST_CASE("fit_normalizer computes per-feature min/max") {
  Schema schema = two_feature_schema();
  Dataset d = from_rows(schema, {{2, 10}, {4, 30}, {6, 20}}, {0, 1, 0});
  Normalizer n = fit_normalizer(d);
  CHECK(n.min[0] == 2);
  CHECK(n.max[0] == 6);
  CHECK(n.min[1] == 10);
  CHECK(n.max[1] == 30);

  Dataset constant = from_rows(schema, {{5, 1}, {5, 2}, {5, 3}}, {0, 1, 0});
  Normalizer nc = fit_normalizer(constant);
  CHECK(nc.min[0] == 5);
  CHECK(nc.max[0] == 5);
}

TEST_CASE("apply_normalizer scales, clamps and zeroes constants") {
  Schema schema = two_feature_schema();
  Dataset train = from_rows(schema, {{2, 5}, {4, 5}, {6, 5}}, {0, 1, 0});
  Normalizer n = fit_normalizer(train);
  Dataset scaled = apply_normalizer(n, train);
  CHECK(scaled.features(0, 0) == doctest::Approx(0.0));
  CHECK(scaled.features(1, 0) == doctest::Approx(0.5));
  CHECK(scaled.features(2, 0) == doctest::Approx(1.0));
  // Constant feature maps to 0.
  for (std::size_t r = 0; r < 3; ++r) CHECK(scaled.features(r, 1) == 0.0);

  // Out-of-range test value clamps.
  Dataset test = from_rows(schema, {{8, 5}, {1, 5}}, {0, 1});
  Dataset scaled_test = apply_normalizer(n, test);
  CHECK(scaled_test.features(0, 0) == 1.0);
  CHECK(scaled_test.features(1, 0) == 0.0);
}

TEST_CASE("normalization round trips within 1e-9 on training data") {
  Schema schema = make_toy_schema(6, 2);
  RngStream rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int r = 0; r < 40; ++r) {
    std::vector<double> row;
    for (int c = 0; c < 6; ++c) row.push_back(rng.uniform(-5.0, 9.0));
    rows.push_back(row);
    labels.push_back(r % 2);
  }
  Dataset d = from_rows(schema, rows, labels);
  Normalizer n = fit_normalizer(d);
  Dataset back = invert_normalizer(n, apply_normalizer(n, d));
  for (std::size_t i = 0; i < d.features.a.size(); ++i)
    CHECK(back.features.a[i] == doctest::Approx(d.features.a[i]).epsilon(1e-9));
}

TEST_CASE("normalizer JSON persistence round trips") {
  Normalizer n;
  n.min = {0.0, -2.5, 1.0};
  n.max = {1.0, 7.5, 1.0};
  auto path = temp_file("normalizer.json");
  save_normalizer(path, n);
  Normalizer back = load_normalizer(path);
  CHECK(back.min == n.min);
  CHECK(back.max == n.max);
}

TEST_CASE("plan_balance tops up to the largest class") {
  BalancePlan p = plan_balance({{0, 100}, {1, 30}});
  CHECK(p.synthetic_counts.at(0) == 0);
  CHECK(p.synthetic_counts.at(1) == 70);

  BalancePlan even = plan_balance({{0, 50}, {1, 50}});
  CHECK(even.total() == 0);

  // BGP: 163 benign / 17 hijackers -> 146 synthetic rows.
  BalancePlan bgp = plan_balance({{0, 163}, {1, 17}});
  CHECK(bgp.synthetic_counts.at(1) == 146);
  CHECK(bgp.synthetic_counts.at(0) == 0);
}

TEST_CASE("plan_balance total equals n_classes*max - total") {
  RngStream rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<int, std::size_t> counts;
    const int k = 2 + int(rng.index(6));
    std::size_t total = 0, largest = 0;
    for (int c = 0; c < k; ++c) {
      std::size_t n = 1 + rng.index(500);
      counts[c] = n;
      total += n;
      largest = std::max(largest, n);
    }
    BalancePlan p = plan_balance(counts);
    CHECK(p.total() == std::size_t(k) * largest - total);
  }
}

TEST_CASE("stratified_split preserves proportions and is deterministic") {
  Schema schema = make_toy_schema(3, 2);
  std::vector<GaussianClusterSpec> clusters = {
      {{0.3, 0.3, 0.3}, 0.05, 50, 0}, {{0.7, 0.7, 0.7}, 0.05, 50, 1}};
  Dataset d = make_gaussian_dataset(schema, clusters, 5);

  auto [a, b] = stratified_split(d, 0.8, 99);
  CHECK(a.n_samples() == 80);
  CHECK(b.n_samples() == 20);
  auto ca = a.class_counts();
  auto cb = b.class_counts();
  CHECK(ca[0] == 40);
  CHECK(ca[1] == 40);
  CHECK(cb[0] == 10);
  CHECK(cb[1] == 10);

  auto [a2, b2] = stratified_split(d, 0.8, 99);
  CHECK(a.features.a == a2.features.a);
  CHECK(b.labels == b2.labels);
}

TEST_CASE("stratified_split per-class rounding on 90/10") {
  Schema schema = make_toy_schema(2, 2);
  std::vector<GaussianClusterSpec> clusters = {{{0.3, 0.3}, 0.05, 90, 0},
                                               {{0.7, 0.7}, 0.05, 10, 1}};
  Dataset d = make_gaussian_dataset(schema, clusters, 6);
  auto [a, b] = stratified_split(d, 0.5, 1);
  auto ca = a.class_counts();
  auto cb = b.class_counts();
  CHECK(ca[0] == 45);
  CHECK(ca[1] == 5);
  CHECK(cb[0] == 45);
  CHECK(cb[1] == 5);
}

TEST_CASE("stratified_split rejects singleton classes") {
  Schema schema = make_toy_schema(2, 2);
  Dataset d = from_rows(schema, {{0.1, 0.1}, {0.2, 0.2}, {0.9, 0.9}},
                        {0, 0, 1});
  CHECK_THROWS_AS(stratified_split(d, 0.5, 1), DataError);
}

TEST_CASE("stratified_subsample caps large sets and keeps proportions") {
  Schema schema = make_toy_schema(2, 2);
  std::vector<GaussianClusterSpec> small = {{{0.3, 0.3}, 0.05, 3000, 0},
                                            {{0.7, 0.7}, 0.05, 2000, 1}};
  Dataset below = make_gaussian_dataset(schema, small, 7);
  Dataset same = stratified_subsample(below, 10000, 1);
  CHECK(same.n_samples() == below.n_samples());
  CHECK(same.features.a == below.features.a);

  std::vector<GaussianClusterSpec> skew = {{{0.3, 0.3}, 0.05, 9000, 0},
                                           {{0.7, 0.7}, 0.05, 1000, 1}};
  Dataset big = make_gaussian_dataset(schema, skew, 8);
  Dataset capped = stratified_subsample(big, 100, 2);
  CHECK(capped.n_samples() == 100);
  auto counts = capped.class_counts();
  CHECK(counts[0] == 90);
  CHECK(counts[1] == 10);
}

TEST_CASE("stratified_subsample matches the 10k cap workflow") {
  Schema schema = make_toy_schema(2, 2);
  std::vector<GaussianClusterSpec> clusters = {{{0.3, 0.3}, 0.08, 42750, 0},
                                               {{0.7, 0.7}, 0.08, 1116, 1}};
  Dataset train = make_gaussian_dataset(schema, clusters, 9);
  CHECK(train.n_samples() == 43866);
  Dataset capped = stratified_subsample(train, 10000, 3);
  CHECK(capped.n_samples() == 10000);
  auto counts = capped.class_counts();
  // Proportions within one sample of 10000 * (42750 or 1116) / 43866.
  CHECK(std::llabs(long(counts[0]) - 9746) <= 1);
  CHECK(std::llabs(long(counts[1]) - 254) <= 1);
}

TEST_CASE("stratified operations are pure functions of data and seed") {
  Schema schema = make_toy_schema(2, 3);
  std::vector<GaussianClusterSpec> clusters = {{{0.2, 0.2}, 0.05, 40, 0},
                                               {{0.5, 0.5}, 0.05, 30, 1},
                                               {{0.8, 0.8}, 0.05, 30, 2}};
  Dataset d = make_gaussian_dataset(schema, clusters, 10);
  Dataset s1 = stratified_subsample(d, 50, 4);
  Dataset s2 = stratified_subsample(d, 50, 4);
  Dataset s3 = stratified_subsample(d, 50, 5);
  CHECK(s1.features.a == s2.features.a);
  CHECK(s1.features.a != s3.features.a);
}

TEST_CASE("denormalized export rounds integer-flagged features") {
  Schema schema = two_feature_schema();
  schema.integer_features = {true, false};
  Dataset train = from_rows(schema, {{0, 0.0}, {10, 1.0}}, {0, 1});
  Normalizer n = fit_normalizer(train);
  Dataset normalized = from_rows(schema, {{0.349, 0.5}}, {0});
  Dataset denorm = invert_normalizer(n, normalized);
  CHECK(denorm.features(0, 0) == 3.0);  // 3.49 rounds to 3
  CHECK(denorm.features(0, 1) == doctest::Approx(0.5));
}
