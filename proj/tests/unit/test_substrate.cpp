#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "nimai/nn/adam.hpp"
#include "nimai/nn/gradcheck.hpp"
#include "nimai/nn/layers.hpp"
#include "nimai/nn/model_io.hpp"
#include "nimai/rng.hpp"

using namespace nimai;
using namespace nimai::nn;

namespace {

Mat random_mat(std::size_t r, std::size_t c, RngStream& rng) {
  Mat m(r, c);
  for (auto& v : m.a) v = rng.uniform(-1.0, 1.0);
  return m;
}

void zero_segment(ParamStore& ps, Seg seg) {
  auto v = ps.values(seg);
  std::fill(v.begin(), v.end(), 0.0);
}

// Straight-line scalar reference of the pre-norm transformer layer stack,
// written independently of the production code path: explicit loops, no
// shared helpers beyond reading the registered parameter segments.
struct Reference {
  static std::vector<std::vector<double>> dense(
      const ParamStore& ps, const Dense& d,
      const std::vector<std::vector<double>>& x) {
    auto w = ps.values(d.w);
    auto b = ps.values(d.b);
    std::vector<std::vector<double>> y(x.size(),
                                       std::vector<double>(d.out, 0.0));
    for (std::size_t t = 0; t < x.size(); ++t)
      for (std::size_t o = 0; o < d.out; ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < d.in; ++i)
          acc += w[o * d.in + i] * x[t][i];
        y[t][o] = acc;
      }
    return y;
  }

  static std::vector<std::vector<double>> layer_norm(
      const ParamStore& ps, const LayerNorm& ln,
      const std::vector<std::vector<double>>& x) {
    auto g = ps.values(ln.gain);
    auto b = ps.values(ln.bias);
    std::vector<std::vector<double>> y = x;
    for (auto& row : y) {
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= double(row.size());
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= double(row.size());
      for (std::size_t c = 0; c < row.size(); ++c)
        row[c] = g[c] * (row[c] - mean) / std::sqrt(var + 1e-5) + b[c];
    }
    return y;
  }

  static std::vector<std::vector<double>> attention(
      const ParamStore& ps, const MultiHeadAttention& attn,
      const std::vector<std::vector<double>>& x) {
    auto q = dense(ps, attn.q, x);
    auto k = dense(ps, attn.k, x);
    auto v = dense(ps, attn.v, x);
    const std::size_t t_len = x.size();
    std::vector<std::vector<double>> concat(
        t_len, std::vector<double>(attn.dim, 0.0));
    for (std::size_t h = 0; h < attn.heads; ++h) {
      const std::size_t base = h * attn.head_dim;
      for (std::size_t i = 0; i < t_len; ++i) {
        std::vector<double> scores(t_len, 0.0);
        for (std::size_t j = 0; j < t_len; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < attn.head_dim; ++c)
            s += q[i][base + c] * k[j][base + c];
          scores[j] = s / std::sqrt(double(attn.head_dim));
        }
        double mx = scores[0];
        for (double s : scores) mx = std::max(mx, s);
        double denom = 0.0;
        for (auto& s : scores) {
          s = std::exp(s - mx);
          denom += s;
        }
        for (auto& s : scores) s /= denom;
        for (std::size_t c = 0; c < attn.head_dim; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < t_len; ++j)
            acc += scores[j] * v[j][base + c];
          concat[i][base + c] = acc;
        }
      }
    }
    return dense(ps, attn.o, concat);
  }

  static std::vector<std::vector<double>> stack(
      const ParamStore& ps, const TransformerStack& st,
      const std::vector<std::vector<double>>& input) {
    auto h = input;
    for (const auto& layer : st.layers) {
      auto a = layer_norm(ps, layer.ln1, h);
      auto s = attention(ps, layer.attn, a);
      for (std::size_t t = 0; t < h.size(); ++t)
        for (std::size_t c = 0; c < h[t].size(); ++c) h[t][c] += s[t][c];
      auto b = layer_norm(ps, layer.ln2, h);
      auto f1 = dense(ps, layer.ff.fc1, b);
      for (auto& row : f1)
        for (auto& v : row)
          v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
      auto f2 = dense(ps, layer.ff.fc2, f1);
      for (std::size_t t = 0; t < h.size(); ++t)
        for (std::size_t c = 0; c < h[t].size(); ++c) h[t][c] += f2[t][c];
    }
    return h;
  }
};

}  // namespace

TEST_CASE("zero-initialized output projections leave the residual intact") {
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", {2, 2, 8, 8});
  RngStream rng(1);
  stack.init(ps, rng);
  for (auto& layer : stack.layers) {
    zero_segment(ps, layer.attn.o.w);
    zero_segment(ps, layer.attn.o.b);
    zero_segment(ps, layer.ff.fc2.w);
    zero_segment(ps, layer.ff.fc2.b);
  }
  RngStream data_rng(2);
  Mat x = random_mat(5, 8, data_rng);
  TransformerStack::Cache cache;
  Mat y = stack.forward(ps, x, cache);
  for (std::size_t i = 0; i < x.a.size(); ++i)
    CHECK(y.a[i] == doctest::Approx(x.a[i]));
}

TEST_CASE("length-1 attention reduces to the value projection") {
  ParamStore ps;
  MultiHeadAttention attn;
  attn.reg(ps, "attn", 8, 2);
  RngStream rng(3);
  attn.init(ps, rng);
  RngStream data_rng(4);
  Mat x = random_mat(1, 8, data_rng);
  MultiHeadAttention::Cache cache;
  Mat y = attn.forward(ps, x, cache);
  Mat expected = attn.o.forward(ps, attn.v.forward(ps, x));
  for (std::size_t i = 0; i < y.a.size(); ++i)
    CHECK(y.a[i] == doctest::Approx(expected.a[i]));
}

TEST_CASE("stack forward matches the straight-line reference evaluation") {
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", {2, 2, 12, 8});
  RngStream rng(5);
  stack.init(ps, rng);
  RngStream data_rng(6);
  Mat x = random_mat(4, 8, data_rng);

  TransformerStack::Cache cache;
  Mat y = stack.forward(ps, x, cache);

  std::vector<std::vector<double>> xin(4, std::vector<double>(8));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 8; ++c) xin[t][c] = x(t, c);
  auto ref = Reference::stack(ps, stack, xin);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 8; ++c)
      CHECK(y(t, c) == doctest::Approx(ref[t][c]).epsilon(1e-12));
}

TEST_CASE("forward is deterministic and preserves sequence length") {
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", {1, 2, 8, 8});
  RngStream rng(7);
  stack.init(ps, rng);
  RngStream data_rng(8);
  Mat x = random_mat(3, 8, data_rng);
  TransformerStack::Cache c1, c2;
  Mat y1 = stack.forward(ps, x, c1);
  Mat y2 = stack.forward(ps, x, c2);
  CHECK(y1.rows == 3);
  CHECK(y1.a == y2.a);
}

TEST_CASE("constant loss produces zero gradients") {
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", {1, 2, 8, 8});
  RngStream rng(9);
  stack.init(ps, rng);
  RngStream data_rng(10);
  Mat x = random_mat(3, 8, data_rng);
  TransformerStack::Cache cache;
  stack.forward(ps, x, cache);
  Mat dout(3, 8, 0.0);
  ps.zero_grads();
  stack.backward(ps, cache, dout);
  for (double g : ps.flat_grads()) CHECK(g == 0.0);
}

TEST_CASE("backward without forward is an error") {
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", {1, 2, 8, 8});
  TransformerStack::Cache cache;
  Mat dout(3, 8, 0.0);
  CHECK_THROWS_AS(stack.backward(ps, cache, dout), TrainingError);
}

TEST_CASE("dense gradient matches the closed form for a quadratic loss") {
  // loss = |Wx + b - t|^2; dW = 2(Wx+b-t) x^T, db = 2(Wx+b-t).
  ParamStore ps;
  Dense dense;
  dense.reg(ps, "d", 3, 2);
  RngStream rng(11);
  dense.init(ps, rng);
  Mat x(1, 3);
  x.a = {0.4, -0.2, 0.9};
  std::vector<double> target = {0.3, -0.5};

  Mat y = dense.forward(ps, x);
  Mat dout(1, 2);
  for (std::size_t c = 0; c < 2; ++c) dout(0, c) = 2.0 * (y(0, c) - target[c]);
  ps.zero_grads();
  dense.backward(ps, x, dout);

  auto gw = ps.grads(dense.w);
  auto gb = ps.grads(dense.b);
  for (std::size_t o = 0; o < 2; ++o) {
    const double resid = 2.0 * (y(0, o) - target[o]);
    CHECK(gb[o] == doctest::Approx(resid));
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(gw[o * 3 + i] == doctest::Approx(resid * x(0, i)));
  }
}

TEST_CASE("finite differences confirm analytic gradients") {
  RngStream data_rng(13);

  SUBCASE("single dense layer under 1e-4") {
    ParamStore ps;
    Dense dense;
    dense.reg(ps, "d", 4, 3);
    RngStream rng(12);
    dense.init(ps, rng);
    Mat x = random_mat(2, 4, data_rng);
    auto loss = [&]() {
      Mat y = dense.forward(ps, x);
      double acc = 0.0;
      for (double v : y.a) acc += v * v;
      return acc;
    };
    auto grads = [&]() {
      ps.zero_grads();
      Mat y = dense.forward(ps, x);
      Mat dout = y;
      for (auto& v : dout.a) v *= 2.0;
      dense.backward(ps, x, dout);
    };
    CHECK(finite_diff_check(ps, loss, grads, 1e-4) < 1e-4);
  }

  SUBCASE("full encoder stack under 1e-3") {
    ParamStore ps;
    TransformerStack stack;
    stack.reg(ps, "s", {2, 2, 10, 8});
    RngStream rng(14);
    stack.init(ps, rng);
    Mat x = random_mat(4, 8, data_rng);
    auto loss = [&]() {
      TransformerStack::Cache cache;
      Mat y = stack.forward(ps, x, cache);
      double acc = 0.0;
      for (double v : y.a) acc += v * v;
      return acc;
    };
    auto grads = [&]() {
      ps.zero_grads();
      TransformerStack::Cache cache;
      Mat y = stack.forward(ps, x, cache);
      Mat dout = y;
      for (auto& v : dout.a) v *= 2.0;
      stack.backward(ps, cache, dout);
    };
    CHECK(finite_diff_check(ps, loss, grads, 1e-4) < 1e-3);
  }

  SUBCASE("corrupted gradients are detected") {
    ParamStore ps;
    Dense dense;
    dense.reg(ps, "d", 4, 3);
    RngStream rng(15);
    dense.init(ps, rng);
    Mat x = random_mat(2, 4, data_rng);
    auto loss = [&]() {
      Mat y = dense.forward(ps, x);
      double acc = 0.0;
      for (double v : y.a) acc += v * v;
      return acc;
    };
    auto bad_grads = [&]() {
      ps.zero_grads();
      Mat y = dense.forward(ps, x);
      Mat dout = y;
      for (auto& v : dout.a) v *= 2.0;
      dense.backward(ps, x, dout);
      ps.flat_grads()[0] += 0.5;  // inject a known error
    };
    CHECK(finite_diff_check(ps, loss, bad_grads, 1e-4) > 1e-1);
  }
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  AdamState state(4, 1e-3);
  std::vector<double> params = {1.0, -2.0, 0.5, 3.0};
  std::vector<double> saved = params;
  std::vector<double> grads(4, 0.0);
  optimizer_step(state, params, grads);
  CHECK(params == saved);
  CHECK(state.step == 1);
}

TEST_CASE("adam update magnitude approaches the learning rate") {
  AdamState state(1, 1e-3);
  std::vector<double> params = {0.0};
  std::vector<double> grads = {0.37};
  double prev = params[0];
  double step_size = 0.0;
  for (int i = 0; i < 2000; ++i) {
    optimizer_step(state, params, grads);
    step_size = std::abs(params[0] - prev);
    prev = params[0];
  }
  CHECK(step_size == doctest::Approx(1e-3).epsilon(0.01));
}

TEST_CASE("adam rejects non-finite gradients") {
  AdamState state(2, 1e-3);
  std::vector<double> params = {1.0, 2.0};
  std::vector<double> grads = {0.1, std::nan("")};
  CHECK_THROWS_WITH_AS(optimizer_step(state, params, grads),
                       doctest::Contains("non-finite gradient"),
                       TrainingError);
}

TEST_CASE("initialization is a deterministic function of the seed") {
  auto build = [](std::uint64_t seed) {
    ParamStore ps;
    TransformerStack stack;
    stack.reg(ps, "s", {2, 4, 16, 8});
    RngStream rng(seed);
    stack.init(ps, rng);
    return ps.flat_values();
  };
  CHECK(build(42) == build(42));
  CHECK(build(42) != build(43));
}

TEST_CASE("parameter count is a deterministic function of the size fields") {
  TransformerConfig cfg{3, 4, 64, 16};
  ParamStore ps;
  TransformerStack stack;
  stack.reg(ps, "s", cfg);
  CHECK(ps.size() == cfg.param_count());
}

TEST_CASE("model files round trip bit-exactly") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "nimai_test_substrate";
  fs::create_directories(dir);
  fs::path path = dir / "model.bin";

  ModelFile m;
  m.kind = ModelKind::kClassifier;
  m.schema_hash = 0xdeadbeefcafef00dull;
  m.dims = {4, 2, 7};
  m.aux = {1.5, -0.25};
  RngStream rng(21);
  for (int i = 0; i < 257; ++i) m.params.push_back(rng.normal());
  write_model_file(path, m);
  ModelFile back = read_model_file(path);
  CHECK(back.kind == m.kind);
  CHECK(back.schema_hash == m.schema_hash);
  CHECK(back.dims == m.dims);
  CHECK(back.aux == m.aux);
  CHECK(back.params == m.params);

  // Same content, same bytes.
  fs::path path2 = dir / "model2.bin";
  write_model_file(path2, m);
  CHECK(file_checksum(path) == file_checksum(path2));
}
