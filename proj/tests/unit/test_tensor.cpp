#include <cmath>
#include <random>

#include <doctest.h>

#include "common/error.hpp"
#include "support/fixtures.hpp"
#include "tensor/grad_check.hpp"
#include "tensor/ops.hpp"
#include "tensor/param_store.hpp"

using namespace inttravel;
using tensor::Tensor;
namespace ops = tensor::ops;

namespace {

// Sum of t ⊙ w for a fixed random w, so every output entry gets a distinct
// upstream gradient. w must not be parallel to t: normalizations have a zero
// derivative along their input.
Tensor probe(const Tensor& t, std::uint64_t seed) {
  std::mt19937_64 rng(0x9e37 + seed);
  return ops::sum(ops::mul(t, fixture::random_tensor(t.rows(), t.cols(), rng)));
}

tensor::GradCheckReport check(tensor::ParameterStore& store, const std::function<Tensor()>& f) {
  return tensor::grad_check(f, store, {1e-5, 16, 3});
}

}  // namespace

TEST_CASE("primitive values") {
  CHECK(ops::silu(Tensor::scalar(0.0)).item() == 0.0);
  const Tensor r = ops::rms_norm_rows(Tensor::from({1, 2}, {3.0, -3.0}));
  CHECK(r.at(0) == doctest::Approx(3.0 / std::sqrt(9.0 + ops::kRmsNormEps)).epsilon(1e-15));
  CHECK(r.at(1) == doctest::Approx(-3.0 / std::sqrt(9.0 + ops::kRmsNormEps)).epsilon(1e-15));
  const Tensor l = ops::logsumexp_rows(Tensor::from({1, 2}, {5.0, 5.0}));
  CHECK(l.item() == doctest::Approx(std::log(std::exp(5.0) + std::exp(5.0))).epsilon(1e-14));
  CHECK(l.item() == doctest::Approx(5.6931471805599453));

  const Tensor ln = ops::layer_norm_rows(Tensor::from({1, 4}, {1, 2, 3, 4}));
  double mean = 0, var = 0;
  for (double v : ln.values()) mean += v / 4;
  for (double v : ln.values()) var += (v - mean) * (v - mean) / 4;
  CHECK(mean == doctest::Approx(0.0));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-5));

  const Tensor s = ops::sigmoid(Tensor::from({1, 3}, {0.0, 800.0, -800.0}));
  CHECK(s.at(0) == 0.5);
  CHECK(s.at(1) == 1.0);
  CHECK(s.at(2) == 0.0);
}

TEST_CASE("broadcasting and shape errors") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = Tensor::from({1, 3}, {10, 20, 30});
  const Tensor col = Tensor::from({2, 1}, {100, 200});
  const Tensor ar = ops::add(a, row);
  CHECK(ar.at(1, 2) == 36.0);
  const Tensor ac = ops::mul(a, col);
  CHECK(ac.at(1, 0) == 800.0);
  CHECK(ops::sub(row, a).at(0, 0) == 9.0);

  const Tensor bad = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  try {
    (void)ops::add(a, bad);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShape);
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[3, 2]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)ops::matmul(a, a), Error);
  CHECK_THROWS_AS((void)ops::slice_cols(a, 2, 2), Error);
}

TEST_CASE("non-finite values are rejected") {
  const Tensor x = Tensor::from({1, 2}, {1.0, 0.0});
  try {
    (void)ops::scale(x, std::numeric_limits<double>::infinity());
    FAIL("expected non-finite rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
  }
  CHECK_THROWS_AS(Tensor::from({1, 1}, {std::nan("")}), Error);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), Error);
}

TEST_CASE("backward basics") {
  // y = x used twice.
  Tensor x = Tensor::from({1, 1}, {3.0}, true);
  tensor::backward(ops::add(x, x));
  CHECK(x.grad()[0] == 2.0);

  // An untracked root path leaves leaves untouched.
  Tensor w = Tensor::from({1, 2}, {1.0, 2.0}, true);
  const Tensor c = Tensor::from({1, 2}, {3.0, 4.0});
  tensor::backward(ops::sum(ops::mul(c, c)));
  CHECK_FALSE(w.has_grad());

  // d/dW sum(W·x) has the outer structure 1 ⊗ x.
  Tensor W = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  const Tensor xv = Tensor::from({3, 1}, {0.5, -1.0, 2.0});
  tensor::backward(ops::sum(ops::matmul(W, xv)));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(W.grad()[i * 3 + j] == xv.at(j));
  }

  CHECK_THROWS_AS(tensor::backward(W), Error);
}

TEST_CASE("every primitive passes a finite-difference check") {
  std::mt19937_64 rng(11);
  tensor::ParameterStore store;
  const Tensor a = store.add("a", {4, 3}, fixture::randn(12, rng));
  const Tensor b = store.add("b", {4, 3}, fixture::randn(12, rng));
  const Tensor row = store.add("row", {1, 3}, fixture::randn(3, rng));
  const Tensor col = store.add("col", {4, 1}, fixture::randn(4, rng));
  const Tensor m = store.add("m", {3, 5}, fixture::randn(15, rng));
  const Tensor table = store.add("table", {6, 3}, fixture::randn(18, rng));

  const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
      {"matmul", [&] { return probe(ops::matmul(a, m), 1); }},
      {"matmul_nt", [&] { return probe(ops::matmul_nt(a, b), 2); }},
      {"add", [&] { return probe(ops::add(ops::add(a, row), col), 3); }},
      {"sub", [&] { return probe(ops::sub(ops::sub(a, row), col), 4); }},
      {"mul", [&] { return probe(ops::mul(ops::mul(a, b), ops::mul(row, col)), 5); }},
      {"scale", [&] { return probe(ops::scale(a, -1.7), 6); }},
      {"add_n", [&] {
         const std::vector<Tensor> xs = {a, b, a};
         return probe(ops::mean_n(xs), 7);
       }},
      {"silu", [&] { return probe(ops::silu(a), 8); }},
      {"sigmoid", [&] { return probe(ops::sigmoid(a), 9); }},
      {"tanh", [&] { return probe(ops::tanh(a), 10); }},
      {"rms_norm", [&] { return probe(ops::rms_norm_rows(a), 11); }},
      {"layer_norm", [&] { return probe(ops::layer_norm_rows(a), 12); }},
      {"concat", [&] {
         const std::vector<Tensor> xs = {a, col, b};
         return probe(ops::concat_cols(xs), 13);
       }},
      {"slice", [&] { return probe(ops::slice_cols(a, 1, 2), 14); }},
      {"mean", [&] { return ops::mean(ops::mul(a, b)); }},
      {"logsumexp", [&] { return probe(ops::logsumexp_rows(a), 15); }},
      {"gather", [&] {
         const std::vector<std::int64_t> ids = {2, -1, 2, 5, 0};
         return probe(ops::gather_rows(table, ids), 16);
       }},
      {"mask", [&] {
         const std::vector<std::uint8_t> keep = {1, 0, 1, 1};
         return probe(ops::mask_rows(a, keep), 17);
       }},
      {"score", [&] {
         const std::vector<std::int64_t> cand = {0, 3, -1, 5, 5, 1, 2, 4, 0, 1, -1, -1};
         return probe(ops::score_candidates(a, table, cand, 3), 18);
       }},
      {"infonce", [&] {
         const std::vector<std::size_t> counts = {3, 0, 2, 1};
         return ops::infonce(ops::matmul_nt(a, b), counts);
       }},
  };
  for (const auto& [label, f] : cases) {
    const std::string name = label;
    CAPTURE(name);
    const auto report = check(store, f);
    CHECK(report.worst <= 1e-6);
  }
}

TEST_CASE("grad_check reference cases") {
  tensor::ParameterStore store;
  const Tensor x = store.add("x", {1, 2}, {1.0, 2.0});
  auto quad = [&] { return ops::sum(ops::mul(x, x)); };
  tensor::backward(quad());
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  store.zero_grad();
  const auto rep = tensor::grad_check(quad, store);
  CHECK(rep.worst < 1e-8);

  tensor::ParameterStore s2;
  const Tensor y = s2.add("y", {1, 3}, {1.0, 2.0, 3.0});
  const auto rep2 = tensor::grad_check([&] { return ops::sum(ops::scale(y, 0.0)); }, s2);
  CHECK(rep2.worst == 0.0);
}

TEST_CASE("fault injection is caught by grad_check") {
  std::mt19937_64 rng(4);
  tensor::ParameterStore store;
  const Tensor a = store.add("a", {3, 3}, fixture::randn(9, rng));
  auto f = [&] { return probe(ops::silu(a), 2); };
  CHECK(tensor::grad_check(f, store).worst < 1e-6);
  tensor::testing::ScopedBackwardFault fault("silu", 1.01);
  CHECK(tensor::grad_check(f, store).worst > 1e-4);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves values unchanged") {
    tensor::ParameterStore store;
    Tensor w = store.add("w", {1, 3}, {0.5, -1.0, 2.0});
    tensor::backward(ops::sum(ops::scale(w, 0.0)));
    tensor::adam_step(store, {});
    CHECK(w.at(0) == 0.5);
    CHECK(w.at(1) == -1.0);
    CHECK(w.at(2) == 2.0);
  }
  SUBCASE("constant gradient drives steps of size lr along −sign(g)") {
    tensor::ParameterStore store;
    Tensor w = store.add("w", {1, 2}, {0.0, 0.0});
    const Tensor g = Tensor::from({1, 2}, {3.0, -0.25});
    // Independent simulation of the recurrence.
    double m = 0, v = 0, expect = 0;
    double last = 0;
    for (int t = 1; t <= 1000; ++t) {
      tensor::backward(ops::sum(ops::mul(w, g)));
      const double before = w.at(0);
      tensor::adam_step(store, {1e-3});
      last = w.at(0) - before;
      m = 0.9 * m + 0.1 * 3.0;
      v = 0.999 * v + 0.001 * 9.0;
      expect -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    }
    CHECK(w.at(0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(last == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(w.at(1) > 0.0);
    CHECK(store.param("w").step == 1000);
  }
  SUBCASE("parameters without gradient are reported") {
    tensor::ParameterStore store;
    store.add("used", {1, 1}, {1.0});
    store.add("unused", {1, 1}, {1.0});
    tensor::backward(ops::sum(store.get("used")));
    const auto skipped = tensor::adam_step(store, {});
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0] == "unused");
  }
  SUBCASE("duplicate names are rejected") {
    tensor::ParameterStore store;
    store.add("w", {1, 1}, {1.0});
    CHECK_THROWS_AS(store.add("w", {1, 1}, {1.0}), Error);
  }
}
