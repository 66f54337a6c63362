// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "demon/optimizers.hpp"
#include "demon/problems.hpp"
#include "demon/verify.hpp"
#include "testing.hpp"

using namespace demon;
using demon::testing::Draw;
using demon::testing::TempDir;
using demon::testing::rel_diff;

namespace {

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central difference of one coordinate, computed here rather than by the
// library's checker.
double fd(const Problem& p, Vector theta, std::size_t i, double h) {
  const double x = theta[i];
  theta[i] = x + h;
  const double up = p.eval(theta);
  theta[i] = x - h;
  const double down = p.eval(theta);
  return (up - down) / (2.0 * h);
}

double fd_rel_error(const Problem& p, const Vector& theta) {
  const Vector g = p.grad(theta);
  Vector num(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) num[i] = fd(p, theta, i, 1e-6 * std::max(1.0, std::abs(theta[i])));
  Vector diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - num[i];
  return norm(diff) / std::max(norm(g), 1e-12);
}

}  // namespace

TEST_SUITE("quadratic") {
  TEST_CASE("values and gradient") {
    const Problem p = make_quadratic(1.0, 1.0, 1);
    CHECK(p.eval(Vector{3.0}) == 4.5);
    CHECK(p.grad(Vector{3.0}) == Vector{3.0});
    CHECK(p.grad(Vector{0.0}) == Vector{0.0});
    CHECK(p.lipschitz_L == 1.0);
    CHECK(p.optimum_value == 0.0);
  }

  TEST_CASE("eigenvalues are evenly spaced over [mu, L]") {
    const Problem p = make_quadratic(1.0, 0.1, 4);
    const Vector g = p.grad(Vector(4, 1.0));
    const Vector expected = {0.1, 0.4, 0.7, 1.0};
    for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  }

  TEST_CASE("mu above L is rejected") { CHECK_THROWS(make_quadratic(1.0, 2.0, 3)); }
}

TEST_SUITE("rosenbrock") {
  TEST_CASE("optimum and a hand value") {
    const Problem p = make_rosenbrock(6);
    CHECK(p.eval(Vector(6, 1.0)) == 0.0);
    CHECK(norm(p.grad(Vector(6, 1.0))) == 0.0);
    CHECK(make_rosenbrock(2).eval(Vector{0.0, 0.0}) == 1.0);
    CHECK(make_rosenbrock(2).eval(Vector{-1.0, 2.0}) == doctest::Approx(4.0 + 100.0));
  }

  TEST_CASE("odd dimension rejected") { CHECK_THROWS(make_rosenbrock(3)); }
}

TEST_SUITE("logistic") {
  TEST_CASE("origin: ln 2 and the mean-label gradient") {
    const Dataset data = make_synthetic_data(DataKind::TwoGaussians, 40, 3, 0.7, 1);
    const Problem p = make_logistic(data, 0.0);
    CHECK(p.eval(Vector(3, 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const Vector g = p.grad(Vector(3, 0.0));
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < data.n; ++i) s += (2.0 * data.labels[i] - 1.0) * data.row(i)[k];
      CHECK(g[k] == doctest::Approx(-s / static_cast<double>(data.n) / 2.0).epsilon(1e-12));
    }
  }

  TEST_CASE("separable data: loss falls monotonically along the separator") {
    Dataset data;
    data.n = 2;
    data.d = 2;
    data.features = {1.0, 0.5, -1.0, -0.5};
    data.labels = {1.0, 0.0};
    const Problem p = make_logistic(data, 0.0);
    double prev = p.eval(Vector{0.0, 0.0});
    for (double c = 0.5; c < 20; c += 0.5) {
      const double v = p.eval(Vector{c, 0.0});
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("smoothness constant and l2 term") {
    const Dataset data = make_synthetic_data(DataKind::TwoGaussians, 30, 2, 0.5, 2);
    double max_sq = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
      const auto r = data.row(i);
      max_sq = std::max(max_sq, r[0] * r[0] + r[1] * r[1]);
    }
    const Problem p = make_logistic(data, 0.3);
    CHECK(*p.lipschitz_L == doctest::Approx(max_sq / 4.0 + 0.3));
    const Vector theta = {0.4, -1.1};
    CHECK(p.eval(theta) - make_logistic(data, 0.0).eval(theta) ==
          doctest::Approx(0.15 * (0.16 + 1.21)).epsilon(1e-12));
  }

  TEST_CASE("non-binary labels rejected") {
    const Dataset blobs = make_synthetic_data(DataKind::MulticlassBlobs, 30, 2, 0.1, 3);
    CHECK_THROWS(make_logistic(blobs, 0.0));
  }

  TEST_CASE("converged linear model on two moons lands in the 70-95% accuracy band") {
    for (std::uint64_t seed : {0, 1, 2}) {
      const Dataset data = make_synthetic_data(DataKind::TwoMoons, 200, 2, 0.1, seed);
      const Problem p = make_logistic(data, 0.0);
      OptimizerState s(Vector(2, 0.0));
      StepHyper h;
      h.eta = 1.0;
      for (int t = 0; t < 20000; ++t) s = sgd_step(std::move(s), p.grad(s.theta), h);
      CHECK(norm(p.grad(s.theta)) < 1e-6);
      const double acc = logistic_accuracy(data, s.theta);
      CHECK(acc >= 0.70);
      CHECK(acc <= 0.95);
    }
  }

  TEST_CASE("gradient matches finite differences") {
    const Problem p = make_logistic(make_synthetic_data(DataKind::TwoMoons, 50, 2, 0.2, 4), 0.01);
    Draw draw(20);
    for (int i = 0; i < 10; ++i) CHECK(fd_rel_error(p, draw.vector(2)) < 1e-6);
  }
}

TEST_SUITE("mlp") {
  const Dataset moons = make_synthetic_data(DataKind::TwoMoons, 60, 2, 0.1, 5);
  const Dataset blobs = make_synthetic_data(DataKind::MulticlassBlobs, 60, 2, 0.2, 6);

  TEST_CASE("all-zero parameters give ln(num_classes)") {
    const Problem p2 = make_mlp({2, 8, 2}, Activation::Tanh, moons, 0);
    CHECK(p2.eval(Vector(p2.dim(), 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    const Problem p3 = make_mlp({2, 8, 3}, Activation::Relu, blobs, 0);
    CHECK(p3.eval(Vector(p3.dim(), 0.0)) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  }

  TEST_CASE("parameter count follows the documented layout") {
    const Problem p = make_mlp({2, 16, 8, 3}, Activation::Tanh, blobs, 0);
    CHECK(p.dim() == (16 * 2 + 16) + (8 * 16 + 8) + (3 * 8 + 3));
  }

  TEST_CASE("swapping two hidden units leaves the loss unchanged") {
    const std::size_t in = 2, hidden = 5, out = 2;
    const Problem p = make_mlp({in, hidden, out}, Activation::Tanh, moons, 0);
    const Vector theta = p.initial_point(3);
    Vector swapped = theta;
    const std::size_t a = 1, b = 3;
    // Layer 1: W1 (hidden x in) then b1; layer 2: W2 (out x hidden) then b2.
    for (std::size_t j = 0; j < in; ++j) std::swap(swapped[a * in + j], swapped[b * in + j]);
    const std::size_t b1 = hidden * in;
    std::swap(swapped[b1 + a], swapped[b1 + b]);
    const std::size_t w2 = b1 + hidden;
    for (std::size_t r = 0; r < out; ++r) std::swap(swapped[w2 + r * hidden + a], swapped[w2 + r * hidden + b]);
    CHECK(swapped != theta);
    CHECK(p.eval(swapped) == doctest::Approx(p.eval(theta)).epsilon(1e-14));
  }

  TEST_CASE("tanh gradient matches finite differences to 1e-5") {
    const Problem p = make_mlp({2, 6, 2}, Activation::Tanh, moons, 0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(fd_rel_error(p, p.initial_point(seed)) < 1e-5);
  }

  TEST_CASE("row subsets evaluate the mean over those rows") {
    const Problem p = make_mlp({2, 4, 2}, Activation::Tanh, moons, 0);
    const Vector theta = p.initial_point(1);
    std::vector<std::size_t> all(moons.n);
    std::iota(all.begin(), all.end(), 0);
    CHECK(p.eval_rows(theta, all) == doctest::Approx(p.eval(theta)).epsilon(1e-14));
    const std::vector<std::size_t> some = {3, 7, 11};
    const Problem sub = make_mlp({2, 4, 2}, Activation::Tanh, moons.subset(some), 0);
    CHECK(p.eval_rows(theta, some) == doctest::Approx(sub.eval(theta)).epsilon(1e-14));
  }

  TEST_CASE("dimension mismatches rejected") {
    CHECK_THROWS(make_mlp({3, 4, 2}, Activation::Tanh, moons, 0));
    CHECK_THROWS(make_mlp({2, 4, 2}, Activation::Tanh, blobs, 0));
    CHECK_THROWS(make_mlp({2, 2}, Activation::Tanh, moons, 0));
  }
}

TEST_SUITE("scale invariant") {
  const Problem p = make_scale_invariant(8);

  TEST_CASE("scale invariance and radial orthogonality") {
    Draw draw(21);
    for (int i = 0; i < 50; ++i) {
      const Vector theta = draw.vector(8, draw.uniform(0.1, 10.0));
      Vector doubled = theta;
      for (double& x : doubled) x *= 2.0;
      CHECK(rel_diff(p.eval(theta), p.eval(doubled)) <= 1e-12);
      const Vector g = p.grad(theta);
      CHECK(std::abs(dot(theta, g)) / (norm(theta) * norm(g)) <= 1e-10);
    }
  }

  TEST_CASE("finite differences on the unit sphere") {
    Draw draw(22);
    for (int i = 0; i < 10; ++i) {
      Vector theta = draw.vector(8);
      const double n = norm(theta);
      for (double& x : theta) x /= n;
      CHECK(fd_rel_error(p, theta) < 1e-6);
    }
  }

  TEST_CASE("origin is a singularity") {
    CHECK_THROWS_AS(p.eval(Vector(8, 0.0)), std::domain_error);
    CHECK_THROWS_AS(p.grad(Vector(8, 0.0)), std::domain_error);
    CHECK(p.scale_invariant);
    CHECK_THROWS(make_scale_invariant(1));
  }
}

TEST_SUITE("known optima") {
  TEST_CASE("gradient vanishes at the optimum") {
    for (const Problem& p : {make_quadratic(3.0, 0.2, 7), make_rosenbrock(4)}) {
      const Vector star = p.optimum_point ? *p.optimum_point : Vector(p.dim(), 1.0);
      CHECK(norm(p.grad(star)) <= 1e-8);
    }
  }
}

TEST_SUITE("datasets") {
  TEST_CASE("generation is a pure function of its arguments") {
    for (DataKind kind : {DataKind::TwoGaussians, DataKind::TwoMoons, DataKind::MulticlassBlobs}) {
      CHECK(make_synthetic_data(kind, 101, 3, 0.2, 9) == make_synthetic_data(kind, 101, 3, 0.2, 9));
      CHECK(make_synthetic_data(kind, 101, 3, 0.2, 9).features != make_synthetic_data(kind, 101, 3, 0.2, 10).features);
    }
  }

  TEST_CASE("noise-free gaussians sit exactly on the class means") {
    const Dataset data = make_synthetic_data(DataKind::TwoGaussians, 10, 4, 0.0, 1);
    for (std::size_t i = 0; i < data.n; ++i) {
      const double sign = data.labels[i] == 1.0 ? 1.0 : -1.0;
      for (double x : data.row(i)) CHECK(x == sign);
    }
  }

  TEST_CASE("class balance within one") {
    for (DataKind kind : {DataKind::TwoGaussians, DataKind::TwoMoons, DataKind::MulticlassBlobs}) {
      for (std::size_t n : {7, 50, 101}) {
        const Dataset data = make_synthetic_data(kind, n, 2, 0.1, 0);
        std::vector<std::size_t> counts(data.num_classes(), 0);
        for (double y : data.labels) ++counts[static_cast<std::size_t>(y)];
        CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
      }
    }
  }

  TEST_CASE("CSV round trip and filename convention") {
    TempDir dir("dataset");
    const Dataset data = make_synthetic_data(DataKind::TwoMoons, 25, 3, 0.15, 4);
    const std::string name = dataset_filename(DataKind::TwoMoons, 25, 3, 0.15, 4);
    CHECK(name == "two_moons_25_3_0.15_4.csv");
    write_dataset_csv(data, dir.path() / name);
    const Dataset back = read_dataset_csv(dir.path() / name);
    CHECK(back.features == data.features);
    CHECK(back.labels == data.labels);
    CHECK_THROWS(read_dataset_csv(dir.path() / "missing.csv"));
  }

  TEST_CASE("split is disjoint, exhaustive, 80/20, and seeded") {
    for (std::size_t n : {10, 97, 200}) {
      const Split s = train_validation_split(n, 5);
      std::set<std::size_t> all(s.train.begin(), s.train.end());
      for (std::size_t i : s.validation) CHECK(all.insert(i).second);
      CHECK(all.size() == n);
      CHECK(s.validation.size() == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
      CHECK(std::is_sorted(s.train.begin(), s.train.end()));
      const Split again = train_validation_split(n, 5);
      CHECK(again.train == s.train);
      CHECK(train_validation_split(n, 6).validation != s.validation);
    }
  }

  TEST_CASE("epoch order is a seeded permutation that changes per epoch") {
    const auto a = epoch_order(50, 3, 0);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(50);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
    CHECK(epoch_order(50, 3, 0) == a);
    CHECK(epoch_order(50, 3, 1) != a);
  }
}

TEST_SUITE("library gradient checker agrees") {
  TEST_CASE("every generator passes") {
    const Dataset moons = make_synthetic_data(DataKind::TwoMoons, 40, 2, 0.1, 1);
    for (const Problem& p : {make_quadratic(2.0, 0.5, 6), make_rosenbrock(4), make_logistic(moons, 0.0),
                             make_mlp({2, 5, 2}, Activation::Relu, moons, 2), make_scale_invariant(6)}) {
      std::vector<Vector> points;
      for (std::uint64_t s = 0; s < 10; ++s) points.push_back(p.initial_point(s));
      const CheckReport r = check_gradient(p, points);
      CHECK_MESSAGE(r.passed, p.name() << ": " << r.witness);
    }
  }
}
