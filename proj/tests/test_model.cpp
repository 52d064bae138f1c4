#include "mlrt/model.hpp"
#include "mlrt/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mlrt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) out(j++) = x;
  return out;
}

QMatrix table1_q() {
  Matrix q = Matrix::Zero(10, 4);
  q(0, 1) = 1;
  q(1, 0) = q(2, 0) = 1;
  for (int i = 3; i < 7; ++i) q(i, 2) = 1;
  for (int i = 7; i < 10; ++i) q(i, 3) = 1;
  return QMatrix(q);
}

struct OneCell {
  ObservedData data;
  PersonParams persons;
  ItemParams items;
  Matrix ones = Matrix::Ones(1, 1);
};

OneCell one_cell(double log_rt) {
  OneCell c;
  Matrix y(1, 1), t(1, 1);
  y << 1;
  t << log_rt;
  c.data = ObservedData(y, t);
  c.persons.theta = Matrix::Zero(1, 1);
  c.persons.tau = Matrix::Zero(1, 1);
  c.persons.sigma_person = Matrix::Identity(2, 2);
  c.items.d = vec({0.0});
  c.items.xi = vec({4.0});
  c.items.omega = vec({1.0});
  return c;
}

/// Random fully specified problem for property checks.
struct Problem {
  ObservedData data;
  PersonParams persons;
  ItemParams items;
  Matrix qa, qs;
};

Problem random_problem(Rng& rng, int n, int i, int ka, int ks) {
  Problem p;
  Matrix y(n, i), t(n, i);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < i; ++c) {
      y(r, c) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      t(r, c) = 4.0 + rng.normal();
      if (rng.uniform() < 0.1) y(r, c) = kMissing;
      if (rng.uniform() < 0.1) t(r, c) = kMissing;
    }
  }
  p.data = ObservedData(y, t);
  p.persons.theta = Matrix::NullaryExpr(n, ka, [&] { return rng.normal(); });
  p.persons.tau = Matrix::NullaryExpr(n, ks, [&] { return 0.5 * rng.normal(); });
  p.persons.sigma_person = Matrix::Identity(ka + ks, ka + ks);
  p.items.d = Vector::NullaryExpr(i, [&] { return rng.normal(); });
  p.items.xi = Vector::NullaryExpr(i, [&] { return 4.0 + rng.normal(); });
  p.items.omega = Vector::NullaryExpr(i, [&] { return 0.5 + rng.uniform() * 2.0; });
  p.qa = Matrix::Zero(i, ka);
  p.qs = Matrix::Zero(i, ks);
  for (int c = 0; c < i; ++c) {
    p.qa(c, c % ka) = 1;
    p.qs(c, c % ks) = 1;
  }
  return p;
}

}  // namespace

TEST_CASE("qmatrix validation") {
  Matrix bad(2, 2);
  bad << 1, 0, 0, 0;
  CHECK_THROWS_AS(QMatrix{bad}, std::invalid_argument);
  Matrix nonbinary(1, 2);
  nonbinary << 1, 2;
  CHECK_THROWS_AS(QMatrix{nonbinary}, std::invalid_argument);
  CHECK_THROWS_AS(QMatrix(Matrix(0, 2)), std::invalid_argument);

  const QMatrix simple = QMatrix::simple_structure(20, 2);
  CHECK(simple.n_items() == 20);
  CHECK(simple.entries().col(0).sum() == 10);
  CHECK(simple.entries().rowwise().sum().minCoeff() == 1);
  CHECK(simple.item_ids().size() == 20);
}

TEST_CASE("observed data from seconds treats zero as missing") {
  Matrix y(1, 3), t(1, 3);
  y << 1, 0, kMissing;
  t << 10, 0, 2.5;
  const ObservedData data = ObservedData::from_seconds(y, t);
  CHECK(data.log_rts(0, 0) == doctest::Approx(std::log(10.0)));
  CHECK(is_missing(data.log_rts(0, 1)));
  CHECK(is_missing(data.responses(0, 2)));
  CHECK_FALSE(is_missing(data.log_rts(0, 2)));
  t(0, 1) = -1;
  CHECK_THROWS_AS(ObservedData::from_seconds(y, t), std::invalid_argument);
  CHECK_THROWS_AS(ObservedData(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("structure names") {
  for (auto s : {ModelStructure::UA_US, ModelStructure::MA_US, ModelStructure::MA_MS}) {
    CHECK(parse_structure(to_string(s)) == s);
  }
  CHECK(parse_structure("MA-MS") == ModelStructure::MA_MS);
  CHECK_THROWS_AS(parse_structure("XX"), std::invalid_argument);
}

TEST_CASE("success probability examples") {
  CHECK(success_prob(vec({0, 0}), vec({1, 1}), 0.0) == 0.5);
  CHECK(success_prob(vec({1, 1}), vec({1, 1}), -2.0) == 0.5);
  const double p = success_prob(vec({0, 0, 0, 0}), vec({0, 1, 0, 0}), 0.567);
  CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-0.567))).epsilon(1e-14));
  CHECK(p == doctest::Approx(0.638).epsilon(1e-3));
  CHECK_THROWS_AS(success_prob(vec({0, 0}), vec({1}), 0.0), std::invalid_argument);
}

TEST_CASE("success probability stays strictly inside (0, 1)") {
  CHECK(success_prob(vec({0}), vec({1}), 800.0) < 1.0);
  CHECK(success_prob(vec({0}), vec({1}), -800.0) > 0.0);
}

TEST_CASE("success probability is monotone in loaded and flat in unloaded components") {
  Rng rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector theta = Vector::NullaryExpr(3, [&] { return rng.normal(); });
    const Vector q = vec({1, 0, 1});
    const double d = rng.normal();
    const double base = success_prob(theta, q, d);
    for (int k = 0; k < 3; ++k) {
      Vector up = theta;
      up(k) += 0.1 + rng.uniform();
      if (q(k) == 1) {
        CHECK(success_prob(up, q, d) > base);
      } else {
        CHECK(success_prob(up, q, d) == base);
      }
    }
  }
}

TEST_CASE("rt mean examples") {
  CHECK(rt_mean(4.224, vec({1}), vec({0})) == 4.224);
  CHECK(rt_mean(5, vec({1, 0}), vec({1, 99})) == 4);
  CHECK(rt_mean(5, vec({1, 1}), vec({0.3, 0.7})) == 4);
  CHECK(rt_mean(5, vec({1, 1}), vec({0.7, 0.3})) == 4);
  CHECK_THROWS_AS(rt_mean(5, vec({1, 1}), vec({0.3})), std::invalid_argument);
}

TEST_CASE("rt log density examples") {
  const double half_log_2pi = 0.5 * std::log(2 * std::numbers::pi);
  CHECK(rt_log_density(4.0, 4.0, vec({1}), vec({0}), 1.0) ==
        doctest::Approx(-half_log_2pi).epsilon(1e-14));
  CHECK(rt_log_density(4.0, 4.0, vec({1}), vec({0}), 1.0) == doctest::Approx(-0.91894).epsilon(1e-5));
  CHECK(rt_log_density(4.0, 4.0, vec({1}), vec({0}), 2.0) == doctest::Approx(-0.22579).epsilon(1e-4));
  CHECK(rt_log_density(5.0, 4.0, vec({1}), vec({0}), 1.0) == doctest::Approx(-1.41894).epsilon(1e-5));
  CHECK_THROWS_AS(rt_log_density(4.0, 4.0, vec({1}), vec({0}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rt_log_density(4.0, 4.0, vec({1}), vec({0}), -1.0), std::invalid_argument);
}

TEST_CASE("rt log density integrates to one") {
  for (double omega : {0.5, 1.0, 2.0, 7.0}) {
    const double sd = 1.0 / omega;
    const int n = 20001;
    const double lo = 3.0 - 12 * sd, hi = 3.0 + 12 * sd;
    double area = 0.0, prev = std::exp(rt_log_density(lo, 3.5, vec({1, 1}), vec({0.2, 0.3}), omega));
    for (int j = 1; j < n; ++j) {
      const double x = lo + (hi - lo) * j / (n - 1);
      const double y = std::exp(rt_log_density(x, 3.5, vec({1, 1}), vec({0.2, 0.3}), omega));
      area += 0.5 * (y + prev) * (hi - lo) / (n - 1);
      prev = y;
    }
    CHECK(std::abs(area - 1.0) < 1e-6);
  }
}

TEST_CASE("compensatory invariance is exact") {
  Rng rng(11, 0);
  const Vector ones = Vector::Ones(3);
  int compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Vector a = Vector::NullaryExpr(3, [&] { return rng.normal(); });
    // Swapping two summands keeps the sum exactly; a shift keeps it only when
    // the floating-point sums agree, which is checked first.
    Vector b = a;
    std::swap(b(0), b(1));
    Vector c = a;
    const double h = rng.normal();
    c(0) += h;
    c(1) -= h;
    const double log_t = 3.0 + rng.normal(), xi = 4.0 + rng.normal(), omega = 0.5 + rng.uniform();
    const double da = rt_log_density(log_t, xi, ones, a, omega);
    CHECK(rt_log_density(log_t, xi, ones, b, omega) == da);
    if (ones.dot(c) == ones.dot(a)) {
      CHECK(rt_log_density(log_t, xi, ones, c, omega) == da);
      ++compared;
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("joint log likelihood examples") {
  OneCell c = one_cell(4.0);
  const double ll = joint_log_likelihood(c.data, c.persons, c.items, c.ones, c.ones);
  CHECK(ll == doctest::Approx(std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(ll == doctest::Approx(-1.61208).epsilon(1e-5));
  CHECK(deviance(c.data, c.persons, c.items, c.ones, c.ones) == doctest::Approx(3.22417).epsilon(1e-5));

  OneCell missing = one_cell(kMissing);
  CHECK(joint_log_likelihood(missing.data, missing.persons, missing.items, missing.ones,
                             missing.ones) == doctest::Approx(-0.69315).epsilon(1e-5));

  ObservedData empty(Matrix(0, 1), Matrix(0, 1));
  PersonParams nobody{Matrix(0, 1), Matrix(0, 1), Matrix::Identity(2, 2)};
  CHECK(joint_log_likelihood(empty, nobody, c.items, c.ones, c.ones) == 0.0);
  CHECK(deviance(empty, nobody, c.items, c.ones, c.ones) == 0.0);
}

TEST_CASE("joint log likelihood rejects inconsistent dimensions") {
  OneCell c = one_cell(4.0);
  CHECK_THROWS_AS(joint_log_likelihood(c.data, c.persons, c.items, Matrix::Ones(2, 1), c.ones),
                  std::invalid_argument);
  c.persons.tau = Matrix::Zero(1, 2);
  CHECK_THROWS_AS(joint_log_likelihood(c.data, c.persons, c.items, c.ones, c.ones),
                  std::invalid_argument);
}

TEST_CASE("deviance is minus twice the log likelihood") {
  Rng rng(5, 0);
  Problem p = random_problem(rng, 30, 8, 2, 2);
  const double ll = joint_log_likelihood(p.data, p.persons, p.items, p.qa, p.qs);
  CHECK(deviance(p.data, p.persons, p.items, p.qa, p.qs) == -2.0 * ll);
}

TEST_CASE("joint log likelihood is additive over cells") {
  Rng rng(7, 0);
  Problem p = random_problem(rng, 25, 6, 2, 2);
  const double full = joint_log_likelihood(p.data, p.persons, p.items, p.qa, p.qs);
  double sum = 0.0;
  for (int n = 0; n < 25; ++n) {
    for (int i = 0; i < 6; ++i) {
      sum += cell_log_likelihood(p.data, p.persons, p.items, p.qa, p.qs, n, i);
    }
  }
  CHECK(sum == doctest::Approx(full).epsilon(1e-13));

  for (int trial = 0; trial < 20; ++trial) {
    const int n = static_cast<int>(rng.uniform() * 25), i = static_cast<int>(rng.uniform() * 6);
    const double term = cell_log_likelihood(p.data, p.persons, p.items, p.qa, p.qs, n, i);
    Problem removed = p;
    removed.data.responses(n, i) = kMissing;
    removed.data.log_rts(n, i) = kMissing;
    const double rest = joint_log_likelihood(removed.data, removed.persons, removed.items,
                                             removed.qa, removed.qs);
    CHECK(full - rest == doctest::Approx(term).epsilon(1e-9));
  }
}

TEST_CASE("effective loadings per structure") {
  const QMatrix q = table1_q();
  const Loadings ms = effective_q(ModelStructure::MA_MS, q);
  CHECK(ms.ability == q.entries());
  CHECK(ms.speed == q.entries());
  const Loadings us = effective_q(ModelStructure::MA_US, q);
  CHECK(us.ability == q.entries());
  CHECK(us.speed == Matrix::Ones(10, 1));
  const Loadings ua = effective_q(ModelStructure::UA_US, q);
  CHECK(ua.ability == Matrix::Ones(10, 1));
  CHECK(ua.speed == Matrix::Ones(10, 1));
  CHECK(ability_dims(ModelStructure::MA_US, q) == 4);
  CHECK(speed_dims(ModelStructure::MA_US, q) == 1);
  CHECK(speed_dims(ModelStructure::MA_MS, q) == 4);
}

TEST_CASE("single-dimension MA_MS equals UA_US exactly") {
  Rng rng(13, 0);
  Problem p = random_problem(rng, 40, 7, 1, 1);
  const QMatrix q(Matrix::Ones(7, 1));
  const Loadings ms = effective_q(ModelStructure::MA_MS, q);
  const Loadings ua = effective_q(ModelStructure::UA_US, q);
  CHECK(joint_log_likelihood(p.data, p.persons, p.items, ms.ability, ms.speed) ==
        joint_log_likelihood(p.data, p.persons, p.items, ua.ability, ua.speed));
}
