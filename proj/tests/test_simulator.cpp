#include "mlrt/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mlrt;
using testing::sample_mean;
using testing::sample_var;

namespace {

double correlation(const Vector& a, const Vector& b) {
  const double ma = a.mean(), mb = b.mean();
  const double sab = ((a.array() - ma) * (b.array() - mb)).sum();
  const double saa = (a.array() - ma).square().sum();
  const double sbb = (b.array() - mb).square().sum();
  return sab / std::sqrt(saa * sbb);
}

Matrix empirical_cov(const Matrix& x) {
  const Matrix centred = x.rowwise() - x.colwise().mean();
  return centred.transpose() * centred / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("default design") {
  const SimDesign d = default_design();
  CHECK(d.n_persons == 500);
  CHECK(d.q.n_items() == 20);
  CHECK(d.q.n_dims() == 2);
  CHECK(d.sigma_person.rows() == 4);
  CHECK(d.sigma_person(0, 0) == 1.0);
  CHECK(d.sigma_person(2, 2) == doctest::Approx(0.3));
  CHECK(cov_to_corr(d.sigma_person)(0, 1) == doctest::Approx(0.7));
  CHECK(cov_to_corr(d.sigma_person)(2, 3) == doctest::Approx(0.7));
  CHECK(cov_to_corr(d.sigma_person)(0, 2) == doctest::Approx(-0.3));
  CHECK(std::get<OmegaConstant>(d.omega_mode).value == 2.0);
  CHECK_NOTHROW(d.validate());
  CHECK(default_design(ModelStructure::UA_US).sigma_person.rows() == 2);
  CHECK(default_design(ModelStructure::MA_US).sigma_person.rows() == 3);

  const SimDesign s = distinct_speed_design();
  CHECK(s.sigma_person(2, 2) != s.sigma_person(3, 3));
  CHECK(cov_to_corr(s.sigma_person)(2, 3) == doctest::Approx(0.7));
}

TEST_CASE("design validation") {
  SimDesign d = default_design();
  d.sigma_person = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = default_design();
  d.omega_mode = OmegaConstant{0.0};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = default_design();
  d.missing_rate = 1.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = default_design();
  d.sigma_item = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("simulate persons") {
  SimDesign d = default_design();
  SUBCASE("no persons") {
    d.n_persons = 0;
    Rng rng(1, 0);
    const PersonParams p = simulate_persons(d, rng);
    CHECK(p.theta.rows() == 0);
    CHECK(p.tau.rows() == 0);
  }
  SUBCASE("identity covariance gives uncorrelated components") {
    d.n_persons = 10000;
    d.sigma_person = Matrix::Identity(4, 4);
    Rng rng(2, 0);
    const PersonParams p = simulate_persons(d, rng);
    Matrix all(p.n_persons(), 4);
    all << p.theta, p.tau;
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < j; ++k) CHECK(std::abs(correlation(all.col(j), all.col(k))) < 0.03);
    }
  }
  SUBCASE("ability-speed correlation of -0.6") {
    d = default_design(ModelStructure::UA_US);
    d.n_persons = 10000;
    d.sigma_person << 1.0, -0.6 * std::sqrt(0.3), -0.6 * std::sqrt(0.3), 0.3;
    Rng rng(3, 0);
    const PersonParams p = simulate_persons(d, rng);
    CHECK(correlation(p.theta.col(0), p.tau.col(0)) == doctest::Approx(-0.6).epsilon(0.02 / 0.6));
  }
}

TEST_CASE("empirical person covariance converges") {
  for (int dims : {2, 4}) {
    SimDesign d = default_design();
    d.q = QMatrix::simple_structure(4 * dims, dims);
    d.n_persons = 10000;
    d.sigma_person = block_person_covariance(Vector::Constant(dims, dims == 2 ? 1.0 : 0.5),
                                             Vector::Constant(dims, 0.3), 0.7, 0.7, -0.3);
    Rng rng(4, 0);
    const PersonParams p = simulate_persons(d, rng);
    Matrix all(p.n_persons(), 2 * dims);
    all << p.theta, p.tau;
    CHECK((empirical_cov(all) - d.sigma_person).norm() < 0.05);
  }
}

TEST_CASE("simulate items") {
  SimDesign d = default_design();
  d.q = QMatrix::simple_structure(10000, 2);
  d.sigma_item = Matrix::Identity(2, 2) * 0.5;
  Rng rng(5, 0);
  const ItemParams items = simulate_items(d, rng);
  CHECK((items.omega.array() == 2.0).all());
  const double se = std::sqrt(0.5 / 10000);
  CHECK(std::abs(items.xi.mean() - 4.3) < 3 * se);
  CHECK(std::abs(correlation(items.d, items.xi)) < 0.03);

  d.omega_mode = OmegaLogNormal{0.5, 0.2};
  Rng rng2(6, 0);
  const ItemParams ln = simulate_items(d, rng2);
  CHECK((ln.omega.array() > 0.0).all());
  CHECK(ln.omega.array().log().mean() == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("simulate responses") {
  const int n = 1000, i = 100;
  PersonParams persons{Matrix::Zero(n, 1), Matrix::Zero(n, 1), Matrix::Identity(2, 2)};
  ItemParams items;
  items.d = Vector::Zero(i);
  items.xi = Vector::Constant(i, 4.0);
  items.omega = Vector::Constant(i, 2.0);
  const Matrix q = Matrix::Ones(i, 1);
  Rng rng(7, 0);
  CHECK(std::abs(simulate_responses(persons, items, q, rng).mean() - 0.5) < 0.01);

  items.d = Vector::Constant(i, 50.0);
  CHECK((simulate_responses(persons, items, q, rng).array() == 1.0).all());

  // Replaying the stream shows each cell is Bernoulli(success_prob).
  persons.theta = Matrix::NullaryExpr(3, 1, [&] { return rng.normal(); });
  persons.tau = Matrix::Zero(3, 1);
  items.d = Vector::NullaryExpr(4, [&] { return rng.normal(); });
  items.xi = Vector::Zero(4);
  items.omega = Vector::Ones(4);
  Rng a(8, 0), replay(8, 0);
  const Matrix y = simulate_responses(persons, items, Matrix::Ones(4, 1), a);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double p = success_prob(persons.theta.row(r).transpose(), Vector::Ones(1), items.d(c));
      CHECK(y(r, c) == (replay.uniform() < p ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("simulate response times") {
  const int n = 1000, i = 100;
  PersonParams persons{Matrix::Zero(n, 2), Matrix::Constant(n, 2, 0.25), Matrix::Identity(4, 4)};
  ItemParams items;
  items.d = Vector::Zero(i);
  items.xi = Vector::Constant(i, 4.0);
  items.omega = Vector::Constant(i, 1.5);
  const Matrix q = QMatrix::simple_structure(i, 2).entries();
  Rng rng(9, 0);
  const Matrix t = simulate_rts(persons, items, q, rng);
  CHECK((t.array() > 0.0).all());
  std::vector<double> cells(t.data(), t.data() + t.size());
  std::nth_element(cells.begin(), cells.begin() + cells.size() / 2, cells.end());
  CHECK(cells[cells.size() / 2] == doctest::Approx(std::exp(4.0 - 0.25)).epsilon(0.01));

  items.omega = Vector::Constant(i, 100.0);
  const Matrix sharp = simulate_rts(persons, items, q, rng);
  const double within = ((sharp.array().log() - 3.75).abs() < 0.05).cast<double>().mean();
  CHECK(within > 0.99);
}

TEST_CASE("per-item mean log time recovers time intensity") {
  SimDesign d = default_design();
  d.n_persons = 20000;
  d.q = QMatrix::simple_structure(6, 2);
  Rng rng(10, 0);
  const SimulatedDataset sim = simulate_dataset(d, rng);
  for (int i = 0; i < 6; ++i) {
    const double m = sim.data.log_rts.col(i).mean();
    // sd of log T is sqrt(var(tau) + 1/omega^2) = sqrt(0.3 + 0.25)
    CHECK(std::abs(m - sim.items.xi(i)) < 3 * std::sqrt(0.55 / d.n_persons) + 0.01);
  }
}

TEST_CASE("inject missing") {
  Rng rng(11, 0);
  const Matrix y = Matrix::Ones(1000, 100);
  const Matrix t = Matrix::Constant(1000, 100, 3.0);
  const ObservedData data(y, t);
  const ObservedData same = inject_missing(data, 0.0, rng);
  CHECK(same.log_rts == data.log_rts);

  const ObservedData fifth = inject_missing(data, 0.2, rng);
  const double frac = fifth.log_rts.array().isNaN().cast<double>().mean();
  CHECK(std::abs(frac - 0.2) < 0.01);
  CHECK(fifth.responses == data.responses);

  const ObservedData most = inject_missing(data, 0.999, rng);
  CHECK(most.log_rts.array().isNaN().cast<double>().mean() > 0.99);
  CHECK(most.responses == data.responses);
  CHECK_THROWS_AS(inject_missing(data, 1.0, rng), std::invalid_argument);
}

TEST_CASE("true parameters outscore perturbed time intensities") {
  SimDesign d = default_design();
  d.n_persons = 100;
  double margin = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(12, static_cast<std::uint64_t>(rep));
    const SimulatedDataset sim = simulate_dataset(d, rng);
    const Loadings l = effective_q(d.structure, d.q);
    ItemParams shifted = sim.items;
    shifted.xi.array() += 0.5;
    margin += joint_log_likelihood(sim.data, sim.persons, sim.items, l.ability, l.speed) -
              joint_log_likelihood(sim.data, sim.persons, shifted, l.ability, l.speed);
  }
  CHECK(margin > 0.0);
}

TEST_CASE("simulation is deterministic per stream") {
  const SimDesign d = default_design();
  Rng a(99, 1), b(99, 1);
  const SimulatedDataset x = simulate_dataset(d, a);
  const SimulatedDataset y = simulate_dataset(d, b);
  CHECK(x.data.responses == y.data.responses);
  CHECK(x.data.log_rts == y.data.log_rts);
  CHECK(x.persons.theta == y.persons.theta);
  CHECK(x.items.d == y.items.d);
}
