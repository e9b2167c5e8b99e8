#include "martrace/martingale.hpp"

#include "martrace/experiment.hpp"
#include "martrace/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace martrace;

namespace {

MeasureSpace unit_space(int level) {
  return build_space(Interval{0.0, 1.0}, Uniform{1.0}, level);
}

GridFunction identity_function(const MeasureSpace& s) {
  Vector v(s.atom_count());
  for (Eigen::Index a = 0; a < v.size(); ++a) v[a] = s.atoms[static_cast<std::size_t>(a)].rep.x;
  return GridFunction{&s, std::move(v)};
}

}  // namespace

TEST_CASE("conditional expectation preserves constants") {
  const auto s = unit_space(5);
  const auto f = build_dyadic(s, 5);
  const GridFunction c{&s, Vector::Constant(s.atom_count(), 3.25)};
  for (int n = 0; n <= 5; ++n) {
    const auto en = conditional_expectation(c, f, n);
    CHECK((en.values.array() == 3.25).all());
  }
}

TEST_CASE("conditional expectation of x at level 1") {
  const auto s = unit_space(5);
  const auto filt = build_dyadic(s, 5);
  const auto f = identity_function(s);
  const auto e1 = conditional_expectation(f, filt, 1);
  // weighted-mean oracle: uniform mean of atom midpoints over each half
  for (Eigen::Index a = 0; a < s.atom_count(); ++a) {
    const double expected = s.atoms[static_cast<std::size_t>(a)].rep.x < 0.5 ? 0.25 : 0.75;
    CHECK(e1.values[a] == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("conditional expectation at full depth is the identity") {
  const auto s = unit_space(4);
  const auto filt = build_dyadic(s, 4);
  const auto suite = random_function_suite(s, 5, 7);
  for (const auto& v : suite) {
    const GridFunction f{&s, v};
    const auto en = conditional_expectation(f, filt, 4);
    CHECK((en.values - v).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("null cells keep value zero") {
  auto s = unit_space(3);
  s.atoms[0].measure = 0.0;
  s.atoms[1].measure = 0.0;
  const auto filt = build_dyadic(s, 3);
  Vector v = Vector::Constant(s.atom_count(), 5.0);
  const GridFunction f{&s, v};
  const auto e2 = conditional_expectation(f, filt, 2);
  CHECK(e2.values[0] == 0.0);  // cell [0, 0.25) has measure 0
  CHECK(e2.values[1] == 0.0);
  CHECK(e2.values[2] == doctest::Approx(5.0));
}

TEST_CASE("maximal function dominates every level") {
  const auto s = unit_space(6);
  const auto filt = build_dyadic(s, 6);
  const auto suite = random_function_suite(s, 10, 11);
  for (const auto& v : suite) {
    const GridFunction f{&s, v};
    const auto mf = maximal_function(f, filt);
    for (int n = 1; n <= 6; ++n) {
      const auto en = conditional_expectation(f, filt, n);
      CHECK((mf.values.array() + 1e-15 >= en.values.array().abs()).all());
    }
    // |f| <= Mf at full depth
    CHECK((mf.values.array() + 1e-15 >= v.array().abs()).all());
    // Doob L2 bound
    CHECK(weighted_norm(mf, 2.0) <= 2.0 * weighted_norm(f, 2.0) + 1e-12);
  }
  const GridFunction c{&s, Vector::Constant(s.atom_count(), -2.0)};
  CHECK((maximal_function(c, filt).values.array() == 2.0).all());
}

TEST_CASE("contraction and tower properties") {
  const auto s = build_space(Interval{0.0, 1.0}, Polynomial{{0.5, 1.0}}, 5);
  const auto filt = build_dyadic(s, 5);
  const auto suite = random_function_suite(s, 10, 3);
  for (const auto& v : suite) {
    const GridFunction f{&s, v};
    for (double p : {1.0, 2.0, 0.0})
      for (int n = 1; n <= 5; ++n)
        CHECK(weighted_norm(conditional_expectation(f, filt, n), p) <=
              weighted_norm(f, p) + 1e-12);
    for (int n = 2; n <= 5; ++n) {
      const auto en = conditional_expectation(f, filt, n);
      for (int m = 1; m < n; ++m) {
        const auto lhs = conditional_expectation(en, filt, m);
        const auto rhs = conditional_expectation(f, filt, m);
        CHECK((lhs.values - rhs.values).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("mean convergence is monotone to zero on dyadic filtrations") {
  const auto s = unit_space(6);
  const auto filt = build_dyadic(s, 6);
  const auto suite = random_function_suite(s, 10, 99);
  for (const auto& v : suite) {
    const GridFunction f{&s, v};
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= 6; ++n) {
      const auto en = conditional_expectation(f, filt, n);
      const GridFunction diff{&s, en.values - v};
      const double err = weighted_norm(diff, 2.0);
      CHECK(err <= prev + 1e-12);
      prev = err;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("averaged kernel of a constant is constant") {
  const auto s = unit_space(4);
  const auto filt = build_dyadic(s, 4);
  const auto k = make_sampled(Matrix::Constant(s.atom_count(), s.atom_count(), 1.0), true);
  for (int n = 0; n <= 4; ++n) {
    const auto ak = averaged_kernel(k, filt, n);
    CHECK((ak.values.array() - 1.0).abs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("averaged kernel at full depth equals the samples") {
  const auto s = unit_space(4);
  const auto filt = build_dyadic(s, 4);
  const auto k = make_brownian_min();
  const Matrix samples = sample_kernel_matrix(k, s);
  const auto ak = averaged_kernel(samples, filt, 4);
  CHECK((ak.values - samples).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("brownian cell-averaged diagonal matches the closed form") {
  // continuum oracle: double integral of min over [kh,(k+1)h)^2 gives the
  // cell-averaged diagonal kh + h/3; the discrete version converges in L
  for (int level : {6, 8, 10}) {
    const auto s = unit_space(level);
    const auto filt = build_dyadic(s, 4);
    const auto ak = averaged_kernel(make_brownian_min(), filt, 4);
    const double h = 1.0 / 16.0;
    double worst = 0.0;
    for (int u = 0; u < 16; ++u)
      worst = std::max(worst, std::abs(ak.values(u, u) - (u * h + h / 3.0)));
    // discrete bias shrinks with atom resolution
    CHECK(worst <= 0.2 * h * std::pow(0.25, level - 6) + 1e-12);
  }
  // brute-force atom summation oracle at one cell
  const auto s = unit_space(8);
  const auto filt = build_dyadic(s, 3);
  const auto ak = averaged_kernel(make_brownian_min(), filt, 3);
  const auto& cell = filt.levels[3].cells[5];
  double acc = 0.0;
  for (auto a : cell.atom_indices)
    for (auto b : cell.atom_indices)
      acc += std::min(s.atoms[static_cast<std::size_t>(a)].rep.x,
                      s.atoms[static_cast<std::size_t>(b)].rep.x) *
             s.atoms[static_cast<std::size_t>(a)].measure *
             s.atoms[static_cast<std::size_t>(b)].measure;
  acc /= cell.measure * cell.measure;
  CHECK(ak.values(5, 5) == doctest::Approx(acc).epsilon(1e-13));
}

TEST_CASE("block constancy of the atom expansion") {
  const auto s = unit_space(5);
  const auto filt = build_dyadic(s, 3);
  const auto ak = averaged_kernel(make_gaussian_rbf(4.0), filt, 2);
  const Matrix expanded = expand_to_atoms(ak);
  const auto& part = filt.levels[2];
  for (Eigen::Index a = 0; a < s.atom_count(); ++a)
    for (Eigen::Index b = 0; b < s.atom_count(); ++b)
      CHECK(expanded(a, b) == ak.values(part.atom_to_cell[static_cast<std::size_t>(a)],
                                        part.atom_to_cell[static_cast<std::size_t>(b)]));
}

TEST_CASE("D_n row integrals and idempotence") {
  const auto s = build_space(Interval{0.0, 1.0}, Polynomial{{0.0, 2.0}}, 5);
  const auto filt = build_dyadic(s, 3);
  const Matrix d = dn_operator_matrix(filt, 2);
  const Vector w = s.weights();
  const Vector rows = d * w;
  for (Eigen::Index a = 0; a < rows.size(); ++a)
    CHECK(rows[a] == doctest::Approx(1.0).epsilon(1e-12));

  // constant functions are fixed points
  const Vector c = Vector::Constant(s.atom_count(), 4.0);
  CHECK(((d * w.asDiagonal() * c).array() - 4.0).abs().maxCoeff() <= 1e-12);

  // matrix product oracle for idempotence
  const Matrix dd = d * w.asDiagonal() * d;
  CHECK((dd - d).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("D_n reproduces the conditional expectation") {
  const auto s = unit_space(5);
  const auto filt = build_dyadic(s, 4);
  const Matrix d = dn_operator_matrix(filt, 3);
  const Vector w = s.weights();
  const auto suite = random_function_suite(s, 5, 21);
  for (const auto& v : suite) {
    const Vector lhs = d * w.asDiagonal() * v;
    const GridFunction f{&s, v};
    const Vector rhs = conditional_expectation(f, filt, 3).values;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sandwich identity across kernels and levels") {
  const auto s = unit_space(5);
  const auto filt = build_dyadic(s, 5);
  for (const auto& k : {make_brownian_min(), make_exp_abs(1.0), make_gaussian_rbf(8.0)})
    for (int n = 1; n <= 5; ++n) {
      const auto r = sandwich_identity_check(k, filt, n, 1e-10);
      CHECK(r.pass);
    }

  // zero kernel: both sides vanish
  const auto z = make_sampled(Matrix::Zero(s.atom_count(), s.atom_count()), true);
  const auto rz = sandwich_identity_check(z, filt, 2, 1e-15);
  CHECK(rz.max_abs_diff == 0.0);

  // full depth: both sides equal the sampled matrix
  const auto rfull = sandwich_identity_check(make_brownian_min(), filt, 5, 1e-12);
  CHECK(rfull.pass);
}
