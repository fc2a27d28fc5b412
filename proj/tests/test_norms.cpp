#include <doctest.h>

#include <cmath>

#include "hystherm/io.hpp"
#include "hystherm/norms.hpp"

using namespace hystherm;

namespace {

constexpr Scalar kPi = 3.14159265358979323846;

SpaceTimeField random_field(PortableRng& rng, const SpatialMesh& m, const TimeGrid& g) {
  Matrix v(m.n_x, g.n_t);
  for (Index k = 0; k < g.n_t; ++k)
    for (Index i = 0; i < m.n_x; ++i) v(i, k) = rng.uniform(-2.0, 2.0);
  return {m, g, std::move(v)};
}

std::vector<NormSpec> all_specs() {
  return {{NormKind::L2_QT}, {NormKind::H1t_L2x},          {NormKind::LinfT_V},
          {NormKind::XS},    {NormKind::Lq_x_Ct, 2.0, 3.0}, {NormKind::L1t_Linfx}};
}

}  // namespace

TEST_CASE("zero field has zero norm of every kind") {
  SpaceTimeField z = SpaceTimeField::zero(SpatialMesh(2.0, 9), TimeGrid(1.5, 17));
  for (const auto& spec : all_specs()) CHECK(norm(z, spec) == 0.0);
  CHECK(norm_ys(z) == 0.0);
}

TEST_CASE("constant field on the unit cylinder") {
  SpatialMesh m(1.0, 65);
  TimeGrid g(1.0, 65);
  const Scalar c = -2.5;
  SpaceTimeField f(m, g, Matrix::Constant(m.n_x, g.n_t, c));
  CHECK(norm(f, {NormKind::L2_QT}) == doctest::Approx(std::abs(c)).epsilon(1e-12));
  CHECK(norm(f, {NormKind::L1t_Linfx}) == doctest::Approx(std::abs(c)).epsilon(1e-12));
  CHECK(norm(f, {NormKind::Lq_x_Ct, 2.0, 3.0}) ==
        doctest::Approx(std::abs(c)).epsilon(1e-12));
}

TEST_CASE("XS norm of f(x,t) = t converges to (1/4)^(1/3) for epsilon = 1") {
  const Scalar exact = std::pow(0.25, 1.0 / 3.0);
  auto value = [&](Index n_t) {
    SpatialMesh m(1.0, 17);
    TimeGrid g(1.0, n_t);
    SpaceTimeField f = SpaceTimeField::sample(m, g, [](Scalar, Scalar t) { return t; });
    NormSpec spec{NormKind::XS};
    spec.epsilon = 1.0;
    return norm(f, spec);
  };
  CHECK(std::abs(value(257) - exact) / exact < 0.02);
  CHECK(std::abs(value(1025) - exact) < std::abs(value(65) - exact));
}

TEST_CASE("norm_YS of a steady sin profile") {
  SpatialMesh m(1.0, 129);
  TimeGrid g(1.0, 17);
  SpaceTimeField f = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar) { return std::sin(kPi * x); });
  CHECK(norm(f, {NormKind::H1t_L2x}) == 0.0);
  const Scalar expect = kPi / std::sqrt(2.0);  // (int pi^2 cos^2)^(1/2)
  CHECK(std::abs(norm(f, {NormKind::LinfT_V}) - expect) / expect < 0.02);
  CHECK(norm_ys(f) == norm(f, {NormKind::H1t_L2x}) + norm(f, {NormKind::LinfT_V}));
}

TEST_CASE("homogeneity and triangle inequality on random fields") {
  PortableRng rng(77);
  SpatialMesh m(1.0, 9);
  TimeGrid g(2.0, 13);
  for (int rep = 0; rep < 50; ++rep) {
    SpaceTimeField f = random_field(rng, m, g);
    SpaceTimeField h = random_field(rng, m, g);
    const Scalar a = rng.uniform(-3.0, 3.0);
    for (const auto& spec : all_specs()) {
      const Scalar nf = norm(f, spec);
      const Scalar nh = norm(h, spec);
      SpaceTimeField af(m, g, a * f.values);
      CHECK(norm(af, spec) == doctest::Approx(std::abs(a) * nf).epsilon(1e-10));
      SpaceTimeField sum(m, g, f.values + h.values);
      CHECK(norm(sum, spec) <= nf + nh + 1e-12 * (1 + nf + nh));
    }
  }
}

TEST_CASE("truncating the time grid never increases a norm") {
  PortableRng rng(99);
  SpatialMesh m(1.0, 9);
  TimeGrid g(2.0, 17);
  for (int rep = 0; rep < 30; ++rep) {
    SpaceTimeField f = random_field(rng, m, g);
    const Index keep = 2 + static_cast<Index>(rng.uniform01() * (g.n_t - 2));
    TimeGrid gt(g.T * static_cast<Scalar>(keep - 1) / static_cast<Scalar>(g.n_t - 1), keep);
    SpaceTimeField trunc(m, gt, f.values.leftCols(keep));
    for (const auto& spec : all_specs())
      CHECK(norm(trunc, spec) <= norm(f, spec) * (1 + 1e-12));
  }
}

TEST_CASE("Hoelder consistency between XS exponents") {
  PortableRng rng(123);
  SpatialMesh m(1.0, 9);
  TimeGrid g(1.75, 21);
  for (int rep = 0; rep < 50; ++rep) {
    SpaceTimeField f = random_field(rng, m, g);
    const Scalar e1 = rng.uniform(0.1, 0.6);
    const Scalar e2 = e1 + rng.uniform(0.1, 1.0);
    const Scalar delta = 1.0 / (2 + e1) - 1.0 / (2 + e2);
    NormSpec s1{NormKind::XS};
    s1.epsilon = e1;
    NormSpec s2{NormKind::XS};
    s2.epsilon = e2;
    CHECK(norm(f, s1) <= std::pow(g.T, delta) * norm(f, s2) * (1 + 1e-12));
  }
}

TEST_CASE("invalid norm parameters are rejected") {
  SpaceTimeField f = SpaceTimeField::zero(SpatialMesh(1.0, 5), TimeGrid(1.0, 5));
  NormSpec bad_eps{NormKind::XS};
  bad_eps.epsilon = -1.0;
  CHECK_THROWS_AS(norm(f, bad_eps), std::invalid_argument);
  NormSpec bad_q{NormKind::Lq_x_Ct};
  bad_q.q = 0.5;
  CHECK_THROWS_AS(norm(f, bad_q), std::invalid_argument);
  NormSpec unknown{static_cast<NormKind>(42)};
  CHECK_THROWS_AS(norm(f, unknown), std::invalid_argument);
}
