#include <catch2/catch.hpp>

#include "icollapse/icollapse.hpp"

using namespace icollapse;

namespace {

const GridBasis kBasis{GridSpec{1, 64, 10.0}, {{"a", 1.0, 0.0}, {"b", 2.0, 0.0}}};

HilbertState moving_pair() {
  return two_body_gaussian(kBasis, TwoBodyPacket{{0.0}, {0.2}, 1.0, {-1.5}, {0.8}, 1.0, 0.0});
}

}  // namespace

TEST_CASE("interacting component has unit overlap with the state", "[collapse]") {
  const HilbertState s = moving_pair();
  const GridChannel ch = make_grid_channel(PairPotential{GaussianWell{-1.0, 1.5}, 0, 1}, kBasis);
  const HilbertState c = interacting_component(s, ch.fields.value);
  CHECK(std::abs(inner(s, c) - 1.0) < 1e-12);
  const double mean = mean_potential(s, ch.fields.value);
  CHECK(mean < 0.0);
  CHECK(std::abs(mean - inner(s, s.with_amplitudes(ch.fields.value.cast<Complex>().cwiseProduct(s.amplitudes()))).real()) <
        1e-12);
}

TEST_CASE("vanishing potential has no interacting component", "[collapse]") {
  const HilbertState s = moving_pair();
  const GridChannel ch = make_grid_channel(PairPotential{GaussianWell{0.0, 1.0}, 0, 1}, kBasis);
  CHECK_THROWS_AS(interacting_component(s, ch.fields.value), DegenerateProjection);
  const RateParams r = rate_parameters(s, ch);
  CHECK(r.gamma == 0.0);
  CHECK(r.numerator == 0.0);
  const CollapseOperator op = build_collapse_operator(s, ch, CollapseSettings{1.0, 1.0});
  CHECK(op.is_zero());
}

TEST_CASE("rate numerator equals the commutator expectation", "[collapse]") {
  // |<c| i[H, V] |c>| with the spectral kinetic operator; V is smooth and
  // resolved, so sampled fields and spectral derivatives agree.
  const HilbertState s = moving_pair();
  const PairPotential p{GaussianWell{-1.0, 1.5}, 0, 1};
  const GridChannel ch = make_grid_channel(p, kBasis);
  const HilbertState c = normalize(interacting_component(s, ch.fields.value));
  const std::vector<double> masses{1.0, 2.0};
  const ComplexVector v = ch.fields.value.cast<Complex>();
  const ComplexVector tv = apply_kinetic(c.with_amplitudes(v.cwiseProduct(c.amplitudes())), masses,
                                         DerivativeScheme::Spectral).amplitudes();
  const ComplexVector vt = v.cwiseProduct(apply_kinetic(c, masses, DerivativeScheme::Spectral).amplitudes());
  const double oracle = std::abs(inner(c, c.with_amplitudes(tv - vt)));
  const double numerator = rate_numerator(s, ch, DerivativeScheme::Spectral);
  REQUIRE(oracle > 1e-3);
  CHECK(numerator == Approx(oracle).epsilon(1e-8));
}

TEST_CASE("rate denominator conventions", "[collapse]") {
  const HilbertState s = moving_pair();
  const GridChannel well = make_grid_channel(PairPotential{GaussianWell{-2.5, 1.5}, 0, 1}, kBasis);
  CHECK(rate_denominator(s, well) == Approx(2.5));
  CHECK(lowest_state_potential_norm(well.potential) == Approx(2.5));

  // Repulsive: <V> plus the radial kinetic energy of the component. In 1-D the
  // radial kinetic energy is the relative-motion energy -(1/2mu) d^2/dr^2.
  const GridChannel bump = make_grid_channel(PairPotential{SoftCoulomb{1.0, 1.0}, 0, 1}, kBasis);
  const HilbertState c = normalize(interacting_component(s, bump.fields.value));
  const GridLayout L = kBasis.layout();
  const double mu = 2.0 / 3.0;
  // d/dr at fixed X is (m_b d_a - m_a d_b) / M
  auto ddr = [&](const ComplexVector& v) {
    return ((2.0 * derivative(L, v, 0, DerivativeScheme::Spectral) - derivative(L, v, 1, DerivativeScheme::Spectral)) /
            3.0)
        .eval();
  };
  const ComplexVector d1 = ddr(c.amplitudes());
  const double krel = d1.squaredNorm() * c.weight() / (2.0 * mu);
  const double vmean = c.amplitudes().cwiseAbs2().dot(bump.fields.value) * c.weight();
  CHECK(rate_denominator(s, bump, DerivativeScheme::Spectral) == Approx(vmean + krel).epsilon(1e-9));
  CHECK(rate_parameters(s, bump).gamma > 0.0);
}

TEST_CASE("collapse operator strength and centring", "[collapse]") {
  const HilbertState s = moving_pair();
  const GridChannel ch = make_grid_channel(PairPotential{GaussianWell{-1.0, 1.5}, 0, 1}, kBasis);
  const double c = 3.0, gain = 7.0;
  const CollapseOperator op = build_collapse_operator(s, ch, CollapseSettings{gain, c, DerivativeScheme::Stencil});
  const double g = gamma(s, ch);
  REQUIRE(g > 0.0);
  CHECK(op.gamma == Approx(g));
  CHECK(op.energy_denominator == Approx(3.0 * 9.0));
  CHECK(op.strength() == Approx(gain * std::sqrt(g) / 27.0));
  CHECK(op.pair == std::pair<int, int>{0, 1});
  // <psi| V - <V> |psi> = 0
  CHECK(std::abs(s.amplitudes().cwiseAbs2().dot(op.field)) * s.weight() < 1e-14);
  CHECK((op.field - op.strength() * op.centered_potential).norm() < 1e-15);
  CHECK_FALSE(op.nonrelativistic);
  const CollapseOperator far = build_collapse_operator(s, ch, CollapseSettings{gain, 100.0});
  CHECK(far.nonrelativistic);
}

TEST_CASE("finite channels use the supplied rate", "[collapse]") {
  const HilbertState s(FiniteBasis{{"I", "O"}}, (ComplexVector(2) << std::sqrt(0.3), std::sqrt(0.7)).finished());
  FiniteChannel ch;
  ch.potential = RealVector::Zero(2);
  ch.potential[0] = 2.0;
  ch.mass_j = ch.mass_k = 0.5;
  ch.gamma = 4.0;
  const CollapseOperator op = build_collapse_operator(s, ch, CollapseSettings{1.5, 2.0});
  CHECK(op.mean_potential == Approx(0.6));
  CHECK(op.strength() == Approx(1.5 * 2.0 / 4.0));
  CHECK(op.field[0] == Approx(0.75 * 1.4));
  CHECK(op.field[1] == Approx(-0.75 * 0.6));
  const auto ops = collapse_sum(s, {ch, ch}, CollapseSettings{1.5, 2.0});
  CHECK((combined_field(ops, 2) - 2.0 * op.field).norm() < 1e-15);
  CHECK_THROWS_AS(combined_field(ops, 3), StructuralError);
  ch.gamma = -1.0;
  CHECK_THROWS_AS(build_collapse_operator(s, ch, CollapseSettings{}), std::domain_error);
}

TEST_CASE("branches split by the sign of the centred potential", "[collapse]") {
  const HilbertState s = normalize(
      HilbertState(FiniteBasis{{"a", "b", "c", "d"}}, (ComplexVector(4) << 1.0, 1.0, 1.0, 1.0).finished()));
  RealVector v(4);
  v << 4.0, 0.0, 0.0, 0.0;  // mean 1: a is interacting
  BranchDecomposition b = branch_decompose(s, v);
  CHECK(b.interacting == std::vector<bool>{true, false, false, false});
  CHECK(b.weight_interacting == Approx(0.25));
  CHECK(b.weight_interacting + b.weight_noninteracting == Approx(1.0));
  v << -4.0, 0.0, 0.0, 0.0;  // attractive: the deep point is interacting
  b = branch_decompose(s, v);
  CHECK(b.interacting == std::vector<bool>{true, false, false, false});
  v << 1.0, 1.0, 1.0, 1.0;  // no point differs from the mean
  b = branch_decompose(s, v);
  CHECK(b.weight_interacting == 0.0);
  CHECK(b.weight_noninteracting == Approx(1.0));
  CHECK_THROWS_AS(branch_decompose(s, LinearOperator(Momentum{})), UnsupportedError);
  const HilbertState r = restrict_to(s, {true, false, true, false});
  CHECK(norm_squared(r) == Approx(0.5));
}

TEST_CASE("characteristic time of a 100 eV interaction", "[collapse]") {
  const double oracle = 1.054571817e-34 / (100.0 * 1.602176634e-19);
  CHECK(characteristic_time_ev(100.0) == Approx(oracle).epsilon(1e-14));
  CHECK(characteristic_time_ev(100.0) > 1e-18);
  CHECK(characteristic_time_ev(100.0) < 1e-17);
  CHECK(characteristic_time(4.0) == 0.25);
  CHECK_THROWS_AS(characteristic_time(0.0), std::domain_error);
}
