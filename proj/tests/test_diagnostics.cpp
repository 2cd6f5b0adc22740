#include <catch2/catch.hpp>

#include <random>

#include "icollapse/icollapse.hpp"

using namespace icollapse;

namespace {

GridModel pair_model(int dims, int points, double extent) {
  GridModel m;
  m.grid = {dims, points, extent};
  m.particles = {{"a", 1.0, 0.0}, {"b", 2.0, 0.0}};
  m.pairs = {PairPotential{GaussianWell{-1.0, 1.5}, 0, 1}};
  m.c = 3.0;
  return m;
}

HilbertState packet(const Dynamics& dyn) {
  return two_body_gaussian(std::get<GridBasis>(*dyn.basis()), TwoBodyPacket{{0.0}, {0.2}, 1.0, {-1.5}, {0.8}, 1.0, 0.0});
}

RealVector random_field(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("identity holds exactly for operators commuting with V", "[diagnostics]") {
  const Dynamics dyn(pair_model(1, 32, 8.0), Scheme::SplitStepSpectral, 0.01);
  const HilbertState s = packet(dyn);
  const RealVector v = random_field(s.size(), 1) * 0.3;
  const Complex dxi(0.07, -0.04);
  for (const LinearOperator& q :
       {LinearOperator::identity(s.size()), LinearOperator::diagonal(random_field(s.size(), 2))}) {
    const ProportionalityResidual r = pointwise_proportionality_check(s, v, dxi, 0.01, q);
    CHECK(r.absolute < 1e-15);
    CHECK(r.rhs_norm > 0.0);
  }
  // constant V commutes with every Q
  const ProportionalityResidual p = pointwise_proportionality_check(
      s, RealVector::Constant(s.size(), 0.4), dxi, 0.01, Momentum{0, DerivativeScheme::Stencil});
  CHECK(p.absolute < 1e-14);
}

TEST_CASE("identity residual is nonzero for a noncommuting field", "[diagnostics]") {
  const Dynamics dyn(pair_model(1, 32, 8.0), Scheme::SplitStepSpectral, 0.01);
  const HilbertState s = packet(dyn);
  const ProportionalityResidual r = pointwise_proportionality_check(
      s, random_field(s.size(), 3), Complex(0.1, 0.0), 0.01, Momentum{0, DerivativeScheme::Spectral});
  CHECK(r.relative > 1e-3);
  CHECK_THROWS_AS(pointwise_proportionality_check(s, RealVector::Zero(3), Complex(0.1, 0.0), 0.01, Momentum{}),
                  StructuralError);
}

TEST_CASE("translation-invariant collapse conserves momentum on a spectral grid", "[diagnostics]") {
  const Dynamics dyn(pair_model(1, 256, 24.0), Scheme::SplitStepSpectral, 0.01);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.n_steps = 5;
  cfg.gain = 30.0;
  ConservationOptions opts;
  opts.residual_scheme = DerivativeScheme::Spectral;
  const ConservationRun run = run_conservation(packet(dyn), dyn, cfg, 8, opts);
  REQUIRE(run.report.residuals.size() == 5);
  CHECK(run.report.max_residual() < 1e-10);
  CHECK(run.report.cumulative_drift >= run.report.drift);
  CHECK(run.report.drift < 1e-10);
  CHECK(run.quantity.size() == 6);
  CHECK(run.report.spacing == Approx(48.0 / 256));
  CHECK(run.report.gain == 30.0);
}

TEST_CASE("residual stride selects steps 1, 1 + k, ...", "[diagnostics]") {
  const Dynamics dyn(pair_model(1, 32, 8.0), Scheme::SplitStepSpectral, 0.01);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.n_steps = 7;
  ConservationOptions opts;
  opts.residual_every = 3;
  const ConservationRun run = run_conservation(packet(dyn), dyn, cfg, 8, opts);
  CHECK(run.report.residual_steps == std::vector<long>{1, 4, 7});
  opts.residual_every = 0;
  CHECK_THROWS_AS(run_conservation(packet(dyn), dyn, cfg, 8, opts), std::domain_error);
}

TEST_CASE("energy deviation terms", "[diagnostics]") {
  const Dynamics dyn(pair_model(1, 64, 10.0), Scheme::SplitStepSpectral, 0.01);
  const HilbertState s = packet(dyn);
  const auto ops = dyn.collapse_operators(s, 10.0);
  const Complex dxi(0.05, 0.02);
  const EnergyDeviationTerms t = energy_deviation_terms(s, dyn, ops, dxi);
  CHECK(t.positive_definite_term > 0.0);
  CHECK(std::abs(t.gradient_term + t.laplacian_term - t.middle_coefficient * dxi) < 1e-14);
  // oracle for the positive term: sum_p (1/2m_p) int |psi|^2 |grad_p (sV)|^2 dt
  const auto& ch = std::get<GridChannel>(dyn.channels()[0]);
  const double s2 = ops[0].strength() * ops[0].strength();
  const RealVector rho = s.amplitudes().cwiseAbs2();
  const double oracle = (0.5 + 0.25) * s2 * rho.dot(ch.fields.gradient_j[0].cwiseAbs2()) * s.weight() * 0.01;
  CHECK(t.positive_definite_term == Approx(oracle).epsilon(1e-12));
  const auto zero = dyn.collapse_operators(s, 0.0);
  const EnergyDeviationTerms z = energy_deviation_terms(s, dyn, zero, dxi);
  CHECK(z.positive_definite_term == 0.0);
  CHECK(std::abs(z.middle_coefficient) == 0.0);
}

TEST_CASE("energy terms on the middle coefficient match the kinetic commutator", "[diagnostics]") {
  // [T, f] psi = -sum_p (1/2m_p) (lap_p f psi + 2 grad_p f . grad_p psi)
  const Dynamics dyn(pair_model(1, 64, 10.0), Scheme::SplitStepSpectral, 0.01);
  const HilbertState s = packet(dyn);
  const auto ops = dyn.collapse_operators(s, 10.0);
  const EnergyDeviationTerms t = energy_deviation_terms(s, dyn, ops, Complex(1.0, 0.0));
  const ComplexVector f = ops[0].field.cast<Complex>();
  const ComplexVector tv = dyn.apply_kinetic(s.with_amplitudes(f.cwiseProduct(s.amplitudes()))).amplitudes();
  const ComplexVector vt = f.cwiseProduct(dyn.apply_kinetic(s).amplitudes());
  const Complex commutator = inner(s, s.with_amplitudes(tv - vt));
  CHECK(std::abs(t.middle_coefficient - commutator) < 1e-8 * std::abs(commutator));
}

TEST_CASE("relativistic benchmark sizes", "[diagnostics]") {
  const DeviationBenchmark b = deviation_ratio_benchmark(0.5, 3.0, 10.0);
  CHECK(b.ratio == Approx(0.5 / 300.0));
  CHECK(b.first_order == Approx(1.5 * b.ratio));
  CHECK(b.second_order == Approx(2.5 * b.ratio * b.ratio));
  CHECK(b.radiative == Approx(std::sqrt(1.0 / 3.0) / 10.0 * b.ratio));
  CHECK(b.antiparticle == Approx(b.ratio * b.ratio));
  CHECK_THROWS_AS(deviation_ratio_benchmark(-1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("drift summaries of a recorded trajectory", "[diagnostics]") {
  TrajectoryRecord rec;
  for (double p : {1.0, 1.5, 0.5, 2.0}) {
    ExpectationSample e;
    e.total.momentum = {p};
    rec.expectations.push_back(e);
  }
  const ConservationReport r = conserved_drift(rec, ConservedQuantity::Momentum);
  CHECK(r.drift == Approx(1.0));
  CHECK(r.relative_drift == Approx(1.0));
  CHECK(r.cumulative_drift == Approx(3.0));
  CHECK_THROWS_AS(conserved_drift(TrajectoryRecord{}, ConservedQuantity::Momentum), std::invalid_argument);
  CHECK(refinement_ratio(4.0, 1.0) == 4.0);
  CHECK(refinement_ratio(0.0, 0.0) == 1.0);
  CHECK(std::isinf(refinement_ratio(1.0, 0.0)));
  CHECK(std::string(to_string(ConservedQuantity::AngularMomentumZ)) == "angular_momentum_z");
}
