#include <catch2/catch.hpp>

#include "icollapse/icollapse.hpp"

using namespace icollapse;

TEST_CASE("symmetric basis change is a unitary involution", "[experiments]") {
  const Eigen::Matrix4cd u = symmetric_basis_change();
  CHECK((u.adjoint() * u - Eigen::Matrix4cd::Identity()).norm() < 1e-15);
  CHECK((u * u - Eigen::Matrix4cd::Identity()).norm() < 1e-15);
  CHECK(eraser_labels().size() == 4);
}

TEST_CASE("unkicked eraser has no cross outcomes", "[experiments]") {
  EraserConfig cfg;
  cfg.epsilon = 0.0;
  cfg.n_traj = 500;
  cfg.mode = KickMode::Coherent;
  const EraserResult r = eraser_run(cfg);
  CHECK(r.basis_change_residual < 1e-15);
  CHECK(r.cross_probability < 1e-30);
  CHECK(r.counts[1] + r.counts[2] == 0);
  CHECK(r.correlation(0, 0) == Approx(0.5));
  CHECK(r.correlation(1, 1) == Approx(0.5));
}

TEST_CASE("sign kicks give cross probability e^2 / (1 + e^2)", "[experiments]") {
  // psi = (1+e)|II> + (1-e)|OO> up to norm; each cross amplitude is e / sqrt(2)
  for (KickMode mode : {KickMode::Coherent, KickMode::RandomSign}) {
    for (double e : {0.01, 0.05, 0.2}) {
      EraserConfig cfg;
      cfg.epsilon = e;
      cfg.n_traj = 200;
      cfg.mode = mode;
      const EraserResult r = eraser_run(cfg);
      CHECK(r.cross_probability == Approx(e * e / (1.0 + e * e)).epsilon(1e-12));
      CHECK(r.cross_stderr < 1e-12);
      CHECK(r.correlation.sum() == Approx(1.0));
      // the two cross outcomes are equally likely
      CHECK(r.correlation(0, 1) == Approx(r.correlation(1, 0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("kick application and outcome probabilities", "[experiments]") {
  const Eigen::Vector4cd psi = eraser_initial(EraserConfig{});
  const Eigen::Vector4cd k = apply_eraser_kick(psi, Complex(0.1, 0.0));
  CHECK(std::abs(k[0] - 1.1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(k[3] - 0.9 / std::sqrt(2.0)) < 1e-15);
  CHECK(k[1] == Complex(0.0));
  const auto p = symmetric_outcome_probabilities(k);
  CHECK(p[0] + p[1] + p[2] + p[3] == Approx(1.0));
  CHECK(p[1] == Approx(0.005 / 1.01));
}

TEST_CASE("Gaussian kicks approach e^2 for small e", "[experiments]") {
  EraserConfig cfg;
  cfg.epsilon = 0.02;
  cfg.n_traj = 20000;
  cfg.mode = KickMode::Gaussian;
  cfg.seed = 9;
  const EraserResult r = eraser_run(cfg);
  CHECK(std::abs(r.cross_probability - 4e-4) < 4.0 * r.cross_stderr + 1e-6);
}

TEST_CASE("eraser sweep slope and resolved SDE scaling", "[experiments]") {
  EraserConfig cfg;
  cfg.n_traj = 100;
  cfg.mode = KickMode::Coherent;
  const EraserSweep s = eraser_sweep(cfg, {0.01, 0.02, 0.05});
  CHECK(s.log_fit.slope == Approx(2.0).margin(0.01));

  cfg.mode = KickMode::FullSde;
  cfg.n_traj = 2000;
  cfg.epsilon = 0.05;
  const double small = eraser_run(cfg).cross_probability;
  cfg.epsilon = 0.1;
  const double large = eraser_run(cfg).cross_probability;
  CHECK(small > 0.0);
  CHECK(large / small > 3.0);
  CHECK(large / small < 5.0);
  CHECK(std::string(to_string(KickMode::FullSde)) == "full_sde");
}

TEST_CASE("eraser bound at the nonrelativistic limit", "[experiments]") {
  const EraserBound b = eraser_bound_check(1e-3);
  CHECK(b.probability == 1e-6);
  CHECK(b.nonrelativistic);
  CHECK(b.within_bound);
  const EraserBound far = eraser_bound_check(0.01);
  CHECK_FALSE(far.nonrelativistic);
  CHECK_FALSE(far.within_bound);
  CHECK_THROWS_AS(eraser_bound_check(1.0), std::domain_error);
}

TEST_CASE("eraser validation", "[experiments]") {
  EraserConfig cfg;
  cfg.epsilon = 0.5;
  CHECK_THROWS_AS(eraser_run(cfg), std::domain_error);
  cfg.epsilon = 0.1;
  cfg.amplitude_interacting = 0.9;
  CHECK_THROWS_AS(eraser_run(cfg), std::domain_error);
  cfg.amplitude_interacting = 1.0 / std::sqrt(2.0);
  cfg.n_traj = 0;
  CHECK_THROWS_AS(eraser_run(cfg), std::domain_error);
}

TEST_CASE("thermal estimate for air at 273 K", "[experiments]") {
  const ThermalEstimate e = thermal_estimate(ThermalInput{});
  const double kt = 1.380649e-23 * 273.15;
  const double mc2 = 5e-26 * 2.99792458e8 * 2.99792458e8;
  const double ratio = kt / mc2;
  const double rate = 460.0 / 4.6e-8;
  const double per_year = ratio * ratio * rate * 3.16e7 * 2.5e25 * kt;
  CHECK(e.interaction_energy == Approx(kt));
  CHECK(e.rest_energy == Approx(mc2));
  CHECK(e.ratio == Approx(ratio));
  CHECK(e.collision_rate == Approx(1e10));
  CHECK(e.fractional_rate == Approx(ratio * ratio * 1e10));
  CHECK(e.joules_per_year == Approx(per_year));
  // orders of magnitude: 1e-12, 1e-14 per second, a few hundredths of a joule per year
  CHECK(e.ratio > 0.5e-12);
  CHECK(e.ratio < 2e-12);
  CHECK(e.fractional_rate > 0.5e-14);
  CHECK(e.fractional_rate < 2e-14);
  CHECK(e.joules_per_year > 0.015);
  CHECK(e.joules_per_year < 0.06);
}

TEST_CASE("thermal overrides and validation", "[experiments]") {
  ThermalInput in;
  in.collision_rate = 5.0;
  in.interaction_energy = 2.0;
  in.thermal_energy = 3.0;
  const ThermalEstimate e = thermal_estimate(in);
  CHECK(e.collision_rate == 5.0);
  CHECK(e.interaction_energy == 2.0);
  CHECK(e.thermal_energy == 3.0);
  in.mass = 0.0;
  CHECK_THROWS_AS(thermal_estimate(in), std::domain_error);
  ThermalInput neg;
  neg.collision_rate = -1.0;
  CHECK_THROWS_AS(thermal_estimate(neg), std::domain_error);
}
