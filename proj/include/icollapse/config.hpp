#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "icollapse/diagnostics.hpp"
#include "icollapse/experiments.hpp"

namespace icollapse {

using Json = nlohmann::json;

enum class ScenarioKind { FreePacket, TwoLevelCollapse, GridScattering, Eraser, WalkScan, ConservationSuite, Thermal };
enum class Backend { Grid, Finite };

inline const std::vector<std::pair<ScenarioKind, std::string>>& scenario_names() {
  static const std::vector<std::pair<ScenarioKind, std::string>> t{
      {ScenarioKind::FreePacket, "free_packet"},         {ScenarioKind::TwoLevelCollapse, "two_level_collapse"},
      {ScenarioKind::GridScattering, "grid_scattering"}, {ScenarioKind::Eraser, "eraser"},
      {ScenarioKind::WalkScan, "walk_scan"},             {ScenarioKind::ConservationSuite, "conservation_suite"},
      {ScenarioKind::Thermal, "thermal"}};
  return t;
}
inline const std::vector<std::pair<Backend, std::string>>& backend_names() {
  static const std::vector<std::pair<Backend, std::string>> t{{Backend::Grid, "grid"}, {Backend::Finite, "finite"}};
  return t;
}
inline const std::vector<std::pair<Scheme, std::string>>& scheme_names() {
  static const std::vector<std::pair<Scheme, std::string>> t{{Scheme::SplitStepSpectral, "split_step_spectral"},
                                                             {Scheme::CrankNicolsonStencil, "crank_nicolson_stencil"}};
  return t;
}
inline const std::vector<std::pair<StepMode, std::string>>& step_mode_names() {
  static const std::vector<std::pair<StepMode, std::string>> t{{StepMode::Constant, "constant"},
                                                               {StepMode::Sampled, "sampled"}};
  return t;
}
inline const std::vector<std::pair<KickMode, std::string>>& kick_mode_names() {
  static const std::vector<std::pair<KickMode, std::string>> t{{KickMode::Coherent, "coherent"},
                                                               {KickMode::RandomSign, "random_sign"},
                                                               {KickMode::Gaussian, "gaussian"},
                                                               {KickMode::FullSde, "full_sde"}};
  return t;
}
inline const std::vector<std::pair<ConservedQuantity, std::string>>& quantity_names() {
  static const std::vector<std::pair<ConservedQuantity, std::string>> t{
      {ConservedQuantity::Momentum, "momentum"}, {ConservedQuantity::AngularMomentumZ, "angular_momentum_z"}};
  return t;
}

template <class E>
std::string name_of(const std::vector<std::pair<E, std::string>>& table, E value) {
  for (const auto& [e, s] : table)
    if (e == value) return s;
  return "?";
}

inline std::string scenario_name(ScenarioKind k) { return name_of(scenario_names(), k); }

// ---------------------------------------------------------------------------
// Sections

struct PotentialConfig {
  std::string form = "gaussian_well";  // or "soft_coulomb"
  double depth = -1.0;                  // gaussian_well
  double width = 1.0;                   // gaussian_well
  double strength = 1.0;                // soft_coulomb
  double softening = 1.0;               // soft_coulomb

  PairPotential pair(int j = 0, int k = 1) const {
    PairPotential p;
    if (form == "soft_coulomb")
      p.form = SoftCoulomb{strength, softening};
    else
      p.form = GaussianWell{depth, width};
    p.j = j;
    p.k = k;
    return p;
  }
  bool operator==(const PotentialConfig&) const = default;
};

struct PhysicsConfig {
  double c = 1.0;
  double kappa = 1.0;
  std::vector<ParticleSpec> particles{{"a", 1.0, 0.0}};
  PotentialConfig potential;
  bool operator==(const PhysicsConfig&) const = default;
};

/// Initial grid state: "product" is one Gaussian per axis, "two_body" a
/// centre-of-mass times relative packet.
struct InitialConfig {
  std::string kind = "product";
  std::vector<double> center{0.0};
  std::vector<double> width{1.0};
  std::vector<double> momentum{0.0};
  TwoBodyPacket packet;

  bool operator==(const InitialConfig& o) const {
    return kind == o.kind && center == o.center && width == o.width && momentum == o.momentum &&
           packet.cm_center == o.packet.cm_center && packet.cm_momentum == o.packet.cm_momentum &&
           packet.cm_width == o.packet.cm_width && packet.rel_center == o.packet.rel_center &&
           packet.rel_momentum == o.packet.rel_momentum && packet.rel_width == o.packet.rel_width &&
           packet.rel_chirp == o.packet.rel_chirp;
  }
};

/// Two-level model {I, O} with H = 0 and one channel of potential gap `gap`
/// on I; the pair masses are mass_sum / 2 each.
struct TwoLevelConfig {
  double initial_weight = 0.5;
  double gap = 1.0;
  double gamma = 1.0;
  double mass_sum = 1.0;
  bool operator==(const TwoLevelConfig&) const = default;
};

struct EnsembleConfig {
  long n_traj = 1;
  std::uint64_t master_seed = 1;
  bool operator==(const EnsembleConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool wants(const std::string& f) const { return std::find(formats.begin(), formats.end(), f) != formats.end(); }
  bool operator==(const OutputConfig&) const = default;
};

struct WalkConfig {
  double step_scale = 0.05;
  std::vector<double> starts{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  StepMode mode = StepMode::Constant;
  std::optional<double> theta;  // absent: s^2 / 4
  bool operator==(const WalkConfig&) const = default;
};

struct EraserSection {
  std::vector<double> epsilons{0.02, 0.05, 0.1};
  KickMode mode = KickMode::RandomSign;
  double amplitude_interacting = 1.0 / std::sqrt(2.0);
  double sde_dt = 0.01;
  long sde_steps = 100;
  double bound_ratio = kEraserRatioLimit;
  bool operator==(const EraserSection&) const = default;
};

struct ThermalSection {
  ThermalInput input;
  double step_ratio = 1e-3;
  double step_floor = 1.0;
  double characteristic_energy_ev = 100.0;
  bool operator==(const ThermalSection& o) const {
    const ThermalInput &a = input, &b = o.input;
    return a.temperature == b.temperature && a.mass == b.mass && a.speed == b.speed && a.separation == b.separation &&
           a.particle_count == b.particle_count && a.collision_rate == b.collision_rate &&
           a.interaction_energy == b.interaction_energy && a.thermal_energy == b.thermal_energy &&
           step_ratio == o.step_ratio && step_floor == o.step_floor &&
           characteristic_energy_ev == o.characteristic_energy_ev;
  }
};

/// Refinement study: the grid section is the coarse grid, the fine grid has
/// twice the points. The spectral variant reruns with the split-step scheme
/// on its own grid and initial state.
struct ConservationConfig {
  ConservedQuantity quantity = ConservedQuantity::Momentum;
  std::vector<double> kappas{1.0, 100.0};
  long residual_every = 1;
  double ratio_min = 3.0;
  double ratio_max = 5.0;
  double spectral_tolerance = 1e-10;
  long spectral_steps = 10;
  GridSpec spectral_grid{1, 256, 16.0};
  InitialConfig spectral_initial;
  bool operator==(const ConservationConfig&) const = default;
};

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::FreePacket;
  Backend backend = Backend::Grid;
  PhysicsConfig physics;
  GridSpec grid{1, 256, 20.0};
  InitialConfig initial;
  TwoLevelConfig two_level;
  IntegratorConfig numerics;
  EnsembleConfig ensemble;
  OutputConfig output;
  WalkConfig walk;
  EraserSection eraser;
  ThermalSection thermal;
  ConservationConfig conservation;

  bool operator==(const RunConfig&) const = default;
};

inline Backend default_backend(ScenarioKind k) {
  return k == ScenarioKind::TwoLevelCollapse || k == ScenarioKind::Eraser ? Backend::Finite : Backend::Grid;
}

// ---------------------------------------------------------------------------
// Strict reader

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so anything
/// left over can be reported by its dotted path.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }

  const Json* find(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(const std::string& k, T& out) {
    if (const Json* v = find(k)) out = convert<T>(*v, key(k));
  }

  template <class T>
  T require(const std::string& k) {
    const Json* v = find(k);
    if (!v) throw ConfigError(key(k), "missing required key");
    return convert<T>(*v, key(k));
  }

  template <class E>
  void get_enum(const std::string& k, const std::vector<std::pair<E, std::string>>& table, E& out) {
    if (const Json* v = find(k)) out = to_enum(*v, key(k), table);
  }

  Section child(const std::string& k) {
    const Json* v = find(k);
    static const Json empty = Json::object();
    return Section(v ? *v : empty, key(k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

  template <class E>
  static E to_enum(const Json& v, const std::string& key, const std::vector<std::pair<E, std::string>>& table) {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    const std::string s = v.get<std::string>();
    for (const auto& [e, name] : table)
      if (name == s) return e;
    std::string options;
    for (const auto& [e, name] : table) options += (options.empty() ? "" : ", ") + name;
    throw ConfigError(key, "unknown value '" + s + "' (expected one of " + options + ")");
  }

  template <class T>
  static T convert(const Json& v, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(key, "expected a non-negative integer");
      return v.get<T>();
    } else {
      // std::vector<double>
      if (!v.is_array()) throw ConfigError(key, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], key + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_grid(Section s, GridSpec& g) {
  s.get("dims", g.dims);
  s.get("points", g.points_per_axis);
  s.get("extent", g.extent);
  s.finish();
}

inline void read_initial(Section s, InitialConfig& i) {
  s.get("kind", i.kind);
  if (i.kind == "product") {
    s.get("center", i.center);
    s.get("width", i.width);
    s.get("momentum", i.momentum);
  } else if (i.kind == "two_body") {
    s.get("cm_center", i.packet.cm_center);
    s.get("cm_momentum", i.packet.cm_momentum);
    s.get("cm_width", i.packet.cm_width);
    s.get("rel_center", i.packet.rel_center);
    s.get("rel_momentum", i.packet.rel_momentum);
    s.get("rel_width", i.packet.rel_width);
    s.get("rel_chirp", i.packet.rel_chirp);
  } else {
    throw ConfigError(s.key("kind"), "unknown value '" + i.kind + "' (expected product or two_body)");
  }
  s.finish();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Validation

inline void config_require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

inline void validate_initial(const InitialConfig& i, const GridSpec& g, std::size_t particles, const std::string& key) {
  const auto axes = static_cast<std::size_t>(g.dims) * particles;
  const auto dims = static_cast<std::size_t>(g.dims);
  if (i.kind == "product") {
    config_require(i.center.size() == axes, key + ".center", "needs one entry per particle coordinate");
    config_require(i.width.size() == axes, key + ".width", "needs one entry per particle coordinate");
    config_require(i.momentum.size() == axes, key + ".momentum", "needs one entry per particle coordinate");
    for (double w : i.width) config_require(w > 0.0, key + ".width", "widths must be positive");
  } else {
    config_require(particles == 2, key + ".kind", "two_body needs exactly two particles");
    config_require(i.packet.cm_center.size() == dims, key + ".cm_center", "needs one entry per dimension");
    config_require(i.packet.cm_momentum.size() == dims, key + ".cm_momentum", "needs one entry per dimension");
    config_require(i.packet.rel_center.size() == dims, key + ".rel_center", "needs one entry per dimension");
    config_require(i.packet.rel_momentum.size() == dims, key + ".rel_momentum", "needs one entry per dimension");
    config_require(i.packet.cm_width > 0.0, key + ".cm_width", "must be positive");
    config_require(i.packet.rel_width > 0.0, key + ".rel_width", "must be positive");
  }
}

inline void validate_grid(const GridSpec& g, const std::string& key) {
  config_require(g.dims == 1 || g.dims == 2, key + ".dims", "must be 1 or 2");
  const int n = g.points_per_axis;
  config_require(n >= 8 && (n & (n - 1)) == 0, key + ".points", "must be a power of two >= 8");
  config_require(g.extent > 0.0, key + ".extent", "must be positive");
}

inline void check_stencil_dt(const RunConfig& c, const GridSpec& g) {
  if (c.numerics.scheme != Scheme::CrankNicolsonStencil) return;
  const double bound = stencil_dt_bound(g, c.physics.particles);
  if (c.numerics.dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "exceeds the stencil stability bound h^2 min(m) / 4 = " << bound << " for " << g.points_per_axis
       << " points per axis";
    throw ConfigError("numerics.dt", os.str());
  }
}

inline void validate(const RunConfig& c) {
  const Backend want = default_backend(c.scenario);
  const bool grid_only = c.scenario == ScenarioKind::FreePacket || c.scenario == ScenarioKind::GridScattering ||
                         c.scenario == ScenarioKind::ConservationSuite;
  if (grid_only || c.scenario == ScenarioKind::TwoLevelCollapse || c.scenario == ScenarioKind::Eraser)
    config_require(c.backend == want, "backend", "scenario " + scenario_name(c.scenario) + " needs the " +
                                              name_of(backend_names(), want) + " backend");

  const PhysicsConfig& p = c.physics;
  config_require(p.c > 0.0, "physics.c", "must be positive");
  config_require(p.kappa >= 0.0, "physics.kappa", "must be non-negative");
  for (std::size_t i = 0; i < p.particles.size(); ++i) {
    const std::string k = "physics.particles[" + std::to_string(i) + "]";
    config_require(p.particles[i].mass > 0.0, k + ".mass", "must be positive");
    config_require(!p.particles[i].label.empty(), k + ".label", "must not be empty");
  }
  config_require(p.potential.form == "gaussian_well" || p.potential.form == "soft_coulomb", "physics.potential.form",
          "must be gaussian_well or soft_coulomb");
  if (p.potential.form == "gaussian_well")
    config_require(p.potential.width > 0.0, "physics.potential.width", "must be positive");
  else
    config_require(p.potential.softening > 0.0, "physics.potential.softening", "must be positive");

  const IntegratorConfig& n = c.numerics;
  config_require(n.dt > 0.0, "numerics.dt", "must be positive");
  config_require(n.n_steps >= 0, "numerics.n_steps", "must be non-negative");
  config_require(n.record_every >= 1, "numerics.record_every", "must be at least 1");
  config_require(n.theta_abs > 0.0 && n.theta_abs < 0.5, "numerics.theta_abs", "must lie in (0, 0.5)");
  config_require(c.ensemble.n_traj >= 1, "ensemble.n_traj", "must be at least 1");
  config_require(!c.output.directory.empty(), "output.directory", "must not be empty");
  for (const auto& f : c.output.formats) config_require(f == "csv" || f == "json", "output.formats", "unknown format " + f);

  switch (c.scenario) {
    case ScenarioKind::FreePacket:
    case ScenarioKind::GridScattering:
    case ScenarioKind::ConservationSuite: {
      validate_grid(c.grid, "grid");
      config_require(!p.particles.empty() && p.particles.size() <= static_cast<std::size_t>(kMaxGridParticles),
              "physics.particles", "grid backend supports 1 to 3 particles");
      if (c.scenario != ScenarioKind::FreePacket)
        config_require(p.particles.size() == 2, "physics.particles", "scenario needs exactly two particles");
      validate_initial(c.initial, c.grid, p.particles.size(), "initial");
      check_stencil_dt(c, c.grid);
      if (c.scenario == ScenarioKind::ConservationSuite) {
        const ConservationConfig& s = c.conservation;
        GridSpec fine = c.grid;
        fine.points_per_axis *= 2;
        check_stencil_dt(c, fine);
        config_require(!s.kappas.empty(), "conservation.kappas", "must not be empty");
        for (double k : s.kappas) config_require(k >= 0.0, "conservation.kappas", "must be non-negative");
        config_require(s.residual_every >= 1, "conservation.residual_every", "must be at least 1");
        config_require(s.ratio_min > 0.0 && s.ratio_min < s.ratio_max, "conservation.ratio_min", "must lie in (0, ratio_max)");
        config_require(s.spectral_tolerance > 0.0, "conservation.spectral_tolerance", "must be positive");
        config_require(s.spectral_steps >= 1, "conservation.spectral_steps", "must be at least 1");
        if (s.quantity == ConservedQuantity::AngularMomentumZ)
          config_require(c.grid.dims == 2, "conservation.quantity", "angular_momentum_z needs a 2-D grid");
        validate_grid(s.spectral_grid, "conservation.spectral_grid");
        config_require(s.spectral_grid.dims == c.grid.dims, "conservation.spectral_grid.dims", "must match grid.dims");
        validate_initial(s.spectral_initial, s.spectral_grid, p.particles.size(), "conservation.spectral_initial");
      }
      break;
    }
    case ScenarioKind::TwoLevelCollapse: {
      const TwoLevelConfig& t = c.two_level;
      config_require(t.initial_weight >= 0.0 && t.initial_weight <= 1.0, "two_level.initial_weight", "must lie in [0, 1]");
      config_require(t.gap != 0.0, "two_level.gap", "must be non-zero");
      config_require(t.gamma >= 0.0, "two_level.gamma", "must be non-negative");
      config_require(t.mass_sum > 0.0, "two_level.mass_sum", "must be positive");
      break;
    }
    case ScenarioKind::Eraser: {
      const EraserSection& e = c.eraser;
      config_require(!e.epsilons.empty(), "eraser.epsilons", "must not be empty");
      for (double x : e.epsilons) config_require(x >= 0.0 && x < 0.5, "eraser.epsilons", "each epsilon must lie in [0, 0.5)");
      config_require(e.amplitude_interacting >= 0.0 && e.amplitude_interacting <= 1.0, "eraser.amplitude_interacting",
              "must lie in [0, 1]");
      config_require(e.sde_dt > 0.0, "eraser.sde_dt", "must be positive");
      config_require(e.sde_steps >= 1, "eraser.sde_steps", "must be at least 1");
      config_require(e.bound_ratio >= 0.0 && e.bound_ratio < 1.0, "eraser.bound_ratio", "must lie in [0, 1)");
      break;
    }
    case ScenarioKind::WalkScan: {
      const WalkConfig& w = c.walk;
      config_require(w.step_scale > 0.0 && w.step_scale <= 1.0, "walk.step_scale", "must lie in (0, 1]");
      config_require(!w.starts.empty(), "walk.starts", "must not be empty");
      for (double x : w.starts) config_require(x > 0.0 && x < 1.0, "walk.starts", "each start must lie in (0, 1)");
      if (w.theta) config_require(*w.theta > 0.0 && *w.theta < 0.5, "walk.theta", "must lie in (0, 0.5)");
      break;
    }
    case ScenarioKind::Thermal: {
      const ThermalInput& t = c.thermal.input;
      config_require(t.temperature >= 0.0, "thermal.temperature", "must be non-negative");
      config_require(t.mass > 0.0, "thermal.mass", "must be positive");
      config_require(t.speed > 0.0, "thermal.speed", "must be positive");
      config_require(t.separation > 0.0, "thermal.separation", "must be positive");
      config_require(t.particle_count > 0.0, "thermal.particle_count", "must be positive");
      config_require(t.collision_rate >= 0.0, "thermal.collision_rate", "must be non-negative");
      config_require(t.interaction_energy >= 0.0, "thermal.interaction_energy", "must be non-negative");
      config_require(t.thermal_energy >= 0.0, "thermal.thermal_energy", "must be non-negative");
      config_require(c.thermal.step_ratio > 0.0 && c.thermal.step_ratio <= 1.0, "thermal.step_ratio", "must lie in (0, 1]");
      config_require(c.thermal.step_floor > 0.0 && c.thermal.step_floor <= 1.0, "thermal.step_floor", "must lie in (0, 1]");
      config_require(c.thermal.characteristic_energy_ev > 0.0, "thermal.characteristic_energy_ev", "must be positive");
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Parsing and serialisation

inline RunConfig config_from_json(const Json& j) {
  RunConfig c;
  detail::Section root(j, "");
  c.scenario = detail::Section::to_enum(*[&] {
    const Json* v = root.find("scenario");
    if (!v) throw ConfigError("scenario", "missing required key");
    return v;
  }(), "scenario", scenario_names());
  c.backend = default_backend(c.scenario);
  root.get_enum("backend", backend_names(), c.backend);

  {
    auto s = root.child("physics");
    s.get("c", c.physics.c);
    s.get("kappa", c.physics.kappa);
    if (const Json* ps = s.find("particles")) {
      if (!ps->is_array()) throw ConfigError(s.key("particles"), "expected an array");
      c.physics.particles.clear();
      for (std::size_t i = 0; i < ps->size(); ++i) {
        detail::Section e((*ps)[i], s.key("particles[" + std::to_string(i) + "]"));
        ParticleSpec p;
        p.label = "p" + std::to_string(i);
        e.get("label", p.label);
        e.get("mass", p.mass);
        e.get("charge", p.charge);
        e.finish();
        c.physics.particles.push_back(p);
      }
    }
    auto pot = s.child("potential");
    pot.get("form", c.physics.potential.form);
    if (c.physics.potential.form == "gaussian_well") {
      pot.get("depth", c.physics.potential.depth);
      pot.get("width", c.physics.potential.width);
    } else if (c.physics.potential.form == "soft_coulomb") {
      pot.get("strength", c.physics.potential.strength);
      pot.get("softening", c.physics.potential.softening);
    } else {
      throw ConfigError(pot.key("form"), "unknown value '" + c.physics.potential.form +
                                             "' (expected gaussian_well or soft_coulomb)");
    }
    pot.finish();
    s.finish();
  }
  detail::read_grid(root.child("grid"), c.grid);
  detail::read_initial(root.child("initial"), c.initial);
  {
    auto s = root.child("two_level");
    s.get("initial_weight", c.two_level.initial_weight);
    s.get("gap", c.two_level.gap);
    s.get("gamma", c.two_level.gamma);
    s.get("mass_sum", c.two_level.mass_sum);
    s.finish();
  }
  {
    auto s = root.child("numerics");
    IntegratorConfig& n = c.numerics;
    s.get("dt", n.dt);
    s.get("n_steps", n.n_steps);
    s.get_enum("scheme", scheme_names(), n.scheme);
    s.get("renormalize_each_step", n.renormalize_each_step);
    s.get("record_every", n.record_every);
    s.get("theta_abs", n.theta_abs);
    s.get("real_noise", n.real_noise);
    s.get("stop_on_absorption", n.stop_on_absorption);
    s.get("record_expectations", n.record_expectations);
    s.finish();
  }
  {
    auto s = root.child("ensemble");
    s.get("n_traj", c.ensemble.n_traj);
    s.get("master_seed", c.ensemble.master_seed);
    s.finish();
  }
  {
    auto s = root.child("output");
    s.get("directory", c.output.directory);
    s.get("formats", c.output.formats);
    s.finish();
  }
  {
    auto s = root.child("walk");
    s.get("step_scale", c.walk.step_scale);
    s.get("starts", c.walk.starts);
    s.get_enum("mode", step_mode_names(), c.walk.mode);
    if (const Json* v = s.find("theta")) c.walk.theta = detail::Section::convert<double>(*v, s.key("theta"));
    s.finish();
  }
  {
    auto s = root.child("eraser");
    s.get("epsilons", c.eraser.epsilons);
    s.get_enum("mode", kick_mode_names(), c.eraser.mode);
    s.get("amplitude_interacting", c.eraser.amplitude_interacting);
    s.get("sde_dt", c.eraser.sde_dt);
    s.get("sde_steps", c.eraser.sde_steps);
    s.get("bound_ratio", c.eraser.bound_ratio);
    s.finish();
  }
  {
    auto s = root.child("thermal");
    ThermalInput& t = c.thermal.input;
    s.get("temperature", t.temperature);
    s.get("mass", t.mass);
    s.get("speed", t.speed);
    s.get("separation", t.separation);
    s.get("particle_count", t.particle_count);
    s.get("collision_rate", t.collision_rate);
    s.get("interaction_energy", t.interaction_energy);
    s.get("thermal_energy", t.thermal_energy);
    s.get("step_ratio", c.thermal.step_ratio);
    s.get("step_floor", c.thermal.step_floor);
    s.get("characteristic_energy_ev", c.thermal.characteristic_energy_ev);
    s.finish();
  }
  {
    auto s = root.child("conservation");
    ConservationConfig& k = c.conservation;
    s.get_enum("quantity", quantity_names(), k.quantity);
    s.get("kappas", k.kappas);
    s.get("residual_every", k.residual_every);
    s.get("ratio_min", k.ratio_min);
    s.get("ratio_max", k.ratio_max);
    s.get("spectral_tolerance", k.spectral_tolerance);
    s.get("spectral_steps", k.spectral_steps);
    detail::read_grid(s.child("spectral_grid"), k.spectral_grid);
    detail::read_initial(s.child("spectral_initial"), k.spectral_initial);
    s.finish();
  }
  root.finish();
  c.numerics.gain = c.physics.kappa;
  validate(c);
  return c;
}

namespace detail {

inline Json grid_json(const GridSpec& g) {
  return {{"dims", g.dims}, {"points", g.points_per_axis}, {"extent", g.extent}};
}

inline Json initial_json(const InitialConfig& i) {
  if (i.kind == "product")
    return {{"kind", i.kind}, {"center", i.center}, {"width", i.width}, {"momentum", i.momentum}};
  const TwoBodyPacket& p = i.packet;
  return {{"kind", i.kind},          {"cm_center", p.cm_center},   {"cm_momentum", p.cm_momentum},
          {"cm_width", p.cm_width},  {"rel_center", p.rel_center}, {"rel_momentum", p.rel_momentum},
          {"rel_width", p.rel_width}, {"rel_chirp", p.rel_chirp}};
}

}  // namespace detail

/// Canonical form: every key written, objects in sorted key order.
inline Json to_json(const RunConfig& c) {
  Json particles = Json::array();
  for (const auto& p : c.physics.particles)
    particles.push_back({{"label", p.label}, {"mass", p.mass}, {"charge", p.charge}});
  Json potential = {{"form", c.physics.potential.form}};
  if (c.physics.potential.form == "soft_coulomb") {
    potential["strength"] = c.physics.potential.strength;
    potential["softening"] = c.physics.potential.softening;
  } else {
    potential["depth"] = c.physics.potential.depth;
    potential["width"] = c.physics.potential.width;
  }
  const IntegratorConfig& n = c.numerics;
  Json walk = {{"step_scale", c.walk.step_scale},
               {"starts", c.walk.starts},
               {"mode", name_of(step_mode_names(), c.walk.mode)}};
  if (c.walk.theta) walk["theta"] = *c.walk.theta;
  const ThermalInput& t = c.thermal.input;
  const ConservationConfig& k = c.conservation;
  return {
      {"scenario", scenario_name(c.scenario)},
      {"backend", name_of(backend_names(), c.backend)},
      {"physics", {{"c", c.physics.c}, {"kappa", c.physics.kappa}, {"particles", particles}, {"potential", potential}}},
      {"grid", detail::grid_json(c.grid)},
      {"initial", detail::initial_json(c.initial)},
      {"two_level",
       {{"initial_weight", c.two_level.initial_weight},
        {"gap", c.two_level.gap},
        {"gamma", c.two_level.gamma},
        {"mass_sum", c.two_level.mass_sum}}},
      {"numerics",
       {{"dt", n.dt},
        {"n_steps", n.n_steps},
        {"scheme", name_of(scheme_names(), n.scheme)},
        {"renormalize_each_step", n.renormalize_each_step},
        {"record_every", n.record_every},
        {"theta_abs", n.theta_abs},
        {"real_noise", n.real_noise},
        {"stop_on_absorption", n.stop_on_absorption},
        {"record_expectations", n.record_expectations}}},
      {"ensemble", {{"n_traj", c.ensemble.n_traj}, {"master_seed", c.ensemble.master_seed}}},
      {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
      {"walk", walk},
      {"eraser",
       {{"epsilons", c.eraser.epsilons},
        {"mode", name_of(kick_mode_names(), c.eraser.mode)},
        {"amplitude_interacting", c.eraser.amplitude_interacting},
        {"sde_dt", c.eraser.sde_dt},
        {"sde_steps", c.eraser.sde_steps},
        {"bound_ratio", c.eraser.bound_ratio}}},
      {"thermal",
       {{"temperature", t.temperature},
        {"mass", t.mass},
        {"speed", t.speed},
        {"separation", t.separation},
        {"particle_count", t.particle_count},
        {"collision_rate", t.collision_rate},
        {"interaction_energy", t.interaction_energy},
        {"thermal_energy", t.thermal_energy},
        {"step_ratio", c.thermal.step_ratio},
        {"step_floor", c.thermal.step_floor},
        {"characteristic_energy_ev", c.thermal.characteristic_energy_ev}}},
      {"conservation",
       {{"quantity", name_of(quantity_names(), k.quantity)},
        {"kappas", k.kappas},
        {"residual_every", k.residual_every},
        {"ratio_min", k.ratio_min},
        {"ratio_max", k.ratio_max},
        {"spectral_tolerance", k.spectral_tolerance},
        {"spectral_steps", k.spectral_steps},
        {"spectral_grid", detail::grid_json(k.spectral_grid)},
        {"spectral_initial", detail::initial_json(k.spectral_initial)}}},
  };
}

inline std::string serialize(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig parse_config_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

/// FNV-1a 64 of the canonical compact serialisation, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

}  // namespace icollapse
