#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "icollapse/collapse.hpp"
#include "icollapse/fourier.hpp"

namespace icollapse {

enum class Scheme { SplitStepSpectral, CrankNicolsonStencil };

/// Particles on a periodic grid interacting through pair potentials. The same
/// potentials enter the Hamiltonian and the collapse operators.
struct GridModel {
  GridSpec grid;
  std::vector<ParticleSpec> particles;
  std::vector<PairPotential> pairs;
  double c = 1.0;
};

/// Labelled finite basis with an explicit Hamiltonian matrix.
struct FiniteModel {
  std::vector<std::string> labels;
  Eigen::MatrixXcd hamiltonian;
  std::vector<FiniteChannel> channels;
  double c = 1.0;
};

using Model = std::variant<GridModel, FiniteModel>;

/// Largest stable dt for the stencil scheme: h^2 * min(m) / 4.
inline double stencil_dt_bound(const GridSpec& grid, const std::vector<ParticleSpec>& particles) {
  double mmin = particles.empty() ? 1.0 : particles.front().mass;
  for (const auto& p : particles) mmin = std::min(mmin, p.mass);
  const double h = grid.spacing();
  return h * h * mmin * 0.25;
}

/// Everything the integrator needs about a model: basis, Hamiltonian, the
/// deterministic sub-step for a fixed dt, and the collapse channels.
class Dynamics {
 public:
  Dynamics(const Model& model, Scheme scheme, double dt) : scheme_(scheme), dt_(dt) {
    if (!(dt > 0.0)) throw std::domain_error("dt must be positive");
    std::visit([this](const auto& m) { init(m); }, model);
  }

  const std::shared_ptr<const Basis>& basis() const { return basis_; }
  bool is_grid() const { return layout_.has_value(); }
  const GridLayout& layout() const { return *layout_; }
  Scheme scheme() const { return scheme_; }
  double dt() const { return dt_; }
  double c() const { return c_; }
  const std::vector<CollapseChannel>& channels() const { return channels_; }
  const std::vector<double>& masses() const { return masses_; }

  /// Derivatives used for rates, momenta and energy terms follow the scheme.
  DerivativeScheme derivative_scheme() const {
    return scheme_ == Scheme::SplitStepSpectral ? DerivativeScheme::Spectral : DerivativeScheme::Stencil;
  }

  HilbertState make_state(ComplexVector amplitudes, double t = 0.0) const {
    return HilbertState(basis_, std::move(amplitudes), t);
  }

  /// Total pair potential (grid) or the diagonal of H (finite).
  const RealVector& potential() const { return potential_; }

  HilbertState apply_hamiltonian(const HilbertState& s) const {
    if (!is_grid()) return s.with_amplitudes(hamiltonian_ * s.amplitudes());
    ComplexVector out = kinetic_amplitudes(s, masses_, derivative_scheme());
    out += potential_.cast<Complex>().cwiseProduct(s.amplitudes());
    return s.with_amplitudes(std::move(out));
  }

  HilbertState apply_kinetic(const HilbertState& s) const {
    if (!is_grid()) throw UnsupportedError("kinetic operator is only defined on grids");
    return s.with_amplitudes(kinetic_amplitudes(s, masses_, derivative_scheme()));
  }

  LinearOperator kinetic_operator() const {
    if (derivative_scheme() == DerivativeScheme::Spectral) return SpectralKinetic{masses_};
    return StencilKinetic{masses_};
  }

  /// One deterministic Hamiltonian sub-step of length dt, in place.
  void schrodinger_step(ComplexVector& psi) const {
    if (!is_grid()) {
      if (!hamiltonian_is_zero_) psi = propagator_ * psi;
      return;
    }
    if (scheme_ == Scheme::SplitStepSpectral) {
      psi = psi.cwiseProduct(half_potential_phase_);
      fft_->forward(psi);
      psi = psi.cwiseProduct(kinetic_phase_);
      fft_->inverse(psi);
      psi = psi.cwiseProduct(half_potential_phase_);
      return;
    }
    const std::lock_guard lock(cn_->mutex);
    const ComplexVector rhs = cn_->explicit_half * psi;
    psi = cn_->solver.solveWithGuess(rhs, psi);
    if (cn_->solver.info() != Eigen::Success) throw NumericalAbort("Crank-Nicolson solve did not converge");
  }

  HilbertState schrodinger_step(const HilbertState& s) const {
    ComplexVector psi = s.amplitudes();
    schrodinger_step(psi);
    HilbertState out = s.with_amplitudes(std::move(psi));
    out.set_time(s.time() + dt_);
    return out;
  }

  std::vector<CollapseOperator> collapse_operators(const HilbertState& s, double gain) const {
    return collapse_sum(s, channels_, CollapseSettings{gain, c_, derivative_scheme()});
  }

  /// Potential whose sign structure defines the I/O branches (sum of pairs).
  const RealVector& branch_potential() const { return branch_potential_; }

 private:
  using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
  using Solver = Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<Complex>>;

  // (1 + i H dt/2) psi' = (1 - i H dt/2) psi. Shared between copies; the
  // solver keeps per-solve state, so solves are serialised.
  struct CrankNicolsonSystem {
    SparseMatrix implicit_half;
    SparseMatrix explicit_half;
    Solver solver;
    std::mutex mutex;
  };

  void init(const GridModel& m) {
    for (const auto& p : m.particles)
      if (!(p.mass > 0.0)) throw std::domain_error("particle masses must be positive");
    if (!(m.c > 0.0)) throw std::domain_error("speed of light must be positive");
    GridBasis gb{m.grid, m.particles};
    layout_.emplace(gb.layout());
    basis_ = std::make_shared<const Basis>(gb);
    c_ = m.c;
    for (const auto& p : m.particles) masses_.push_back(p.mass);
    potential_ = RealVector::Zero(layout_->size());
    for (const auto& pair : m.pairs) {
      GridChannel ch = make_grid_channel(pair, gb);
      potential_ += ch.fields.value;
      channels_.emplace_back(std::move(ch));
    }
    branch_potential_ = potential_;

    if (scheme_ == Scheme::SplitStepSpectral) {
      fft_.emplace(*layout_);
      half_potential_phase_ = (potential_.cast<Complex>() * Complex(0.0, -0.5 * dt_)).array().exp();
      kinetic_phase_.resize(layout_->size());
      for (Index i = 0; i < layout_->size(); ++i) {
        double e = 0.0;
        for (int a = 0; a < layout_->axes(); ++a) {
          const double k = layout_->wavenumber(layout_->coordinate_index(i, a));
          e += k * k / (2.0 * masses_[a / layout_->dims()]);
        }
        kinetic_phase_[i] = std::exp(Complex(0.0, -e * dt_));
      }
    } else {
      if (dt_ > stencil_dt_bound(m.grid, m.particles) * (1.0 + 1e-12))
        throw std::domain_error("dt exceeds the stencil stability bound h^2 min(m) / 4");
      build_crank_nicolson();
    }
  }

  void init(const FiniteModel& m) {
    const auto n = static_cast<Index>(m.labels.size());
    if (m.hamiltonian.rows() != n || m.hamiltonian.cols() != n)
      throw StructuralError("Hamiltonian must be square with one row per basis label");
    if ((m.hamiltonian - m.hamiltonian.adjoint()).norm() > 1e-12 * std::max(1.0, m.hamiltonian.norm()))
      throw StructuralError("Hamiltonian must be Hermitian");
    if (!(m.c > 0.0)) throw std::domain_error("speed of light must be positive");
    basis_ = std::make_shared<const Basis>(FiniteBasis{m.labels});
    c_ = m.c;
    hamiltonian_ = m.hamiltonian;
    potential_ = m.hamiltonian.diagonal().real();
    branch_potential_ = RealVector::Zero(n);
    for (const auto& ch : m.channels) {
      if (ch.potential.size() != n) throw StructuralError("channel potential length mismatch");
      if (ch.gamma < 0.0) throw std::domain_error("channel rate must be non-negative");
      branch_potential_ += ch.potential;
      channels_.emplace_back(ch);
    }
    hamiltonian_is_zero_ = hamiltonian_.cwiseAbs().maxCoeff() == 0.0;
    if (hamiltonian_is_zero_) return;
    if (scheme_ == Scheme::SplitStepSpectral) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hamiltonian_);
      const Eigen::VectorXcd phases = (eig.eigenvalues().cast<Complex>() * Complex(0.0, -dt_)).array().exp();
      propagator_ = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
    } else {
      const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
      const Complex half(0.0, 0.5 * dt_);
      propagator_ = (id + half * hamiltonian_).partialPivLu().solve(id - half * hamiltonian_);
    }
  }

  void build_crank_nicolson() {
    const GridLayout& L = *layout_;
    const double h2 = L.spacing() * L.spacing();
    std::vector<Eigen::Triplet<Complex>> implicit, explicit_;
    implicit.reserve(static_cast<std::size_t>(L.size() * (2 * L.axes() + 1)));
    explicit_.reserve(implicit.capacity());
    const Complex half(0.0, 0.5 * dt_);
    for (Index i = 0; i < L.size(); ++i) {
      double diag = potential_[i];
      for (int a = 0; a < L.axes(); ++a) {
        const double coupling = -1.0 / (2.0 * masses_[a / L.dims()] * h2);
        diag -= 2.0 * coupling;
        for (int off : {-1, 1}) {
          const Index j = L.shifted(i, a, off);
          implicit.emplace_back(i, j, half * coupling);
          explicit_.emplace_back(i, j, -half * coupling);
        }
      }
      implicit.emplace_back(i, i, 1.0 + half * diag);
      explicit_.emplace_back(i, i, 1.0 - half * diag);
    }
    auto cn = std::make_shared<CrankNicolsonSystem>();
    cn->implicit_half.resize(L.size(), L.size());
    cn->implicit_half.setFromTriplets(implicit.begin(), implicit.end());
    cn->explicit_half.resize(L.size(), L.size());
    cn->explicit_half.setFromTriplets(explicit_.begin(), explicit_.end());
    cn->solver.setTolerance(1e-14);
    cn->solver.compute(cn->implicit_half);
    cn_ = std::move(cn);
  }

  Scheme scheme_;
  double dt_;
  double c_ = 1.0;
  std::shared_ptr<const Basis> basis_;
  std::optional<GridLayout> layout_;
  std::vector<double> masses_;
  std::vector<CollapseChannel> channels_;
  RealVector potential_;
  RealVector branch_potential_;

  // grid, split-step
  std::optional<FourierTransform> fft_;
  ComplexVector half_potential_phase_;
  ComplexVector kinetic_phase_;
  // grid, Crank-Nicolson
  std::shared_ptr<CrankNicolsonSystem> cn_;
  // finite
  Eigen::MatrixXcd hamiltonian_;
  Eigen::MatrixXcd propagator_;
  bool hamiltonian_is_zero_ = true;
};

}  // namespace icollapse
