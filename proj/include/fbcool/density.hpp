#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "fbcool/grid.hpp"
#include "fbcool/params.hpp"
#include "fbcool/wavefunction.hpp"

namespace fbcool {

class StepSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Density matrix in the position basis of a small grid.
struct DensityState {
    Eigen::MatrixXcd rho;
    double potentialAmplitude = 0.0;
    double time = 0.0;
};

DensityState density_from(const WaveState& s);

/// Direct integrator of the conditioned master equation: Strang step for H,
/// Milstein step for the measurement terms.
/// Validation scale: grids of at most 128 points.
class DensityIntegrator {
public:
    static constexpr int kMaxPoints = 128;

    DensityIntegrator(const SpatialGrid& grid, const ScaledParams& params, double dt);

    /// rho -> U rho U^dagger with the same Strang propagator as WaveEvolver.
    void step_hamiltonian(DensityState& s) const;

    /// Decoherence plus eta-weighted innovation term; elementwise in the
    /// position basis. Throws StepSizeError if the trace moves by more than
    /// 1e-6 before renormalisation.
    void step_measurement(DensityState& s, double dW, double gamma) const;

    /// Hamiltonian then measurement.
    void step(DensityState& s, double dW, double gamma) const;

    double trace(const DensityState& s) const;
    double purity(const DensityState& s) const;
    double mean_cos_sq(const DensityState& s) const;
    double expectation(const DensityState& s, Observable which) const;
    /// <XP+PX> - 2<X><P> and friends, matching WaveEvolver::moments.
    WaveMoments moments(const DensityState& s) const;

    const SpatialGrid& grid() const noexcept { return grid_; }
    std::span<const double> cos_sq() const noexcept { return {cosSq_.data(), static_cast<std::size_t>(cosSq_.size())}; }

private:
    Eigen::MatrixXcd propagator(double amplitude) const;

    SpatialGrid grid_;
    ScaledParams params_;
    double dt_;
    Eigen::VectorXd cosSq_;
    Eigen::MatrixXcd kineticProp_;
    Eigen::MatrixXcd momentum_; // P in the position basis
};

} // namespace fbcool
