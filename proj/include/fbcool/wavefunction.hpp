#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "fbcool/grid.hpp"
#include "fbcool/params.hpp"

namespace fbcool {

class UnsupportedModeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Pure conditioned state on the grid, normalised so that sum |psi_i|^2 = 1.
struct WaveState {
    CVector psi;
    double potentialAmplitude = 0.0;
    double time = 0.0;
};

/// Minimum-uncertainty Gaussian centred at (x0, p0) with position variance
/// vx, summed over periodic images so that it is smooth on the ring.
WaveState gaussian_packet(const SpatialGrid& grid, double x0, double p0, double vx,
                          double potentialAmplitude);

/// Normalise in place; returns the norm before normalisation.
double normalize(CVector& psi);

enum class Observable { X, P, Cos2kX, CosSq, Energy, Parity };

/// Full set of first and second moments of a wave state.
struct WaveMoments {
    double x, p, vx, vp, cxp; // cxp = <XP+PX> - 2<X><P>
};

struct MeasurementUpdate {
    double meanCosSq;        // <cos^2(kX)> before the update
    double preNormDeviation; // ||psi|| - 1 before renormalisation
};

/// Split-step propagator and observable evaluator for one grid and time step.
/// Holds FFT scratch state, so one instance per thread.
class WaveEvolver {
public:
    WaveEvolver(const SpatialGrid& grid, const ScaledParams& params, double dt);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const ScaledParams& params() const noexcept { return params_; }
    double dt() const noexcept { return dt_; }

    /// One Strang step of exp(-i H dt), H = pi P^2 - V cos^2(kX), with V the
    /// state's current potential amplitude.
    void step_hamiltonian(WaveState& s);

    /// Milstein step of the unit-efficiency pure-state unraveling
    /// d psi = [-g (c - <c>)^2 dt - sqrt(2 g) (c - <c>) dW] psi followed by
    /// renormalisation. `gamma` is the measurement strength in force for the
    /// step. Throws UnsupportedModeError when params().eta() < 1.
    MeasurementUpdate step_measurement(WaveState& s, double dW, double gamma);

    double expectation(const WaveState& s, Observable which);
    double expectation(const WaveState& s, const std::function<double(double)>& f) const;

    /// <H> reported relative to -V_nominal, using the nominal V_max.
    double energy(const WaveState& s);
    double mean_cos_sq(const WaveState& s) const;
    double parity(const WaveState& s) const;
    WaveMoments moments(const WaveState& s);

    std::span<const double> cos_sq() const noexcept { return cosSq_; }

private:
    const CVector& half_potential(double amplitude);
    void momentum_moments(const CVector& psi, double& p, double& p2);

    SpatialGrid grid_;
    ScaledParams params_;
    double dt_;
    Fft fft_;
    std::vector<double> cosSq_;
    std::vector<double> cos2k_;
    CVector kinetic_;
    std::vector<std::pair<double, CVector>> potentialCache_;
    CVector scratch_;
};

/// Homodyne photocurrent increment dr = sqrt(eta) (dW - sqrt(8 eta g) <c> dt).
double photocurrent_increment(double meanCosSq, double dW, const ScaledParams& p, double dt);

/// Innovation dW = dr / sqrt(eta) + sqrt(8 eta g) <c> dt, the inverse of
/// photocurrent_increment for a given <c>.
double innovation_increment(double meanCosSq, double dr, const ScaledParams& p, double dt);

/// dr for the current true state.
double synthesize_photocurrent(const WaveState& s, const WaveEvolver& ev, double dW,
                               const ScaledParams& p, double dt);

} // namespace fbcool
