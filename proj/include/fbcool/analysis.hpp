#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fbcool/grid.hpp"
#include "fbcool/params.hpp"
#include "fbcool/wavefunction.hpp"

namespace fbcool {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lowest eigenstates of the discretised H at nominal V_max. With
/// domainPeriods = D each band is a cluster of D consecutive states.
class BandBasis {
public:
    BandBasis(const SpatialGrid& grid, const ScaledParams& params, int domainPeriods = 1,
              int keepBands = 8);

    /// Eigenvalues relative to -V_max, ascending.
    std::span<const double> energies() const noexcept { return energies_; }
    /// Mean energy of band n (cluster average).
    double band_energy(int band) const;
    int band_count() const noexcept { return bands_; }
    int states_per_band() const noexcept { return perBand_; }
    /// Column j is eigenstate j, unit-normalised on the grid.
    const Eigen::MatrixXd& states() const noexcept { return states_; }
    WaveState eigenstate(int j, double amplitude) const;

private:
    Eigen::MatrixXd states_;
    std::vector<double> energies_;
    int bands_;
    int perBand_;
};

/// Dense kinetic matrix pi P^2 in the position basis (real symmetric).
Eigen::MatrixXd kinetic_matrix(const SpatialGrid& grid);

struct BandPopulations {
    std::array<double, 4> p{};
    double remainder = 0.0;
};

BandPopulations band_populations(const WaveState& s, const BandBasis& basis);

/// Summary of a set of per-trajectory parity time series sampled on a common
/// time axis.
struct ParityStatistics {
    double meanInitial = 0.0;
    double meanFinal = 0.0;
    double drift = 0.0;            // mean over trajectories of final - initial
    double driftStdError = 0.0;
    bool driftConsistentWithZero = false; // |drift| <= 2 SE
    double purifiedFraction = 0.0;        // |<Pi>| > threshold at the end
    int evenCount = 0;
    int oddCount = 0;
    double evenFraction = 0.0;
    bool splitConsistentWithHalf = false; // inside the 95% binomial interval
};

/// Requires at least 16 trajectories, each with at least one sample.
ParityStatistics parity_statistics(const std::vector<std::vector<double>>& parity,
                                   double purityThreshold = 0.99);

struct TheoryInputs {
    double epsilon;
    double gamma;
    double ktilde;
    double E0;
    double E1;

    /// Ratio of measurement heating to feedback cooling, G k^4 / (2 eps).
    double beta() const;
};

/// Theory inputs with the harmonic band energies E0 = pi, E1 = 3 pi.
TheoryInputs harmonic_theory_inputs(double epsilon, const ScaledParams& p);

enum class TheoryVariant { Centroid, Squeezing };

/// Steady-state <H> relative to -V_max; empty when beta >= 1 (the
/// uncontrollable regime, no finite prediction).
std::optional<double> theory_ss_energy(const TheoryInputs& in, TheoryVariant variant);

/// Measurement heating 8 pi G k^2 <cos^2 sin^2> for a state on the grid.
double heating_rate(const WaveState& s, const WaveEvolver& ev, double gamma);
/// Harmonic-regime form 4 G k^4 <H>.
double heating_rate_harmonic(double energy, double gamma, double ktilde);
/// Coarse-grained feedback cooling -8 eps (<H> - E0).
double cooling_rate(double energy, double E0, double epsilon);

} // namespace fbcool
