#pragma once

#include <string>
#include <vector>

#include "fbcool/params.hpp"

namespace fbcool {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Scaled parameters from the default physical inputs to 3 significant figures.
Check check_scaled_parameters();

/// Lowest two band energies within 1% of pi and 3 pi.
Check check_band_energies(const RunConfig& cfg);

/// Norm under measurement and energy at G = 0 for the displaced initial
/// packet over `horizon` time units.
Check check_conservation(const RunConfig& cfg, double horizon = 10.0);

/// Wavefunction unraveling against the density-matrix integrator on a
/// 64-point grid with shared noise over t = 0.05, at dt and dt/2.
Check check_cross_integrator(const RunConfig& cfg);

/// All of the above.
std::vector<Check> run_invariant_suite(const RunConfig& cfg);

} // namespace fbcool
