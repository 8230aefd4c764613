#include "fbcool/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fbcool/analysis.hpp"
#include "fbcool/density.hpp"
#include "fbcool/ensemble.hpp"
#include "fbcool/noise.hpp"
#include "fbcool/wavefunction.hpp"

namespace fbcool {

using std::numbers::pi;

namespace {

template <class... A>
std::string fmt(const char* f, A... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string sig3(double v) { return fmt("%.3g", v); }

} // namespace

Check check_scaled_parameters() {
    const ScaledParams p = derive_scaled(PhysicalParams{});
    const bool ok = sig3(p.ktilde()) == "0.155" && sig3(p.gamma()) == "23.6" && sig3(p.vmax()) == "131";
    return {"scaled parameters", ok,
            fmt("k=%.6g G=%.6g Vmax=%.6g (3 s.f.: %s, %s, %s)", p.ktilde(), p.gamma(), p.vmax(),
                sig3(p.ktilde()).c_str(), sig3(p.gamma()).c_str(), sig3(p.vmax()).c_str())};
}

Check check_band_energies(const RunConfig& cfg) {
    const ScaledParams p = cfg.scaled();
    const SpatialGrid g = SpatialGrid::for_lattice(cfg.sim.gridPoints, 1, p.ktilde());
    const BandBasis b(g, p);
    const double d0 = b.band_energy(0) / pi - 1.0;
    const double d1 = b.band_energy(1) / (3.0 * pi) - 1.0;
    return {"band energies", std::abs(d0) < 0.01 && std::abs(d1) < 0.01,
            fmt("E0=%.5f (%+.3f%% of pi) E1=%.5f (%+.3f%% of 3pi), bound 1%%", b.band_energy(0), 100 * d0,
                b.band_energy(1), 100 * d1)};
}

Check check_conservation(const RunConfig& cfg, double horizon) {
    const ScaledParams p = cfg.scaled();
    const double dt = cfg.control.dt;
    const SpatialGrid g = SpatialGrid::for_lattice(cfg.sim.gridPoints, 1, p.ktilde());
    const double x0 = initial_max_displacement(p.ktilde());
    const int steps = static_cast<int>(std::lround(horizon / dt));

    // Norm under measurement at full strength.
    WaveEvolver ev(g, p, dt);
    WaveState s = gaussian_packet(g, x0, 0.0, 0.5, p.vmax());
    NoiseStream noise(cfg.sim.baseSeed, 0);
    double sumDev = 0.0, maxDev = 0.0, maxPost = 0.0;
    for (int n = 0; n < steps; ++n) {
        ev.step_hamiltonian(s);
        const MeasurementUpdate mu = ev.step_measurement(s, noise.wiener(dt), p.gamma());
        sumDev += mu.preNormDeviation;
        maxDev = std::max(maxDev, std::abs(mu.preNormDeviation));
        double nrm = 0.0;
        for (const auto& z : s.psi) nrm += std::norm(z);
        maxPost = std::max(maxPost, std::abs(nrm - 1.0));
    }
    const double drift = std::abs(sumDev / steps);

    // Energy at G = 0. Strang splitting conserves a modified energy, so <H>
    // oscillates at O(dt^2) within each period; drift is the change of the
    // period-averaged energy from the first to the last period.
    WaveEvolver ev0(g, p.withGamma(0.0), dt);
    WaveState u = gaussian_packet(g, x0, 0.0, 0.5, p.vmax());
    const double e0 = ev0.energy(u);
    const int per = std::min(steps, static_cast<int>(std::lround(1.0 / dt)));
    double maxRel = 0.0, first = 0.0, last = 0.0;
    for (int n = 1; n <= steps; ++n) {
        ev0.step_hamiltonian(u);
        const double e = ev0.energy(u);
        maxRel = std::max(maxRel, std::abs(e - e0) / std::abs(e0));
        if (n <= per) first += e / per;
        if (n > steps - per) last += e / per;
    }
    const double secular = std::abs(last - first) / std::abs(e0);
    return {"conservation", drift < 1e-6 && maxPost < 1e-6 && secular < 1e-6,
            fmt("norm drift/step %.2e, post-renorm %.1e, largest single-step %.1e (reference); "
                "G=0 energy drift %.2e relative over t=%g, in-period O(dt^2) oscillation %.2e (reference)",
                drift, maxPost, maxDev, secular, horizon, maxRel)};
}

Check check_cross_integrator(const RunConfig& cfg) {
    const ScaledParams p = cfg.scaled();
    const SpatialGrid g = SpatialGrid::for_lattice(64, 1, p.ktilde());
    const double T = 0.05;
    NoiseStream noise(cfg.sim.baseSeed, 0);
    const int fine = 400;
    std::vector<double> dWf(fine);
    for (auto& w : dWf) w = noise.wiener(T / fine);
    double worstPurity = 0.0;
    auto discrepancy = [&](int steps) {
        const double dt = T / steps;
        const int group = fine / steps;
        WaveEvolver ev(g, p, dt);
        DensityIntegrator di(g, p, dt);
        WaveState w = gaussian_packet(g, 3.0, -1.0, 0.5, p.vmax());
        DensityState d = density_from(w);
        for (int n = 0; n < steps; ++n) {
            double dW = 0.0;
            for (int j = 0; j < group; ++j) dW += dWf[n * group + j];
            ev.step_hamiltonian(w);
            ev.step_measurement(w, dW, p.gamma());
            di.step(d, dW, p.gamma());
        }
        const WaveMoments a = ev.moments(w), b = di.moments(d);
        worstPurity = std::max(worstPurity, std::abs(di.purity(d) - 1.0));
        return std::max({std::abs(a.x - b.x), std::abs(a.p - b.p), std::abs(a.vx - b.vx), std::abs(a.vp - b.vp),
                         std::abs(a.cxp - b.cxp)});
    };
    const double coarse = discrepancy(100);
    const double half = discrepancy(200);
    return {"cross-integrator", coarse < 1e-3 && half < 0.75 * coarse && worstPurity < 1e-4,
            fmt("64-point grid, t=0.05: max moment gap %.2e at dt=5e-4, %.2e at dt=2.5e-4 (ratio %.2f); "
                "density purity loss %.1e",
                coarse, half, half / coarse, worstPurity)};
}

std::vector<Check> run_invariant_suite(const RunConfig& cfg) {
    return {check_scaled_parameters(), check_band_energies(cfg), check_conservation(cfg),
            check_cross_integrator(cfg)};
}

} // namespace fbcool
