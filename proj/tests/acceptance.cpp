// Acceptance suite: one PASS/FAIL line per criterion 1-10.
//
//   fbcool_acceptance [--only 1,2,...] [--out DIR] [--threads N]
//
// Criteria 6-8 share one pair of 128-trajectory ensembles; criterion 9 reuses
// their first 32 trajectories for its eps = 0.1 point. CSVs and a manifest
// are written to DIR for plotting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fbcool/analysis.hpp"
#include "fbcool/ensemble.hpp"
#include "fbcool/noise.hpp"
#include "fbcool/validation.hpp"
#include "fbcool/wavefunction.hpp"

using namespace fbcool;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    const double n = static_cast<double>(v.size());
    for (double x : v) r.mean += x / n;
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return r;
}

// Shared state between criteria that reuse ensembles.
struct Runs {
    RunConfig base;
    int threads = 1;
    fs::path out;
    std::optional<EnsembleResult> estimator, truestate, none;

    EnsembleResult run(SignalSource src, int nTraj, double eps = 0.1, double tMax = 100.0) const {
        RunConfig c = base;
        c.control.controllerSource = src;
        c.control.epsilon = eps;
        c.sim.nTrajectories = nTraj;
        c.sim.tMax = tMax;
        std::fprintf(stderr, "  ensemble: source=%s eps=%g n=%d tMax=%g\n", to_string(src).c_str(), eps, nTraj,
                     tMax);
        EnsembleResult r = run_ensemble(c, threads);
        std::fprintf(stderr, "  done in %.0f s (%d failed)\n", r.wallSeconds, r.failed);
        return r;
    }

    void write(const std::string& name, const EnsembleStats& st) const {
        std::ofstream f(out / name);
        write_ensemble_csv(f, st);
    }

    const EnsembleResult& closed_loop(SignalSource src) {
        auto& slot = src == SignalSource::Estimator ? estimator : truestate;
        if (!slot) {
            slot = run(src, 128);
            write("ensemble_" + to_string(src) + ".csv", slot->stats);
        }
        return *slot;
    }

    const EnsembleResult& open_loop() {
        if (!none) {
            none = run(SignalSource::None, 32);
            write("ensemble_none.csv", none->stats);
        }
        return *none;
    }
};

Outcome from(const Check& c) { return {c.pass, c.detail}; }

Outcome criterion1(Runs&) { return from(check_scaled_parameters()); }
Outcome criterion2(Runs& r) { return from(check_band_energies(r.base)); }
Outcome criterion3(Runs& r) { return from(check_conservation(r.base)); }
Outcome criterion10(Runs& r) { return from(check_cross_integrator(r.base)); }

// Symmetrised Cov(H, c) = Re<c psi|H psi> - <c><H>, H relative to -V_max.
double cov_energy_cos_sq(const WaveState& s, const WaveEvolver& ev, Fft& fft, CVector& a, CVector& b) {
    const int n = static_cast<int>(s.psi.size());
    const auto k = ev.grid().wavenumbers();
    const auto c = ev.cos_sq();
    const double v = ev.params().vmax();
    for (int i = 0; i < n; ++i) {
        a[i] = c[i] * s.psi[i];
        b[i] = s.psi[i];
    }
    fft.forward(a);
    fft.forward(b);
    double cT = 0.0, T = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = pi * k[i] * k[i];
        cT += (std::conj(a[i]) * b[i]).real() * t;
        T += std::norm(b[i]) * t;
    }
    cT /= n;
    T /= n;
    double cV = 0.0, V = 0.0, mc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = std::norm(s.psi[i]);
        cV += w * c[i] * v * (1.0 - c[i]);
        V += w * v * (1.0 - c[i]);
        mc += w * c[i];
    }
    return cT + cV - mc * (T + V);
}

// Early window t in [0, 2], before feedback. E[dH] = heating dt exactly, and
// the martingale part -2 sqrt(2G) Cov(H, c) dW has zero mean, so subtracting
// it is an unbiased control variate for the ensemble-mean energy change.
Outcome criterion4(Runs& r) {
    const ScaledParams p = r.base.scaled();
    const double dt = r.base.control.dt;
    const double window = 2.0;
    const int steps = static_cast<int>(std::lround(window / dt));
    const SpatialGrid g = SpatialGrid::for_lattice(r.base.sim.gridPoints, 1, p.ktilde());
    Fft fft(g.size());
    CVector a(g.size()), b(g.size());
    std::vector<double> raw, compensated, formula;
    for (int i = 0; i < 32; ++i) {
        NoiseStream noise(r.base.sim.baseSeed, static_cast<std::uint64_t>(i));
        const InitialCentroid ic = draw_initial_centroid(noise, p);
        WaveEvolver ev(g, p, dt);
        WaveState s = gaussian_packet(g, ic.x0, ic.p0, 0.5, p.vmax());
        const double e0 = ev.energy(s);
        double integral = 0.5 * heating_rate(s, ev, p.gamma()) * dt, martingale = 0.0;
        for (int n = 1; n <= steps; ++n) {
            ev.step_hamiltonian(s);
            const double dW = noise.wiener(dt);
            martingale += -2.0 * std::sqrt(2.0 * p.gamma()) * cov_energy_cos_sq(s, ev, fft, a, b) * dW;
            ev.step_measurement(s, dW, p.gamma());
            integral += (n == steps ? 0.5 : 1.0) * heating_rate(s, ev, p.gamma()) * dt;
        }
        const double de = ev.energy(s) - e0;
        raw.push_back(de / window);
        compensated.push_back((de - martingale) / window);
        formula.push_back(integral / window);
    }
    const MeanSe mr = mean_se(raw), mc = mean_se(compensated), mf = mean_se(formula);
    const double ratio = mc.mean / mf.mean;
    return {std::abs(ratio - 1.0) < 0.15,
            fmt("dE/dt over t<2: %.3f +- %.3f (noise-compensated), raw %.2f +- %.2f; "
                "8 pi G k^2 <c^2 s^2> = %.3f; ratio %.3f, bound 15%%",
                mc.mean, mc.se, mr.mean, mr.se, mf.mean, ratio)};
}

// Lock: first sample after which |x_est - x_true| (mod one period) stays
// below 0.5 for a full oscillation period.
Outcome criterion5(Runs& r) {
    RunConfig c = r.base;
    c.control.controllerSource = SignalSource::Estimator;
    c.sim.nTrajectories = 32;
    c.sim.tMax = 8.0;
    c.sim.outputStride = 20;
    std::fprintf(stderr, "  ensemble: lock-time, n=32 tMax=8\n");
    const EnsembleResult res = run_ensemble(c, r.threads);
    const double L = pi / c.scaled().ktilde();
    const double sampleDt = c.sim.outputStride * c.control.dt;
    const int dwell = static_cast<int>(std::lround(1.0 / sampleDt));
    // Lock time per trajectory; `mirror` also accepts x_est = -x_true, the
    // exact symmetry of a cos^2 record (diagnostic only).
    auto lock_times = [&](bool mirror) {
        std::vector<double> lock;
        for (const auto& rec : res.records) {
            const auto xt = rec.series(kXTrue), xe = rec.series(kXEst);
            std::vector<bool> inside(xt.size());
            for (std::size_t k = 0; k < xt.size(); ++k) {
                const double d = xe[k] - xt[k], m = xe[k] + xt[k];
                const double gap = std::abs(d - L * std::round(d / L));
                const double mgap = std::abs(m - L * std::round(m / L));
                inside[k] = (mirror ? std::min(gap, mgap) : gap) < 0.5;
            }
            double t = INFINITY;
            for (std::size_t k = 0; k + dwell < inside.size(); ++k) {
                if (std::all_of(inside.begin() + k, inside.begin() + k + dwell + 1, [](bool b) { return b; })) {
                    t = rec.time[k];
                    break;
                }
            }
            lock.push_back(t);
        }
        std::sort(lock.begin(), lock.end());
        return lock;
    };
    {
        std::ofstream f(r.out / "tracking.csv");
        write_tracking_csv(f, res.records.front());
    }
    const auto sorted = lock_times(false);
    const auto mirrored = lock_times(true);
    const double median = 0.5 * (sorted[15] + sorted[16]);
    const int never = static_cast<int>(std::count(sorted.begin(), sorted.end(), INFINITY));
    return {median <= 2.0,
            fmt("median lock time %.2f (bound 2), quartiles %.2f / %.2f, %d of 32 unlocked by t=7; "
                "up to x -> -x: median %.2f (reference)",
                median, 0.5 * (sorted[7] + sorted[8]), 0.5 * (sorted[23] + sorted[24]), never,
                0.5 * (mirrored[15] + mirrored[16]))};
}

Outcome criterion6(Runs& r) {
    const auto& est = r.closed_loop(SignalSource::Estimator);
    const auto& ts = r.closed_loop(SignalSource::TrueState);
    const auto& off = r.open_loop();
    const double theory = *theory_ss_energy(harmonic_theory_inputs(0.1, r.base.scaled()), TheoryVariant::Centroid);
    const WindowAverage e = est.stats.finalWindow[kEnergy];
    const WindowAverage t = ts.stats.finalWindow[kEnergy];
    const WindowAverage n = off.stats.finalWindow[kEnergy];
    const bool finite = std::isfinite(e.mean) && std::isfinite(t.mean) && est.valid && ts.valid;
    const bool farBelow = e.mean + 2 * e.se < 0.25 * (n.mean - 2 * n.se) && t.mean + 2 * t.se < 0.25 * (n.mean - 2 * n.se);
    const bool inBand = e.mean + 2 * e.se > theory && e.mean - 2 * e.se < 2.5 * theory;
    const bool closer = std::abs(t.mean - theory) < std::abs(e.mean - theory);
    return {finite && farBelow && inBand && closer,
            fmt("final window: estimator %.3f +- %.3f, truestate %.3f +- %.3f, none %.1f +- %.1f; theory %.3f, "
                "band [%.2f, %.2f]; far-below %s, in-band %s, truestate closer %s (|dE| %.3f vs %.3f)",
                e.mean, e.se, t.mean, t.se, n.mean, n.se, theory, theory, 2.5 * theory, farBelow ? "yes" : "no",
                inBand ? "yes" : "no", closer ? "yes" : "no", std::abs(t.mean - theory), std::abs(e.mean - theory))};
}

Outcome criterion7(Runs& r) {
    const auto& est = r.closed_loop(SignalSource::Estimator);
    const auto& ts = r.closed_loop(SignalSource::TrueState);
    auto pops = [](const EnsembleResult& res) {
        return std::pair{res.stats.finalWindow[kPop0].mean, res.stats.finalWindow[kPop1].mean};
    };
    const auto [e0, e1] = pops(est);
    const auto [t0, t1] = pops(ts);
    const bool ok = e0 + e1 >= 0.88 && t0 + t1 >= 0.94 && std::abs(e0 - e1) < 0.15 && std::abs(t0 - t1) < 0.15;
    return {ok, fmt("estimator p0+p1 %.3f (p0 %.3f, p1 %.3f; bound 0.88), truestate p0+p1 %.3f (p0 %.3f, p1 %.3f; "
                    "bound 0.94)",
                    e0 + e1, e0, e1, t0 + t1, t0, t1)};
}

Outcome criterion8(Runs& r) {
    const auto& est = r.closed_loop(SignalSource::Estimator);
    std::vector<std::vector<double>> parity;
    for (const auto& rec : est.records)
        if (!rec.failed) parity.push_back(rec.series(kParity));
    const ParityStatistics st = parity_statistics(parity);
    const bool ok = st.driftConsistentWithZero && st.purifiedFraction >= 0.9 && st.splitConsistentWithHalf;
    return {ok, fmt("mean <Pi> %.4f -> %.4f, drift %.4f +- %.4f; purified %.1f%%; even %d / odd %d (%.3f)",
                    st.meanInitial, st.meanFinal, st.drift, st.driftStdError, 100 * st.purifiedFraction,
                    st.evenCount, st.oddCount, st.evenFraction)};
}

Outcome criterion9(Runs& r) {
    const std::vector<double> eps{0.005, 0.02, 0.05, 0.1, 0.2};
    const std::vector<SignalSource> sources{SignalSource::Estimator, SignalSource::TrueState};
    const ScaledParams p = r.base.scaled();
    const double threshold = p.gamma() * std::pow(p.ktilde(), 4) / 2.0;
    std::map<std::pair<int, double>, WindowAverage> final;
    std::vector<SweepRow> rows;
    for (double e : eps) {
        for (SignalSource src : sources) {
            EnsembleStats st;
            int failed = 0;
            if (e == 0.1) {
                // Trajectories 0..31 of the 128-trajectory run are the 32-trajectory ensemble.
                const auto& big = r.closed_loop(src);
                std::vector<const TrajectoryRecord*> ptrs;
                for (int i = 0; i < 32; ++i) {
                    ptrs.push_back(&big.records[i]);
                    failed += big.records[i].failed;
                }
                st = aggregate(ptrs, std::pow(1.1, 2) * p.vmax(), r.base.sim.tMax);
            } else {
                const EnsembleResult res = r.run(src, 32, e);
                st = res.stats;
                failed = res.failed;
            }
            final[{static_cast<int>(src), e}] = st.finalWindow[kEnergy];
            const TheoryInputs th = harmonic_theory_inputs(e, p);
            rows.push_back({e, src, st.finalWindow[kEnergy].mean, st.finalWindow[kEnergy].se,
                            theory_ss_energy(th, TheoryVariant::Centroid),
                            theory_ss_energy(th, TheoryVariant::Squeezing), st.trajectories, failed});
        }
    }
    {
        std::ofstream f(r.out / "sweep.csv");
        write_sweep_csv(f, rows);
    }
    const double none = r.open_loop().stats.finalWindow[kEnergy].mean;

    std::ostringstream detail;
    bool ok = true;
    for (SignalSource src : sources) {
        auto at = [&](double e) { return final[{static_cast<int>(src), e}]; };
        detail << to_string(src) << ":";
        for (double e : eps) detail << fmt(" %.3f+-%.3f", at(e).mean, at(e).se);
        detail << "; ";
        // Above theory at 2 sigma wherever cooling is effective.
        for (double e : eps) {
            if (e <= threshold) continue;
            const double th = *theory_ss_energy(harmonic_theory_inputs(e, p), TheoryVariant::Centroid);
            if (at(e).mean + 2 * at(e).se < th) {
                ok = false;
                detail << fmt("below theory at eps=%g (%.3f); ", e, th);
            }
        }
    }
    // Shape, estimator source: ineffective below threshold, falling, then flat.
    auto E = [&](double e) { return final[{static_cast<int>(SignalSource::Estimator), e}]; };
    const bool ineffective = E(0.005).mean > 0.5 * none;
    const bool falling = E(0.005).mean - E(0.02).mean > 2 * std::hypot(E(0.005).se, E(0.02).se);
    bool nonIncreasing = true;
    for (std::size_t i = 1; i + 1 < eps.size(); ++i)
        if (E(eps[i + 1]).mean > E(eps[i]).mean + 2 * std::hypot(E(eps[i]).se, E(eps[i + 1]).se))
            nonIncreasing = false;
    const bool plateau = std::abs(E(0.1).mean - E(0.2).mean) < std::abs(E(0.005).mean - E(0.02).mean);
    ok = ok && ineffective && falling && nonIncreasing && plateau;
    detail << fmt("none %.1f; threshold eps %.4f; ineffective %s (E(0.005) %.1f vs half of none %.1f), falling %s, non-increasing %s, plateau %s", none,
                  threshold, ineffective ? "yes" : "no", E(0.005).mean, 0.5 * none, falling ? "yes" : "no", nonIncreasing ? "yes" : "no",
                  plateau ? "yes" : "no");
    return {ok, detail.str()};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fbcool acceptance suite"};
    std::string only;
    std::string out = "acceptance_out";
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--only", only, "comma-separated criterion numbers");
    app.add_option("--out", out, "directory for CSV artifacts");
    app.add_option("--threads", threads, "worker threads");
    CLI11_PARSE(app, argc, argv);

    std::set<int> selected;
    {
        std::stringstream ss(only);
        for (std::string item; std::getline(ss, item, ',');)
            if (!item.empty()) selected.insert(std::stoi(item));
    }

    Runs runs;
    runs.threads = threads;
    runs.out = out;
    fs::create_directories(runs.out);

    const std::vector<std::pair<int, std::function<Outcome(Runs&)>>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};

    int failures = 0;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = fn(runs);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    {
        std::ofstream f(runs.out / "manifest.json");
        f << manifest_json(runs.base, "acceptance", runs.estimator ? &*runs.estimator : nullptr, 0.0) << '\n';
    }
    return failures == 0 ? 0 : 1;
}
