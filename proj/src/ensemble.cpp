#include "fbcool/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "fbcool/controller.hpp"
#include "fbcool/estimator.hpp"
#include "fbcool/wavefunction.hpp"

namespace fbcool {

using std::numbers::pi;

namespace {

constexpr double kInitialEdgeFraction = 0.58;

std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string_view channel_name(Channel c) {
    static constexpr std::array<std::string_view, kChannelCount> names{
        "energy", "p0", "p1", "p2", "p3", "parity", "x_true", "p_true", "vx_true",
        "x_est", "p_est", "vx_est", "amplitude", "slope"};
    return names.at(c);
}

std::vector<double> TrajectoryRecord::series(Channel c) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s[c]);
    return out;
}

EnsembleContext::EnsembleContext(const RunConfig& cfg)
    : config(cfg), params(cfg.scaled()),
      grid(SpatialGrid::for_lattice(cfg.sim.gridPoints, cfg.sim.domainPeriods, params.ktilde())) {
    config.validate();
    bands = std::make_shared<const BandBasis>(grid, params, cfg.sim.domainPeriods);
}

double initial_max_displacement(double ktilde) {
    return kInitialEdgeFraction * pi / (2.0 * ktilde);
}

InitialCentroid draw_initial_centroid(NoiseStream& noise, const ScaledParams& p) {
    const double xmax = initial_max_displacement(p.ktilde());
    const double v = p.vmax();
    const double kt = p.ktilde();
    const double centroidEnergy = v * std::pow(std::sin(kt * xmax), 2);
    const double x0 = noise.uniform(0.0, xmax);
    const double kinetic = std::max(centroidEnergy - v * std::pow(std::sin(kt * x0), 2), 0.0);
    const double p0 = std::sqrt(kinetic / pi) * (noise.coin() ? 1.0 : -1.0);
    return {x0, p0};
}

TrajectoryRecord run_trajectory(const EnsembleContext& ctx, std::uint64_t trajectoryIndex) {
    const RunConfig& cfg = ctx.config;
    const ScaledParams& params = ctx.params;
    const double dt = cfg.control.dt;
    const double vmax = params.vmax();

    TrajectoryRecord rec;
    rec.index = trajectoryIndex;
    rec.baseSeed = cfg.sim.baseSeed;
    rec.configHash = cfg.hash();

    NoiseStream noise(cfg.sim.baseSeed, trajectoryIndex);
    const InitialCentroid ic = draw_initial_centroid(noise, params);
    rec.x0 = ic.x0;
    rec.p0 = ic.p0;

    WaveEvolver ev(ctx.grid, params, dt);
    WaveState state = gaussian_packet(ctx.grid, ic.x0, ic.p0, 0.5, vmax);
    const double v0 = 1.0 / std::sqrt(2.0);
    GaussianEstimator estimator({6.0, 0.0, v0, v0, 0.0}, params, dt);
    Controller controller(cfg.control, vmax);
    const SignalSource source = cfg.control.controllerSource;

    const long nSteps = std::lround(cfg.sim.tMax / dt);
    const int stride = cfg.sim.outputStride;
    rec.time.reserve(nSteps / stride + 1);
    rec.samples.reserve(nSteps / stride + 1);

    double slope = 0.0;
    auto record = [&](double t) {
        const WaveMoments m = ev.moments(state);
        const BandPopulations pops = band_populations(state, *ctx.bands);
        const GaussianState& g = estimator.state();
        Sample s{};
        s[kEnergy] = ev.energy(state);
        for (int b = 0; b < 4; ++b) s[kPop0 + b] = pops.p[b];
        s[kParity] = ev.parity(state);
        s[kXTrue] = m.x;
        s[kPTrue] = m.p;
        s[kVxTrue] = m.vx;
        s[kXEst] = g.xMean;
        s[kPEst] = g.pMean;
        s[kVxEst] = g.vx;
        s[kAmplitude] = state.potentialAmplitude;
        s[kSlope] = slope;
        rec.time.push_back(t);
        rec.samples.push_back(s);
    };

    record(0.0);
    try {
        for (long step = 1; step <= nSteps; ++step) {
            const double amplitude = state.potentialAmplitude;
            const double gammaEff =
                cfg.control.scaleGammaWithDrive ? params.gamma() * amplitude / vmax : params.gamma();
            const ScaledParams stepParams = params.withGamma(gammaEff);

            ev.step_hamiltonian(state);
            const double dW = noise.wiener(dt);
            const MeasurementUpdate mu = ev.step_measurement(state, dW, gammaEff);
            if (!std::isfinite(mu.preNormDeviation))
                throw std::runtime_error("true state lost normalisation at step " + std::to_string(step));
            const double dr = photocurrent_increment(mu.meanCosSq, dW, stepParams, dt);
            estimator.step(dr, amplitude, gammaEff);

            const double t = step * dt;
            state.time = t;
            if (source != SignalSource::None) {
                SignalInputs in{estimator.predicted_cos_sq(),
                                source == SignalSource::TrueState ? ev.mean_cos_sq(state) : 0.0, dr};
                const QuadraticFit fit = controller.push_and_fit(t, select_signal(source, in, stepParams, dt));
                slope = fit.slopeAtNow;
                state.potentialAmplitude = controller.decide(fit, t);
            }
            if (step % stride == 0) record(t);
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    rec.steps = estimator.step_count();
    rec.clampCount = estimator.clamp_count();
    rec.clampFlagged = rec.clampCount > 0.001 * std::max<long>(rec.steps, 1);
    return rec;
}

EnsembleStats aggregate(std::vector<const TrajectoryRecord*> records, double highAmplitude, double tMax) {
    std::erase_if(records, [](const TrajectoryRecord* r) { return r->failed; });
    std::sort(records.begin(), records.end(),
              [](const TrajectoryRecord* a, const TrajectoryRecord* b) { return a->index < b->index; });
    EnsembleStats st;
    st.trajectories = static_cast<int>(records.size());
    st.windowStart = 0.9 * tMax;
    st.windowEnd = tMax;
    if (records.empty()) return st;

    std::size_t nt = records.front()->samples.size();
    for (const auto* r : records) nt = std::min(nt, r->samples.size());
    st.time.assign(records.front()->time.begin(), records.front()->time.begin() + nt);
    const double n = static_cast<double>(records.size());
    const bool withSe = records.size() >= 2;

    for (int c = 0; c < kChannelCount; ++c) {
        auto& ch = st.channels[c];
        ch.mean.assign(nt, 0.0);
        if (withSe) ch.se.assign(nt, 0.0);
        for (std::size_t k = 0; k < nt; ++k) {
            double sum = 0.0;
            for (const auto* r : records) sum += r->samples[k][c];
            const double mean = sum / n;
            ch.mean[k] = mean;
            if (withSe) {
                double ss = 0.0;
                for (const auto* r : records) ss += std::pow(r->samples[k][c] - mean, 2);
                ch.se[k] = std::sqrt(ss / (n - 1.0) / n);
            }
        }
    }
    st.parityAbsMean.assign(nt, 0.0);
    st.amplitudeHighFraction.assign(nt, 0.0);
    for (std::size_t k = 0; k < nt; ++k) {
        for (const auto* r : records) {
            st.parityAbsMean[k] += std::abs(r->samples[k][kParity]) / n;
            if (r->samples[k][kAmplitude] == highAmplitude) st.amplitudeHighFraction[k] += 1.0 / n;
        }
    }

    // Per-trajectory time average over the window, then mean/SE across trajectories.
    for (int c = 0; c < kChannelCount; ++c) {
        std::vector<double> perTraj;
        for (const auto* r : records) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t k = 0; k < nt; ++k)
                if (r->time[k] >= st.windowStart - 1e-9) {
                    sum += r->samples[k][c];
                    ++count;
                }
            perTraj.push_back(count ? sum / count : std::numeric_limits<double>::quiet_NaN());
        }
        double mean = 0.0;
        for (double v : perTraj) mean += v / n;
        double se = std::numeric_limits<double>::quiet_NaN();
        if (withSe) {
            double ss = 0.0;
            for (double v : perTraj) ss += (v - mean) * (v - mean);
            se = std::sqrt(ss / (n - 1.0) / n);
        }
        st.finalWindow[c] = {mean, se};
    }
    return st;
}

EnsembleResult run_ensemble(const RunConfig& cfg, int threads, const ProgressFn& progress) {
    return run_ensemble(EnsembleContext(cfg), threads, progress);
}

EnsembleResult run_ensemble(const EnsembleContext& ctx, int threads, const ProgressFn& progress) {
    const auto start = std::chrono::steady_clock::now();
    const int total = ctx.config.sim.nTrajectories;
    EnsembleResult result;
    result.records.resize(total);

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progressMutex;
    auto worker = [&] {
        for (int i = next++; i < total; i = next++) {
            result.records[i] = run_trajectory(ctx, static_cast<std::uint64_t>(i));
            const int d = ++done;
            if (progress) {
                std::lock_guard lock(progressMutex);
                progress(d, total);
            }
        }
    };
    const int nWorkers = std::clamp(threads, 1, total);
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < nWorkers; ++w) pool.emplace_back(worker);
        worker();
    }

    std::vector<const TrajectoryRecord*> ptrs;
    for (const auto& r : result.records) {
        ptrs.push_back(&r);
        if (r.failed) ++result.failed;
        if (r.clampFlagged) ++result.flagged;
    }
    const double high = std::pow(1.0 + ctx.config.control.epsilon, 2) * ctx.params.vmax();
    result.stats = aggregate(ptrs, high, ctx.config.sim.tMax);
    result.valid = result.failed <= 0.1 * total;
    result.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_ensemble_csv(std::ostream& out, const EnsembleStats& st) {
    out << "time,energy_mean,energy_se";
    for (int b = 0; b < 4; ++b) out << ",p" << b << "_mean,p" << b << "_se";
    out << ",parity_mean,parity_abs_mean,amplitude_high_fraction\n";
    const bool withSe = !st.channels[kEnergy].se.empty();
    auto se = [&](Channel c, std::size_t k) { return withSe ? csv_num(st.channels[c].se[k]) : std::string(); };
    for (std::size_t k = 0; k < st.time.size(); ++k) {
        out << csv_num(st.time[k]) << ',' << csv_num(st.channels[kEnergy].mean[k]) << ',' << se(kEnergy, k);
        for (int b = 0; b < 4; ++b) {
            const auto c = static_cast<Channel>(kPop0 + b);
            out << ',' << csv_num(st.channels[c].mean[k]) << ',' << se(c, k);
        }
        out << ',' << csv_num(st.channels[kParity].mean[k]) << ',' << csv_num(st.parityAbsMean[k]) << ','
            << csv_num(st.amplitudeHighFraction[k]) << '\n';
    }
}

void write_tracking_csv(std::ostream& out, const TrajectoryRecord& r) {
    out << "time,x_true,x_est,vx_true,vx_est,p_true,p_est,energy,parity,amplitude,slope\n";
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
        const Sample& s = r.samples[k];
        out << csv_num(r.time[k]) << ',' << csv_num(s[kXTrue]) << ',' << csv_num(s[kXEst]) << ','
            << csv_num(s[kVxTrue]) << ',' << csv_num(s[kVxEst]) << ',' << csv_num(s[kPTrue]) << ','
            << csv_num(s[kPEst]) << ',' << csv_num(s[kEnergy]) << ',' << csv_num(s[kParity]) << ','
            << csv_num(s[kAmplitude]) << ',' << csv_num(s[kSlope]) << '\n';
    }
}

std::vector<SweepRow> epsilon_sweep(const RunConfig& cfg, const std::vector<double>& epsilons,
                                    const std::vector<SignalSource>& sources, int threads,
                                    const ProgressFn& progress) {
    std::vector<SweepRow> rows;
    for (double eps : epsilons) {
        if (!(eps >= 0.0)) throw ConfigError("sweep epsilon must be non-negative");
        for (SignalSource src : sources) {
            RunConfig c = cfg;
            c.control.epsilon = eps;
            c.control.controllerSource = src;
            const EnsembleContext ctx(c);
            const EnsembleResult res = run_ensemble(ctx, threads, progress);
            if (!res.valid)
                throw std::runtime_error("ensemble at epsilon " + std::to_string(eps) +
                                         " is invalid: too many failed trajectories");
            const TheoryInputs th = harmonic_theory_inputs(eps, ctx.params);
            rows.push_back({eps, src, res.stats.finalWindow[kEnergy].mean, res.stats.finalWindow[kEnergy].se,
                            eps > 0.0 ? theory_ss_energy(th, TheoryVariant::Centroid) : std::nullopt,
                            eps > 0.0 ? theory_ss_energy(th, TheoryVariant::Squeezing) : std::nullopt,
                            res.stats.trajectories, res.failed});
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "epsilon,source,energy_final_mean,energy_final_se,theory_centroid,theory_squeezing\n";
    for (const auto& r : rows) {
        out << csv_num(r.epsilon) << ',' << to_string(r.source) << ',' << csv_num(r.energyFinalMean) << ','
            << csv_num(r.energyFinalSe) << ','
            << (r.theoryCentroid ? csv_num(*r.theoryCentroid) : std::string()) << ','
            << (r.theorySqueezing ? csv_num(*r.theorySqueezing) : std::string()) << '\n';
    }
}

std::string manifest_json(const RunConfig& cfg, std::string_view command, const EnsembleResult* result,
                          double wallSeconds) {
    nlohmann::json j;
    j["tool"] = "fbcool";
    j["version"] = FBCOOL_VERSION;
    j["command"] = std::string(command);
    j["config"] = cfg.to_map();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    j["config_hash"] = hash;
    const ScaledParams sp = cfg.scaled();
    j["scaled"] = {{"gamma", sp.gamma()}, {"ktilde", sp.ktilde()}, {"vmax", sp.vmax()}, {"eta", sp.eta()},
                   {"omegaHO", sp.omegaHO()}};
    j["seeds"] = {{"base", cfg.sim.baseSeed},
                  {"trajectory_indices", {{"first", 0}, {"count", cfg.sim.nTrajectories}}}};
    if (result) {
        j["trajectories"] = static_cast<int>(result->records.size());
        j["failed"] = result->failed;
        j["clamp_flagged"] = result->flagged;
        j["valid"] = result->valid;
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& r : result->records)
            if (r.failed) failures.push_back({{"index", r.index}, {"reason", r.failure}});
        j["failures"] = failures;
    }
    j["wall_seconds"] = wallSeconds;
    return j.dump(2);
}

} // namespace fbcool
