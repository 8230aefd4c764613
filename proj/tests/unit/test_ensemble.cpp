#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fbcool/ensemble.hpp"
#include "fbcool/wavefunction.hpp"

using namespace fbcool;
using std::numbers::pi;

namespace {

RunConfig short_config(double tMax = 0.25, int nTraj = 4) {
    RunConfig c;
    c.sim.tMax = tMax;
    c.sim.nTrajectories = nTraj;
    c.sim.outputStride = 50;
    return c;
}

const EnsembleContext& context() {
    static const EnsembleContext ctx(short_config());
    return ctx;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TEST_CASE("initial centroid and initial energy") {
    const ScaledParams p = context().params;
    CHECK(initial_max_displacement(p.ktilde()) == doctest::Approx(5.88).epsilon(2e-3));
    WaveEvolver ev(context().grid, p, 5e-4);
    const double xmax = initial_max_displacement(p.ktilde());
    const double target = p.vmax() * std::pow(std::sin(p.ktilde() * xmax), 2);
    int positive = 0;
    for (std::uint64_t i = 0; i < 64; ++i) {
        NoiseStream noise(99, i);
        const InitialCentroid ic = draw_initial_centroid(noise, p);
        CHECK(ic.x0 >= 0.0);
        CHECK(ic.x0 <= xmax);
        // Classical centroid energy relative to the well bottom.
        const double classical = pi * ic.p0 * ic.p0 + p.vmax() * std::pow(std::sin(p.ktilde() * ic.x0), 2);
        CHECK(classical == doctest::Approx(target).epsilon(1e-10));
        if (ic.p0 > 0.0) ++positive;
        if (i < 8) {
            const WaveState s = gaussian_packet(context().grid, ic.x0, ic.p0, 0.5, p.vmax());
            const double e = ev.energy(s);
            CHECK(e > 82.0);
            CHECK(e < 86.0);
        }
    }
    CHECK(positive > 16);
    CHECK(positive < 48);
}

TEST_CASE("trajectories are deterministic and carry their provenance") {
    const TrajectoryRecord a = run_trajectory(context(), 3);
    const TrajectoryRecord b = run_trajectory(context(), 3);
    REQUIRE_FALSE(a.failed);
    CHECK(a.samples == b.samples);
    CHECK(a.time == b.time);
    CHECK(a.configHash == context().config.hash());
    CHECK(a.index == 3);
    CHECK(a.steps == 500);
    REQUIRE(a.time.size() == 11);
    for (std::size_t k = 0; k < a.time.size(); ++k) CHECK(a.time[k] == doctest::Approx(k * 0.025));
    const TrajectoryRecord c = run_trajectory(context(), 4);
    CHECK(c.samples != a.samples);
}

TEST_CASE("feedback cannot act before its start time") {
    RunConfig off = short_config();
    off.control.controllerSource = SignalSource::None;
    const EnsembleContext ctxOff(off);
    for (std::uint64_t i : {0u, 5u}) {
        const TrajectoryRecord on = run_trajectory(context(), i);
        const TrajectoryRecord none = run_trajectory(ctxOff, i);
        CHECK(on.series(kEnergy) == none.series(kEnergy));
        CHECK(on.series(kXEst) == none.series(kXEst));
        for (double amp : on.series(kAmplitude)) CHECK(amp == context().params.vmax());
    }
}

TEST_CASE("aggregation is order independent and handles a single trajectory") {
    std::vector<TrajectoryRecord> recs;
    for (std::uint64_t i = 0; i < 4; ++i) recs.push_back(run_trajectory(context(), i));
    std::vector<const TrajectoryRecord*> ptrs;
    for (const auto& r : recs) ptrs.push_back(&r);
    const double high = 1.21 * context().params.vmax();
    const EnsembleStats s1 = aggregate(ptrs, high, 0.25);
    std::reverse(ptrs.begin(), ptrs.end());
    std::swap(ptrs[1], ptrs[2]);
    const EnsembleStats s2 = aggregate(ptrs, high, 0.25);
    for (int c = 0; c < kChannelCount; ++c) {
        CHECK(s1.channels[c].mean == s2.channels[c].mean);
        CHECK(s1.channels[c].se == s2.channels[c].se);
    }
    CHECK(s1.trajectories == 4);

    // Direct oracle for one entry: mean and SE across trajectories.
    const std::size_t k = 6;
    double m = 0.0;
    for (const auto& r : recs) m += r.samples[k][kEnergy] / 4.0;
    double ss = 0.0;
    for (const auto& r : recs) ss += std::pow(r.samples[k][kEnergy] - m, 2);
    CHECK(s1.channels[kEnergy].mean[k] == doctest::Approx(m));
    CHECK(s1.channels[kEnergy].se[k] == doctest::Approx(std::sqrt(ss / 3.0 / 4.0)));

    const EnsembleStats one = aggregate({&recs[2]}, high, 0.25);
    CHECK(one.trajectories == 1);
    CHECK(one.channels[kEnergy].se.empty());
    CHECK(one.channels[kEnergy].mean == recs[2].series(kEnergy));
    CHECK(std::isnan(one.finalWindow[kEnergy].se));

    TrajectoryRecord bad = recs[0];
    bad.failed = true;
    const EnsembleStats withFailed = aggregate({&recs[1], &bad}, high, 0.25);
    CHECK(withFailed.trajectories == 1);
}

TEST_CASE("final window averages per trajectory over the last tenth") {
    const TrajectoryRecord r = run_trajectory(context(), 1);
    const EnsembleStats st = aggregate({&r}, 0.0, 0.25);
    CHECK(st.windowStart == doctest::Approx(0.225));
    // Samples at 0.225 and 0.25.
    const auto e = r.series(kEnergy);
    CHECK(st.finalWindow[kEnergy].mean == doctest::Approx(0.5 * (e[9] + e[10])));
}

TEST_CASE("ensemble CSV schema and manifest") {
    RunConfig cfg = short_config(0.1, 3);
    const EnsembleResult res = run_ensemble(cfg, 2);
    CHECK(res.valid);
    CHECK(res.failed == 0);
    CHECK(res.records.size() == 3);

    std::ostringstream csv;
    write_ensemble_csv(csv, res.stats);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "time,energy_mean,energy_se,p0_mean,p0_se,p1_mean,p1_se,p2_mean,p2_se,p3_mean,p3_se,"
          "parity_mean,parity_abs_mean,amplitude_high_fraction");
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        CHECK(split_line(line).size() == 14);
        ++rows;
    }
    CHECK(rows == 5);

    std::ostringstream track;
    write_tracking_csv(track, res.records[0]);
    CHECK(track.str().rfind("time,x_true,x_est,vx_true,vx_est,", 0) == 0);

    const std::string text = manifest_json(cfg, "run", &res, res.wallSeconds);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["trajectories"] == 3);
    CHECK(j["failed"] == 0);
    CHECK(j["seeds"]["base"] == cfg.sim.baseSeed);
    CHECK(j["command"] == "run");

    // Feeding the manifest back reproduces the config.
    const auto dir = std::filesystem::temp_directory_path() / "fbcool_manifest_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "manifest.json";
    std::ofstream(path) << text;
    RunConfig back;
    apply_config_file(back, path.string());
    CHECK(back.hash() == cfg.hash());
    std::filesystem::remove_all(dir);
}

TEST_CASE("ensemble results do not depend on the thread count") {
    RunConfig cfg = short_config(0.1, 3);
    const EnsembleResult a = run_ensemble(cfg, 1);
    const EnsembleResult b = run_ensemble(cfg, 3);
    CHECK(a.stats.channels[kEnergy].mean == b.stats.channels[kEnergy].mean);
    CHECK(a.stats.channels[kPop0].se == b.stats.channels[kPop0].se);
}

TEST_CASE("sweep rows and schema") {
    RunConfig cfg = short_config(0.05, 2);
    const auto rows = epsilon_sweep(cfg, {0.005, 0.1}, {SignalSource::Estimator, SignalSource::TrueState});
    REQUIRE(rows.size() == 4);
    CHECK_FALSE(rows[0].theoryCentroid.has_value());
    REQUIRE(rows[2].theoryCentroid.has_value());
    CHECK(*rows[2].theoryCentroid == doctest::Approx(6.74).epsilon(1e-3));
    CHECK(*rows[2].theorySqueezing < *rows[2].theoryCentroid);
    CHECK(rows[3].source == SignalSource::TrueState);

    std::ostringstream out;
    write_sweep_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "epsilon,source,energy_final_mean,energy_final_se,theory_centroid,theory_squeezing");
    std::getline(in, line);
    const auto cells = split_line(line);
    REQUIRE(cells.size() == 6);
    CHECK(cells[4].empty());
    CHECK_THROWS_AS(epsilon_sweep(cfg, {-0.1}, {SignalSource::Estimator}), ConfigError);
}
