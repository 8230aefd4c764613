// fbcool command-line entry point.
//
//   fbcool <fig1|fig2|fig3|fig4|run|theory|validate> [--config PATH] [--set key=value]...
//          [--out DIR] [--ntraj N] [--seed S] [--threads T]
//
// Exit status: 0 success, 1 failed run or failed validation, 2 bad configuration.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fbcool/analysis.hpp"
#include "fbcool/ensemble.hpp"
#include "fbcool/validation.hpp"

using namespace fbcool;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "out";
    std::optional<int> ntraj;
    std::optional<std::uint64_t> seed;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

struct RunFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Presets default to 32 trajectories; file, then --set, then flags override.
RunConfig resolve(const Options& o) {
    RunConfig cfg;
    cfg.sim.nTrajectories = 32;
    if (!o.config.empty()) apply_config_file(cfg, o.config);
    for (const auto& s : o.sets) apply_override(cfg, s);
    if (o.ntraj) cfg.sim.nTrajectories = *o.ntraj;
    if (o.seed) cfg.sim.baseSeed = *o.seed;
    cfg.validate();
    return cfg;
}

ProgressFn progress(const std::string& label) {
    return [label](int done, int total) {
        std::fprintf(stderr, "\r%s: %d/%d", label.c_str(), done, total);
        if (done == total) std::fputc('\n', stderr);
    };
}

class Artifacts {
public:
    Artifacts(const Options& o, const RunConfig& cfg, std::string command)
        : dir_(o.out), cfg_(cfg), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& name) {
        std::ofstream f(dir_ / name);
        if (!f) throw RunFailed("cannot write " + (dir_ / name).string());
        std::cerr << "wrote " << (dir_ / name).string() << '\n';
        return f;
    }

    void add(const std::string& label, const EnsembleResult& r) {
        ensembles_.push_back({{"label", label},
                              {"trajectories", static_cast<int>(r.records.size())},
                              {"failed", r.failed},
                              {"clamp_flagged", r.flagged},
                              {"valid", r.valid},
                              {"wall_seconds", r.wallSeconds}});
        if (!r.valid) invalid_ = true;
    }

    /// Writes manifest.json and resolved.cfg; returns the exit status.
    int finish(const EnsembleResult* single = nullptr) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        auto j = nlohmann::json::parse(manifest_json(cfg_, command_, single, wall));
        if (!ensembles_.empty()) j["ensembles"] = ensembles_;
        open("manifest.json") << j.dump(2) << '\n';
        open("resolved.cfg") << cfg_.to_text();
        if (invalid_) {
            std::cerr << "run invalid: more than 10% of trajectories failed\n";
            return 1;
        }
        return 0;
    }

private:
    fs::path dir_;
    RunConfig cfg_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    nlohmann::json ensembles_ = nlohmann::json::array();
    bool invalid_ = false;
};

EnsembleResult ensemble_for(const RunConfig& base, SignalSource src, const Options& o) {
    RunConfig c = base;
    c.control.controllerSource = src;
    return run_ensemble(c, o.threads, progress(to_string(src)));
}

int cmd_fig1(const Options& o) {
    const RunConfig cfg = resolve(o);
    Artifacts art(o, cfg, "fig1");
    const EnsembleResult r = run_ensemble(cfg, o.threads, progress("fig1"));
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const std::string name = i == 0 ? "tracking.csv" : "tracking_" + std::to_string(i) + ".csv";
        auto f = art.open(name);
        write_tracking_csv(f, r.records[i]);
    }
    art.add(to_string(cfg.control.controllerSource), r);
    return art.finish(&r);
}

int cmd_ensembles(const Options& o, const std::string& command, const std::vector<SignalSource>& sources) {
    const RunConfig cfg = resolve(o);
    Artifacts art(o, cfg, command);
    for (SignalSource src : sources) {
        const EnsembleResult r = ensemble_for(cfg, src, o);
        auto f = art.open("ensemble_" + to_string(src) + ".csv");
        write_ensemble_csv(f, r.stats);
        art.add(to_string(src), r);
    }
    return art.finish();
}

int cmd_fig4(const Options& o) {
    const RunConfig cfg = resolve(o);
    Artifacts art(o, cfg, "fig4");
    const auto rows = epsilon_sweep(cfg, cfg.sweepEpsilons, {SignalSource::Estimator, SignalSource::TrueState},
                                    o.threads, progress("sweep"));
    auto f = art.open("sweep.csv");
    write_sweep_csv(f, rows);
    return art.finish();
}

int cmd_run(const Options& o) {
    const RunConfig cfg = resolve(o);
    Artifacts art(o, cfg, "run");
    const EnsembleResult r = run_ensemble(cfg, o.threads, progress("run"));
    auto f = art.open("ensemble.csv");
    write_ensemble_csv(f, r.stats);
    art.add(to_string(cfg.control.controllerSource), r);
    return art.finish(&r);
}

int cmd_theory(const Options& o) {
    const RunConfig cfg = resolve(o);
    const ScaledParams p = cfg.scaled();
    const double eps = cfg.control.epsilon;
    const TheoryInputs in = harmonic_theory_inputs(eps, p);
    auto show = [](std::optional<double> v) { return v ? std::to_string(*v) : std::string("uncontrollable"); };
    std::printf("gamma = %.6g\nktilde = %.6g\nE0 = %.6g\nE1 = %.6g\n", p.gamma(), p.ktilde(), in.E0, in.E1);
    std::printf("epsilon threshold (beta = 1) = %.6g\n", p.gamma() * std::pow(p.ktilde(), 4) / 2.0);
    std::printf("epsilon = %.6g\nbeta = %.4f\ncentroid = %s\nsqueezing = %s\n", eps, in.beta(),
                show(theory_ss_energy(in, TheoryVariant::Centroid)).c_str(),
                show(theory_ss_energy(in, TheoryVariant::Squeezing)).c_str());

    std::printf("\n%10s %10s %12s %12s\n", "epsilon", "beta", "centroid", "squeezing");
    for (double e : cfg.sweepEpsilons) {
        const TheoryInputs t = harmonic_theory_inputs(e, p);
        std::printf("%10.4g %10.4f %12s %12s\n", e, t.beta(), show(theory_ss_energy(t, TheoryVariant::Centroid)).c_str(),
                    show(theory_ss_energy(t, TheoryVariant::Squeezing)).c_str());
    }

    // Dense curve for plotting.
    Artifacts art(o, cfg, "theory");
    auto f = art.open("theory.csv");
    f << "epsilon,beta,theory_centroid,theory_squeezing\n";
    for (int i = 0; i <= 200; ++i) {
        const double e = 0.001 * std::pow(300.0, i / 200.0);
        const TheoryInputs t = harmonic_theory_inputs(e, p);
        const auto c = theory_ss_energy(t, TheoryVariant::Centroid);
        const auto s = theory_ss_energy(t, TheoryVariant::Squeezing);
        f << e << ',' << t.beta() << ',' << (c ? std::to_string(*c) : "") << ',' << (s ? std::to_string(*s) : "")
          << '\n';
    }
    return art.finish();
}

int cmd_validate(const Options& o) {
    const RunConfig cfg = resolve(o);
    int failed = 0;
    for (const Check& c : run_invariant_suite(cfg)) {
        std::printf("%-18s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.detail.c_str());
        failed += !c.pass;
    }
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback cooling of an atom in an optical lattice: simulations and theory"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "key = value file or run manifest")->check(CLI::ExistingFile);
        sub->add_option("--set", o.sets, "override a key, e.g. control.epsilon=0.05 (repeatable)");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--ntraj", o.ntraj, "trajectories per ensemble (default 32)");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    };

    struct Sub {
        const char* name;
        const char* help;
        std::function<int()> run;
    };
    const std::vector<Sub> subs{
        {"fig1", "single-trajectory tracking: true vs estimated <X> and V_x", [&] { return cmd_fig1(o); }},
        {"fig2", "energy ensembles: estimator, photocurrent and no feedback",
         [&] {
             return cmd_ensembles(o, "fig2",
                                  {SignalSource::Estimator, SignalSource::Photocurrent, SignalSource::None});
         }},
        {"fig3", "band populations: estimator vs true-state feedback",
         [&] { return cmd_ensembles(o, "fig3", {SignalSource::Estimator, SignalSource::TrueState}); }},
        {"fig4", "final energy against epsilon with the steady-state theory", [&] { return cmd_fig4(o); }},
        {"run", "one ensemble with the resolved configuration", [&] { return cmd_run(o); }},
        {"theory", "steady-state theory tables", [&] { return cmd_theory(o); }},
        {"validate", "invariant suite", [&] { return cmd_validate(o); }},
    };
    std::vector<CLI::App*> handles;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        add_common(sub);
        handles.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (handles[i]->parsed()) return subs[i].run();
    } catch (const UnknownKeyError& e) {
        std::cerr << "error: unknown configuration key '" << e.key() << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
