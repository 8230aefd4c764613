#include "fbcool/params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fbcool {

namespace {

constexpr double kHbar = 1.054571817e-34;

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
        throw ConfigError(std::string(name) + " must be finite and positive");
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("invalid number for " + std::string(key) + ": '" + t + "'");
    return v;
}

long long parse_int(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("invalid integer for " + std::string(key) + ": '" + t + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("invalid unsigned integer for " + std::string(key) + ": '" + t + "'");
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("invalid boolean for " + std::string(key) + ": '" + t + "'");
}

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt(xs[i]);
    }
    return out;
}

} // namespace

void PhysicalParams::validate() const {
    require_positive(atomMass, "physical.atomMass");
    require_positive(opticalWavenumber, "physical.opticalWavenumber");
    require_positive(couplingG, "physical.couplingG");
    require_positive(cavityDecayKappa, "physical.cavityDecayKappa");
    if (!std::isfinite(detuningDelta) || detuningDelta == 0.0)
        throw ConfigError("physical.detuningDelta must be finite and nonzero");
    require_positive(meanPhotonAlpha, "physical.meanPhotonAlpha");
    if (!std::isfinite(detectionEta) || detectionEta <= 0.0 || detectionEta > 1.0)
        throw ConfigError("physical.detectionEta must lie in (0, 1]");
}

bool PhysicalParams::detuningWarning() const {
    return std::abs(detuningDelta) < 10.0 * cavityDecayKappa;
}

ScaledParams::ScaledParams(double gamma, double ktilde, double eta, double omegaHO)
    : gamma_(gamma), ktilde_(ktilde), vmax_(std::numbers::pi / (ktilde * ktilde)),
      eta_(eta), omegaHO_(omegaHO) {
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw ConfigError("scaled gamma must be finite and non-negative");
    require_positive(ktilde, "scaled ktilde");
    if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0)
        throw ConfigError("scaled eta must lie in [0, 1]");
}

ScaledParams derive_scaled(const PhysicalParams& p) {
    p.validate();
    using std::numbers::pi;
    const double k = 2.0 * pi * p.opticalWavenumber;
    const double absDelta = std::abs(p.detuningDelta);
    const double omega =
        p.meanPhotonAlpha * p.couplingG * k * std::sqrt(2.0 * kHbar / (p.atomMass * absDelta));
    const double ktilde = k * std::sqrt(kHbar / (p.atomMass * omega));
    const double g2 = p.couplingG * p.couplingG;
    // The extra 2*pi converts the rate to the 2*pi/omegaHO time unit.
    const double gamma = 2.0 * pi * 2.0 * p.meanPhotonAlpha * p.meanPhotonAlpha * g2 * g2 /
                         (p.detuningDelta * p.detuningDelta * p.cavityDecayKappa * omega);
    return ScaledParams(gamma, ktilde, p.detectionEta, omega);
}

DescaledRates descale(const ScaledParams& s, const PhysicalParams& fixed) {
    using std::numbers::pi;
    const double k = 2.0 * pi * fixed.opticalWavenumber;
    const double absDelta = std::abs(fixed.detuningDelta);
    const double omega = kHbar * k * k / (fixed.atomMass * s.ktilde() * s.ktilde());
    const double alphaG = omega / (k * std::sqrt(2.0 * kHbar / (fixed.atomMass * absDelta)));
    const double alpha2g4 = s.gamma() * fixed.detuningDelta * fixed.detuningDelta *
                            fixed.cavityDecayKappa * omega / (4.0 * pi);
    const double g = std::sqrt(alpha2g4) / alphaG;
    return {omega, g, alphaG / g};
}

std::string to_string(SignalSource s) {
    switch (s) {
    case SignalSource::Estimator: return "estimator";
    case SignalSource::Photocurrent: return "photocurrent";
    case SignalSource::TrueState: return "truestate";
    case SignalSource::None: return "none";
    }
    return "none";
}

SignalSource parse_signal_source(std::string_view text) {
    const std::string t = trim(text);
    if (t == "estimator") return SignalSource::Estimator;
    if (t == "photocurrent") return SignalSource::Photocurrent;
    if (t == "truestate") return SignalSource::TrueState;
    if (t == "none") return SignalSource::None;
    throw ConfigError("unknown controller source '" + t +
                      "' (expected estimator, photocurrent, truestate or none)");
}

void ControlConfig::validate() const {
    if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0)
        throw ConfigError("control.epsilon must lie in [0, 1)");
    if (fitWindow < 3) throw ConfigError("control.fitWindow must be at least 3");
    require_positive(dt, "control.dt");
    if (!std::isfinite(feedbackStartTime) || feedbackStartTime < 0.0)
        throw ConfigError("control.feedbackStartTime must be finite and non-negative");
}

void SimConfig::validate() const {
    if (gridPoints < 4 || (gridPoints & (gridPoints - 1)) != 0)
        throw ConfigError("sim.gridPoints must be a power of two (>= 4)");
    if (domainPeriods < 1) throw ConfigError("sim.domainPeriods must be at least 1");
    require_positive(tMax, "sim.tMax");
    if (nTrajectories < 1) throw ConfigError("sim.nTrajectories must be at least 1");
    if (outputStride < 1) throw ConfigError("sim.outputStride must be at least 1");
}

ScaledParams RunConfig::scaled() const {
    const ScaledParams base = derive_scaled(physical);
    return ScaledParams(gammaOverride.value_or(base.gamma()), ktildeOverride.value_or(base.ktilde()),
                        base.eta(), base.omegaHO());
}

void RunConfig::validate() const {
    physical.validate();
    (void)scaled();
    control.validate();
    sim.validate();
    for (double e : sweepEpsilons)
        if (!std::isfinite(e) || e < 0.0 || e >= 1.0)
            throw ConfigError("sweep.epsilons entries must lie in [0, 1)");
}

void RunConfig::set(std::string_view rawKey, std::string_view value) {
    const std::string key = trim(rawKey);
    const std::string v = trim(value);
    auto d = [&] { return parse_double(key, v); };
    auto i = [&] { return static_cast<int>(parse_int(key, v)); };

    if (key == "physical.atomMass") physical.atomMass = d();
    else if (key == "physical.opticalWavenumber") physical.opticalWavenumber = d();
    else if (key == "physical.couplingG") physical.couplingG = d();
    else if (key == "physical.cavityDecayKappa") physical.cavityDecayKappa = d();
    else if (key == "physical.detuningDelta") physical.detuningDelta = d();
    else if (key == "physical.meanPhotonAlpha") physical.meanPhotonAlpha = d();
    else if (key == "physical.detectionEta") physical.detectionEta = d();
    else if (key == "scaled.gamma") {
        if (v.empty() || v == "derived") gammaOverride.reset(); else gammaOverride = d();
    } else if (key == "scaled.ktilde") {
        if (v.empty() || v == "derived") ktildeOverride.reset(); else ktildeOverride = d();
    } else if (key == "scaled.eta") physical.detectionEta = d();
    else if (key == "scaled.vmax" || key == "scaled.omegaHO")
        throw ConfigError(key + " is derived and cannot be set (vmax = pi/ktilde^2)");
    else if (key == "control.epsilon") control.epsilon = d();
    else if (key == "control.fitWindow") control.fitWindow = i();
    else if (key == "control.dt") control.dt = d();
    else if (key == "control.feedbackStartTime") control.feedbackStartTime = d();
    else if (key == "control.controllerSource") control.controllerSource = parse_signal_source(v);
    else if (key == "control.scaleGammaWithDrive") control.scaleGammaWithDrive = parse_bool(key, v);
    else if (key == "sim.gridPoints") sim.gridPoints = i();
    else if (key == "sim.domainPeriods") sim.domainPeriods = i();
    else if (key == "sim.tMax") sim.tMax = d();
    else if (key == "sim.nTrajectories") sim.nTrajectories = i();
    else if (key == "sim.baseSeed") sim.baseSeed = parse_u64(key, v);
    else if (key == "sim.outputStride") sim.outputStride = i();
    else if (key == "sweep.epsilons") {
        std::vector<double> xs;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty()) xs.push_back(parse_double(key, item));
        if (xs.empty()) throw ConfigError("sweep.epsilons must not be empty");
        sweepEpsilons = std::move(xs);
    } else
        throw UnknownKeyError(key);
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["physical.atomMass"] = fmt(physical.atomMass);
    m["physical.opticalWavenumber"] = fmt(physical.opticalWavenumber);
    m["physical.couplingG"] = fmt(physical.couplingG);
    m["physical.cavityDecayKappa"] = fmt(physical.cavityDecayKappa);
    m["physical.detuningDelta"] = fmt(physical.detuningDelta);
    m["physical.meanPhotonAlpha"] = fmt(physical.meanPhotonAlpha);
    m["physical.detectionEta"] = fmt(physical.detectionEta);
    m["scaled.gamma"] = gammaOverride ? fmt(*gammaOverride) : "derived";
    m["scaled.ktilde"] = ktildeOverride ? fmt(*ktildeOverride) : "derived";
    m["control.epsilon"] = fmt(control.epsilon);
    m["control.fitWindow"] = std::to_string(control.fitWindow);
    m["control.dt"] = fmt(control.dt);
    m["control.feedbackStartTime"] = fmt(control.feedbackStartTime);
    m["control.controllerSource"] = to_string(control.controllerSource);
    m["control.scaleGammaWithDrive"] = control.scaleGammaWithDrive ? "true" : "false";
    m["sim.gridPoints"] = std::to_string(sim.gridPoints);
    m["sim.domainPeriods"] = std::to_string(sim.domainPeriods);
    m["sim.tMax"] = fmt(sim.tMax);
    m["sim.nTrajectories"] = std::to_string(sim.nTrajectories);
    m["sim.baseSeed"] = std::to_string(sim.baseSeed);
    m["sim.outputStride"] = std::to_string(sim.outputStride);
    m["sweep.epsilons"] = fmt_list(sweepEpsilons);
    return m;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineNo) + ": expected 'key = value'");
        cfg.set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        const auto manifest = nlohmann::json::parse(text, nullptr, false);
        if (manifest.is_discarded() || !manifest.contains("config") || !manifest["config"].is_object())
            throw ConfigError("manifest " + path + " has no \"config\" object");
        for (const auto& [k, v] : manifest["config"].items())
            cfg.set(k, v.is_string() ? v.get<std::string>() : v.dump());
        return;
    }
    apply_config_text(cfg, text);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
    cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

} // namespace fbcool
