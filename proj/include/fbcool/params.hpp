#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fbcool {

/// Raised for any invalid or unknown configuration entry.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a configuration key is not recognised; carries the key.
class UnknownKeyError : public ConfigError {
public:
    explicit UnknownKeyError(std::string key)
        : ConfigError("unknown configuration key: " + key), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Physical cavity-QED inputs in SI units.
///
/// `opticalWavenumber` is the spectroscopic wavenumber 1/lambda in 1/m
/// (11732 cm^-1 for the Cs D2 line is 1.1732e6 m^-1). The spatial frequency
/// used by the model is k = 2*pi*opticalWavenumber. All angular rates are in
/// rad/s. Only |detuningDelta| enters the model.
struct PhysicalParams {
    double atomMass = 2.21e-25;
    double opticalWavenumber = 1.1732e6;
    double couplingG = 2.0 * 3.14159265358979323846 * 120e6;
    double cavityDecayKappa = 2.0 * 3.14159265358979323846 * 40e6;
    double detuningDelta = -2.0 * 3.14159265358979323846 * 4e9;
    double meanPhotonAlpha = 1.0;
    double detectionEta = 1.0;

    /// Throws ConfigError on non-positive or non-finite inputs.
    void validate() const;
    /// True when |Delta| is not much larger than kappa (advisory only).
    bool detuningWarning() const;
};

/// Dimensionless model parameters. Time is in units of 2*pi/omegaHO.
class ScaledParams {
public:
    ScaledParams(double gamma, double ktilde, double eta, double omegaHO = 0.0);

    double gamma() const noexcept { return gamma_; }
    double ktilde() const noexcept { return ktilde_; }
    double vmax() const noexcept { return vmax_; }
    double eta() const noexcept { return eta_; }
    double omegaHO() const noexcept { return omegaHO_; }

    ScaledParams withGamma(double g) const { return {g, ktilde_, eta_, omegaHO_}; }
    ScaledParams withEta(double e) const { return {gamma_, ktilde_, e, omegaHO_}; }

private:
    double gamma_;
    double ktilde_;
    double vmax_;
    double eta_;
    double omegaHO_;
};

ScaledParams derive_scaled(const PhysicalParams& p);

/// Physical rates recovered from a ScaledParams together with the fixed
/// physical quantities (mass, wavenumber, kappa, Delta) that do not enter the
/// scaled model. Used for unit round-trips.
struct DescaledRates {
    double omegaHO;     // rad/s
    double couplingG;   // rad/s
    double meanPhotonAlpha;
};

DescaledRates descale(const ScaledParams& s, const PhysicalParams& fixed);

enum class SignalSource { Estimator, Photocurrent, TrueState, None };

std::string to_string(SignalSource s);
SignalSource parse_signal_source(std::string_view text);

struct ControlConfig {
    double epsilon = 0.1;
    int fitWindow = 300;
    double dt = 0.0005;
    double feedbackStartTime = 2.0;
    SignalSource controllerSource = SignalSource::Estimator;
    bool scaleGammaWithDrive = false;

    void validate() const;
};

struct SimConfig {
    int gridPoints = 512;
    int domainPeriods = 1;
    double tMax = 100.0;
    int nTrajectories = 128;
    std::uint64_t baseSeed = 20031;
    int outputStride = 100;

    void validate() const;
};

/// Everything a run needs, addressable by dotted keys
/// (physical.*, scaled.*, control.*, sim.*, sweep.*).
struct RunConfig {
    PhysicalParams physical;
    std::optional<double> gammaOverride;
    std::optional<double> ktildeOverride;
    ControlConfig control;
    SimConfig sim;
    std::vector<double> sweepEpsilons{0.005, 0.02, 0.05, 0.1, 0.2};

    /// Scaled parameters after applying any scaled.* overrides.
    ScaledParams scaled() const;

    void validate() const;

    /// Set one field from text. Throws UnknownKeyError / ConfigError.
    void set(std::string_view key, std::string_view value);

    /// Every settable key with its current value, formatted so that feeding
    /// the map back through set() reproduces this config exactly.
    std::map<std::string, std::string> to_map() const;

    /// Canonical "key = value" text of to_map(), one entry per line.
    std::string to_text() const;

    /// FNV-1a hash of to_text().
    std::uint64_t hash() const;
};

/// Apply a `key = value` file body (with `#` comments) to a config.
void apply_config_text(RunConfig& cfg, std::string_view text);

/// Load a config file. Accepts either key/value text or a run manifest
/// (JSON object with a "config" member of dotted keys).
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Parse a `key=value` override.
void apply_override(RunConfig& cfg, std::string_view assignment);

} // namespace fbcool
