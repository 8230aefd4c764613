#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "fbcool/params.hpp"

namespace fbcool {

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// s(t) ~ a t^2 + b t + c over the history window.
struct QuadraticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double slopeAtNow = 0.0;
    double tNow = 0.0;
    int points = 0;

    bool valid() const noexcept { return points >= 3; }
};

/// Least-squares quadratic through `values` sampled at uniform spacing `dt`
/// ending at `tNow`. Requires at least three samples.
QuadraticFit fit_quadratic(std::span<const double> values, double dt, double tNow);

/// Bang-bang switching of the potential amplitude between (1-eps)^2 V and
/// (1+eps)^2 V on the sign of the fitted slope of -<cos^2(kX)>.
class Controller {
public:
    Controller(const ControlConfig& config, double vmax);

    /// Append a sample and refit over the most recent fitWindow samples.
    /// Throws ContractViolation unless t = previous t + dt.
    QuadraticFit push_and_fit(double t, double signal);

    /// Amplitude to apply after time t given a fit. Nominal V before the
    /// feedback start time, during warm-up, or when the source is None;
    /// the previous amplitude when the slope is exactly zero.
    double decide(const QuadraticFit& fit, double t);

    double current_amplitude() const noexcept { return amplitude_; }
    bool active() const noexcept { return active_; }
    double low_amplitude() const noexcept { return low_; }
    double high_amplitude() const noexcept { return high_; }
    double nominal_amplitude() const noexcept { return nominal_; }
    std::size_t history_size() const noexcept { return count_; }

private:
    const std::vector<double>& slope_weights(int n);

    ControlConfig config_;
    double nominal_, low_, high_;
    double amplitude_;
    bool active_ = false;
    std::vector<double> ring_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    double lastTime_ = 0.0;
    int weightsFor_ = -1;
    std::vector<double> weights_[3];
};

/// Trigger signal, in units of -<cos^2(kX)>, for each configured source.
/// For the photocurrent source the increment is rescaled so its mean is
/// -<cos^2(kX)>: signal = dr / (eta sqrt(8 G) dt).
double photocurrent_signal(double dr, const ScaledParams& p, double dt);

struct SignalInputs {
    double estimatorCosSq;
    double trueCosSq;
    double photocurrent;
};

double select_signal(SignalSource source, const SignalInputs& in, const ScaledParams& p, double dt);

} // namespace fbcool
