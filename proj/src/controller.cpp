#include "fbcool/controller.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace fbcool {

namespace {

// Rows of (X^T X)^-1 X^T for X = [tau^2, tau, 1], tau_k = -(n-1-k) dt.
// Built in the rescaled variable u = tau / h for conditioning.
void quadratic_weights(int n, double dt, std::vector<double> (&w)[3]) {
    const double h = std::max(n - 1, 1) * dt;
    Eigen::MatrixXd X(n, 3);
    for (int k = 0; k < n; ++k) {
        const double u = -static_cast<double>(n - 1 - k) / std::max(n - 1, 1);
        X(k, 0) = u * u;
        X(k, 1) = u;
        X(k, 2) = 1.0;
    }
    const Eigen::Matrix3d gram = X.transpose() * X;
    const Eigen::MatrixXd hat = gram.ldlt().solve(X.transpose());
    const double scale[3] = {1.0 / (h * h), 1.0 / h, 1.0};
    for (int r = 0; r < 3; ++r) {
        w[r].resize(n);
        for (int k = 0; k < n; ++k) w[r][k] = hat(r, k) * scale[r];
    }
}

QuadraticFit assemble(double A, double B, double C, double tNow, int n) {
    QuadraticFit f;
    f.a = A;
    f.b = B - 2.0 * A * tNow;
    f.c = C - B * tNow + A * tNow * tNow;
    f.slopeAtNow = B;
    f.tNow = tNow;
    f.points = n;
    return f;
}

} // namespace

QuadraticFit fit_quadratic(std::span<const double> values, double dt, double tNow) {
    const int n = static_cast<int>(values.size());
    if (n < 3) throw ContractViolation("quadratic fit needs at least three samples");
    std::vector<double> w[3];
    quadratic_weights(n, dt, w);
    double coef[3] = {0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < n; ++k) coef[r] += w[r][k] * values[k];
    return assemble(coef[0], coef[1], coef[2], tNow, n);
}

Controller::Controller(const ControlConfig& config, double vmax)
    : config_(config), nominal_(vmax), low_((1.0 - config.epsilon) * (1.0 - config.epsilon) * vmax),
      high_((1.0 + config.epsilon) * (1.0 + config.epsilon) * vmax), amplitude_(vmax),
      ring_(static_cast<std::size_t>(config.fitWindow)) {
    config_.validate();
}

const std::vector<double>& Controller::slope_weights(int n) {
    if (weightsFor_ != n) {
        quadratic_weights(n, config_.dt, weights_);
        weightsFor_ = n;
    }
    return weights_[1];
}

QuadraticFit Controller::push_and_fit(double t, double signal) {
    if (!std::isfinite(signal)) throw ContractViolation("controller signal must be finite");
    if (count_ > 0) {
        const double gap = t - lastTime_;
        if (!(gap > 0.0)) throw ContractViolation("controller sample times must increase");
        if (std::abs(gap - config_.dt) > 1e-6 * config_.dt + 1e-12 * std::abs(t))
            throw ContractViolation("controller samples must be spaced by control.dt");
    }
    lastTime_ = t;
    ring_[head_] = signal;
    head_ = (head_ + 1) % ring_.size();
    count_ = std::min(count_ + 1, ring_.size());

    const int n = static_cast<int>(count_);
    if (n < 3) return QuadraticFit{.tNow = t, .points = n};

    slope_weights(n);
    // Oldest sample sits at `start`; walk the ring in two contiguous runs.
    const std::size_t cap = ring_.size();
    const std::size_t start = (head_ + cap - count_) % cap;
    const std::size_t first = std::min(count_, cap - start);
    double coef[3] = {0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
        const double* w = weights_[r].data();
        double acc = 0.0;
        for (std::size_t k = 0; k < first; ++k) acc += w[k] * ring_[start + k];
        for (std::size_t k = first; k < count_; ++k) acc += w[k] * ring_[k - first];
        coef[r] = acc;
    }
    return assemble(coef[0], coef[1], coef[2], t, n);
}

double Controller::decide(const QuadraticFit& fit, double t) {
    if (config_.controllerSource == SignalSource::None || t < config_.feedbackStartTime ||
        !fit.valid()) {
        active_ = false;
        amplitude_ = nominal_;
        return amplitude_;
    }
    if (!active_) {
        active_ = true;
        // Nothing to hold on the first decision; start from the low setting.
        if (fit.slopeAtNow == 0.0) amplitude_ = low_;
    }
    if (fit.slopeAtNow > 0.0) amplitude_ = high_;
    else if (fit.slopeAtNow < 0.0) amplitude_ = low_;
    return amplitude_;
}

double photocurrent_signal(double dr, const ScaledParams& p, double dt) {
    return dr / (p.eta() * std::sqrt(8.0 * p.gamma()) * dt);
}

double select_signal(SignalSource source, const SignalInputs& in, const ScaledParams& p, double dt) {
    switch (source) {
    case SignalSource::Estimator: return -in.estimatorCosSq;
    case SignalSource::Photocurrent: return photocurrent_signal(in.photocurrent, p, dt);
    case SignalSource::TrueState: return -in.trueCosSq;
    case SignalSource::None: return -in.estimatorCosSq;
    }
    return 0.0;
}

} // namespace fbcool
