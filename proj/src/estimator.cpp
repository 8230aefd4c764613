#include "fbcool/estimator.hpp"

#include <cmath>
#include <numbers>

#include "fbcool/wavefunction.hpp"

namespace fbcool {

using std::numbers::pi;

bool GaussianState::finite() const {
    return std::isfinite(xMean) && std::isfinite(pMean) && std::isfinite(vx) && std::isfinite(vp) &&
           std::isfinite(cxp);
}

std::complex<double> gaussian_closure(const GaussianState& g, double u) {
    return std::polar(std::exp(-0.5 * u * u * g.vx), u * g.xMean);
}

CosineClosure cosine_closure(const GaussianState& g, double ktilde) {
    const double q = 2.0 * ktilde;
    const std::complex<double> e1 = gaussian_closure(g, q);
    const std::complex<double> e2 = gaussian_closure(g, 2.0 * q);
    const double k2 = ktilde * ktilde;
    return {0.5 + 0.5 * e1.real(), -ktilde * e1.imag(), -2.0 * k2 * e1.real(),
            0.5 * k2 * (1.0 - e2.real())};
}

GaussianEstimator::GaussianEstimator(const GaussianState& initial, const ScaledParams& params, double dt)
    : state_(initial), params_(params), dt_(dt) {
    if (!initial.finite() || initial.vx <= 0.0 || initial.vp <= 0.0)
        throw std::invalid_argument("estimator initial state must have finite moments and positive variances");
}

double GaussianEstimator::predicted_cos_sq() const {
    return cosine_closure(state_, params_.ktilde()).cosSq;
}

InnovationRecord GaussianEstimator::step(double dr, double amplitude, double gamma) {
    const ScaledParams p = params_.withGamma(gamma);
    const CosineClosure cl = cosine_closure(state_, p.ktilde());
    const double dW = innovation_increment(cl.cosSq, dr, p, dt_);

    const double s = std::sqrt(2.0 * p.eta() * gamma);
    const double s2 = s * s;
    const double dt = dt_;
    const double V = amplitude;
    const double x = state_.xMean;
    const double pm = state_.pMean;
    const double vx = state_.vx;
    const double vp = state_.vp;
    const double sig = 0.5 * state_.cxp;
    const double delta = vx * vp - sig * sig - 0.25;
    const double d1 = cl.dc, d2 = cl.d2c;

    const double xNew = x + 2.0 * pi * pm * dt - 2.0 * s * vx * d1 * dW;
    const double pNew = pm + V * d1 * dt - 2.0 * s * sig * d1 * dW;
    double vxNew = vx + (4.0 * pi * sig - 4.0 * s2 * vx * vx * d1 * d1) * dt - 2.0 * s * vx * vx * d2 * dW;
    const double sigNew =
        sig + (2.0 * pi * vp + V * vx * d2 - 4.0 * s2 * vx * sig * d1 * d1) * dt - 2.0 * s * sig * vx * d2 * dW;
    double deltaNew = delta +
                      (2.0 * gamma * vx * cl.dcSquared - 4.0 * s2 * vx * d1 * d1 * (delta + 0.25) -
                       s2 * vx * vx * d2 * d2) * dt -
                      2.0 * s * vx * d2 * delta * dW;

    bool clamped = false;
    constexpr double kMinVariance = 1e-6;
    if (!(vxNew > kMinVariance)) {
        vxNew = kMinVariance;
        clamped = true;
    }
    if (deltaNew < -1e-12) {
        deltaNew = 0.0;
        clamped = true;
    }
    deltaNew = std::max(deltaNew, 0.0);

    // The model is periodic with period L = pi/k, so the mean is reduced to
    // one period and V_x is capped at L^2/12 (uniform over a period), beyond
    // which the closure carries no information. Capping keeps vp and the
    // x-p correlation coefficient.
    const double period = pi / p.ktilde();
    const double vxCap = period * period / 12.0;
    double sigOut = sigNew;
    if (vxNew > vxCap) {
        const double vpNew = (0.25 + deltaNew + sigNew * sigNew) / vxNew;
        const double r = vxCap / vxNew;
        vxNew = vxCap;
        sigOut = sigNew * std::sqrt(r);
        deltaNew = std::max(vxNew * vpNew - sigOut * sigOut - 0.25, 0.0);
        clamped = true;
    }

    state_.xMean = xNew - period * std::floor(xNew / period + 0.5);
    state_.pMean = pNew;
    state_.vx = vxNew;
    state_.cxp = 2.0 * sigOut;
    state_.vp = (0.25 + deltaNew + sigOut * sigOut) / vxNew;
    ++steps_;
    if (clamped) ++clamps_;
    if (!state_.finite())
        throw EstimatorDivergence("Gaussian estimator produced non-finite moments at step " +
                                  std::to_string(steps_));
    return {dW, cl.cosSq};
}

} // namespace fbcool
