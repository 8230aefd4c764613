#include "fbcool/density.hpp"

#include <cmath>
#include <numbers>

namespace fbcool {

using std::numbers::pi;

namespace {

// F^-1 diag(d) F as a dense matrix, built column by column.
Eigen::MatrixXcd spectral_operator(Fft& fft, const CVector& diag) {
    const int n = fft.size();
    Eigen::MatrixXcd out(n, n);
    CVector col(n);
    for (int j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cplx{});
        col[j] = 1.0;
        fft.forward(col);
        for (int k = 0; k < n; ++k) col[k] *= diag[k] / static_cast<double>(n);
        fft.backward(col);
        for (int i = 0; i < n; ++i) out(i, j) = col[i];
    }
    return out;
}

} // namespace

DensityState density_from(const WaveState& s) {
    const Eigen::Map<const Eigen::VectorXcd> psi(s.psi.data(), static_cast<Eigen::Index>(s.psi.size()));
    return {psi * psi.adjoint(), s.potentialAmplitude, s.time};
}

DensityIntegrator::DensityIntegrator(const SpatialGrid& grid, const ScaledParams& params, double dt)
    : grid_(grid), params_(params), dt_(dt), cosSq_(grid.size()) {
    const int n = grid.size();
    if (n > kMaxPoints)
        throw std::invalid_argument("DensityIntegrator is limited to " + std::to_string(kMaxPoints) +
                                    " grid points");
    const auto x = grid.positions();
    const auto k = grid.wavenumbers();
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(params.ktilde() * x[i]);
        cosSq_[i] = c * c;
    }
    Fft fft(n);
    CVector kin(n), mom(n);
    for (int i = 0; i < n; ++i) {
        kin[i] = std::polar(1.0, -pi * k[i] * k[i] * dt);
        mom[i] = k[i];
    }
    kineticProp_ = spectral_operator(fft, kin);
    momentum_ = spectral_operator(fft, mom);
}

Eigen::MatrixXcd DensityIntegrator::propagator(double amplitude) const {
    const int n = grid_.size();
    Eigen::VectorXcd half(n);
    for (int i = 0; i < n; ++i) half[i] = std::polar(1.0, 0.5 * amplitude * cosSq_[i] * dt_);
    return half.asDiagonal() * kineticProp_ * half.asDiagonal();
}

void DensityIntegrator::step_hamiltonian(DensityState& s) const {
    const Eigen::MatrixXcd u = propagator(s.potentialAmplitude);
    s.rho = u * s.rho * u.adjoint();
    s.time += dt_;
}

void DensityIntegrator::step_measurement(DensityState& s, double dW, double gamma) const {
    const int n = grid_.size();
    const double m = mean_cos_sq(s);
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += s.rho(i, i).real() * (cosSq_[i] - m) * (cosSq_[i] - m);
    const double s2 = 2.0 * params_.eta() * gamma;
    const double kick = std::sqrt(s2) * dW;
    const double decay = gamma * dt_;
    // Milstein correction, the density-matrix image of the one in WaveEvolver.
    const double corr = 0.5 * s2 * (dW * dW - dt_);
    for (int j = 0; j < n; ++j) {
        const double dj = cosSq_[j] - m;
        for (int i = 0; i < n; ++i) {
            const double di = cosSq_[i] - m;
            const double d = cosSq_[i] - cosSq_[j];
            const double sum = di + dj;
            s.rho(i, j) *= 1.0 - decay * d * d - kick * sum + corr * (sum * sum - 4.0 * var);
        }
    }
    const double tr = trace(s);
    if (std::abs(tr - 1.0) > 1e-6)
        throw StepSizeError("density trace moved by " + std::to_string(tr - 1.0) +
                            " in one step; reduce dt");
    s.rho = 0.5 * (s.rho + s.rho.adjoint().eval());
    s.rho /= tr;
}

void DensityIntegrator::step(DensityState& s, double dW, double gamma) const {
    step_hamiltonian(s);
    step_measurement(s, dW, gamma);
}

double DensityIntegrator::trace(const DensityState& s) const { return s.rho.trace().real(); }

double DensityIntegrator::purity(const DensityState& s) const {
    return (s.rho * s.rho).trace().real();
}

double DensityIntegrator::mean_cos_sq(const DensityState& s) const {
    return (s.rho.diagonal().real().array() * cosSq_.array()).sum();
}

double DensityIntegrator::expectation(const DensityState& s, Observable which) const {
    const auto x = grid_.positions();
    const int n = grid_.size();
    switch (which) {
    case Observable::X: {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += s.rho(i, i).real() * x[i];
        return acc;
    }
    case Observable::P: return (momentum_ * s.rho).trace().real();
    case Observable::Cos2kX: return 2.0 * mean_cos_sq(s) - 1.0;
    case Observable::CosSq: return mean_cos_sq(s);
    case Observable::Energy: {
        const double v = params_.vmax();
        return pi * (momentum_ * momentum_ * s.rho).trace().real() - v * mean_cos_sq(s) + v;
    }
    case Observable::Parity: {
        cplx acc{};
        for (int i = 0; i < n; ++i) acc += s.rho(grid_.reflect(i), i);
        return acc.real();
    }
    }
    return 0.0;
}

WaveMoments DensityIntegrator::moments(const DensityState& s) const {
    const auto xs = grid_.positions();
    const int n = grid_.size();
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
    const Eigen::MatrixXcd& p = momentum_;
    double xm = 0.0, x2 = 0.0;
    for (int i = 0; i < n; ++i) {
        xm += s.rho(i, i).real() * x[i];
        x2 += s.rho(i, i).real() * x[i] * x[i];
    }
    const double pm = (p * s.rho).trace().real();
    const double p2 = (p * p * s.rho).trace().real();
    const Eigen::MatrixXcd xp = x.cast<cplx>().asDiagonal() * p;
    const double sym = ((xp + xp.adjoint()) * s.rho).trace().real();
    return {xm, pm, x2 - xm * xm, p2 - pm * pm, sym - 2.0 * xm * pm};
}

} // namespace fbcool
