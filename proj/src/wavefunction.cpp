#include "fbcool/wavefunction.hpp"

#include <cmath>
#include <numbers>

namespace fbcool {

using std::numbers::pi;

WaveState gaussian_packet(const SpatialGrid& grid, double x0, double p0, double vx,
                          double potentialAmplitude) {
    const int n = grid.size();
    const double L = grid.length();
    const auto x = grid.positions();
    WaveState s;
    s.psi.assign(n, cplx{});
    s.potentialAmplitude = potentialAmplitude;
    const int images = 2 + static_cast<int>(std::ceil(8.0 * std::sqrt(vx) / L));
    for (int i = 0; i < n; ++i) {
        cplx acc{};
        for (int m = -images; m <= images; ++m) {
            const double d = x[i] - x0 - m * L;
            acc += std::exp(-d * d / (4.0 * vx)) * std::polar(1.0, p0 * (x[i] - m * L));
        }
        s.psi[i] = acc;
    }
    normalize(s.psi);
    return s;
}

double normalize(CVector& psi) {
    double n2 = 0.0;
    for (const auto& z : psi) n2 += std::norm(z);
    const double nrm = std::sqrt(n2);
    const double inv = 1.0 / nrm;
    for (auto& z : psi) z *= inv;
    return nrm;
}

WaveEvolver::WaveEvolver(const SpatialGrid& grid, const ScaledParams& params, double dt)
    : grid_(grid), params_(params), dt_(dt), fft_(grid.size()), cosSq_(grid.size()),
      cos2k_(grid.size()), kinetic_(grid.size()), scratch_(grid.size()) {
    const auto x = grid_.positions();
    const auto k = grid_.wavenumbers();
    const double kt = params_.ktilde();
    const double invN = 1.0 / grid_.size();
    for (int i = 0; i < grid_.size(); ++i) {
        const double c = std::cos(kt * x[i]);
        cosSq_[i] = c * c;
        cos2k_[i] = std::cos(2.0 * kt * x[i]);
        kinetic_[i] = std::polar(invN, -pi * k[i] * k[i] * dt_);
    }
}

const CVector& WaveEvolver::half_potential(double amplitude) {
    for (const auto& [v, phases] : potentialCache_)
        if (v == amplitude) return phases;
    if (potentialCache_.size() >= 8) potentialCache_.erase(potentialCache_.begin());
    CVector phases(grid_.size());
    for (int i = 0; i < grid_.size(); ++i)
        phases[i] = std::polar(1.0, 0.5 * amplitude * cosSq_[i] * dt_);
    potentialCache_.emplace_back(amplitude, std::move(phases));
    return potentialCache_.back().second;
}

void WaveEvolver::step_hamiltonian(WaveState& s) {
    const CVector& half = half_potential(s.potentialAmplitude);
    CVector& psi = s.psi;
    const int n = grid_.size();
    const auto work = fft_.buffer();
    for (int i = 0; i < n; ++i) work[i] = cmul(psi[i], half[i]);
    fft_.forward_buffer();
    for (int i = 0; i < n; ++i) work[i] = cmul(work[i], kinetic_[i]);
    fft_.backward_buffer();
    for (int i = 0; i < n; ++i) psi[i] = cmul(work[i], half[i]);
    s.time += dt_;
}

MeasurementUpdate WaveEvolver::step_measurement(WaveState& s, double dW, double gamma) {
    if (params_.eta() < 1.0)
        throw UnsupportedModeError(
            "pure-state unraveling requires unit detection efficiency; use DensityIntegrator for eta < 1");
    CVector& psi = s.psi;
    const int n = grid_.size();
    const double m = mean_cos_sq(s);
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = cosSq_[i] - m;
        var += std::norm(psi[i]) * d * d;
    }
    // Milstein: the (dW^2 - dt) term cancels the O(dt) norm error of the
    // plain Euler step, leaving O(dt^3/2) before renormalisation.
    const double kick = std::sqrt(2.0 * gamma) * dW;
    const double gdt = gamma * dt_;
    const double corr = gamma * (dW * dW - dt_);
    double n2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = cosSq_[i] - m;
        psi[i] *= 1.0 - kick * d - gdt * d * d + corr * (d * d - 2.0 * var);
        n2 += std::norm(psi[i]);
    }
    const double nrm = std::sqrt(n2);
    const double inv = 1.0 / nrm;
    for (auto& z : psi) z *= inv;
    return {m, nrm - 1.0};
}

double WaveEvolver::mean_cos_sq(const WaveState& s) const {
    double acc = 0.0;
    for (int i = 0; i < grid_.size(); ++i) acc += std::norm(s.psi[i]) * cosSq_[i];
    return acc;
}

double WaveEvolver::parity(const WaveState& s) const {
    cplx acc{};
    for (int i = 0; i < grid_.size(); ++i) acc += std::conj(s.psi[i]) * s.psi[grid_.reflect(i)];
    return acc.real();
}

void WaveEvolver::momentum_moments(const CVector& psi, double& p, double& p2) {
    scratch_ = psi;
    fft_.forward(scratch_);
    const auto k = grid_.wavenumbers();
    double w = 0.0, a = 0.0, b = 0.0;
    for (int i = 0; i < grid_.size(); ++i) {
        const double q = std::norm(scratch_[i]);
        w += q;
        a += q * k[i];
        b += q * k[i] * k[i];
    }
    p = a / w;
    p2 = b / w;
}

double WaveEvolver::energy(const WaveState& s) {
    double p = 0.0, p2 = 0.0;
    momentum_moments(s.psi, p, p2);
    const double v = params_.vmax();
    return pi * p2 - v * mean_cos_sq(s) + v;
}

double WaveEvolver::expectation(const WaveState& s, Observable which) {
    switch (which) {
    case Observable::X: return expectation(s, [](double x) { return x; });
    case Observable::P: {
        double p = 0.0, p2 = 0.0;
        momentum_moments(s.psi, p, p2);
        return p;
    }
    case Observable::Cos2kX: {
        double acc = 0.0;
        for (int i = 0; i < grid_.size(); ++i) acc += std::norm(s.psi[i]) * cos2k_[i];
        return acc;
    }
    case Observable::CosSq: return mean_cos_sq(s);
    case Observable::Energy: return energy(s);
    case Observable::Parity: return parity(s);
    }
    return 0.0;
}

double WaveEvolver::expectation(const WaveState& s, const std::function<double(double)>& f) const {
    const auto x = grid_.positions();
    double acc = 0.0;
    for (int i = 0; i < grid_.size(); ++i) acc += std::norm(s.psi[i]) * f(x[i]);
    return acc;
}

WaveMoments WaveEvolver::moments(const WaveState& s) {
    const auto x = grid_.positions();
    const auto k = grid_.wavenumbers();
    const int n = grid_.size();
    double xm = 0.0, x2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = std::norm(s.psi[i]);
        xm += w * x[i];
        x2 += w * x[i] * x[i];
    }
    // P psi spectrally, then <XP + PX> = 2 Re <psi| X P |psi>.
    scratch_ = s.psi;
    fft_.forward(scratch_);
    double pm = 0.0, p2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double q = std::norm(scratch_[i]) / n;
        pm += q * k[i];
        p2 += q * k[i] * k[i];
        scratch_[i] *= k[i] / n;
    }
    fft_.backward(scratch_);
    double xp = 0.0;
    for (int i = 0; i < n; ++i) xp += (std::conj(s.psi[i]) * x[i] * scratch_[i]).real();
    return {xm, pm, x2 - xm * xm, p2 - pm * pm, 2.0 * xp - 2.0 * xm * pm};
}

double photocurrent_increment(double meanCosSq, double dW, const ScaledParams& p, double dt) {
    const double eta = p.eta();
    return std::sqrt(eta) * (dW - std::sqrt(8.0 * eta * p.gamma()) * meanCosSq * dt);
}

double innovation_increment(double meanCosSq, double dr, const ScaledParams& p, double dt) {
    const double eta = p.eta();
    return dr / std::sqrt(eta) + std::sqrt(8.0 * eta * p.gamma()) * meanCosSq * dt;
}

double synthesize_photocurrent(const WaveState& s, const WaveEvolver& ev, double dW,
                               const ScaledParams& p, double dt) {
    return photocurrent_increment(ev.mean_cos_sq(s), dW, p, dt);
}

} // namespace fbcool
