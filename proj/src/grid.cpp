#include "fbcool/grid.hpp"

#include <cassert>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <algorithm>

#include <fftw3.h>

namespace fbcool {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

SpatialGrid::SpatialGrid(int nPoints, double domainLength)
    : n_(nPoints), length_(domainLength), dx_(domainLength / nPoints), x_(nPoints), k_(nPoints) {
    if (nPoints < 2 || domainLength <= 0.0)
        throw std::invalid_argument("SpatialGrid needs at least 2 points and positive length");
    const double dk = 2.0 * std::numbers::pi / domainLength;
    for (int i = 0; i < n_; ++i) {
        x_[i] = -0.5 * length_ + i * dx_;
        // Nyquist mode is taken as negative, the usual FFT convention.
        k_[i] = dk * (i < n_ / 2 ? i : i - n_);
    }
}

SpatialGrid SpatialGrid::for_lattice(int nPoints, int domainPeriods, double ktilde) {
    return SpatialGrid(nPoints, domainPeriods * std::numbers::pi / ktilde);
}

Fft::Fft(int n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    buf_ = reinterpret_cast<cplx*>(fftw_alloc_complex(static_cast<std::size_t>(n)));
    auto* b = reinterpret_cast<fftw_complex*>(buf_);
    forward_ = fftw_plan_dft_1d(n, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!buf_ || !forward_ || !backward_) throw std::runtime_error("FFTW planning failed");
}

Fft::~Fft() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
    fftw_free(buf_);
}

void Fft::forward_buffer() { fftw_execute(static_cast<fftw_plan>(forward_)); }

void Fft::backward_buffer() { fftw_execute(static_cast<fftw_plan>(backward_)); }

void Fft::forward(std::span<cplx> data) {
    assert(static_cast<int>(data.size()) == n_);
    std::copy(data.begin(), data.end(), buf_);
    forward_buffer();
    std::copy(buf_, buf_ + n_, data.begin());
}

void Fft::backward(std::span<cplx> data) {
    assert(static_cast<int>(data.size()) == n_);
    std::copy(data.begin(), data.end(), buf_);
    backward_buffer();
    std::copy(buf_, buf_ + n_, data.begin());
}

} // namespace fbcool
