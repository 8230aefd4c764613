#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fbcool {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Uniform periodic grid on [-L/2, L/2) with a well minimum at x = 0.
/// Index i and (N - i) mod N are mirror images.
class SpatialGrid {
public:
    SpatialGrid(int nPoints, double domainLength);

    /// Grid spanning `domainPeriods` lattice periods of length pi/ktilde.
    static SpatialGrid for_lattice(int nPoints, int domainPeriods, double ktilde);

    int size() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double dx() const noexcept { return dx_; }
    std::span<const double> positions() const noexcept { return x_; }
    /// Angular wavenumbers in FFT order (0, dk, ..., -dk).
    std::span<const double> wavenumbers() const noexcept { return k_; }
    int reflect(int i) const noexcept { return (n_ - i) % n_; }

private:
    int n_;
    double length_;
    double dx_;
    std::vector<double> x_;
    std::vector<double> k_;
};

/// Complex FFT of fixed length backed by FFTW, unnormalised in both
/// directions. Owns an aligned work buffer; the hot path fills buffer(),
/// calls forward_buffer()/backward_buffer() and reads the result back.
/// Plans use FFTW_ESTIMATE so results are reproducible run to run.
/// Planning is serialised by a global lock.
class Fft {
public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const noexcept { return n_; }
    std::span<cplx> buffer() noexcept { return {buf_, static_cast<std::size_t>(n_)}; }
    void forward_buffer();
    void backward_buffer();

    /// Transform arbitrary data in place (copies through the work buffer).
    void forward(std::span<cplx> data);
    void backward(std::span<cplx> data);

private:
    int n_ = 0;
    cplx* buf_ = nullptr;
    void* forward_ = nullptr;
    void* backward_ = nullptr;
};

/// a * b without the NaN/Inf recovery path of the library operator.
inline cplx cmul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

} // namespace fbcool
