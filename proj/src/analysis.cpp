#include "fbcool/analysis.hpp"

#include <cmath>
#include <numbers>

namespace fbcool {

using std::numbers::pi;

Eigen::MatrixXd kinetic_matrix(const SpatialGrid& grid) {
    const int n = grid.size();
    const auto k = grid.wavenumbers();
    // T(i,j) depends on i - j only: (1/N) sum_m pi k_m^2 cos(2 pi m (i-j) / N).
    std::vector<double> row(n);
    for (int d = 0; d < n; ++d) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += pi * k[m] * k[m] * std::cos(2.0 * pi * m * d / n);
        row[d] = acc / n;
    }
    Eigen::MatrixXd t(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = row[(i - j + n) % n];
    return t;
}

BandBasis::BandBasis(const SpatialGrid& grid, const ScaledParams& params, int domainPeriods,
                     int keepBands)
    : bands_(keepBands), perBand_(domainPeriods) {
    const int n = grid.size();
    const int keep = std::min(n, keepBands * domainPeriods);
    Eigen::MatrixXd h = kinetic_matrix(grid);
    const auto x = grid.positions();
    const double v = params.vmax();
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(params.ktilde() * x[i]);
        h(i, i) += -v * c * c + v;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("band-basis eigensolve did not converge");
    states_ = solver.eigenvectors().leftCols(keep);
    energies_.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + keep);
    bands_ = keep / perBand_;
}

double BandBasis::band_energy(int band) const {
    double acc = 0.0;
    for (int j = 0; j < perBand_; ++j) acc += energies_.at(band * perBand_ + j);
    return acc / perBand_;
}

WaveState BandBasis::eigenstate(int j, double amplitude) const {
    WaveState s;
    s.psi.resize(states_.rows());
    for (Eigen::Index i = 0; i < states_.rows(); ++i) s.psi[i] = states_(i, j);
    s.potentialAmplitude = amplitude;
    return s;
}

BandPopulations band_populations(const WaveState& s, const BandBasis& basis) {
    BandPopulations out;
    const Eigen::MatrixXd& phi = basis.states();
    const int per = basis.states_per_band();
    double total = 0.0;
    for (int band = 0; band < 4 && band < basis.band_count(); ++band) {
        double pop = 0.0;
        for (int j = band * per; j < (band + 1) * per; ++j) {
            cplx overlap{};
            for (Eigen::Index i = 0; i < phi.rows(); ++i) overlap += phi(i, j) * s.psi[i];
            pop += std::norm(overlap);
        }
        out.p[band] = pop;
        total += pop;
    }
    out.remainder = 1.0 - total;
    return out;
}

ParityStatistics parity_statistics(const std::vector<std::vector<double>>& parity,
                                   double purityThreshold) {
    const int n = static_cast<int>(parity.size());
    if (n < 16) throw std::invalid_argument("parity statistics need at least 16 trajectories");
    ParityStatistics st;
    double sumD = 0.0, sumD2 = 0.0;
    int purified = 0;
    for (const auto& series : parity) {
        if (series.empty()) throw std::invalid_argument("empty parity series");
        const double first = series.front(), last = series.back();
        st.meanInitial += first / n;
        st.meanFinal += last / n;
        const double d = last - first;
        sumD += d;
        sumD2 += d * d;
        if (std::abs(last) > purityThreshold) ++purified;
        if (last > 0.0) ++st.evenCount; else ++st.oddCount;
    }
    st.drift = sumD / n;
    const double var = (sumD2 - n * st.drift * st.drift) / (n - 1);
    st.driftStdError = std::sqrt(std::max(var, 0.0) / n);
    st.driftConsistentWithZero = std::abs(st.drift) <= 2.0 * st.driftStdError;
    st.purifiedFraction = static_cast<double>(purified) / n;
    st.evenFraction = static_cast<double>(st.evenCount) / n;
    const double halfWidth = 1.96 * std::sqrt(0.25 / n);
    st.splitConsistentWithHalf = std::abs(st.evenFraction - 0.5) <= halfWidth;
    return st;
}

double TheoryInputs::beta() const {
    return gamma * std::pow(ktilde, 4) / (2.0 * epsilon);
}

TheoryInputs harmonic_theory_inputs(double epsilon, const ScaledParams& p) {
    return {epsilon, p.gamma(), p.ktilde(), pi, 3.0 * pi};
}

std::optional<double> theory_ss_energy(const TheoryInputs& in, TheoryVariant variant) {
    const double b = in.beta();
    if (!(b < 1.0) || !std::isfinite(b)) return std::nullopt;
    const double base = 0.5 * (in.E0 + in.E1);
    if (variant == TheoryVariant::Centroid) return base / (1.0 - b);
    return base / std::sqrt(1.0 - b * b);
}

double heating_rate(const WaveState& s, const WaveEvolver& ev, double gamma) {
    const double kt = ev.params().ktilde();
    const double cs2 = ev.expectation(s, [kt](double x) {
        const double sc = std::sin(kt * x) * std::cos(kt * x);
        return sc * sc;
    });
    return 8.0 * pi * gamma * kt * kt * cs2;
}

double heating_rate_harmonic(double energy, double gamma, double ktilde) {
    return 4.0 * gamma * std::pow(ktilde, 4) * energy;
}

double cooling_rate(double energy, double E0, double epsilon) {
    return -8.0 * epsilon * (energy - E0);
}

} // namespace fbcool
