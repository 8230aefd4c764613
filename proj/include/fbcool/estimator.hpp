#pragma once

#include <complex>
#include <stdexcept>

#include "fbcool/params.hpp"

namespace fbcool {

/// Estimator moments. `cxp` is the symmetric covariance
/// <XP+PX> - 2<X><P>, so the uncertainty bound reads vx*vp - (cxp/2)^2 >= 1/4.
struct GaussianState {
    double xMean = 0.0;
    double pMean = 0.0;
    double vx = 0.5;
    double vp = 0.5;
    double cxp = 0.0;

    double uncertainty_product() const { return vx * vp - 0.25 * cxp * cxp; }
    bool finite() const;
};

/// The estimator's reading of one photocurrent increment.
struct InnovationRecord {
    double dWEst;
    double predictedCosSq;
};

class EstimatorDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// <exp(iuX)> for a Gaussian with the given position mean and variance.
std::complex<double> gaussian_closure(const GaussianState& g, double u);

/// Expectations of the measured observable c = cos^2(k X) and its
/// derivatives under the Gaussian closure.
struct CosineClosure {
    double cosSq;     // <c>
    double dc;        // <c'>
    double d2c;       // <c''>
    double dcSquared; // <c'^2>
};

CosineClosure cosine_closure(const GaussianState& g, double ktilde);

/// Real-time Gaussian filter driven only by the photocurrent and the applied
/// potential amplitude.
///
/// The five moments follow the Ito moment equations of the conditioned
/// master equation with every expectation closed in Gaussian form
/// (s = sqrt(2 eta G), sigma = cxp/2, V the applied amplitude):
///
///   d<X>  = 2 pi <P> dt                                 - 2 s vx <c'> dW
///   d<P>  = V <c'> dt                                   - 2 s sigma <c'> dW
///   dvx   = (4 pi sigma - 4 s^2 vx^2 <c'>^2) dt          - 2 s vx^2 <c''> dW
///   dvp   = (2 V sigma <c''> + 2 G <c'^2>
///            - 4 s^2 sigma^2 <c'>^2) dt                 - 2 s (sigma^2 - 1/4) <c''> dW
///   dsigma= (2 pi vp + V vx <c''> - 4 s^2 vx sigma <c'>^2) dt - 2 s sigma vx <c''> dW
///
/// with dW the innovation inferred from the photocurrent using the filter's
/// own <c>. The Euler-Maruyama step is taken in the coordinates
/// (<X>, <P>, vx, sigma, delta) where delta = vx vp - sigma^2 - 1/4 is the
/// excess over the uncertainty bound; its equation
///
///   d delta = (2 G vx <c'^2> - 4 s^2 vx <c'>^2 (delta + 1/4)
///              - s^2 vx^2 <c''>^2) dt - 2 s vx <c''> delta dW
///
/// is the Ito image of the three variance equations, and its noise vanishes
/// at delta = 0, so discrete steps cannot random-walk through the bound.
class GaussianEstimator {
public:
    GaussianEstimator(const GaussianState& initial, const ScaledParams& params, double dt);

    /// Advance by one dt using photocurrent increment `dr` while the
    /// potential amplitude is `amplitude` and the measurement strength is
    /// `gamma`. Throws EstimatorDivergence on non-finite moments.
    InnovationRecord step(double dr, double amplitude, double gamma);
    InnovationRecord step(double dr, double amplitude) { return step(dr, amplitude, params_.gamma()); }

    const GaussianState& state() const noexcept { return state_; }
    double predicted_cos_sq() const;
    /// Number of steps where a variance or the uncertainty bound was clamped.
    long clamp_count() const noexcept { return clamps_; }
    long step_count() const noexcept { return steps_; }

private:
    GaussianState state_;
    ScaledParams params_;
    double dt_;
    long clamps_ = 0;
    long steps_ = 0;
};

} // namespace fbcool
