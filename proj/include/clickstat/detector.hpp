#pragma once

// Forward model: state + bank of N on-off diodes -> click-counting statistics.
//
// A bank splits the field evenly over N diodes. Each diode fails to click
// with the normally ordered probability :exp[-f(n̂/N)]:, where f is the
// detector response, so that
//
//   c_k = C(N,k) sum_j C(k,j) (-1)^j <:exp[-(N-k+j) f(n̂/N)]:>.
//
// The expectations are evaluated exactly from the power series of
// exp[-s f(x/N)] (see series.hpp), with the working precision raised
// automatically when the alternating Fock sums would lose digits.
// When a Fock-diagonal kernel grows without bound in n the photon-number
// sum is not usable; phase-insensitive states with a regular P function
// are then integrated over intensity instead.

#include <span>
#include <variant>
#include <vector>

#include "clickstat/precision.hpp"
#include "clickstat/series.hpp"
#include "clickstat/states.hpp"

namespace clickstat {

// f(x) = eta x
struct LinearResponse {
    double eta = 1.0;
};

// f(x) = eta x + nu; nu is the dark-count rate.
struct AffineResponse {
    double eta = 1.0;
    double nu = 0.0;
};

// f(x) = x^n0
struct PowerResponse {
    unsigned n0 = 1;
};

// f(x) = sum_k coefficients[k] x^k
struct PolynomialResponse {
    std::vector<double> coefficients;
};

// f(x) = x - log(sum_{j<n0} x^j / j!): no click below n0 photons.
struct NPhotonAbsorption {
    unsigned n0 = 1;
};

using ResponseFunction =
    std::variant<LinearResponse, AffineResponse, PowerResponse, PolynomialResponse, NPhotonAbsorption>;

struct DetectorConfig {
    unsigned diodes = 1;
    ResponseFunction response = LinearResponse{};
};

// Closed-form f(x).
double evaluate_response(const ResponseFunction& response, double x);

// Checks the parameter ranges and f(x) >= 0 on [0, x_max]. Polynomial
// responses are sampled on a log-spaced grid and must have a positive
// leading coefficient.
void validate_response(const ResponseFunction& response, double x_max);
void validate_detector(const DetectorConfig& det, double x_max);

// Series of f(x) at the given order.
template <class Real>
PowerSeries<Real> response_exponent_series(const ResponseFunction& response, std::size_t order);

// Series of exp[-s f(x/N)].
template <class Real>
PowerSeries<Real> response_series(const ResponseFunction& response, unsigned diodes, const Real& s,
                                  std::size_t order) {
    if (const auto* nabs = std::get_if<NPhotonAbsorption>(&response)) {
        using std::floor;
        if (s >= 0 && floor(s) == s) {
            // (sum_{j<n0} y^j/j!)^s exp(-s y) with y = x/N.
            const Real y = Real(1) / Real(diodes);
            PowerSeries<Real> partial(order);
            Real term(1);
            for (std::size_t j = 0; j < nabs->n0 && j <= order; ++j) {
                partial[j] = term;
                term = term * y / Real(static_cast<unsigned long>(j + 1));
            }
            PowerSeries<Real> out(order);
            term = Real(1);
            for (std::size_t k = 0; k <= order; ++k) {
                out[k] = term;
                term = -term * s * y / Real(static_cast<unsigned long>(k + 1));
            }
            const auto power = static_cast<unsigned>(s);
            for (unsigned i = 0; i < power; ++i) out = series_mul(partial, out, order);
            return out;
        }
    }
    const PowerSeries<Real> f = series_rescale_argument(response_exponent_series<Real>(response, order),
                                                        Real(1) / Real(diodes));
    return series_exp_neg(f, s);
}

// Series of (1 - exp[-f(x/N)])^m, the per-diode click operator to the m-th power.
template <class Real>
PowerSeries<Real> pi_power_series(const ResponseFunction& response, unsigned diodes, unsigned m,
                                  std::size_t order) {
    PowerSeries<Real> pi = series_scale(response_series<Real>(response, diodes, Real(1), order), Real(-1));
    pi[0] += 1;
    return series_pow(pi, m);
}

struct ClickStatistics {
    unsigned diodes = 0;
    std::vector<double> probs;    // c_0..c_N
    std::vector<double> stderrs;  // empty for exact statistics
    double normalization_deviation = 0.0;  // sum c_k - 1 before any clamping
    double clamped_mass = 0.0;             // total of tiny negatives set to zero

    double mean() const;
    double variance() const;
};

struct JointClickStatistics {
    unsigned diodes1 = 0;
    unsigned diodes2 = 0;
    std::vector<double> probs;  // row-major c_{k1,k2}
    std::vector<double> stderrs;
    double normalization_deviation = 0.0;
    double clamped_mass = 0.0;

    double at(unsigned k1, unsigned k2) const { return probs[k1 * (diodes2 + 1) + k2]; }
    double& at(unsigned k1, unsigned k2) { return probs[k1 * (diodes2 + 1) + k2]; }

    ClickStatistics marginal(int mode) const;
};

ClickStatistics click_statistics(const PhotonNumberDistribution& state, const DetectorConfig& det,
                                 const Precision& precision = {});
ClickStatistics click_statistics(const CoherentSuperposition& state, const DetectorConfig& det,
                                 const Precision& precision = {});
JointClickStatistics joint_click_statistics(const JointPhotonDistribution& state, const DetectorConfig& det1,
                                            const DetectorConfig& det2, const Precision& precision = {});

// Product state of independent modes, mode mu seen with efficiency etas[mu]
// by one linear bank of `diodes` diodes.
ClickStatistics multimode_click_statistics(const std::vector<PhotonNumberDistribution>& modes,
                                           std::span<const double> etas, unsigned diodes,
                                           const Precision& precision = {});

// <:pi^m:> for m = 0..N straight from the state, without going through c_k.
std::vector<double> direct_pi_moments(const PhotonNumberDistribution& state, const DetectorConfig& det,
                                      const Precision& precision = {});
std::vector<double> direct_pi_moments(const CoherentSuperposition& state, const DetectorConfig& det,
                                      const Precision& precision = {});

// C(N,k) (1-p)^(N-k) p^k.
ClickStatistics binomial_statistics(unsigned diodes, double p);

// g(z) = sum_k c_k z^k.
double generating_function(const ClickStatistics& stats, double z);

// sum_mu eta_mu |alpha_mu|^2, the single-mode intensity that reproduces a
// multimode coherent input.
double multimode_effective_intensity(std::span<const double> etas, std::span<const double> intensities);

} // namespace clickstat
