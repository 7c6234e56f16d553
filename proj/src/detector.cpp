#include "clickstat/detector.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <type_traits>

namespace clickstat {

namespace {

// Mantissa bits kept on top of the cancellation estimate.
constexpr double kGuardBits = 64.0;

constexpr double kNegativeClamp = 1e-12;
constexpr double kNormalizationTolerance = 1e-10;

// Noise allowance, in units of the rounding error of the largest term, when
// deciding whether a Fock-diagonal element exceeds one in magnitude.
constexpr long double kRoundingAllowance = 64.0L;
constexpr long double kContractionSlack = 1e-9L;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double binomial_coefficient(unsigned n, unsigned k) {
    return boost::math::binomial_coefficient<double>(n, k);
}

// Bits needed so that terms of size `magnitude`, recombined through the
// alternating binomial sums of an N-diode bank, still leave kGuardBits.
unsigned bits_for(long double magnitude, unsigned diodes) {
    const double mag_bits = magnitude > 1.0L ? static_cast<double>(std::log2(magnitude)) : 0.0;
    return static_cast<unsigned>(std::ceil(kGuardBits + mag_bits + diodes * std::log2(3.0)));
}

// Runs `body` (a template lambda returning {result, bits needed}) at the
// requested tier, then once more at a higher tier if the estimate demands it.
template <class Body>
auto run_with_precision(const Precision& precision, Body&& body) {
    unsigned bits = precision.bits;
    for (;;) {
        auto [result, needed] = with_precision(bits, body);
        if (!precision.auto_extend || needed <= tier_bits(bits)) return result;
        if (needed > kMaxPrecisionBits) {
            throw Error(ErrorCode::PrecisionExhausted,
                        "cancellation estimate needs " + std::to_string(needed) + " bits");
        }
        bits = needed;
    }
}

// c_k = C(N,k) sum_j C(k,j) (-1)^j E[N-k+j] from the no-click expectations
// E[s] = <:exp(-s f):>.
template <class Real>
std::vector<Real> combine_no_click(const std::vector<Real>& no_click, unsigned diodes) {
    std::vector<Real> out(diodes + 1);
    for (unsigned k = 0; k <= diodes; ++k) {
        CompensatedSum<Real> sum;
        for (unsigned j = 0; j <= k; ++j) {
            const Real term = Real(binomial_coefficient(k, j)) * no_click[diodes - k + j];
            sum.add(j % 2 == 0 ? term : Real(-term));
        }
        out[k] = Real(binomial_coefficient(diodes, k)) * sum.value();
    }
    return out;
}

// Clamps tiny negatives, rejects large ones and checks normalisation.
void finalize_probabilities(std::vector<double>& probs, double tail_bound, double& deviation, double& clamped) {
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    deviation = total - 1.0;
    clamped = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double& c = probs[i];
        if (c >= 0.0) continue;
        if (c < -kNegativeClamp) {
            std::ostringstream msg;
            msg << "click probability " << i << " is " << c;
            throw Error(ErrorCode::NegativeProbability, msg.str());
        }
        clamped += c;
        c = 0.0;
    }
    if (std::abs(deviation) > kNormalizationTolerance + tail_bound) {
        std::ostringstream msg;
        msg << "click probabilities sum to 1 + " << deviation << " (tail bound " << tail_bound << ")";
        throw Error(ErrorCode::NormalizationViolation, msg.str());
    }
}

// x range on which the response must be non-negative for a state with
// photon numbers up to `photons`.
double response_check_range(double photons, unsigned diodes) {
    return 10.0 * std::max(1.0, photons) / diodes;
}

double superposition_photon_scale(const CoherentSuperposition& state) {
    const double mu = state.max_intensity();
    return mu + 10.0 * std::sqrt(mu) + 10.0;
}

// No-click series exp(-s f(x/N)) for s = 0..N at a common order.
template <class Real>
std::vector<PowerSeries<Real>> no_click_series(const ResponseFunction& response, unsigned diodes,
                                               std::size_t order) {
    std::vector<PowerSeries<Real>> out;
    out.reserve(diodes + 1);
    for (unsigned s = 0; s <= diodes; ++s) {
        out.push_back(response_series<Real>(response, diodes, Real(s), order));
    }
    return out;
}

bool closed_form_diagonal(const ResponseFunction& response) {
    return std::holds_alternative<LinearResponse>(response) || std::holds_alternative<AffineResponse>(response);
}

template <class Real>
Real integer_power(Real base, unsigned n) {
    Real out(1);
    while (n > 0) {
        if (n & 1u) out *= base;
        base *= base;
        n >>= 1u;
    }
    return out;
}

// <n|:exp(-s f(n̂/N)):|n>. Linear and affine responses use the closed form
// e^{-s nu} (1 - s eta/N)^n; the rest go through the power series.
template <class Real>
class NoClickDiagonal {
  public:
    NoClickDiagonal(const ResponseFunction& response, unsigned diodes, unsigned s, std::size_t order) {
        using std::exp;
        auto closed = [&](double eta, double nu) {
            closed_ = true;
            base_ = Real(1) - Real(s) * Real(eta) / Real(diodes);
            prefactor_ = exp(-Real(s) * Real(nu));
        };
        if (!closed_form_diagonal(response)) {
            series_ = response_series<Real>(response, diodes, Real(s), order);
        } else if (const auto* r = std::get_if<LinearResponse>(&response)) {
            closed(r->eta, 0.0);
        } else {
            const auto& a = std::get<AffineResponse>(response);
            closed(a.eta, a.nu);
        }
    }

    Real value(unsigned n) const {
        return closed_ ? Real(prefactor_ * integer_power(base_, n)) : diag_matrix_element(series_, n);
    }

    // Size of the terms summed to get value(n).
    long double magnitude(unsigned n) const {
        return closed_ ? std::fabs(static_cast<long double>(value(n))) : diag_term_magnitude(series_, n);
    }

  private:
    bool closed_ = false;
    Real base_{0};
    Real prefactor_{1};
    PowerSeries<Real> series_;
};

template <class Real>
std::vector<NoClickDiagonal<Real>> no_click_diagonals(const ResponseFunction& response, unsigned diodes,
                                                      std::size_t order) {
    std::vector<NoClickDiagonal<Real>> out;
    out.reserve(diodes + 1);
    for (unsigned s = 0; s <= diodes; ++s) out.emplace_back(response, diodes, s, order);
    return out;
}

// <n|:pi^m:|n>, from the series of (1 - e^{-f})^m or, for closed-form
// responses, as sum_j C(m,j) (-1)^j <n|:e^{-j f}:|n>.
template <class Real>
class PiPowerDiagonal {
  public:
    PiPowerDiagonal(const ResponseFunction& response, unsigned diodes, unsigned m, std::size_t order) : m_(m) {
        if (closed_form_diagonal(response)) {
            for (unsigned j = 0; j <= m; ++j) parts_.emplace_back(response, diodes, j, order);
        } else {
            series_ = pi_power_series<Real>(response, diodes, m, order);
        }
    }

    Real value(unsigned n) const {
        if (parts_.empty()) return diag_matrix_element(series_, n);
        CompensatedSum<Real> sum;
        for (unsigned j = 0; j <= m_; ++j) {
            const Real term = Real(binomial_coefficient(m_, j)) * parts_[j].value(n);
            sum.add(j % 2 == 0 ? term : Real(-term));
        }
        return sum.value();
    }

    long double magnitude(unsigned n) const {
        if (parts_.empty()) return diag_term_magnitude(series_, n);
        long double mag = 0.0L;
        for (unsigned j = 0; j <= m_; ++j) mag += binomial_coefficient(m_, j) * parts_[j].magnitude(n);
        return mag;
    }

  private:
    unsigned m_;
    std::vector<NoClickDiagonal<Real>> parts_;
    PowerSeries<Real> series_;
};

// Kernel t_k(n) = <n|:C(N,k) pi^k (1-pi)^(N-k):|n> for k = 0..N, n = 0..cutoff,
// plus the cancellation magnitude weighted by `weights`.
template <class Real>
struct FockKernel {
    std::vector<std::vector<Real>> values;  // [k][n]
    long double magnitude = 0.0L;
};

template <class Real>
FockKernel<Real> fock_kernel(const ResponseFunction& response, unsigned diodes, unsigned cutoff,
                             const std::vector<double>& weights) {
    const auto diagonals = no_click_diagonals<Real>(response, diodes, cutoff);
    FockKernel<Real> out;
    out.values.assign(diodes + 1, std::vector<Real>(cutoff + 1));
    std::vector<Real> no_click(diodes + 1);
    for (unsigned n = 0; n <= cutoff; ++n) {
        long double mag = 0.0L;
        for (unsigned s = 0; s <= diodes; ++s) {
            no_click[s] = diagonals[s].value(n);
            mag = std::max(mag, diagonals[s].magnitude(n));
        }
        out.magnitude = std::max(out.magnitude, mag * static_cast<long double>(weights[n]));
        const auto c = combine_no_click(no_click, diodes);
        const auto eps = static_cast<long double>(std::numeric_limits<Real>::epsilon());
        for (unsigned k = 0; k <= diodes; ++k) {
            const long double allowance = kRoundingAllowance * eps * mag * std::pow(3.0L, diodes);
            if (weights[n] > 0.0 && std::fabs(static_cast<long double>(c[k])) > 1.0L + kContractionSlack + allowance) {
                throw Error(ErrorCode::DivergentPhotonSum,
                            "click kernel exceeds one at n = " + std::to_string(n));
            }
            out.values[k][n] = c[k];
        }
    }
    return out;
}

// Smallest doubling of `start` at which every series in `build(order)` has
// converged on the disc |z| <= radius.
template <class Real, class Build>
auto converged_series(Build&& build, double radius, std::size_t start) {
    for (std::size_t order = start; order <= 8192; order *= 2) {
        auto series = build(order);
        bool ok = true;
        for (const auto& h : series) ok = ok && detail::series_converged_at(h, Real(radius));
        if (ok) return series;
    }
    throw Error(ErrorCode::OrderTooLow, "response series does not converge at |z| = " + std::to_string(radius));
}

template <class Real>
long double superposition_magnitude(const CoherentSuperposition& state, const PowerSeries<Real>& h) {
    long double coeff = 0.0L;
    for (const auto& t : state.terms) coeff += std::abs(t.coefficient);
    const long double r = state.max_intensity();
    long double bulk = 0.0L;
    long double rk = 1.0L;
    for (std::size_t k = 0; k <= h.order(); ++k) {
        bulk += std::fabs(static_cast<long double>(h[k])) * rk;
        rk *= r;
    }
    return coeff * coeff * bulk;
}

template <class Real>
std::vector<double> to_doubles(const std::vector<Real>& values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<double>(values[i]);
    return out;
}


// True for responses whose :exp(-s f):, s <= N, is a bona fide no-click
// probability on every Fock state, so the photon-number sums converge.
bool fock_bounded(const ResponseFunction& response) {
    return std::visit(overloaded{
                          [](const LinearResponse&) { return true; },
                          [](const AffineResponse&) { return true; },
                          [](const NPhotonAbsorption&) { return true; },
                          [](const PowerResponse& r) { return r.n0 == 1; },
                          [](const PolynomialResponse& r) {
                              for (std::size_t k = 2; k < r.coefficients.size(); ++k) {
                                  if (r.coefficients[k] != 0.0) return false;
                              }
                              return true;
                          },
                      },
                      response);
}

// sum_n p_n <n|:h:|n>, throwing when an element is beyond one by more than
// rounding; `magnitude` receives sum_n p_n sum_k |h_k| n^(k).
template <class Real, class Diagonal>
Real checked_expectation(const PhotonNumberDistribution& state, const Diagonal& h, long double& magnitude) {
    const auto eps = static_cast<long double>(std::numeric_limits<Real>::epsilon());
    CompensatedSum<Real> sum;
    long double mag = 0.0L;
    for (unsigned n = 0; n <= state.cutoff(); ++n) {
        const double p = state.probs[n];
        if (p == 0.0) continue;
        const Real d = h.value(n);
        const long double terms = h.magnitude(n);
        if (std::fabs(static_cast<long double>(d)) > 1.0L + kContractionSlack + kRoundingAllowance * eps * terms) {
            throw Error(ErrorCode::DivergentPhotonSum,
                        "Fock-diagonal kernel exceeds one at n = " + std::to_string(n));
        }
        sum.add(Real(p) * d);
        mag += static_cast<long double>(p) * terms;
    }
    magnitude = std::max(magnitude, mag);
    return sum.value();
}

// Integral of P(I) g(I) over the intensity.
template <class G>
long double intensity_average(const IntensityPFunction& pf, G&& g) {
    if (pf.point_mass()) return g(static_cast<long double>(pf.scale));
    const long double a = pf.scale;
    auto integrand = [&](long double u) {
        const long double intensity = a * u;
        long double poly = 0.0L;
        for (auto it = pf.poly.rbegin(); it != pf.poly.rend(); ++it) poly = poly * intensity + *it;
        const long double weight = a * std::exp(-u) * poly;
        return weight == 0.0L ? 0.0L : weight * g(intensity);
    };
    boost::math::quadrature::exp_sinh<long double> integrator;
    return integrator.integrate(integrand, 1e-17L);
}

// Per-diode click probability 1 - exp(-f(I/N)) and its complement.
std::pair<long double, long double> diode_click(const ResponseFunction& response, unsigned diodes,
                                                long double intensity) {
    const double f = evaluate_response(response, static_cast<double>(intensity / diodes));
    return {-std::expm1(static_cast<long double>(-f)), std::exp(static_cast<long double>(-f))};
}

ClickStatistics intensity_click_statistics(const IntensityPFunction& pf, const DetectorConfig& det) {
    ClickStatistics out;
    out.diodes = det.diodes;
    out.probs.resize(det.diodes + 1);
    for (unsigned k = 0; k <= det.diodes; ++k) {
        const long double binom = binomial_coefficient(det.diodes, k);
        out.probs[k] = static_cast<double>(intensity_average(pf, [&](long double intensity) {
            const auto [click, dark] = diode_click(det.response, det.diodes, intensity);
            return binom * std::pow(click, static_cast<long double>(k)) *
                   std::pow(dark, static_cast<long double>(det.diodes - k));
        }));
    }
    return out;
}

std::vector<double> intensity_pi_moments(const IntensityPFunction& pf, const DetectorConfig& det) {
    std::vector<double> out(det.diodes + 1);
    for (unsigned m = 0; m <= det.diodes; ++m) {
        out[m] = static_cast<double>(intensity_average(pf, [&](long double intensity) {
            return std::pow(diode_click(det.response, det.diodes, intensity).first, static_cast<long double>(m));
        }));
    }
    return out;
}

} // namespace

double evaluate_response(const ResponseFunction& response, double x) {
    return std::visit(
        overloaded{
            [x](const LinearResponse& r) { return r.eta * x; },
            [x](const AffineResponse& r) { return r.eta * x + r.nu; },
            [x](const PowerResponse& r) { return std::pow(x, static_cast<double>(r.n0)); },
            [x](const PolynomialResponse& r) {
                double acc = 0.0;
                for (auto it = r.coefficients.rbegin(); it != r.coefficients.rend(); ++it) acc = acc * x + *it;
                return acc;
            },
            [x](const NPhotonAbsorption& r) {
                double sum = 0.0;
                double term = 1.0;
                for (unsigned j = 0; j < r.n0; ++j) {
                    sum += term;
                    term *= x / (j + 1.0);
                }
                return x - std::log(sum);
            },
        },
        response);
}

void validate_response(const ResponseFunction& response, double x_max) {
    std::visit(overloaded{
                   [](const LinearResponse& r) {
                       if (!(r.eta > 0.0 && r.eta <= 1.0)) {
                           throw Error(ErrorCode::InvalidResponse, "linear efficiency must lie in (0,1]");
                       }
                   },
                   [](const AffineResponse& r) {
                       if (!(r.eta >= 0.0) || !(r.nu >= 0.0)) {
                           throw Error(ErrorCode::InvalidResponse, "affine response needs eta >= 0 and nu >= 0");
                       }
                   },
                   [](const PowerResponse& r) {
                       if (r.n0 < 1) throw Error(ErrorCode::InvalidResponse, "power exponent must be positive");
                   },
                   [x_max](const PolynomialResponse& r) {
                       const auto& c = r.coefficients;
                       if (c.empty()) throw Error(ErrorCode::InvalidResponse, "polynomial response has no coefficients");
                       if (c[0] < 0.0) {
                           throw Error(ErrorCode::InvalidResponse, "polynomial response is negative at x = 0");
                       }
                       auto lead = std::find_if(c.rbegin(), c.rend(), [](double v) { return v != 0.0; });
                       if (lead != c.rend() && *lead < 0.0) {
                           throw Error(ErrorCode::InvalidResponse, "polynomial response has a negative leading coefficient");
                       }
                       const ResponseFunction f = r;
                       constexpr int kGrid = 400;
                       const double lo = std::log(1e-6);
                       const double hi = std::log(std::max(x_max, 1e-5));
                       for (int i = 0; i <= kGrid; ++i) {
                           const double x = std::exp(lo + (hi - lo) * i / kGrid);
                           if (evaluate_response(f, x) < 0.0) {
                               throw Error(ErrorCode::InvalidResponse,
                                           "polynomial response is negative at x = " + std::to_string(x));
                           }
                       }
                   },
                   [](const NPhotonAbsorption& r) {
                       if (r.n0 < 1) throw Error(ErrorCode::InvalidResponse, "absorption order must be positive");
                   },
               },
               response);
}

void validate_detector(const DetectorConfig& det, double x_max) {
    if (det.diodes < 1) throw Error(ErrorCode::InvalidArgument, "a detector needs at least one diode");
    validate_response(det.response, x_max);
}

template <class Real>
PowerSeries<Real> response_exponent_series(const ResponseFunction& response, std::size_t order) {
    PowerSeries<Real> f(order);
    auto set = [&](std::size_t k, double v) {
        if (k <= order) f[k] = Real(v);
    };
    std::visit(overloaded{
                   [&](const LinearResponse& r) { set(1, r.eta); },
                   [&](const AffineResponse& r) {
                       set(0, r.nu);
                       set(1, r.eta);
                   },
                   [&](const PowerResponse& r) { set(r.n0, 1.0); },
                   [&](const PolynomialResponse& r) {
                       for (std::size_t k = 0; k < r.coefficients.size(); ++k) set(k, r.coefficients[k]);
                   },
                   [&](const NPhotonAbsorption& r) {
                       PowerSeries<Real> partial_exp(order);
                       Real term(1);
                       for (unsigned j = 0; j < r.n0 && j <= order; ++j) {
                           partial_exp[j] = term;
                           term /= Real(j + 1);
                       }
                       f = series_scale(series_log(partial_exp), Real(-1));
                       if (order >= 1) f[1] += 1;
                   },
               },
               response);
    return f;
}

template PowerSeries<double> response_exponent_series<double>(const ResponseFunction&, std::size_t);
template PowerSeries<long double> response_exponent_series<long double>(const ResponseFunction&, std::size_t);
template PowerSeries<Real128> response_exponent_series<Real128>(const ResponseFunction&, std::size_t);
template PowerSeries<Real256> response_exponent_series<Real256>(const ResponseFunction&, std::size_t);
template PowerSeries<Real512> response_exponent_series<Real512>(const ResponseFunction&, std::size_t);
template PowerSeries<Real1024> response_exponent_series<Real1024>(const ResponseFunction&, std::size_t);

double ClickStatistics::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) m += static_cast<double>(k) * probs[k];
    return m;
}

double ClickStatistics::variance() const {
    double m2 = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) m2 += static_cast<double>(k * k) * probs[k];
    const double m = mean();
    return m2 - m * m;
}

ClickStatistics JointClickStatistics::marginal(int mode) const {
    ClickStatistics out;
    out.diodes = mode == 0 ? diodes1 : diodes2;
    out.probs.assign(out.diodes + 1, 0.0);
    for (unsigned k1 = 0; k1 <= diodes1; ++k1) {
        for (unsigned k2 = 0; k2 <= diodes2; ++k2) out.probs[mode == 0 ? k1 : k2] += at(k1, k2);
    }
    out.normalization_deviation = normalization_deviation;
    return out;
}

ClickStatistics click_statistics(const PhotonNumberDistribution& state, const DetectorConfig& det,
                                 const Precision& precision) {
    const unsigned n_diodes = det.diodes;
    if (state.p_function && !fock_bounded(det.response)) {
        validate_detector(det, response_check_range(state.mean() + 40.0 * std::max(1.0, state.p_function->scale),
                                                    n_diodes));
        ClickStatistics out = intensity_click_statistics(*state.p_function, det);
        finalize_probabilities(out.probs, 0.0, out.normalization_deviation, out.clamped_mass);
        return out;
    }
    validate_detector(det, response_check_range(state.cutoff(), n_diodes));
    auto probs = run_with_precision(precision, [&]<class Real>() {
        const auto diagonals = no_click_diagonals<Real>(det.response, n_diodes, state.cutoff());
        std::vector<Real> no_click(n_diodes + 1);
        long double magnitude = 0.0L;
        for (unsigned s = 0; s <= n_diodes; ++s) {
            no_click[s] = checked_expectation<Real>(state, diagonals[s], magnitude);
        }
        return std::pair{to_doubles(combine_no_click(no_click, n_diodes)), bits_for(magnitude, n_diodes)};
    });
    ClickStatistics out;
    out.diodes = n_diodes;
    out.probs = std::move(probs);
    finalize_probabilities(out.probs, state.tail_bound, out.normalization_deviation, out.clamped_mass);
    return out;
}

ClickStatistics click_statistics(const CoherentSuperposition& state, const DetectorConfig& det,
                                 const Precision& precision) {
    validate_detector(det, response_check_range(superposition_photon_scale(state), det.diodes));
    const unsigned n_diodes = det.diodes;
    const double radius = state.max_intensity();
    auto probs = run_with_precision(precision, [&]<class Real>() {
        const auto series = converged_series<Real>(
            [&](std::size_t order) { return no_click_series<Real>(det.response, n_diodes, order); }, radius, 32);
        std::vector<Real> no_click(n_diodes + 1);
        long double magnitude = 0.0L;
        for (unsigned s = 0; s <= n_diodes; ++s) {
            no_click[s] = nom_expectation(state, series[s]);
            magnitude = std::max(magnitude, superposition_magnitude(state, series[s]));
        }
        return std::pair{to_doubles(combine_no_click(no_click, n_diodes)), bits_for(magnitude, n_diodes)};
    });
    ClickStatistics out;
    out.diodes = n_diodes;
    out.probs = std::move(probs);
    finalize_probabilities(out.probs, 0.0, out.normalization_deviation, out.clamped_mass);
    return out;
}

JointClickStatistics joint_click_statistics(const JointPhotonDistribution& state, const DetectorConfig& det1,
                                            const DetectorConfig& det2, const Precision& precision) {
    validate_detector(det1, response_check_range(state.cutoff1, det1.diodes));
    validate_detector(det2, response_check_range(state.cutoff2, det2.diodes));
    const PhotonNumberDistribution m1 = state.marginal(0);
    const PhotonNumberDistribution m2 = state.marginal(1);
    auto probs = run_with_precision(precision, [&]<class Real>() {
        const auto t1 = fock_kernel<Real>(det1.response, det1.diodes, state.cutoff1, m1.probs);
        const auto t2 = fock_kernel<Real>(det2.response, det2.diodes, state.cutoff2, m2.probs);
        std::vector<Real> c((det1.diodes + 1) * (det2.diodes + 1));
        for (unsigned k1 = 0; k1 <= det1.diodes; ++k1) {
            for (unsigned k2 = 0; k2 <= det2.diodes; ++k2) {
                CompensatedSum<Real> sum;
                for (unsigned n1 = 0; n1 <= state.cutoff1; ++n1) {
                    for (unsigned n2 = 0; n2 <= state.cutoff2; ++n2) {
                        const double p = state.at(n1, n2);
                        if (p == 0.0) continue;
                        sum.add(Real(p) * t1.values[k1][n1] * t2.values[k2][n2]);
                    }
                }
                c[k1 * (det2.diodes + 1) + k2] = sum.value();
            }
        }
        const unsigned needed =
            std::max(bits_for(t1.magnitude, det1.diodes), bits_for(t2.magnitude, det2.diodes));
        return std::pair{to_doubles(c), needed};
    });
    JointClickStatistics out;
    out.diodes1 = det1.diodes;
    out.diodes2 = det2.diodes;
    out.probs = std::move(probs);
    finalize_probabilities(out.probs, state.tail_bound, out.normalization_deviation, out.clamped_mass);
    return out;
}

ClickStatistics multimode_click_statistics(const std::vector<PhotonNumberDistribution>& modes,
                                           std::span<const double> etas, unsigned diodes,
                                           const Precision& precision) {
    if (modes.size() != etas.size()) {
        throw Error(ErrorCode::LengthMismatch, "one efficiency per mode is required");
    }
    if (diodes < 1) throw Error(ErrorCode::InvalidArgument, "a detector needs at least one diode");
    double tail = 0.0;
    for (std::size_t mu = 0; mu < modes.size(); ++mu) {
        validate_response(LinearResponse{etas[mu]}, 0.0);
        tail += modes[mu].tail_bound;
    }
    auto probs = run_with_precision(precision, [&]<class Real>() {
        // The no-click operator of the bank factorises over modes.
        std::vector<Real> no_click(diodes + 1, Real(1));
        long double magnitude = 1.0L;
        for (std::size_t mu = 0; mu < modes.size(); ++mu) {
            const auto diagonals = no_click_diagonals<Real>(LinearResponse{etas[mu]}, diodes, modes[mu].cutoff());
            long double mode_mag = 0.0L;
            for (unsigned s = 0; s <= diodes; ++s) {
                no_click[s] *= checked_expectation<Real>(modes[mu], diagonals[s], mode_mag);
            }
            magnitude *= mode_mag;
        }
        return std::pair{to_doubles(combine_no_click(no_click, diodes)), bits_for(magnitude, diodes)};
    });
    ClickStatistics out;
    out.diodes = diodes;
    out.probs = std::move(probs);
    finalize_probabilities(out.probs, tail, out.normalization_deviation, out.clamped_mass);
    return out;
}

std::vector<double> direct_pi_moments(const PhotonNumberDistribution& state, const DetectorConfig& det,
                                      const Precision& precision) {
    if (state.p_function && !fock_bounded(det.response)) {
        validate_detector(det, response_check_range(state.mean() + 40.0 * std::max(1.0, state.p_function->scale),
                                                    det.diodes));
        return intensity_pi_moments(*state.p_function, det);
    }
    validate_detector(det, response_check_range(state.cutoff(), det.diodes));
    return run_with_precision(precision, [&]<class Real>() {
        std::vector<Real> moments(det.diodes + 1);
        long double magnitude = 0.0L;
        for (unsigned m = 0; m <= det.diodes; ++m) {
            const PiPowerDiagonal<Real> h(det.response, det.diodes, m, state.cutoff());
            moments[m] = checked_expectation<Real>(state, h, magnitude);
        }
        return std::pair{to_doubles(moments), bits_for(magnitude, 0)};
    });
}

std::vector<double> direct_pi_moments(const CoherentSuperposition& state, const DetectorConfig& det,
                                      const Precision& precision) {
    validate_detector(det, response_check_range(superposition_photon_scale(state), det.diodes));
    const double radius = state.max_intensity();
    return run_with_precision(precision, [&]<class Real>() {
        const auto series = converged_series<Real>(
            [&](std::size_t order) {
                std::vector<PowerSeries<Real>> out;
                for (unsigned m = 0; m <= det.diodes; ++m) {
                    out.push_back(pi_power_series<Real>(det.response, det.diodes, m, order));
                }
                return out;
            },
            radius, 32);
        std::vector<Real> moments(det.diodes + 1);
        long double magnitude = 0.0L;
        for (unsigned m = 0; m <= det.diodes; ++m) {
            moments[m] = nom_expectation(state, series[m]);
            magnitude = std::max(magnitude, superposition_magnitude(state, series[m]));
        }
        return std::pair{to_doubles(moments), bits_for(magnitude, 0)};
    });
}

ClickStatistics binomial_statistics(unsigned diodes, double p) {
    ClickStatistics out;
    out.diodes = diodes;
    out.probs.resize(diodes + 1);
    for (unsigned k = 0; k <= diodes; ++k) {
        out.probs[k] = binomial_coefficient(diodes, k) * std::pow(1.0 - p, diodes - k) * std::pow(p, k);
    }
    return out;
}

double generating_function(const ClickStatistics& stats, double z) {
    double acc = 0.0;
    for (auto it = stats.probs.rbegin(); it != stats.probs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

double multimode_effective_intensity(std::span<const double> etas, std::span<const double> intensities) {
    if (etas.size() != intensities.size()) {
        throw Error(ErrorCode::LengthMismatch, "one efficiency per mode intensity is required");
    }
    double total = 0.0;
    for (std::size_t mu = 0; mu < etas.size(); ++mu) {
        if (intensities[mu] < 0.0) throw Error(ErrorCode::InvalidArgument, "mode intensities must be non-negative");
        total += etas[mu] * intensities[mu];
    }
    return total;
}

} // namespace clickstat
