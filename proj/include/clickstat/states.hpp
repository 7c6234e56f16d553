#pragma once

// Single- and two-mode states in the two representations the detection
// model needs: photon-number distributions (phase-insensitive states) and
// finite superpositions of coherent states (cat-like states).

#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <optional>
#include <vector>

#include "clickstat/error.hpp"
#include "clickstat/series.hpp"

namespace clickstat {

inline constexpr double kDefaultTailTolerance = 1e-14;

// p_n for n = 0..cutoff plus an analytic bound on the truncated mass.
// Phase-averaged P function as a law on the intensity I = |alpha|^2.
// Either a point mass at `scale`, or the density exp(-I/scale) sum_j poly[j] I^j.
struct IntensityPFunction {
    double scale = 0.0;
    std::vector<double> poly;

    bool point_mass() const { return poly.empty(); }
};

struct PhotonNumberDistribution {
    std::vector<double> probs;
    double tail_bound = 0.0;
    std::optional<IntensityPFunction> p_function;

    unsigned cutoff() const { return static_cast<unsigned>(probs.size()) - 1; }
    double mean() const;
    double total() const;
};

struct CoherentTerm {
    std::complex<double> coefficient;
    std::complex<double> amplitude;
};

// sum_i c_i |alpha_i>, normalised as a vector (the coherent states are not
// orthogonal, so this is not sum |c_i|^2).
struct CoherentSuperposition {
    std::vector<CoherentTerm> terms;

    double max_intensity() const;
};

// <alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta).
std::complex<double> coherent_overlap(std::complex<double> alpha, std::complex<double> beta);

double superposition_norm(const CoherentSuperposition& state);

// Row-major p_{n1,n2}, n_d = 0..cutoff_d.
struct JointPhotonDistribution {
    unsigned cutoff1 = 0;
    unsigned cutoff2 = 0;
    std::vector<double> probs;
    double tail_bound = 0.0;

    double at(unsigned n1, unsigned n2) const { return probs[n1 * (cutoff2 + 1) + n2]; }
    double& at(unsigned n1, unsigned n2) { return probs[n1 * (cutoff2 + 1) + n2]; }

    // mode is 0 or 1.
    PhotonNumberDistribution marginal(int mode) const;
};

PhotonNumberDistribution coherent_distribution(double mean_photons, double tol = kDefaultTailTolerance);
PhotonNumberDistribution thermal_distribution(double nbar, double tol = kDefaultTailTolerance);
// Single-photon-added thermal state: p_n = n (nbar/(nbar+1))^(n-1) / (nbar+1)^2.
PhotonNumberDistribution spats_distribution(double nbar, double tol = kDefaultTailTolerance);
PhotonNumberDistribution fock_distribution(unsigned n);

CoherentSuperposition coherent_state(std::complex<double> alpha);
// N_-(|alpha> - |-alpha>), N_- = [2(1 - exp(-2|alpha|^2))]^(-1/2).
CoherentSuperposition odd_coherent(std::complex<double> alpha);

// Two-mode squeezed vacuum: p_{n,n} = (1-|xi|^2) |xi|^(2n).
JointPhotonDistribution tmsv_joint(std::complex<double> xi, double tol = kDefaultTailTolerance);
JointPhotonDistribution product_joint(const PhotonNumberDistribution& a, const PhotonNumberDistribution& b);
// Convex combination; weights must be non-negative and sum to one.
JointPhotonDistribution mixture_joint(const std::vector<std::pair<double, JointPhotonDistribution>>& parts);

// Q_M = Var(n)/<n> - 1.
double mandel_q(const PhotonNumberDistribution& dist);

// <:h(n̂):> for a photon-number distribution; h.order() must reach the cutoff.
template <class Real>
Real nom_expectation(const PhotonNumberDistribution& dist, const PowerSeries<Real>& h) {
    if (h.order() < dist.cutoff()) {
        throw Error(ErrorCode::OrderTooLow, "series order " + std::to_string(h.order()) +
                                                " below state cutoff " + std::to_string(dist.cutoff()));
    }
    CompensatedSum<Real> sum;
    for (unsigned n = 0; n <= dist.cutoff(); ++n) {
        if (dist.probs[n] == 0.0) continue;
        sum.add(Real(dist.probs[n]) * diag_matrix_element(h, n));
    }
    return sum.value();
}

namespace detail {

template <class Real>
struct ComplexReal {
    Real re{0};
    Real im{0};

    friend ComplexReal operator*(const ComplexReal& a, const ComplexReal& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend ComplexReal operator+(const ComplexReal& a, const ComplexReal& b) {
        return {a.re + b.re, a.im + b.im};
    }
};

template <class Real>
ComplexReal<Real> to_complex_real(std::complex<double> z) {
    return {Real(z.real()), Real(z.imag())};
}

template <class Real>
ComplexReal<Real> complex_exp(const ComplexReal<Real>& z) {
    using std::cos;
    using std::exp;
    using std::sin;
    const Real r = exp(z.re);
    return {r * cos(z.im), r * sin(z.im)};
}

// Horner at complex z.
template <class Real>
ComplexReal<Real> evaluate_series(const PowerSeries<Real>& h, const ComplexReal<Real>& z) {
    ComplexReal<Real> acc;
    for (std::size_t k = h.order() + 1; k-- > 0;) {
        acc = acc * z + ComplexReal<Real>{h[k], Real(0)};
    }
    return acc;
}

// True when the last few retained terms at radius r are negligible next to
// the bulk of the series.
template <class Real>
bool series_converged_at(const PowerSeries<Real>& h, const Real& r) {
    using std::abs;
    Real bulk(0);
    Real tail(0);
    Real rk(1);
    const std::size_t order = h.order();
    const std::size_t tail_start = order >= 4 ? order - 3 : 1;
    for (std::size_t k = 0; k <= order; ++k) {
        const Real term = abs(h[k]) * rk;
        bulk += term;
        if (k >= tail_start) tail += term;
        rk *= r;
    }
    if (bulk == 0) return true;
    return tail <= bulk * std::numeric_limits<Real>::epsilon();
}

} // namespace detail

// <:h(n̂):> for a coherent superposition, using
// <alpha|:h(n̂):|beta> = h(conj(alpha) beta) <alpha|beta>. The series must
// have converged at every |conj(alpha_i) alpha_j|.
template <class Real>
Real nom_expectation(const CoherentSuperposition& state, const PowerSeries<Real>& h) {
    using detail::ComplexReal;
    using std::abs;
    Real radius(0);
    for (const auto& a : state.terms) {
        for (const auto& b : state.terms) {
            const Real r(std::abs(std::conj(a.amplitude) * b.amplitude));
            if (r > radius) radius = r;
        }
    }
    if (!detail::series_converged_at(h, radius)) {
        throw Error(ErrorCode::OrderTooLow, "series of order " + std::to_string(h.order()) +
                                                " has not converged at |z| = " +
                                                std::to_string(static_cast<double>(radius)));
    }
    CompensatedSum<Real> re;
    CompensatedSum<Real> im;
    for (const auto& a : state.terms) {
        const auto ca = detail::to_complex_real<Real>(std::conj(a.coefficient));
        const auto aa = detail::to_complex_real<Real>(std::conj(a.amplitude));
        const Real na = Real(std::norm(a.amplitude));
        for (const auto& b : state.terms) {
            const auto cb = detail::to_complex_real<Real>(b.coefficient);
            const auto ab = detail::to_complex_real<Real>(b.amplitude);
            const Real nb = Real(std::norm(b.amplitude));
            const ComplexReal<Real> z = aa * ab;
            const ComplexReal<Real> overlap =
                detail::complex_exp(ComplexReal<Real>{z.re - (na + nb) / 2, z.im});
            const ComplexReal<Real> term = ca * cb * detail::evaluate_series(h, z) * overlap;
            re.add(term.re);
            im.add(term.im);
        }
    }
    if (abs(im.value()) > Real(1e-10)) {
        throw Error(ErrorCode::NonHermitianResult,
                    "imaginary residue " + std::to_string(static_cast<double>(im.value())));
    }
    return re.value();
}

} // namespace clickstat
