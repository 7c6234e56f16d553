#pragma once

// Truncated power series in one variable and the Fock-diagonal matrix
// elements of normally ordered functions of the photon number.
//
// Everything here is templated on the scalar so callers pick the working
// precision (see precision.hpp). A series of order K carries coefficients
// x^0..x^K; products and compositions are truncated at K, never wrapped.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "clickstat/error.hpp"

namespace clickstat {

// Neumaier's variant of Kahan summation.
template <class Real>
class CompensatedSum {
  public:
    void add(const Real& x) {
        using std::abs;
        Real t = sum_ + x;
        if (abs(sum_) >= abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    Real value() const { return sum_ + carry_; }

  private:
    Real sum_{0};
    Real carry_{0};
};

template <class Real>
class PowerSeries {
  public:
    PowerSeries() : coeffs_(1, Real(0)) {}

    // Zero series of the given order.
    explicit PowerSeries(std::size_t order) : coeffs_(order + 1, Real(0)) {}

    explicit PowerSeries(std::vector<Real> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) {
            throw Error(ErrorCode::InvalidArgument, "power series needs at least one coefficient");
        }
    }

    // Coefficients given low order first, zero padded up to `order`.
    static PowerSeries from_coefficients(std::initializer_list<double> coeffs, std::size_t order) {
        PowerSeries s(order);
        std::size_t k = 0;
        for (double c : coeffs) {
            if (k > order) break;
            s.coeffs_[k++] = Real(c);
        }
        return s;
    }

    std::size_t order() const { return coeffs_.size() - 1; }

    const Real& operator[](std::size_t k) const { return coeffs_[k]; }
    Real& operator[](std::size_t k) { return coeffs_[k]; }

    // Coefficient of x^k, zero above the stored order.
    Real coefficient(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : Real(0); }

    std::span<const Real> coefficients() const { return coeffs_; }

    // Same series cut or zero padded to a new order.
    PowerSeries with_order(std::size_t order) const {
        PowerSeries s(order);
        std::copy_n(coeffs_.begin(), std::min(coeffs_.size(), order + 1), s.coeffs_.begin());
        return s;
    }

    // Horner evaluation of the truncated polynomial.
    Real evaluate(const Real& x) const {
        Real acc(0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
            acc = acc * x + *it;
        }
        return acc;
    }

  private:
    std::vector<Real> coeffs_;
};

// Coefficient-wise sum; the shorter operand is zero padded.
template <class Real>
PowerSeries<Real> series_add(const PowerSeries<Real>& a, const PowerSeries<Real>& b) {
    PowerSeries<Real> out(std::max(a.order(), b.order()));
    for (std::size_t k = 0; k <= out.order(); ++k) {
        out[k] = a.coefficient(k) + b.coefficient(k);
    }
    return out;
}

template <class Real>
PowerSeries<Real> series_scale(const PowerSeries<Real>& a, const Real& factor) {
    PowerSeries<Real> out = a;
    for (std::size_t k = 0; k <= out.order(); ++k) out[k] *= factor;
    return out;
}

// Cauchy product truncated at `order`.
template <class Real>
PowerSeries<Real> series_mul(const PowerSeries<Real>& a, const PowerSeries<Real>& b, std::size_t order) {
    PowerSeries<Real> out(order);
    const std::size_t na = std::min(a.order(), order);
    for (std::size_t i = 0; i <= na; ++i) {
        if (a[i] == 0) continue;
        const std::size_t nb = std::min(b.order(), order - i);
        for (std::size_t j = 0; j <= nb; ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

template <class Real>
PowerSeries<Real> series_mul(const PowerSeries<Real>& a, const PowerSeries<Real>& b) {
    return series_mul(a, b, std::max(a.order(), b.order()));
}

// a^m at the order of a.
template <class Real>
PowerSeries<Real> series_pow(const PowerSeries<Real>& a, unsigned m) {
    PowerSeries<Real> out(a.order());
    out[0] = 1;
    for (unsigned i = 0; i < m; ++i) out = series_mul(out, a, a.order());
    return out;
}

// f(c x), i.e. coefficient k scaled by c^k.
template <class Real>
PowerSeries<Real> series_rescale_argument(const PowerSeries<Real>& f, const Real& c) {
    PowerSeries<Real> out = f;
    Real ck(1);
    for (std::size_t k = 0; k <= out.order(); ++k) {
        out[k] *= ck;
        ck *= c;
    }
    return out;
}

// Series of exp(-s f(x)) via h_k = -(s/k) sum_{j=1..k} j f_j h_{k-j}.
template <class Real>
PowerSeries<Real> series_exp_neg(const PowerSeries<Real>& f, const Real& s) {
    if (f[0] < 0) {
        throw Error(ErrorCode::NegativeConstantTerm, "constant term of the exponent must be non-negative");
    }
    using std::exp;
    const std::size_t order = f.order();
    PowerSeries<Real> h(order);
    h[0] = exp(-s * f[0]);
    for (std::size_t k = 1; k <= order; ++k) {
        Real acc(0);
        for (std::size_t j = 1; j <= k; ++j) {
            if (f[j] == 0) continue;
            acc += Real(static_cast<unsigned long>(j)) * f[j] * h[k - j];
        }
        h[k] = -s * acc / Real(static_cast<unsigned long>(k));
    }
    return h;
}

// Series of log g(x) for g(0) > 0.
template <class Real>
PowerSeries<Real> series_log(const PowerSeries<Real>& g) {
    if (!(g[0] > 0)) {
        throw Error(ErrorCode::InvalidArgument, "logarithm needs a positive constant term");
    }
    using std::log;
    const std::size_t order = g.order();
    PowerSeries<Real> out(order);
    out[0] = log(g[0]);
    for (std::size_t k = 1; k <= order; ++k) {
        Real acc(0);
        for (std::size_t j = 1; j < k; ++j) {
            acc += Real(static_cast<unsigned long>(j)) * out[j] * g[k - j];
        }
        out[k] = (g[k] - acc / Real(static_cast<unsigned long>(k))) / g[0];
    }
    return out;
}

// n (n-1) ... (n-k+1), exact.
inline boost::multiprecision::cpp_int falling_factorial(unsigned n, unsigned k) {
    if (k > n) return 0;
    boost::multiprecision::cpp_int out = 1;
    for (unsigned i = 0; i < k; ++i) out *= (n - i);
    return out;
}

// <n| :h(n̂): |n> = sum_{k<=n} h_k n!/(n-k)!.
//
// The terms alternate in sign for the responses of interest and grow
// factorially, so the sum is compensated and carried at the scalar's
// precision. Requires h.order() >= n.
template <class Real>
Real diag_matrix_element(const PowerSeries<Real>& h, unsigned n) {
    if (h.order() < n) {
        throw Error(ErrorCode::OrderTooLow, "series order " + std::to_string(h.order()) +
                                                " is below Fock level " + std::to_string(n));
    }
    CompensatedSum<Real> sum;
    Real falling(1);
    for (unsigned k = 0; k <= n; ++k) {
        if (h[k] != 0) sum.add(h[k] * falling);
        falling *= Real(n - k);
    }
    return sum.value();
}

// Upper bound on sum_k |h_k| n!/(n-k)!; the size of the terms that cancel
// in diag_matrix_element. Evaluated in long double so it cannot overflow for
// any order used here.
template <class Real>
long double diag_term_magnitude(const PowerSeries<Real>& h, unsigned n) {
    long double total = 0.0L;
    long double falling = 1.0L;
    const std::size_t top = std::min<std::size_t>(h.order(), n);
    for (std::size_t k = 0; k <= top; ++k) {
        total += std::fabs(static_cast<long double>(h[k])) * falling;
        falling *= static_cast<long double>(n - k);
    }
    return total;
}

} // namespace clickstat
