#pragma once

// Working-precision tiers for the alternating Fock-space sums.
//
// Each tier is a fixed-precision MPFR type, so no global precision state is
// touched and every tier is safe to use from several threads at once.

#include <boost/multiprecision/mpfr.hpp>

#include <utility>

#include "clickstat/error.hpp"

namespace clickstat {

namespace mp = boost::multiprecision;

using Real128 = mp::number<mp::mpfr_float_backend<38>, mp::et_off>;
using Real256 = mp::number<mp::mpfr_float_backend<77>, mp::et_off>;
using Real512 = mp::number<mp::mpfr_float_backend<154>, mp::et_off>;
using Real1024 = mp::number<mp::mpfr_float_backend<308>, mp::et_off>;

inline constexpr unsigned kMaxPrecisionBits = 1024;

struct Precision {
    unsigned bits = 128;      // requested working precision (rounded up to a tier)
    bool auto_extend = true;  // raise the tier when a cancellation estimate demands it
};

// Bits of mantissa carried by the tier selected for `bits`.
constexpr unsigned tier_bits(unsigned bits) {
    if (bits <= 128) return 128;
    if (bits <= 256) return 256;
    if (bits <= 512) return 512;
    return 1024;
}

// Calls `fn.template operator()<Real>()` with the smallest tier holding `bits`.
template <class Fn>
decltype(auto) with_precision(unsigned bits, Fn&& fn) {
    if (bits > kMaxPrecisionBits) {
        throw Error(ErrorCode::PrecisionExhausted,
                    "requested " + std::to_string(bits) + " bits, at most " +
                        std::to_string(kMaxPrecisionBits) + " available");
    }
    if (bits <= 128) return std::forward<Fn>(fn).template operator()<Real128>();
    if (bits <= 256) return std::forward<Fn>(fn).template operator()<Real256>();
    if (bits <= 512) return std::forward<Fn>(fn).template operator()<Real512>();
    return std::forward<Fn>(fn).template operator()<Real1024>();
}

} // namespace clickstat
