#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "mpcvit/errors.hpp"

namespace mpcvit {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// Fixed-point arithmetic over the ring Z_{2^l}. Reals are scaled by 2^f and
// stored as l-bit two's complement words; all ring ops reduce mod 2^l.
struct RingParams {
    int l = 64;  // ring width in bits, 2..64
    int f = 18;  // fractional bits, 0 <= f < l

    void validate() const {
        if (l < 2 || l > 64) throw ConfigError("ring width l must be in [2,64]");
        if (f < 0 || f >= l) throw ConfigError("fractional bits f must be in [0,l)");
    }

    u64 mask() const { return l == 64 ? ~u64(0) : ((u64(1) << l) - 1); }

    // Largest/smallest signed values representable in l bits.
    i64 signed_max() const { return i64((u64(1) << (l - 1)) - 1); }
    i64 signed_min() const { return -i64(u64(1) << (l - 1)); }
};

inline u64 ring_reduce(u64 v, const RingParams& p) { return v & p.mask(); }

inline u64 ring_add(u64 a, u64 b, const RingParams& p) { return (a + b) & p.mask(); }
inline u64 ring_sub(u64 a, u64 b, const RingParams& p) { return (a - b) & p.mask(); }
inline u64 ring_neg(u64 a, const RingParams& p) { return (~a + 1) & p.mask(); }
inline u64 ring_mul(u64 a, u64 b, const RingParams& p) { return (a * b) & p.mask(); }

// Interpret an l-bit word as two's complement.
inline i64 to_signed(u64 v, const RingParams& p) {
    v &= p.mask();
    if (p.l == 64) return i64(v);
    u64 sign_bit = u64(1) << (p.l - 1);
    if (v & sign_bit) return i64(v) - i64(u64(1) << p.l);
    return i64(v);
}

inline u64 from_signed(i64 v, const RingParams& p) { return u64(v) & p.mask(); }

// Encode a real as round-half-away-from-zero fixed point. Values outside the
// signed range saturate rather than wrap: encoding is a lossy front door, and
// silently flipping sign on overflow would poison everything downstream.
inline u64 encode(double x, const RingParams& p) {
    double scaled = x * std::ldexp(1.0, p.f);
    double rounded = scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    double hi = double(p.signed_max());
    double lo = double(p.signed_min());
    if (!(rounded >= lo)) rounded = lo;  // also catches NaN -> signed_min
    if (rounded > hi) rounded = hi;
    return from_signed(i64(rounded), p);
}

inline double decode(u64 v, const RingParams& p) {
    return double(to_signed(v, p)) * std::ldexp(1.0, -p.f);
}

// Faithful truncation: arithmetic right shift of the signed value (rounds
// toward negative infinity), re-wrapped into the ring.
inline u64 truncate(u64 v, int shift, const RingParams& p) {
    if (shift < 0 || shift >= p.l) throw ConfigError("truncate shift out of range");
    i64 s = to_signed(v, p);
    return from_signed(s >> shift, p);
}

// Exact wide product of two signed ring values, truncated by f and saturated
// to the signed range. This is the plaintext core of a fixed-point multiply.
inline u64 fixed_mul_value(u64 a, u64 b, const RingParams& p) {
    i128 prod = i128(to_signed(a, p)) * i128(to_signed(b, p));
    i128 shifted = prod >> p.f;  // arithmetic shift, floor semantics
    i128 hi = i128(p.signed_max());
    i128 lo = i128(p.signed_min());
    if (shifted > hi) shifted = hi;
    if (shifted < lo) shifted = lo;
    return from_signed(i64(shifted), p);
}

}  // namespace mpcvit
