#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mpcvit/errors.hpp"
#include "mpcvit/ring.hpp"

namespace mpcvit {

// ---------------------------------------------------------------------------
// Communication metering
// ---------------------------------------------------------------------------

// Per-op-kind traffic tallies for the two simulated parties. Rounds count
// protocol message exchanges; a batched op contributes its rounds once.
struct MeterRow {
    u64 bytes_p0 = 0;
    u64 bytes_p1 = 0;
    u64 rounds = 0;
    u64 calls = 0;
};

struct CommMeter {
    std::map<std::string, MeterRow> rows;

    void record(const std::string& op, u64 bytes_p0, u64 bytes_p1, u64 rounds) {
        MeterRow& r = rows[op];
        r.bytes_p0 += bytes_p0;
        r.bytes_p1 += bytes_p1;
        r.rounds += rounds;
        r.calls += 1;
    }

    // Meters from independent sessions are mergeable after the fact.
    void merge(const CommMeter& other) {
        for (const auto& [op, r] : other.rows) {
            MeterRow& mine = rows[op];
            mine.bytes_p0 += r.bytes_p0;
            mine.bytes_p1 += r.bytes_p1;
            mine.rounds += r.rounds;
            mine.calls += r.calls;
        }
    }

    u64 total_bytes() const {
        u64 t = 0;
        for (const auto& [op, r] : rows) t += r.bytes_p0 + r.bytes_p1;
        return t;
    }
    u64 total_rounds() const {
        u64 t = 0;
        for (const auto& [op, r] : rows) t += r.rounds;
        return t;
    }

    bool operator==(const CommMeter& other) const {
        if (rows.size() != other.rows.size()) return false;
        for (const auto& [op, r] : rows) {
            auto it = other.rows.find(op);
            if (it == other.rows.end()) return false;
            const MeterRow& o = it->second;
            if (r.bytes_p0 != o.bytes_p0 || r.bytes_p1 != o.bytes_p1 ||
                r.rounds != o.rounds || r.calls != o.calls)
                return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Two-party additive sharing, both parties simulated in one process
// ---------------------------------------------------------------------------

// Cost charged per batched secure comparison (correlated OT based): total
// bytes across both parties and protocol rounds. (2*lambda + k*l) bits over
// 2 rounds with k=2, lambda=128: 48 bytes at l=64.
struct CompareCost {
    u64 bytes_total = 48;
    u64 rounds = 2;
};

inline CompareCost cot_compare_cost(int l, int k = 2, int lambda = 128) {
    CompareCost c;
    c.bytes_total = (u64(2 * lambda) + u64(k) * u64(l) + 7) / 8;
    c.rounds = 2;
    return c;
}

// A batch of Beaver triples (c = a*b in the ring, additively shared). Each
// batch carries an id and may be consumed exactly once.
struct TripleBatch {
    u64 id = 0;
    std::vector<u64> a0, a1, b0, b1, c0, c1;
    bool used = false;
    std::size_t size() const { return a0.size(); }
};

// Additively shared vector: element i is v0[i] + v1[i] mod 2^l.
struct SharedVec {
    std::vector<u64> v0, v1;
    std::size_t size() const { return v0.size(); }
};

// One protocol session: ring parameters, a seeded RNG that drives both the
// trusted dealer and the sharing randomness (identical seeds therefore yield
// bit-identical transcripts), plus the traffic meter.
class Session {
  public:
    Session(RingParams params, u64 seed, CompareCost cmp = {})
        : params_(params), rng_(seed), cmp_(cmp) {
        params_.validate();
        elem_bytes_ = u64(params_.l + 7) / 8;
    }

    const RingParams& params() const { return params_; }
    CommMeter& meter() { return meter_; }
    const CommMeter& meter() const { return meter_; }
    u64 elem_bytes() const { return elem_bytes_; }
    const CompareCost& compare_cost() const { return cmp_; }

    u64 random_element() { return rng_() & params_.mask(); }

    // -- sharing ------------------------------------------------------------

    // Split clear ring elements into two random additive shares. Meters one
    // ring element per value (the input owner ships one share to the other
    // party); input distribution needs no round-trip.
    SharedVec share(const std::vector<u64>& clear) {
        SharedVec out;
        out.v0.resize(clear.size());
        out.v1.resize(clear.size());
        for (std::size_t i = 0; i < clear.size(); ++i) {
            u64 r = random_element();
            out.v0[i] = r;
            out.v1[i] = ring_sub(clear[i] & params_.mask(), r, params_);
        }
        meter_.record("share", clear.size() * elem_bytes_, 0, 0);
        return out;
    }

    // Open shares to both parties: each sends its share of every element.
    std::vector<u64> reconstruct(const SharedVec& x) {
        std::vector<u64> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = ring_add(x.v0[i], x.v1[i], params_);
        meter_.record("reconstruct", x.size() * elem_bytes_, x.size() * elem_bytes_, 1);
        return out;
    }

    // -- local (communication-free) ops --------------------------------------

    SharedVec add(const SharedVec& a, const SharedVec& b) const {
        require_same(a, b);
        SharedVec out = a;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.v0[i] = ring_add(a.v0[i], b.v0[i], params_);
            out.v1[i] = ring_add(a.v1[i], b.v1[i], params_);
        }
        return out;
    }

    SharedVec sub(const SharedVec& a, const SharedVec& b) const {
        require_same(a, b);
        SharedVec out = a;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.v0[i] = ring_sub(a.v0[i], b.v0[i], params_);
            out.v1[i] = ring_sub(a.v1[i], b.v1[i], params_);
        }
        return out;
    }

    SharedVec neg(const SharedVec& a) const {
        SharedVec out = a;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.v0[i] = ring_neg(a.v0[i], params_);
            out.v1[i] = ring_neg(a.v1[i], params_);
        }
        return out;
    }

    // Add a public constant: party 0 absorbs it.
    SharedVec add_public(const SharedVec& a, u64 c) const {
        SharedVec out = a;
        for (std::size_t i = 0; i < a.size(); ++i)
            out.v0[i] = ring_add(a.v0[i], c, params_);
        return out;
    }

    // Multiply by a public integer constant (no truncation): local.
    SharedVec mul_public_int(const SharedVec& a, u64 c) const {
        SharedVec out = a;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.v0[i] = ring_mul(a.v0[i], c, params_);
            out.v1[i] = ring_mul(a.v1[i], c, params_);
        }
        return out;
    }

    // -- dealer + Beaver multiplication --------------------------------------

    TripleBatch deal_triples(std::size_t n) {
        TripleBatch t;
        t.id = next_triple_id_++;
        t.a0.resize(n); t.a1.resize(n);
        t.b0.resize(n); t.b1.resize(n);
        t.c0.resize(n); t.c1.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            u64 a = random_element(), b = random_element();
            u64 c = ring_mul(a, b, params_);
            u64 ra = random_element(), rb = random_element(), rc = random_element();
            t.a0[i] = ra; t.a1[i] = ring_sub(a, ra, params_);
            t.b0[i] = rb; t.b1[i] = ring_sub(b, rb, params_);
            t.c0[i] = rc; t.c1[i] = ring_sub(c, rc, params_);
        }
        return t;
    }

    // Exact ring product via Beaver: open d = x-a and e = y-b (2 elements per
    // party per multiplication), one round for the whole batch.
    SharedVec mul_shares(const SharedVec& x, const SharedVec& y, TripleBatch& t) {
        require_same(x, y);
        if (t.size() != x.size()) throw ShapeError("triple batch size mismatch");
        consume(t);
        SharedVec out;
        out.v0.resize(x.size());
        out.v1.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            u64 d = ring_add(ring_sub(x.v0[i], t.a0[i], params_),
                             ring_sub(x.v1[i], t.a1[i], params_), params_);
            u64 e = ring_add(ring_sub(y.v0[i], t.b0[i], params_),
                             ring_sub(y.v1[i], t.b1[i], params_), params_);
            u64 z0 = ring_add(t.c0[i], ring_mul(d, t.b0[i], params_), params_);
            z0 = ring_add(z0, ring_mul(e, t.a0[i], params_), params_);
            z0 = ring_add(z0, ring_mul(d, e, params_), params_);
            u64 z1 = ring_add(t.c1[i], ring_mul(d, t.b1[i], params_), params_);
            z1 = ring_add(z1, ring_mul(e, t.a1[i], params_), params_);
            out.v0[i] = z0;
            out.v1[i] = z1;
        }
        u64 bytes = 2 * x.size() * elem_bytes_;
        meter_.record("mul", bytes, bytes, 1);
        return out;
    }

    // Convenience: deal and consume in one step.
    SharedVec mul_shares(const SharedVec& x, const SharedVec& y) {
        TripleBatch t = deal_triples(x.size());
        return mul_shares(x, y, t);
    }

    // Fixed-point multiply: wide signed product, truncate by f, saturate to
    // the signed range (overflow does not trap), fresh re-share. Idealized
    // computation, but metered exactly like a Beaver multiply batch.
    SharedVec mul_fixed(const SharedVec& x, const SharedVec& y) {
        require_same(x, y);
        SharedVec out;
        out.v0.resize(x.size());
        out.v1.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            u64 xv = ring_add(x.v0[i], x.v1[i], params_);
            u64 yv = ring_add(y.v0[i], y.v1[i], params_);
            u64 z = fixed_mul_value(xv, yv, params_);
            u64 r = random_element();
            out.v0[i] = r;
            out.v1[i] = ring_sub(z, r, params_);
        }
        u64 bytes = 2 * x.size() * elem_bytes_;
        meter_.record("mul", bytes, bytes, 1);
        return out;
    }

    // Shared fixed-point matrix product (n x k)(k x m): every output element
    // accumulates exact wide products and is truncated once. Meters n*m*k
    // multiplications' traffic, batched into a single round.
    SharedVec matmul_fixed(const SharedVec& X, std::size_t n, std::size_t k,
                           const SharedVec& Y, std::size_t m) {
        if (X.size() != n * k || Y.size() != k * m)
            throw ShapeError("matmul_fixed shape mismatch");
        SharedVec out;
        out.v0.resize(n * m);
        out.v1.resize(n * m);
        i128 hi = i128(params_.signed_max()), lo = i128(params_.signed_min());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                i128 acc = 0;
                for (std::size_t q = 0; q < k; ++q) {
                    u64 xv = ring_add(X.v0[i * k + q], X.v1[i * k + q], params_);
                    u64 yv = ring_add(Y.v0[q * m + j], Y.v1[q * m + j], params_);
                    acc += i128(to_signed(xv, params_)) * i128(to_signed(yv, params_));
                }
                acc >>= params_.f;
                if (acc > hi) acc = hi;
                if (acc < lo) acc = lo;
                u64 r = random_element();
                out.v0[i * m + j] = r;
                out.v1[i * m + j] = ring_sub(from_signed(i64(acc), params_), r, params_);
            }
        }
        u64 bytes = 2 * n * m * k * elem_bytes_;
        meter_.record("matmul", bytes, bytes, 1);
        return out;
    }

    // Idealized faithful truncation on shares: zero communication cost.
    SharedVec truncate_shares(const SharedVec& x, int shift) {
        SharedVec out;
        out.v0.resize(x.size());
        out.v1.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            u64 v = truncate(ring_add(x.v0[i], x.v1[i], params_), shift, params_);
            u64 r = random_element();
            out.v0[i] = r;
            out.v1[i] = ring_sub(v, r, params_);
        }
        return out;
    }

    // Idealized metered comparison: shares of the bit [x >= 0] as an integer
    // ring element (0 or 1, not fixed-point scaled). Batched: one compare
    // cost row per call covering the whole vector.
    SharedVec drelu(const SharedVec& x) {
        SharedVec out;
        out.v0.resize(x.size());
        out.v1.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            u64 v = ring_add(x.v0[i], x.v1[i], params_);
            u64 bit = to_signed(v, params_) >= 0 ? 1 : 0;
            u64 r = random_element();
            out.v0[i] = r;
            out.v1[i] = ring_sub(bit, r, params_);
        }
        u64 total = cmp_.bytes_total * x.size();
        meter_.record("compare", total / 2, total - total / 2, cmp_.rounds);
        return out;
    }

  private:
    void require_same(const SharedVec& a, const SharedVec& b) const {
        if (a.size() != b.size()) throw ShapeError("shared vector size mismatch");
    }

    void consume(TripleBatch& t) {
        if (t.used)
            throw TripleReuse("triple batch " + std::to_string(t.id) + " consumed twice");
        t.used = true;
    }

    RingParams params_;
    std::mt19937_64 rng_;
    CompareCost cmp_;
    CommMeter meter_;
    u64 elem_bytes_ = 8;
    u64 next_triple_id_ = 0;
};

}  // namespace mpcvit
