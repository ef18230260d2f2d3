#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpcvit/ring.hpp>

#include <cmath>
#include <random>

using namespace mpcvit;

TEST_CASE("ring params validate") {
  CHECK_NOTHROW((RingParams{64, 18}.validate()));
  CHECK_NOTHROW((RingParams{32, 12}.validate()));
  CHECK_THROWS_AS((RingParams{0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((RingParams{65, 18}.validate()), ConfigError);
  CHECK_THROWS_AS((RingParams{32, 32}.validate()), ConfigError);
  CHECK_THROWS_AS((RingParams{16, 20}.validate()), ConfigError);
}

TEST_CASE("mask and signed bounds") {
  RingParams p32{32, 12};
  CHECK(p32.mask() == 0xFFFFFFFFull);
  CHECK(p32.signed_max() == 0x7FFFFFFFll);
  CHECK(p32.signed_min() == -0x80000000ll);
  RingParams p64{64, 18};
  CHECK(p64.mask() == ~0ull);
  CHECK(p64.signed_max() == 0x7FFFFFFFFFFFFFFFll);
}

TEST_CASE("modular arithmetic wraps") {
  RingParams p{32, 12};
  u64 a = 0xFFFFFFF0ull, b = 0x20ull;
  CHECK(ring_add(a, b, p) == 0x10ull);
  CHECK(ring_sub(b, a, p) == 0x30ull);
  CHECK(ring_neg(1, p) == 0xFFFFFFFFull);
  // (2^31)*2 wraps to 0
  CHECK(ring_mul(0x80000000ull, 2, p) == 0);
}

TEST_CASE("signed representative round trip") {
  RingParams p{16, 6};
  CHECK(to_signed(0x8000ull, p) == -32768);
  CHECK(to_signed(0x7FFFull, p) == 32767);
  CHECK(to_signed(0xFFFFull, p) == -1);
  CHECK(from_signed(-1, p) == 0xFFFFull);
  CHECK(from_signed(-32768, p) == 0x8000ull);
  std::mt19937_64 gen(5);
  RingParams p64{64, 18};
  for (int i = 0; i < 1000; ++i) {
    u64 x = gen() & p64.mask();
    CHECK(from_signed(to_signed(x, p64), p64) == x);
  }
}

TEST_CASE("encode rounds half away from zero") {
  RingParams p{64, 18};
  // 1.5 ulp -> magnitude 2, both signs
  double ulp = std::ldexp(1.0, -18);
  CHECK(to_signed(encode(1.5 * ulp, p), p) == 2);
  CHECK(to_signed(encode(-1.5 * ulp, p), p) == -2);
  CHECK(to_signed(encode(0.5 * ulp, p), p) == 1);
  CHECK(to_signed(encode(-0.5 * ulp, p), p) == -1);
  CHECK(to_signed(encode(1.0, p), p) == 262144);
  CHECK(to_signed(encode(-1.0, p), p) == -262144);
}

TEST_CASE("encode saturates out-of-range and NaN maps to signed_min") {
  RingParams p{16, 6};
  CHECK(to_signed(encode(1e9, p), p) == p.signed_max());
  CHECK(to_signed(encode(-1e9, p), p) == p.signed_min());
  CHECK(to_signed(encode(std::numeric_limits<double>::infinity(), p), p) ==
        p.signed_max());
  CHECK(to_signed(encode(std::nan(""), p), p) == p.signed_min());
}

TEST_CASE("encode/decode round trip within half ulp") {
  RingParams p{64, 18};
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  double ulp = std::ldexp(1.0, -18);
  for (int i = 0; i < 5000; ++i) {
    double x = dist(gen);
    double back = decode(encode(x, p), p);
    CHECK(std::abs(back - x) <= 0.5 * ulp + 1e-15);
  }
}

TEST_CASE("truncate is floor division by 2^f") {
  RingParams p{64, 18};
  // 2.25 * 2^18 = 589824; >>18 floors to 2
  CHECK(to_signed(truncate(encode(2.25, p), 18, p), p) == 2);
  // -2.25 * 2^18 floors to -3
  CHECK(to_signed(truncate(encode(-2.25, p), 18, p), p) == -3);
  CHECK(to_signed(truncate(from_signed(-1, p), 18, p), p) == -1);
  CHECK(truncate(0, 18, p) == 0);
}

TEST_CASE("fixed_mul_value multiplies at scale f") {
  RingParams p{64, 18};
  u64 a = encode(1.5, p), b = encode(2.0, p);
  CHECK(decode(fixed_mul_value(a, b, p), p) == doctest::Approx(3.0).epsilon(1e-12));
  u64 c = encode(-4.25, p), d = encode(3.0, p);
  CHECK(decode(fixed_mul_value(c, d, p), p) ==
        doctest::Approx(-12.75).epsilon(1e-9));
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    double x = dist(gen), y = dist(gen);
    double z = decode(fixed_mul_value(encode(x, p), encode(y, p), p), p);
    CHECK(std::abs(z - x * y) < 1e-3);
  }
}

TEST_CASE("fixed_mul_value saturates on overflow") {
  RingParams p{64, 18};
  // max representable is ~2^45; squaring overflows the signed range
  u64 big = from_signed(p.signed_max(), p);
  CHECK(to_signed(fixed_mul_value(big, big, p), p) == p.signed_max());
  u64 neg = from_signed(p.signed_min(), p);
  CHECK(to_signed(fixed_mul_value(big, neg, p), p) == p.signed_min());
}
