#include <catch2/catch_amalgamated.hpp>

#include "vistac/common.hpp"
#include "vistac/rng.hpp"

using namespace vistac;

TEST_CASE("rng streams are deterministic and independent", "[common]") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  REQUIRE(any_diff);
}

TEST_CASE("uniform stays in range and covers it", "[common]") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  REQUIRE(lo < 0.01);
  REQUIRE(hi > 0.99);
}

TEST_CASE("derive_seed separates sub-streams", "[common]") {
  REQUIRE(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  REQUIRE(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("angle wrapping and circular blending", "[common]") {
  REQUIRE(wrap_angle(-0.1) == Catch::Approx(kTau - 0.1));
  REQUIRE(wrap_angle(kTau + 0.25) == Catch::Approx(0.25));
  REQUIRE(angle_diff(0.1, kTau - 0.1) == Catch::Approx(0.2).margin(1e-12));
  // blending across the wrap goes the short way
  const double blended = angle_lerp(kTau - 0.1, 0.1, 0.5);
  REQUIRE(std::abs(angle_diff(blended, 0.0)) < 1e-9);
}

TEST_CASE("fnv1a is stable", "[common]") {
  REQUIRE(fnv1a(std::string("")) == 0xcbf29ce484222325ull);
  REQUIRE(fnv1a(std::string("a")) == 0xaf63dc4c8601ec8cull);
  REQUIRE(hex64(0xdeadbeefull) == "00000000deadbeef");
}

TEST_CASE("parallel_for covers every index once", "[common]") {
  std::vector<int> hits(10007, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
  for (int h : hits) REQUIRE(h == 1);
}
