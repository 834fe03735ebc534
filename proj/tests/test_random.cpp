#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "icl/random.hpp"

using namespace icl;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <class F>
Moments moments(std::size_t n, F&& draw) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = draw();
    s += v;
    s2 += v * v;
  }
  const double m = s / static_cast<double>(n);
  return {m, s2 / static_cast<double>(n) - m * m};
}

}  // namespace

TEST_CASE("splitmix64 reference values") {
  // First outputs of the reference splitmix64 stream started at 0.
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(s) == 0x06c45d188009454fULL);
}

TEST_CASE("Rng is deterministic and state round-trips") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  const auto st = a.state();
  const std::uint64_t next = a.next_u64();
  Rng c = Rng::from_state(st);
  CHECK(c.next_u64() == next);
}

TEST_CASE("derived streams differ") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 1000; ++i) firsts.insert(Rng(7, i).next_u64());
  CHECK(firsts.size() == 1000);
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
}

TEST_CASE("uniform stays in the open unit interval") {
  Rng r(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("below is unbiased over a small range") {
  Rng r(5);
  std::array<int, 7> counts{};
  const int n = 700000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  for (int c : counts) CHECK(std::abs(c - n / 7) < 1500);
}

TEST_CASE("normal moments") {
  Rng r(1);
  const auto m = moments(1000000, [&] { return r.normal(); });
  CHECK(std::abs(m.mean) < 0.01);
  CHECK(std::abs(m.var - 1.0) < 0.02);
}

TEST_CASE("gamma moments use the shape/scale convention") {
  for (auto [a, t] : {std::pair{2.0, 1.0}, {0.5, 2.0}, {5.0, 0.3}}) {
    Rng r(17);
    const auto m = moments(400000, [&] { return sample::gamma(r, a, t); });
    INFO("alpha=" << a << " theta=" << t);
    CHECK(m.mean == Catch::Approx(a * t).epsilon(0.02));
    CHECK(m.var == Catch::Approx(a * t * t).epsilon(0.03));
  }
}

TEST_CASE("poisson moments on both sides of the chunking threshold") {
  for (double lam : {0.5, 3.0, 25.0}) {
    Rng r(23);
    const auto m = moments(400000, [&] { return static_cast<double>(sample::poisson(r, lam)); });
    INFO("lambda=" << lam);
    CHECK(m.mean == Catch::Approx(lam).epsilon(0.02));
    CHECK(m.var == Catch::Approx(lam).epsilon(0.03));
  }
}

TEST_CASE("exponential and laplace moments") {
  Rng r(29);
  const auto e = moments(400000, [&] { return sample::exponential(r, 2.0); });
  CHECK(e.mean == Catch::Approx(0.5).epsilon(0.02));
  CHECK(e.var == Catch::Approx(0.25).epsilon(0.03));
  const auto l = moments(400000, [&] { return sample::laplace(r, 1.5); });
  CHECK(std::abs(l.mean) < 0.02);
  CHECK(l.var == Catch::Approx(2 * 1.5 * 1.5).epsilon(0.03));
}

TEST_CASE("student-t variance nu/(nu-2) for nu=6") {
  Rng r(31);
  const auto m = moments(1000000, [&] { return sample::student_t(r, 6.0); });
  CHECK(m.var == Catch::Approx(1.5).epsilon(0.03));
}
