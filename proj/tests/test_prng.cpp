#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "asel/prng.hpp"

using namespace asel;
using Catch::Approx;

TEST_CASE("same seed, same stream", "[prng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derive_seed separates streams", "[prng]") {
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(derive_seed(1, i));
    CHECK(seen.size() == 200);
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(5, 7) == derive_seed(5, 7));
}

TEST_CASE("uniform stays in range", "[prng]") {
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = r.uniform(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
    }
}

TEST_CASE("uniform_int covers its support", "[prng]") {
    Rng r(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto k = r.uniform_int(7);
        CHECK(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("normal moments", "[prng]") {
    Rng r(13);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(s / n == Approx(0.0).margin(0.01));
    CHECK(s2 / n == Approx(1.0).margin(0.02));
}

TEST_CASE("categorical frequencies", "[prng]") {
    Rng r(17);
    const std::vector<double> w = {3.0, 1.0};
    int counts[2] = {0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[r.categorical(w)];
    CHECK(static_cast<double>(counts[0]) / counts[1] == Approx(3.0).epsilon(0.05));
}
