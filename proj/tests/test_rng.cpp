#include <doctest.h>

#include <cmath>
#include <vector>

#include "qmem/rng.hpp"

using namespace qmem;

TEST_CASE("streams are deterministic and distinct") {
    TrialRng a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_equal_across = false;
    for (int i = 0; i < 64; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_equal_across = any_equal_across || (x == c.next_u64());
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_across);
}

TEST_CASE("uniform stays in [0,1) with the right mean") {
    TrialRng rng(1, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean 1/2, sd of the mean = 1/sqrt(12 n)
    CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("bose_einstein matches the geometric law at nbar = 1") {
    TrialRng rng(3, 5);
    const int n = 1000000;
    int c0 = 0, c1 = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.bose_einstein(1.0);
        sum += k;
        c0 += k == 0;
        c1 += k == 1;
    }
    const double se0 = std::sqrt(0.5 * 0.5 / n);
    const double se1 = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(c0 / double(n) - 0.5) < 3 * se0);
    CHECK(std::abs(c1 / double(n) - 0.25) < 3 * se1);
    // thermal variance nbar(1+nbar) = 2
    CHECK(std::abs(sum / n - 1.0) < 3 * std::sqrt(2.0 / n));
}

TEST_CASE("binomial and poisson have the right first moments") {
    TrialRng rng(9, 1);
    const int n = 400000;
    double sb = 0, sp = 0, spp = 0;
    for (int i = 0; i < n; ++i) {
        sb += rng.binomial(5, 0.3);
        const auto p = rng.poisson(0.72);
        sp += p;
        spp += double(p) * p;
    }
    CHECK(std::abs(sb / n - 1.5) < 3 * std::sqrt(5 * 0.3 * 0.7 / n));
    CHECK(std::abs(sp / n - 0.72) < 3 * std::sqrt(0.72 / n));
    const double var = spp / n - (sp / n) * (sp / n);
    CHECK(std::abs(var - 0.72) < 0.02);
}

TEST_CASE("degenerate parameters short-circuit") {
    TrialRng rng(0, 0);
    CHECK(rng.bose_einstein(0.0) == 0);
    CHECK(rng.poisson(0.0) == 0);
    CHECK(rng.binomial(10, 0.0) == 0);
    CHECK(rng.binomial(10, 1.0) == 10);
}
