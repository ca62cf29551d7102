#include <doctest.h>

#include "psp/normal.hpp"

#include <cmath>

using namespace psp;

TEST_SUITE("normal") {

TEST_CASE("erfc matches the library implementation to 1e-13 relative") {
    for (double x = -8.0; x <= 8.0; x += 0.0103) {
        double mine = erfc_approx(x);
        double ref = std::erfc(x);
        CHECK(std::abs(mine - ref) <= 1e-13 * std::abs(ref) + 1e-300);
    }
}

TEST_CASE("erf and erfc are consistent complements") {
    for (double x = -4.0; x <= 4.0; x += 0.17) {
        CHECK(erf_approx(x) + erfc_approx(x) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(erf_approx(-x) == doctest::Approx(-erf_approx(x)).epsilon(1e-13));
    }
    CHECK(erf_approx(1.0) == doctest::Approx(0.8427007929497149).epsilon(1e-13));
}

TEST_CASE("known CDF values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-13));
    CHECK(normal_cdf(2.0) == doctest::Approx(0.9772498680518208).epsilon(1e-13));
    CHECK(normal_cdf(-2.0) == doctest::Approx(1.0 - 0.9772498680518208).epsilon(1e-12));
    CHECK(normal_sf(1.0) + normal_cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tails clamp to the unit interval") {
    CHECK(normal_cdf(40.0) == 1.0);
    CHECK(normal_cdf(-40.0) == 0.0);
    CHECK(normal_cdf(-40.0) >= 0.0);
}

TEST_CASE("zero variance degenerates to a step") {
    CHECK(gauss_tail_above(1.0, 0.0, 0.5) == 1.0);
    CHECK(gauss_tail_above(0.2, 0.0, 0.5) == 0.0);
    CHECK(gauss_tail_below(0.2, 0.0, 0.5) == 1.0);
}

TEST_CASE("quantile inverts the CDF") {
    for (double p = 0.0005; p < 1.0; p += 0.0101) {
        double z = normal_quantile(p);
        CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-10));
    }
    // the 99% two-sided score used by the Wilson default
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-10));
}

} // TEST_SUITE
