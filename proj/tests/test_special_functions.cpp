#include <catch2/catch_amalgamated.hpp>

#include "pra/special_functions.hpp"

using namespace pra;

TEST_CASE("digamma at integer arguments") {
    CHECK(digamma_int(1) == Catch::Approx(-0.5772156649015329).epsilon(1e-12));
    // psi(8) = H_7 - gamma
    const double h7 = 1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5 + 1.0 / 6 + 1.0 / 7;
    CHECK(digamma_int(8) == Catch::Approx(h7 - 0.5772156649015329).epsilon(1e-12));
    CHECK(digamma_int(8) == Catch::Approx(2.0156414779556100).epsilon(1e-10));
    CHECK_THROWS_AS(digamma_int(0), std::domain_error);
}

TEST_CASE("trigamma at integer arguments") {
    CHECK(trigamma_int(1) == Catch::Approx(1.6449340668482264).epsilon(1e-12));
    double s = 0.0;
    for (int i = 1; i < 8; ++i) s += 1.0 / (i * i);
    CHECK(trigamma_int(8) == Catch::Approx(1.6449340668482264 - s).epsilon(1e-12));
    CHECK_THROWS_AS(trigamma_int(-3), std::domain_error);
}

TEST_CASE("normal quantile and cdf invert each other") {
    CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-14));
    CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-14));
    for (double p = 0.0005; p < 1.0; p += 0.0101)
        CHECK(normal_cdf(normal_quantile(p)) == Catch::Approx(p).epsilon(1e-10));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
}
