// Angle encoding: the midpoint rescaling, its inverse, the Ry realization,
// and the frequency decoder.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qcs/encoding.hpp>
#include <qcs/qcore.hpp>
#include <qcs/rng.hpp>

#include <cmath>

using namespace qcs;

TEST_CASE("uniform midpoints fill the map with one value") {
    const PixelMap map = uniform_midpoints(4);
    REQUIRE(map.size() == 4);
    for (const double v : map) CHECK(v == doctest::Approx(0.5));
    const PixelMap shifted = uniform_midpoints(2, 0.3);
    CHECK(shifted[0] == doctest::Approx(0.3));
    CHECK_THROWS_AS(uniform_midpoints(0), std::invalid_argument);
    CHECK_THROWS_AS(uniform_midpoints(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(uniform_midpoints(3, 1.0), std::invalid_argument);
}

TEST_CASE("rescaling pins the endpoints and the midpoint") {
    for (const double v : {0.2, 0.5, 0.8}) {
        CHECK(rescale_frequency(0.0, v) == doctest::Approx(0.0));
        CHECK(rescale_frequency(1.0, v) == doctest::Approx(1.0));
        CHECK(rescale_frequency(v, v) == doctest::Approx(0.5));
    }
}

TEST_CASE("rescaling is strictly monotone and round-trips with its inverse") {
    for (const double v : {0.25, 0.5, 0.65}) {
        double previous = -1.0;
        for (int i = 0; i <= 100; ++i) {
            const double x = static_cast<double>(i) / 100.0;
            const double f = rescale_frequency(x, v);
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
            CHECK(f > previous);
            previous = f;
            CHECK(rescale_frequency_inverse(f, v) == doctest::Approx(x).epsilon(1e-9));
        }
    }
}

TEST_CASE("values outside the unit interval are rejected") {
    CHECK_THROWS_AS(rescale_frequency(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(rescale_frequency(1.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(rescale_frequency(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(encode_pixel(2.0, 0.5), std::invalid_argument);
}

TEST_CASE("pixel encoding realizes the advertised superposition") {
    for (const double y : {0.0, 0.31, 0.5, 0.77, 1.0}) {
        const double v = 0.5;
        const StateVector psi = encode_pixel(y, v);
        const double f = rescale_frequency(y, v);
        CHECK(psi.amplitudes()(0).real() == doctest::Approx(std::cos(M_PI * f / 2)));
        CHECK(psi.amplitudes()(1).real() == doctest::Approx(std::sin(M_PI * f / 2)));
        CHECK(encoding_angle(y, v) == doctest::Approx(M_PI * f));
    }
    // The midpoint lands on the balanced superposition.
    const StateVector mid = encode_pixel(0.5, 0.5);
    CHECK(std::norm(mid.amplitudes()(1)) == doctest::Approx(0.5));
}

TEST_CASE("signal encoding is the product of pixel encodings") {
    const Signal signal{0.2, 0.8};
    const PixelMap map = uniform_midpoints(2);
    const StateVector psi = encode_signal(signal, map);
    const StateVector p0 = encode_pixel(0.2, 0.5);
    const StateVector p1 = encode_pixel(0.8, 0.5);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            CHECK(psi.amplitudes()(a * 2 + b).real() ==
                  doctest::Approx((p0.amplitudes()(a) * p1.amplitudes()(b)).real()));
    CHECK_THROWS_AS(encode_signal(Signal{0.1}, map), std::invalid_argument);
}

TEST_CASE("frequency decoding inverts the excited-state probability") {
    std::mt19937_64 rng = make_engine(717);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double y = uniform(rng);
        const double v = 0.1 + 0.8 * uniform(rng);
        const StateVector psi = encode_pixel(y, v);
        const double p1 = std::norm(psi.amplitudes()(1));
        CHECK(decode_frequency(p1, v) == doctest::Approx(y).epsilon(1e-8));
    }
    // Saturated frequencies decode to the interval ends.
    CHECK(decode_frequency(0.0, 0.5) == doctest::Approx(0.0));
    CHECK(decode_frequency(1.0, 0.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(decode_frequency(-0.01, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(decode_frequency(1.01, 0.5), std::invalid_argument);
}
