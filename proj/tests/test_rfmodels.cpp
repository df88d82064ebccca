#include <doctest.h>

#include <random>

#include "fcofdm/rfmodels.hpp"

using namespace fcofdm;

namespace {
cvec random_cvec(std::size_t n, double amp, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, amp / std::sqrt(2.0));
    cvec x(n);
    for (cplx& v : x) v = cplx(g(rng), g(rng));
    return x;
}
}  // namespace

TEST_CASE("dbm conversions round trip and match the 50-ohm reference") {
    CHECK(amplitude_to_dbm(dbm_to_amplitude(13.7)) == doctest::Approx(13.7));
    // 239.6 V at 50 ohm is 574 W = 57.6 dBm
    CHECK(amplitude_to_dbm(239.6) == doctest::Approx(57.59).epsilon(1e-3));
}

TEST_CASE("rapp small-signal region is transparent") {
    RappPa pa;
    cvec x = random_cvec(256, 0.3, 1);
    cvec y = rapp_apply(x, pa);
    double err = 0.0, pow = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        err += std::norm(y[i] - x[i]);
        pow += std::norm(x[i]);
    }
    CHECK(10.0 * std::log10(err / pow) < -60.0);
}

TEST_CASE("rapp saturates to v_sat") {
    RappPa pa;
    CHECK(pa.am_am(1e6) == doctest::Approx(239.6).epsilon(1e-6));
    // monotone increasing AM-AM
    double prev = 0.0;
    for (double a = 1.0; a < 1e4; a *= 1.3) {
        const double v = pa.am_am(a);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("rapp 1 dB compression point sits at 57.6 dBm") {
    CHECK(rapp_p1db_input_dbm() == doctest::Approx(57.6).epsilon(0.1 / 57.6));
}

TEST_CASE("poly model reproduces its own polynomial on a grid") {
    PolyPa pa;
    for (int i = 0; i <= 100; ++i) {
        const double in = -30.0 + 0.39 * i;
        const double amp = dbm_to_amplitude(in);
        PolyResult r = poly_apply({cplx(amp, 0.0)}, pa);
        CHECK(amplitude_to_dbm(std::abs(r.samples[0])) == doctest::Approx(pa.out_dbm(in)));
        CHECK(std::arg(r.samples[0]) ==
              doctest::Approx(pa.pm_deg(in) * std::numbers::pi / 180.0).epsilon(1e-9));
    }
}

TEST_CASE("poly input 1 dB compression point sits at 3.4 dBm") {
    CHECK(poly_p1db_input_dbm() == doctest::Approx(3.4).epsilon(0.1 / 3.4));
}

TEST_CASE("poly clamps out-of-range inputs and counts them") {
    PolyPa pa;
    cvec x = {cplx(dbm_to_amplitude(-40.0), 0.0), cplx(dbm_to_amplitude(0.0), 0.0),
              cplx(dbm_to_amplitude(12.0), 0.0)};
    PolyResult r = poly_apply(x, pa);
    CHECK(r.clamped == 2);
    CHECK(amplitude_to_dbm(std::abs(r.samples[0])) == doctest::Approx(pa.out_dbm(-30.0)));
    CHECK(amplitude_to_dbm(std::abs(r.samples[2])) == doctest::Approx(pa.out_dbm(9.0)));
}

TEST_CASE("memoryless: permuting inputs permutes outputs") {
    cvec x = random_cvec(64, 50.0, 9);
    cvec y = rapp_apply(x, RappPa{});
    cvec xr(x.rbegin(), x.rend());
    cvec yr = rapp_apply(xr, RappPa{});
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(yr[i] - y[x.size() - 1 - i]) == doctest::Approx(0.0));
}

TEST_CASE("apply_ibo sets the requested mean power") {
    cvec x = random_cvec(4096, 3.0, 4);
    cvec y = apply_ibo(x, 11.6, 57.6);
    CHECK(mean_power_dbm(y) == doctest::Approx(46.0).epsilon(1e-6));
}

TEST_CASE("deep backoff through the rapp model keeps EVM below -60 dB") {
    cvec x = random_cvec(4096, 1.0, 5);
    cvec drive = apply_ibo(x, 40.0, 57.6);
    cvec y = rapp_apply(drive, RappPa{});
    double err = 0.0, pow = 0.0;
    for (std::size_t i = 0; i < drive.size(); ++i) {
        err += std::norm(y[i] - drive[i]);
        pow += std::norm(drive[i]);
    }
    CHECK(10.0 * std::log10(err / pow) < -60.0);
}

TEST_CASE("DL operating point: 11.6 dB backoff gives about 46 dBm through the rapp model") {
    // 64-QAM-like Gaussian envelope at the DL drive level
    cvec x = random_cvec(1 << 16, 1.0, 6);
    cvec drive = apply_ibo(x, 11.6, 57.6);
    cvec y = rapp_apply(drive, RappPa{});
    CHECK(mean_power_dbm(y) == doctest::Approx(46.0).epsilon(0.2 / 46.0));
}

TEST_CASE("UL operating point: 8 dB backoff gives about 22.5 dBm through the poly model") {
    cvec x = random_cvec(1 << 16, 1.0, 7);
    cvec drive = apply_ibo(x, 8.0, 3.4);
    PolyResult y = poly_apply(x.empty() ? x : drive, PolyPa{});
    CHECK(mean_power_dbm(y.samples) == doctest::Approx(22.5).epsilon(0.5 / 22.5));
}
