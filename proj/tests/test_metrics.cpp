#include <doctest.h>

#include <numbers>
#include <random>

#include "fcofdm/metrics.hpp"
#include "fcofdm/transforms.hpp"

using namespace fcofdm;

namespace {

FcConfig make_cfg(std::size_t N, std::size_t Ns, std::size_t L, std::size_t c) {
    FcConfig cfg;
    cfg.long_len = N;
    cfg.long_step = Ns;
    cfg.short_len = L;
    cfg.short_step = L * Ns / N;
    cfg.center_bin = c;
    return cfg;
}

WeightMask mask_with(std::size_t L, std::size_t act, std::vector<double> d) {
    WeightMask m;
    m.short_len = L;
    m.active_bins = act;
    m.transition = std::move(d);
    return m;
}

TmuxModel matched_model(std::size_t N, std::size_t Ns, std::size_t L, std::size_t c,
                        const WeightMask& mask, const OfdmNumerology& num) {
    TmuxModel model;
    model.long_len = N;
    model.long_step = Ns;
    model.tx = ChainSpec{true, make_cfg(N, Ns, L, c), mask, num};
    model.rx = model.tx;
    return model;
}

}  // namespace

TEST_CASE("plain CP-OFDM over an identity channel has vanishing MSE") {
    TmuxModel model;
    model.long_len = 64;
    model.long_step = 32;
    OfdmNumerology num{32, 8, 12, 0, 0};
    model.tx = ChainSpec{false, {}, {}, num};
    model.rx = model.tx;
    for (std::size_t sc : {0ul, 5ul, 11ul}) {
        CHECK(mse_per_subcarrier(sc, model) < 1e-20);
    }
}

TEST_CASE("trivial matched FC chain (L=N, all-ones) is transparent") {
    OfdmNumerology num{16, 4, 8, 0, 0};
    TmuxModel model = matched_model(32, 16, 32, 0, WeightMask::rectangular(32, 32), num);
    for (std::size_t sc = 0; sc < 8; ++sc) CHECK(mse_per_subcarrier(sc, model) < 1e-20);
}

TEST_CASE("measured subcarriers pair one-to-one for a matched model") {
    OfdmNumerology num{16, 4, 8, 0, 0};
    TmuxModel model = matched_model(64, 32, 16, 20, WeightMask::rectangular(16, 10), num);
    auto pairs = measured_subcarriers(model);
    REQUIRE(pairs.size() == 8);
    for (auto& [t, r] : pairs) CHECK(t == r);
}

TEST_CASE("EVM max is never below EVM average") {
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel model = matched_model(128, 64, 32, 40, mask_with(32, 16, {0.15, 0.85}), num);
    CHECK(evm_max_db(model) >= evm_avg_db(model));
}

TEST_CASE("transition weights improve EVM over a rectangular mask") {
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel rect = matched_model(128, 64, 32, 40, WeightMask::rectangular(32, 16), num);
    TmuxModel shaped = matched_model(128, 64, 32, 40, mask_with(32, 16, {0.15, 0.85}), num);
    CHECK(evm_avg_db(shaped) < evm_avg_db(rect));
}

TEST_CASE("subcarrier couplings agree with the dense demodulation operator") {
    // TX plain at the high rate, RX FC-filtered: cross-rate alignment check
    const std::size_t N = 64, Ns = 32;
    ChainSpec tx{false, {}, {}, OfdmNumerology{32, 8, 4, 0, 0}};
    ChainSpec rx{true, make_cfg(N, Ns, 16, 0), mask_with(16, 8, {0.5}),
                 OfdmNumerology{8, 2, 4, 0, 0}};

    TxResponse resp = tx_subcarrier_response(1, tx, N, Ns);
    CouplingSet c = subcarrier_couplings(1, tx, rx, N, Ns);

    const std::size_t down = rx.fc.rate_factor();
    REQUIRE(resp.fft_start % down == 0);
    const long long m0 = static_cast<long long>(resp.fft_start / down);
    const long long stride = static_cast<long long>(resp.symbol_stride / down);
    const long long window_start = m0 - static_cast<long long>(c.main_index) * stride;

    const std::size_t blocks = (resp.samples.size() + Ns - 1) / Ns;
    cvec padded = resp.samples;
    padded.resize(blocks * Ns, cplx(0.0, 0.0));

    for (std::size_t k = 0; k < rx.num.active; ++k) {
        CMatrix op = rx_subcarrier_operator(k, rx, N, Ns, padded.size(), window_start,
                                            static_cast<std::size_t>(stride), c.t[k].size());
        cvec got = op.apply(padded);
        for (std::size_t s = 0; s < got.size(); ++s) CHECK(std::abs(got[s] - c.t[k][s]) < 1e-10);
    }
}

TEST_CASE("couplings through a matched filtered pair: direct tap is unity") {
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel model = matched_model(128, 64, 32, 40, mask_with(32, 16, {0.2, 0.8}), num);
    CouplingSet c = subcarrier_couplings(6, model);
    // the direct response should carry nearly all the energy at the main tap
    CHECK(std::abs(c.t[6][c.main_index] - cplx(1.0, 0.0)) < 0.05);
}

TEST_CASE("sblr rejects identical subbands") {
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel a = matched_model(128, 64, 32, 30, mask_with(32, 16, {0.2, 0.8}), num);
    CHECK_THROWS_AS(sblr_db(a, a), std::invalid_argument);
}

TEST_CASE("adjacent-subband sblr is finite, negative, and falls with wide separation") {
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel a = matched_model(128, 64, 32, 40, mask_with(32, 16, {0.2, 0.8}), num);
    TmuxModel near = matched_model(128, 64, 32, 56, mask_with(32, 16, {0.2, 0.8}), num);
    TmuxModel far = matched_model(128, 64, 32, 88, mask_with(32, 16, {0.2, 0.8}), num);
    const double s_near = sblr_db(a, near);
    const double s_far = sblr_db(a, far);
    CHECK(s_near < -10.0);
    CHECK(s_far < s_near);
}

TEST_CASE("magnitude response of the trivial bank is unity") {
    FcConfig cfg = make_cfg(32, 16, 32, 0);
    WeightMask mask = WeightMask::rectangular(32, 32);
    std::vector<double> omegas = {0.0, 0.3, 1.1, 2.7};
    auto m = magnitude_response(cfg, mask, omegas);
    for (double v : m) CHECK(db10(v) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("magnitude response is about 0 dB at the center of an all-ones design") {
    FcConfig cfg = make_cfg(256, 128, 64, 100);
    WeightMask mask = WeightMask::rectangular(64, 32);
    const double wc = 2.0 * std::numbers::pi * 100.0 / 256.0;
    auto m = magnitude_response(cfg, mask, {wc});
    CHECK(std::abs(db10(m[0])) < 0.1);
}

TEST_CASE("magnitude response is symmetric about the mask's symmetry axis") {
    FcConfig cfg = make_cfg(256, 128, 64, 100);
    WeightMask mask = mask_with(64, 24, {0.3, 0.7});
    // an even-length mask is symmetric about the half-bin point below center
    const double axis = 2.0 * std::numbers::pi * (100.0 - 0.5) / 256.0;
    std::vector<double> probe, mirror;
    for (int k = 1; k <= 40; ++k) {
        probe.push_back(axis + 2.0 * std::numbers::pi * 0.37 * k / 256.0);
        mirror.push_back(axis - 2.0 * std::numbers::pi * 0.37 * k / 256.0);
    }
    auto a = magnitude_response(cfg, mask, probe);
    auto b = magnitude_response(cfg, mask, mirror);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(db10(a[i]) - db10(b[i])) < 1e-6);
}

TEST_CASE("magnitude response matches a streaming impulse oracle") {
    FcConfig cfg = make_cfg(64, 32, 16, 20);
    WeightMask mask = WeightMask::rectangular(16, 8);
    SynthesisBank bank({{cfg, mask}});

    std::vector<double> omegas;
    for (int i = 0; i < 24; ++i)
        omegas.push_back(2.0 * std::numbers::pi * (0.031 + 0.04 * i));

    // independent oracle: push impulses through the streaming bank
    std::vector<double> oracle(omegas.size(), 0.0);
    const std::size_t base = 4 * cfg.short_len;
    for (std::size_t j = 0; j < cfg.short_step; ++j) {
        cvec x(8 * cfg.short_len, cplx(0.0, 0.0));
        x[base + j] = cplx(1.0, 0.0);
        cvec y = bank.process(x);
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            cplx acc(0.0, 0.0);
            for (std::size_t t = 0; t < y.size(); ++t) {
                const double ang = -omegas[i] * static_cast<double>(t);
                acc += y[t] * cplx(std::cos(ang), std::sin(ang));
            }
            oracle[i] += std::norm(acc);
        }
    }
    for (double& v : oracle) v /= static_cast<double>(cfg.short_step);

    auto got = magnitude_response(cfg, mask, omegas);
    for (std::size_t i = 0; i < omegas.size(); ++i)
        CHECK(got[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
}

TEST_CASE("stopband scan matches the direct magnitude response on its grid") {
    FcConfig cfg = make_cfg(128, 64, 32, 40);
    WeightMask mask = mask_with(32, 12, {0.25, 0.8});
    StopbandScan scan = stopband_scan(cfg, mask, 4);
    REQUIRE(!scan.omega.empty());
    std::vector<double> probe(scan.omega.begin(), scan.omega.begin() + 12);
    auto direct = magnitude_response(cfg, mask, probe);
    for (std::size_t i = 0; i < probe.size(); ++i)
        CHECK(scan.level[i] == doctest::Approx(direct[i]).epsilon(1e-9));
}

TEST_CASE("stopband edges skip the transition bins") {
    WeightMask mask = mask_with(128, 48, {0.2, 0.8});
    long long lo, hi;
    stopband_edges(mask, lo, hi);
    CHECK(lo == -27);
    CHECK(hi == 26);
}

TEST_CASE("psd of white noise is flat and power-normalized") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const std::size_t n = 4096;
    std::vector<cvec> reals(100, cvec(n));
    double tpow = 0.0;
    for (auto& r : reals)
        for (auto& v : r) {
            v = cplx(g(rng), g(rng));
            tpow += std::norm(v);
        }
    tpow /= double(100 * n);

    PsdEstimate psd = psd_estimate(reals, 30e3, 15.36e6);
    double total = 0.0;
    for (double v : psd.power_db) total += undb10(v);
    CHECK(std::abs(db10(total / tpow)) < 0.1);

    double lo = 1e9, hi = -1e9;
    for (double v : psd.power_db) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo < 1.0);  // +-0.5 dB around the mean
}

TEST_CASE("psd of a pure tone peaks at the tone frequency") {
    const std::size_t n = 2048;
    const double fs = 15.36e6;
    const double f0 = 1.5e6;
    cvec x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double ang = 2.0 * std::numbers::pi * f0 * double(t) / fs;
        x[t] = cplx(std::cos(ang), std::sin(ang));
    }
    PsdEstimate psd = psd_estimate({x}, 30e3, fs);
    std::size_t best = 0;
    for (std::size_t i = 1; i < psd.power_db.size(); ++i)
        if (psd.power_db[i] > psd.power_db[best]) best = i;
    CHECK(std::abs(psd.freq_hz[best] - f0) <= 30e3);  // within the smoothing bandwidth
}
