#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "fcofdm/ofdm.hpp"
#include "fcofdm/transforms.hpp"

using namespace fcofdm;

namespace {

std::vector<cvec> random_qpsk(std::size_t symbols, std::size_t active, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<cvec> out(symbols, cvec(active));
    const double a = 1.0 / std::sqrt(2.0);
    for (auto& sym : out)
        for (auto& v : sym) v = cplx(bit(rng) ? a : -a, bit(rng) ? a : -a);
    return out;
}

double evm_db(const std::vector<cvec>& ref, const std::vector<cvec>& got) {
    double err = 0.0, pow = 0.0;
    REQUIRE(ref.size() == got.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
        REQUIRE(ref[k].size() == got[k].size());
        for (std::size_t i = 0; i < ref[k].size(); ++i) {
            err += std::norm(got[k][i] - ref[k][i]);
            pow += std::norm(ref[k][i]);
        }
    }
    return db10(err / pow);
}

cvec dft_of_padded(const std::vector<cplx>& taps, std::size_t n) {
    cvec padded(n, cplx(0.0, 0.0));
    std::copy(taps.begin(), taps.end(), padded.begin());
    return dft(padded);
}

}  // namespace

TEST_CASE("cp insertion copies the tail") {
    OfdmNumerology num{4, 1, 1, 0, 0};
    cvec x = idft(cvec{cplx(1.0), cplx(0.0), cplx(0.0), cplx(0.0)});
    cvec out = cp_ofdm_modulate({{cplx(1.0)}}, num);
    REQUIRE(out.size() == 5);
    CHECK(std::abs(out[0] - x[3]) < 1e-15);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(out[i + 1] - x[i]) < 1e-15);
}

TEST_CASE("numerology table rows validate and give documented symbol lengths") {
    OfdmNumerology one_prb{128, 9, 12, 0, 0};
    CHECK_NOTHROW(one_prb.validate());
    CHECK(cp_ofdm_modulate(random_qpsk(1, 12, 1), one_prb).size() == 137);

    OfdmNumerology fifty{1024, 72, 600, 0, 0};
    CHECK_NOTHROW(fifty.validate());
    OfdmNumerology thirty{128, 9, 24, 1, 0};
    CHECK_NOTHROW(thirty.validate());

    OfdmNumerology overfull{128, 9, 128, 0, 0};
    CHECK_THROWS_AS(overfull.validate(), std::invalid_argument);
}

TEST_CASE("modulate/demodulate round trip is exact on a flat channel") {
    for (auto [fft, cp, act] :
         {std::tuple<std::size_t, std::size_t, std::size_t>{128, 9, 12},
          {128, 9, 48},
          {1024, 72, 600},
          {512, 36, 300}}) {
        OfdmNumerology num{fft, cp, act, 0, 0};
        auto qam = random_qpsk(4, act, fft + act);
        cvec stream = cp_ofdm_modulate(qam, num);
        auto back = cp_ofdm_demodulate(stream, num, num.cp_len, qam.size());
        CHECK(evm_db(qam, back) < -240.0);
    }
}

TEST_CASE("first-CP extension lengthens only the first symbol") {
    OfdmNumerology num{128, 9, 12, 0, 1};
    auto qam = random_qpsk(7, 12, 5);
    cvec stream = cp_ofdm_modulate(qam, num);
    CHECK(stream.size() == 7 * 137 + 1);
    auto back = cp_ofdm_demodulate(stream, num, num.cp_len, 7);
    CHECK(evm_db(qam, back) < -240.0);
}

TEST_CASE("window offset inside the CP is transparent after de-rotation") {
    OfdmNumerology num{128, 9, 48, 0, 0};
    auto qam = random_qpsk(3, 48, 9);
    cvec stream = cp_ofdm_modulate(qam, num);
    auto nominal = cp_ofdm_demodulate(stream, num, num.cp_len, 3);
    auto mid = cp_ofdm_demodulate(stream, num, num.cp_len / 2, 3);
    auto zero = cp_ofdm_demodulate(stream, num, 0, 3);
    // symbol 0 at offset 0 reaches one sample before the stream; skip it
    for (std::size_t k = 1; k < 3; ++k)
        for (std::size_t i = 0; i < 48; ++i) {
            CHECK(std::abs(nominal[k][i] - mid[k][i]) < 1e-10);
            CHECK(std::abs(nominal[k][i] - zero[k][i]) < 1e-10);
        }
    CHECK_THROWS_AS(cp_ofdm_demodulate(stream, num, num.cp_len + 1, 3), std::invalid_argument);
}

TEST_CASE("multipath inside the CP gives the channel DFT per bin") {
    OfdmNumerology num{128, 9, 48, 0, 0};
    auto qam = random_qpsk(3, 48, 77);
    cvec stream = cp_ofdm_modulate(qam, num);
    const std::vector<cplx> taps = {cplx(1.0, 0.0), cplx(0.5, -0.2)};
    cvec rx(stream.size() + taps.size() - 1, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < stream.size(); ++i)
        for (std::size_t t = 0; t < taps.size(); ++t) rx[i + t] += stream[i] * taps[t];
    rx.resize(stream.size());
    auto got = cp_ofdm_demodulate(rx, num, num.cp_len, 3);
    cvec h = dft_of_padded(taps, num.fft_len);
    for (std::size_t k = 1; k < 3; ++k)
        for (std::size_t sc = 0; sc < 48; ++sc) {
            const cplx want = qam[k][sc] * h[subcarrier_bin(num, sc)];
            CHECK(std::abs(got[k][sc] - want) < 1e-9);
        }
}

TEST_CASE("dft spread round trip and DC concentration") {
    cvec block(12);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (auto& v : block) v = cplx(g(rng), g(rng));
    cvec back = dft_despread(dft_spread(block));
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(back[i] - block[i]) < 1e-12);

    cvec ones(12, cplx(1.0, 0.0));
    cvec spread = dft_spread(ones);
    CHECK(std::abs(spread[0] - cplx(std::sqrt(12.0), 0.0)) < 1e-12);
    for (std::size_t i = 1; i < 12; ++i) CHECK(std::abs(spread[i]) < 1e-12);
}

TEST_CASE("dft-spread QPSK lowers PAPR by at least 1 dB at the 1e-3 CCDF") {
    OfdmNumerology num{128, 9, 12, 0, 0};
    std::mt19937_64 rng(2718);
    std::uniform_int_distribution<int> bit(0, 1);
    const double a = 1.0 / std::sqrt(2.0);
    const std::size_t trials = 20000;
    auto papr_of = [&](bool spread) {
        std::vector<double> paprs(trials);
        cvec qam(12);
        for (std::size_t t = 0; t < trials; ++t) {
            for (auto& v : qam) v = cplx(bit(rng) ? a : -a, bit(rng) ? a : -a);
            cvec mapped = spread ? dft_spread(qam) : qam;
            cvec sym = cp_ofdm_modulate({mapped}, num);
            double peak = 0.0, mean = 0.0;
            for (const cplx& v : sym) {
                peak = std::max(peak, std::norm(v));
                mean += std::norm(v);
            }
            mean /= double(sym.size());
            paprs[t] = db10(peak / mean);
        }
        std::sort(paprs.begin(), paprs.end());
        return paprs[static_cast<std::size_t>(0.999 * trials)];
    };
    const double plain = papr_of(false);
    const double spread = papr_of(true);
    CHECK(plain - spread >= 1.0);
}

TEST_CASE("wola with zero slope is plain CP-OFDM") {
    OfdmNumerology num{128, 9, 48, 0, 0};
    auto qam = random_qpsk(3, 48, 4);
    WolaParams p{0};
    cvec a = wola_tx(qam, num, p);
    cvec b = cp_ofdm_modulate(qam, num);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-14);
}

TEST_CASE("wola tx/rx link is transparent when the window fits the CP margin") {
    // slope 36 = CP/2 with a 72-sample CP leaves exactly one clean RX window
    OfdmNumerology num{1024, 72, 600, 0, 0};
    WolaParams p{36};
    auto qam = random_qpsk(6, 600, 8);
    cvec stream = wola_tx(qam, num, p);
    auto back = wola_rx(stream, num, p, 6);
    std::vector<cvec> ref(qam.begin() + 1, qam.end() - 1);
    std::vector<cvec> got(back.begin() + 1, back.end() - 1);
    CHECK(evm_db(ref, got) < -40.0);
}

TEST_CASE("wola with the full 72-sample slope still demodulates") {
    OfdmNumerology num{1024, 72, 600, 0, 0};
    WolaParams p{72};
    CHECK(p.tx_window_len(num) == 1024 + 72 + 72);
    CHECK(p.rx_window_len(num) == 1024 + 72);
    auto qam = random_qpsk(6, 600, 12);
    cvec stream = wola_tx(qam, num, p);
    auto back = wola_rx(stream, num, p, 6);
    std::vector<cvec> ref(qam.begin() + 1, qam.end() - 1);
    std::vector<cvec> got(back.begin() + 1, back.end() - 1);
    CHECK(evm_db(ref, got) < -20.0);
}

TEST_CASE("f-OFDM filter design") {
    auto h = f_ofdm_filter(48, 0, 512, 1024);
    REQUIRE(h.size() == 512);
    // unit DC gain and symmetric taps
    double sum = 0.0;
    for (double v : h) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]).epsilon(1e-12));

    auto response_at = [&](const std::vector<double>& taps, double cycles_per_sample) {
        cplx acc(0.0, 0.0);
        for (std::size_t n = 0; n < taps.size(); ++n) {
            const double ang = -2.0 * std::numbers::pi * cycles_per_sample * double(n);
            acc += taps[n] * cplx(std::cos(ang), std::sin(ang));
        }
        return std::abs(acc);
    };
    // about -6 dB at the design cutoff
    const double at_cut = db20(response_at(h, 0.5 * 48.0 / 1024.0));
    CHECK(at_cut == doctest::Approx(-6.0).epsilon(0.15));

    // tone offset 4 widens the passband by 4 subcarrier spacings
    auto h4 = f_ofdm_filter(48, 4, 512, 1024);
    const double at_cut4 = db20(response_at(h4, 0.5 * 52.0 / 1024.0));
    CHECK(at_cut4 == doctest::Approx(-6.0).epsilon(0.15));
    CHECK(db20(response_at(h4, 0.5 * 48.0 / 1024.0)) > -3.0);
}

TEST_CASE("uf-OFDM Dolph-Chebyshev designs") {
    for (auto [atten, len] : {std::pair<double, std::size_t>{75.0, 73}, {37.0, 37}, {37.0, 73}}) {
        auto w = uf_ofdm_filter(atten, len);
        REQUIRE(w.size() == len);
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(w[i] == doctest::Approx(w[w.size() - 1 - i]).epsilon(1e-10));
    }
    // equiripple sidelobes at the design level for the 73-tap / 37 dB design
    auto w = uf_ofdm_filter(37.0, 73);
    const std::size_t nfft = 1 << 14;
    cvec padded(nfft, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < w.size(); ++i) padded[i] = w[i];
    cvec spec = dft(padded);
    const double peak = std::abs(spec[0]);
    // skip the main lobe, then find the worst sidelobe
    std::size_t edge = 0;
    for (std::size_t k = 1; k < nfft / 2; ++k) {
        if (std::abs(spec[k]) < peak * std::pow(10.0, -37.0 / 20.0)) {
            edge = k;
            break;
        }
    }
    REQUIRE(edge > 0);
    double worst = 0.0;
    for (std::size_t k = edge; k <= nfft / 2; ++k) worst = std::max(worst, std::abs(spec[k]));
    CHECK(db20(worst / peak) == doctest::Approx(-37.0).epsilon(0.5 / 37.0));
}

TEST_CASE("modulated taps shift the response to the subband center") {
    auto h = uf_ofdm_filter(37.0, 37);
    cvec shifted = modulate_taps(h, 100.0, 1024);
    cvec spec = dft_of_padded(shifted, 1024);
    std::size_t peak_bin = 0;
    double peak = 0.0;
    for (std::size_t k = 0; k < 1024; ++k)
        if (std::abs(spec[k]) > peak) {
            peak = std::abs(spec[k]);
            peak_bin = k;
        }
    CHECK(peak_bin == 100);
}
