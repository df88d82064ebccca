#include <doctest.h>

#include <numbers>
#include <random>

#include "fcofdm/transforms.hpp"

using namespace fcofdm;

namespace {

// Independent O(n^2) direct-summation DFT used as the oracle.
cvec dft_direct(const cvec& x) {
    const std::size_t n = x.size();
    cvec X(n, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * double(k) * double(j) / double(n);
            acc += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        X[k] = acc;
    }
    return X;
}

cvec random_cvec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    cvec x(n);
    for (cplx& v : x) v = cplx(g(rng), g(rng));
    return x;
}

double max_abs_diff(const cvec& a, const cvec& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("dft: impulse gives flat spectrum") {
    cvec x = {1.0, 0.0, 0.0, 0.0};
    cvec X = dft(x);
    for (const cplx& v : X) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-14);
}

TEST_CASE("dft: constant concentrates at DC") {
    cvec x = {1.0, 1.0, 1.0, 1.0};
    cvec X = dft(x);
    CHECK(std::abs(X[0] - cplx(4.0, 0.0)) < 1e-14);
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(X[k]) < 1e-14);
}

TEST_CASE("dft matches direct summation oracle") {
    for (std::size_t n : {16ul, 12ul, 137ul}) {
        cvec x = random_cvec(n, 0x1234 + n);
        cvec X = dft(x);
        cvec Y = dft_direct(x);
        double scale = 0.0;
        for (const cplx& v : Y) scale = std::max(scale, std::abs(v));
        CHECK(max_abs_diff(X, Y) / scale < 1e-12);
    }
}

TEST_CASE("idft inverts dft") {
    cvec x = random_cvec(64, 99);
    cvec y = idft(dft(x));
    double scale = 0.0;
    for (const cplx& v : x) scale = std::max(scale, std::abs(v));
    CHECK(max_abs_diff(x, y) / scale < 1e-12);
}

TEST_CASE("dft rejects empty input") {
    CHECK_THROWS_AS(dft(cvec{}), std::invalid_argument);
    CHECK_THROWS_AS(idft(cvec{}), std::invalid_argument);
}

TEST_CASE("Parseval holds within 1e-10 relative") {
    cvec x = random_cvec(256, 7);
    cvec X = dft(x);
    double px = 0.0, pX = 0.0;
    for (const cplx& v : x) px += std::norm(v);
    for (const cplx& v : X) pX += std::norm(v);
    CHECK(std::abs(pX - 256.0 * px) / (256.0 * px) < 1e-10);
}

TEST_CASE("segment_stream: no overlap partitions exactly") {
    cvec x = random_cvec(12, 3);
    auto blocks = segment_stream(x, 4, 4);
    REQUIRE(blocks.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(blocks[r].lead == 0);
        CHECK(blocks[r].tail == 0);
        for (std::size_t j = 0; j < 4; ++j) CHECK(blocks[r].samples[j] == x[4 * r + j]);
    }
}

TEST_CASE("segment_stream: hand-enumerated framing") {
    cvec x = {cplx(1), cplx(2), cplx(3), cplx(4), cplx(5), cplx(6)};  // a..f
    auto blocks = segment_stream(x, 4, 2);
    REQUIRE(blocks.size() == 3);
    auto eq = [](const cvec& got, std::initializer_list<double> want) {
        REQUIRE(got.size() == want.size());
        std::size_t i = 0;
        for (double w : want) CHECK(got[i++] == cplx(w));
    };
    eq(blocks[0].samples, {0, 1, 2, 3});
    eq(blocks[1].samples, {2, 3, 4, 5});
    eq(blocks[2].samples, {4, 5, 6, 0});
    CHECK(blocks[0].lead == 1);
    CHECK(blocks[0].tail == 1);
}

TEST_CASE("segment_stream: block count over 1096 samples") {
    cvec x(1096, cplx(1.0, 0.0));
    auto blocks = segment_stream(x, 128, 64);
    CHECK(blocks.size() == 18);
}

TEST_CASE("segment_stream rejects step > block length") {
    cvec x(8);
    CHECK_THROWS_AS(segment_stream(x, 4, 5), std::invalid_argument);
}

TEST_CASE("concat_overlap_save: verbatim when step == length") {
    std::vector<cvec> blocks = {{cplx(1), cplx(2)}, {cplx(3), cplx(4)}};
    cvec out = concat_overlap_save(blocks, 2);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == cplx(1));
    CHECK(out[3] == cplx(4));
}

TEST_CASE("concat_overlap_save: central samples kept") {
    cvec b(8);
    for (std::size_t i = 0; i < 8; ++i) b[i] = cplx(double(i));
    cvec out = concat_overlap_save({b}, 4);
    REQUIRE(out.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == cplx(double(i + 2)));
}

TEST_CASE("concat_overlap_save rejects ragged blocks") {
    std::vector<cvec> blocks = {cvec(8), cvec(7)};
    CHECK_THROWS_AS(concat_overlap_save(blocks, 4), std::invalid_argument);
}

TEST_CASE("segment -> identity -> concat reproduces the stream") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> pickL(1, 6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t L = 2 * pickL(rng) + 2;
        std::uniform_int_distribution<std::size_t> pickS(1, L);
        const std::size_t S = pickS(rng);
        cvec x = random_cvec(5 * L + 3, 1000 + trial);
        auto frames = segment_stream(x, L, S);
        std::vector<cvec> raw;
        raw.reserve(frames.size());
        for (auto& f : frames) raw.push_back(f.samples);
        cvec y = concat_overlap_save(raw, S);
        REQUIRE(y.size() >= x.size());
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
    }
}
