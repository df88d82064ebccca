#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fcofdm/complexity.hpp"

using namespace fcofdm;

TEST_CASE("split-radix counts") {
    CHECK(split_radix_muls(2) == 0.0);
    CHECK(split_radix_muls(4) == 0.0);
    CHECK(split_radix_muls(8) == 4.0);
    CHECK(split_radix_muls(128) == 516.0);
    CHECK(split_radix_muls(1024) == 7172.0);
    CHECK_THROWS_AS(split_radix_muls(96), std::invalid_argument);
}

TEST_CASE("time-domain filtering reproduces the published per-symbol counts") {
    // 4-PRB Dolph-Chebyshev subband filter, 73 taps
    CHECK(std::lround(td_filter_muls(128, 9, 1024, 73, 48)) == 128);
    // windowed-sinc 512 taps, 1-PRB and 4-PRB allocations
    CHECK(std::lround(td_filter_muls(128, 9, 1024, 512, 12)) == 1139);
    CHECK(std::lround(td_filter_muls(128, 9, 1024, 512, 48)) == 285);
}

TEST_CASE("degenerate filter reduces to the IFFT term") {
    CHECK(td_filter_muls(128, 9, 1024, 0, 12, false) ==
          doctest::Approx(split_radix_muls(128) / 12.0));
}

namespace {
FcComplexitySubband subband(std::size_t prbs, double overlap, std::size_t short_len,
                            std::size_t fft_len, std::size_t cp_len, std::size_t tbw) {
    FcComplexitySubband s;
    s.short_len = short_len;
    s.short_step = static_cast<std::size_t>(short_len * (1.0 - overlap));
    s.occupied_bins = 12 * prbs + 2 * tbw;
    s.fft_len = fft_len;
    s.cp_len = cp_len;
    s.qam_per_symbol = 12 * prbs;
    return s;
}
}  // namespace

TEST_CASE("fc multiplication rate stays within 15% of the published table") {
    struct Row {
        std::size_t prbs, short_len, fft, cp;
        double overlap, want;
    };
    const Row rows[] = {
        {1, 128, 128, 9, 0.5, 1441.83},  {1, 128, 128, 9, 0.25, 979.83},
        {4, 128, 128, 9, 0.5, 360.46},   {4, 128, 128, 9, 0.25, 244.96},
        {50, 1024, 1024, 72, 0.5, 64.11}, {50, 1024, 1024, 72, 0.25, 46.89},
    };
    for (const Row& r : rows) {
        const double got =
            fc_muls({subband(r.prbs, r.overlap, r.short_len, r.fft, r.cp, 2)}, 1024);
        CHECK(std::abs(got - r.want) / r.want < 0.15);
    }
    // twelve 4-PRB subbands sharing the long transform
    for (auto [overlap, want] : {std::pair<double, double>{0.5, 61.51}, {0.25, 44.75}}) {
        std::vector<FcComplexitySubband> subs(12, subband(4, overlap, 128, 128, 9, 2));
        const double got = fc_muls(subs, 1024);
        CHECK(std::abs(got - want) / want < 0.15);
    }
}

TEST_CASE("relative-to-OFDM ratios match the published column within 15%") {
    struct Row {
        std::size_t prbs, short_len;
        double overlap, want;
    };
    const Row rows[] = {
        {1, 128, 0.5, 2.41},   {1, 128, 0.25, 1.64},  {4, 128, 0.5, 2.41},
        {4, 128, 0.25, 1.64},  {50, 1024, 0.5, 5.36}, {50, 1024, 0.25, 3.92},
    };
    for (const Row& r : rows) {
        const std::size_t fft = r.short_len == 1024 ? 1024 : 128;
        const std::size_t cp = r.short_len == 1024 ? 72 : 9;
        const auto rep = fc_complexity({subband(r.prbs, r.overlap, r.short_len, fft, cp, 2)}, 1024);
        CHECK(std::abs(rep.ratio_vs_plain_ofdm - r.want) / r.want < 0.15);
    }
}

TEST_CASE("halving the overlap factor cuts the rate by about 30 percent") {
    for (std::size_t prbs : {1ul, 4ul, 50ul}) {
        const std::size_t slen = prbs == 50 ? 1024 : 128;
        const std::size_t fft = prbs == 50 ? 1024 : 128;
        const std::size_t cp = prbs == 50 ? 72 : 9;
        const double half = fc_muls({subband(prbs, 0.5, slen, fft, cp, 2)}, 1024);
        const double quarter = fc_muls({subband(prbs, 0.25, slen, fft, cp, 2)}, 1024);
        const double reduction = 100.0 * (1.0 - quarter / half);
        CHECK(reduction > 25.0);
        CHECK(reduction < 35.0);
    }
}

TEST_CASE("multi-subband rates amortize only the shared long transform") {
    const double single = fc_muls({subband(4, 0.5, 128, 128, 9, 2)}, 1024);
    std::vector<FcComplexitySubband> subs(12, subband(4, 0.5, 128, 128, 9, 2));
    const double twelve = fc_muls(subs, 1024);
    CHECK(twelve < single);  // the long IDFT is shared
    const auto rep1 = fc_complexity({subband(4, 0.5, 128, 128, 9, 2)}, 1024);
    const auto rep12 = fc_complexity(subs, 1024);
    CHECK(rep12.short_transforms == doctest::Approx(rep1.short_transforms));
    CHECK(rep12.long_transform == doctest::Approx(rep1.long_transform / 12.0));
}
