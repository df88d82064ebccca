#include "fcofdm/complexity.hpp"

#include <cmath>
#include <stdexcept>

namespace fcofdm {

double split_radix_muls(std::size_t n) {
    if (n == 0) throw std::invalid_argument("split_radix_muls: zero length");
    if (n == 1) return 0.0;
    if ((n & (n - 1)) != 0)
        throw std::invalid_argument("split_radix_muls: length must be a power of two");
    const double lg = std::log2(static_cast<double>(n));
    return static_cast<double>(n) * (lg - 3.0) + 4.0;
}

double plain_ofdm_muls(std::size_t long_len, std::size_t qam_per_symbol) {
    if (qam_per_symbol == 0) throw std::invalid_argument("plain_ofdm_muls: no QAM symbols");
    return split_radix_muls(long_len) / static_cast<double>(qam_per_symbol);
}

double td_filter_muls(std::size_t fft_len, std::size_t cp_len, std::size_t long_len,
                      std::size_t fir_len, std::size_t qam_per_symbol, bool include_mixing) {
    if (qam_per_symbol == 0) throw std::invalid_argument("td_filter_muls: no QAM symbols");
    const double n_symb = static_cast<double>(qam_per_symbol);
    const double L = static_cast<double>(fft_len);
    const double N = static_cast<double>(long_len);
    const double ifft = split_radix_muls(fft_len) / n_symb;
    const double filter =
        static_cast<double>(fir_len) * L * (L + static_cast<double>(cp_len)) / (N * n_symb);
    const double mixing =
        include_mixing ? 4.0 * (N + static_cast<double>(cp_len) * N / L) / n_symb : 0.0;
    return ifft + filter + mixing;
}

ComplexityReport fc_complexity(const std::vector<FcComplexitySubband>& subbands,
                               std::size_t long_len) {
    if (subbands.empty()) throw std::invalid_argument("fc_complexity: no subbands");

    const double blocks_per_symbol =
        static_cast<double>(subbands.front().fft_len + subbands.front().cp_len) /
        static_cast<double>(subbands.front().short_step);
    double total_qam = 0.0;
    double short_fft = 0.0, weighting = 0.0, rotation = 0.0;
    for (const FcComplexitySubband& s : subbands) {
        if (s.qam_per_symbol == 0 || s.short_step == 0)
            throw std::invalid_argument("fc_complexity: bad subband");
        const double bps = static_cast<double>(s.fft_len + s.cp_len) /
                           static_cast<double>(s.short_step);
        if (std::abs(bps - blocks_per_symbol) > 1e-9)
            throw std::invalid_argument("fc_complexity: subbands span different block rates");
        total_qam += static_cast<double>(s.qam_per_symbol);
        short_fft += split_radix_muls(s.short_len);
        weighting += 4.0 * static_cast<double>(s.occupied_bins);
        rotation += 2.0 * static_cast<double>(s.short_step);
    }
    const double long_fft = split_radix_muls(long_len);

    ComplexityReport rep;
    rep.short_transforms = blocks_per_symbol * short_fft / total_qam;
    rep.weighting = blocks_per_symbol * weighting / total_qam;
    rep.rotation = blocks_per_symbol * rotation / total_qam;
    rep.long_transform = blocks_per_symbol * long_fft / total_qam;
    rep.muls_per_qam =
        rep.short_transforms + rep.weighting + rep.rotation + rep.long_transform;
    rep.ratio_vs_plain_ofdm =
        rep.muls_per_qam / plain_ofdm_muls(long_len, static_cast<std::size_t>(total_qam));
    return rep;
}

double fc_muls(const std::vector<FcComplexitySubband>& subbands, std::size_t long_len) {
    return fc_complexity(subbands, long_len).muls_per_qam;
}

}  // namespace fcofdm
