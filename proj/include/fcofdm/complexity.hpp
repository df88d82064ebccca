#pragma once

#include <cstddef>
#include <vector>

namespace fcofdm {

// Real multiplications of a split-radix FFT over n complex points.
double split_radix_muls(std::size_t n);

// Plain CP-OFDM reference: one full-rate IFFT per OFDM symbol.
double plain_ofdm_muls(std::size_t long_len, std::size_t qam_per_symbol);

// Time-domain subband filtering per QAM symbol: low-rate IFFT, CP insertion
// (free), interpolating FIR at the effective rate, and output-rate mixing.
double td_filter_muls(std::size_t fft_len, std::size_t cp_len, std::size_t long_len,
                      std::size_t fir_len, std::size_t qam_per_symbol,
                      bool include_mixing = true);

struct FcComplexitySubband {
    std::size_t short_len = 0;       // L_m
    std::size_t short_step = 0;      // L_S,m
    std::size_t occupied_bins = 0;   // active + 2 * transition
    std::size_t fft_len = 0;         // L_OFDM at the subband rate
    std::size_t cp_len = 0;          // L_CP
    std::size_t qam_per_symbol = 0;  // active subcarriers
};

struct ComplexityReport {
    double muls_per_qam = 0.0;
    double ratio_vs_plain_ofdm = 0.0;
    // per-QAM breakdown
    double short_transforms = 0.0;
    double weighting = 0.0;
    double rotation = 0.0;
    double long_transform = 0.0;
};

// FC-based TX or RX multiplication rate. Multiplication conventions: one
// combined complex weight-and-rotate per occupied bin (4 real muls), 2 real
// muls per new low-rate sample for the block rotation bookkeeping, and the
// long IDFT shared by all subbands of the signal.
ComplexityReport fc_complexity(const std::vector<FcComplexitySubband>& subbands,
                               std::size_t long_len);
double fc_muls(const std::vector<FcComplexitySubband>& subbands, std::size_t long_len);

}  // namespace fcofdm
