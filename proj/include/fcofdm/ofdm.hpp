#pragma once

#include <cstddef>
#include <vector>

#include "fcofdm/types.hpp"

namespace fcofdm {

// Per-subband CP-OFDM parameters at the chain's own (low) sampling rate.
struct OfdmNumerology {
    std::size_t fft_len = 0;             // L_OFDM
    std::size_t cp_len = 0;              // L_CP
    std::size_t active = 0;              // active subcarriers
    int scs_exponent = 0;                // SCS = 2^eta * 15 kHz
    std::size_t first_cp_extension = 0;  // extra CP samples on a subframe's first symbol

    std::size_t symbol_len() const { return fft_len + cp_len; }
    double scs_hz() const { return 15e3 * static_cast<double>(1u << scs_exponent); }
    void validate() const;
};

// Signed offset of active subcarrier sc from the subband center bin; the
// actives occupy the contiguous bins [-floor(active/2), active - floor(active/2)).
long long subcarrier_offset(const OfdmNumerology& num, std::size_t sc);
std::size_t subcarrier_bin(const OfdmNumerology& num, std::size_t sc);  // offset mod fft_len

// CP-OFDM symbol stream. qam[k] holds symbol k's active-subcarrier values.
// The first symbol's CP is extended by first_cp_extension samples.
cvec cp_ofdm_modulate(const std::vector<cvec>& qam, const OfdmNumerology& num);

// Start of symbol k and of its nominal FFT window within a modulated stream.
std::size_t symbol_start(const OfdmNumerology& num, std::size_t k);
std::size_t fft_window_start(const OfdmNumerology& num, std::size_t k);

// Demodulates num_symbols symbols. The FFT window begins window_offset
// samples into the (unextended) CP; window_offset = cp_len is the nominal
// grid. The phase slope induced by an early window is removed.
std::vector<cvec> cp_ofdm_demodulate(const cvec& stream, const OfdmNumerology& num,
                                     std::size_t window_offset, std::size_t num_symbols);

// Unitary DFT precoder pair for DFT-spread OFDM.
cvec dft_spread(const cvec& block);
cvec dft_despread(const cvec& freq);

// Time-domain windowing parameters; the symbol extension equals the slope.
struct WolaParams {
    std::size_t slope = 0;  // N_WS = N_EXT

    std::size_t tx_window_len(const OfdmNumerology& num) const {
        return num.symbol_len() + slope;
    }
    std::size_t rx_window_len(const OfdmNumerology& num) const { return num.fft_len + slope; }
};

// Windowed-overlap-add transmitter: each CP-OFDM symbol is cyclically
// extended by `slope` samples, shaped with a raised-cosine window, and
// overlapped with its neighbours so the nominal symbol timing is kept.
cvec wola_tx(const std::vector<cvec>& qam, const OfdmNumerology& num, const WolaParams& p);

// Receiver windowing: a raised-cosine window of fft_len + slope samples is
// centered in each symbol and its slopes are folded onto the FFT grid.
std::vector<cvec> wola_rx(const cvec& stream, const OfdmNumerology& num, const WolaParams& p,
                          std::size_t num_symbols);

// Hann-windowed sinc lowpass with passband width (allocation_bins +
// tone_offset) subcarrier spacings; unit DC gain. fft_len fixes the
// subcarrier spacing at the filter's design rate.
std::vector<double> f_ofdm_filter(std::size_t allocation_bins, std::size_t tone_offset,
                                  std::size_t fir_len, std::size_t fft_len);

// Dolph-Chebyshev window with the given sidelobe attenuation, unit DC gain.
std::vector<double> uf_ofdm_filter(double stopband_atten_db, std::size_t fir_len);

// Complex taps shifted to a subband center given in bins of an fft_len grid.
cvec modulate_taps(const std::vector<double>& taps, double center_bin, std::size_t fft_len);

}  // namespace fcofdm
