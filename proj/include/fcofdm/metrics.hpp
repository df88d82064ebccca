#pragma once

#include <cstddef>
#include <vector>

#include "fcofdm/fcfb.hpp"
#include "fcofdm/ofdm.hpp"
#include "fcofdm/types.hpp"

namespace fcofdm {

// One side of the transmultiplexer: either FC-filtered subband processing or
// plain CP-OFDM generated/received directly at the high rate.
struct ChainSpec {
    bool filtered = true;
    FcConfig fc;         // used when filtered
    WeightMask mask;     // used when filtered
    OfdmNumerology num;  // at the side's own sampling rate

    std::size_t rate_factor(std::size_t long_len) const {
        return filtered ? long_len / fc.short_len : 1;
    }
    void validate(std::size_t long_len, std::size_t long_step) const;
};

struct TmuxModel {
    std::size_t long_len = 0;   // N, shared by both banks
    std::size_t long_step = 0;  // N_S
    ChainSpec tx, rx;

    // A streamed symbol grid cycles through every reachable symbol-to-block
    // alignment; averaging the per-symbol MSE over those residues is what a
    // long simulation measures. Disable to pin the single reference
    // alignment instead.
    bool alignment_average = true;

    void validate() const;
};

// Placement residues (in the TX chain's own sample units) that a contiguous
// symbol stream visits relative to the block grid.
std::vector<std::size_t> tx_alignments(const ChainSpec& tx, std::size_t long_step);

// Frequency of a chain's active subcarrier on the long-FFT grid, in bins.
double subcarrier_long_bin(const ChainSpec& chain, std::size_t sc, std::size_t long_len);

// TX subcarrier -> RX subcarrier pairs that share a frequency; EVM is
// evaluated over these.
std::vector<std::pair<std::size_t, std::size_t>> measured_subcarriers(const TmuxModel& model);

// High-rate response of one unit QAM symbol on TX subcarrier sc. samples[t]
// sits at high-rate time t; the symbol's nominal FFT window starts at
// fft_start and repeats every symbol_stride samples on the nominal grid.
struct TxResponse {
    cvec samples;
    std::size_t fft_start = 0;
    std::size_t symbol_stride = 0;
    std::size_t support_begin = 0;  // high-rate span that can be nonzero
    std::size_t support_end = 0;
};
TxResponse tx_subcarrier_response(std::size_t sc, const ChainSpec& tx, std::size_t long_len,
                                  std::size_t long_step, std::size_t alignment = 0);

// Responses from one TX subcarrier into every RX subcarrier across the
// symbol windows that touch the response span. t[k][s] is the value observed
// on RX subcarrier k in window s; the transmitted symbol's own window sits
// at main_index.
struct CouplingSet {
    std::size_t main_index = 0;
    std::vector<cvec> t;  // [rx subcarrier][symbol window]
};
CouplingSet subcarrier_couplings(std::size_t sc, const ChainSpec& tx, const ChainSpec& rx,
                                 std::size_t long_len, std::size_t long_step);
CouplingSet subcarrier_couplings(std::size_t sc, const TmuxModel& model);

// Receiver half of the coupling computation, reusable with precomputed or
// superposed TX responses.
CouplingSet rx_couplings(const TxResponse& tx_response, const ChainSpec& rx,
                         std::size_t long_len, std::size_t long_step);

// Materialized map from high-rate samples [0, span) to the symbol sequence
// observed on RX subcarrier k over num_windows windows starting at
// window_start (RX low-rate). Cross-check for the streaming route.
CMatrix rx_subcarrier_operator(std::size_t k, const ChainSpec& rx, std::size_t long_len,
                               std::size_t long_step, std::size_t span, long long window_start,
                               std::size_t stride, std::size_t num_windows);

// Normalized per-subcarrier MSE: dispersion of the direct response plus the
// leakage induced on the other observed subcarriers.
double mse_per_subcarrier(std::size_t sc, const TmuxModel& model);
double evm_per_subcarrier_db(std::size_t sc, const TmuxModel& model);
std::vector<double> evm_profile_db(const TmuxModel& model, unsigned threads = 0);
double evm_max_db(const TmuxModel& model);
double evm_avg_db(const TmuxModel& model);

// Per-subcarrier EVM with the interference attributed to the subcarrier it
// lands on rather than the one inducing it. This is what a simulated
// receiver measures; the two attributions share sums and averages but
// distribute the leakage differently across subcarriers.
std::vector<double> evm_received_profile_db(const TmuxModel& model, unsigned threads = 0);

// Subband leakage ratio: power leaking from tx_subband's transmitter into
// rx_subband's receiver, relative to the power tx_subband's own receiver
// observes. The two subbands must differ.
double sblr_db(const TmuxModel& tx_subband, const TmuxModel& rx_subband);

// Average magnitude-squared synthesis response at the given high-rate
// frequencies (rad/sample).
std::vector<double> magnitude_response(const FcConfig& cfg, const WeightMask& mask,
                                       const std::vector<double>& omegas);

// Dense scan of the stopband region (outside the transition weights) with
// points_per_bin samples per long-FFT bin.
struct StopbandScan {
    std::vector<double> omega;
    std::vector<double> level;  // linear power
    double max_db() const;
};
StopbandScan stopband_scan(const FcConfig& cfg, const WeightMask& mask,
                           std::size_t points_per_bin);

// Stopband membership test used by the scan: offset limits in long-FFT bins
// relative to the subband center (lower edge inclusive, upper edge inclusive).
void stopband_edges(const WeightMask& mask, long long& lower_end, long long& upper_start);

// Averaged periodogram smoothed to the requested resolution bandwidth and
// normalized so the summed linear power equals the mean time-domain power.
struct PsdEstimate {
    std::vector<double> freq_hz;   // ascending, centered on 0
    std::vector<double> power_db;
};
PsdEstimate psd_estimate(const std::vector<cvec>& realizations, double rbw_hz, double fs_hz);

}  // namespace fcofdm
