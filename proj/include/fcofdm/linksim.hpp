#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fcofdm/metrics.hpp"
#include "fcofdm/ofdm.hpp"
#include "fcofdm/rfmodels.hpp"

namespace fcofdm {

enum class Modulation { qpsk, qam16, qam64, qam256 };
std::size_t bits_per_symbol(Modulation m);
const cvec& constellation(Modulation m);  // gray-coded, unit average power
cplx nearest_point(Modulation m, cplx v);
Modulation modulation_from_string(const std::string& name);

enum class WaveformKind { cp_ofdm, fc_f_ofdm, wola, f_ofdm };
enum class PaKind { none, rapp, poly };

// One transmitted subband. FC-F-OFDM subbands run their OFDM chain at the
// subband rate and share the transmitter's long IFFT; the other waveforms
// modulate at the high rate and are shifted to center_bin.
struct SubbandSignal {
    WaveformKind waveform = WaveformKind::fc_f_ofdm;
    OfdmNumerology num;
    Modulation modulation = Modulation::qam64;
    bool dft_spread = false;

    FcConfig fc;      // fc_f_ofdm
    WeightMask mask;  // fc_f_ofdm
    std::size_t center_bin = 0;  // used by the high-rate waveforms

    WolaParams wola;  // wola
    std::size_t fir_len = 512;      // f_ofdm
    std::size_t tone_offset = 0;    // f_ofdm passband extension, subcarriers

    std::size_t rate_factor(std::size_t long_len) const {
        return waveform == WaveformKind::fc_f_ofdm ? long_len / fc.short_len : 1;
    }
    std::size_t high_rate_center(std::size_t) const {
        return waveform == WaveformKind::fc_f_ofdm ? fc.center_bin : center_bin;
    }
};

struct InterfererSpec {
    std::vector<SubbandSignal> subbands;
    long long time_offset = 0;      // high-rate samples
    double power_offset_db = 0.0;   // relative to the main signal
    PaKind pa = PaKind::none;
    double ibo_db = 8.0;
};

struct LinkScenario {
    std::size_t long_len = 1024;   // N
    std::size_t long_step = 512;   // N_S
    double fs_hz = 15.36e6;

    std::vector<SubbandSignal> subbands;  // the measured transmitter
    std::size_t target = 0;               // which subband is measured

    std::size_t symbols = 140;            // target-numerology OFDM symbols
    std::size_t symbols_per_subframe = 0; // 0 = one continuous run
    std::size_t guard_samples = 0;        // high-rate gap after each subframe
    bool rc_truncate_transients = false;  // taper transients into the guard
    std::size_t warmup_symbols = 2;       // excluded from the statistics

    PaKind pa = PaKind::none;
    double ibo_db = 11.6;

    std::vector<cplx> channel_taps;  // empty = ideal channel
    double snr_db = std::numeric_limits<double>::infinity();
    bool equalize = false;  // ideal per-bin channel inversion

    // FFT window placement inside the CP; cp_len = nominal end of the CP
    std::optional<std::size_t> rx_window_offset;

    std::optional<InterfererSpec> interferer;
    std::uint64_t seed = 1;
    bool dump_constellation = false;

    void validate() const;
};

struct LinkResult {
    std::vector<double> evm_per_subcarrier_db;
    double evm_db = 0.0;  // aggregate over the target's active subcarriers
    double ser = 0.0;
    std::size_t symbols_measured = 0;
    std::size_t qam_symbols_measured = 0;
    double mean_pa_out_dbm = 0.0;  // NaN when no PA is configured
    std::size_t pa_clipped_samples = 0;
    bool interferer_overlaps_target = false;
    cvec constellation_dump;  // received symbols, when requested
};

LinkResult run_link(const LinkScenario& scenario);

// Transmit chain only: the composite subband signal through the configured
// PA, for spectrum evaluations.
cvec transmit_stream(const LinkScenario& scenario, std::uint64_t seed);

// Linear convolution with the given taps plus complex white noise.
cvec apply_channel(const cvec& stream, const std::vector<cplx>& taps, std::uint64_t seed,
                   double noise_power);

// Adds the interferer at the given delay, scaled so its mean power sits
// power_offset_db above the target's.
cvec asynchronous_mix(const cvec& target, const cvec& interferer, long long offset_samples,
                      double power_offset_db);

// Random exponential-decay channel profile with the requested RMS delay
// spread in samples; unit energy.
std::vector<cplx> exponential_channel(double rms_delay_spread, std::uint64_t seed);

// In-band/out-of-band emission limit: applies to the PSD in dBm per
// measurement bandwidth between the two frequency offsets.
struct MaskPoint {
    double freq_lo_hz = 0.0;
    double freq_hi_hz = 0.0;
    double limit_dbm = 0.0;
};

struct PowerSearchConstraints {
    double evm_limit_percent = std::numeric_limits<double>::infinity();
    std::vector<MaskPoint> psd_mask;  // empty = unconstrained
    double rbw_hz = 30e3;
    std::size_t realizations = 20;
};

struct PowerSearchResult {
    double max_mean_out_dbm = -std::numeric_limits<double>::infinity();
    double ibo_db = 0.0;
    std::string binding_constraint;  // what failed one step further
    bool feasible = false;
};

// Largest mean PA output power meeting every constraint, swept over the
// input backoff with 0.1 dB granularity.
PowerSearchResult max_power_search(const LinkScenario& scenario,
                                   const PowerSearchConstraints& constraints,
                                   double ibo_min_db = 0.0, double ibo_max_db = 20.0);

}  // namespace fcofdm
