#pragma once

#include <cstddef>
#include <vector>

#include "fcofdm/transforms.hpp"
#include "fcofdm/types.hpp"

namespace fcofdm {

// One subband's fast-convolution parameters. The same structure serves the
// synthesis side (short_len = L_m, rate increase by long_len/short_len) and
// the analysis side (short_len = L̄_m, rate decrease by the same factor).
struct FcConfig {
    std::size_t long_len = 0;    // N, long transform length (bins)
    std::size_t long_step = 0;   // N_S, non-overlapping high-rate samples
    std::size_t short_len = 0;   // L_m
    std::size_t short_step = 0;  // L_S,m
    std::size_t center_bin = 0;  // c_m, subband center on the long grid

    std::size_t rate_factor() const { return long_len / short_len; }
    double overlap_factor() const {
        return 1.0 - static_cast<double>(short_step) / static_cast<double>(short_len);
    }
    void validate() const;  // throws std::invalid_argument with the failing constraint
};

// Frequency-domain window: zeros, rising transition weights, ones over the
// active bins, mirrored falling weights, zeros. Bin 0 is the lower subband
// edge (FFT-shifted indexing).
struct WeightMask {
    std::size_t short_len = 0;       // L_m
    std::size_t active_bins = 0;     // L_ACT,m
    std::vector<double> transition;  // d_0..d_{L_TBW-1}, rising toward the passband

    std::size_t transition_bins() const { return transition.size(); }
    std::vector<double> diagonal() const;  // materialized length-L_m diagonal
    void validate() const;

    static WeightMask rectangular(std::size_t short_len, std::size_t active_bins);
};

// exp(i 2π r θ_m), θ_m = c_m L_S,m / L_m, evaluated with exact integer angle
// arithmetic so long runs do not drift.
cplx phase_rotation(std::size_t block_index, const FcConfig& cfg);

// Per-block operators. Synthesis maps a length-L_m input block to the N_S
// saved output samples; analysis maps a length-N block to L̄_S,m samples.
CMatrix build_synthesis_block(const FcConfig& cfg, const WeightMask& mask, std::size_t block_index);
CMatrix build_analysis_block(const FcConfig& cfg, const WeightMask& mask, std::size_t block_index);

// Assembled stream operators over num_blocks blocks, matching the streaming
// engines sample for sample: input column j is stream sample j (the head pad
// is internal), output row p is stream sample p on the other rate.
CMatrix synthesis_operator(const FcConfig& cfg, const WeightMask& mask, std::size_t num_blocks);
CMatrix analysis_operator(const FcConfig& cfg, const WeightMask& mask, std::size_t num_blocks);

struct Subband {
    FcConfig cfg;
    WeightMask mask;
};

// Streaming synthesis bank: per-block short DFT -> weighting -> bin mapping
// with phase rotation into a shared long spectrum -> one long IDFT per block
// -> overlap-save. All subbands must share long_len/long_step.
class SynthesisBank {
  public:
    explicit SynthesisBank(std::vector<Subband> subbands);

    // inputs[m] is subband m's low-rate stream; all must span the same number
    // of blocks. Returns num_blocks * long_step high-rate samples.
    cvec process(const std::vector<cvec>& inputs) const;
    cvec process(const cvec& input) const;  // single-subband convenience

    const std::vector<Subband>& subbands() const { return subbands_; }

  private:
    std::vector<Subband> subbands_;
};

// Streaming analysis bank, the dual structure: per-block long DFT -> bin
// extraction with conjugate phase rotation -> weighting -> short IDFT ->
// overlap-save per subband.
class AnalysisBank {
  public:
    explicit AnalysisBank(std::vector<Subband> subbands);

    std::vector<cvec> process(const cvec& input) const;
    cvec process_single(const cvec& input) const;

    const std::vector<Subband>& subbands() const { return subbands_; }

  private:
    std::vector<Subband> subbands_;
};

// One shift-variant impulse response: the synthesis response to a unit
// impulse at steady-state input position `phase` (0..L_S,m-1).
struct ImpulseResponse {
    std::size_t phase = 0;
    std::size_t output_start = 0;  // high-rate index of taps[0] minus input time
    cvec taps;
};

// The L_S,m distinct responses of the synthesis bank (steady state).
std::vector<ImpulseResponse> shift_variant_responses(const FcConfig& cfg, const WeightMask& mask);

// Shift-variant columns extracted from an assembled operator (matrix route,
// used to cross-check the streaming extraction).
std::vector<ImpulseResponse> impulse_responses(const CMatrix& op, const FcConfig& cfg);

}  // namespace fcofdm
