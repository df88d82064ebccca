#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcofdm/metrics.hpp"

namespace fcofdm {

// Weight design task: minimize the worst-case passband EVM of the model over
// the transition weights, subject to the synthesis stopband staying below
// -stopband_atten_db. The transition sizes of the model's masks set the
// search dimension; their values are ignored.
struct DesignProblem {
    TmuxModel model;
    double stopband_atten_db = 10.0;  // A_s
    std::size_t grid_points_per_bin = 16;
    std::size_t restarts = 8;
    std::size_t max_evals = 600;  // per restart
    double objective_tol_db = 1e-4;
    double simplex_tol = 1e-6;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = default
};

struct DesignReport {
    WeightMask mask;  // optimized synthesis-side mask
    double evm_max_db = 0.0;
    double evm_avg_db = 0.0;
    double stopband_max_db = 0.0;  // measured on the 2x verification grid
    std::size_t evaluations = 0;
    bool feasible = false;
};

DesignReport optimize_weights(const DesignProblem& problem);

// Passband-EVM evaluator with the weight dependence factored out: responses
// are linear in each side's mask, so per-subcarrier MSE is a quartic form in
// the weights that can be assembled once and evaluated cheaply.
class EvmEvaluator {
  public:
    EvmEvaluator(const TmuxModel& model, unsigned threads = 0);

    std::size_t dimension() const { return dim_; }
    std::vector<double> mse_profile(const std::vector<double>& weights) const;
    double evm_max_db(const std::vector<double>& weights) const;
    double evm_avg_db(const std::vector<double>& weights) const;

  private:
    std::size_t dim_ = 0;
    std::size_t n_tx_ = 1, n_rx_ = 1;
    // per measured subcarrier: main-tap coefficients and the pair Gram matrix
    std::vector<cvec> main_coeff_;   // [sc][pair]
    std::vector<cvec> pair_gram_;    // [sc][pair*pair]
    std::vector<double> pair_weights(const std::vector<double>& weights) const;
};

// Stopband level of the synthesis processing as a quadratic form in the
// weights, sampled on a dense grid over the region outside the transition
// bins.
class StopbandEvaluator {
  public:
    StopbandEvaluator(const FcConfig& cfg, const WeightMask& mask_shape,
                      std::size_t points_per_bin);

    std::size_t dimension() const { return dim_; }
    double max_level_db(const std::vector<double>& weights) const;

  private:
    std::size_t dim_ = 0;
    std::size_t grid_points_ = 0;
    // symmetric quadratic form per grid point, packed by (a, b) with a <= b
    std::vector<std::vector<double>> form_;
};

// Stable text serialization of a designed mask (weights at full precision).
void save_mask(const std::string& path, const FcConfig& cfg, const WeightMask& mask,
               std::uint64_t seed, const std::string& run_id);
std::pair<FcConfig, WeightMask> load_mask(const std::string& path);

}  // namespace fcofdm
