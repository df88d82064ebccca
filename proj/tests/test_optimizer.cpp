#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "fcofdm/optimizer.hpp"

using namespace fcofdm;

namespace {

FcConfig make_cfg(std::size_t N, std::size_t Ns, std::size_t L, std::size_t c) {
    FcConfig cfg;
    cfg.long_len = N;
    cfg.long_step = Ns;
    cfg.short_len = L;
    cfg.short_step = L * Ns / N;
    cfg.center_bin = c;
    return cfg;
}

TmuxModel small_model(std::size_t tbw) {
    WeightMask mask;
    mask.short_len = 32;
    mask.active_bins = 12;
    mask.transition.assign(tbw, 0.0);
    OfdmNumerology num{32, 4, 12, 0, 0};
    TmuxModel model;
    model.long_len = 128;
    model.long_step = 64;
    model.tx = ChainSpec{true, make_cfg(128, 64, 32, 40), mask, num};
    model.rx = model.tx;
    return model;
}

}  // namespace

TEST_CASE("cached evaluator matches the direct metrics route") {
    TmuxModel model = small_model(2);
    EvmEvaluator eval(model, 1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> d = {u(rng), u(rng)};
        TmuxModel direct = model;
        direct.tx.mask.transition = d;
        direct.rx.mask.transition = d;
        auto mse = eval.mse_profile(d);
        for (std::size_t sc = 0; sc < mse.size(); ++sc) {
            const double want = mse_per_subcarrier(sc, direct);
            CHECK(mse[sc] == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

TEST_CASE("cached evaluator handles one-sided filtering") {
    TmuxModel model = small_model(1);
    model.tx.filtered = false;
    model.tx.num = OfdmNumerology{128, 16, 12, 0, 0};  // plain full-rate TX
    model.tx.fc = {};
    model.tx.mask = {};
    model.rx.fc.center_bin = 0;  // the plain TX sits at the carrier center
    EvmEvaluator eval(model, 1);
    std::vector<double> d = {0.37};
    TmuxModel direct = model;
    direct.rx.mask.transition = d;
    auto mse = eval.mse_profile(d);
    for (std::size_t sc = 0; sc < mse.size(); ++sc)
        CHECK(mse[sc] == doctest::Approx(mse_per_subcarrier(sc, direct)).epsilon(1e-9));
}

TEST_CASE("stopband evaluator matches the direct scan") {
    TmuxModel model = small_model(2);
    StopbandEvaluator eval(model.tx.fc, model.tx.mask, 4);
    std::vector<double> d = {0.21, 0.84};
    WeightMask mask = model.tx.mask;
    mask.transition = d;
    StopbandScan scan = stopband_scan(model.tx.fc, mask, 4);
    CHECK(eval.max_level_db(d) == doctest::Approx(scan.max_db()).epsilon(1e-9));
}

TEST_CASE("degenerate problem returns the rectangular mask unchanged") {
    DesignProblem problem;
    problem.model = small_model(0);
    problem.stopband_atten_db = 5.0;
    DesignReport rep = optimize_weights(problem);
    CHECK(rep.mask.transition.empty());
    CHECK(rep.evaluations == 1);
}

TEST_CASE("optimizer meets the stopband constraint and improves the objective") {
    DesignProblem problem;
    problem.model = small_model(2);
    problem.stopband_atten_db = 20.0;
    problem.restarts = 4;
    problem.seed = 3;
    problem.threads = 2;
    DesignReport rep = optimize_weights(problem);
    CHECK(rep.feasible);
    CHECK(rep.stopband_max_db <= -20.0 + 0.01);
    // must beat both endpoints of the search space
    EvmEvaluator eval(problem.model, 1);
    CHECK(rep.evm_max_db <= eval.evm_max_db({0.0, 0.0}) + 1e-9);
    CHECK(rep.evm_max_db >= eval.evm_avg_db(rep.mask.transition));  // max >= avg
    CHECK(rep.evm_avg_db == doctest::Approx(eval.evm_avg_db(rep.mask.transition)));
}

TEST_CASE("optimizer results are deterministic for a fixed seed") {
    DesignProblem problem;
    problem.model = small_model(2);
    problem.stopband_atten_db = 15.0;
    problem.restarts = 3;
    problem.seed = 11;
    problem.threads = 3;
    DesignReport a = optimize_weights(problem);
    DesignReport b = optimize_weights(problem);
    REQUIRE(a.mask.transition.size() == b.mask.transition.size());
    for (std::size_t i = 0; i < a.mask.transition.size(); ++i)
        CHECK(a.mask.transition[i] == b.mask.transition[i]);
    CHECK(a.evm_max_db == b.evm_max_db);
}

TEST_CASE("infeasible attenuation targets are reported, not faked") {
    DesignProblem problem;
    problem.model = small_model(1);  // one weight cannot buy 70 dB
    problem.stopband_atten_db = 70.0;
    problem.restarts = 3;
    problem.max_evals = 200;
    DesignReport rep = optimize_weights(problem);
    CHECK(!rep.feasible);
    CHECK(rep.stopband_max_db > -70.0);
}

TEST_CASE("mask files round trip bit-exactly") {
    TmuxModel model = small_model(2);
    WeightMask mask = model.tx.mask;
    mask.transition = {0.12345678901234567, 0.98765432109876543};
    const std::string path =
        (std::filesystem::temp_directory_path() / "fcofdm_mask_test.txt").string();
    save_mask(path, model.tx.fc, mask, 42, "deadbeef");
    auto [cfg, loaded] = load_mask(path);
    CHECK(cfg.long_len == model.tx.fc.long_len);
    CHECK(cfg.short_step == model.tx.fc.short_step);
    CHECK(loaded.active_bins == mask.active_bins);
    REQUIRE(loaded.transition.size() == 2);
    CHECK(loaded.transition[0] == mask.transition[0]);
    CHECK(loaded.transition[1] == mask.transition[1]);
    std::filesystem::remove(path);
}
