#include "fcofdm/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fcofdm/parallel.hpp"
#include "fcofdm/transforms.hpp"

namespace fcofdm {

namespace {

// Basis masks: index 0 is the rectangular passband (all transition weights
// zero), index i sets only transition weight i-1 to one. Responses are linear
// in the mask, so these span every reachable design.
WeightMask basis_mask(const WeightMask& shape, std::size_t index) {
    WeightMask m = shape;
    std::fill(m.transition.begin(), m.transition.end(), 0.0);
    if (index > 0) m.transition[index - 1] = 1.0;
    return m;
}

}  // namespace

EvmEvaluator::EvmEvaluator(const TmuxModel& model, unsigned threads) {
    model.validate();
    const std::size_t tbw_tx = model.tx.filtered ? model.tx.mask.transition_bins() : 0;
    const std::size_t tbw_rx = model.rx.filtered ? model.rx.mask.transition_bins() : 0;
    if (model.tx.filtered && model.rx.filtered && tbw_tx != tbw_rx)
        throw std::invalid_argument("EvmEvaluator: matched design needs equal transition sizes");
    dim_ = std::max(tbw_tx, tbw_rx);
    n_tx_ = model.tx.filtered ? tbw_tx + 1 : 1;
    n_rx_ = model.rx.filtered ? tbw_rx + 1 : 1;
    const std::size_t pairs = n_tx_ * n_rx_;

    const auto measured = measured_subcarriers(model);
    if (measured.empty()) throw std::invalid_argument("EvmEvaluator: no overlapping subcarriers");
    main_coeff_.assign(measured.size(), cvec(pairs, cplx(0.0, 0.0)));
    pair_gram_.assign(measured.size(), cvec(pairs * pairs, cplx(0.0, 0.0)));

    const std::vector<std::size_t> aligns = model.alignment_average
                                                ? tx_alignments(model.tx, model.long_step)
                                                : std::vector<std::size_t>{0};
    const double weight = 1.0 / static_cast<double>(aligns.size());

    parallel_for(measured.size(), threads, [&](std::size_t m) {
        const auto [tx_sc, rx_sc] = measured[m];
        for (std::size_t align : aligns) {
            // TX responses per basis mask, converted to the basis decomposition
            std::vector<TxResponse> tx_resp(n_tx_);
            for (std::size_t a = 0; a < n_tx_; ++a) {
                ChainSpec tx = model.tx;
                if (tx.filtered) tx.mask = basis_mask(model.tx.mask, a);
                tx_resp[a] =
                    tx_subcarrier_response(tx_sc, tx, model.long_len, model.long_step, align);
            }
            for (std::size_t a = n_tx_; a-- > 1;)
                for (std::size_t t = 0; t < tx_resp[a].samples.size(); ++t)
                    tx_resp[a].samples[t] -= tx_resp[0].samples[t];

            // couplings per (tx basis, rx basis)
            std::vector<std::vector<CouplingSet>> c(n_tx_, std::vector<CouplingSet>(n_rx_));
            for (std::size_t a = 0; a < n_tx_; ++a) {
                for (std::size_t b = 0; b < n_rx_; ++b) {
                    ChainSpec rx = model.rx;
                    if (rx.filtered) rx.mask = basis_mask(model.rx.mask, b);
                    c[a][b] = rx_couplings(tx_resp[a], rx, model.long_len, model.long_step);
                }
                for (std::size_t b = n_rx_; b-- > 1;)
                    for (std::size_t k = 0; k < c[a][b].t.size(); ++k)
                        for (std::size_t s = 0; s < c[a][b].t[k].size(); ++s)
                            c[a][b].t[k][s] -= c[a][0].t[k][s];
            }

            const std::size_t n_rx_sc = c[0][0].t.size();
            const std::size_t n_win = c[0][0].t.empty() ? 0 : c[0][0].t[0].size();
            const std::size_t main_idx = c[0][0].main_index;
            cvec u(pairs);
            for (std::size_t k = 0; k < n_rx_sc; ++k) {
                for (std::size_t s = 0; s < n_win; ++s) {
                    for (std::size_t a = 0; a < n_tx_; ++a)
                        for (std::size_t b = 0; b < n_rx_; ++b)
                            u[a * n_rx_ + b] = c[a][b].t[k][s];
                    if (k == rx_sc && s == main_idx)
                        for (std::size_t p = 0; p < pairs; ++p)
                            main_coeff_[m][p] += weight * u[p];
                    cplx* gram = pair_gram_[m].data();
                    for (std::size_t p = 0; p < pairs; ++p) {
                        const cplx up = weight * u[p];
                        for (std::size_t q = 0; q < pairs; ++q)
                            gram[p * pairs + q] += up * std::conj(u[q]);
                    }
                }
            }
        }
    });
}

std::vector<double> EvmEvaluator::pair_weights(const std::vector<double>& weights) const {
    if (weights.size() != dim_)
        throw std::invalid_argument("EvmEvaluator: weight dimension mismatch");
    std::vector<double> xa(n_tx_, 1.0), xb(n_rx_, 1.0);
    for (std::size_t i = 1; i < n_tx_; ++i) xa[i] = weights[i - 1];
    for (std::size_t i = 1; i < n_rx_; ++i) xb[i] = weights[i - 1];
    std::vector<double> x(n_tx_ * n_rx_);
    for (std::size_t a = 0; a < n_tx_; ++a)
        for (std::size_t b = 0; b < n_rx_; ++b) x[a * n_rx_ + b] = xa[a] * xb[b];
    return x;
}

std::vector<double> EvmEvaluator::mse_profile(const std::vector<double>& weights) const {
    const std::vector<double> x = pair_weights(weights);
    const std::size_t pairs = x.size();
    std::vector<double> out(main_coeff_.size());
    for (std::size_t m = 0; m < main_coeff_.size(); ++m) {
        double direct = 0.0;
        for (std::size_t p = 0; p < pairs; ++p) direct += x[p] * main_coeff_[m][p].real();
        double power = 0.0;
        const cplx* gram = pair_gram_[m].data();
        for (std::size_t p = 0; p < pairs; ++p) {
            const double xp = x[p];
            for (std::size_t q = 0; q < pairs; ++q)
                power += xp * x[q] * gram[p * pairs + q].real();
        }
        out[m] = std::max(1.0 - 2.0 * direct + power, 1e-300);
    }
    return out;
}

double EvmEvaluator::evm_max_db(const std::vector<double>& weights) const {
    const auto mse = mse_profile(weights);
    return db10(*std::max_element(mse.begin(), mse.end()));
}

double EvmEvaluator::evm_avg_db(const std::vector<double>& weights) const {
    const auto mse = mse_profile(weights);
    double acc = 0.0;
    for (double v : mse) acc += v;
    return db10(acc / static_cast<double>(mse.size()));
}

StopbandEvaluator::StopbandEvaluator(const FcConfig& cfg, const WeightMask& mask_shape,
                                     std::size_t points_per_bin) {
    dim_ = mask_shape.transition_bins();
    const std::size_t n_basis = dim_ + 1;
    const std::size_t nfft = points_per_bin * cfg.long_len;

    // basis responses on the dense grid
    std::vector<std::vector<cvec>> spectra(n_basis);  // [basis][response] -> grid
    std::size_t n_resp = 0;
    for (std::size_t a = 0; a < n_basis; ++a) {
        const auto responses = shift_variant_responses(cfg, basis_mask(mask_shape, a));
        n_resp = responses.size();
        spectra[a].resize(n_resp);
        cvec padded(nfft);
        for (std::size_t n = 0; n < n_resp; ++n) {
            if (responses[n].taps.size() > nfft)
                throw std::invalid_argument("StopbandEvaluator: grid too coarse");
            std::fill(padded.begin(), padded.end(), cplx(0.0, 0.0));
            std::copy(responses[n].taps.begin(), responses[n].taps.end(), padded.begin());
            spectra[a][n].resize(nfft);
            fft(spectra[a][n].data(), padded.data(), nfft, -1);
        }
    }
    for (std::size_t a = n_basis; a-- > 1;)
        for (std::size_t n = 0; n < n_resp; ++n)
            for (std::size_t g = 0; g < nfft; ++g) spectra[a][n][g] -= spectra[0][n][g];

    // stopband membership on the dense grid
    long long lower_end, upper_start;
    stopband_edges(mask_shape, lower_end, upper_start);
    const long long ppb = static_cast<long long>(points_per_bin);
    const long long total = static_cast<long long>(nfft);
    std::vector<std::size_t> keep;
    for (std::size_t g = 0; g < nfft; ++g) {
        long long u = (static_cast<long long>(g) - ppb * static_cast<long long>(cfg.center_bin)) %
                      total;
        if (u <= -total / 2) u += total;
        if (u > total / 2) u -= total;
        if (u <= lower_end * ppb || u >= upper_start * ppb) keep.push_back(g);
    }
    grid_points_ = keep.size();

    const double scale = 1.0 / static_cast<double>(n_resp);
    form_.assign(n_basis * (n_basis + 1) / 2, std::vector<double>(grid_points_, 0.0));
    std::size_t pair = 0;
    for (std::size_t a = 0; a < n_basis; ++a) {
        for (std::size_t b = a; b < n_basis; ++b, ++pair) {
            const double w = (a == b ? 1.0 : 2.0) * scale;
            for (std::size_t i = 0; i < grid_points_; ++i) {
                double acc = 0.0;
                for (std::size_t n = 0; n < n_resp; ++n) {
                    const cplx va = spectra[a][n][keep[i]];
                    const cplx vb = spectra[b][n][keep[i]];
                    acc += va.real() * vb.real() + va.imag() * vb.imag();
                }
                form_[pair][i] = w * acc;
            }
        }
    }
}

double StopbandEvaluator::max_level_db(const std::vector<double>& weights) const {
    if (weights.size() != dim_)
        throw std::invalid_argument("StopbandEvaluator: weight dimension mismatch");
    std::vector<double> x(dim_ + 1, 1.0);
    for (std::size_t i = 0; i < dim_; ++i) x[i + 1] = weights[i];

    double worst = 0.0;
    for (std::size_t i = 0; i < grid_points_; ++i) {
        double acc = 0.0;
        std::size_t pair = 0;
        for (std::size_t a = 0; a <= dim_; ++a)
            for (std::size_t b = a; b <= dim_; ++b, ++pair) acc += x[a] * x[b] * form_[pair][i];
        worst = std::max(worst, acc);
    }
    return db10(std::max(worst, 1e-300));
}

namespace {

struct NmResult {
    std::vector<double> point;
    double value = 0.0;
    std::size_t evaluations = 0;
};

// Plain Nelder-Mead on R^n with standard coefficients.
template <typename Fn>
NmResult nelder_mead(Fn&& f, std::vector<double> start, double initial_step, std::size_t max_evals,
                     double tol_value, double tol_size) {
    const std::size_t n = start.size();
    NmResult res;
    if (n == 0) {
        res.point = start;
        res.value = f(start);
        res.evaluations = 1;
        return res;
    }

    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += initial_step;
    std::vector<double> values(n + 1);
    std::size_t evals = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = f(simplex[i]);
        ++evals;
    }

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> sp(n + 1);
        std::vector<double> sv(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            sp[i] = simplex[idx[i]];
            sv[i] = values[idx[i]];
        }
        simplex.swap(sp);
        values.swap(sv);
    };

    while (evals < max_evals) {
        order();
        double size = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                size = std::max(size, std::abs(simplex[i][j] - simplex[0][j]));
        if (values[n] - values[0] < tol_value && size < tol_size) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / double(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + t * (simplex[n][j] - centroid[j]);
            return p;
        };

        std::vector<double> reflected = blend(-1.0);
        const double fr = f(reflected);
        ++evals;
        if (fr < values[0]) {
            std::vector<double> expanded = blend(-2.0);
            const double fe = f(expanded);
            ++evals;
            if (fe < fr) {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            const bool outside = fr < values[n];
            std::vector<double> contracted = blend(outside ? -0.5 : 0.5);
            const double fc = f(contracted);
            ++evals;
            if (fc < std::min(fr, values[n])) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    values[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
    }
    order();
    res.point = simplex[0];
    res.value = values[0];
    res.evaluations = evals;
    return res;
}

std::vector<double> clamp01(const std::vector<double>& d) {
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = std::clamp(d[i], 0.0, 1.0);
    return out;
}

std::vector<double> cosine_ramp(std::size_t tbw) {
    std::vector<double> d(tbw);
    for (std::size_t i = 0; i < tbw; ++i) {
        const double s = std::sin(std::numbers::pi * (double(i) + 0.5) / (2.0 * double(tbw)));
        d[i] = s * s;
    }
    return d;
}

}  // namespace

DesignReport optimize_weights(const DesignProblem& problem) {
    problem.model.validate();
    const ChainSpec* side = nullptr;
    if (problem.model.tx.filtered)
        side = &problem.model.tx;
    else if (problem.model.rx.filtered)
        side = &problem.model.rx;
    else
        throw std::invalid_argument("optimize_weights: no filtered side to design");

    const std::size_t tbw = side->mask.transition_bins();
    const double target_db = -problem.stopband_atten_db;

    EvmEvaluator evm(problem.model, problem.threads);
    StopbandEvaluator stop(side->fc, side->mask, problem.grid_points_per_bin);
    StopbandEvaluator verify(side->fc, side->mask, 2 * problem.grid_points_per_bin);

    DesignReport report;
    report.mask = side->mask;

    if (tbw == 0) {
        const std::vector<double> none;
        report.evm_max_db = evm.evm_max_db(none);
        report.evm_avg_db = evm.evm_avg_db(none);
        report.stopband_max_db = verify.max_level_db(none);
        report.feasible = report.stopband_max_db <= target_db + 0.01;
        report.evaluations = 1;
        return report;
    }

    auto penalized = [&](double mu, double tgt) {
        return [&, mu, tgt](const std::vector<double>& d) {
            const std::vector<double> dc = clamp01(d);
            double box = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double o = d[i] - dc[i];
                box += o * o;
            }
            return evm.evm_max_db(dc) + mu * std::max(0.0, stop.max_level_db(dc) - tgt) +
                   1e4 * box;
        };
    };

    struct Candidate {
        std::vector<double> d;
        double evm = 0.0;
        double stop_verify = 0.0;
        std::size_t evals = 0;
    };
    const std::size_t restarts = std::max<std::size_t>(problem.restarts, 1);
    std::vector<Candidate> candidates(restarts);

    parallel_for(restarts, problem.threads, [&](std::size_t r) {
        std::mt19937_64 rng(problem.seed * 7919 + r);
        std::uniform_real_distribution<double> jitter(0.55, 1.45);
        std::vector<double> start = cosine_ramp(tbw);
        if (r > 0)
            for (double& v : start) v = std::clamp(v * jitter(rng), 0.01, 0.99);

        std::size_t evals = 0;
        double mu = 100.0;
        NmResult best = nelder_mead(penalized(mu, target_db), start, 0.15, problem.max_evals,
                                    problem.objective_tol_db, problem.simplex_tol);
        evals += best.evaluations;
        while (stop.max_level_db(clamp01(best.point)) > target_db + 1e-3 && mu < 1e5) {
            mu *= 10.0;
            best = nelder_mead(penalized(mu, target_db), clamp01(best.point), 0.05,
                               problem.max_evals, problem.objective_tol_db, problem.simplex_tol);
            evals += best.evaluations;
        }

        Candidate c;
        c.d = clamp01(best.point);
        c.evm = evm.evm_max_db(c.d);
        c.stop_verify = verify.max_level_db(c.d);
        c.evals = evals;
        candidates[r] = c;
    });

    // best feasible candidate on the verification grid, then best effort
    std::size_t best_idx = 0;
    bool any_feasible = false;
    for (std::size_t r = 0; r < restarts; ++r) {
        const bool ok = candidates[r].stop_verify <= target_db + 0.01;
        const bool better =
            (ok && !any_feasible) ||
            (ok == any_feasible && candidates[r].evm < candidates[best_idx].evm - 1e-12);
        if (r == 0 || better) {
            best_idx = r;
            any_feasible = any_feasible || ok;
        }
    }
    Candidate best = candidates[best_idx];
    std::size_t total_evals = 0;
    for (const Candidate& c : candidates) total_evals += c.evals;

    // tighten against the finer grid if the dense-grid optimum overshoots
    for (int round = 0; round < 3 && best.stop_verify > target_db + 0.005; ++round) {
        const double tightened = target_db - (best.stop_verify - target_db) - 0.005;
        NmResult polished = nelder_mead(penalized(1e3, tightened), best.d, 0.02,
                                        problem.max_evals, problem.objective_tol_db,
                                        problem.simplex_tol);
        total_evals += polished.evaluations;
        Candidate c;
        c.d = clamp01(polished.point);
        c.evm = evm.evm_max_db(c.d);
        c.stop_verify = verify.max_level_db(c.d);
        if (c.stop_verify < best.stop_verify || c.evm < best.evm) best = c;
    }

    if (best.stop_verify > target_db + 0.01) {
        // feasibility phase: ignore EVM and push the stopband down
        auto level = [&](const std::vector<double>& d) {
            const std::vector<double> dc = clamp01(d);
            double box = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double o = d[i] - dc[i];
                box += o * o;
            }
            return stop.max_level_db(dc) + 1e4 * box;
        };
        NmResult fs = nelder_mead(level, std::vector<double>(tbw, 0.0), 0.2, problem.max_evals,
                                  1e-6, problem.simplex_tol);
        total_evals += fs.evaluations;
        const std::vector<double> d0 = clamp01(fs.point);
        if (verify.max_level_db(d0) <= target_db + 0.01) {
            NmResult refit = nelder_mead(penalized(1e4, target_db), d0, 0.05, problem.max_evals,
                                         problem.objective_tol_db, problem.simplex_tol);
            total_evals += refit.evaluations;
            Candidate c;
            c.d = clamp01(refit.point);
            c.evm = evm.evm_max_db(c.d);
            c.stop_verify = verify.max_level_db(c.d);
            if (c.stop_verify <= target_db + 0.01) best = c;
        }
    }

    report.mask.transition = best.d;
    report.evm_max_db = best.evm;
    report.evm_avg_db = evm.evm_avg_db(best.d);
    report.stopband_max_db = best.stop_verify;
    report.feasible = best.stop_verify <= target_db + 0.01;
    report.evaluations = total_evals;
    return report;
}

void save_mask(const std::string& path, const FcConfig& cfg, const WeightMask& mask,
               std::uint64_t seed, const std::string& run_id) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mask: cannot open " + path);
    out << "fcofdm-mask-v1\n";
    out << "long_len " << cfg.long_len << "\n";
    out << "long_step " << cfg.long_step << "\n";
    out << "short_len " << cfg.short_len << "\n";
    out << "short_step " << cfg.short_step << "\n";
    out << "center_bin " << cfg.center_bin << "\n";
    out << "active_bins " << mask.active_bins << "\n";
    out << "transition_bins " << mask.transition_bins() << "\n";
    out << "seed " << seed << "\n";
    out << "run_id " << run_id << "\n";
    out << "weights\n";
    char buf[64];
    for (double d : mask.transition) {
        std::snprintf(buf, sizeof(buf), "%.17g", d);
        out << buf << "\n";
    }
}

std::pair<FcConfig, WeightMask> load_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mask: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "fcofdm-mask-v1")
        throw std::runtime_error("load_mask: bad header in " + path);

    FcConfig cfg;
    WeightMask mask;
    std::size_t tbw = 0;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "weights") break;
        std::size_t value = 0;
        std::string svalue;
        if (key == "long_len" && (ss >> value))
            cfg.long_len = value;
        else if (key == "long_step" && (ss >> value))
            cfg.long_step = value;
        else if (key == "short_len" && (ss >> value))
            cfg.short_len = value;
        else if (key == "short_step" && (ss >> value))
            cfg.short_step = value;
        else if (key == "center_bin" && (ss >> value))
            cfg.center_bin = value;
        else if (key == "active_bins" && (ss >> value))
            mask.active_bins = value;
        else if (key == "transition_bins" && (ss >> value))
            tbw = value;
        else if (key == "seed" || key == "run_id")
            ss >> svalue;
        else
            throw std::runtime_error("load_mask: unknown field '" + key + "'");
    }
    mask.short_len = cfg.short_len;
    double w = 0.0;
    while (in >> w) mask.transition.push_back(w);
    if (mask.transition.size() != tbw)
        throw std::runtime_error("load_mask: weight count does not match header");
    cfg.validate();
    mask.validate();
    return {cfg, mask};
}

}  // namespace fcofdm
