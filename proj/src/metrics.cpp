#include "fcofdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "fcofdm/parallel.hpp"
#include "fcofdm/transforms.hpp"

namespace fcofdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long long div_floor(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

long long div_ceil(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
    return q;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Blocks of a (block_len, step, lead) framing that touch samples [lo, hi).
void touching_range(long long lo, long long hi, std::size_t block_len, std::size_t step,
                    std::size_t lead, long long& r_lo, long long& r_hi) {
    const long long s = static_cast<long long>(step);
    const long long l = static_cast<long long>(lead);
    // block r covers [r*s - l, r*s - l + block_len)
    r_lo = div_floor(lo + l - static_cast<long long>(block_len), s) + 1;
    if (r_lo < 0) r_lo = 0;
    r_hi = div_floor(hi - 1 + l, s);
}

}  // namespace

void ChainSpec::validate(std::size_t long_len, std::size_t long_step) const {
    num.validate();
    if (filtered) {
        fc.validate();
        mask.validate();
        if (fc.long_len != long_len || fc.long_step != long_step)
            throw std::invalid_argument("ChainSpec: FC config does not share the long transform");
        if (mask.short_len != fc.short_len)
            throw std::invalid_argument("ChainSpec: mask/config length mismatch");
        if (num.active > mask.active_bins)
            throw std::invalid_argument("ChainSpec: active subcarriers exceed the mask passband");
    }
}

void TmuxModel::validate() const {
    if (long_len == 0 || long_step == 0 || long_step > long_len)
        throw std::invalid_argument("TmuxModel: bad long transform");
    tx.validate(long_len, long_step);
    rx.validate(long_len, long_step);
}

double subcarrier_long_bin(const ChainSpec& chain, std::size_t sc, std::size_t long_len) {
    const double center = chain.filtered ? static_cast<double>(chain.fc.center_bin) : 0.0;
    const double scs_bins =
        chain.filtered
            ? static_cast<double>(chain.fc.short_len) / static_cast<double>(chain.num.fft_len)
            : static_cast<double>(long_len) / static_cast<double>(chain.num.fft_len);
    return center + static_cast<double>(subcarrier_offset(chain.num, sc)) * scs_bins;
}

std::vector<std::pair<std::size_t, std::size_t>> measured_subcarriers(const TmuxModel& model) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const double n = static_cast<double>(model.long_len);
    for (std::size_t tx_sc = 0; tx_sc < model.tx.num.active; ++tx_sc) {
        const double ftx = subcarrier_long_bin(model.tx, tx_sc, model.long_len);
        for (std::size_t rx_sc = 0; rx_sc < model.rx.num.active; ++rx_sc) {
            const double frx = subcarrier_long_bin(model.rx, rx_sc, model.long_len);
            const double d = std::remainder(ftx - frx, n);
            if (std::abs(d) < 1e-9) {
                pairs.emplace_back(tx_sc, rx_sc);
                break;
            }
        }
    }
    return pairs;
}

std::vector<std::size_t> tx_alignments(const ChainSpec& tx, std::size_t long_step) {
    const std::size_t block_step = tx.filtered ? tx.fc.short_step : long_step;
    const std::size_t stride = tx.num.symbol_len() % block_step;
    const std::size_t g = stride == 0 ? block_step : std::gcd(stride, block_step);
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < block_step; a += g) out.push_back(a);
    return out;
}

TxResponse tx_subcarrier_response(std::size_t sc, const ChainSpec& tx, std::size_t long_len,
                                  std::size_t long_step, std::size_t alignment) {
    tx.validate(long_len, long_step);
    if (sc >= tx.num.active)
        throw std::invalid_argument("tx_subcarrier_response: subcarrier not active");

    OfdmNumerology num = tx.num;
    num.first_cp_extension = 0;  // single-symbol model on the uniform grid
    std::vector<cvec> qam(1, cvec(num.active, cplx(0.0, 0.0)));
    qam[0][sc] = cplx(1.0, 0.0);
    const cvec symbol = cp_ofdm_modulate(qam, num);
    const std::size_t sym_len = num.symbol_len();

    TxResponse resp;
    if (tx.filtered) {
        const FcConfig& cfg = tx.fc;
        const std::size_t I = cfg.rate_factor();
        resp.symbol_stride = I * sym_len;
        const std::size_t lead_blocks =
            ceil_div(3 * resp.symbol_stride + 2 * long_len, long_step);
        const std::size_t offset =
            (cfg.short_len - cfg.short_step) + lead_blocks * cfg.short_step + alignment;

        const std::size_t lead = lead_overlap(cfg.short_len, cfg.short_step);
        long long r_lo, r_hi;
        touching_range(static_cast<long long>(offset),
                       static_cast<long long>(offset + sym_len), cfg.short_len, cfg.short_step,
                       lead, r_lo, r_hi);
        cvec stream(static_cast<std::size_t>(r_hi + 1) * cfg.short_step, cplx(0.0, 0.0));
        std::copy(symbol.begin(), symbol.end(), stream.begin() + offset);

        SynthesisBank bank({{cfg, tx.mask}});
        resp.samples = bank.process(stream);
        resp.fft_start = I * (offset + num.cp_len);
        resp.support_begin = static_cast<std::size_t>(r_lo) * long_step;
        resp.support_end = static_cast<std::size_t>(r_hi + 1) * long_step;
    } else {
        resp.symbol_stride = sym_len;
        const std::size_t offset =
            ceil_div(3 * resp.symbol_stride + 2 * long_len, long_step) * long_step + alignment;
        resp.samples.assign(offset, cplx(0.0, 0.0));
        resp.samples.insert(resp.samples.end(), symbol.begin(), symbol.end());
        resp.fft_start = offset + num.cp_len;
        resp.support_begin = offset;
        resp.support_end = offset + sym_len;
    }
    return resp;
}

CouplingSet subcarrier_couplings(std::size_t sc, const ChainSpec& tx, const ChainSpec& rx,
                                 std::size_t long_len, std::size_t long_step) {
    return rx_couplings(tx_subcarrier_response(sc, tx, long_len, long_step), rx, long_len,
                        long_step);
}

CouplingSet rx_couplings(const TxResponse& tx_response, const ChainSpec& rx,
                         std::size_t long_len, std::size_t long_step) {
    rx.validate(long_len, long_step);
    const TxResponse& resp = tx_response;

    cvec y;
    long long m0 = 0, stride = 0, s_lo = 0, s_hi = 0;
    if (rx.filtered) {
        const FcConfig& cfg = rx.fc;
        const std::size_t down = cfg.rate_factor();
        if (resp.fft_start % down != 0 || resp.symbol_stride % down != 0)
            throw std::invalid_argument(
                "subcarrier_couplings: symbol grid does not land on the RX sample grid");
        const std::size_t lead = lead_overlap(long_len, long_step);
        long long r_lo, r_hi;
        touching_range(static_cast<long long>(resp.support_begin),
                       static_cast<long long>(resp.support_end), long_len, long_step, lead, r_lo,
                       r_hi);
        cvec input = resp.samples;
        input.resize(static_cast<std::size_t>(r_hi + 1) * long_step, cplx(0.0, 0.0));
        AnalysisBank bank({{cfg, rx.mask}});
        y = bank.process_single(input);
        m0 = static_cast<long long>(resp.fft_start / down);
        stride = static_cast<long long>(resp.symbol_stride / down);
        s_lo = r_lo * static_cast<long long>(cfg.short_step);
        s_hi = (r_hi + 1) * static_cast<long long>(cfg.short_step);
    } else {
        y = resp.samples;
        m0 = static_cast<long long>(resp.fft_start);
        stride = static_cast<long long>(resp.symbol_stride);
        s_lo = static_cast<long long>(resp.support_begin);
        s_hi = static_cast<long long>(resp.support_end);
    }

    const std::size_t fft_len = rx.num.fft_len;
    const long long k_min = div_ceil(s_lo - static_cast<long long>(fft_len) + 1 - m0, stride);
    const long long k_max = div_floor(s_hi - 1 - m0, stride);
    if (k_min > 0 || k_max < 0)
        throw std::logic_error("subcarrier_couplings: main window outside the observed span");
    if (m0 + k_min * stride < 0)
        throw std::logic_error("subcarrier_couplings: lead-in too short for the window range");

    CouplingSet out;
    out.main_index = static_cast<std::size_t>(-k_min);
    const std::size_t num_windows = static_cast<std::size_t>(k_max - k_min + 1);
    out.t.assign(rx.num.active, cvec(num_windows, cplx(0.0, 0.0)));

    cvec window(fft_len), spec(fft_len);
    for (long long k = k_min; k <= k_max; ++k) {
        const long long w0 = m0 + k * stride;
        for (std::size_t j = 0; j < fft_len; ++j) {
            const long long idx = w0 + static_cast<long long>(j);
            window[j] = (idx >= 0 && idx < static_cast<long long>(y.size())) ? y[idx]
                                                                             : cplx(0.0, 0.0);
        }
        fft(spec.data(), window.data(), fft_len, -1);
        const std::size_t s = static_cast<std::size_t>(k - k_min);
        for (std::size_t j = 0; j < rx.num.active; ++j)
            out.t[j][s] = spec[subcarrier_bin(rx.num, j)];
    }
    return out;
}

CouplingSet subcarrier_couplings(std::size_t sc, const TmuxModel& model) {
    model.validate();
    return subcarrier_couplings(sc, model.tx, model.rx, model.long_len, model.long_step);
}

CMatrix rx_subcarrier_operator(std::size_t k, const ChainSpec& rx, std::size_t long_len,
                               std::size_t long_step, std::size_t span, long long window_start,
                               std::size_t stride, std::size_t num_windows) {
    rx.validate(long_len, long_step);
    if (k >= rx.num.active) throw std::invalid_argument("rx_subcarrier_operator: bad subcarrier");
    const std::size_t fft_len = rx.num.fft_len;
    const std::size_t bin = subcarrier_bin(rx.num, k);

    CMatrix demod(num_windows, span);
    if (rx.filtered) {
        const std::size_t blocks = ceil_div(span, long_step);
        const CMatrix g = analysis_operator(rx.fc, rx.mask, blocks);
        for (std::size_t s = 0; s < num_windows; ++s) {
            for (std::size_t j = 0; j < fft_len; ++j) {
                const long long row = window_start + static_cast<long long>(s * stride + j);
                if (row < 0 || row >= static_cast<long long>(g.rows)) continue;
                const double ang =
                    -kTwoPi * static_cast<double>(bin * j % fft_len) / static_cast<double>(fft_len);
                const cplx w(std::cos(ang), std::sin(ang));
                for (std::size_t p = 0; p < span; ++p)
                    demod(s, p) += w * g(static_cast<std::size_t>(row), p);
            }
        }
    } else {
        for (std::size_t s = 0; s < num_windows; ++s) {
            for (std::size_t j = 0; j < fft_len; ++j) {
                const long long p = window_start + static_cast<long long>(s * stride + j);
                if (p < 0 || p >= static_cast<long long>(span)) continue;
                const double ang =
                    -kTwoPi * static_cast<double>(bin * j % fft_len) / static_cast<double>(fft_len);
                demod(s, static_cast<std::size_t>(p)) += cplx(std::cos(ang), std::sin(ang));
            }
        }
    }
    return demod;
}

namespace {

// RX subcarrier observing the same frequency as TX subcarrier sc.
std::size_t matched_rx_subcarrier(std::size_t sc, const TmuxModel& model) {
    const double ftx = subcarrier_long_bin(model.tx, sc, model.long_len);
    for (std::size_t j = 0; j < model.rx.num.active; ++j) {
        const double frx = subcarrier_long_bin(model.rx, j, model.long_len);
        if (std::abs(std::remainder(ftx - frx, static_cast<double>(model.long_len))) < 1e-9)
            return j;
    }
    throw std::invalid_argument("metrics: TX subcarrier is not observed by the RX allocation");
}

}  // namespace

double mse_per_subcarrier(std::size_t sc, const TmuxModel& model) {
    model.validate();
    const std::size_t own = matched_rx_subcarrier(sc, model);
    const std::vector<std::size_t> aligns = model.alignment_average
                                                ? tx_alignments(model.tx, model.long_step)
                                                : std::vector<std::size_t>{0};
    double acc = 0.0;
    for (std::size_t a : aligns) {
        const CouplingSet c = rx_couplings(
            tx_subcarrier_response(sc, model.tx, model.long_len, model.long_step, a), model.rx,
            model.long_len, model.long_step);
        double mse = 0.0;
        for (std::size_t j = 0; j < c.t.size(); ++j) {
            for (std::size_t s = 0; s < c.t[j].size(); ++s) {
                cplx v = c.t[j][s];
                if (j == own && s == c.main_index) v -= cplx(1.0, 0.0);
                mse += std::norm(v);
            }
        }
        acc += mse;
    }
    return acc / static_cast<double>(aligns.size());
}

double evm_per_subcarrier_db(std::size_t sc, const TmuxModel& model) {
    return db10(mse_per_subcarrier(sc, model));
}

std::vector<double> evm_profile_db(const TmuxModel& model, unsigned threads) {
    model.validate();
    const auto pairs = measured_subcarriers(model);
    if (pairs.empty()) throw std::invalid_argument("metrics: no overlapping subcarriers");
    std::vector<double> out(pairs.size());
    parallel_for(pairs.size(), threads,
                 [&](std::size_t i) { out[i] = evm_per_subcarrier_db(pairs[i].first, model); });
    return out;
}

std::vector<double> evm_received_profile_db(const TmuxModel& model, unsigned threads) {
    model.validate();
    const auto pairs = measured_subcarriers(model);
    if (pairs.empty()) throw std::invalid_argument("metrics: no overlapping subcarriers");
    const std::vector<std::size_t> aligns = model.alignment_average
                                                ? tx_alignments(model.tx, model.long_step)
                                                : std::vector<std::size_t>{0};

    // mse[i][r]: power landing on RX subcarrier r from TX subcarrier pairs[i]
    std::vector<std::vector<double>> mse(pairs.size(),
                                         std::vector<double>(model.rx.num.active, 0.0));
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const auto [tx_sc, own_rx] = pairs[i];
        for (std::size_t a : aligns) {
            const CouplingSet c = rx_couplings(
                tx_subcarrier_response(tx_sc, model.tx, model.long_len, model.long_step, a),
                model.rx, model.long_len, model.long_step);
            for (std::size_t r = 0; r < c.t.size(); ++r) {
                for (std::size_t s = 0; s < c.t[r].size(); ++s) {
                    cplx v = c.t[r][s];
                    if (r == own_rx && s == c.main_index) v -= cplx(1.0, 0.0);
                    mse[i][r] += std::norm(v);
                }
            }
        }
    });

    std::vector<double> per_rx(model.rx.num.active, 0.0);
    for (const auto& row : mse)
        for (std::size_t r = 0; r < row.size(); ++r) per_rx[r] += row[r];

    std::vector<double> out(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        out[i] = db10(per_rx[pairs[i].second] / static_cast<double>(aligns.size()));
    return out;
}

double evm_max_db(const TmuxModel& model) {
    const auto profile = evm_profile_db(model);
    return *std::max_element(profile.begin(), profile.end());
}

double evm_avg_db(const TmuxModel& model) {
    const auto profile = evm_profile_db(model);
    double acc = 0.0;
    for (double v : profile) acc += undb10(v);
    return db10(acc / static_cast<double>(profile.size()));
}

double sblr_db(const TmuxModel& tx_subband, const TmuxModel& rx_subband) {
    tx_subband.validate();
    rx_subband.validate();
    if (tx_subband.long_len != rx_subband.long_len ||
        tx_subband.long_step != rx_subband.long_step)
        throw std::invalid_argument("sblr: subbands must share the long transform");
    const double fm = subcarrier_long_bin(tx_subband.rx, 0, tx_subband.long_len);
    const double fn = subcarrier_long_bin(rx_subband.rx, 0, rx_subband.long_len);
    if (std::abs(std::remainder(fm - fn, static_cast<double>(tx_subband.long_len))) < 1e-9)
        throw std::invalid_argument("sblr: leakage target must be a different subband");

    const std::vector<std::size_t> aligns =
        tx_subband.alignment_average ? tx_alignments(tx_subband.tx, tx_subband.long_step)
                                     : std::vector<std::size_t>{0};
    auto total_power = [&](const ChainSpec& tx, const ChainSpec& rx) {
        std::vector<double> per_sc(tx.num.active, 0.0);
        parallel_for(tx.num.active, 0, [&](std::size_t sc) {
            double acc = 0.0;
            for (std::size_t a : aligns) {
                const CouplingSet c = rx_couplings(
                    tx_subcarrier_response(sc, tx, tx_subband.long_len, tx_subband.long_step, a),
                    rx, tx_subband.long_len, tx_subband.long_step);
                for (const cvec& row : c.t)
                    for (const cplx& v : row) acc += std::norm(v);
            }
            per_sc[sc] = acc;
        });
        double acc = 0.0;
        for (double v : per_sc) acc += v;
        return acc / static_cast<double>(aligns.size());
    };
    const double leak = total_power(tx_subband.tx, rx_subband.rx);
    const double ref = total_power(tx_subband.tx, tx_subband.rx);
    return db10(leak / ref);
}

std::vector<double> magnitude_response(const FcConfig& cfg, const WeightMask& mask,
                                       const std::vector<double>& omegas) {
    const auto responses = shift_variant_responses(cfg, mask);
    std::vector<double> out(omegas.size(), 0.0);
    for (const ImpulseResponse& r : responses) {
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            cplx acc(0.0, 0.0);
            for (std::size_t t = 0; t < r.taps.size(); ++t) {
                const double ang = -omegas[i] * static_cast<double>(t);
                acc += r.taps[t] * cplx(std::cos(ang), std::sin(ang));
            }
            out[i] += std::norm(acc);
        }
    }
    const double scale = 1.0 / static_cast<double>(responses.size());
    for (double& v : out) v *= scale;
    return out;
}

void stopband_edges(const WeightMask& mask, long long& lower_end, long long& upper_start) {
    const long long L = static_cast<long long>(mask.short_len);
    const long long tbw = static_cast<long long>(mask.transition_bins());
    const long long act = static_cast<long long>(mask.active_bins);
    const long long lead_zeros = (L - act + 1) / 2 - tbw;
    lower_end = lead_zeros - 1 - L / 2;
    upper_start = lead_zeros + 2 * tbw + act - L / 2;
}

double StopbandScan::max_db() const {
    double m = 0.0;
    for (double v : level) m = std::max(m, v);
    return db10(m);
}

StopbandScan stopband_scan(const FcConfig& cfg, const WeightMask& mask,
                           std::size_t points_per_bin) {
    const std::size_t N = cfg.long_len;
    const std::size_t nfft = points_per_bin * N;
    const auto responses = shift_variant_responses(cfg, mask);

    std::vector<double> acc(nfft, 0.0);
    cvec padded(nfft), spec(nfft);
    for (const ImpulseResponse& r : responses) {
        if (r.taps.size() > nfft)
            throw std::invalid_argument("stopband_scan: grid too coarse for the response length");
        std::fill(padded.begin(), padded.end(), cplx(0.0, 0.0));
        std::copy(r.taps.begin(), r.taps.end(), padded.begin());
        fft(spec.data(), padded.data(), nfft, -1);
        for (std::size_t g = 0; g < nfft; ++g) acc[g] += std::norm(spec[g]);
    }
    const double scale = 1.0 / static_cast<double>(responses.size());

    long long lower_end, upper_start;
    stopband_edges(mask, lower_end, upper_start);
    const long long ppb = static_cast<long long>(points_per_bin);
    const long long total = static_cast<long long>(nfft);

    StopbandScan scan;
    scan.omega.reserve(nfft / 2);
    scan.level.reserve(nfft / 2);
    for (std::size_t g = 0; g < nfft; ++g) {
        long long u = (static_cast<long long>(g) - ppb * static_cast<long long>(cfg.center_bin)) %
                      total;
        if (u <= -total / 2) u += total;
        if (u > total / 2) u -= total;
        if (u <= lower_end * ppb || u >= upper_start * ppb) {
            scan.omega.push_back(kTwoPi * static_cast<double>(g) / static_cast<double>(nfft));
            scan.level.push_back(acc[g] * scale);
        }
    }
    return scan;
}

PsdEstimate psd_estimate(const std::vector<cvec>& realizations, double rbw_hz, double fs_hz) {
    if (realizations.empty()) throw std::invalid_argument("psd_estimate: no realizations");
    const std::size_t n = realizations.front().size();
    if (n == 0) throw std::invalid_argument("psd_estimate: empty realization");
    for (const cvec& r : realizations)
        if (r.size() != n)
            throw std::invalid_argument("psd_estimate: realizations must share a length");
    if (rbw_hz <= 0.0 || fs_hz <= 0.0)
        throw std::invalid_argument("psd_estimate: bandwidths must be positive");

    std::vector<double> mean_p(n, 0.0);
    cvec spec(n);
    for (const cvec& r : realizations) {
        fft(spec.data(), r.data(), n, -1);
        for (std::size_t k = 0; k < n; ++k) mean_p[k] += std::norm(spec[k]);
    }
    const double scale =
        1.0 / (static_cast<double>(realizations.size()) * static_cast<double>(n) *
               static_cast<double>(n));
    for (double& v : mean_p) v *= scale;

    // circular moving average over the resolution bandwidth
    const double bin_hz = fs_hz / static_cast<double>(n);
    std::size_t width = static_cast<std::size_t>(std::lround(rbw_hz / bin_hz));
    if (width < 1) width = 1;
    if (width % 2 == 0) ++width;
    const std::size_t half = width / 2;
    std::vector<double> smooth(n, 0.0);
    double window_sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) window_sum += mean_p[(n - half + j) % n];
    for (std::size_t k = 0; k < n; ++k) {
        smooth[k] = window_sum / static_cast<double>(width);
        window_sum -= mean_p[(k + n - half) % n];
        window_sum += mean_p[(k + half + 1) % n];
    }

    PsdEstimate out;
    out.freq_hz.resize(n);
    out.power_db.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = (i + n / 2) % n;  // fftshift
        long long signed_bin = static_cast<long long>(k);
        if (signed_bin >= static_cast<long long>((n + 1) / 2))
            signed_bin -= static_cast<long long>(n);
        out.freq_hz[i] = static_cast<double>(signed_bin) * bin_hz;
        out.power_db[i] = db10(std::max(smooth[k], 1e-300));
    }
    return out;
}

}  // namespace fcofdm
