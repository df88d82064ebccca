#include "fcofdm/linksim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fcofdm/parallel.hpp"
#include "fcofdm/transforms.hpp"

namespace fcofdm {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::size_t bits_per_symbol(Modulation m) {
    switch (m) {
        case Modulation::qpsk: return 2;
        case Modulation::qam16: return 4;
        case Modulation::qam64: return 6;
        case Modulation::qam256: return 8;
    }
    throw std::invalid_argument("bits_per_symbol: bad modulation");
}

namespace {
cvec make_qam(std::size_t levels) {
    // unit average power square constellation
    const double scale = std::sqrt(3.0 / (2.0 * (double(levels) * levels - 1.0)));
    cvec points;
    points.reserve(levels * levels);
    for (std::size_t i = 0; i < levels; ++i)
        for (std::size_t q = 0; q < levels; ++q)
            points.emplace_back(scale * (2.0 * double(i) - double(levels) + 1.0),
                                scale * (2.0 * double(q) - double(levels) + 1.0));
    return points;
}
}  // namespace

const cvec& constellation(Modulation m) {
    static const cvec qpsk = make_qam(2);
    static const cvec qam16 = make_qam(4);
    static const cvec qam64 = make_qam(8);
    static const cvec qam256 = make_qam(16);
    switch (m) {
        case Modulation::qpsk: return qpsk;
        case Modulation::qam16: return qam16;
        case Modulation::qam64: return qam64;
        case Modulation::qam256: return qam256;
    }
    throw std::invalid_argument("constellation: bad modulation");
}

cplx nearest_point(Modulation m, cplx v) {
    const std::size_t levels = std::size_t(1) << (bits_per_symbol(m) / 2);
    const double scale = std::sqrt(3.0 / (2.0 * (double(levels) * levels - 1.0)));
    auto snap = [&](double x) {
        double idx = std::round((x / scale + double(levels) - 1.0) / 2.0);
        idx = std::clamp(idx, 0.0, double(levels - 1));
        return scale * (2.0 * idx - double(levels) + 1.0);
    };
    return {snap(v.real()), snap(v.imag())};
}

Modulation modulation_from_string(const std::string& name) {
    if (name == "qpsk") return Modulation::qpsk;
    if (name == "16qam" || name == "qam16") return Modulation::qam16;
    if (name == "64qam" || name == "qam64") return Modulation::qam64;
    if (name == "256qam" || name == "qam256") return Modulation::qam256;
    throw std::invalid_argument("unknown modulation '" + name + "'");
}

void LinkScenario::validate() const {
    if (subbands.empty()) throw std::invalid_argument("LinkScenario: no subbands");
    if (target >= subbands.size()) throw std::invalid_argument("LinkScenario: bad target index");
    if (long_step == 0 || long_step > long_len)
        throw std::invalid_argument("LinkScenario: bad long transform");
    if (symbols == 0) throw std::invalid_argument("LinkScenario: no symbols");
    for (const SubbandSignal& s : subbands) {
        s.num.validate();
        if (s.waveform == WaveformKind::fc_f_ofdm) {
            s.fc.validate();
            s.mask.validate();
            if (s.fc.long_len != long_len || s.fc.long_step != long_step)
                throw std::invalid_argument("LinkScenario: subband does not share the long FFT");
        }
    }
    const std::size_t cp = subbands[target].num.cp_len;
    if (rx_window_offset && *rx_window_offset > cp)
        throw std::invalid_argument("LinkScenario: rx window offset outside the CP");
    if (2 * warmup_symbols >= symbols)
        throw std::invalid_argument("LinkScenario: warmup consumes every symbol");
}

namespace {

struct SubbandPlan {
    std::size_t rate = 1;            // high-rate samples per low-rate sample
    std::size_t syms_per_frame = 0;  // OFDM symbols in one subframe
    std::size_t frame_low = 0;       // low-rate samples per subframe
};

struct Timeline {
    std::size_t frames = 0;
    std::size_t frame_high = 0;    // high-rate samples per subframe, no guard
    std::size_t frame_stride = 0;  // frame_high + guard
    std::vector<SubbandPlan> plans;
    std::size_t total_high = 0;
};

Timeline plan_timeline(const LinkScenario& sc) {
    Timeline tl;
    const SubbandSignal& tgt = sc.subbands[sc.target];
    const std::size_t sf_target =
        sc.symbols_per_subframe == 0 ? sc.symbols : sc.symbols_per_subframe;
    const std::size_t rate_t = tgt.rate_factor(sc.long_len);
    tl.frame_high = rate_t * (tgt.num.first_cp_extension + sf_target * tgt.num.symbol_len());
    tl.frame_stride = tl.frame_high + sc.guard_samples;
    tl.frames = (sc.symbols + sf_target - 1) / sf_target;

    tl.plans.resize(sc.subbands.size());
    for (std::size_t m = 0; m < sc.subbands.size(); ++m) {
        const SubbandSignal& s = sc.subbands[m];
        SubbandPlan& p = tl.plans[m];
        p.rate = s.rate_factor(sc.long_len);
        if (tl.frame_high % p.rate != 0)
            throw std::invalid_argument("LinkScenario: subframe does not fit the subband rate");
        p.frame_low = tl.frame_high / p.rate;
        if (p.frame_low < s.num.first_cp_extension ||
            (p.frame_low - s.num.first_cp_extension) % s.num.symbol_len() != 0)
            throw std::invalid_argument(
                "LinkScenario: subband numerology does not tile the subframe");
        p.syms_per_frame = (p.frame_low - s.num.first_cp_extension) / s.num.symbol_len();
    }
    tl.total_high = tl.frames * tl.frame_stride;
    return tl;
}

std::vector<cvec> draw_symbols(std::mt19937_64& rng, Modulation mod, std::size_t count,
                               std::size_t active) {
    const cvec& points = constellation(mod);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::vector<cvec> out(count, cvec(active));
    for (auto& sym : out)
        for (auto& v : sym) v = points[pick(rng)];
    return out;
}

cvec convolve(const cvec& x, const cvec& taps) {
    cvec y(x.size() + taps.size() - 1, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t t = 0; t < taps.size(); ++t) y[i + t] += x[i] * taps[t];
    return y;
}

double fir_gain_at(const std::vector<double>& taps, double cycles_per_sample) {
    cplx acc(0.0, 0.0);
    for (std::size_t n = 0; n < taps.size(); ++n) {
        const double ang = -kTwoPi * cycles_per_sample * double(n);
        acc += taps[n] * cplx(std::cos(ang), std::sin(ang));
    }
    return std::abs(acc);
}

struct BuiltSignal {
    cvec stream;                         // high rate from t = 0
    std::vector<std::vector<cvec>> ref;  // [subband][global symbol], pre-spread QAM
};

// Adds `seg` (starting at absolute high-rate time t0) into the stream,
// mixing it up to center_bin on the long grid with absolute-time phase.
void place_at_center(cvec& stream, const cvec& seg, long long t0, double center_bin,
                     std::size_t long_len) {
    for (std::size_t i = 0; i < seg.size(); ++i) {
        const long long t = t0 + static_cast<long long>(i);
        if (t < 0 || t >= static_cast<long long>(stream.size())) continue;
        if (center_bin == 0.0) {
            stream[t] += seg[i];
        } else {
            const double ang = kTwoPi * center_bin * double(t) / double(long_len);
            stream[t] += seg[i] * cplx(std::cos(ang), std::sin(ang));
        }
    }
}

BuiltSignal build_signal(const LinkScenario& sc, const std::vector<SubbandSignal>& subbands,
                         const Timeline& tl, std::uint64_t seed) {
    BuiltSignal built;
    built.stream.assign(tl.total_high, cplx(0.0, 0.0));
    built.ref.resize(subbands.size());

    std::vector<Subband> fc_group;
    std::vector<std::size_t> fc_index;
    std::vector<cvec> fc_low;

    for (std::size_t m = 0; m < subbands.size(); ++m) {
        const SubbandSignal& s = subbands[m];
        const SubbandPlan& p = tl.plans[m];
        std::mt19937_64 rng(seed * 1315423911u + m * 2654435761u + 17u);

        auto qam = draw_symbols(rng, s.modulation, tl.frames * p.syms_per_frame, s.num.active);
        built.ref[m] = qam;

        std::vector<cvec> mapped = qam;
        if (s.dft_spread)
            for (cvec& sym : mapped) sym = dft_spread(sym);

        std::vector<double> proto;
        if (s.waveform == WaveformKind::f_ofdm) {
            proto = f_ofdm_filter(s.num.active, s.tone_offset, s.fir_len, s.num.fft_len);
            // per-bin amplitude pre-equalization over the actives
            for (cvec& sym : mapped)
                for (std::size_t i = 0; i < s.num.active; ++i) {
                    const double f = double(subcarrier_offset(s.num, i)) / double(s.num.fft_len);
                    sym[i] /= fir_gain_at(proto, f);
                }
        }

        // modulate one subframe at a time so the extended first CP sits at
        // every subframe head
        std::vector<cvec> frames_low(tl.frames);
        for (std::size_t q = 0; q < tl.frames; ++q) {
            std::vector<cvec> frame(mapped.begin() + q * p.syms_per_frame,
                                    mapped.begin() + (q + 1) * p.syms_per_frame);
            cvec seg = (s.waveform == WaveformKind::wola) ? wola_tx(frame, s.num, s.wola)
                                                          : cp_ofdm_modulate(frame, s.num);
            seg.resize(p.frame_low, cplx(0.0, 0.0));
            frames_low[q] = std::move(seg);
        }

        if (s.waveform == WaveformKind::fc_f_ofdm) {
            cvec low;
            low.reserve(tl.frames * p.frame_low);
            for (cvec& f : frames_low) low.insert(low.end(), f.begin(), f.end());
            fc_group.push_back({s.fc, s.mask});
            fc_index.push_back(m);
            fc_low.push_back(std::move(low));
            continue;
        }

        for (std::size_t q = 0; q < tl.frames; ++q) {
            cvec seg = std::move(frames_low[q]);
            if (s.waveform == WaveformKind::f_ofdm) {
                cvec taps(proto.begin(), proto.end());
                seg = convolve(seg, taps);  // tail spills into the guard
            }
            place_at_center(built.stream, seg, static_cast<long long>(q * tl.frame_stride),
                            double(s.center_bin), sc.long_len);
        }
    }

    if (fc_group.empty()) return built;

    if (sc.guard_samples == 0) {
        // a single pass keeps the FC block grid unbroken across subframes
        SynthesisBank bank(fc_group);
        cvec high = bank.process(fc_low);
        for (std::size_t t = 0; t < std::min(high.size(), built.stream.size()); ++t)
            built.stream[t] += high[t];
        return built;
    }

    // guarded subframes: process each one with transient room and optionally
    // taper what extends past the guard with a raised-cosine edge
    SynthesisBank bank(fc_group);
    const std::size_t pad_high = 2 * sc.long_len;
    for (std::size_t q = 0; q < tl.frames; ++q) {
        std::vector<cvec> frames(fc_group.size());
        for (std::size_t i = 0; i < fc_group.size(); ++i) {
            const SubbandPlan& p = tl.plans[fc_index[i]];
            const std::size_t pad_low = pad_high / p.rate;
            frames[i].assign(pad_low, cplx(0.0, 0.0));
            frames[i].insert(frames[i].end(), fc_low[i].begin() + q * p.frame_low,
                             fc_low[i].begin() + (q + 1) * p.frame_low);
            frames[i].resize(frames[i].size() + pad_low, cplx(0.0, 0.0));
        }
        cvec high = bank.process(frames);

        const long long base = static_cast<long long>(q * tl.frame_stride) -
                               static_cast<long long>(pad_high);
        const long long lo = static_cast<long long>(q * tl.frame_stride) -
                             static_cast<long long>(sc.guard_samples);
        const long long hi = static_cast<long long>(q * tl.frame_stride + tl.frame_high +
                                                    sc.guard_samples);
        const double slope = std::max(1.0, double(sc.guard_samples) / 2.0);
        for (std::size_t t = 0; t < high.size(); ++t) {
            const long long abs_t = base + static_cast<long long>(t);
            if (abs_t < 0 || abs_t >= static_cast<long long>(built.stream.size())) continue;
            double w = 1.0;
            if (sc.rc_truncate_transients) {
                if (abs_t < lo || abs_t >= hi)
                    w = 0.0;
                else if (abs_t < lo + static_cast<long long>(slope))
                    w = 0.5 *
                        (1.0 - std::cos(std::numbers::pi * (double(abs_t - lo) + 0.5) / slope));
                else if (abs_t >= hi - static_cast<long long>(slope))
                    w = 0.5 *
                        (1.0 - std::cos(std::numbers::pi * (double(hi - abs_t) - 0.5) / slope));
            }
            built.stream[abs_t] += high[t] * w;
        }
    }
    return built;
}

cplx channel_response(const std::vector<cplx>& taps, double freq_bins, std::size_t long_len) {
    if (taps.empty()) return {1.0, 0.0};
    cplx acc(0.0, 0.0);
    for (std::size_t t = 0; t < taps.size(); ++t) {
        const double ang = -kTwoPi * freq_bins * double(t) / double(long_len);
        acc += taps[t] * cplx(std::cos(ang), std::sin(ang));
    }
    return acc;
}

cvec run_pa(cvec x, PaKind pa, double ibo_db, std::size_t* clipped, double* out_dbm) {
    if (pa == PaKind::rapp) {
        x = rapp_apply(apply_ibo(x, ibo_db, 57.6), RappPa{});
        if (out_dbm) *out_dbm = mean_power_dbm(x);
    } else if (pa == PaKind::poly) {
        PolyResult pr = poly_apply(apply_ibo(x, ibo_db, 3.4), PolyPa{});
        x = std::move(pr.samples);
        if (clipped) *clipped += pr.clamped;
        if (out_dbm) *out_dbm = mean_power_dbm(x);
    }
    return x;
}

}  // namespace

cvec apply_channel(const cvec& stream, const std::vector<cplx>& taps, std::uint64_t seed,
                   double noise_power) {
    cvec y = taps.empty() ? stream : convolve(stream, cvec(taps.begin(), taps.end()));
    y.resize(stream.size());
    if (noise_power > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, std::sqrt(noise_power / 2.0));
        for (cplx& v : y) v += cplx(g(rng), g(rng));
    }
    return y;
}

cvec asynchronous_mix(const cvec& target, const cvec& interferer, long long offset_samples,
                      double power_offset_db) {
    if (interferer.empty()) return target;
    const double pt = mean_power(target);
    const double pi = mean_power(interferer);
    if (pi <= 0.0) return target;
    const double scale = std::sqrt(pt / pi * undb10(power_offset_db));
    cvec out = target;
    for (std::size_t i = 0; i < interferer.size(); ++i) {
        const long long t = offset_samples + static_cast<long long>(i);
        if (t >= 0 && t < static_cast<long long>(out.size())) out[t] += interferer[i] * scale;
    }
    return out;
}

std::vector<cplx> exponential_channel(double rms_delay_spread, std::uint64_t seed) {
    if (rms_delay_spread <= 0.0) return {cplx(1.0, 0.0)};
    const std::size_t n = static_cast<std::size_t>(std::ceil(5.0 * rms_delay_spread)) + 1;
    auto rms_of = [&](double tau) {
        double p = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::exp(-double(i) / tau);
            p += w;
            m1 += w * double(i);
            m2 += w * double(i) * double(i);
        }
        m1 /= p;
        m2 /= p;
        return std::sqrt(std::max(0.0, m2 - m1 * m1));
    };
    double lo = 1e-3, hi = 10.0 * rms_delay_spread + 10.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rms_of(mid) < rms_delay_spread ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> taps(n);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::sqrt(std::exp(-double(i) / tau));
        taps[i] = w * cplx(g(rng), g(rng)) / std::sqrt(2.0);
        energy += std::norm(taps[i]);
    }
    const double norm = 1.0 / std::sqrt(energy);
    for (cplx& t : taps) t *= norm;
    return taps;
}

cvec transmit_stream(const LinkScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    const Timeline tl = plan_timeline(scenario);
    BuiltSignal sig = build_signal(scenario, scenario.subbands, tl, seed);
    return run_pa(std::move(sig.stream), scenario.pa, scenario.ibo_db, nullptr, nullptr);
}

LinkResult run_link(const LinkScenario& sc) {
    sc.validate();
    const Timeline tl = plan_timeline(sc);
    const SubbandSignal& tgt = sc.subbands[sc.target];
    const SubbandPlan& tplan = tl.plans[sc.target];

    BuiltSignal main_sig = build_signal(sc, sc.subbands, tl, sc.seed);

    LinkResult res;
    res.mean_pa_out_dbm = std::numeric_limits<double>::quiet_NaN();
    cvec tx = run_pa(std::move(main_sig.stream), sc.pa, sc.ibo_db, &res.pa_clipped_samples,
                     &res.mean_pa_out_dbm);

    if (sc.interferer && !sc.interferer->subbands.empty()) {
        const InterfererSpec& intf = *sc.interferer;
        // the interferer runs continuously over the same air time
        LinkScenario isc = sc;
        isc.subbands = intf.subbands;
        isc.target = 0;
        isc.symbols_per_subframe = 0;
        isc.guard_samples = 0;
        const SubbandSignal& lead = intf.subbands.front();
        const std::size_t sym_high = lead.rate_factor(sc.long_len) * lead.num.symbol_len();
        isc.symbols = std::max<std::size_t>(1, tl.total_high / sym_high);
        isc.warmup_symbols = 0;
        for (SubbandSignal& s : isc.subbands) s.num.first_cp_extension = 0;
        const Timeline itl = plan_timeline(isc);
        BuiltSignal intf_sig =
            build_signal(isc, isc.subbands, itl, sc.seed ^ 0x9e3779b97f4a7c15ull);
        cvec istream =
            run_pa(std::move(intf_sig.stream), intf.pa, intf.ibo_db, nullptr, nullptr);
        tx = asynchronous_mix(tx, istream, intf.time_offset, intf.power_offset_db);

        auto span_of = [&](const SubbandSignal& s) {
            const double scs_bins =
                double(sc.long_len) / double(s.rate_factor(sc.long_len) * s.num.fft_len);
            const double c = double(s.high_rate_center(sc.long_len));
            return std::pair<double, double>{
                c + scs_bins * double(subcarrier_offset(s.num, 0)),
                c + scs_bins * double(subcarrier_offset(s.num, s.num.active - 1))};
        };
        const auto [tlo, thi] = span_of(tgt);
        for (const SubbandSignal& s : intf.subbands) {
            const auto [ilo, ihi] = span_of(s);
            if (ilo <= thi && ihi >= tlo) res.interferer_overlaps_target = true;
        }
    }

    double noise_power = 0.0;
    if (std::isfinite(sc.snr_db)) {
        const cvec probe = sc.channel_taps.empty()
                               ? tx
                               : apply_channel(tx, sc.channel_taps, 0, 0.0);
        noise_power = mean_power(probe) * undb10(-sc.snr_db);
    }
    const cvec rx = apply_channel(tx, sc.channel_taps, sc.seed * 48271u + 11u, noise_power);

    // receiver front end for the target subband
    cvec y;
    std::size_t down = 1;
    long long rx_delay = 0;
    std::vector<double> fir_comp;
    if (tgt.waveform == WaveformKind::fc_f_ofdm) {
        AnalysisBank bank({{tgt.fc, tgt.mask}});
        y = bank.process_single(rx);
        down = tgt.fc.rate_factor();
    } else {
        y.resize(rx.size());
        for (std::size_t t = 0; t < rx.size(); ++t) {
            const double ang = -kTwoPi * double(tgt.center_bin) * double(t) / double(sc.long_len);
            y[t] = rx[t] * cplx(std::cos(ang), std::sin(ang));
        }
        if (tgt.waveform == WaveformKind::f_ofdm) {
            const auto proto =
                f_ofdm_filter(tgt.num.active, tgt.tone_offset, tgt.fir_len, tgt.num.fft_len);
            cvec matched(proto.rbegin(), proto.rend());
            y = convolve(y, matched);
            rx_delay = static_cast<long long>(tgt.fir_len) - 1;
            fir_comp.resize(tgt.num.active);
            for (std::size_t i = 0; i < tgt.num.active; ++i) {
                const double f = double(subcarrier_offset(tgt.num, i)) / double(tgt.num.fft_len);
                fir_comp[i] = fir_gain_at(proto, f);
            }
        }
    }

    const std::size_t cp = tgt.num.cp_len;
    const std::size_t offset = sc.rx_window_offset.value_or(cp);
    const std::size_t early = (tgt.waveform == WaveformKind::wola) ? 0 : cp - offset;
    const std::size_t fft_len = tgt.num.fft_len;
    const std::size_t total_syms = tl.frames * tplan.syms_per_frame;
    const double scs_bins = double(sc.long_len) / double(tplan.rate * fft_len);

    double err_pow = 0.0, ref_pow = 0.0;
    std::vector<double> err_sc(tgt.num.active, 0.0), ref_sc(tgt.num.active, 0.0);
    std::size_t sym_errors = 0, qam_count = 0, syms_measured = 0;

    // one complex scale over the whole measurement absorbs the PA/drive gain;
    // per-subcarrier droop and dispersion still count as error
    cplx scale_num(0.0, 0.0);
    double scale_den = 0.0;
    std::vector<std::pair<cvec, std::size_t>> deferred;  // symbols awaiting the scale
    cplx scale(1.0, 0.0);
    bool scale_ready = false;
    const std::size_t scale_window = 256;

    auto accumulate = [&](const cvec& got, std::size_t j) {
        const cvec& want = main_sig.ref[sc.target][j];
        for (std::size_t i = 0; i < tgt.num.active; ++i) {
            const cplx v = scale * got[i];
            const double e = std::norm(v - want[i]);
            err_pow += e;
            ref_pow += std::norm(want[i]);
            err_sc[i] += e;
            ref_sc[i] += std::norm(want[i]);
            if (std::abs(nearest_point(tgt.modulation, v) - want[i]) > 1e-9) ++sym_errors;
            ++qam_count;
            if (sc.dump_constellation) res.constellation_dump.push_back(v);
        }
        ++syms_measured;
    };

    cvec window(fft_len), spec(fft_len), symbol(tgt.num.active);
    for (std::size_t j = sc.warmup_symbols; j + sc.warmup_symbols < total_syms; ++j) {
        const std::size_t q = j / tplan.syms_per_frame;
        const std::size_t jj = j % tplan.syms_per_frame;
        const std::size_t fft_high =
            q * tl.frame_stride +
            tplan.rate * (tgt.num.first_cp_extension + jj * tgt.num.symbol_len() + cp);
        if (fft_high % down != 0)
            throw std::logic_error("run_link: window does not land on the receiver grid");
        const long long nominal = static_cast<long long>(fft_high / down) + rx_delay;
        const long long w0 = nominal - static_cast<long long>(early);

        if (tgt.waveform == WaveformKind::wola) {
            const std::size_t slope = tgt.wola.slope;
            const std::size_t win_len = fft_len + slope;
            const long long c0 = nominal - static_cast<long long>(cp) +
                                 (static_cast<long long>(cp) - static_cast<long long>(slope)) / 2;
            std::fill(window.begin(), window.end(), cplx(0.0, 0.0));
            for (std::size_t i = 0; i < win_len; ++i) {
                const long long t = c0 + static_cast<long long>(i);
                if (t < 0 || t >= static_cast<long long>(y.size())) continue;
                double w = 1.0;
                if (slope > 0) {
                    if (i < slope)
                        w = 0.5 * (1.0 - std::cos(std::numbers::pi * (double(i) + 0.5) /
                                                  double(slope)));
                    else if (i >= fft_len)
                        w = 0.5 * (1.0 - std::cos(std::numbers::pi *
                                                  (double(win_len - 1 - i) + 0.5) /
                                                  double(slope)));
                }
                const long long fold = (((t - nominal) % static_cast<long long>(fft_len)) +
                                        static_cast<long long>(fft_len)) %
                                       static_cast<long long>(fft_len);
                window[static_cast<std::size_t>(fold)] += y[t] * w;
            }
        } else {
            for (std::size_t i = 0; i < fft_len; ++i) {
                const long long t = w0 + static_cast<long long>(i);
                window[i] =
                    (t >= 0 && t < static_cast<long long>(y.size())) ? y[t] : cplx(0.0, 0.0);
            }
        }
        fft(spec.data(), window.data(), fft_len, -1);

        for (std::size_t i = 0; i < tgt.num.active; ++i) {
            const std::size_t bin = subcarrier_bin(tgt.num, i);
            cplx v = spec[bin];
            if (early > 0) {
                const double ang = kTwoPi * double(bin * early % fft_len) / double(fft_len);
                v *= cplx(std::cos(ang), std::sin(ang));
            }
            if (sc.equalize && !sc.channel_taps.empty()) {
                const double freq = double(tgt.high_rate_center(sc.long_len)) +
                                    double(subcarrier_offset(tgt.num, i)) * scs_bins;
                v /= channel_response(sc.channel_taps, freq, sc.long_len);
            }
            if (!fir_comp.empty()) v /= fir_comp[i];
            symbol[i] = v;
        }
        if (tgt.dft_spread) symbol = dft_despread(symbol);

        if (!scale_ready) {
            const cvec& want = main_sig.ref[sc.target][j];
            for (std::size_t i = 0; i < tgt.num.active; ++i) {
                scale_num += std::conj(symbol[i]) * want[i];
                scale_den += std::norm(symbol[i]);
            }
            deferred.emplace_back(symbol, j);
            if (deferred.size() >= scale_window || j + sc.warmup_symbols + 1 >= total_syms) {
                scale = (scale_den > 0.0) ? scale_num / scale_den : cplx(1.0, 0.0);
                scale_ready = true;
                for (const auto& [got, idx] : deferred) accumulate(got, idx);
                deferred.clear();
            }
            continue;
        }
        accumulate(symbol, j);
    }

    if (ref_pow <= 0.0) throw std::logic_error("run_link: no reference power measured");
    res.evm_db = db10(err_pow / ref_pow);
    res.evm_per_subcarrier_db.resize(tgt.num.active);
    for (std::size_t i = 0; i < tgt.num.active; ++i)
        res.evm_per_subcarrier_db[i] = db10(err_sc[i] / ref_sc[i]);
    res.ser = qam_count ? double(sym_errors) / double(qam_count) : 0.0;
    res.symbols_measured = syms_measured;
    res.qam_symbols_measured = qam_count;
    return res;
}

PowerSearchResult max_power_search(const LinkScenario& scenario,
                                   const PowerSearchConstraints& constraints, double ibo_min_db,
                                   double ibo_max_db) {
    if (scenario.pa == PaKind::none)
        throw std::invalid_argument("max_power_search: scenario has no PA");

    PowerSearchResult result;
    result.binding_constraint = "backoff range";
    const int steps = static_cast<int>(std::lround((ibo_max_db - ibo_min_db) / 0.1));

    // search the minimum backoff (maximum drive) meeting every constraint
    for (int k = 0; k <= steps; ++k) {
        const double ibo = ibo_min_db + 0.1 * k;
        LinkScenario sc = scenario;
        sc.ibo_db = ibo;
        const LinkResult link = run_link(sc);

        std::string failed;
        if (std::isfinite(constraints.evm_limit_percent)) {
            const double evm_percent = 100.0 * std::pow(10.0, link.evm_db / 20.0);
            if (evm_percent > constraints.evm_limit_percent) failed = "evm";
        }

        if (failed.empty() && !constraints.psd_mask.empty()) {
            std::vector<cvec> reals(constraints.realizations);
            parallel_for(constraints.realizations, 0, [&](std::size_t r) {
                LinkScenario rsc = sc;
                rsc.seed = sc.seed + 1000 + r;
                const Timeline rtl = plan_timeline(rsc);
                BuiltSignal sig = build_signal(rsc, rsc.subbands, rtl, rsc.seed);
                reals[r] = run_pa(std::move(sig.stream), rsc.pa, rsc.ibo_db, nullptr, nullptr);
            });
            const PsdEstimate psd = psd_estimate(reals, constraints.rbw_hz, scenario.fs_hz);
            const double bin_hz = scenario.fs_hz / double(psd.freq_hz.size());
            const double rbw_bins = std::max(1.0, constraints.rbw_hz / bin_hz);
            for (const MaskPoint& m : constraints.psd_mask) {
                for (std::size_t i = 0; i < psd.freq_hz.size() && failed.empty(); ++i) {
                    if (psd.freq_hz[i] < m.freq_lo_hz || psd.freq_hz[i] > m.freq_hi_hz) continue;
                    // per-bin smoothed power summed over the RBW, in dBm
                    const double dbm_per_rbw = psd.power_db[i] + db10(rbw_bins) + db10(10.0);
                    if (dbm_per_rbw > m.limit_dbm) failed = "psd_mask";
                }
                if (!failed.empty()) break;
            }
        }

        if (failed.empty()) {
            result.feasible = true;
            result.max_mean_out_dbm = link.mean_pa_out_dbm;
            result.ibo_db = ibo;
            return result;
        }
        result.binding_constraint = failed;
    }
    return result;
}

}  // namespace fcofdm
