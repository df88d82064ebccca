#include "fcofdm/fcfb.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fcofdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Touching block range for stream sample n: blocks r with
// r*step - lead <= n < r*step - lead + block_len.
void touching_blocks(std::size_t n, std::size_t block_len, std::size_t step, std::size_t lead,
                     long long& r_min, long long& r_max) {
    const long long u = static_cast<long long>(n) + static_cast<long long>(lead);
    const long long len = static_cast<long long>(block_len);
    const long long s = static_cast<long long>(step);
    r_max = u / s;  // u >= 0
    const long long lo = u - len;  // r_min = smallest r with r*s > lo
    if (lo < 0) {
        r_min = 0;
    } else {
        r_min = lo / s + 1;
    }
}

}  // namespace

void FcConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("FcConfig: " + what); };
    if (long_len == 0 || long_step == 0 || short_len == 0 || short_step == 0)
        fail("all lengths must be positive");
    if (long_len % 2 != 0) fail("long transform length must be even");
    if (short_len % 2 != 0) fail("short transform length must be even");
    if (long_step > long_len) fail("long_step exceeds long_len");
    if (short_step > short_len) fail("short_step exceeds short_len");
    if (long_len % short_len != 0) fail("long_len must be an integer multiple of short_len");
    if (long_len * short_step != long_step * short_len)
        fail("N/L_m != N_S/L_S,m (rate identity violated)");
    const std::size_t g = std::gcd(long_len, long_step);
    if (short_len % (long_len / g) != 0)
        fail("short_len must be a multiple of long_len/gcd(long_len,long_step)");
    if (center_bin >= long_len) fail("center_bin out of range");
}

void WeightMask::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("WeightMask: " + what); };
    if (short_len == 0 || short_len % 2 != 0) fail("short_len must be positive and even");
    if (active_bins == 0) fail("no active bins");
    if (active_bins + 2 * transition.size() > short_len)
        fail("active_bins + 2*transition_bins exceeds short_len");
    for (double d : transition)
        if (!(d >= 0.0 && d <= 1.0)) fail("transition weights must lie in [0,1]");
}

std::vector<double> WeightMask::diagonal() const {
    validate();
    const std::size_t tbw = transition.size();
    const std::size_t lead_zeros = (short_len - active_bins + 1) / 2 - tbw;
    std::vector<double> diag(short_len, 0.0);
    std::size_t pos = lead_zeros;
    for (std::size_t i = 0; i < tbw; ++i) diag[pos++] = transition[i];
    for (std::size_t i = 0; i < active_bins; ++i) diag[pos++] = 1.0;
    for (std::size_t i = 0; i < tbw; ++i) diag[pos++] = transition[tbw - 1 - i];
    return diag;
}

WeightMask WeightMask::rectangular(std::size_t short_len, std::size_t active_bins) {
    WeightMask m;
    m.short_len = short_len;
    m.active_bins = active_bins;
    return m;
}

cplx phase_rotation(std::size_t block_index, const FcConfig& cfg) {
    const std::size_t L = cfg.short_len;
    const std::size_t num = (cfg.center_bin % L) * (cfg.short_step % L) % L;
    const std::size_t a = (block_index % L) * num % L;
    const double angle = kTwoPi * static_cast<double>(a) / static_cast<double>(L);
    return {std::cos(angle), std::sin(angle)};
}

namespace {

// Reference block matrix at r = 0; blocks at r differ by the scalar rotation.
CMatrix synthesis_block_r0(const FcConfig& cfg, const WeightMask& mask) {
    cfg.validate();
    if (mask.short_len != cfg.short_len)
        throw std::invalid_argument("build_synthesis_block: mask/config length mismatch");
    const std::size_t L = cfg.short_len, N = cfg.long_len, Ns = cfg.long_step;
    const std::size_t lead = lead_overlap(N, Ns);
    const std::vector<double> diag = mask.diagonal();

    CMatrix out(Ns, L);
    cvec spec(N), time(N);
    for (std::size_t j = 0; j < L; ++j) {
        std::fill(spec.begin(), spec.end(), cplx(0.0, 0.0));
        for (std::size_t l = 0; l < L; ++l) {
            if (diag[l] == 0.0) continue;
            const std::size_t k = (l + L / 2) % L;  // DFT-shifted pickup
            const double ang = -kTwoPi * static_cast<double>(k * j % L) / static_cast<double>(L);
            const cplx w = diag[l] * cplx(std::cos(ang), std::sin(ang));
            const std::size_t bin = (cfg.center_bin + N - L / 2 + l) % N;
            spec[bin] += w;
        }
        fft(time.data(), spec.data(), N, +1);
        const double scale = 1.0 / static_cast<double>(N);
        for (std::size_t p = 0; p < Ns; ++p) out(p, j) = time[lead + p] * scale;
    }
    return out;
}

CMatrix analysis_block_r0(const FcConfig& cfg, const WeightMask& mask) {
    cfg.validate();
    if (mask.short_len != cfg.short_len)
        throw std::invalid_argument("build_analysis_block: mask/config length mismatch");
    const std::size_t L = cfg.short_len, N = cfg.long_len;
    const std::size_t Ls = cfg.short_step;
    const std::size_t lead = lead_overlap(L, Ls);
    const std::vector<double> diag = mask.diagonal();

    // Row q of the block = lead+q'th sample of idft(unshift(diag .* extract(W_N x))).
    // Build it column by column from DFT basis vectors.
    CMatrix out(Ls, N);
    cvec short_spec(L), short_time(L);
    for (std::size_t c = 0; c < N; ++c) {
        std::fill(short_spec.begin(), short_spec.end(), cplx(0.0, 0.0));
        for (std::size_t l = 0; l < L; ++l) {
            if (diag[l] == 0.0) continue;
            const std::size_t bin = (cfg.center_bin + N - L / 2 + l) % N;
            const double ang = -kTwoPi * static_cast<double>(bin * c % N) / static_cast<double>(N);
            const cplx v = diag[l] * cplx(std::cos(ang), std::sin(ang));
            short_spec[(l + L / 2) % L] += v;
        }
        fft(short_time.data(), short_spec.data(), L, +1);
        const double scale = 1.0 / static_cast<double>(L);
        for (std::size_t q = 0; q < Ls; ++q) out(q, c) = short_time[lead + q] * scale;
    }
    return out;
}

}  // namespace

CMatrix build_synthesis_block(const FcConfig& cfg, const WeightMask& mask, std::size_t block_index) {
    CMatrix m = synthesis_block_r0(cfg, mask);
    const cplx rot = phase_rotation(block_index, cfg);
    for (cplx& v : m.data) v *= rot;
    return m;
}

CMatrix build_analysis_block(const FcConfig& cfg, const WeightMask& mask, std::size_t block_index) {
    CMatrix m = analysis_block_r0(cfg, mask);
    const cplx rot = std::conj(phase_rotation(block_index, cfg));
    for (cplx& v : m.data) v *= rot;
    return m;
}

CMatrix synthesis_operator(const FcConfig& cfg, const WeightMask& mask, std::size_t num_blocks) {
    const std::size_t L = cfg.short_len, Ls = cfg.short_step, Ns = cfg.long_step;
    const std::size_t lead = lead_overlap(L, Ls);
    const CMatrix block0 = synthesis_block_r0(cfg, mask);
    CMatrix op(num_blocks * Ns, num_blocks * Ls);
    for (std::size_t r = 0; r < num_blocks; ++r) {
        const cplx rot = phase_rotation(r, cfg);
        const long long col0 = static_cast<long long>(r * Ls) - static_cast<long long>(lead);
        for (std::size_t j = 0; j < L; ++j) {
            const long long col = col0 + static_cast<long long>(j);
            if (col < 0 || col >= static_cast<long long>(op.cols)) continue;
            for (std::size_t p = 0; p < Ns; ++p) op(r * Ns + p, col) += rot * block0(p, j);
        }
    }
    return op;
}

CMatrix analysis_operator(const FcConfig& cfg, const WeightMask& mask, std::size_t num_blocks) {
    const std::size_t N = cfg.long_len, Ns = cfg.long_step, Ls = cfg.short_step;
    const std::size_t lead = lead_overlap(N, Ns);
    const CMatrix block0 = analysis_block_r0(cfg, mask);
    CMatrix op(num_blocks * Ls, num_blocks * Ns);
    for (std::size_t r = 0; r < num_blocks; ++r) {
        const cplx rot = std::conj(phase_rotation(r, cfg));
        const long long col0 = static_cast<long long>(r * Ns) - static_cast<long long>(lead);
        for (std::size_t c = 0; c < N; ++c) {
            const long long col = col0 + static_cast<long long>(c);
            if (col < 0 || col >= static_cast<long long>(op.cols)) continue;
            for (std::size_t q = 0; q < Ls; ++q) op(r * Ls + q, col) += rot * block0(q, c);
        }
    }
    return op;
}

SynthesisBank::SynthesisBank(std::vector<Subband> subbands) : subbands_(std::move(subbands)) {
    if (subbands_.empty()) throw std::invalid_argument("SynthesisBank: no subbands");
    const std::size_t N = subbands_.front().cfg.long_len;
    const std::size_t Ns = subbands_.front().cfg.long_step;
    for (const Subband& s : subbands_) {
        s.cfg.validate();
        s.mask.validate();
        if (s.mask.short_len != s.cfg.short_len)
            throw std::invalid_argument("SynthesisBank: mask/config length mismatch");
        if (s.cfg.long_len != N || s.cfg.long_step != Ns)
            throw std::invalid_argument("SynthesisBank: subbands must share the long transform");
    }
}

cvec SynthesisBank::process(const std::vector<cvec>& inputs) const {
    if (inputs.size() != subbands_.size())
        throw std::invalid_argument("SynthesisBank: input count mismatch");
    const std::size_t N = subbands_.front().cfg.long_len;
    const std::size_t Ns = subbands_.front().cfg.long_step;
    const std::size_t lead_out = lead_overlap(N, Ns);

    std::size_t num_blocks = 0;
    for (std::size_t m = 0; m < inputs.size(); ++m) {
        const std::size_t r = ceil_div(inputs[m].size(), subbands_[m].cfg.short_step);
        if (m == 0)
            num_blocks = r;
        else if (r != num_blocks)
            throw std::invalid_argument("SynthesisBank: subband streams span different block counts");
    }
    if (num_blocks == 0) return {};

    struct PerSubband {
        std::vector<double> diag;
        std::size_t first_bin, nz;  // nonzero diagonal span
        cvec block, spec;
        std::size_t lead;
    };
    std::vector<PerSubband> work(subbands_.size());
    for (std::size_t m = 0; m < subbands_.size(); ++m) {
        const FcConfig& cfg = subbands_[m].cfg;
        work[m].diag = subbands_[m].mask.diagonal();
        std::size_t first = 0, last = cfg.short_len;
        while (first < cfg.short_len && work[m].diag[first] == 0.0) ++first;
        while (last > first && work[m].diag[last - 1] == 0.0) --last;
        work[m].first_bin = first;
        work[m].nz = last - first;
        work[m].block.resize(cfg.short_len);
        work[m].spec.resize(cfg.short_len);
        work[m].lead = lead_overlap(cfg.short_len, cfg.short_step);
    }

    cvec long_spec(N), long_time(N), out(num_blocks * Ns);
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t r = 0; r < num_blocks; ++r) {
        std::fill(long_spec.begin(), long_spec.end(), cplx(0.0, 0.0));
        for (std::size_t m = 0; m < subbands_.size(); ++m) {
            const FcConfig& cfg = subbands_[m].cfg;
            PerSubband& w = work[m];
            const std::size_t L = cfg.short_len;
            const cvec& x = inputs[m];
            const long long start =
                static_cast<long long>(r * cfg.short_step) - static_cast<long long>(w.lead);
            for (std::size_t j = 0; j < L; ++j) {
                const long long idx = start + static_cast<long long>(j);
                w.block[j] = (idx >= 0 && idx < static_cast<long long>(x.size())) ? x[idx]
                                                                                  : cplx(0.0, 0.0);
            }
            fft(w.spec.data(), w.block.data(), L, -1);
            const cplx rot = phase_rotation(r, cfg);
            const std::size_t base = cfg.center_bin + N - L / 2;
            for (std::size_t l = w.first_bin; l < w.first_bin + w.nz; ++l) {
                if (w.diag[l] == 0.0) continue;
                const cplx v = w.spec[(l + L / 2) % L] * (w.diag[l] * rot);
                long_spec[(base + l) % N] += v;
            }
        }
        fft(long_time.data(), long_spec.data(), N, +1);
        for (std::size_t p = 0; p < Ns; ++p) out[r * Ns + p] = long_time[lead_out + p] * inv_n;
    }
    return out;
}

cvec SynthesisBank::process(const cvec& input) const {
    return process(std::vector<cvec>{input});
}

AnalysisBank::AnalysisBank(std::vector<Subband> subbands) : subbands_(std::move(subbands)) {
    if (subbands_.empty()) throw std::invalid_argument("AnalysisBank: no subbands");
    const std::size_t N = subbands_.front().cfg.long_len;
    const std::size_t Ns = subbands_.front().cfg.long_step;
    for (const Subband& s : subbands_) {
        s.cfg.validate();
        s.mask.validate();
        if (s.mask.short_len != s.cfg.short_len)
            throw std::invalid_argument("AnalysisBank: mask/config length mismatch");
        if (s.cfg.long_len != N || s.cfg.long_step != Ns)
            throw std::invalid_argument("AnalysisBank: subbands must share the long transform");
    }
}

std::vector<cvec> AnalysisBank::process(const cvec& input) const {
    const std::size_t N = subbands_.front().cfg.long_len;
    const std::size_t Ns = subbands_.front().cfg.long_step;
    const std::size_t lead_in = lead_overlap(N, Ns);
    const std::size_t num_blocks = ceil_div(input.size(), Ns);

    std::vector<cvec> outputs(subbands_.size());
    std::vector<std::vector<double>> diags(subbands_.size());
    for (std::size_t m = 0; m < subbands_.size(); ++m) {
        diags[m] = subbands_[m].mask.diagonal();
        outputs[m].assign(num_blocks * subbands_[m].cfg.short_step, cplx(0.0, 0.0));
    }
    if (num_blocks == 0) return outputs;

    cvec long_block(N), long_spec(N);
    for (std::size_t r = 0; r < num_blocks; ++r) {
        const long long start = static_cast<long long>(r * Ns) - static_cast<long long>(lead_in);
        for (std::size_t j = 0; j < N; ++j) {
            const long long idx = start + static_cast<long long>(j);
            long_block[j] = (idx >= 0 && idx < static_cast<long long>(input.size()))
                                ? input[idx]
                                : cplx(0.0, 0.0);
        }
        fft(long_spec.data(), long_block.data(), N, -1);
        for (std::size_t m = 0; m < subbands_.size(); ++m) {
            const FcConfig& cfg = subbands_[m].cfg;
            const std::size_t L = cfg.short_len, Ls = cfg.short_step;
            const std::size_t lead_short = lead_overlap(L, Ls);
            const std::vector<double>& diag = diags[m];
            const cplx rot = std::conj(phase_rotation(r, cfg));
            cvec short_spec(L, cplx(0.0, 0.0)), short_time(L);
            const std::size_t base = cfg.center_bin + N - L / 2;
            for (std::size_t l = 0; l < L; ++l) {
                if (diag[l] == 0.0) continue;
                short_spec[(l + L / 2) % L] = long_spec[(base + l) % N] * (diag[l] * rot);
            }
            fft(short_time.data(), short_spec.data(), L, +1);
            const double inv_l = 1.0 / static_cast<double>(L);
            for (std::size_t q = 0; q < Ls; ++q)
                outputs[m][r * Ls + q] = short_time[lead_short + q] * inv_l;
        }
    }
    return outputs;
}

cvec AnalysisBank::process_single(const cvec& input) const {
    return process(input).front();
}

std::vector<ImpulseResponse> shift_variant_responses(const FcConfig& cfg, const WeightMask& mask) {
    const std::size_t L = cfg.short_len, Ls = cfg.short_step, Ns = cfg.long_step;
    const std::size_t lead = lead_overlap(L, Ls);
    const CMatrix block0 = synthesis_block_r0(cfg, mask);

    const std::size_t base_pos = 2 * L;  // well inside steady state
    std::vector<ImpulseResponse> responses;
    responses.reserve(Ls);
    for (std::size_t j = 0; j < Ls; ++j) {
        const std::size_t n = base_pos + j;
        long long r_min, r_max;
        touching_blocks(n, L, Ls, lead, r_min, r_max);
        ImpulseResponse resp;
        resp.phase = j;
        resp.output_start = static_cast<std::size_t>(r_min) * Ns;
        resp.taps.assign(static_cast<std::size_t>(r_max - r_min + 1) * Ns, cplx(0.0, 0.0));
        for (long long r = r_min; r <= r_max; ++r) {
            const cplx rot = phase_rotation(static_cast<std::size_t>(r), cfg);
            const std::size_t p =
                n + lead - static_cast<std::size_t>(r) * Ls;  // in-block input offset
            const std::size_t row0 = static_cast<std::size_t>(r - r_min) * Ns;
            for (std::size_t q = 0; q < Ns; ++q) resp.taps[row0 + q] += rot * block0(q, p);
        }
        responses.push_back(std::move(resp));
    }
    return responses;
}

std::vector<ImpulseResponse> impulse_responses(const CMatrix& op, const FcConfig& cfg) {
    const std::size_t L = cfg.short_len, Ls = cfg.short_step, Ns = cfg.long_step;
    const std::size_t lead = lead_overlap(L, Ls);
    const std::size_t num_blocks = op.rows / Ns;
    if (num_blocks * Ls != op.cols)
        throw std::invalid_argument("impulse_responses: operator shape does not match config");
    const std::size_t base_pos = (num_blocks / 2) * Ls;
    if (base_pos + Ls > op.cols || base_pos < L)
        throw std::invalid_argument("impulse_responses: operator too small for steady state");

    std::vector<ImpulseResponse> responses;
    responses.reserve(Ls);
    for (std::size_t j = 0; j < Ls; ++j) {
        const std::size_t n = base_pos + j;
        long long r_min, r_max;
        touching_blocks(n, L, Ls, lead, r_min, r_max);
        r_max = std::min<long long>(r_max, static_cast<long long>(num_blocks) - 1);
        ImpulseResponse resp;
        resp.phase = j;
        resp.output_start = static_cast<std::size_t>(r_min) * Ns;
        const std::size_t rows = static_cast<std::size_t>(r_max - r_min + 1) * Ns;
        resp.taps.resize(rows);
        for (std::size_t q = 0; q < rows; ++q) resp.taps[q] = op(resp.output_start + q, n);
        responses.push_back(std::move(resp));
    }
    return responses;
}

}  // namespace fcofdm
