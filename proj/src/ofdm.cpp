#include "fcofdm/ofdm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fcofdm/transforms.hpp"

namespace fcofdm {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double rc_rise(std::size_t i, std::size_t slope) {
    return 0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(slope)));
}
}  // namespace

void OfdmNumerology::validate() const {
    if (fft_len == 0) throw std::invalid_argument("OfdmNumerology: fft_len must be positive");
    if (active == 0) throw std::invalid_argument("OfdmNumerology: no active subcarriers");
    if (active > fft_len - 1)
        throw std::invalid_argument("OfdmNumerology: allocation exceeds fft_len - 1");
    if (scs_exponent < 0 || scs_exponent > 8)
        throw std::invalid_argument("OfdmNumerology: scs_exponent out of range");
}

long long subcarrier_offset(const OfdmNumerology& num, std::size_t sc) {
    return static_cast<long long>(sc) - static_cast<long long>(num.active / 2);
}

std::size_t subcarrier_bin(const OfdmNumerology& num, std::size_t sc) {
    const long long off = subcarrier_offset(num, sc);
    const long long n = static_cast<long long>(num.fft_len);
    return static_cast<std::size_t>(((off % n) + n) % n);
}

std::size_t symbol_start(const OfdmNumerology& num, std::size_t k) {
    return k * num.symbol_len() + (k > 0 ? num.first_cp_extension : 0);
}

std::size_t fft_window_start(const OfdmNumerology& num, std::size_t k) {
    return symbol_start(num, k) + num.cp_len + (k == 0 ? num.first_cp_extension : 0);
}

cvec cp_ofdm_modulate(const std::vector<cvec>& qam, const OfdmNumerology& num) {
    num.validate();
    cvec out;
    out.reserve(qam.size() * num.symbol_len() + num.first_cp_extension);
    cvec freq(num.fft_len);
    for (std::size_t k = 0; k < qam.size(); ++k) {
        if (qam[k].size() != num.active)
            throw std::invalid_argument("cp_ofdm_modulate: symbol size != active subcarriers");
        std::fill(freq.begin(), freq.end(), cplx(0.0, 0.0));
        for (std::size_t sc = 0; sc < num.active; ++sc) freq[subcarrier_bin(num, sc)] = qam[k][sc];
        cvec body = idft(freq);
        const std::size_t cp = num.cp_len + (k == 0 ? num.first_cp_extension : 0);
        out.insert(out.end(), body.end() - cp, body.end());
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

std::vector<cvec> cp_ofdm_demodulate(const cvec& stream, const OfdmNumerology& num,
                                     std::size_t window_offset, std::size_t num_symbols) {
    num.validate();
    if (window_offset > num.cp_len)
        throw std::invalid_argument("cp_ofdm_demodulate: window offset outside the CP");
    const std::size_t early = num.cp_len - window_offset;

    std::vector<cvec> out(num_symbols);
    cvec window(num.fft_len), spec(num.fft_len);
    for (std::size_t k = 0; k < num_symbols; ++k) {
        const long long start =
            static_cast<long long>(fft_window_start(num, k)) - static_cast<long long>(early);
        for (std::size_t j = 0; j < num.fft_len; ++j) {
            const long long idx = start + static_cast<long long>(j);
            window[j] = (idx >= 0 && idx < static_cast<long long>(stream.size()))
                            ? stream[idx]
                            : cplx(0.0, 0.0);
        }
        fft(spec.data(), window.data(), num.fft_len, -1);
        out[k].resize(num.active);
        for (std::size_t sc = 0; sc < num.active; ++sc) {
            const std::size_t bin = subcarrier_bin(num, sc);
            const double ang = kTwoPi * static_cast<double>(bin * early % num.fft_len) /
                               static_cast<double>(num.fft_len);
            out[k][sc] = spec[bin] * cplx(std::cos(ang), std::sin(ang));
        }
    }
    return out;
}

cvec dft_spread(const cvec& block) {
    cvec X = dft(block);
    const double s = 1.0 / std::sqrt(static_cast<double>(block.size()));
    for (cplx& v : X) v *= s;
    return X;
}

cvec dft_despread(const cvec& freq) {
    cvec x = idft(freq);
    const double s = std::sqrt(static_cast<double>(freq.size()));
    for (cplx& v : x) v *= s;
    return x;
}

cvec wola_tx(const std::vector<cvec>& qam, const OfdmNumerology& num, const WolaParams& p) {
    if (p.slope == 0) return cp_ofdm_modulate(qam, num);
    num.validate();

    const std::size_t total =
        qam.empty() ? 0 : symbol_start(num, qam.size() - 1) + num.symbol_len() +
                              (qam.size() == 1 ? num.first_cp_extension : 0);
    cvec out(total, cplx(0.0, 0.0));

    cvec freq(num.fft_len);
    for (std::size_t k = 0; k < qam.size(); ++k) {
        if (qam[k].size() != num.active)
            throw std::invalid_argument("wola_tx: symbol size != active subcarriers");
        std::fill(freq.begin(), freq.end(), cplx(0.0, 0.0));
        for (std::size_t sc = 0; sc < num.active; ++sc) freq[subcarrier_bin(num, sc)] = qam[k][sc];
        const cvec body = idft(freq);

        const std::size_t cp = num.cp_len + (k == 0 ? num.first_cp_extension : 0);
        const std::size_t sym_len = num.fft_len + cp;
        const std::size_t win_len = sym_len + p.slope;
        const long long t0 = static_cast<long long>(symbol_start(num, k)) -
                             static_cast<long long>(p.slope);
        for (std::size_t i = 0; i < win_len; ++i) {
            const long long t = t0 + static_cast<long long>(i);
            if (t < 0 || t >= static_cast<long long>(out.size())) continue;
            // cyclic extension: sample i sits (cp + slope - i) before the body start
            const long long body_idx =
                static_cast<long long>(i) - static_cast<long long>(p.slope + cp);
            const std::size_t n = num.fft_len;
            const cplx s = body[static_cast<std::size_t>(((body_idx % static_cast<long long>(n)) +
                                                          static_cast<long long>(n)) %
                                                         static_cast<long long>(n))];
            double w = 1.0;
            if (i < p.slope)
                w = rc_rise(i, p.slope);
            else if (i >= sym_len)
                w = rc_rise(win_len - 1 - i, p.slope);
            out[t] += s * w;
        }
    }
    return out;
}

std::vector<cvec> wola_rx(const cvec& stream, const OfdmNumerology& num, const WolaParams& p,
                          std::size_t num_symbols) {
    num.validate();
    const std::size_t win_len = num.fft_len + p.slope;

    std::vector<cvec> out(num_symbols);
    cvec folded(num.fft_len), spec(num.fft_len);
    for (std::size_t k = 0; k < num_symbols; ++k) {
        const std::size_t sym_len = num.symbol_len() + (k == 0 ? num.first_cp_extension : 0);
        const long long nfs = static_cast<long long>(fft_window_start(num, k));
        const long long c0 = static_cast<long long>(symbol_start(num, k)) +
                             (static_cast<long long>(sym_len) - static_cast<long long>(win_len)) / 2;
        std::fill(folded.begin(), folded.end(), cplx(0.0, 0.0));
        for (std::size_t i = 0; i < win_len; ++i) {
            const long long t = c0 + static_cast<long long>(i);
            if (t < 0 || t >= static_cast<long long>(stream.size())) continue;
            double w = 1.0;
            if (p.slope > 0) {
                if (i < p.slope)
                    w = rc_rise(i, p.slope);
                else if (i >= num.fft_len)
                    w = rc_rise(win_len - 1 - i, p.slope);
            }
            const long long fold = (((t - nfs) % static_cast<long long>(num.fft_len)) +
                                    static_cast<long long>(num.fft_len)) %
                                   static_cast<long long>(num.fft_len);
            folded[static_cast<std::size_t>(fold)] += stream[t] * w;
        }
        fft(spec.data(), folded.data(), num.fft_len, -1);
        out[k].resize(num.active);
        for (std::size_t sc = 0; sc < num.active; ++sc) out[k][sc] = spec[subcarrier_bin(num, sc)];
    }
    return out;
}

std::vector<double> f_ofdm_filter(std::size_t allocation_bins, std::size_t tone_offset,
                                  std::size_t fir_len, std::size_t fft_len) {
    if (fir_len < 2 || fft_len == 0 || allocation_bins == 0)
        throw std::invalid_argument("f_ofdm_filter: bad parameters");
    const double cutoff = 0.5 * static_cast<double>(allocation_bins + tone_offset) /
                          static_cast<double>(fft_len);
    const double mid = 0.5 * static_cast<double>(fir_len - 1);
    std::vector<double> h(fir_len);
    double sum = 0.0;
    for (std::size_t n = 0; n < fir_len; ++n) {
        const double x = static_cast<double>(n) - mid;
        const double hann =
            0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(n) / static_cast<double>(fir_len - 1)));
        const double s = (x == 0.0) ? 2.0 * cutoff : std::sin(kTwoPi * cutoff * x) / (kPi * x);
        h[n] = hann * s;
        sum += h[n];
    }
    for (double& v : h) v /= sum;
    return h;
}

namespace {
double cheb_poly(std::size_t order, double x) {
    if (x > 1.0) return std::cosh(static_cast<double>(order) * std::acosh(x));
    if (x < -1.0) {
        const double v = std::cosh(static_cast<double>(order) * std::acosh(-x));
        return (order % 2 == 0) ? v : -v;
    }
    return std::cos(static_cast<double>(order) * std::acos(x));
}
}  // namespace

std::vector<double> uf_ofdm_filter(double stopband_atten_db, std::size_t fir_len) {
    if (fir_len < 3) throw std::invalid_argument("uf_ofdm_filter: fir_len too small");
    if (stopband_atten_db <= 0.0)
        throw std::invalid_argument("uf_ofdm_filter: attenuation must be positive dB");
    const std::size_t n = fir_len;
    const std::size_t order = n - 1;
    const double ripple = std::pow(10.0, stopband_atten_db / 20.0);
    const double beta = std::cosh(std::acosh(ripple) / static_cast<double>(order));

    const double mid = 0.5 * static_cast<double>(n - 1);
    std::vector<double> w(n, 0.0);
    // frequency samples of the Chebyshev spectrum, inverted with the
    // half-sample shift folded into the cosine
    std::vector<double> spec(n);
    for (std::size_t k = 0; k < n; ++k)
        spec[k] = cheb_poly(order, beta * std::cos(kPi * static_cast<double>(k) /
                                                   static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        double acc = spec[0];
        for (std::size_t k = 1; k <= (n - 1) / 2; ++k) {
            acc += 2.0 * spec[k] *
                   std::cos(kTwoPi * static_cast<double>(k) * (static_cast<double>(i) - mid) /
                            static_cast<double>(n));
        }
        w[i] = acc;
    }
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return w;
}

cvec modulate_taps(const std::vector<double>& taps, double center_bin, std::size_t fft_len) {
    cvec out(taps.size());
    for (std::size_t n = 0; n < taps.size(); ++n) {
        const double ang = kTwoPi * center_bin * static_cast<double>(n) /
                           static_cast<double>(fft_len);
        out[n] = taps[n] * cplx(std::cos(ang), std::sin(ang));
    }
    return out;
}

}  // namespace fcofdm
