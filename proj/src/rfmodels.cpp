#include "fcofdm/rfmodels.hpp"

#include <cmath>
#include <stdexcept>

namespace fcofdm {

double dbm_to_amplitude(double dbm) { return std::pow(10.0, (dbm - 10.0) / 20.0); }

double amplitude_to_dbm(double amplitude) { return 20.0 * std::log10(amplitude) + 10.0; }

double mean_power_dbm(const cvec& x) {
    if (x.empty()) throw std::invalid_argument("mean_power_dbm: empty signal");
    return 10.0 * std::log10(mean_power(x) * 10.0);
}

double RappPa::am_am(double amplitude) const {
    const double u = gain * amplitude / v_sat;
    return gain * amplitude / std::pow(1.0 + std::pow(std::abs(u), 2.0 * p), 1.0 / (2.0 * p));
}

double RappPa::am_pm(double amplitude) const {
    const double u = std::abs(gain * amplitude / v_sat);
    const double w = std::abs(gain * amplitude / (b * v_sat));
    return a * std::pow(u, q) / (1.0 + std::pow(w, q));
}

cplx RappPa::apply(cplx x) const {
    const double r = std::abs(x);
    if (r == 0.0) return x;
    const double mag = am_am(r);
    const double phase = std::arg(x) + am_pm(r);
    return {mag * std::cos(phase), mag * std::sin(phase)};
}

cvec rapp_apply(const cvec& x, const RappPa& pa) {
    cvec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = pa.apply(x[i]);
    return y;
}

const std::array<double, 10>& PolyPa::am_coeffs() {
    static const std::array<double, 10> c = {
        7.9726e-12, 1.2771e-9,  8.2526e-8,  2.6615e-6, 3.9727e-5,
        2.7715e-5,  -7.1100e-3, -7.9183e-2, 8.2921e-1, 27.3535};
    return c;
}

const std::array<double, 10>& PolyPa::pm_coeffs() {
    static const std::array<double, 10> c = {
        9.8591e-11, 1.3544e-8,  7.2970e-7,  1.8757e-5,  1.9730e-4,
        -7.5352e-4, -3.6477e-2, -2.7752e-1, -1.6672e-2, 79.1553};
    return c;
}

namespace {
double polyval(const std::array<double, 10>& c, double x) {
    double acc = 0.0;
    for (double v : c) acc = acc * x + v;
    return acc;
}
}  // namespace

double PolyPa::out_dbm(double in_dbm) const { return polyval(am_coeffs(), in_dbm); }

double PolyPa::pm_deg(double in_dbm) const { return polyval(pm_coeffs(), in_dbm); }

PolyResult poly_apply(const cvec& x, const PolyPa& pa) {
    PolyResult res;
    res.samples.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::abs(x[i]);
        if (r == 0.0) {
            res.samples[i] = cplx(0.0, 0.0);
            continue;
        }
        double in_dbm = amplitude_to_dbm(r);
        if (in_dbm < pa.min_dbm || in_dbm > pa.max_dbm) {
            in_dbm = std::clamp(in_dbm, pa.min_dbm, pa.max_dbm);
            ++res.clamped;
        }
        const double mag = dbm_to_amplitude(pa.out_dbm(in_dbm));
        const double phase = std::arg(x[i]) + pa.pm_deg(in_dbm) * std::numbers::pi / 180.0;
        res.samples[i] = cplx(mag * std::cos(phase), mag * std::sin(phase));
    }
    return res;
}

double rapp_p1db_input_dbm(const RappPa& pa) {
    // gain drop of exactly 1 dB: (1 + u^{2p})^{1/(2p)} = 10^{1/20}
    auto drop_db = [&](double amp) {
        return 20.0 * std::log10(pa.gain * amp / pa.am_am(amp));
    };
    double lo = pa.v_sat * 1e-4, hi = pa.v_sat * 1e2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (drop_db(mid) < 1.0 ? lo : hi) = mid;
    }
    return amplitude_to_dbm(0.5 * (lo + hi));
}

double poly_p1db_input_dbm(const PolyPa& pa) {
    // small-signal reference: the fitted gain at the bottom of the valid
    // range (the curve wiggles mid-range, so a max would overshoot)
    const double ref_gain = pa.out_dbm(pa.min_dbm) - pa.min_dbm;
    // gain is monotone decreasing in the compressive region above 0 dBm
    double lo = 0.0, hi = pa.max_dbm;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((pa.out_dbm(mid) - mid) > ref_gain - 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

cvec apply_ibo(const cvec& x, double ibo_db, double reference_p1db_dbm) {
    if (x.empty()) throw std::invalid_argument("apply_ibo: empty signal");
    const double target_dbm = reference_p1db_dbm - ibo_db;
    const double scale = std::pow(10.0, (target_dbm - mean_power_dbm(x)) / 20.0);
    cvec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * scale;
    return y;
}

}  // namespace fcofdm
