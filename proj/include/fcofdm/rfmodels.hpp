#pragma once

#include <array>
#include <cstddef>

#include "fcofdm/types.hpp"

namespace fcofdm {

// Complex-envelope power at a 50-ohm reference: P = |x|^2 / (2*50) watts.
double dbm_to_amplitude(double dbm);
double amplitude_to_dbm(double amplitude);
double mean_power_dbm(const cvec& x);

// Modified Rapp model: AM-AM saturation toward v_sat plus an AM-PM term in
// radians.
struct RappPa {
    double gain = 1.0;     // small-signal gain G
    double v_sat = 239.6;  // saturation voltage at 50 ohm
    double p = 3.0;        // AM-AM smoothness
    double q = 5.0;        // AM-PM exponent
    double a = -0.14;
    double b = 1.2;

    double am_am(double amplitude) const;
    double am_pm(double amplitude) const;  // radians
    cplx apply(cplx x) const;
};
cvec rapp_apply(const cvec& x, const RappPa& pa = RappPa{});

// Order-9 polynomial handset model fitted in the dBm domain. The AM
// polynomial maps instantaneous input dBm to output dBm; the PM polynomial
// maps input dBm to added phase in degrees. Inputs outside the fitted range
// are clamped and counted.
struct PolyPa {
    double min_dbm = -30.0;
    double max_dbm = 9.0;

    static const std::array<double, 10>& am_coeffs();  // p9..p0
    static const std::array<double, 10>& pm_coeffs();  // p9..p0

    double out_dbm(double in_dbm) const;
    double pm_deg(double in_dbm) const;
};
struct PolyResult {
    cvec samples;
    std::size_t clamped = 0;  // samples outside the valid input range
};
PolyResult poly_apply(const cvec& x, const PolyPa& pa = PolyPa{});

// Input-referred 1 dB compression points found by bisection on the gain.
double rapp_p1db_input_dbm(const RappPa& pa = RappPa{});
double poly_p1db_input_dbm(const PolyPa& pa = PolyPa{});

// Scales x so its mean power sits ibo_db below the reference compression
// point.
cvec apply_ibo(const cvec& x, double ibo_db, double reference_p1db_dbm);

}  // namespace fcofdm
