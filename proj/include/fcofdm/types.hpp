#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fcofdm {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

// Dense row-major complex matrix, just enough for the operator models.
struct CMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    cvec data;

    CMatrix() = default;
    CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cplx& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    cvec apply(const cvec& x) const;
};

inline double db10(double linear) { return 10.0 * std::log10(linear); }
inline double db20(double amplitude) { return 20.0 * std::log10(amplitude); }
inline double undb10(double db) { return std::pow(10.0, db / 10.0); }

double mean_power(const cvec& x);

}  // namespace fcofdm
