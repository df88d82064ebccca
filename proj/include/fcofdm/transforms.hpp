#pragma once

#include <cstddef>
#include <vector>

#include "fcofdm/types.hpp"

namespace fcofdm {

// Unnormalized forward DFT, X[k] = sum_n x[n] e^{-i2πkn/n}. Throws on empty input.
cvec dft(const cvec& x);

// Inverse with the 1/n factor, so idft(dft(x)) == x.
cvec idft(const cvec& X);

// Out-of-place transform without any scaling; sign = -1 forward, +1 inverse.
// in and out must not alias and both hold n samples. Thread-safe.
void fft(cplx* out, const cplx* in, std::size_t n, int sign);

// One overlap-save frame of a segmented stream.
struct BlockFrame {
    std::size_t block_index = 0;  // r
    cvec samples;                 // length L
    std::size_t lead = 0;         // L_L
    std::size_t tail = 0;         // L_T
};

// Overlap split of the L - L_S overlapping samples.
std::size_t lead_overlap(std::size_t block_len, std::size_t step);  // ceil((L-L_S)/2)
std::size_t tail_overlap(std::size_t block_len, std::size_t step);  // floor((L-L_S)/2)

// Segments x into ceil(n/step) overlapping blocks of length block_len.
// Block r covers stream samples [r*step - L_L, r*step - L_L + L); samples
// outside the stream read as zero.
std::vector<BlockFrame> segment_stream(const cvec& x, std::size_t block_len, std::size_t step);

// Emits the central `step` samples of each length-N processed block in order.
cvec concat_overlap_save(const std::vector<cvec>& blocks, std::size_t step);

}  // namespace fcofdm
