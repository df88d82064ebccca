#include "fcofdm/transforms.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace fcofdm {

cvec CMatrix::apply(const cvec& x) const {
    if (x.size() != cols) throw std::invalid_argument("CMatrix::apply: size mismatch");
    cvec y(rows, cplx(0.0, 0.0));
    for (std::size_t r = 0; r < rows; ++r) {
        const cplx* row = data.data() + r * cols;
        cplx acc(0.0, 0.0);
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

double mean_power(const cvec& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const cplx& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

namespace {

// Plan cache keyed by (n, sign). Plan creation is not thread-safe in FFTW,
// execution via fftw_execute_dft on distinct buffers is. FFTW_UNALIGNED lets
// us execute on arbitrary caller buffers.
class PlanCache {
  public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        cvec dummy_in(n), dummy_out(n);
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(n), reinterpret_cast<fftw_complex*>(dummy_in.data()),
            reinterpret_cast<fftw_complex*>(dummy_out.data()),
            sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("fft: plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

void fft(cplx* out, const cplx* in, std::size_t n, int sign) {
    if (n == 0) throw std::invalid_argument("fft: empty input");
    fftw_plan plan = plan_cache().get(n, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

cvec dft(const cvec& x) {
    if (x.empty()) throw std::invalid_argument("dft: empty input");
    cvec X(x.size());
    fft(X.data(), x.data(), x.size(), -1);
    return X;
}

cvec idft(const cvec& X) {
    if (X.empty()) throw std::invalid_argument("idft: empty input");
    cvec x(X.size());
    fft(x.data(), X.data(), X.size(), +1);
    const double scale = 1.0 / static_cast<double>(X.size());
    for (cplx& v : x) v *= scale;
    return x;
}

std::size_t lead_overlap(std::size_t block_len, std::size_t step) {
    return (block_len - step + 1) / 2;
}

std::size_t tail_overlap(std::size_t block_len, std::size_t step) {
    return (block_len - step) / 2;
}

std::vector<BlockFrame> segment_stream(const cvec& x, std::size_t block_len, std::size_t step) {
    if (step == 0 || step > block_len)
        throw std::invalid_argument("segment_stream: need 0 < step <= block_len");
    const std::size_t lead = lead_overlap(block_len, step);
    const std::size_t tail = tail_overlap(block_len, step);
    const std::size_t n = x.size();
    const std::size_t num_blocks = (n + step - 1) / step;

    std::vector<BlockFrame> blocks;
    blocks.reserve(num_blocks);
    for (std::size_t r = 0; r < num_blocks; ++r) {
        BlockFrame frame;
        frame.block_index = r;
        frame.lead = lead;
        frame.tail = tail;
        frame.samples.assign(block_len, cplx(0.0, 0.0));
        // first stream sample covered by this block
        const long long start = static_cast<long long>(r * step) - static_cast<long long>(lead);
        for (std::size_t j = 0; j < block_len; ++j) {
            const long long idx = start + static_cast<long long>(j);
            if (idx >= 0 && idx < static_cast<long long>(n)) frame.samples[j] = x[idx];
        }
        blocks.push_back(std::move(frame));
    }
    return blocks;
}

cvec concat_overlap_save(const std::vector<cvec>& blocks, std::size_t step) {
    if (blocks.empty()) return {};
    const std::size_t block_len = blocks.front().size();
    if (step == 0 || step > block_len)
        throw std::invalid_argument("concat_overlap_save: need 0 < step <= block length");
    const std::size_t lead = lead_overlap(block_len, step);
    cvec out;
    out.reserve(blocks.size() * step);
    for (const cvec& b : blocks) {
        if (b.size() != block_len)
            throw std::invalid_argument("concat_overlap_save: inconsistent block lengths");
        out.insert(out.end(), b.begin() + lead, b.begin() + lead + step);
    }
    return out;
}

}  // namespace fcofdm
