#include "jade/fft.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <fftw3.h>

namespace jade {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct Fft::Plan {
    Plan(std::size_t n, FftDirection dir) : length(n) {
        in = fftw_alloc_complex(n);
        out = fftw_alloc_complex(n);
        if (in == nullptr || out == nullptr) {
            throw std::bad_alloc();
        }
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), in, out,
                                dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
        if (plan == nullptr) {
            throw std::runtime_error("fftw planning failed");
        }
    }
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    std::size_t length;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
};

Fft::Fft(std::size_t length, FftDirection direction) : length_(length), direction_(direction) {
    if (length == 0) {
        throw std::invalid_argument("FFT length must be positive");
    }
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
    auto key = std::make_pair(length, static_cast<int>(direction));
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, std::make_unique<Plan>(length, direction)).first;
    }
    plan_ = it->second.get();
}

void Fft::transform(std::span<const cd> in, std::span<cd> out) const {
    if (in.size() > length_ || out.size() != length_) {
        throw std::invalid_argument("FFT buffer size mismatch");
    }
    auto* buf_in = reinterpret_cast<cd*>(plan_->in);
    std::copy(in.begin(), in.end(), buf_in);
    std::fill(buf_in + in.size(), buf_in + length_, cd{0.0, 0.0});
    fftw_execute(plan_->plan);
    const auto* buf_out = reinterpret_cast<const cd*>(plan_->out);
    std::copy(buf_out, buf_out + length_, out.begin());
}

CVector Fft::operator()(const CVector& in) const {
    CVector out(static_cast<Eigen::Index>(length_));
    transform(std::span<const cd>(in.data(), static_cast<std::size_t>(in.size())),
              std::span<cd>(out.data(), length_));
    return out;
}

}  // namespace jade
