#pragma once

#include <cstddef>
#include <span>

#include "jade/types.hpp"

namespace jade {

enum class FftDirection {
    /// X[k] = sum_n x[n] exp(-j 2 pi k n / L)
    Forward,
    /// X[k] = sum_n x[n] exp(+j 2 pi k n / L), unnormalized
    Backward,
};

/// Length-L complex DFT backed by an FFTW plan.
///
/// Plans are cached per thread and per (length, direction); planning itself is
/// serialized because FFTW's planner is not reentrant. Inputs shorter than L are
/// zero-padded, which is how every caller in this library uses it.
class Fft {
public:
    Fft(std::size_t length, FftDirection direction);

    std::size_t length() const { return length_; }

    /// out.size() must equal length(); in.size() <= length().
    void transform(std::span<const cd> in, std::span<cd> out) const;

    CVector operator()(const CVector& in) const;

private:
    std::size_t length_;
    FftDirection direction_;
    struct Plan;
    Plan* plan_;  // owned by the thread-local cache
};

}  // namespace jade
