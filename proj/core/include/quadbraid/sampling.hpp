#pragma once

#include "quadbraid/tensor.hpp"

#include <cstdint>
#include <functional>

namespace quadbraid {

/// Seeded sample source. Draws are fully determined by the seed; the
/// uniform generator is hand-rolled on top of mt19937_64 so that streams
/// are identical across platforms and standard libraries.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    Cplx complex_box(double re_half, double im_half);

    /// Rejection sampling of lambda in ([-1,1]+i[-0.3,0.3])^n under a guard
    /// predicate (typically |sinh(denominator)| > 0.1 for every denominator
    /// of the model). Throws after max_tries rejections.
    Lambda lambda_box(int n, const std::function<bool(const Lambda&)>& guard, int max_tries = 200);

    /// Rejection sampling of a spectral parameter in a smaller box.
    Cplx spectral(const std::function<bool(Cplx)>& guard, int max_tries = 200);

private:
    std::uint64_t next_u64();
    std::uint64_t state_;
};

/// |sinh(z)| > margin for every listed argument.
bool sinh_guard(std::initializer_list<Cplx> args, double margin = 0.1);

}  // namespace quadbraid
