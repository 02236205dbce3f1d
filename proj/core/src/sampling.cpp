#include "quadbraid/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace quadbraid {

// splitmix64; fixed here rather than std::mt19937_64 + distribution so the
// stream does not depend on the standard library implementation.
std::uint64_t Sampler::next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Sampler::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Sampler::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

Cplx Sampler::complex_box(double re_half, double im_half) {
    const double re = uniform(-re_half, re_half);
    const double im = uniform(-im_half, im_half);
    return Cplx(re, im);
}

Lambda Sampler::lambda_box(int n, const std::function<bool(const Lambda&)>& guard, int max_tries) {
    for (int t = 0; t < max_tries; ++t) {
        Lambda l(n);
        for (int i = 0; i < n; ++i) l(i) = complex_box(1.0, 0.3);
        if (!guard || guard(l)) return l;
    }
    throw std::runtime_error("lambda sampling: guard rejected every draw");
}

Cplx Sampler::spectral(const std::function<bool(Cplx)>& guard, int max_tries) {
    for (int t = 0; t < max_tries; ++t) {
        const Cplx u = complex_box(0.8, 0.2);
        if (!guard || guard(u)) return u;
    }
    throw std::runtime_error("spectral sampling: guard rejected every draw");
}

bool sinh_guard(std::initializer_list<Cplx> args, double margin) {
    for (const Cplx& z : args)
        if (std::abs(std::sinh(z)) <= margin) return false;
    return true;
}

}  // namespace quadbraid
