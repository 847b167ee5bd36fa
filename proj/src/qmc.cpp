#include "ssdlasso/qmc.hpp"

#include <cmath>
#include <mutex>

namespace ssdlasso {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (auto v : path) h = splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    return h;
}

const std::vector<std::uint64_t>& small_primes(std::size_t count) {
    static std::mutex mu;
    static std::vector<std::uint64_t> primes;
    std::lock_guard lock(mu);
    std::uint64_t candidate = primes.empty() ? 2 : primes.back() + 1;
    while (primes.size() < count) {
        bool prime = true;
        for (auto p : primes) {
            if (p * p > candidate) break;
            if (candidate % p == 0) { prime = false; break; }
        }
        if (prime) primes.push_back(candidate);
        ++candidate;
    }
    return primes;
}

ShiftedLattice::ShiftedLattice(std::size_t dim, std::uint64_t seed) : alpha_(dim), shift_(dim) {
    const auto& primes = small_primes(dim);
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double s = std::sqrt(static_cast<double>(primes[j]));
        alpha_[j] = s - std::floor(s);
        shift_[j] = unif(rng);
    }
}

void ShiftedLattice::point(std::uint64_t i, double* out) const noexcept {
    const double di = static_cast<double>(i);
    for (std::size_t j = 0; j < alpha_.size(); ++j) {
        double x = std::fma(di, alpha_[j], shift_[j]);
        x -= std::floor(x);
        x = 1.0 - std::fabs(2.0 * x - 1.0);
        // keep strictly inside the cube so quantiles stay finite
        if (x <= 0.0) x = 0x1p-53;
        if (x >= 1.0) x = 1.0 - 0x1p-53;
        out[j] = x;
    }
}

}  // namespace ssdlasso
