#pragma once
// Seed derivation and randomized low-discrepancy point sets.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ssdlasso {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Mixes a base seed with an ordered list of indices. Order matters.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

// Richtmyer-style Kronecker point set (fractional parts of sqrt(prime) multiples)
// with a random shift per randomization and a baker's (tent) transform.
class ShiftedLattice {
public:
    ShiftedLattice(std::size_t dim, std::uint64_t seed);

    std::size_t dim() const noexcept { return alpha_.size(); }
    // Writes point i (1-based) into out, each coordinate in (0,1).
    void point(std::uint64_t i, double* out) const noexcept;

private:
    std::vector<double> alpha_;
    std::vector<double> shift_;
};

// First `count` primes, cached.
const std::vector<std::uint64_t>& small_primes(std::size_t count);

using Rng = std::mt19937_64;

}  // namespace ssdlasso
