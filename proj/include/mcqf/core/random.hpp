#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mcqf/core/tensor.hpp"

namespace mcqf {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a parent seed and a label.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

void fill_normal(Tensor& t, double mean, double stddev, Rng& rng);
void fill_uniform(Tensor& t, double lo, double hi, Rng& rng);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace mcqf
