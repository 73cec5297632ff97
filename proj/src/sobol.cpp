#include "geopas/sobol.hpp"

#include "geopas/common.hpp"

namespace geopas::sobol {

namespace {

constexpr int kBits = 32;

// Joe & Kuo D6 primitive polynomials and free direction integers
// (http://web.maths.unsw.edu.au/~fkuo/sobol/), dimensions 2..37.
// Row k: degree s, polynomial coefficients a, then s initial m values.
struct DimInit {
    unsigned degree;
    unsigned poly;
    unsigned m[7];
};

constexpr DimInit kJoeKuoD6[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
    {7, 50, {1, 3, 1, 3, 5, 53, 69}},
    {7, 55, {1, 1, 5, 5, 23, 33, 13}},
    {7, 56, {1, 1, 7, 7, 1, 61, 123}},
    {7, 59, {1, 1, 7, 9, 13, 61, 49}},
    {7, 62, {1, 3, 3, 5, 3, 55, 33}},
};

}  // namespace

ScrambledSobol::ScrambledSobol(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension < 1) throw input_error("sobol: dimension must be >= 1");
    if (dimension > kMaxDimension)
        throw config_error("sobol: dimension " + std::to_string(dimension) +
                           " exceeds direction-number table (max " +
                           std::to_string(kMaxDimension) + ")");

    direction_.assign(static_cast<std::size_t>(dimension),
                      std::vector<std::uint32_t>(kBits, 0));

    // first dimension: van der Corput, all m = 1
    for (int bit = 0; bit < kBits; ++bit)
        direction_[0][bit] = 1u << (31 - bit);

    for (int dim = 1; dim < dimension; ++dim) {
        const DimInit& init = kJoeKuoD6[dim - 1];
        const unsigned s = init.degree;
        auto& v = direction_[static_cast<std::size_t>(dim)];
        for (unsigned i = 0; i < s && i < kBits; ++i)
            v[i] = init.m[i] << (31 - i);
        for (unsigned i = s; i < kBits; ++i) {
            v[i] = v[i - s] ^ (v[i - s] >> s);
            for (unsigned k = 1; k < s; ++k)
                v[i] ^= ((init.poly >> (s - 1 - k)) & 1u) * v[i - k];
        }
    }
}

std::uint32_t ScrambledSobol::raw_point(std::uint32_t index, int dim) const {
    std::uint32_t result = 0;
    const auto& v = direction_[static_cast<std::size_t>(dim)];
    for (int bit = 0; index != 0; index >>= 1, ++bit)
        if (index & 1u) result ^= v[bit];
    return result;
}

std::uint32_t ScrambledSobol::owen_scramble(std::uint32_t value, int dim) const {
    // Nested scrambling: the flip decision at bit level j is a hash of the
    // digits above j, so every dyadic interval is permuted consistently.
    const std::uint64_t dim_seed =
        Rng::mix(seed_ ^ Rng::mix(static_cast<std::uint64_t>(dim) + 0x51409cf3a5b4a2a5ULL));
    for (int level = 31; level >= 0; --level) {
        const std::uint32_t prefix = (level == 31) ? 0u : (value >> (level + 1));
        const std::uint64_t h =
            Rng::mix(dim_seed ^ (static_cast<std::uint64_t>(prefix) << 6) ^
                     static_cast<std::uint64_t>(level));
        value ^= static_cast<std::uint32_t>(h & 1u) << level;
    }
    return value;
}

std::vector<double> ScrambledSobol::point(std::uint32_t index) const {
    std::vector<double> out(static_cast<std::size_t>(dimension_));
    for (int dim = 0; dim < dimension_; ++dim) {
        const std::uint32_t scrambled = owen_scramble(raw_point(index, dim), dim);
        out[static_cast<std::size_t>(dim)] = static_cast<double>(scrambled) * 0x1.0p-32;
    }
    return out;
}

std::vector<std::vector<double>> ScrambledSobol::points(std::uint32_t count) const {
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(point(i));
    return out;
}

std::vector<std::vector<double>> sample(std::uint32_t count, int dimension, std::uint64_t seed) {
    if (count < 1) throw input_error("sobol: count must be >= 1");
    return ScrambledSobol(dimension, seed).points(count);
}

}  // namespace geopas::sobol
