#ifndef GEOPAS_SOBOL_HPP
#define GEOPAS_SOBOL_HPP

#include <cstdint>
#include <vector>

namespace geopas::sobol {

// Largest dimension covered by the embedded direction-number table.
inline constexpr int kMaxDimension = 37;

// Scrambled Sobol points in the half-open unit cube [0,1)^d.
//
// Direction numbers follow Joe & Kuo's D6 initialisers; scrambling is
// Owen-style nested scrambling, realised by hashing the digit prefix at
// every bit level with a per-dimension seed.  Nested scrambling keeps the
// elementary-interval stratification of the underlying net, which the
// probing tests rely on.
class ScrambledSobol {
  public:
    ScrambledSobol(int dimension, std::uint64_t seed);

    // point #index of the scrambled sequence (random access)
    std::vector<double> point(std::uint32_t index) const;

    std::vector<std::vector<double>> points(std::uint32_t count) const;

    int dimension() const { return dimension_; }

  private:
    int dimension_;
    std::uint64_t seed_;
    // direction_[dim][bit], 32 bits per dimension
    std::vector<std::vector<std::uint32_t>> direction_;

    std::uint32_t raw_point(std::uint32_t index, int dim) const;
    std::uint32_t owen_scramble(std::uint32_t value, int dim) const;
};

// One batch of scrambled Sobol samples, the per-call API used by probing.
std::vector<std::vector<double>> sample(std::uint32_t count, int dimension, std::uint64_t seed);

}  // namespace geopas::sobol

#endif
