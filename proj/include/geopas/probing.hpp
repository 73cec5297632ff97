#ifndef GEOPAS_PROBING_HPP
#define GEOPAS_PROBING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"

namespace geopas::probing {

// objective over physical coordinates; probing only ever calls this
using Objective = std::function<double(const std::vector<double>&)>;

inline constexpr double kScaleMin = 0.02;
inline constexpr double kScaleMax = 0.7;

// An oriented square slice of the normalised cube: centre in [0,1]^d,
// a d x 2 frame with orthonormal columns, and a relative side length.
struct SliceParams {
    std::vector<double> centre;
    std::vector<double> frame;  // d x 2, row-major
    double scale = 0.0;
};

struct Slice {
    int resolution = 0;
    std::vector<double> values;  // r x r, row-major, in [0,1]; invalid cells 0.5
    std::vector<std::uint8_t> mask;  // r x r, 1 = pre-clip point inside the unit cube
    double scale = 0.0;
    double value_range = 0.0;  // max - min of valid raw values
    double value_iqr = 0.0;    // IQR of valid raw values

    bool operator==(const Slice&) const = default;
};

struct Provenance {
    int function_id = 0;
    int dimension = 0;
    int instance_id = 0;
    int repetition = 0;

    bool operator==(const Provenance&) const = default;
};

struct SliceSet {
    int dimension = 0;
    int resolution = 0;
    Provenance provenance;
    std::vector<Slice> slices;

    bool operator==(const SliceSet&) const = default;
};

// count low-discrepancy slice centres in [0,1)^d
std::vector<std::vector<double>> sample_centres(int count, int dimension, std::uint64_t seed);

// Haar-distributed d x 2 orthonormal frame (modified Gram-Schmidt on a
// Gaussian draw, redrawn on a degenerate intermediate norm)
std::vector<double> sample_orientation(int dimension, Rng& rng);

// log-uniform side length in [kScaleMin, kScaleMax]
double sample_scale(Rng& rng);

struct RasterResult {
    std::vector<double> raw;
    std::vector<std::uint8_t> mask;
};

// Evaluate the objective on the r x r grid of the slice.  Grid points use
// u_a = -1/2 + a/(r-1), endpoints included.  Points leaving the unit cube
// are masked, then clipped coordinatewise before the physical map.
RasterResult rasterize_slice(const Objective& objective, const bbob::Bounds& bounds,
                             const SliceParams& params, int resolution);

struct NormalizeResult {
    std::vector<double> values;
    double value_range = 0.0;
    double value_iqr = 0.0;
};

// Min-max normalisation over valid cells only; invalid cells and
// zero-range slices sit at the neutral value 0.5.
NormalizeResult normalize_slice(const std::vector<double>& raw,
                                const std::vector<std::uint8_t>& mask);

// k independent slices; centres come from one Sobol stream, orientations and
// scales from a per-slice split of a second stream.  Performs exactly
// k * r^2 objective evaluations.
SliceSet build_probe_set(const Objective& objective, const bbob::Bounds& bounds, int dimension,
                         int slice_count, int resolution, std::uint64_t seed);

SliceSet build_probe_set(const bbob::ProblemInstance& instance, int slice_count, int resolution,
                         std::uint64_t seed);

// binary container, bit-exact round trip
std::vector<std::uint8_t> serialize_slice_set(const SliceSet& set);
SliceSet deserialize_slice_set(const std::vector<std::uint8_t>& bytes);
void save_slice_set(const SliceSet& set, const std::string& path);
SliceSet load_slice_set(const std::string& path);

}  // namespace geopas::probing

#endif
