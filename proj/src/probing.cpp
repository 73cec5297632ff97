#include "geopas/probing.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "geopas/sobol.hpp"

namespace geopas::probing {

std::vector<std::vector<double>> sample_centres(int count, int dimension, std::uint64_t seed) {
    if (count < 1) throw input_error("sample_centres: count must be >= 1");
    if (dimension < 1) throw input_error("sample_centres: dimension must be >= 1");
    return sobol::sample(static_cast<std::uint32_t>(count), dimension, seed);
}

std::vector<double> sample_orientation(int dimension, Rng& rng) {
    if (dimension < 2) throw input_error("sample_orientation: dimension must be >= 2");
    const auto d = static_cast<std::size_t>(dimension);
    std::vector<double> frame(d * 2);
    while (true) {
        for (auto& v : frame) v = rng.next_gaussian();
        // first column
        double n0 = 0.0;
        for (std::size_t i = 0; i < d; ++i) n0 += frame[i * 2] * frame[i * 2];
        n0 = std::sqrt(n0);
        if (n0 < 1e-12) continue;
        for (std::size_t i = 0; i < d; ++i) frame[i * 2] /= n0;
        // second column against the first
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += frame[i * 2] * frame[i * 2 + 1];
        for (std::size_t i = 0; i < d; ++i) frame[i * 2 + 1] -= dot * frame[i * 2];
        double n1 = 0.0;
        for (std::size_t i = 0; i < d; ++i) n1 += frame[i * 2 + 1] * frame[i * 2 + 1];
        n1 = std::sqrt(n1);
        if (n1 < 1e-12) continue;
        for (std::size_t i = 0; i < d; ++i) frame[i * 2 + 1] /= n1;
        return frame;
    }
}

double sample_scale(Rng& rng) {
    return std::exp(rng.next_uniform(std::log(kScaleMin), std::log(kScaleMax)));
}

RasterResult rasterize_slice(const Objective& objective, const bbob::Bounds& bounds,
                             const SliceParams& params, int resolution) {
    if (resolution < 2) throw input_error("rasterize_slice: resolution must be >= 2");
    const auto d = params.centre.size();
    const auto r = static_cast<std::size_t>(resolution);

    RasterResult out;
    out.raw.resize(r * r);
    out.mask.resize(r * r);

    std::vector<double> unit(d);
    for (std::size_t a = 0; a < r; ++a) {
        const double ua = -0.5 + static_cast<double>(a) / static_cast<double>(r - 1);
        for (std::size_t b = 0; b < r; ++b) {
            const double ub = -0.5 + static_cast<double>(b) / static_cast<double>(r - 1);
            bool inside = true;
            for (std::size_t i = 0; i < d; ++i) {
                double coord = params.centre[i] +
                               params.scale * (params.frame[i * 2] * ua + params.frame[i * 2 + 1] * ub);
                if (coord < 0.0 || coord > 1.0) inside = false;
                unit[i] = std::min(1.0, std::max(0.0, coord));
            }
            out.mask[a * r + b] = inside ? 1 : 0;
            out.raw[a * r + b] = objective(bbob::to_physical(unit, bounds));
        }
    }
    return out;
}

NormalizeResult normalize_slice(const std::vector<double>& raw,
                                const std::vector<std::uint8_t>& mask) {
    NormalizeResult out;
    out.values.assign(raw.size(), 0.5);

    std::vector<double> valid;
    valid.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (mask[i]) valid.push_back(raw[i]);
    if (valid.empty()) return out;

    double vmin = valid[0], vmax = valid[0];
    for (double v : valid) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    out.value_range = vmax - vmin;
    out.value_iqr = quantile_linear(valid, 0.75) - quantile_linear(valid, 0.25);

    if (out.value_range > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            if (mask[i]) out.values[i] = (raw[i] - vmin) / out.value_range;
    }
    // zero-range slices keep the neutral 0.5 on valid cells
    return out;
}

SliceSet build_probe_set(const Objective& objective, const bbob::Bounds& bounds, int dimension,
                         int slice_count, int resolution, std::uint64_t seed) {
    if (slice_count < 1) throw input_error("build_probe_set: slice count must be >= 1");
    if (resolution < 2) throw input_error("build_probe_set: resolution must be >= 2");

    const Rng root(seed);
    const auto centres = sample_centres(slice_count, dimension, root.split(0).state());
    const Rng geometry_root = root.split(1);

    SliceSet set;
    set.dimension = dimension;
    set.resolution = resolution;
    set.slices.reserve(static_cast<std::size_t>(slice_count));

    for (int s = 0; s < slice_count; ++s) {
        Rng slice_rng = geometry_root.split(static_cast<std::uint64_t>(s));
        SliceParams params;
        params.centre = centres[static_cast<std::size_t>(s)];
        params.frame = sample_orientation(dimension, slice_rng);
        params.scale = sample_scale(slice_rng);

        const RasterResult raster = rasterize_slice(objective, bounds, params, resolution);
        NormalizeResult norm = normalize_slice(raster.raw, raster.mask);

        Slice slice;
        slice.resolution = resolution;
        slice.values = std::move(norm.values);
        slice.mask = raster.mask;
        slice.scale = params.scale;
        slice.value_range = norm.value_range;
        slice.value_iqr = norm.value_iqr;
        set.slices.push_back(std::move(slice));
    }
    return set;
}

SliceSet build_probe_set(const bbob::ProblemInstance& instance, int slice_count, int resolution,
                         std::uint64_t seed) {
    SliceSet set = build_probe_set(
        [&instance](const std::vector<double>& x) { return instance.evaluate(x); },
        instance.bounds, instance.dimension, slice_count, resolution, seed);
    set.provenance.function_id = instance.function_id;
    set.provenance.dimension = instance.dimension;
    set.provenance.instance_id = instance.instance_id;
    return set;
}

// ---------------------------------------------------------------------------
// serialization: "GPSS" | u32 version | 4 x i32 provenance | i32 d, k, r |
// per slice: f64 scale, range, iqr | r*r f64 values | r*r u8 mask
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'P', 'S', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t>& out, const T& value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw data_error("slice set container truncated");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

std::vector<std::uint8_t> serialize_slice_set(const SliceSet& set) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put(out, kVersion);
    put(out, static_cast<std::int32_t>(set.provenance.function_id));
    put(out, static_cast<std::int32_t>(set.provenance.dimension));
    put(out, static_cast<std::int32_t>(set.provenance.instance_id));
    put(out, static_cast<std::int32_t>(set.provenance.repetition));
    put(out, static_cast<std::int32_t>(set.dimension));
    put(out, static_cast<std::int32_t>(set.slices.size()));
    put(out, static_cast<std::int32_t>(set.resolution));
    for (const Slice& s : set.slices) {
        put(out, s.scale);
        put(out, s.value_range);
        put(out, s.value_iqr);
        for (double v : s.values) put(out, v);
        out.insert(out.end(), s.mask.begin(), s.mask.end());
    }
    return out;
}

SliceSet deserialize_slice_set(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw data_error("not a slice set container");
    pos = 4;
    const auto version = take<std::uint32_t>(bytes, pos);
    if (version != kVersion) throw data_error("unsupported slice set version");

    SliceSet set;
    set.provenance.function_id = take<std::int32_t>(bytes, pos);
    set.provenance.dimension = take<std::int32_t>(bytes, pos);
    set.provenance.instance_id = take<std::int32_t>(bytes, pos);
    set.provenance.repetition = take<std::int32_t>(bytes, pos);
    set.dimension = take<std::int32_t>(bytes, pos);
    const auto k = take<std::int32_t>(bytes, pos);
    set.resolution = take<std::int32_t>(bytes, pos);
    if (k < 1 || set.resolution < 2) throw data_error("corrupt slice set header");

    const auto cells = static_cast<std::size_t>(set.resolution) *
                       static_cast<std::size_t>(set.resolution);
    set.slices.resize(static_cast<std::size_t>(k));
    for (auto& s : set.slices) {
        s.resolution = set.resolution;
        s.scale = take<double>(bytes, pos);
        s.value_range = take<double>(bytes, pos);
        s.value_iqr = take<double>(bytes, pos);
        s.values.resize(cells);
        for (auto& v : s.values) v = take<double>(bytes, pos);
        if (pos + cells > bytes.size()) throw data_error("slice set container truncated");
        s.mask.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + cells));
        pos += cells;
    }
    return set;
}

void save_slice_set(const SliceSet& set, const std::string& path) {
    const auto bytes = serialize_slice_set(set);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

SliceSet load_slice_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_slice_set(bytes);
}

}  // namespace geopas::probing
