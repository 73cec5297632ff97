#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"
#include "geopas/probing.hpp"

using namespace geopas;
using namespace geopas::probing;

namespace {

// unit-box bounds make the physical point equal the normalised point
bbob::Bounds unit_bounds(int d) {
    bbob::Bounds b;
    b.lower.assign(static_cast<std::size_t>(d), 0.0);
    b.upper.assign(static_cast<std::size_t>(d), 1.0);
    return b;
}

SliceParams axis_slice(std::vector<double> centre, double scale) {
    SliceParams p;
    const auto d = centre.size();
    p.centre = std::move(centre);
    p.frame.assign(d * 2, 0.0);
    p.frame[0] = 1.0;      // first column = e1
    p.frame[2 + 1] = 1.0;  // second column = e2
    p.scale = scale;
    return p;
}

}  // namespace

TEST_CASE("orientation frames are orthonormal") {
    Rng rng(7);
    for (int d : {2, 3, 5, 10}) {
        for (int trial = 0; trial < 200; ++trial) {
            const auto frame = sample_orientation(d, rng);
            double g00 = 0, g01 = 0, g11 = 0;
            for (int i = 0; i < d; ++i) {
                g00 += frame[static_cast<std::size_t>(i * 2)] * frame[static_cast<std::size_t>(i * 2)];
                g01 += frame[static_cast<std::size_t>(i * 2)] * frame[static_cast<std::size_t>(i * 2 + 1)];
                g11 += frame[static_cast<std::size_t>(i * 2 + 1)] * frame[static_cast<std::size_t>(i * 2 + 1)];
            }
            CHECK(std::fabs(g00 - 1.0) < 1e-10);
            CHECK(std::fabs(g11 - 1.0) < 1e-10);
            CHECK(std::fabs(g01) < 1e-10);
        }
    }
}

TEST_CASE("planar frames are full orthogonal matrices") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = sample_orientation(2, rng);
        const double det = f[0] * f[3] - f[1] * f[2];
        CHECK(std::fabs(std::fabs(det) - 1.0) < 1e-10);
    }
}

// E[x1^2] = 1/d for a uniform direction on the sphere
TEST_CASE("first frame entry has second moment one over d") {
    Rng rng(11);
    const int draws = 10000;
    double acc = 0.0;
    for (int trial = 0; trial < draws; ++trial) {
        const auto f = sample_orientation(3, rng);
        acc += f[0] * f[0];
    }
    CHECK(std::fabs(acc / draws - 1.0 / 3.0) < 0.02);
}

// the squared projection of a fixed unit vector onto a Haar 2-plane has
// expectation 2/d
TEST_CASE("span projection of a fixed direction matches the Haar mean") {
    Rng rng(41);
    const int draws = 10000;
    double acc = 0.0;
    for (int trial = 0; trial < draws; ++trial) {
        const auto f = sample_orientation(3, rng);
        // e1 projected onto span(O): components are the first row of O
        acc += f[0] * f[0] + f[1] * f[1];
    }
    CHECK(std::fabs(acc / draws - 2.0 / 3.0) < 0.02);
}

TEST_CASE("scales are log-uniform on the documented interval") {
    Rng rng(13);
    const int draws = 100000;
    double log_acc = 0.0;
    int below_geometric_median = 0;
    const double median = std::sqrt(kScaleMin * kScaleMax);
    for (int i = 0; i < draws; ++i) {
        const double s = sample_scale(rng);
        REQUIRE(s >= kScaleMin);
        REQUIRE(s <= kScaleMax);
        log_acc += std::log(s);
        if (s <= median) ++below_geometric_median;
    }
    // closed form: (ln 0.02 + ln 0.7) / 2 = -2.13435; e^-2.13435 = 0.11832,
    // the geometric median checked below
    const double expected_mean = 0.5 * (std::log(kScaleMin) + std::log(kScaleMax));
    CHECK(std::fabs(log_acc / draws - expected_mean) < 0.02);
    CHECK(std::fabs(expected_mean - (-2.13435)) < 1e-4);
    CHECK(std::fabs(median - 0.11832) < 1e-4);
    CHECK(std::fabs(below_geometric_median / static_cast<double>(draws) - 0.5) < 0.01);
}

TEST_CASE("an interior slice is fully valid") {
    const auto objective = [](const std::vector<double>&) { return 1.0; };
    const auto res = rasterize_slice(objective, unit_bounds(2), axis_slice({0.5, 0.5}, 0.5), 8);
    for (auto m : res.mask) CHECK(m == 1);
}

TEST_CASE("an oversized slice truncates at the boundary") {
    const auto objective = [](const std::vector<double>&) { return 1.0; };
    const auto res = rasterize_slice(objective, unit_bounds(2), axis_slice({0.5, 0.5}, 1.5), 8);
    CHECK(res.mask[0] == 0);  // corner grid point leaves the cube
    bool any_valid = false, any_invalid = false;
    for (auto m : res.mask) (m ? any_valid : any_invalid) = true;
    CHECK(any_valid);
    CHECK(any_invalid);
}

TEST_CASE("the grid map places the corner point where the formula says") {
    // x(u) = c + l O u at u = (-1/2, -1/2), c = (0.5, 0.5), l = 0.5 -> (0.25, 0.25)
    std::vector<std::vector<double>> seen;
    const auto objective = [&seen](const std::vector<double>& x) {
        seen.push_back(x);
        return 0.0;
    };
    rasterize_slice(objective, unit_bounds(2), axis_slice({0.5, 0.5}, 0.5), 4);
    CHECK(seen[0][0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(seen[0][1] == doctest::Approx(0.25).epsilon(1e-15));
    // opposite corner at u = (1/2, 1/2) -> (0.75, 0.75)
    CHECK(seen.back()[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(seen.back()[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("masks match direct containment recomputation bit for bit") {
    Rng rng(21);
    const auto objective = [](const std::vector<double>&) { return 0.0; };
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + static_cast<int>(rng.next_u64() % 4);
        SliceParams params;
        params.centre.resize(static_cast<std::size_t>(d));
        for (auto& c : params.centre) c = rng.next_double();
        params.frame = sample_orientation(d, rng);
        params.scale = sample_scale(rng);
        const int r = 4 + 2 * static_cast<int>(rng.next_u64() % 3);

        const auto res = rasterize_slice(objective, unit_bounds(d), params, r);
        for (int a = 0; a < r; ++a) {
            const double ua = -0.5 + static_cast<double>(a) / (r - 1);
            for (int b = 0; b < r; ++b) {
                const double ub = -0.5 + static_cast<double>(b) / (r - 1);
                bool inside = true;
                for (int i = 0; i < d; ++i) {
                    const double coord =
                        params.centre[static_cast<std::size_t>(i)] +
                        params.scale * (params.frame[static_cast<std::size_t>(i * 2)] * ua +
                                        params.frame[static_cast<std::size_t>(i * 2 + 1)] * ub);
                    if (coord < 0.0 || coord > 1.0) inside = false;
                }
                CHECK(res.mask[static_cast<std::size_t>(a * r + b)] == (inside ? 1 : 0));
            }
        }
    }
}

TEST_CASE("min-max normalisation spans zero to one") {
    const std::vector<double> raw = {0.0, 5.0, 10.0, 123.0};
    const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
    const auto res = normalize_slice(raw, mask);
    CHECK(res.values[0] == 0.0);
    CHECK(res.values[1] == 0.5);
    CHECK(res.values[2] == 1.0);
    CHECK(res.values[3] == 0.5);  // invalid cell sits at the neutral value
    CHECK(res.value_range == 10.0);
}

TEST_CASE("constant slices collapse to the neutral value") {
    const std::vector<double> raw = {7.3, 7.3, 7.3, 7.3};
    const std::vector<std::uint8_t> mask = {1, 1, 1, 1};
    const auto res = normalize_slice(raw, mask);
    for (double v : res.values) CHECK(v == 0.5);
    CHECK(res.value_range == 0.0);
    CHECK(res.value_iqr == 0.0);
}

TEST_CASE("all-invalid slices are neutral with zero statistics") {
    const auto res = normalize_slice({1.0, 2.0}, {0, 0});
    CHECK(res.values == std::vector<double>{0.5, 0.5});
    CHECK(res.value_range == 0.0);
    CHECK(res.value_iqr == 0.0);
}

TEST_CASE("normalisation is exactly invariant under positive affine maps") {
    // integer-valued raws keep every step of the arithmetic exact
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> raw(16);
        std::vector<std::uint8_t> mask(16);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            raw[i] = static_cast<double>(rng.next_u64() % 64);
            mask[i] = rng.next_double() < 0.8 ? 1 : 0;
        }
        mask[0] = 1;
        mask[5] = 1;
        std::vector<double> shifted(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) shifted[i] = 3.0 * raw[i] + 11.0;

        const auto base = normalize_slice(raw, mask);
        const auto affine = normalize_slice(shifted, mask);
        CHECK(base.values == affine.values);
        CHECK(affine.value_range == 3.0 * base.value_range);
        CHECK(affine.value_iqr == 3.0 * base.value_iqr);
    }
}

TEST_CASE("a negative scale flips the normalised values") {
    const std::vector<double> raw = {0.0, 2.0, 8.0};
    const std::vector<std::uint8_t> mask = {1, 1, 1};
    const auto base = normalize_slice(raw, mask);
    std::vector<double> negated(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) negated[i] = -2.0 * raw[i];
    const auto flipped = normalize_slice(negated, mask);
    for (std::size_t i = 0; i < raw.size(); ++i)
        CHECK(flipped.values[i] == doctest::Approx(1.0 - base.values[i]).epsilon(1e-12));
}

TEST_CASE("the side IQR follows the pinned linear-interpolation convention") {
    std::vector<double> raw(10);
    for (int i = 0; i < 10; ++i) raw[static_cast<std::size_t>(i)] = i + 1.0;
    const auto res = normalize_slice(raw, std::vector<std::uint8_t>(10, 1));
    CHECK(res.value_iqr == doctest::Approx(4.5).epsilon(1e-12));  // 7.75 - 3.25
}

TEST_CASE("probe sets spend exactly k * r^2 evaluations") {
    const auto instance = bbob::make_instance(8, 3, 1);
    for (int k : {1, 8, 32}) {
        for (int r : {4, 8}) {
            std::atomic<std::uint64_t> calls{0};
            const Objective counting = [&](const std::vector<double>& x) {
                calls += 1;
                return instance.evaluate(x);
            };
            const auto set = build_probe_set(counting, instance.bounds, instance.dimension, k, r,
                                             2024);
            CHECK(calls == static_cast<std::uint64_t>(k) * r * r);
            CHECK(set.slices.size() == static_cast<std::size_t>(k));
            CHECK(set.resolution == r);
        }
    }
}

TEST_CASE("a 32-slice 8x8 probe set spends 2048 evaluations") {
    const auto instance = bbob::make_instance(17, 3, 1);
    std::uint64_t calls = 0;
    const Objective counting = [&](const std::vector<double>& x) {
        ++calls;
        return instance.evaluate(x);
    };
    build_probe_set(counting, instance.bounds, instance.dimension, 32, 8, 5);
    CHECK(calls == 2048);
}

TEST_CASE("a minimal probe set has one tiny slice") {
    const auto instance = bbob::make_instance(1, 2, 1);
    const auto set = build_probe_set(instance, 1, 2, 9);
    CHECK(set.slices.size() == 1);
    CHECK(set.slices[0].values.size() == 4);
}

TEST_CASE("probe sets are bit-identical across runs") {
    const auto instance = bbob::make_instance(21, 3, 2);
    const auto a = build_probe_set(instance, 6, 8, 77);
    const auto b = build_probe_set(instance, 6, 8, 77);
    CHECK(a == b);
    const auto c = build_probe_set(instance, 6, 8, 78);
    CHECK_FALSE(a == c);
}

TEST_CASE("slice values are normalised and neutral where invalid") {
    const auto instance = bbob::make_instance(2, 2, 1);
    const auto set = build_probe_set(instance, 16, 8, 123);
    for (const auto& slice : set.slices) {
        for (std::size_t i = 0; i < slice.values.size(); ++i) {
            if (slice.mask[i]) {
                CHECK(slice.values[i] >= 0.0);
                CHECK(slice.values[i] <= 1.0);
            } else {
                CHECK(slice.values[i] == 0.5);
            }
        }
        CHECK(slice.value_range >= slice.value_iqr);
        CHECK(slice.value_iqr >= 0.0);
    }
}

TEST_CASE("serialisation round trips bit-exactly") {
    const auto instance = bbob::make_instance(16, 3, 1);
    auto set = build_probe_set(instance, 5, 8, 42);
    set.provenance.repetition = 7;
    const auto bytes = serialize_slice_set(set);
    const auto back = deserialize_slice_set(bytes);
    CHECK(back == set);
    CHECK(serialize_slice_set(back) == bytes);
}

TEST_CASE("corrupt containers are rejected") {
    CHECK_THROWS_AS(deserialize_slice_set({1, 2, 3}), data_error);
    const auto instance = bbob::make_instance(1, 2, 1);
    auto bytes = serialize_slice_set(build_probe_set(instance, 1, 4, 1));
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(deserialize_slice_set(bytes), data_error);
}
