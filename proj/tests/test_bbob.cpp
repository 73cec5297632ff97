#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"

using namespace geopas;
using bbob::make_instance;

namespace {

double max_orthogonality_defect(const std::vector<double>& rot, int d) {
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double dot = 0.0;
            for (int k = 0; k < d; ++k)
                dot += rot[static_cast<std::size_t>(k * d + i)] *
                       rot[static_cast<std::size_t>(k * d + j)];
            worst = std::max(worst, std::fabs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("construction is deterministic") {
    const auto a = make_instance(1, 2, 1);
    const auto b = make_instance(1, 2, 1);
    CHECK(a.shift == b.shift);
    CHECK(a.rotation == b.rotation);
    CHECK(a.f_opt == b.f_opt);
}

TEST_CASE("instances differ by instance id") {
    const auto a = make_instance(1, 2, 1);
    const auto b = make_instance(1, 2, 2);
    CHECK(a.shift != b.shift);
}

TEST_CASE("function id range is enforced") {
    CHECK_THROWS_AS(make_instance(25, 2, 1), config_error);
    CHECK_THROWS_AS(make_instance(0, 2, 1), config_error);
    CHECK_THROWS_AS(make_instance(1, 1, 1), config_error);
    CHECK_THROWS_AS(make_instance(1, 2, 0), config_error);
}

TEST_CASE("rotations are orthogonal and separable functions stay axis-aligned") {
    for (int f = 1; f <= 24; ++f) {
        for (int d : {2, 3, 5}) {
            const auto inst = make_instance(f, d, 3);
            CHECK(max_orthogonality_defect(inst.rotation, d) < 1e-10);
            if (bbob::is_separable(f)) {
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        CHECK(inst.rotation[static_cast<std::size_t>(i * d + j)] ==
                              (i == j ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("shift lies strictly inside the box") {
    for (int f = 1; f <= 24; ++f) {
        for (int i = 1; i <= 5; ++i) {
            const auto inst = make_instance(f, 3, i);
            for (int c = 0; c < 3; ++c) {
                CHECK(inst.shift[static_cast<std::size_t>(c)] > inst.bounds.lower[static_cast<std::size_t>(c)]);
                CHECK(inst.shift[static_cast<std::size_t>(c)] < inst.bounds.upper[static_cast<std::size_t>(c)]);
            }
        }
    }
}

TEST_CASE("the objective attains f_opt at the shift") {
    for (int f = 1; f <= 24; ++f) {
        for (int d : {2, 3, 5}) {
            const auto inst = make_instance(f, d, 1);
            const double v = inst.evaluate(inst.shift);
            CHECK(std::fabs(v - inst.f_opt) < 1e-8);
        }
    }
    // sphere hits it exactly
    const auto sphere = make_instance(1, 4, 2);
    CHECK(sphere.evaluate(sphere.shift) == sphere.f_opt);
}

TEST_CASE("hand-built sphere instance evaluates the squared norm") {
    bbob::ProblemInstance inst;
    inst.function_id = 1;
    inst.dimension = 2;
    inst.instance_id = 1;
    inst.shift = {0.0, 0.0};
    inst.rotation = {1.0, 0.0, 0.0, 1.0};
    inst.f_opt = 0.0;
    inst.bounds = bbob::Bounds::symmetric(2);
    CHECK(inst.evaluate({1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inst.evaluate({3.0, 4.0}) == doctest::Approx(25.0).epsilon(1e-12));
}

// Rastrigin at its optimum: z = 0, so the cosine sum equals d and both the
// 10(d - sum cos) term and the quadratic term vanish.
TEST_CASE("rastrigin family returns f_opt at the shift") {
    for (int f : {3, 15}) {
        const auto inst = make_instance(f, 3, 4);
        CHECK(inst.evaluate(inst.shift) == doctest::Approx(inst.f_opt).epsilon(1e-12));
    }
}

TEST_CASE("dimension mismatch raises an input error") {
    const auto inst = make_instance(1, 3, 1);
    CHECK_THROWS_AS(inst.evaluate({0.0, 0.0}), input_error);
}

TEST_CASE("values are finite across the box for every function") {
    Rng rng(99);
    for (int f = 1; f <= 24; ++f) {
        const auto inst = make_instance(f, 3, 2);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(3);
            for (auto& c : x) c = rng.next_uniform(-6.0, 6.0);  // slightly outside too
            CHECK(std::isfinite(inst.evaluate(x)));
        }
    }
}

TEST_CASE("nonzero deviation from the optimum costs something") {
    // spot check unimodal members away from the shift
    for (int f : {1, 2, 5, 6, 10, 11, 12, 13, 14}) {
        const auto inst = make_instance(f, 3, 1);
        std::vector<double> x = inst.shift;
        x[0] += 0.5;
        CHECK(inst.evaluate(x) > inst.f_opt);
    }
}

TEST_CASE("to_physical maps the unit cube onto the box") {
    const auto bounds = bbob::Bounds::symmetric(3);
    CHECK(bbob::to_physical({0.5, 0.5, 0.5}, bounds) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(bbob::to_physical({0.0, 0.0, 0.0}, bounds) ==
          std::vector<double>{-5.0, -5.0, -5.0});
    CHECK(bbob::to_physical({0.75, 0.0, 0.0}, bounds)[0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("function groups follow the standard partition") {
    CHECK(bbob::function_group(1) == 0);
    CHECK(bbob::function_group(5) == 0);
    CHECK(bbob::function_group(6) == 1);
    CHECK(bbob::function_group(9) == 1);
    CHECK(bbob::function_group(10) == 2);
    CHECK(bbob::function_group(14) == 2);
    CHECK(bbob::function_group(15) == 3);
    CHECK(bbob::function_group(19) == 3);
    CHECK(bbob::function_group(20) == 4);
    CHECK(bbob::function_group(24) == 4);
    CHECK(std::string(bbob::group_label(0)) == "f1-f5");
    CHECK(std::string(bbob::group_label(4)) == "f20-f24");
}
