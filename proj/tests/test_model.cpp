#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"
#include "geopas/model.hpp"
#include "geopas/probing.hpp"

using namespace geopas;
using namespace geopas::model;

namespace {

probing::Slice make_slice(int r, Rng& rng, double invalid_rate = 0.2) {
    probing::Slice s;
    s.resolution = r;
    s.values.resize(static_cast<std::size_t>(r * r));
    s.mask.resize(static_cast<std::size_t>(r * r));
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        s.mask[i] = rng.next_double() < invalid_rate ? 0 : 1;
        s.values[i] = s.mask[i] ? rng.next_double() : 0.5;
    }
    s.mask[0] = 1;
    s.scale = 0.1 + 0.5 * rng.next_double();
    s.value_range = rng.next_double() * 5.0;
    s.value_iqr = s.value_range * 0.4;
    return s;
}

probing::SliceSet make_set(int k, int r, int dimension, Rng& rng) {
    probing::SliceSet set;
    set.dimension = dimension;
    set.resolution = r;
    for (int i = 0; i < k; ++i) set.slices.push_back(make_slice(r, rng));
    return set;
}

}  // namespace

TEST_CASE("the full representation is 145-dimensional and the count is pinned") {
    ModelConfig cfg;
    cfg.portfolio_size = 12;
    CHECK(cfg.conditioned_dim() == 144);
    CHECK(cfg.representation_dim() == 145);

    const auto params = init_parameters(cfg, 1);
    // layer-by-layer closed form:
    //   conv: 320 + 9248 + 18496 + 36928 + 73856 + 147584
    //   scorer 129, xi 64, pool 145, dim 2, two heads 2 * (18688 + 1548)
    const std::size_t convs = 320 + 9248 + 18496 + 36928 + 73856 + 147584;
    const std::size_t expected = convs + 129 + 64 + 145 + 2 + 2 * (145 * 128 + 128 + 128 * 12 + 12);
    CHECK(expected == 327244);
    CHECK(params.parameter_count() == expected);
}

TEST_CASE("ablation switches adapt the representation width") {
    ModelConfig no_xi;
    no_xi.use_xi = false;
    CHECK(no_xi.conditioned_dim() == 128);
    CHECK(no_xi.representation_dim() == 129);

    ModelConfig no_dim;
    no_dim.use_dim = false;
    CHECK(no_dim.representation_dim() == 144);

    ModelConfig bare;
    bare.use_xi = false;
    bare.use_dim = false;
    CHECK(bare.representation_dim() == 128);
}

TEST_CASE("initial parameters are bounded, deterministic, and bias-free") {
    ModelConfig cfg;
    const auto a = init_parameters(cfg, 7);
    const auto b = init_parameters(cfg, 7);
    for (const auto& [name, tensor] : a.named_tensors()) {
        for (double v : tensor->data) {
            CHECK(std::fabs(v) < 1.0);
            CHECK(std::isfinite(v));
        }
        if (name.ends_with(".b"))
            for (double v : tensor->data) CHECK(v == 0.0);
    }
    auto bn = b.named_tensors();
    auto an = a.named_tensors();
    for (std::size_t i = 0; i < an.size(); ++i) CHECK(an[i].second->data == bn[i].second->data);

    const auto c = init_parameters(cfg, 8);
    CHECK(c.named_tensors()[0].second->data != an[0].second->data);
}

TEST_CASE("encode_slice yields a 128-vector and enforces the resolution contract") {
    ModelConfig cfg;
    const auto params = init_parameters(cfg, 3);
    Rng rng(1);
    const auto slice = make_slice(8, rng);
    const auto z = encode_slice(params, slice);
    CHECK(z.size() == 128);
    for (double v : z) CHECK(std::isfinite(v));

    probing::Slice bad = make_slice(8, rng);
    bad.resolution = 6;
    bad.values.resize(36);
    bad.mask.assign(36, 1);
    CHECK_THROWS_AS(encode_slice(params, bad), config_error);
}

TEST_CASE("an all-valid neutral slice encodes without the fallback path") {
    ModelConfig cfg;
    const auto params = init_parameters(cfg, 5);
    probing::Slice s;
    s.resolution = 8;
    s.values.assign(64, 0.5);
    s.mask.assign(64, 1);
    s.scale = 0.1;
    const auto z = encode_slice(params, s);
    for (double v : z) CHECK(std::isfinite(v));
}

TEST_CASE("encoding the same slice twice shares the weights exactly") {
    ModelConfig cfg;
    const auto params = init_parameters(cfg, 9);
    Rng rng(2);
    const auto slice = make_slice(8, rng);
    CHECK(encode_slice(params, slice) == encode_slice(params, slice));
}

TEST_CASE("side statistics are conditioned through the pinned epsilon") {
    ModelConfig cfg;
    auto params = init_parameters(cfg, 4);
    // make the xi embedder the identity on its first three rows
    params.xi_w.zero();
    params.xi_b.zero();
    params.xi_w.data[0 * 3 + 0] = 1.0;
    params.xi_w.data[1 * 3 + 1] = 1.0;
    params.xi_w.data[2 * 3 + 2] = 1.0;

    const std::vector<double> z(128, 0.0);
    const auto cond = condition_slice(params, z, 1.0, 0.0, 0.0);
    REQUIRE(cond.size() == 144);
    CHECK(cond[128] == 0.0);  // log 1
    CHECK(cond[129] == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
    CHECK(cond[130] == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
    CHECK(std::log(1e-6) == doctest::Approx(-13.8155).epsilon(1e-4));
}

TEST_CASE("aggregation is permutation-invariant and handles singletons") {
    ModelConfig cfg;
    const auto params = init_parameters(cfg, 11);
    Rng rng(3);

    std::vector<std::vector<double>> one(1, std::vector<double>(144));
    for (auto& v : one[0]) v = rng.next_uniform(-1.0, 1.0);
    const auto z1 = aggregate(params, one, 3);
    REQUIRE(z1.size() == 145);
    for (std::size_t i = 0; i < 144; ++i) CHECK(z1[i] == one[0][i]);

    std::vector<std::vector<double>> same(4, one[0]);
    const auto zs = aggregate(params, same, 3);
    for (std::size_t i = 0; i < 144; ++i)
        CHECK(zs[i] == doctest::Approx(one[0][i]).epsilon(1e-12));

    std::vector<std::vector<double>> many(5, std::vector<double>(144));
    for (auto& v : many)
        for (auto& c : v) c = rng.next_uniform(-1.0, 1.0);
    const auto base = aggregate(params, many, 3);
    Rng shuffle(4);
    for (int trial = 0; trial < 25; ++trial) {
        auto perm = many;
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[shuffle.next_u64() % i]);
        const auto moved = aggregate(params, perm, 3);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(std::fabs(moved[i] - base[i]) < 1e-9);
    }
}

TEST_CASE("predict emits one pair of portfolio-wide vectors deterministically") {
    ModelConfig cfg;
    cfg.portfolio_size = 12;
    const auto params = init_parameters(cfg, 21);
    Rng rng(5);
    const auto set = make_set(6, 8, 3, rng);
    const auto a = predict(params, set);
    const auto b = predict(params, set);
    REQUIRE(a.regression.size() == 12);
    REQUIRE(a.catastrophe_logits.has_value());
    CHECK(a.catastrophe_logits->size() == 12);
    CHECK(a.regression == b.regression);
    CHECK(*a.catastrophe_logits == *b.catastrophe_logits);
}

TEST_CASE("the single-head ablation drops the catastrophe logits") {
    ModelConfig cfg;
    cfg.use_cat_head = false;
    const auto params = init_parameters(cfg, 22);
    Rng rng(6);
    const auto set = make_set(3, 8, 2, rng);
    const auto pred = predict(params, set);
    CHECK_FALSE(pred.catastrophe_logits.has_value());
}

TEST_CASE("conditioning ablations still run the full forward pass") {
    Rng rng(61);
    const auto set = make_set(4, 8, 3, rng);
    for (const bool use_xi : {true, false}) {
        for (const bool use_dim : {true, false}) {
            ModelConfig cfg;
            cfg.portfolio_size = 3;
            cfg.use_xi = use_xi;
            cfg.use_dim = use_dim;
            const auto params = init_parameters(cfg, 23);
            const auto pred = predict(params, set);
            REQUIRE(pred.regression.size() == 3);
            for (double v : pred.regression) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("training reduces the joint loss on a learnable toy set") {
    Rng rng(7);
    std::vector<probing::SliceSet> sets;
    std::vector<Datapoint> data;
    for (int i = 0; i < 16; ++i) sets.push_back(make_set(2, 4, 2, rng));
    for (int i = 0; i < 16; ++i) {
        Datapoint dp;
        dp.slices = &sets[static_cast<std::size_t>(i)];
        dp.log_relert = {i % 2 ? 2.0 : 0.0, i % 2 ? 0.0 : 2.0};
        dp.catastrophe = {0.0, i % 2 ? 1.0 : 0.0};
        data.push_back(dp);
    }
    ModelConfig mcfg;
    mcfg.portfolio_size = 2;
    TrainConfig tcfg;
    tcfg.epochs = 25;  // 25 epochs x 2 batches = 50 adam steps
    tcfg.batch_size = 8;
    tcfg.learning_rate = 3e-3;
    tcfg.seed = 11;
    const auto result = train(data, mcfg, tcfg);
    CHECK(result.loss_trace.size() == 25);
    CHECK(result.loss_trace.back() < result.loss_trace.front());
}

TEST_CASE("a zero classification weight silences the catastrophe gradients") {
    Rng rng(8);
    const auto set = make_set(2, 4, 2, rng);
    Datapoint dp;
    dp.slices = &set;
    dp.log_relert = {0.5, 1.5};
    dp.catastrophe = {1.0, 0.0};

    ModelConfig mcfg;
    mcfg.portfolio_size = 2;
    const auto params = init_parameters(mcfg, 31);
    auto grads = make_zero_like(params);
    Rng dropout_rng(1);
    train_step_single(params, dp, /*lambda_cls=*/0.0, 1.0, false, dropout_rng, grads);
    for (const auto& [name, tensor] : grads.named_tensors()) {
        if (name.rfind("cat", 0) == 0)
            for (double v : tensor->data) CHECK(v == 0.0);
    }
    // and the regression head did receive gradient
    double reg_mass = 0.0;
    for (double v : grads.reg2_w.data) reg_mass += std::fabs(v);
    CHECK(reg_mass > 0.0);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    Rng rng(9);
    std::vector<probing::SliceSet> sets;
    for (int i = 0; i < 6; ++i) sets.push_back(make_set(2, 4, 2, rng));
    std::vector<Datapoint> data;
    for (int i = 0; i < 6; ++i) {
        Datapoint dp;
        dp.slices = &sets[static_cast<std::size_t>(i)];
        dp.log_relert = {0.0, 1.0, 2.0};
        dp.catastrophe = {0.0, 0.0, 1.0};
        data.push_back(dp);
    }
    ModelConfig mcfg;
    mcfg.portfolio_size = 3;
    TrainConfig tcfg;
    tcfg.epochs = 4;
    tcfg.batch_size = 4;
    tcfg.seed = 99;

    const auto a = train(data, mcfg, tcfg);
    const auto b = train(data, mcfg, tcfg);
    const auto an = a.params.named_tensors();
    const auto bn = b.params.named_tensors();
    REQUIRE(an.size() == bn.size());
    for (std::size_t i = 0; i < an.size(); ++i) CHECK(an[i].second->data == bn[i].second->data);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("empty datasets are a configuration error") {
    ModelConfig mcfg;
    TrainConfig tcfg;
    CHECK_THROWS_AS(train({}, mcfg, tcfg), config_error);
}

// end-to-end analytic gradients vs central differences on a 2-slice, r = 4
// micro model, sampled across every parameter tensor
TEST_CASE("the full model passes the finite-difference gradient check") {
    Rng rng(10);
    const auto set = make_set(2, 4, 3, rng);
    Datapoint dp;
    dp.slices = &set;
    dp.log_relert = {0.3, -0.4, 1.2};
    dp.catastrophe = {0.0, 1.0, 0.0};

    ModelConfig mcfg;
    mcfg.portfolio_size = 3;
    auto params = init_parameters(mcfg, 41);
    auto grads = make_zero_like(params);
    Rng dropout_rng(1);
    train_step_single(params, dp, /*lambda_cls=*/2.0, 1.0, /*dropout=*/false, dropout_rng, grads);

    auto named = params.named_tensors();
    auto grad_named = grads.named_tensors();
    Rng pick(11);
    const auto loss = [&]() {
        auto g = make_zero_like(params);
        Rng dr(1);
        return train_step_single(params, dp, 2.0, 1.0, false, dr, g);
    };
    const auto numeric_at = [&](double& entry, double h) {
        const double saved = entry;
        entry = saved + h;
        const double up = loss();
        entry = saved - h;
        const double down = loss();
        entry = saved;
        return (up - down) / (2.0 * h);
    };
    int checked = 0, skipped = 0;
    for (std::size_t t = 0; t < named.size(); ++t) {
        nn::Tensor* tensor = named[t].second;
        const nn::Tensor* grad = grad_named[t].second;
        const int samples = tensor->size() > 16 ? 4 : 2;
        for (int s = 0; s < samples; ++s) {
            const auto idx = static_cast<std::size_t>(pick.next_u64() % tensor->size());
            const double coarse = numeric_at(tensor->data[idx], 1e-5);
            const double fine = numeric_at(tensor->data[idx], 5e-6);
            // two step sizes disagreeing flags a ReLU kink or pooling tie in
            // range of the perturbation; those points are excluded by contract
            const double agree_scale = std::max({std::fabs(coarse), std::fabs(fine), 1e-6});
            if (std::fabs(coarse - fine) / agree_scale > 1e-3) {
                ++skipped;
                continue;
            }
            const double analytic = grad->data[idx];
            const double scale = std::max({std::fabs(analytic), std::fabs(fine), 1e-6});
            CHECK(std::fabs(analytic - fine) / scale < 1e-3);
            ++checked;
        }
    }
    CHECK(checked >= 60);
    CHECK(skipped <= checked / 10);
}

TEST_CASE("model checkpoints restore bit-identical parameters") {
    ModelConfig cfg;
    cfg.portfolio_size = 5;
    cfg.use_dim = false;
    const auto params = init_parameters(cfg, 55);
    const auto path = std::filesystem::temp_directory_path() / "geopas_model_test.ckpt";
    save_model(params, 1234, path.string());
    const auto [loaded, rng_state] = load_model(path.string());
    CHECK(rng_state == 1234);
    CHECK(loaded.config.portfolio_size == 5);
    CHECK_FALSE(loaded.config.use_dim);
    const auto an = params.named_tensors();
    const auto bn = loaded.named_tensors();
    REQUIRE(an.size() == bn.size());
    for (std::size_t i = 0; i < an.size(); ++i) {
        CHECK(an[i].first == bn[i].first);
        CHECK(an[i].second->data == bn[i].second->data);
    }
    std::filesystem::remove(path);
}
