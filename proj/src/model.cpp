#include "geopas/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geopas::model {

namespace {

using nn::Tensor;

struct LayerSpec {
    const char* name;
    std::vector<std::size_t> shape;
    std::size_t fan_in;
};

std::vector<LayerSpec> layer_plan(const ModelConfig& cfg) {
    std::vector<LayerSpec> plan;
    // two 3x3 convs per block, channel plan 1 -> 32 -> 64 -> 128
    const char* conv_w_names[6] = {"conv1a.w", "conv1b.w", "conv2a.w",
                                   "conv2b.w", "conv3a.w", "conv3b.w"};
    const char* conv_b_names[6] = {"conv1a.b", "conv1b.b", "conv2a.b",
                                   "conv2b.b", "conv3a.b", "conv3b.b"};
    for (int layer = 0; layer < 6; ++layer) {
        const std::size_t cin = kEncoderChannels[layer / 2 + (layer % 2)];
        const std::size_t cout = kEncoderChannels[layer / 2 + 1];
        plan.push_back({conv_w_names[layer], {cout, cin, 3, 3}, cin * 9});
        plan.push_back({conv_b_names[layer], {cout}, cin * 9});
    }
    plan.push_back({"score.w", {128}, 128});
    plan.push_back({"score.b", {1}, 128});
    plan.push_back({"xi.w", {16, 3}, 3});
    plan.push_back({"xi.b", {16}, 3});
    const auto cond = static_cast<std::size_t>(cfg.conditioned_dim());
    plan.push_back({"pool.w", {cond}, cond});
    plan.push_back({"pool.b", {1}, cond});
    plan.push_back({"dim.w", {1}, 1});
    plan.push_back({"dim.b", {1}, 1});
    const auto rep = static_cast<std::size_t>(cfg.representation_dim());
    const auto hidden = static_cast<std::size_t>(kHeadHiddenWidth);
    const auto out = static_cast<std::size_t>(cfg.portfolio_size);
    plan.push_back({"reg1.w", {hidden, rep}, rep});
    plan.push_back({"reg1.b", {hidden}, rep});
    plan.push_back({"reg2.w", {out, hidden}, hidden});
    plan.push_back({"reg2.b", {out}, hidden});
    plan.push_back({"cat1.w", {hidden, rep}, rep});
    plan.push_back({"cat1.b", {hidden}, rep});
    plan.push_back({"cat2.w", {out, hidden}, hidden});
    plan.push_back({"cat2.b", {out}, hidden});
    return plan;
}

std::vector<Tensor*> tensor_slots(ModelParams& p) {
    return {&p.conv_w[0], &p.conv_b[0], &p.conv_w[1], &p.conv_b[1], &p.conv_w[2], &p.conv_b[2],
            &p.conv_w[3], &p.conv_b[3], &p.conv_w[4], &p.conv_b[4], &p.conv_w[5], &p.conv_b[5],
            &p.score_w,   &p.score_b,   &p.xi_w,      &p.xi_b,      &p.pool_w,    &p.pool_b,
            &p.dim_w,     &p.dim_b,     &p.reg1_w,    &p.reg1_b,    &p.reg2_w,    &p.reg2_b,
            &p.cat1_w,    &p.cat1_b,    &p.cat2_w,    &p.cat2_b};
}

bool slot_active(const ModelConfig& cfg, const std::string& name) {
    if (!cfg.use_xi && name.rfind("xi.", 0) == 0) return false;
    if (!cfg.use_dim && name.rfind("dim.", 0) == 0) return false;
    if (!cfg.use_cat_head && name.rfind("cat", 0) == 0) return false;
    return true;
}

std::vector<double> side_statistics(double scale, double value_range, double value_iqr) {
    return {std::log(scale), std::log(value_range + kSideStatEpsilon),
            std::log(value_iqr + kSideStatEpsilon)};
}

// per-slice attention context; the convolutional work is batched over the
// whole slice set in EncoderBatch
struct SliceContext {
    Tensor mask_quarter;
    Tensor features;  // [128, r/4, r/4], copied out of the batch
    Tensor scores;
    nn::MaskedSoftmaxResult attention;
    std::vector<double> embedding;    // z, 128
    std::vector<double> conditioned;  // z-tilde
    std::vector<double> xi;           // side statistics (when used)
};

struct EncoderBatch {
    Tensor input;  // [k, 1, r, r]
    Tensor conv_out[6], relu_out[6];
    nn::PoolResult pool1, pool2;
};

struct SetContext {
    EncoderBatch batch;
    std::vector<SliceContext> slices;
    std::vector<double> pool_logits;   // per slice
    std::vector<double> pool_weights;  // softmax over slices
    std::vector<double> pooled;        // weighted sum of conditioned embeddings
    std::vector<double> representation;  // Z
    double log_dim = 0.0;
    nn::DropoutResult dropout;
    std::vector<double> reg_hidden, reg_hidden_act;
    std::vector<double> cat_hidden, cat_hidden_act;
    Prediction prediction;
};

// all k slices run through the conv stack as one batch; pooling reshapes the
// batch to [k*C, h, w], which shares the same memory layout
void encode_batch(const ModelParams& p, const std::vector<probing::Slice>& slices,
                  SetContext& ctx) {
    const int r = slices[0].resolution;
    if (r % 4 != 0)
        throw config_error("encoder requires a resolution divisible by 4, got " +
                           std::to_string(r));
    const auto rr = static_cast<std::size_t>(r);
    const std::size_t k = slices.size();

    EncoderBatch& batch = ctx.batch;
    batch.input = Tensor({k, 1, rr, rr});
    for (std::size_t s = 0; s < k; ++s) {
        if (slices[s].resolution != r)
            throw input_error("slice set mixes resolutions");
        std::copy(slices[s].values.begin(), slices[s].values.end(),
                  batch.input.data.begin() + static_cast<std::ptrdiff_t>(s * rr * rr));
    }

    const Tensor* current = &batch.input;
    for (int block = 0; block < 3; ++block) {
        for (int half = 0; half < 2; ++half) {
            const int layer = block * 2 + half;
            batch.conv_out[layer] =
                nn::conv2d_forward_batch(*current, p.conv_w[layer], p.conv_b[layer]);
            batch.relu_out[layer] = nn::relu_forward(batch.conv_out[layer]);
            current = &batch.relu_out[layer];
        }
        if (block < 2) {
            nn::PoolResult& pooled = block == 0 ? batch.pool1 : batch.pool2;
            Tensor view = *current;  // reshape [k,C,h,w] -> [k*C,h,w]
            view.shape = {view.shape[0] * view.shape[1], view.shape[2], view.shape[3]};
            pooled = nn::maxpool2x2_forward(view);
            pooled.output.shape = {current->shape[0], current->shape[1],
                                   current->shape[2] / 2, current->shape[3] / 2};
            current = &pooled.output;
        }
    }

    // per-slice masked spatial attention on the final feature map
    const Tensor& features = *current;  // [k, 128, r/4, r/4]
    const std::size_t hq = features.shape[2];
    const std::size_t wq = features.shape[3];
    const std::size_t hw = hq * wq;
    ctx.slices.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
        SliceContext& sc = ctx.slices[s];
        Tensor mask({rr, rr});
        for (std::size_t i = 0; i < slices[s].mask.size(); ++i)
            mask.data[i] = slices[s].mask[i] ? 1.0 : 0.0;
        sc.mask_quarter = nn::maxpool2x2_mask(nn::maxpool2x2_mask(mask));

        sc.features = Tensor({128, hq, wq});
        std::copy(features.data.begin() + static_cast<std::ptrdiff_t>(s * 128 * hw),
                  features.data.begin() + static_cast<std::ptrdiff_t>((s + 1) * 128 * hw),
                  sc.features.data.begin());

        sc.scores = Tensor({hq, wq});
        for (std::size_t i = 0; i < hw; ++i) {
            double acc = p.score_b.data[0];
            for (std::size_t c = 0; c < 128; ++c)
                acc += p.score_w.data[c] * sc.features.data[c * hw + i];
            sc.scores.data[i] = acc;
        }
        sc.attention = nn::masked_softmax_sum_forward(sc.scores, sc.features, sc.mask_quarter,
                                                      kAttentionEpsilon);
        sc.embedding = sc.attention.output;
    }
}

void condition_slice_ctx(const ModelParams& p, const probing::Slice& slice, SliceContext& ctx) {
    if (!p.config.use_xi) {
        ctx.conditioned = ctx.embedding;
        return;
    }
    ctx.xi = side_statistics(slice.scale, slice.value_range, slice.value_iqr);
    const auto embed = nn::linear_forward(ctx.xi, p.xi_w, p.xi_b);
    ctx.conditioned = ctx.embedding;
    ctx.conditioned.insert(ctx.conditioned.end(), embed.begin(), embed.end());
}

void aggregate_ctx(const ModelParams& p, int dimension, SetContext& ctx) {
    const std::size_t k = ctx.slices.size();
    ctx.pool_logits.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        double logit = p.pool_b.data[0];
        const auto& cond_vec = ctx.slices[i].conditioned;
        for (std::size_t j = 0; j < cond_vec.size(); ++j) logit += p.pool_w.data[j] * cond_vec[j];
        ctx.pool_logits[i] = logit;
    }

    const double max_logit = *std::max_element(ctx.pool_logits.begin(), ctx.pool_logits.end());
    ctx.pool_weights.resize(k);
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        ctx.pool_weights[i] = std::exp(ctx.pool_logits[i] - max_logit);
        denom += ctx.pool_weights[i];
    }
    for (auto& w : ctx.pool_weights) w /= denom;

    const auto cond = static_cast<std::size_t>(p.config.conditioned_dim());
    ctx.pooled.assign(cond, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < cond; ++j)
            ctx.pooled[j] += ctx.pool_weights[i] * ctx.slices[i].conditioned[j];

    ctx.representation = ctx.pooled;
    if (p.config.use_dim) {
        ctx.log_dim = std::log(static_cast<double>(dimension));
        ctx.representation.push_back(p.dim_w.data[0] * ctx.log_dim + p.dim_b.data[0]);
    }
}

void heads_ctx(const ModelParams& p, bool dropout_active, Rng& dropout_rng, SetContext& ctx) {
    ctx.dropout = nn::dropout_forward(ctx.representation, p.config.dropout_rate, dropout_active,
                                      dropout_rng);
    ctx.reg_hidden = nn::linear_forward(ctx.dropout.output, p.reg1_w, p.reg1_b);
    ctx.reg_hidden_act.resize(ctx.reg_hidden.size());
    for (std::size_t i = 0; i < ctx.reg_hidden.size(); ++i)
        ctx.reg_hidden_act[i] = std::max(0.0, ctx.reg_hidden[i]);
    ctx.prediction.regression = nn::linear_forward(ctx.reg_hidden_act, p.reg2_w, p.reg2_b);

    if (p.config.use_cat_head) {
        ctx.cat_hidden = nn::linear_forward(ctx.dropout.output, p.cat1_w, p.cat1_b);
        ctx.cat_hidden_act.resize(ctx.cat_hidden.size());
        for (std::size_t i = 0; i < ctx.cat_hidden.size(); ++i)
            ctx.cat_hidden_act[i] = std::max(0.0, ctx.cat_hidden[i]);
        ctx.prediction.catastrophe_logits =
            nn::linear_forward(ctx.cat_hidden_act, p.cat2_w, p.cat2_b);
    }
}

void forward_set(const ModelParams& p, const probing::SliceSet& slices, bool dropout_active,
                 Rng& dropout_rng, SetContext& ctx) {
    if (slices.slices.empty()) throw input_error("forward: slice set is empty");
    encode_batch(p, slices.slices, ctx);
    for (std::size_t i = 0; i < slices.slices.size(); ++i)
        condition_slice_ctx(p, slices.slices[i], ctx.slices[i]);
    aggregate_ctx(p, slices.dimension, ctx);
    heads_ctx(p, dropout_active, dropout_rng, ctx);
}

void backward_set(const ModelParams& p, const probing::SliceSet& slices, const SetContext& ctx,
                  const std::vector<double>& grad_reg,
                  const std::vector<double>& grad_cat_logits, bool dropout_active,
                  ModelParams& grads) {
    const auto rep = ctx.representation.size();
    std::vector<double> grad_repr_dropped(rep, 0.0);

    // regression head
    {
        std::vector<double> grad_hidden_act;
        nn::linear_backward(ctx.reg_hidden_act, p.reg2_w, grad_reg, grad_hidden_act, grads.reg2_w,
                            grads.reg2_b);
        std::vector<double> grad_hidden(grad_hidden_act.size());
        for (std::size_t i = 0; i < grad_hidden.size(); ++i)
            grad_hidden[i] = ctx.reg_hidden[i] > 0.0 ? grad_hidden_act[i] : 0.0;
        std::vector<double> grad_in;
        nn::linear_backward(ctx.dropout.output, p.reg1_w, grad_hidden, grad_in, grads.reg1_w,
                            grads.reg1_b);
        for (std::size_t i = 0; i < rep; ++i) grad_repr_dropped[i] += grad_in[i];
    }
    // catastrophe head
    if (p.config.use_cat_head && !grad_cat_logits.empty()) {
        std::vector<double> grad_hidden_act;
        nn::linear_backward(ctx.cat_hidden_act, p.cat2_w, grad_cat_logits, grad_hidden_act,
                            grads.cat2_w, grads.cat2_b);
        std::vector<double> grad_hidden(grad_hidden_act.size());
        for (std::size_t i = 0; i < grad_hidden.size(); ++i)
            grad_hidden[i] = ctx.cat_hidden[i] > 0.0 ? grad_hidden_act[i] : 0.0;
        std::vector<double> grad_in;
        nn::linear_backward(ctx.dropout.output, p.cat1_w, grad_hidden, grad_in, grads.cat1_w,
                            grads.cat1_b);
        for (std::size_t i = 0; i < rep; ++i) grad_repr_dropped[i] += grad_in[i];
    }

    const std::vector<double> grad_repr =
        nn::dropout_backward(ctx.dropout, p.config.dropout_rate, dropout_active, grad_repr_dropped);

    const auto cond = static_cast<std::size_t>(p.config.conditioned_dim());
    std::vector<double> grad_pooled(grad_repr.begin(), grad_repr.begin() + cond);
    if (p.config.use_dim) {
        const double g_dim = grad_repr[cond];
        grads.dim_w.data[0] += g_dim * ctx.log_dim;
        grads.dim_b.data[0] += g_dim;
    }

    // slice attention pooling: y = sum_i beta_i ztilde_i
    const std::size_t k = ctx.slices.size();
    std::vector<double> dot(k, 0.0);
    double weighted_dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cond; ++j) acc += grad_pooled[j] * ctx.slices[i].conditioned[j];
        dot[i] = acc;
        weighted_dot += ctx.pool_weights[i] * acc;
    }

    const Tensor& features_batch = ctx.batch.relu_out[5];  // [k, 128, hq, wq]
    const std::size_t hq = features_batch.shape[2];
    const std::size_t wq = features_batch.shape[3];
    const std::size_t hw = hq * wq;
    Tensor grad_features_batch(features_batch.shape);

    for (std::size_t i = 0; i < k; ++i) {
        const double grad_logit = ctx.pool_weights[i] * (dot[i] - weighted_dot);
        grads.pool_b.data[0] += grad_logit;
        std::vector<double> grad_cond(cond, 0.0);
        for (std::size_t j = 0; j < cond; ++j) {
            grads.pool_w.data[j] += grad_logit * ctx.slices[i].conditioned[j];
            grad_cond[j] = ctx.pool_weights[i] * grad_pooled[j] + grad_logit * p.pool_w.data[j];
        }

        // split back into the visual embedding and the xi embedding
        std::vector<double> grad_embedding(grad_cond.begin(), grad_cond.begin() + 128);
        if (p.config.use_xi) {
            std::vector<double> grad_xi_embed(grad_cond.begin() + 128, grad_cond.end());
            std::vector<double> grad_xi;
            nn::linear_backward(ctx.slices[i].xi, p.xi_w, grad_xi_embed, grad_xi, grads.xi_w,
                                grads.xi_b);
        }

        const SliceContext& sc = ctx.slices[i];
        Tensor grad_scores({hq, wq});
        Tensor grad_features({128, hq, wq});
        nn::masked_softmax_sum_backward(sc.attention, sc.scores, sc.features, sc.mask_quarter,
                                        kAttentionEpsilon, grad_embedding, grad_scores,
                                        grad_features);

        // 1x1 scorer
        for (std::size_t cell = 0; cell < hw; ++cell) {
            const double g = grad_scores.data[cell];
            if (g == 0.0) continue;
            grads.score_b.data[0] += g;
            for (std::size_t c = 0; c < 128; ++c) {
                grads.score_w.data[c] += g * sc.features.data[c * hw + cell];
                grad_features.data[c * hw + cell] += g * p.score_w.data[c];
            }
        }
        std::copy(grad_features.data.begin(), grad_features.data.end(),
                  grad_features_batch.data.begin() + static_cast<std::ptrdiff_t>(i * 128 * hw));
    }

    // conv stack in reverse over the whole batch, pooling between blocks
    Tensor grad_current = std::move(grad_features_batch);
    for (int block = 2; block >= 0; --block) {
        for (int half = 1; half >= 0; --half) {
            const int layer = block * 2 + half;
            Tensor grad_pre(ctx.batch.conv_out[layer].shape);
            nn::relu_backward(ctx.batch.conv_out[layer], grad_current, grad_pre);
            const Tensor& layer_input = [&]() -> const Tensor& {
                if (half == 1) return ctx.batch.relu_out[layer - 1];
                if (block == 0) return ctx.batch.input;
                return block == 1 ? ctx.batch.pool1.output : ctx.batch.pool2.output;
            }();
            Tensor grad_input(layer_input.shape);
            nn::conv2d_backward_batch(layer_input, p.conv_w[layer], grad_pre, grad_input,
                                      grads.conv_w[layer], grads.conv_b[layer]);
            grad_current = std::move(grad_input);
        }
        if (block > 0) {
            const nn::PoolResult& pooled = block == 2 ? ctx.batch.pool2 : ctx.batch.pool1;
            const Tensor& pre_pool = ctx.batch.relu_out[block == 2 ? 3 : 1];
            Tensor grad_unpooled(pre_pool.shape);
            nn::maxpool2x2_backward(pooled, grad_current, grad_unpooled);
            grad_current = std::move(grad_unpooled);
        }
    }
    (void)slices;
}

}  // namespace

std::vector<std::pair<std::string, nn::Tensor*>> ModelParams::named_tensors() {
    std::vector<std::pair<std::string, nn::Tensor*>> out;
    const auto plan = layer_plan(config);
    const auto slots = tensor_slots(*this);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!slot_active(config, plan[i].name)) continue;
        out.emplace_back(plan[i].name, slots[i]);
    }
    return out;
}

std::vector<std::pair<std::string, const nn::Tensor*>> ModelParams::named_tensors() const {
    std::vector<std::pair<std::string, const nn::Tensor*>> out;
    for (auto& [name, tensor] : const_cast<ModelParams*>(this)->named_tensors())
        out.emplace_back(name, tensor);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, tensor] : named_tensors()) n += tensor->size();
    return n;
}

ModelParams init_parameters(const ModelConfig& config, std::uint64_t seed) {
    if (config.portfolio_size < 2) throw config_error("portfolio size must be >= 2");
    ModelParams params;
    params.config = config;
    const auto plan = layer_plan(config);
    const auto slots = tensor_slots(params);
    Rng root(seed);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!slot_active(config, plan[i].name)) continue;
        *slots[i] = Tensor(plan[i].shape);
        const bool is_bias = std::string(plan[i].name).ends_with(".b");
        if (is_bias) continue;  // biases start at zero
        Rng stream = root.split(i);
        const double bound = 1.0 / std::sqrt(static_cast<double>(plan[i].fan_in));
        for (double& v : slots[i]->data) v = stream.next_uniform(-bound, bound);
    }
    return params;
}

ModelParams make_zero_like(const ModelParams& params) {
    ModelParams zero;
    zero.config = params.config;
    const auto plan = layer_plan(params.config);
    const auto slots = tensor_slots(zero);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!slot_active(params.config, plan[i].name)) continue;
        *slots[i] = Tensor(plan[i].shape);
    }
    return zero;
}

std::vector<double> encode_slice(const ModelParams& params, const probing::Slice& slice) {
    SetContext ctx;
    encode_batch(params, {slice}, ctx);
    return ctx.slices[0].embedding;
}

std::vector<double> condition_slice(const ModelParams& params, const std::vector<double>& embedding,
                                    double scale, double value_range, double value_iqr) {
    if (!params.config.use_xi) return embedding;
    const auto xi = side_statistics(scale, value_range, value_iqr);
    const auto embed = nn::linear_forward(xi, params.xi_w, params.xi_b);
    std::vector<double> out = embedding;
    out.insert(out.end(), embed.begin(), embed.end());
    return out;
}

std::vector<double> aggregate(const ModelParams& params,
                              const std::vector<std::vector<double>>& conditioned, int dimension) {
    if (conditioned.empty()) throw input_error("aggregate: empty slice list");
    SetContext ctx;
    ctx.slices.resize(conditioned.size());
    for (std::size_t i = 0; i < conditioned.size(); ++i)
        ctx.slices[i].conditioned = conditioned[i];
    aggregate_ctx(params, dimension, ctx);
    return ctx.representation;
}

Prediction predict(const ModelParams& params, const probing::SliceSet& slices) {
    Rng dropout_rng(0);
    SetContext ctx;
    forward_set(params, slices, /*dropout_active=*/false, dropout_rng, ctx);
    return ctx.prediction;
}

double train_step_single(const ModelParams& params, const Datapoint& datapoint, double lambda_cls,
                         double grad_scale, bool dropout_active, Rng& dropout_rng,
                         ModelParams& grads) {
    SetContext ctx;
    forward_set(params, *datapoint.slices, dropout_active, dropout_rng, ctx);

    const auto reg_loss = nn::smooth_l1(ctx.prediction.regression, datapoint.log_relert);
    double loss = reg_loss.value;
    std::vector<double> grad_reg = reg_loss.grad;
    for (auto& g : grad_reg) g *= grad_scale;

    std::vector<double> grad_cat;
    if (params.config.use_cat_head) {
        const auto cat_loss =
            nn::bce_with_logits(*ctx.prediction.catastrophe_logits, datapoint.catastrophe);
        loss += lambda_cls * cat_loss.value;
        grad_cat = cat_loss.grad;
        for (auto& g : grad_cat) g *= lambda_cls * grad_scale;
    }

    backward_set(params, *datapoint.slices, ctx, grad_reg, grad_cat, dropout_active, grads);
    return loss;
}

TrainResult train(const std::vector<Datapoint>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
    if (dataset.empty()) throw config_error("train: empty dataset");
    for (const auto& dp : dataset) {
        if (dp.slices == nullptr) throw input_error("train: datapoint without slices");
        if (static_cast<int>(dp.log_relert.size()) != model_config.portfolio_size)
            throw input_error("train: label row width does not match the portfolio");
    }

    Rng root(train_config.seed);
    TrainResult result;
    result.params = init_parameters(model_config, root.split(0).state());
    Rng shuffle_rng = root.split(1);
    Rng dropout_rng = root.split(2);

    auto named = result.params.named_tensors();
    std::vector<Tensor*> param_ptrs;
    for (auto& [name, t] : named) param_ptrs.push_back(t);
    nn::AdamConfig adam_cfg;
    adam_cfg.learning_rate = train_config.learning_rate;
    nn::AdamState adam = nn::AdamState::for_params(param_ptrs, adam_cfg);

    ModelParams grads = make_zero_like(result.params);
    auto grad_named = grads.named_tensors();
    std::vector<const Tensor*> grad_ptrs;
    for (auto& [name, t] : grad_named) grad_ptrs.push_back(t);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    const int batch = std::max(1, train_config.batch_size);

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        // Fisher-Yates from the shuffle stream
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& [name, t] : grad_named) t->zero();
            double batch_loss = 0.0;
            for (std::size_t idx = start; idx < end; ++idx) {
                batch_loss += scale * train_step_single(result.params, dataset[order[idx]],
                                                        train_config.lambda_cls, scale,
                                                        train_config.dropout_enabled, dropout_rng,
                                                        grads);
            }
            nn::adam_step(param_ptrs, grad_ptrs, adam);
            epoch_loss += batch_loss;
            ++batches;
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

void save_model(const ModelParams& params, std::uint64_t rng_state, const std::string& path) {
    nn::Checkpoint ckpt;
    ckpt.rng_state = rng_state;
    // leading config record so ablated checkpoints restore their own layout
    Tensor meta({5});
    meta.data = {static_cast<double>(params.config.portfolio_size),
                 params.config.use_xi ? 1.0 : 0.0, params.config.use_dim ? 1.0 : 0.0,
                 params.config.use_cat_head ? 1.0 : 0.0, params.config.dropout_rate};
    ckpt.tensors.emplace_back("__config__", std::move(meta));
    for (const auto& [name, tensor] : params.named_tensors())
        ckpt.tensors.emplace_back(name, *tensor);
    nn::save_checkpoint(ckpt, path);
}

std::pair<ModelParams, std::uint64_t> load_model(const std::string& path) {
    const nn::Checkpoint ckpt = nn::load_checkpoint(path);
    if (ckpt.tensors.empty() || ckpt.tensors[0].first != "__config__")
        throw data_error("model checkpoint missing config record");
    const auto& meta = ckpt.tensors[0].second.data;
    ModelConfig config;
    config.portfolio_size = static_cast<int>(meta[0]);
    config.use_xi = meta[1] != 0.0;
    config.use_dim = meta[2] != 0.0;
    config.use_cat_head = meta[3] != 0.0;
    config.dropout_rate = meta[4];

    ModelParams params;
    params.config = config;
    auto named = params.named_tensors();
    if (named.size() != ckpt.tensors.size() - 1)
        throw data_error("model checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto& [name, stored] = ckpt.tensors[i + 1];
        if (name != named[i].first) throw data_error("model checkpoint tensor order mismatch");
        *named[i].second = stored;
    }
    return {std::move(params), ckpt.rng_state};
}

}  // namespace geopas::model
