#ifndef GEOPAS_MODEL_HPP
#define GEOPAS_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geopas/nn.hpp"
#include "geopas/probing.hpp"

namespace geopas::model {

// Architecture switches.  The conditioned and final representation widths
// adapt to the ablation flags; the full model is 128 + 16 + 1 = 145 wide.
struct ModelConfig {
    int portfolio_size = 12;
    bool use_xi = true;        // slice-statistic conditioning branch
    bool use_dim = true;       // ambient-dimension conditioning branch
    bool use_cat_head = true;  // catastrophe head
    double dropout_rate = 0.2;

    int conditioned_dim() const { return 128 + (use_xi ? 16 : 0); }
    int representation_dim() const { return conditioned_dim() + (use_dim ? 1 : 0); }
};

inline constexpr double kSideStatEpsilon = 1e-6;  // log(delta + eps), log(iqr + eps)
inline constexpr double kAttentionEpsilon = 1e-8;
inline constexpr int kHeadHiddenWidth = 128;

// Encoder channel plan: 1 -> 32 -> 64 -> 128, two 3x3 convs per block,
// 2x2 max-pooling after the first two blocks.
inline constexpr std::size_t kEncoderChannels[4] = {1, 32, 64, 128};

struct ModelParams {
    ModelConfig config;

    nn::Tensor conv_w[6];
    nn::Tensor conv_b[6];
    nn::Tensor score_w, score_b;  // 1x1 spatial attention scorer on 128 channels
    nn::Tensor xi_w, xi_b;        // side-statistic embedder, 3 -> 16
    nn::Tensor pool_w, pool_b;    // slice-pool scorer on the conditioned embedding
    nn::Tensor dim_w, dim_b;      // dimension embedder, 1 -> 1
    nn::Tensor reg1_w, reg1_b, reg2_w, reg2_b;
    nn::Tensor cat1_w, cat1_b, cat2_w, cat2_b;

    std::vector<std::pair<std::string, nn::Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const nn::Tensor*>> named_tensors() const;
    std::size_t parameter_count() const;
};

ModelParams init_parameters(const ModelConfig& config, std::uint64_t seed);

// zero-valued gradient buffers with the same tensor layout
ModelParams make_zero_like(const ModelParams& params);

struct Prediction {
    std::vector<double> regression;
    std::optional<std::vector<double>> catastrophe_logits;
};

// spec'd sub-steps, exposed for direct testing
std::vector<double> encode_slice(const ModelParams& params, const probing::Slice& slice);
std::vector<double> condition_slice(const ModelParams& params, const std::vector<double>& embedding,
                                    double scale, double value_range, double value_iqr);
std::vector<double> aggregate(const ModelParams& params,
                              const std::vector<std::vector<double>>& conditioned, int dimension);

// full inference pass, dropout inactive
Prediction predict(const ModelParams& params, const probing::SliceSet& slices);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double lambda_cls = 10.0;
    std::uint64_t seed = 1;
    bool dropout_enabled = true;
};

struct Datapoint {
    const probing::SliceSet* slices = nullptr;
    std::vector<double> log_relert;    // regression targets, log of capped relERT
    std::vector<double> catastrophe;   // 0/1 cap-imputation labels
};

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_trace;  // mean joint loss per epoch
};

TrainResult train(const std::vector<Datapoint>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config);

// One forward/backward on a single datapoint, accumulating into `grads`
// (scaled by `grad_scale`); returns the joint loss.  Exposed for the
// gradient-check suite.
double train_step_single(const ModelParams& params, const Datapoint& datapoint, double lambda_cls,
                         double grad_scale, bool dropout_active, Rng& dropout_rng,
                         ModelParams& grads);

// checkpoint round trip (bit-exact, via the nn container)
void save_model(const ModelParams& params, std::uint64_t rng_state, const std::string& path);
std::pair<ModelParams, std::uint64_t> load_model(const std::string& path);

}  // namespace geopas::model

#endif
