#ifndef GEOPAS_NN_HPP
#define GEOPAS_NN_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geopas/common.hpp"

namespace geopas::nn {

// Dense row-major tensor of 64-bit floats.  All kernels below run in double
// precision with fixed reduction order, so forward and backward passes are
// bit-reproducible for identical inputs.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(element_count(shape), 0.0);
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) n *= e;
        return n;
    }

    std::size_t size() const { return data.size(); }
    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// --- 3x3 convolution, stride 1, zero padding 1 -----------------------------

// input [Cin,H,W], weight [Cout,Cin,3,3], bias [Cout] -> [Cout,H,W]
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

// accumulates into the gradient tensors
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias);

// batched variants over N independent maps, [N,Cin,H,W] -> [N,Cout,H,W];
// one im2col + GEMM per call, which is what makes slice-set training cheap
Tensor conv2d_forward_batch(const Tensor& input, const Tensor& weight, const Tensor& bias);
void conv2d_backward_batch(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                           Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias);

// --- ReLU -------------------------------------------------------------------

Tensor relu_forward(const Tensor& input);
void relu_backward(const Tensor& input, const Tensor& grad_output, Tensor& grad_input);

// --- 2x2 max pooling, stride 2 ----------------------------------------------

struct PoolResult {
    Tensor output;                    // [C, H/2, W/2]
    std::vector<std::size_t> argmax;  // flat input index per output cell
};

PoolResult maxpool2x2_forward(const Tensor& input);
void maxpool2x2_backward(const PoolResult& pooled, const Tensor& grad_output,
                         Tensor& grad_input);

// mask propagation: a coarse cell stays valid if any fine cell is valid
Tensor maxpool2x2_mask(const Tensor& mask);

// --- masked spatial attention pooling ----------------------------------------

struct MaskedSoftmaxResult {
    std::vector<double> output;   // [C]
    std::vector<double> weights;  // [H*W], zero on masked cells
    bool fallback = false;        // all-invalid mask -> uniform feature average
};

// weights alpha = M exp(score) / (sum_valid exp(score) + eps); the all-invalid
// case falls back to an unmasked uniform average so downstream gradients
// never vanish on fully truncated slices.
MaskedSoftmaxResult masked_softmax_sum_forward(const Tensor& scores, const Tensor& features,
                                               const Tensor& mask, double eps = 1e-8);

void masked_softmax_sum_backward(const MaskedSoftmaxResult& ctx, const Tensor& scores,
                                 const Tensor& features, const Tensor& mask, double eps,
                                 const std::vector<double>& grad_output, Tensor& grad_scores,
                                 Tensor& grad_features);

// --- affine map ---------------------------------------------------------------

// x [n], weight [m,n], bias [m] -> [m]
std::vector<double> linear_forward(const std::vector<double>& x, const Tensor& weight,
                                   const Tensor& bias);
void linear_backward(const std::vector<double>& x, const Tensor& weight,
                     const std::vector<double>& grad_output, std::vector<double>& grad_x,
                     Tensor& grad_weight, Tensor& grad_bias);

// --- dropout -------------------------------------------------------------------

struct DropoutResult {
    std::vector<double> output;
    std::vector<std::uint8_t> kept;
};

// inverted dropout: survivors are rescaled by 1/(1-p); identity when !train
DropoutResult dropout_forward(const std::vector<double>& x, double rate, bool train, Rng& rng);
std::vector<double> dropout_backward(const DropoutResult& ctx, double rate, bool train,
                                     const std::vector<double>& grad_output);

// --- losses ----------------------------------------------------------------------

struct LossResult {
    double value = 0.0;
    std::vector<double> grad;  // w.r.t. predictions / logits
};

// mean SmoothL1 with threshold beta = 1
LossResult smooth_l1(const std::vector<double>& pred, const std::vector<double>& target);

// mean BCE on logits, numerically stable for large |logit|
LossResult bce_with_logits(const std::vector<double>& logits, const std::vector<double>& labels);

// --- Adam -------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    long step = 0;

    static AdamState for_params(const std::vector<Tensor*>& params, const AdamConfig& cfg);
};

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

// --- checkpoint container -----------------------------------------------------------

// Flat container of named tensors, bit-exact on round trip.
struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t rng_state = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace geopas::nn

#endif
