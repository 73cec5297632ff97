#include "geopas/nn.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace geopas::nn {

namespace {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

// 64-byte-aligned scratch for every GEMM operand.  SIMD kernels pick code
// paths by runtime pointer alignment; keeping one alignment class makes the
// reductions bit-identical across calls.
class AlignedBuffer {
  public:
    explicit AlignedBuffer(std::size_t count)
        : ptr_(static_cast<double*>(::operator new(count * sizeof(double),
                                                   std::align_val_t(64)))),
          count_(count) {}
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
    ~AlignedBuffer() { ::operator delete(ptr_, std::align_val_t(64)); }

    double* data() { return ptr_; }
    const double* data() const { return ptr_; }
    std::size_t size() const { return count_; }
    void zero() { std::fill(ptr_, ptr_ + count_, 0.0); }

  private:
    double* ptr_;
    std::size_t count_;
};

void check_conv_shapes(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.shape.size() != 3 || weight.shape.size() != 4 || bias.shape.size() != 1)
        throw input_error("conv2d: expected input [C,H,W], weight [Co,Ci,3,3], bias [Co]");
    if (weight.shape[2] != 3 || weight.shape[3] != 3)
        throw input_error("conv2d: kernel must be 3x3");
    if (weight.shape[1] != input.shape[0])
        throw input_error("conv2d: channel mismatch between input and kernels");
    if (bias.shape[0] != weight.shape[0]) throw input_error("conv2d: bias/kernel mismatch");
}

// im2col for 3x3 / pad 1 / stride 1 over N stacked maps:
// (Cin*9) x (N*H*W), row-major; sample n occupies columns [n*HW, (n+1)*HW)
void im2col(const double* input, std::size_t n_maps, std::size_t cin, std::size_t h,
            std::size_t w, AlignedBuffer& col) {
    const std::size_t hw = h * w;
    const std::size_t cols = n_maps * hw;
    col.zero();
    for (std::size_t n = 0; n < n_maps; ++n) {
        const double* map = input + n * cin * hw;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* chan = map + ci * hw;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double* row = col.data() +
                                  ((ci * 9) + static_cast<std::size_t>(ky * 3 + kx)) * cols +
                                  n * hw;
                    for (std::size_t y = 0; y < h; ++y) {
                        const long sy = static_cast<long>(y) + ky - 1;
                        if (sy < 0 || sy >= static_cast<long>(h)) continue;
                        const std::size_t x_lo = kx == 0 ? 1 : 0;
                        const std::size_t x_hi = kx == 2 ? w - 1 : w;
                        const double* src = chan + static_cast<std::size_t>(sy) * w;
                        double* dst = row + y * w;
                        for (std::size_t x = x_lo; x < x_hi; ++x)
                            dst[x] = src[x + static_cast<std::size_t>(kx) - 1];
                    }
                }
            }
        }
    }
}

void col2im_accumulate(const AlignedBuffer& col, std::size_t n_maps, std::size_t cin,
                       std::size_t h, std::size_t w, double* grad_input) {
    const std::size_t hw = h * w;
    const std::size_t cols = n_maps * hw;
    for (std::size_t n = 0; n < n_maps; ++n) {
        double* map = grad_input + n * cin * hw;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            double* chan = map + ci * hw;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double* row = col.data() +
                                        ((ci * 9) + static_cast<std::size_t>(ky * 3 + kx)) * cols +
                                        n * hw;
                    for (std::size_t y = 0; y < h; ++y) {
                        const long sy = static_cast<long>(y) + ky - 1;
                        if (sy < 0 || sy >= static_cast<long>(h)) continue;
                        const std::size_t x_lo = kx == 0 ? 1 : 0;
                        const std::size_t x_hi = kx == 2 ? w - 1 : w;
                        double* dst = chan + static_cast<std::size_t>(sy) * w;
                        const double* src = row + y * w;
                        for (std::size_t x = x_lo; x < x_hi; ++x)
                            dst[x + static_cast<std::size_t>(kx) - 1] += src[x];
                    }
                }
            }
        }
    }
}

Tensor conv_forward_impl(const Tensor& input, const Tensor& weight, const Tensor& bias,
                         std::size_t n_maps, std::size_t cin, std::size_t h, std::size_t w) {
    const std::size_t cout = weight.shape[0];
    const std::size_t hw = h * w;
    const std::size_t cols = n_maps * hw;

    AlignedBuffer col(cin * 9 * cols);
    im2col(input.ptr(), n_maps, cin, h, w, col);
    AlignedBuffer weight_buf(weight.size());
    std::copy(weight.data.begin(), weight.data.end(), weight_buf.data());

    std::vector<std::size_t> out_shape = input.shape;
    out_shape[out_shape.size() == 4 ? 1 : 0] = cout;
    Tensor out(out_shape);

    ConstMapRM weight_mat(weight_buf.data(), static_cast<long>(cout), static_cast<long>(cin * 9));
    ConstMapRM col_mat(col.data(), static_cast<long>(cin * 9), static_cast<long>(cols));
    // per-map output is [Cout, HW]; write through a strided loop per map
    AlignedBuffer out_flat(cout * cols);
    MapRM out_mat(out_flat.data(), static_cast<long>(cout), static_cast<long>(cols));
    out_mat.noalias() = weight_mat * col_mat;
    for (std::size_t n = 0; n < n_maps; ++n)
        for (std::size_t co = 0; co < cout; ++co) {
            const double* src = out_flat.data() + co * cols + n * hw;
            double* dst = out.ptr() + n * cout * hw + co * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + bias.data[co];
        }
    return out;
}

void conv_backward_impl(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                        Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias,
                        std::size_t n_maps, std::size_t cin, std::size_t h, std::size_t w) {
    const std::size_t cout = weight.shape[0];
    const std::size_t hw = h * w;
    const std::size_t cols = n_maps * hw;

    AlignedBuffer col(cin * 9 * cols);
    im2col(input.ptr(), n_maps, cin, h, w, col);
    AlignedBuffer weight_buf(weight.size());
    std::copy(weight.data.begin(), weight.data.end(), weight_buf.data());

    // regroup grad_output [N,Cout,H,W] into [Cout, N*HW]
    AlignedBuffer gout_flat(cout * cols);
    for (std::size_t n = 0; n < n_maps; ++n)
        for (std::size_t co = 0; co < cout; ++co) {
            const double* src = grad_output.ptr() + n * cout * hw + co * hw;
            double* dst = gout_flat.data() + co * cols + n * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i];
        }

    ConstMapRM gout_mat(gout_flat.data(), static_cast<long>(cout), static_cast<long>(cols));
    ConstMapRM col_mat(col.data(), static_cast<long>(cin * 9), static_cast<long>(cols));
    AlignedBuffer gw_buf(grad_weight.size());
    gw_buf.zero();
    MapRM gw_mat(gw_buf.data(), static_cast<long>(cout), static_cast<long>(cin * 9));
    gw_mat.noalias() = gout_mat * col_mat.transpose();
    for (std::size_t i = 0; i < grad_weight.size(); ++i) grad_weight.data[i] += gw_buf.data()[i];

    for (std::size_t co = 0; co < cout; ++co)
        grad_bias.data[co] += gout_mat.row(static_cast<long>(co)).sum();

    AlignedBuffer gcol(cin * 9 * cols);
    MapRM gcol_mat(gcol.data(), static_cast<long>(cin * 9), static_cast<long>(cols));
    ConstMapRM weight_mat(weight_buf.data(), static_cast<long>(cout), static_cast<long>(cin * 9));
    gcol_mat.noalias() = weight_mat.transpose() * gout_mat;
    col2im_accumulate(gcol, n_maps, cin, h, w, grad_input.ptr());
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    check_conv_shapes(input, weight, bias);
    return conv_forward_impl(input, weight, bias, 1, input.shape[0], input.shape[1],
                             input.shape[2]);
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias) {
    check_conv_shapes(input, weight, grad_bias);
    conv_backward_impl(input, weight, grad_output, grad_input, grad_weight, grad_bias, 1,
                       input.shape[0], input.shape[1], input.shape[2]);
}

Tensor conv2d_forward_batch(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.shape.size() != 4) throw input_error("conv2d batch: expected [N,C,H,W]");
    if (weight.shape[1] != input.shape[1])
        throw input_error("conv2d batch: channel mismatch between input and kernels");
    return conv_forward_impl(input, weight, bias, input.shape[0], input.shape[1], input.shape[2],
                             input.shape[3]);
}

void conv2d_backward_batch(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                           Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias) {
    if (input.shape.size() != 4) throw input_error("conv2d batch: expected [N,C,H,W]");
    conv_backward_impl(input, weight, grad_output, grad_input, grad_weight, grad_bias,
                       input.shape[0], input.shape[1], input.shape[2], input.shape[3]);
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

void relu_backward(const Tensor& input, const Tensor& grad_output, Tensor& grad_input) {
    for (std::size_t i = 0; i < input.size(); ++i)
        grad_input.data[i] += input.data[i] > 0.0 ? grad_output.data[i] : 0.0;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
    if (input.shape.size() != 3) throw input_error("maxpool2x2: expected [C,H,W]");
    const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (h % 2 != 0 || w % 2 != 0) throw input_error("maxpool2x2: odd spatial extent");

    PoolResult res;
    res.output = Tensor({c, h / 2, w / 2});
    res.argmax.resize(res.output.size());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t y = 0; y < h / 2; ++y) {
            for (std::size_t x = 0; x < w / 2; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                // strict > keeps the first occurrence on ties
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ci * h * w + (2 * y + dy) * w + (2 * x + dx);
                        if (input.data[idx] > best) {
                            best = input.data[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t out_idx = ci * (h / 2) * (w / 2) + y * (w / 2) + x;
                res.output.data[out_idx] = best;
                res.argmax[out_idx] = best_idx;
            }
        }
    }
    return res;
}

void maxpool2x2_backward(const PoolResult& pooled, const Tensor& grad_output,
                         Tensor& grad_input) {
    for (std::size_t i = 0; i < pooled.argmax.size(); ++i)
        grad_input.data[pooled.argmax[i]] += grad_output.data[i];
}

Tensor maxpool2x2_mask(const Tensor& mask) {
    if (mask.shape.size() != 2) throw input_error("maxpool2x2_mask: expected [H,W]");
    const std::size_t h = mask.shape[0], w = mask.shape[1];
    if (h % 2 != 0 || w % 2 != 0) throw input_error("maxpool2x2_mask: odd spatial extent");
    Tensor out({h / 2, w / 2});
    for (std::size_t y = 0; y < h / 2; ++y)
        for (std::size_t x = 0; x < w / 2; ++x) {
            double m = 0.0;
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx)
                    m = std::max(m, mask.data[(2 * y + dy) * w + (2 * x + dx)]);
            out.data[y * (w / 2) + x] = m;
        }
    return out;
}

MaskedSoftmaxResult masked_softmax_sum_forward(const Tensor& scores, const Tensor& features,
                                               const Tensor& mask, double eps) {
    const std::size_t hw = scores.size();
    const std::size_t c = features.shape[0];
    if (features.size() != c * hw || mask.size() != hw)
        throw input_error("masked_softmax_sum: shape mismatch");

    MaskedSoftmaxResult res;
    res.output.assign(c, 0.0);
    res.weights.assign(hw, 0.0);

    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hw; ++i)
        if (mask.data[i] > 0.0) max_score = std::max(max_score, scores.data[i]);

    if (!std::isfinite(max_score)) {
        // fully truncated slice: unmasked uniform feature average
        res.fallback = true;
        const double inv = 1.0 / static_cast<double>(hw);
        for (std::size_t ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i) acc += features.data[ch * hw + i];
            res.output[ch] = acc * inv;
        }
        return res;
    }

    // shifted exponentials; the eps term is rescaled into the shifted frame so
    // the result equals the unshifted formula
    double denom = eps * std::exp(std::min(-max_score, 700.0));
    for (std::size_t i = 0; i < hw; ++i) {
        if (mask.data[i] > 0.0) {
            res.weights[i] = std::exp(scores.data[i] - max_score);
            denom += res.weights[i];
        }
    }
    for (std::size_t i = 0; i < hw; ++i) res.weights[i] /= denom;
    for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += res.weights[i] * features.data[ch * hw + i];
        res.output[ch] = acc;
    }
    return res;
}

void masked_softmax_sum_backward(const MaskedSoftmaxResult& ctx, const Tensor& /*scores*/,
                                 const Tensor& features, const Tensor& mask, double /*eps*/,
                                 const std::vector<double>& grad_output, Tensor& grad_scores,
                                 Tensor& grad_features) {
    const std::size_t hw = mask.size();
    const std::size_t c = features.shape[0];

    if (ctx.fallback) {
        const double inv = 1.0 / static_cast<double>(hw);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < hw; ++i)
                grad_features.data[ch * hw + i] += grad_output[ch] * inv;
        return;  // scores receive no gradient through the fallback
    }

    // v_i = g . T(:,i); dL/ds_i = alpha_i (v_i - sum_j alpha_j v_j)
    std::vector<double> v(hw, 0.0);
    double weighted_v = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
        double acc = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) acc += grad_output[ch] * features.data[ch * hw + i];
        v[i] = acc;
        weighted_v += ctx.weights[i] * acc;
    }
    for (std::size_t i = 0; i < hw; ++i) {
        if (mask.data[i] > 0.0) grad_scores.data[i] += ctx.weights[i] * (v[i] - weighted_v);
        for (std::size_t ch = 0; ch < c; ++ch)
            grad_features.data[ch * hw + i] += ctx.weights[i] * grad_output[ch];
    }
}

std::vector<double> linear_forward(const std::vector<double>& x, const Tensor& weight,
                                   const Tensor& bias) {
    if (weight.shape.size() != 2 || weight.shape[1] != x.size() ||
        bias.shape[0] != weight.shape[0])
        throw input_error("linear: shape mismatch");
    const std::size_t m = weight.shape[0], n = weight.shape[1];
    std::vector<double> y(m);
    for (std::size_t row = 0; row < m; ++row) {
        double acc = bias.data[row];
        const double* wr = weight.ptr() + row * n;
        for (std::size_t col = 0; col < n; ++col) acc += wr[col] * x[col];
        y[row] = acc;
    }
    return y;
}

void linear_backward(const std::vector<double>& x, const Tensor& weight,
                     const std::vector<double>& grad_output, std::vector<double>& grad_x,
                     Tensor& grad_weight, Tensor& grad_bias) {
    const std::size_t m = weight.shape[0], n = weight.shape[1];
    grad_x.assign(n, 0.0);
    for (std::size_t row = 0; row < m; ++row) {
        const double g = grad_output[row];
        grad_bias.data[row] += g;
        const double* wr = weight.ptr() + row * n;
        double* gw = grad_weight.ptr() + row * n;
        for (std::size_t col = 0; col < n; ++col) {
            gw[col] += g * x[col];
            grad_x[col] += g * wr[col];
        }
    }
}

DropoutResult dropout_forward(const std::vector<double>& x, double rate, bool train, Rng& rng) {
    DropoutResult res;
    res.output = x;
    res.kept.assign(x.size(), 1);
    if (!train || rate <= 0.0) return res;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.next_double() < rate) {
            res.output[i] = 0.0;
            res.kept[i] = 0;
        } else {
            res.output[i] = x[i] * keep_scale;
        }
    }
    return res;
}

std::vector<double> dropout_backward(const DropoutResult& ctx, double rate, bool train,
                                     const std::vector<double>& grad_output) {
    std::vector<double> grad = grad_output;
    if (!train || rate <= 0.0) return grad;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = ctx.kept[i] ? grad[i] * keep_scale : 0.0;
    return grad;
}

LossResult smooth_l1(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw input_error("smooth_l1: length mismatch");
    LossResult res;
    res.grad.assign(pred.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        if (std::fabs(e) < 1.0) {
            res.value += 0.5 * e * e * inv_n;
            res.grad[i] = e * inv_n;
        } else {
            res.value += (std::fabs(e) - 0.5) * inv_n;
            res.grad[i] = (e > 0.0 ? 1.0 : -1.0) * inv_n;
        }
    }
    return res;
}

LossResult bce_with_logits(const std::vector<double>& logits, const std::vector<double>& labels) {
    if (logits.size() != labels.size()) throw input_error("bce_with_logits: length mismatch");
    LossResult res;
    res.grad.assign(logits.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits[i];
        const double y = labels[i];
        res.value += (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::fabs(x)))) * inv_n;
        const double sigma = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                      : std::exp(x) / (1.0 + std::exp(x));
        res.grad[i] = (sigma - y) * inv_n;
    }
    return res;
}

AdamState AdamState::for_params(const std::vector<Tensor*>& params, const AdamConfig& cfg) {
    AdamState state;
    state.config = cfg;
    for (const Tensor* p : params) {
        state.first_moment.emplace_back(p->shape);
        state.second_moment.emplace_back(p->shape);
    }
    return state;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw input_error("adam_step: parameter/gradient mismatch");
    state.step += 1;
    const auto& cfg = state.config;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const Tensor& g = *grads[t];
        Tensor& m = state.first_moment[t];
        Tensor& v = state.second_moment[t];
        if (g.size() != p.size()) throw input_error("adam_step: shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bias1;
            const double vhat = v.data[i] / bias2;
            p.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// checkpoint container: "GPCK" | u32 version | u64 rng state | u32 count |
// per tensor: u32 name_len, name, u32 ndim, u64 dims..., f64 data...
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'G', 'P', 'C', 'K'};

template <typename T>
void put(std::vector<std::uint8_t>& out, const T& value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw data_error("checkpoint truncated");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCkptMagic, kCkptMagic + 4);
    put(out, ckpt.version);
    put(out, ckpt.rng_state);
    put(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        put(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put(out, static_cast<std::uint32_t>(tensor.shape.size()));
        for (std::size_t dim : tensor.shape) put(out, static_cast<std::uint64_t>(dim));
        for (double v : tensor.data) put(out, v);
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCkptMagic, 4) != 0)
        throw data_error("not a checkpoint container");
    pos = 4;
    Checkpoint ckpt;
    ckpt.version = take<std::uint32_t>(bytes, pos);
    if (ckpt.version != 1) throw data_error("unsupported checkpoint version");
    ckpt.rng_state = take<std::uint64_t>(bytes, pos);
    const auto count = take<std::uint32_t>(bytes, pos);
    ckpt.tensors.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto name_len = take<std::uint32_t>(bytes, pos);
        if (pos + name_len > bytes.size()) throw data_error("checkpoint truncated");
        std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + name_len));
        pos += name_len;
        const auto ndim = take<std::uint32_t>(bytes, pos);
        std::vector<std::size_t> shape(ndim);
        for (auto& dim : shape) dim = static_cast<std::size_t>(take<std::uint64_t>(bytes, pos));
        Tensor tensor(shape);
        for (auto& v : tensor.data) v = take<double>(bytes, pos);
        ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace geopas::nn
