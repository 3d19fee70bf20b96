#ifndef AAPU_NET_HPP
#define AAPU_NET_HPP

/// Minimal feed-forward network g(x;theta): dense layers, ReLU, optional
/// batch normalization and dropout on hidden layers, hand-written
/// backpropagation, Adam with L2-coupled weight decay. Double precision
/// throughout.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aapu/common.hpp"

namespace aapu {

enum class Mode { Train, Eval };

struct MlpSpec {
    std::vector<int> layer_dims;        // input dim first, 1 last
    std::vector<bool> use_batchnorm;    // one flag per hidden layer
    std::vector<double> dropout_rates;  // one rate in [0,1) per hidden layer
    std::uint64_t seed = 0;

    int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
    int num_hidden() const { return num_layers() - 1; }

    static MlpSpec make(std::vector<int> dims, bool batchnorm, double dropout,
                        std::uint64_t seed) {
        MlpSpec s;
        s.layer_dims = std::move(dims);
        const int h = std::max<int>(0, static_cast<int>(s.layer_dims.size()) - 2);
        s.use_batchnorm.assign(h, batchnorm);
        s.dropout_rates.assign(h, dropout);
        s.seed = seed;
        return s;
    }

    void validate() const {
        if (layer_dims.size() < 2)
            throw ConfigError("MlpSpec: need at least input and output dims");
        if (layer_dims.back() != 1)
            throw ConfigError("MlpSpec: output dim must be 1 (scalar score)");
        for (int d : layer_dims)
            if (d <= 0) throw ConfigError("MlpSpec: non-positive layer dim");
        if (static_cast<int>(use_batchnorm.size()) != num_hidden() ||
            static_cast<int>(dropout_rates.size()) != num_hidden())
            throw ConfigError("MlpSpec: per-hidden-layer flags sized wrong");
        for (double r : dropout_rates)
            if (r < 0.0 || r >= 1.0)
                throw ConfigError("MlpSpec: dropout rate must be in [0,1)");
    }
};

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

struct LinearParams {
    Matrix weight;  // out x in
    Vector bias;    // out
};

struct BatchNormParams {
    Vector scale;         // gamma
    Vector shift;         // beta
    Vector running_mean;
    Vector running_var;
};

struct MlpParams {
    MlpSpec spec;
    std::vector<LinearParams> linear;                  // num_layers
    std::vector<std::optional<BatchNormParams>> bn;    // num_hidden
};

struct BatchNormGrads {
    Vector dscale;
    Vector dshift;
};

struct MlpGrads {
    std::vector<LinearParams> linear;                  // reuse shape
    std::vector<std::optional<BatchNormGrads>> bn;
};

struct LayerCache {
    Matrix input;       // activations entering the layer (n x in)
    Matrix pre_bn;      // linear output
    Matrix xhat;        // normalized pre-activation (bn layers only)
    Vector batch_mean, inv_std;
    Matrix pre_relu;    // after bn (or == pre_bn), before ReLU
    Matrix dropout_mask;  // already divided by keep prob; empty if unused
};

struct ForwardCache {
    Mode mode = Mode::Eval;
    Eigen::Index batch_size = 0;
    std::vector<LayerCache> layers;
    const MlpParams* owner = nullptr;
};

inline MlpParams init(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    std::mt19937_64 rng(spec.seed);
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int in = spec.layer_dims[l];
        const int out = spec.layer_dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        LinearParams lp;
        lp.weight.resize(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) lp.weight(i, j) = dist(rng);
        lp.bias = Vector::Zero(out);
        p.linear.push_back(std::move(lp));
    }
    for (int l = 0; l < spec.num_hidden(); ++l) {
        if (spec.use_batchnorm[l]) {
            const int d = spec.layer_dims[l + 1];
            BatchNormParams b;
            b.scale = Vector::Ones(d);
            b.shift = Vector::Zero(d);
            b.running_mean = Vector::Zero(d);
            b.running_var = Vector::Ones(d);
            p.bn.emplace_back(std::move(b));
        } else {
            p.bn.emplace_back(std::nullopt);
        }
    }
    return p;
}

/// Forward pass over a batch (rows are samples). Train mode uses batch
/// statistics, updates running stats and applies dropout (rng required
/// when any dropout rate is positive); Eval mode uses running stats only.
inline Vector forward(MlpParams& params, const Matrix& inputs, Mode mode,
                      ForwardCache* cache = nullptr,
                      std::mt19937_64* rng = nullptr) {
    const MlpSpec& spec = params.spec;
    if (inputs.cols() != spec.layer_dims.front())
        throw ShapeError("forward: input dim " + std::to_string(inputs.cols()) +
                         " != spec dim " + std::to_string(spec.layer_dims.front()));
    const Eigen::Index n = inputs.rows();
    bool any_bn = false;
    for (bool b : spec.use_batchnorm) any_bn |= b;
    if (mode == Mode::Train && any_bn && n < 2)
        throw ShapeError("forward: Train-mode batch of size " + std::to_string(n) +
                         " with batch norm enabled");
    if (cache) {
        cache->mode = mode;
        cache->batch_size = n;
        cache->layers.assign(spec.num_layers(), LayerCache{});
        cache->owner = &params;
    }

    Matrix a = inputs;
    for (int l = 0; l < spec.num_layers(); ++l) {
        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        if (lc) lc->input = a;
        Matrix z = a * params.linear[l].weight.transpose();
        z.rowwise() += params.linear[l].bias.transpose();
        if (l == spec.num_layers() - 1) {
            a = std::move(z);  // output layer is linear
            if (lc) lc->pre_relu = a;
            break;
        }
        if (lc) lc->pre_bn = z;
        if (params.bn[l]) {
            BatchNormParams& b = *params.bn[l];
            Vector mean, inv_std;
            Matrix xhat;
            if (mode == Mode::Train) {
                mean = z.colwise().mean().transpose();
                Matrix centered = z.rowwise() - mean.transpose();
                Vector var = centered.array().square().colwise().mean().transpose();
                inv_std = (var.array() + kBatchNormEps).rsqrt();
                xhat = (centered.array().rowwise() * inv_std.transpose().array()).matrix();
                b.running_mean = (1.0 - kBatchNormMomentum) * b.running_mean +
                                 kBatchNormMomentum * mean;
                b.running_var = (1.0 - kBatchNormMomentum) * b.running_var +
                                kBatchNormMomentum * var;
            } else {
                mean = b.running_mean;
                inv_std = (b.running_var.array() + kBatchNormEps).rsqrt();
                xhat = ((z.rowwise() - mean.transpose()).array().rowwise() *
                        inv_std.transpose().array()).matrix();
            }
            z = (xhat.array().rowwise() * b.scale.transpose().array()).matrix();
            z.rowwise() += b.shift.transpose();
            if (lc) {
                lc->xhat = std::move(xhat);
                lc->batch_mean = std::move(mean);
                lc->inv_std = std::move(inv_std);
            }
        }
        if (lc) lc->pre_relu = z;
        a = z.cwiseMax(0.0);  // ReLU
        const double rate = spec.dropout_rates[l];
        if (mode == Mode::Train && rate > 0.0) {
            if (!rng)
                throw ContractError("forward: dropout requires an rng in Train mode");
            const double keep = 1.0 - rate;
            std::bernoulli_distribution coin(keep);
            Matrix mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < mask.rows(); ++i)
                for (Eigen::Index j = 0; j < mask.cols(); ++j)
                    mask(i, j) = coin(*rng) ? 1.0 / keep : 0.0;
            a = a.cwiseProduct(mask);
            if (lc) lc->dropout_mask = std::move(mask);
        }
    }
    return a.col(0);
}

inline Vector eval_scores(const MlpParams& params, const Matrix& inputs) {
    // Eval mode never mutates params; the const_cast is confined here.
    return forward(const_cast<MlpParams&>(params), inputs, Mode::Eval);
}

/// Reverse-mode gradients of sum_i dscore[i] * score[i] w.r.t. every
/// parameter, including the batch-statistics pathway of batch norm.
inline MlpGrads backward(const MlpParams& params, const ForwardCache& cache,
                         const Vector& dscore) {
    const MlpSpec& spec = params.spec;
    if (cache.owner != &params || cache.mode != Mode::Train)
        throw ContractError("backward: cache is stale or not from a Train forward");
    if (dscore.size() != cache.batch_size)
        throw ShapeError("backward: dscore length != batch size");

    MlpGrads g;
    g.linear.resize(spec.num_layers());
    g.bn.assign(spec.num_hidden(), std::nullopt);

    const Eigen::Index n = cache.batch_size;
    Matrix da = dscore;  // n x 1, gradient w.r.t. network output
    for (int l = spec.num_layers() - 1; l >= 0; --l) {
        const LayerCache& lc = cache.layers[l];
        Matrix dz;
        if (l == spec.num_layers() - 1) {
            dz = std::move(da);
        } else {
            if (lc.dropout_mask.size() > 0) da = da.cwiseProduct(lc.dropout_mask);
            // ReLU
            dz = ((lc.pre_relu.array() > 0.0).cast<double>() * da.array()).matrix();
            if (params.bn[l]) {
                const BatchNormParams& b = *params.bn[l];
                BatchNormGrads bg;
                bg.dscale = (dz.cwiseProduct(lc.xhat)).colwise().sum().transpose();
                bg.dshift = dz.colwise().sum().transpose();
                Matrix dxhat = (dz.array().rowwise() * b.scale.transpose().array()).matrix();
                Vector sum_dxhat = dxhat.colwise().sum().transpose();
                Vector sum_dxhat_xhat = (dxhat.cwiseProduct(lc.xhat)).colwise().sum().transpose();
                Matrix t = static_cast<double>(n) * dxhat;
                t.rowwise() -= sum_dxhat.transpose();
                t -= (lc.xhat.array().rowwise() * sum_dxhat_xhat.transpose().array()).matrix();
                dz = (t.array().rowwise() * lc.inv_std.transpose().array()).matrix() /
                     static_cast<double>(n);
                g.bn[l] = std::move(bg);
            }
        }
        g.linear[l].weight = dz.transpose() * lc.input;
        g.linear[l].bias = dz.colwise().sum().transpose();
        if (l > 0) da = dz * params.linear[l].weight;
    }
    return g;
}

struct AdamTensorState {
    Matrix m_w, v_w;
    Vector m_b, v_b;
};

struct AdamState {
    std::vector<AdamTensorState> linear;  // per linear layer
    struct BnState {
        Vector m_scale, v_scale, m_shift, v_shift;
    };
    std::vector<std::optional<BnState>> bn;
    std::uint64_t step = 0;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

inline AdamState make_adam_state(const MlpParams& params) {
    AdamState s;
    for (const auto& lp : params.linear) {
        AdamTensorState t;
        t.m_w = Matrix::Zero(lp.weight.rows(), lp.weight.cols());
        t.v_w = t.m_w;
        t.m_b = Vector::Zero(lp.bias.size());
        t.v_b = t.m_b;
        s.linear.push_back(std::move(t));
    }
    for (const auto& b : params.bn) {
        if (b) {
            AdamState::BnState bs;
            bs.m_scale = Vector::Zero(b->scale.size());
            bs.v_scale = bs.m_scale;
            bs.m_shift = bs.m_scale;
            bs.v_shift = bs.m_scale;
            s.bn.emplace_back(std::move(bs));
        } else {
            s.bn.emplace_back(std::nullopt);
        }
    }
    return s;
}

namespace detail {
template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr,
                 double weight_decay, double bc1, double bc2) {
    T g = grad;
    if (weight_decay > 0.0) g += weight_decay * param;  // L2-coupled
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    const T mhat = m / bc1;
    const T vhat = v / bc2;
    param.array() -= lr * mhat.array() / (vhat.array().sqrt() + kAdamEps);
}
}  // namespace detail

/// One Adam step with bias correction; weight decay is folded into the
/// gradient before the moment update.
inline void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state,
                      double lr, double weight_decay) {
    if (lr <= 0.0) throw ConfigError("adam_step: lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("adam_step: negative weight decay");
    if (grads.linear.size() != params.linear.size() ||
        state.linear.size() != params.linear.size())
        throw ContractError("adam_step: mismatched params/grads/state");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.linear.size(); ++l) {
        if (grads.linear[l].weight.rows() != params.linear[l].weight.rows() ||
            grads.linear[l].weight.cols() != params.linear[l].weight.cols())
            throw ContractError("adam_step: gradient shape mismatch at layer " +
                                std::to_string(l));
        detail::adam_update(params.linear[l].weight, grads.linear[l].weight,
                            state.linear[l].m_w, state.linear[l].v_w, lr,
                            weight_decay, bc1, bc2);
        detail::adam_update(params.linear[l].bias, grads.linear[l].bias,
                            state.linear[l].m_b, state.linear[l].v_b, lr,
                            weight_decay, bc1, bc2);
    }
    for (std::size_t l = 0; l < params.bn.size(); ++l) {
        if (!params.bn[l]) continue;
        if (!grads.bn[l] || !state.bn[l])
            throw ContractError("adam_step: missing batch-norm grads/state");
        detail::adam_update(params.bn[l]->scale, grads.bn[l]->dscale,
                            state.bn[l]->m_scale, state.bn[l]->v_scale, lr,
                            weight_decay, bc1, bc2);
        detail::adam_update(params.bn[l]->shift, grads.bn[l]->dshift,
                            state.bn[l]->m_shift, state.bn[l]->v_shift, lr,
                            weight_decay, bc1, bc2);
    }
}

}  // namespace aapu

#endif
