#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "pricecast/errors.hpp"
#include "pricecast/frame.hpp"

namespace pricecast {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct LstmConfig {
    Eigen::Index input_size = 1;
    Eigen::Index hidden_size = 64;
    Eigen::Index num_layers = 2;
    double dropout_rate = 0.2;
    double learning_rate = 1e-3;
    Eigen::Index batch_size = 32;
    Eigen::Index max_epochs = 200;
    /// Epochs without validation improvement before stopping; 0 disables early stopping.
    Eigen::Index patience = 10;
    std::uint64_t seed = 42;

    void validate() const {
        if (input_size < 1 || hidden_size < 1 || num_layers < 1) throw DataError("lstm config: sizes must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw DataError("lstm config: dropout_rate must be in [0, 1)");
        if (!(learning_rate > 0.0)) throw DataError("lstm config: learning_rate must be positive");
        if (batch_size < 1 || max_epochs < 1) throw DataError("lstm config: batch_size and max_epochs must be >= 1");
        if (patience < 0 || patience > max_epochs) throw DataError("lstm config: patience must be in [0, max_epochs]");
    }

    friend bool operator==(const LstmConfig&, const LstmConfig&) = default;
};

/// Gate blocks are stacked in this order inside W, U and b.
enum class Gate : int { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr int kGateCount = 4;

template <typename Scalar>
struct LstmCellWeights {
    MatrixX<Scalar> W;  // 4H x input
    MatrixX<Scalar> U;  // 4H x H
    VectorX<Scalar> b;  // 4H

    Eigen::Index hidden_size() const { return U.cols(); }
    Eigen::Index input_size() const { return W.cols(); }

    auto input_weights(Gate g) { return W.middleRows(static_cast<int>(g) * hidden_size(), hidden_size()); }
    auto input_weights(Gate g) const { return W.middleRows(static_cast<int>(g) * hidden_size(), hidden_size()); }
    auto recurrent_weights(Gate g) { return U.middleRows(static_cast<int>(g) * hidden_size(), hidden_size()); }
    auto recurrent_weights(Gate g) const { return U.middleRows(static_cast<int>(g) * hidden_size(), hidden_size()); }
    auto bias(Gate g) { return b.segment(static_cast<int>(g) * hidden_size(), hidden_size()); }
    auto bias(Gate g) const { return b.segment(static_cast<int>(g) * hidden_size(), hidden_size()); }
};

/// All trainable tensors. Gradients and Adam moments share this layout.
template <typename Scalar>
struct LstmParams {
    std::vector<LstmCellWeights<Scalar>> layers;
    VectorX<Scalar> head_w;  // H
    VectorX<Scalar> head_b;  // 1

    static LstmParams zeros_like(const LstmParams& other) {
        LstmParams z;
        for (const auto& l : other.layers)
            z.layers.push_back({MatrixX<Scalar>::Zero(l.W.rows(), l.W.cols()), MatrixX<Scalar>::Zero(l.U.rows(), l.U.cols()),
                                VectorX<Scalar>::Zero(l.b.size())});
        z.head_w = VectorX<Scalar>::Zero(other.head_w.size());
        z.head_b = VectorX<Scalar>::Zero(other.head_b.size());
        return z;
    }
};

/// A named view of one parameter tensor. Eigen storage is column-major.
template <typename T>
struct TensorView {
    std::string name;
    T* data;
    Eigen::Index rows;
    Eigen::Index cols;

    Eigen::Index size() const { return rows * cols; }
    auto flat() const {
        using Vec = VectorX<std::remove_const_t<T>>;
        using MapT = std::conditional_t<std::is_const_v<T>, Eigen::Map<const Vec>, Eigen::Map<Vec>>;
        return MapT(data, size());
    }
};

namespace detail {

template <typename T, typename Params>
std::vector<TensorView<T>> collect_tensors(Params& params) {
    std::vector<TensorView<T>> out;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        out.push_back({fmt::format("layer{}.W", l), layer.W.data(), layer.W.rows(), layer.W.cols()});
        out.push_back({fmt::format("layer{}.U", l), layer.U.data(), layer.U.rows(), layer.U.cols()});
        out.push_back({fmt::format("layer{}.b", l), layer.b.data(), layer.b.size(), 1});
    }
    out.push_back({"head.w", params.head_w.data(), params.head_w.size(), 1});
    out.push_back({"head.b", params.head_b.data(), params.head_b.size(), 1});
    return out;
}

}  // namespace detail

/// Tensors in a fixed order: per layer W, U, b; then head.w, head.b.
template <typename Scalar>
std::vector<TensorView<Scalar>> tensors(LstmParams<Scalar>& params) {
    return detail::collect_tensors<Scalar>(params);
}
template <typename Scalar>
std::vector<TensorView<const Scalar>> tensors(const LstmParams<Scalar>& params) {
    return detail::collect_tensors<const Scalar>(params);
}

template <typename Scalar>
struct LstmNetwork {
    LstmConfig config;
    LstmParams<Scalar> params;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Scalar>
void fill_uniform(MatrixX<Scalar>& m, double limit, std::mt19937_64& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * limit);
}

template <typename Scalar>
auto sigmoid(const Eigen::ArrayBase<Scalar>& x) {
    using S = typename Scalar::Scalar;
    return S(1) / (S(1) + (-x).exp());
}

}  // namespace detail

/// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out)) per matrix),
/// forget-gate bias 1, all other biases 0. Same seed gives identical bits.
template <typename Scalar = double>
LstmNetwork<Scalar> init_network(const LstmConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const Eigen::Index H = config.hidden_size;
    LstmNetwork<Scalar> net{config, {}};
    for (Eigen::Index l = 0; l < config.num_layers; ++l) {
        const Eigen::Index in = l == 0 ? config.input_size : H;
        LstmCellWeights<Scalar> w{MatrixX<Scalar>(kGateCount * H, in), MatrixX<Scalar>(kGateCount * H, H),
                                  VectorX<Scalar>::Zero(kGateCount * H)};
        detail::fill_uniform(w.W, std::sqrt(6.0 / static_cast<double>(in + kGateCount * H)), rng);
        detail::fill_uniform(w.U, std::sqrt(6.0 / static_cast<double>(H + kGateCount * H)), rng);
        w.bias(Gate::Forget).setOnes();
        net.params.layers.push_back(std::move(w));
    }
    MatrixX<Scalar> head(H, 1);
    detail::fill_uniform(head, std::sqrt(6.0 / static_cast<double>(H + 1)), rng);
    net.params.head_w = head.col(0);
    net.params.head_b = VectorX<Scalar>::Zero(1);
    return net;
}

/// One time step for a batch held in columns.
template <typename Scalar>
struct CellStep {
    MatrixX<Scalar> h;
    MatrixX<Scalar> c;
    MatrixX<Scalar> gates;  // activated [i; f; o; g], 4H x batch
};

template <typename Scalar>
CellStep<Scalar> cell_forward(const LstmCellWeights<Scalar>& w, const MatrixX<Scalar>& x, const MatrixX<Scalar>& h_prev,
                              const MatrixX<Scalar>& c_prev) {
    const Eigen::Index H = w.hidden_size();
    if (x.rows() != w.input_size() || h_prev.rows() != H || c_prev.rows() != H || x.cols() != h_prev.cols() ||
        x.cols() != c_prev.cols())
        throw DataError("cell_forward: dimension mismatch");

    CellStep<Scalar> s;
    s.gates.noalias() = w.U * h_prev;
    s.gates.noalias() += w.W * x;
    s.gates.colwise() += w.b;
    s.gates.topRows(3 * H) = detail::sigmoid(s.gates.topRows(3 * H).array()).matrix();
    s.gates.bottomRows(H) = s.gates.bottomRows(H).array().tanh().matrix();

    const auto i = s.gates.topRows(H).array();
    const auto f = s.gates.middleRows(H, H).array();
    const auto o = s.gates.middleRows(2 * H, H).array();
    const auto g = s.gates.bottomRows(H).array();
    s.c = (f * c_prev.array() + i * g).matrix();
    s.h = (o * s.c.array().tanh()).matrix();
    if (!s.h.allFinite() || !s.c.allFinite()) throw FitError("cell_forward: non-finite activations");
    return s;
}

enum class Mode { Train, Eval };

/// Everything backward() needs, indexed [layer][step].
template <typename Scalar>
struct ForwardTrace {
    std::vector<std::vector<MatrixX<Scalar>>> inputs;
    std::vector<std::vector<MatrixX<Scalar>>> gates;
    std::vector<std::vector<MatrixX<Scalar>>> cells;
    std::vector<std::vector<MatrixX<Scalar>>> hidden;
    std::vector<std::vector<MatrixX<Scalar>>> masks;  // empty when dropout is off
    MatrixX<Scalar> top;                              // final top-layer output fed to the head
    VectorX<Scalar> predictions;
};

/// Converts windows (each steps x features) into per-step input matrices
/// (features x batch).
template <typename Scalar>
std::vector<MatrixX<Scalar>> batch_steps(std::span<const Eigen::MatrixXd* const> windows) {
    if (windows.empty()) throw DataError("batch_steps: empty batch");
    const Eigen::Index steps = windows.front()->rows(), features = windows.front()->cols();
    std::vector<MatrixX<Scalar>> out(static_cast<std::size_t>(steps),
                                     MatrixX<Scalar>(features, static_cast<Eigen::Index>(windows.size())));
    for (std::size_t b = 0; b < windows.size(); ++b) {
        const auto& w = *windows[b];
        if (w.rows() != steps || w.cols() != features) throw DataError("batch_steps: ragged windows");
        for (Eigen::Index t = 0; t < steps; ++t)
            out[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) = w.row(t).transpose().template cast<Scalar>();
    }
    return out;
}

/// Unrolls every layer from zero state. In Train mode with a positive rate,
/// each layer's output is multiplied by an inverted-dropout mask drawn from
/// `rng` (keep with probability 1 - rate, survivors scaled by 1 / (1 - rate)).
template <typename Scalar>
ForwardTrace<Scalar> forward(const LstmNetwork<Scalar>& net, const std::vector<MatrixX<Scalar>>& steps, Mode mode,
                             std::mt19937_64* rng = nullptr) {
    const auto& cfg = net.config;
    if (steps.empty()) throw DataError("forward: empty sequence");
    if (steps.front().rows() != cfg.input_size)
        throw DataError(fmt::format("forward: window has {} features, network expects {}", steps.front().rows(),
                                    cfg.input_size));
    const bool dropout = mode == Mode::Train && cfg.dropout_rate > 0.0;
    if (dropout && rng == nullptr) throw DataError("forward: train-mode dropout needs an RNG");

    const Eigen::Index H = cfg.hidden_size, B = steps.front().cols();
    const auto T = steps.size();
    const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - cfg.dropout_rate));

    ForwardTrace<Scalar> tr;
    const auto L = net.params.layers.size();
    tr.inputs.resize(L);
    tr.gates.resize(L);
    tr.cells.resize(L);
    tr.hidden.resize(L);
    tr.masks.resize(L);
    tr.inputs[0] = steps;

    for (std::size_t l = 0; l < L; ++l) {
        const auto& w = net.params.layers[l];
        MatrixX<Scalar> h = MatrixX<Scalar>::Zero(H, B), c = MatrixX<Scalar>::Zero(H, B);
        for (auto& v : {&tr.gates[l], &tr.cells[l], &tr.hidden[l]}) v->reserve(T);
        std::vector<MatrixX<Scalar>> outputs;
        outputs.reserve(T);
        for (std::size_t t = 0; t < T; ++t) {
            CellStep<Scalar> s = cell_forward(w, tr.inputs[l][t], h, c);
            h = s.h;
            c = s.c;
            MatrixX<Scalar> out = s.h;
            if (dropout) {
                MatrixX<Scalar> mask(H, B);
                for (Eigen::Index j = 0; j < B; ++j)
                    for (Eigen::Index i = 0; i < H; ++i)
                        mask(i, j) = detail::uniform01(*rng) < cfg.dropout_rate ? Scalar(0) : keep_scale;
                out.array() *= mask.array();
                tr.masks[l].push_back(std::move(mask));
            }
            tr.gates[l].push_back(std::move(s.gates));
            tr.cells[l].push_back(std::move(s.c));
            tr.hidden[l].push_back(std::move(s.h));
            outputs.push_back(std::move(out));
        }
        if (l + 1 < L)
            tr.inputs[l + 1] = std::move(outputs);
        else
            tr.top = std::move(outputs.back());
    }
    tr.predictions = (net.params.head_w.transpose() * tr.top).transpose();
    tr.predictions.array() += net.params.head_b(0);
    return tr;
}

/// Eval-mode prediction for a single window (steps x features).
template <typename Scalar>
Scalar predict_window(const LstmNetwork<Scalar>& net, const Eigen::MatrixXd& window) {
    const Eigen::MatrixXd* ptr = &window;
    return forward(net, batch_steps<Scalar>(std::span(&ptr, 1)), Mode::Eval).predictions(0);
}

template <typename DerivedP, typename DerivedT>
typename DerivedP::Scalar mse_loss(const Eigen::MatrixBase<DerivedP>& predictions, const Eigen::MatrixBase<DerivedT>& targets) {
    if (predictions.size() == 0 || predictions.size() != targets.size()) throw DataError("mse_loss: empty or mismatched input");
    return (predictions - targets).squaredNorm() / static_cast<typename DerivedP::Scalar>(predictions.size());
}

/// d(mse)/d(prediction) = 2 (p - y) / n.
template <typename DerivedP, typename DerivedT>
VectorX<typename DerivedP::Scalar> mse_gradient(const Eigen::MatrixBase<DerivedP>& predictions,
                                                const Eigen::MatrixBase<DerivedT>& targets) {
    using S = typename DerivedP::Scalar;
    if (predictions.size() == 0 || predictions.size() != targets.size()) throw DataError("mse_gradient: empty or mismatched input");
    return (S(2) / static_cast<S>(predictions.size())) * (predictions - targets);
}

/// Backpropagation through time. `dpred` holds dLoss/dPrediction per batch column.
template <typename Scalar>
LstmParams<Scalar> backward(const LstmNetwork<Scalar>& net, const ForwardTrace<Scalar>& tr, const VectorX<Scalar>& dpred) {
    const auto L = net.params.layers.size();
    if (tr.gates.size() != L || dpred.size() != tr.predictions.size() || tr.top.cols() != dpred.size())
        throw DataError("backward: trace does not match network");

    const Eigen::Index H = net.config.hidden_size, B = dpred.size();
    const auto T = tr.gates.front().size();
    LstmParams<Scalar> grad = LstmParams<Scalar>::zeros_like(net.params);
    grad.head_w.noalias() = tr.top * dpred;
    grad.head_b(0) = dpred.sum();

    // Gradient w.r.t. each step's (post-dropout) layer output.
    std::vector<MatrixX<Scalar>> d_out(T, MatrixX<Scalar>::Zero(H, B));
    d_out.back().noalias() = net.params.head_w * dpred.transpose();

    for (std::size_t l = L; l-- > 0;) {
        const auto& w = net.params.layers[l];
        auto& g = grad.layers[l];
        const bool masked = !tr.masks[l].empty();
        MatrixX<Scalar> dh_next = MatrixX<Scalar>::Zero(H, B), dc_next = MatrixX<Scalar>::Zero(H, B);
        MatrixX<Scalar> da(kGateCount * H, B);
        std::vector<MatrixX<Scalar>> d_in;
        if (l > 0) d_in.assign(T, MatrixX<Scalar>());

        for (std::size_t t = T; t-- > 0;) {
            const auto& gates = tr.gates[l][t];
            const auto i = gates.topRows(H).array();
            const auto f = gates.middleRows(H, H).array();
            const auto o = gates.middleRows(2 * H, H).array();
            const auto gg = gates.bottomRows(H).array();
            const MatrixX<Scalar> zero = MatrixX<Scalar>::Zero(H, B);
            const MatrixX<Scalar>& c_prev = t > 0 ? tr.cells[l][t - 1] : zero;
            const MatrixX<Scalar>& h_prev = t > 0 ? tr.hidden[l][t - 1] : zero;

            Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> dh = d_out[t].array();
            if (masked) dh *= tr.masks[l][t].array();
            dh += dh_next.array();

            const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> tanh_c = tr.cells[l][t].array().tanh();
            const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> dc =
                dc_next.array() + dh * o * (Scalar(1) - tanh_c.square());

            da.topRows(H) = (dc * gg * i * (Scalar(1) - i)).matrix();
            da.middleRows(H, H) = (dc * c_prev.array() * f * (Scalar(1) - f)).matrix();
            da.middleRows(2 * H, H) = (dh * tanh_c * o * (Scalar(1) - o)).matrix();
            da.bottomRows(H) = (dc * i * (Scalar(1) - gg.square())).matrix();
            dc_next = (dc * f).matrix();

            g.W.noalias() += da * tr.inputs[l][t].transpose();
            if (t > 0) g.U.noalias() += da * h_prev.transpose();
            g.b.noalias() += da.rowwise().sum();
            dh_next.noalias() = w.U.transpose() * da;
            if (l > 0) d_in[t].noalias() = w.W.transpose() * da;
        }
        if (l > 0) d_out = std::move(d_in);
    }
    return grad;
}

template <typename Scalar>
struct AdamState {
    LstmParams<Scalar> m;
    LstmParams<Scalar> v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zeros_like(const LstmParams<Scalar>& params) {
        return AdamState{LstmParams<Scalar>::zeros_like(params), LstmParams<Scalar>::zeros_like(params)};
    }
};

/// Adam update of one tensor for step count t (already incremented).
template <typename P, typename G, typename M, typename V>
void adam_update(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, Eigen::MatrixBase<M>& m,
                 Eigen::MatrixBase<V>& v, std::int64_t t, double lr, double beta1, double beta2, double epsilon) {
    using S = typename P::Scalar;
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    m = b1 * m + (S(1) - b1) * grad;
    v = b2 * v + (S(1) - b2) * grad.cwiseAbs2();
    const S c1 = static_cast<S>(1.0 - std::pow(beta1, static_cast<double>(t)));
    const S c2 = static_cast<S>(1.0 - std::pow(beta2, static_cast<double>(t)));
    param.array() -= static_cast<S>(lr) * (m.array() / c1) / ((v.array() / c2).sqrt() + static_cast<S>(epsilon));
}

template <typename Scalar>
void adam_step(LstmParams<Scalar>& params, const LstmParams<Scalar>& grads, AdamState<Scalar>& state, double lr) {
    auto p = tensors(params);
    const auto g = tensors(grads);
    auto m = tensors(state.m);
    auto v = tensors(state.v);
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) throw DataError("adam_step: layout mismatch");
    for (std::size_t k = 0; k < p.size(); ++k)
        if (p[k].size() != g[k].size() || p[k].size() != m[k].size() || p[k].size() != v[k].size())
            throw DataError(fmt::format("adam_step: shape mismatch in {}", p[k].name));
    ++state.step;
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto pk = p[k].flat();
        auto mk = m[k].flat();
        auto vk = v[k].flat();
        adam_update(pk, g[k].flat(), mk, vk, state.step, lr, state.beta1, state.beta2, state.epsilon);
    }
}

struct TrainingHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;  // NaN when there is no validation set
    std::size_t best_epoch = 0;
};

template <typename Scalar>
struct TrainResult {
    LstmNetwork<Scalar> network;
    TrainingHistory history;
    AdamState<Scalar> adam;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

/// Eval-mode predictions for every window, in dataset order.
template <typename Scalar>
Eigen::VectorXd predict_series(const LstmNetwork<Scalar>& net, const WindowedDataset& data) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
    if (data.empty()) return out;
    if (data.features() != net.config.input_size)
        throw DataError(fmt::format("predict_series: dataset has {} features, network expects {}", data.features(),
                                    net.config.input_size));
    const auto chunk = static_cast<std::size_t>(std::max<Eigen::Index>(net.config.batch_size, 1));
    std::vector<const Eigen::MatrixXd*> ptrs;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        ptrs.clear();
        for (std::size_t k = start; k < std::min(start + chunk, data.size()); ++k) ptrs.push_back(&data.inputs[k]);
        const auto tr = forward(net, batch_steps<Scalar>(ptrs), Mode::Eval);
        out.segment(static_cast<Eigen::Index>(start), tr.predictions.size()) = tr.predictions.template cast<double>();
    }
    return out;
}

/// Mini-batch Adam on MSE. Each epoch visits the windows in a seeded
/// permutation; the parameters of the epoch with the lowest validation MSE are
/// kept. Deterministic for a given config.seed.
template <typename Scalar>
TrainResult<Scalar> train(LstmNetwork<Scalar> net, const WindowedDataset& train_set, const WindowedDataset& val_set,
                          const EpochCallback& on_epoch = {}) {
    const auto& cfg = net.config;
    cfg.validate();
    if (train_set.empty()) throw DataError("train: empty training set");
    if (train_set.features() != cfg.input_size || (!val_set.empty() && val_set.features() != cfg.input_size))
        throw DataError("train: dataset feature count does not match the network");

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    AdamState<Scalar> adam = AdamState<Scalar>::zeros_like(net.params);
    TrainingHistory history;
    const bool validate = !val_set.empty();
    LstmParams<Scalar> best_params = net.params;
    AdamState<Scalar> best_adam = adam;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::Index since_best = 0;

    const std::size_t n = train_set.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::vector<const Eigen::MatrixXd*> ptrs;
    VectorX<Scalar> targets;

    for (Eigen::Index epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = n; k > 1; --k) {
            const auto j = static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(k));
            std::swap(order[k - 1], order[std::min(j, k - 1)]);
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(start + batch, n);
            ptrs.clear();
            targets.resize(static_cast<Eigen::Index>(end - start));
            for (std::size_t k = start; k < end; ++k) {
                ptrs.push_back(&train_set.inputs[order[k]]);
                targets(static_cast<Eigen::Index>(k - start)) =
                    static_cast<Scalar>(train_set.targets(static_cast<Eigen::Index>(order[k])));
            }
            ForwardTrace<Scalar> tr;
            try {
                tr = forward(net, batch_steps<Scalar>(ptrs), Mode::Train, &rng);
            } catch (const FitError& e) {
                throw FitError(fmt::format("train: diverged in epoch {}: {}", epoch, e.what()));
            }
            const double loss = static_cast<double>(mse_loss(tr.predictions, targets));
            if (!std::isfinite(loss)) throw FitError(fmt::format("train: non-finite loss in epoch {}", epoch));
            loss_sum += loss * static_cast<double>(end - start);
            const LstmParams<Scalar> grad = backward(net, tr, mse_gradient(tr.predictions, targets));
            adam_step(net.params, grad, adam, cfg.learning_rate);
        }
        const double train_loss = loss_sum / static_cast<double>(n);
        double val_loss = std::numeric_limits<double>::quiet_NaN();
        if (validate) {
            val_loss = mse_loss(predict_series(net, val_set), val_set.targets);
            if (!std::isfinite(val_loss)) throw FitError(fmt::format("train: non-finite validation loss in epoch {}", epoch));
        }
        history.train_loss.push_back(train_loss);
        history.val_loss.push_back(val_loss);
        if (on_epoch) on_epoch(static_cast<std::size_t>(epoch), train_loss, val_loss);

        if (!validate) {
            history.best_epoch = static_cast<std::size_t>(epoch);
            continue;
        }
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = net.params;
            best_adam = adam;
            history.best_epoch = static_cast<std::size_t>(epoch);
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            break;
        }
    }
    if (validate) {
        net.params = std::move(best_params);
        adam = std::move(best_adam);
    }
    return TrainResult<Scalar>{std::move(net), std::move(history), std::move(adam)};
}

}  // namespace pricecast
