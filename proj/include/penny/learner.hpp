// Learning the horizontal vector field of one group action from
// trajectory data, and reading the Lie algebra element back out of it.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "penny/core.hpp"
#include "penny/dynamics.hpp"
#include "penny/error.hpp"
#include "penny/groups.hpp"
#include "penny/mlp.hpp"
#include "penny/rng.hpp"

namespace penny {

/// One regression pair: configuration and unit target direction.
struct Sample {
    Config q;
    Vec3 target;
};

struct TrainConfig {
    std::size_t epochs = 3000;
    double learning_rate = 1e-3;
    std::size_t batch_size = 0; ///< 0 means full batch
    std::uint64_t seed = 0;
    GroupAction group = GroupAction::s1r2;
    unsigned workers = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (epochs < 1) throw InvalidArgument("TrainConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw InvalidArgument("TrainConfig: learning rate must be > 0");
        }
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
            throw InvalidArgument("TrainConfig: invalid Adam constants");
        }
    }
};

struct TrainReport {
    std::vector<double> loss_history; ///< loss at the start of each epoch
    double final_loss = 0.0;          ///< loss of the returned weights
    double initial_vertical_residual = 0.0;
    double final_vertical_residual = 0.0;
    std::size_t samples_used = 0;
    std::size_t samples_dropped = 0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    ModelWeights weights;
    TrainReport report;
};

/// Flips v so that its first component is non-negative.
inline Vec3 canonicalize_sign(const Vec3& v) {
    return v[0] < 0.0 ? Vec3{-v[0], -v[1], -v[2]} : v;
}

/// Regression pairs (q, canonicalized orbit velocity) from every state of
/// every trajectory. States whose restricted velocity cannot be normalized
/// are skipped and counted in `dropped`.
inline std::vector<Sample> build_training_set(const std::vector<Trajectory>& data,
                                              GroupAction group, std::size_t* dropped = nullptr) {
    std::vector<Sample> out;
    std::size_t skipped = 0;
    for (const Trajectory& traj : data) {
        for (const State& s : traj.states) {
            if (!satisfies_constraints(traj.params, s, 1e-9)) {
                throw InvalidArgument("training data violates the non-slip constraints");
            }
            try {
                out.push_back({s.q, canonicalize_sign(orbit_velocity(group, s))});
            } catch (const DegenerateVector&) {
                ++skipped;
            }
        }
    }
    if (dropped != nullptr) *dropped = skipped;
    return out;
}

namespace detail {

// Fixed partition of a batch; the reduction order over chunks never
// depends on the number of workers.
inline constexpr std::size_t kChunkSize = 256;

struct ChunkResult {
    double loss_sum = 0.0;
    Gradient grad;
};

inline void accumulate_chunk(const ModelWeights& w, std::span<const Sample> batch,
                             std::span<const std::size_t> index, std::size_t begin,
                             std::size_t end, bool with_grad, BatchWorkspace& ws,
                             ChunkResult& out) {
    const std::size_t n = end - begin;
    const std::size_t cap = ws.capacity();
    double* in = ws.act(0);
    for (std::size_t s = 0; s < n; ++s) {
        const Sample& smp = index.empty() ? batch[begin + s] : batch[index[begin + s]];
        const Vec4 x = network_input(smp.q);
        for (std::size_t f = 0; f < 4; ++f) in[f * cap + s] = x[f];
    }
    forward_batch(w, n, ws);

    const double* z = ws.act(w.layer_count());
    const double* norms = ws.norms();
    double* head = ws.delta(w.layer_count());
    for (std::size_t s = 0; s < n; ++s) {
        const Sample& smp = index.empty() ? batch[begin + s] : batch[index[begin + s]];
        const double zn = norms[s];
        if (!(zn >= kMinHeadNorm)) throw DegenerateVector("network head output is ~0");
        const Vec3 u{z[s] / zn, z[cap + s] / zn, z[2 * cap + s] / zn};
        const Vec3 r{u[0] - smp.target[0], u[1] - smp.target[1], u[2] - smp.target[2]};
        out.loss_sum += r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        if (!with_grad) continue;
        const Vec3 dz = normalization_vjp(u, zn, {2.0 * r[0], 2.0 * r[1], 2.0 * r[2]});
        head[s] = dz[0];
        head[cap + s] = dz[1];
        head[2 * cap + s] = dz[2];
    }
    if (with_grad) backward_batch(w, n, ws, out.grad);
}

// Mean loss and (optionally) its gradient over batch[index[0..n)] (or the
// whole batch when index is empty).
inline double evaluate_batch(const ModelWeights& w, std::span<const Sample> batch,
                             std::span<const std::size_t> index, Gradient* grad,
                             unsigned workers) {
    const std::size_t n = index.empty() ? batch.size() : index.size();
    if (n == 0) throw InvalidArgument("loss: empty batch");
    const std::size_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
    const bool with_grad = grad != nullptr;

    std::vector<ChunkResult> chunks(n_chunks);
    auto run = [&](std::size_t c, BatchWorkspace& ws) {
        ChunkResult& res = chunks[c];
        if (with_grad) res.grad = w.zeros_like();
        accumulate_chunk(w, batch, index, c * kChunkSize, std::min(n, (c + 1) * kChunkSize),
                         with_grad, ws, res);
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_chunks)));
    if (workers == 1) {
        BatchWorkspace ws(w, kChunkSize);
        for (std::size_t c = 0; c < n_chunks; ++c) run(c, ws);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < workers; ++t) {
                pool.emplace_back([&, t] {
                    try {
                        BatchWorkspace ws(w, kChunkSize);
                        for (std::size_t c = t; c < n_chunks; c += workers) run(c, ws);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    double loss_sum = 0.0;
    for (const auto& c : chunks) loss_sum += c.loss_sum;
    const double inv_n = 1.0 / static_cast<double>(n);
    if (with_grad) {
        *grad = w.zeros_like();
        auto g = grad->parameters();
        for (const auto& c : chunks) {
            const auto cg = c.grad.parameters();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += cg[i];
        }
        for (double& v : g) v *= inv_n;
    }
    return loss_sum * inv_n;
}

} // namespace detail

/// Mean over the batch of |f(q_i) - target_i|^2; lies in [0, 4].
inline double loss(const ModelWeights& w, std::span<const Sample> batch, unsigned workers = 1) {
    return detail::evaluate_batch(w, batch, {}, nullptr, workers);
}

/// Exact gradient of loss() with respect to every weight and bias.
inline Gradient gradient(const ModelWeights& w, std::span<const Sample> batch,
                         unsigned workers = 1) {
    Gradient g;
    detail::evaluate_batch(w, batch, {}, &g, workers);
    return g;
}

/// Adam with bias correction.
class AdamOptimizer {
  public:
    AdamOptimizer(const ModelWeights& w, double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(w.parameter_count(), 0.0),
          v_(w.parameter_count(), 0.0) {}

    void step(ModelWeights& w, const Gradient& g) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        auto p = w.parameters();
        const auto gp = g.parameters();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * gp[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * gp[i] * gp[i];
            const double m_hat = m_[i] / c1;
            const double v_hat = v_[i] / c2;
            p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

/// The vertical part of the learned field: mean over qs of
/// |A(embed(f(q)))|^2, where embed puts the orbit vector into
/// (theta', phi', x', y') with the missing slot zero.
inline double vertical_residual(const ModelWeights& w, const PennyParams& p, GroupAction group,
                                std::span<const Config> qs) {
    if (qs.empty()) return 0.0;
    MlpWorkspace ws(w);
    double acc = 0.0;
    for (const Config& q : qs) {
        const Velocity v = Velocity::from_array(embed(group, forward(w, q, ws)));
        acc += connection_apply(p, {q, v}).squared_norm();
    }
    return acc / static_cast<double>(qs.size());
}

/// xi^q = pullback(f(q)) at every q.
inline std::vector<LieAlgebraElement> recover_lie_algebra(const ModelWeights& w,
                                                          GroupAction group,
                                                          std::span<const Config> qs) {
    std::vector<LieAlgebraElement> out;
    out.reserve(qs.size());
    MlpWorkspace ws(w);
    for (const Config& q : qs) out.push_back(pullback(group, q, forward(w, q, ws)));
    return out;
}

/// Fits the penny architecture to the canonicalized orbit velocities of
/// `data` with Adam. Deterministic in (data, cfg).
inline TrainResult train(const std::vector<Trajectory>& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw InvalidArgument("train: no trajectories");
    const auto start = std::chrono::steady_clock::now();

    TrainResult result;
    TrainReport& report = result.report;
    const std::vector<Sample> samples =
        build_training_set(data, cfg.group, &report.samples_dropped);
    if (samples.empty()) throw InvalidArgument("train: no usable samples");
    report.samples_used = samples.size();

    std::vector<Config> qs;
    qs.reserve(samples.size());
    for (const Sample& s : samples) qs.push_back(s.q);
    const PennyParams& penny = data.front().params;

    ModelWeights w = init_penny_model(cfg.seed);
    report.initial_vertical_residual = vertical_residual(w, penny, cfg.group, qs);

    AdamOptimizer opt(w, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    Gradient g;
    const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= samples.size();
    std::vector<std::size_t> order;
    Rng shuffle_rng(cfg.seed, 1);
    if (!full_batch) {
        order.resize(samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    }

    report.loss_history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        if (full_batch) {
            epoch_loss = detail::evaluate_batch(w, samples, {}, &g, cfg.workers);
            if (std::isfinite(epoch_loss)) opt.step(w, g);
        } else {
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[shuffle_rng.below(i)]);
            }
            double weighted = 0.0;
            for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
                const std::span<const std::size_t> idx(order.data() + b,
                                                       std::min(cfg.batch_size, order.size() - b));
                const double l = detail::evaluate_batch(w, samples, idx, &g, cfg.workers);
                weighted += l * static_cast<double>(idx.size());
                if (!std::isfinite(l)) break;
                opt.step(w, g);
            }
            epoch_loss = weighted / static_cast<double>(order.size());
        }
        if (!std::isfinite(epoch_loss) || !w.all_finite()) {
            throw TrainingDiverged("train: loss became non-finite at epoch " +
                                   std::to_string(epoch));
        }
        report.loss_history.push_back(epoch_loss);
    }

    report.final_loss = loss(w, samples, cfg.workers);
    report.final_vertical_residual = vertical_residual(w, penny, cfg.group, qs);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.weights = std::move(w);
    return result;
}

} // namespace penny
