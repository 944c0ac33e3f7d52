// Small tanh multilayer perceptron with a normalizing head, mapping a
// configuration to a unit vector in orbit-tangent coordinates.
//
//   input (4) -> [affine, tanh] x hidden -> affine -> z / |z|
//
// Reverse-mode derivatives are written out by hand; the only nonstandard
// piece is the head, whose Jacobian is (I - u u^T) / |z| with u = z / |z|.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "penny/core.hpp"
#include "penny/error.hpp"
#include "penny/rng.hpp"

namespace penny {

/// 4 -> 10 -> 10 -> 10 -> 3.
inline constexpr std::array<std::size_t, 5> kPennyArchitecture{4, 10, 10, 10, 3};

/// Pre-normalization outputs shorter than this are treated as degenerate.
inline constexpr double kMinHeadNorm = 1e-9;

/// Parameters of every layer, stored contiguously. Layer l has a row-major
/// weight matrix of shape dims[l+1] x dims[l] followed by a bias of length
/// dims[l+1].
class ModelWeights {
  public:
    ModelWeights() = default;

    explicit ModelWeights(std::span<const std::size_t> dims) : dims_(dims.begin(), dims.end()) {
        if (dims_.size() < 2) throw InvalidArgument("ModelWeights: need at least two layer sizes");
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            if (dims_[l] == 0 || dims_[l + 1] == 0) {
                throw InvalidArgument("ModelWeights: layer sizes must be positive");
            }
            offsets_.push_back(total);
            total += dims_[l + 1] * dims_[l] + dims_[l + 1];
        }
        params_.assign(total, 0.0);
    }

    [[nodiscard]] std::span<const std::size_t> dims() const { return dims_; }
    [[nodiscard]] std::size_t layer_count() const { return offsets_.size(); }
    [[nodiscard]] std::size_t inputs(std::size_t l) const { return dims_[l]; }
    [[nodiscard]] std::size_t outputs(std::size_t l) const { return dims_[l + 1]; }

    std::span<double> weight(std::size_t l) {
        return {params_.data() + offsets_[l], outputs(l) * inputs(l)};
    }
    [[nodiscard]] std::span<const double> weight(std::size_t l) const {
        return {params_.data() + offsets_[l], outputs(l) * inputs(l)};
    }
    std::span<double> bias(std::size_t l) {
        return {params_.data() + offsets_[l] + outputs(l) * inputs(l), outputs(l)};
    }
    [[nodiscard]] std::span<const double> bias(std::size_t l) const {
        return {params_.data() + offsets_[l] + outputs(l) * inputs(l), outputs(l)};
    }

    std::span<double> parameters() { return params_; }
    [[nodiscard]] std::span<const double> parameters() const { return params_; }
    [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }

    /// Zero-valued weights of the same shape.
    [[nodiscard]] ModelWeights zeros_like() const {
        ModelWeights out = *this;
        std::fill(out.params_.begin(), out.params_.end(), 0.0);
        return out;
    }

    [[nodiscard]] bool all_finite() const {
        for (double v : params_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;

  private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Same layout as the weights it differentiates.
using Gradient = ModelWeights;

/// Uniform in +-1/sqrt(fan_in) for every weight and bias, from substream 0
/// of `seed`.
inline ModelWeights init_weights(std::span<const std::size_t> dims, std::uint64_t seed) {
    ModelWeights w(dims);
    Rng rng(seed, 0);
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(w.inputs(l)));
        for (double& v : w.weight(l)) v = rng.uniform(-bound, bound);
        for (double& v : w.bias(l)) v = rng.uniform(-bound, bound);
    }
    return w;
}

inline ModelWeights init_penny_model(std::uint64_t seed) {
    return init_weights(kPennyArchitecture, seed);
}

/// tanh, within 2 ulp of std::tanh. Away from zero it goes through a single
/// exp, which is cheaper than the library tanh.
inline double activation(double x) {
    const double a = std::abs(x);
    if (a < 0.55) return std::tanh(x);
    const double t = std::exp(-2.0 * a);
    return std::copysign((1.0 - t) / (1.0 + t), x);
}

/// Principal value in [-pi, pi).
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = a - two_pi * std::floor((a + std::numbers::pi) / two_pi);
    if (r >= std::numbers::pi) r -= two_pi;
    return r;
}

/// Network input for a configuration. Angles enter as points of S^1, i.e.
/// reduced to their principal value; x and y enter unchanged.
inline Vec4 network_input(const Config& q) {
    return {wrap_angle(q.theta), wrap_angle(q.phi), q.x, q.y};
}

/// Scratch buffers for one forward/backward pass.
class MlpWorkspace {
  public:
    explicit MlpWorkspace(const ModelWeights& w) {
        const auto dims = w.dims();
        activations_.resize(dims.size());
        deltas_.resize(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            activations_[i].assign(dims[i], 0.0);
            deltas_[i].assign(dims[i], 0.0);
        }
    }

    /// activations()[0] is the input, the last entry the pre-normalization
    /// output z; the ones in between are post-tanh.
    std::vector<std::vector<double>>& activations() { return activations_; }
    std::vector<std::vector<double>>& deltas() { return deltas_; }

  private:
    std::vector<std::vector<double>> activations_;
    std::vector<std::vector<double>> deltas_;
};

namespace detail {

inline void affine(std::span<const double> weight, std::span<const double> bias,
                   std::span<const double> in, std::span<double> out) {
    const std::size_t n_in = in.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double* row = weight.data() + r * n_in;
        double acc = bias[r];
        for (std::size_t c = 0; c < n_in; ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace detail

/// Runs the network up to the pre-normalization output z (left in the
/// workspace) and returns |z|. `input` must have dims()[0] entries.
inline double forward_raw(const ModelWeights& w, std::span<const double> input, MlpWorkspace& ws) {
    auto& act = ws.activations();
    std::copy(input.begin(), input.end(), act[0].begin());
    const std::size_t last = w.layer_count() - 1;
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        detail::affine(w.weight(l), w.bias(l), act[l], act[l + 1]);
        if (l != last) {
            for (double& v : act[l + 1]) v = activation(v);
        }
    }
    return detail::norm(act.back());
}

/// Unit output f(q). Throws DegenerateVector if |z| < kMinHeadNorm.
inline Vec3 forward(const ModelWeights& w, const Config& q, MlpWorkspace& ws) {
    const Vec4 in = network_input(q);
    const double n = forward_raw(w, in, ws);
    if (!(n >= kMinHeadNorm)) throw DegenerateVector("forward: network head output is ~0");
    const auto& z = ws.activations().back();
    return {z[0] / n, z[1] / n, z[2] / n};
}

inline Vec3 forward(const ModelWeights& w, const Config& q) {
    MlpWorkspace ws(w);
    return forward(w, q, ws);
}

/// Accumulates d(loss)/d(params) into `grad`, given d(loss)/dz for the
/// pre-normalization output already stored in ws.deltas().back(). Requires
/// the activations of a matching forward_raw call.
inline void backward_raw(const ModelWeights& w, MlpWorkspace& ws, Gradient& grad) {
    auto& act = ws.activations();
    auto& delta = ws.deltas();
    for (std::size_t l = w.layer_count(); l-- > 0;) {
        const std::size_t n_in = w.inputs(l);
        const std::size_t n_out = w.outputs(l);
        const auto weight = w.weight(l);
        auto gw = grad.weight(l);
        auto gb = grad.bias(l);
        const auto& in = act[l];
        const auto& d_out = delta[l + 1];
        for (std::size_t r = 0; r < n_out; ++r) {
            const double d = d_out[r];
            gb[r] += d;
            double* grow = gw.data() + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) grow[c] += d * in[c];
        }
        if (l == 0) break;
        auto& d_in = delta[l];
        for (std::size_t c = 0; c < n_in; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n_out; ++r) acc += weight[r * n_in + c] * d_out[r];
            // in[c] = tanh(pre), d tanh = 1 - tanh^2
            d_in[c] = acc * (1.0 - in[c] * in[c]);
        }
    }
}

/// Feature-major scratch buffers for a chunk of up to `capacity` samples:
/// entry (feature f, sample s) of layer l lives at act(l)[f * capacity + s].
class BatchWorkspace {
  public:
    BatchWorkspace(const ModelWeights& w, std::size_t capacity) : capacity_(capacity) {
        const auto dims = w.dims();
        act_.resize(dims.size());
        delta_.resize(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            act_[i].assign(dims[i] * capacity, 0.0);
            delta_[i].assign(dims[i] * capacity, 0.0);
        }
        norms_.assign(capacity, 0.0);
    }

    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    double* act(std::size_t l) { return act_[l].data(); }
    double* delta(std::size_t l) { return delta_[l].data(); }
    double* norms() { return norms_.data(); }

  private:
    std::size_t capacity_;
    std::vector<std::vector<double>> act_;
    std::vector<std::vector<double>> delta_;
    std::vector<double> norms_;
};

/// Batched forward_raw over n <= capacity samples whose inputs are already
/// in ws.act(0). Leaves z in the last act buffer and |z| in ws.norms().
/// Per sample, the arithmetic is identical to forward_raw.
inline void forward_batch(const ModelWeights& w, std::size_t n, BatchWorkspace& ws) {
    const std::size_t cap = ws.capacity();
    const std::size_t last = w.layer_count() - 1;
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        const std::size_t n_in = w.inputs(l);
        const auto weight = w.weight(l);
        const auto bias = w.bias(l);
        const double* in = ws.act(l);
        double* out = ws.act(l + 1);
        for (std::size_t r = 0; r < w.outputs(l); ++r) {
            double* o = out + r * cap;
            for (std::size_t s = 0; s < n; ++s) o[s] = bias[r];
            for (std::size_t c = 0; c < n_in; ++c) {
                const double wrc = weight[r * n_in + c];
                const double* x = in + c * cap;
                for (std::size_t s = 0; s < n; ++s) o[s] += wrc * x[s];
            }
            if (l != last) {
                for (std::size_t s = 0; s < n; ++s) o[s] = activation(o[s]);
            }
        }
    }
    const std::size_t n_out = w.dims().back();
    const double* z = ws.act(w.layer_count());
    double* norms = ws.norms();
    for (std::size_t s = 0; s < n; ++s) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n_out; ++r) acc += z[r * cap + s] * z[r * cap + s];
        norms[s] = std::sqrt(acc);
    }
}

namespace detail {

// sum_s a[s] * b[s] with four interleaved partial sums.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
    std::size_t s = 0;
    for (; s + 4 <= n; s += 4) {
        p0 += a[s] * b[s];
        p1 += a[s + 1] * b[s + 1];
        p2 += a[s + 2] * b[s + 2];
        p3 += a[s + 3] * b[s + 3];
    }
    for (; s < n; ++s) p0 += a[s] * b[s];
    return (p0 + p1) + (p2 + p3);
}

} // namespace detail

/// Batched backward_raw: adds the gradient summed over the n samples to
/// `grad`. Needs dloss/dz in the last delta buffer and the activations of
/// the matching forward_batch.
inline void backward_batch(const ModelWeights& w, std::size_t n, BatchWorkspace& ws,
                           Gradient& grad) {
    const std::size_t cap = ws.capacity();
    for (std::size_t l = w.layer_count(); l-- > 0;) {
        const std::size_t n_in = w.inputs(l);
        const std::size_t n_out = w.outputs(l);
        const auto weight = w.weight(l);
        auto gw = grad.weight(l);
        auto gb = grad.bias(l);
        const double* in = ws.act(l);
        const double* d_out = ws.delta(l + 1);
        for (std::size_t r = 0; r < n_out; ++r) {
            const double* d = d_out + r * cap;
            double sum = 0.0;
            for (std::size_t s = 0; s < n; ++s) sum += d[s];
            gb[r] += sum;
            for (std::size_t c = 0; c < n_in; ++c) gw[r * n_in + c] += detail::dot4(d, in + c * cap, n);
        }
        if (l == 0) break;
        double* d_in = ws.delta(l);
        for (std::size_t c = 0; c < n_in; ++c) {
            double* di = d_in + c * cap;
            for (std::size_t s = 0; s < n; ++s) di[s] = 0.0;
            for (std::size_t r = 0; r < n_out; ++r) {
                const double wrc = weight[r * n_in + c];
                const double* d = d_out + r * cap;
                for (std::size_t s = 0; s < n; ++s) di[s] += wrc * d[s];
            }
            const double* a = in + c * cap;
            // a = tanh(pre), d tanh = 1 - tanh^2
            for (std::size_t s = 0; s < n; ++s) di[s] *= 1.0 - a[s] * a[s];
        }
    }
}

/// Pulls an output-space cotangent g = dloss/du back through u = z/|z|:
/// dloss/dz = (g - u (u . g)) / |z|.
inline Vec3 normalization_vjp(const Vec3& u, double z_norm, const Vec3& g) {
    const double ug = u[0] * g[0] + u[1] * g[1] + u[2] * g[2];
    return {(g[0] - u[0] * ug) / z_norm, (g[1] - u[1] * ug) / z_norm,
            (g[2] - u[2] * ug) / z_norm};
}

} // namespace penny
