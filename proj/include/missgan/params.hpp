#pragma once

#include "missgan/graph.hpp"
#include "missgan/nnops.hpp"
#include "missgan/rng.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace missgan {

// Named trainable tensors in registration order. Order is the canonical
// iteration order for optimizers, EMA updates and checkpoint blobs.
template <typename T>
class ParamSetT {
public:
    VarT<T> add(const std::string& name, TensorT<T> init, bool requires_grad = true) {
        if (vars_.count(name))
            fail(ErrorCategory::Internal, "duplicate parameter name " + name);
        VarT<T> v = VarT<T>::leaf(std::move(init), requires_grad);
        order_.push_back(name);
        vars_.emplace(name, v);
        return v;
    }

    bool has(const std::string& name) const { return vars_.count(name) != 0; }

    const VarT<T>& at(const std::string& name) const {
        auto it = vars_.find(name);
        if (it == vars_.end())
            fail(ErrorCategory::Internal, "unknown parameter name " + name);
        return it->second;
    }

    const std::vector<std::string>& names() const { return order_; }
    size_t size() const { return order_.size(); }

    int64_t scalar_count() const {
        int64_t n = 0;
        for (const auto& name : order_) n += vars_.at(name).value().numel();
        return n;
    }

    void zero_grad() {
        for (const auto& name : order_) vars_.at(name).zero_grad();
    }

    std::vector<std::pair<std::string, TensorT<T>>> snapshot() const {
        std::vector<std::pair<std::string, TensorT<T>>> out;
        out.reserve(order_.size());
        for (const auto& name : order_) out.emplace_back(name, vars_.at(name).value());
        return out;
    }

    // Overwrites every parameter from the map; all names must be present
    // with matching shapes. Extra map entries are rejected.
    void load(const std::map<std::string, TensorT<T>>& tensors) {
        if (tensors.size() != order_.size())
            fail(ErrorCategory::Checkpoint,
                 "tensor count mismatch: expected " + std::to_string(order_.size()) +
                     ", got " + std::to_string(tensors.size()));
        for (const auto& name : order_) {
            auto it = tensors.find(name);
            if (it == tensors.end())
                fail(ErrorCategory::Checkpoint, "missing tensor " + name);
            TensorT<T>& dst = vars_.at(name).value_mut();
            if (!dst.same_shape(it->second))
                fail(ErrorCategory::Checkpoint,
                     "shape mismatch for " + name + ": expected " +
                         TensorT<T>::shape_str(dst.shape()) + ", got " +
                         TensorT<T>::shape_str(it->second.shape()));
            dst = it->second;
        }
    }

    void copy_values_from(const ParamSetT& src) {
        if (src.order_ != order_)
            fail(ErrorCategory::Internal, "parameter set layout mismatch");
        for (const auto& name : order_)
            vars_.at(name).value_mut() = src.vars_.at(name).value();
    }

    // p_ema = decay * p_ema + (1 - decay) * p
    void ema_update_from(const ParamSetT& src, T decay) {
        if (src.order_ != order_)
            fail(ErrorCategory::Internal, "parameter set layout mismatch");
        for (const auto& name : order_) {
            TensorT<T>& dst = vars_.at(name).value_mut();
            const TensorT<T>& s = src.vars_.at(name).value();
            for (int64_t i = 0; i < dst.numel(); ++i)
                dst[i] = decay * dst[i] + (T(1) - decay) * s[i];
        }
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, VarT<T>> vars_;
};

using ParamSet = ParamSetT<float>;

namespace init {

template <typename T>
TensorT<T> normal(Rng& rng, std::vector<int> shape, T stddev) {
    TensorT<T> t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal()) * stddev;
    return t;
}

template <typename T>
TensorT<T> he_normal(Rng& rng, std::vector<int> shape, int64_t fan_in) {
    return normal<T>(rng, std::move(shape), static_cast<T>(std::sqrt(2.0 / static_cast<double>(fan_in))));
}

} // namespace init

template <typename T>
struct Conv2dLayerT {
    VarT<T> w, b;
    int stride = 1;
    int pad = 0;

    VarT<T> operator()(const VarT<T>& x) const { return nn::conv2d(x, w, b, stride, pad); }
};

template <typename T>
struct LinearLayerT {
    VarT<T> w, b;

    VarT<T> operator()(const VarT<T>& x) const { return nn::linear(x, w, b); }
};

// Style projection feeding one AdaIN site: emits per-channel (gamma, beta)
// with gamma centered at 1 so a zero weight matrix starts as identity.
template <typename T>
struct AdainProjT {
    VarT<T> w, b;

    std::pair<VarT<T>, VarT<T>> operator()(const VarT<T>& s) const {
        return nn::style_to_adain_params(s, w, b);
    }
};

template <typename T>
Conv2dLayerT<T> make_conv(ParamSetT<T>& ps, Rng& rng, const std::string& name, int ci, int co,
                          int k, int stride, int pad, bool bias = true) {
    Conv2dLayerT<T> layer;
    layer.w = ps.add(name + "/weight",
                     init::he_normal<T>(rng, {co, ci, k, k}, static_cast<int64_t>(ci) * k * k));
    if (bias) layer.b = ps.add(name + "/bias", TensorT<T>::zeros({co}));
    layer.stride = stride;
    layer.pad = pad;
    return layer;
}

template <typename T>
LinearLayerT<T> make_linear(ParamSetT<T>& ps, Rng& rng, const std::string& name, int in,
                            int out) {
    LinearLayerT<T> layer;
    layer.w = ps.add(name + "/weight", init::he_normal<T>(rng, {out, in}, in));
    layer.b = ps.add(name + "/bias", TensorT<T>::zeros({out}));
    return layer;
}

// Small init keeps early modulation near identity normalization while
// leaving the style pathway sensitive and trainable.
template <typename T>
AdainProjT<T> make_adain_proj(ParamSetT<T>& ps, Rng& rng, const std::string& name,
                              int style_dim, int channels) {
    AdainProjT<T> proj;
    T stddev = static_cast<T>(0.002 / std::sqrt(static_cast<double>(style_dim)));
    proj.w = ps.add(name + "/weight", init::normal<T>(rng, {2 * channels, style_dim}, stddev));
    proj.b = ps.add(name + "/bias", TensorT<T>::zeros({2 * channels}));
    return proj;
}

} // namespace missgan
