#include "missgan/perceptual.hpp"

#include "missgan/checkpoint.hpp"
#include "missgan/errors.hpp"
#include "missgan/nnops.hpp"
#include "missgan/rng.hpp"

#include <cmath>

namespace missgan {

namespace {

struct VggLayerSpec {
    const char* name;
    int in_ch, out_ch;
    bool pool_before;
};

constexpr VggLayerSpec kVggLayers[] = {
    {"conv1_1", 3, 64, false},
    {"conv1_2", 64, 64, false},
    {"conv2_1", 64, 128, true},
    {"conv2_2", 128, 128, false},
};

template <typename T>
TensorT<T> seeded_normal(Rng& rng, std::vector<int> shape, double stddev) {
    TensorT<T> t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(rng.normal() * stddev);
    return t;
}

} // namespace

std::vector<std::string> vgg_trunk_tensor_names() {
    std::vector<std::string> names;
    for (const auto& l : kVggLayers) {
        names.push_back(std::string("phi/") + l.name + "/weight");
        names.push_back(std::string("phi/") + l.name + "/bias");
    }
    names.push_back("phi/mean");
    names.push_back("phi/std");
    return names;
}

template <typename T>
PerceptualT<T> PerceptualT<T>::identity() {
    PerceptualT p;
    p.kind_ = PhiKind::Identity;
    return p;
}

template <typename T>
PerceptualT<T> PerceptualT<T>::toy() {
    PerceptualT p;
    p.kind_ = PhiKind::Toy;
    Rng rng(0x70D0);
    auto add_layer = [&](const std::string& name, int in_ch, int out_ch) {
        Layer l;
        TensorT<T> w = seeded_normal<T>(rng, {out_ch, in_ch, 3, 3},
                                        std::sqrt(2.0 / (in_ch * 9.0)));
        TensorT<T> b = seeded_normal<T>(rng, {out_ch}, 0.1);
        p.tensors_.emplace_back("phi/" + name + "/weight", w);
        p.tensors_.emplace_back("phi/" + name + "/bias", b);
        l.w = VarT<T>::constant(std::move(w));
        l.b = VarT<T>::constant(std::move(b));
        p.layers_.push_back(std::move(l));
    };
    add_layer("toy1", 3, 8);
    add_layer("toy2", 8, 8);
    return p;
}

template <typename T>
PerceptualT<T> PerceptualT<T>::vgg_from_file(const std::string& path) {
    auto blob = read_tensor_blob(path);
    auto take = [&](const std::string& name, const std::vector<int>& want_shape) {
        auto it = blob.find(name);
        if (it == blob.end())
            fail(ErrorCategory::Checkpoint, path + ": missing tensor " + name);
        if (it->second.shape() != want_shape)
            fail(ErrorCategory::Checkpoint,
                 path + ": tensor " + name + " has shape " +
                     Tensor::shape_str(it->second.shape()) + ", expected " +
                     Tensor::shape_str(want_shape));
        return it->second.template cast<T>();
    };

    PerceptualT p;
    p.kind_ = PhiKind::VggFile;
    for (const auto& spec : kVggLayers) {
        Layer l;
        TensorT<T> w = take(std::string("phi/") + spec.name + "/weight",
                            {spec.out_ch, spec.in_ch, 3, 3});
        TensorT<T> b = take(std::string("phi/") + spec.name + "/bias", {spec.out_ch});
        p.tensors_.emplace_back(std::string("phi/") + spec.name + "/weight", w);
        p.tensors_.emplace_back(std::string("phi/") + spec.name + "/bias", b);
        l.w = VarT<T>::constant(std::move(w));
        l.b = VarT<T>::constant(std::move(b));
        l.pool_before = spec.pool_before;
        p.layers_.push_back(std::move(l));
    }
    TensorT<T> mean = take("phi/mean", {3});
    TensorT<T> stddev = take("phi/std", {3});
    p.tensors_.emplace_back("phi/mean", mean);
    p.tensors_.emplace_back("phi/std", stddev);
    // Inputs arrive in [-1, 1]; fold the [0,1] remap and the per-channel
    // standardization into one affine: (x + 1 - 2 mean) / (2 std).
    for (int c = 0; c < 3; ++c) {
        T s = stddev[c];
        if (!(s > T(0)))
            fail(ErrorCategory::Checkpoint, path + ": phi/std must be positive");
        p.renorm_a_.push_back(T(1) / (T(2) * s));
        p.renorm_b_.push_back((T(1) - T(2) * mean[c]) / (T(2) * s));
    }
    return p;
}

template <typename T>
PerceptualT<T> PerceptualT<T>::from_config(const ModelConfig& cfg) {
    switch (cfg.phi_kind) {
    case PhiKind::Identity: return identity();
    case PhiKind::Toy: return toy();
    case PhiKind::VggFile:
        if (cfg.phi_path.empty())
            fail(ErrorCategory::Config, "phi_path is required when phi_kind is vgg_file");
        return vgg_from_file(cfg.phi_path);
    }
    fail(ErrorCategory::Internal, "unreachable phi kind");
}

template <typename T>
VarT<T> PerceptualT<T>::operator()(const VarT<T>& x) const {
    if (kind_ == PhiKind::Identity) return x;
    VarT<T> h = x;
    if (!renorm_a_.empty()) h = nn::channel_affine(h, renorm_a_, renorm_b_);
    for (const Layer& l : layers_) {
        if (l.pool_before) h = nn::maxpool_2x2(h);
        h = nn::relu(nn::conv2d(h, l.w, l.b, 1, l.pad));
    }
    return h;
}

template class PerceptualT<float>;
template class PerceptualT<double>;

} // namespace missgan
