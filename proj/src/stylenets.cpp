#include "missgan/stylenets.hpp"

#include "missgan/nnops.hpp"

#include <algorithm>

namespace missgan {

namespace {

template <typename T>
void check_labels(const std::vector<int>& labels, int n, int k) {
    if (static_cast<int>(labels.size()) != n)
        fail(ErrorCategory::Internal, "label count does not match batch size");
    for (int y : labels)
        if (y < 0 || y >= k)
            fail(ErrorCategory::Args, "invalid domain index " + std::to_string(y));
}

} // namespace

template <typename T>
MappingNetworkT<T>::MappingNetworkT(const ModelConfig& cfg, Rng rng)
    : latent_dim_(cfg.latent_dim), num_domains_(cfg.num_domains) {
    const int width = cfg.mapping_width;
    int in = latent_dim_;
    for (int i = 0; i < 4; ++i) {
        trunk_.push_back(make_linear(params_, rng, "mapping/trunk/fc" + std::to_string(i), in,
                                     width));
        in = width;
    }
    heads_.resize(static_cast<size_t>(num_domains_));
    for (int k = 0; k < num_domains_; ++k) {
        std::string base = "mapping/head" + std::to_string(k);
        for (int i = 0; i < 4; ++i) {
            int out = i == 3 ? cfg.style_dim : width;
            heads_[static_cast<size_t>(k)].push_back(
                make_linear(params_, rng, base + "/fc" + std::to_string(i), width, out));
        }
    }
}

template <typename T>
VarT<T> MappingNetworkT<T>::forward(const VarT<T>& z, const std::vector<int>& labels) const {
    if (z.value().ndim() != 2 || z.value().dim(1) != latent_dim_)
        fail(ErrorCategory::Args, "latent code must be N x " + std::to_string(latent_dim_) +
                                      ", got " + TensorT<T>::shape_str(z.value().shape()));
    check_labels<T>(labels, z.value().dim(0), num_domains_);

    VarT<T> h = z;
    for (const auto& fc : trunk_) h = nn::relu(fc(h));

    std::vector<VarT<T>> head_outs;
    head_outs.reserve(heads_.size());
    for (const auto& head : heads_) {
        VarT<T> o = h;
        for (size_t i = 0; i < head.size(); ++i) {
            o = head[i](o);
            if (i + 1 < head.size()) o = nn::relu(o);
        }
        head_outs.push_back(o);
    }
    return nn::select_rows(head_outs, labels);
}

template <typename T>
StyleEncoderT<T>::StyleEncoderT(const ModelConfig& cfg, Rng rng)
    : num_domains_(cfg.num_domains), image_size_(cfg.image_size) {
    const int w = cfg.base_width;
    const int cap = 8 * w;
    stem_ = make_conv(params_, rng, "style_encoder/stem", 3, w, 3, 1, 1);
    int ch = w;
    const int depth = backbone_depth(image_size_);
    for (int i = 0; i < depth; ++i) {
        int out_ch = std::min(2 * ch, cap);
        blocks_.push_back(PlainResBlockT<T>::make(
            params_, rng, "style_encoder/block" + std::to_string(i), ch, out_ch));
        ch = out_ch;
    }
    for (int k = 0; k < num_domains_; ++k)
        heads_.push_back(
            make_linear(params_, rng, "style_encoder/head" + std::to_string(k), ch,
                        cfg.style_dim));
}

template <typename T>
VarT<T> StyleEncoderT<T>::forward(const VarT<T>& x, const std::vector<int>& labels) const {
    const auto& xs = x.value().shape();
    if (x.value().ndim() != 4 || xs[1] != 3 || xs[2] != image_size_ || xs[3] != image_size_)
        fail(ErrorCategory::Args, "style encoder expects N x 3 x " +
                                      std::to_string(image_size_) + " x " +
                                      std::to_string(image_size_) + " input, got " +
                                      TensorT<T>::shape_str(xs));
    check_labels<T>(labels, xs[0], num_domains_);

    VarT<T> h = stem_(x);
    for (const auto& b : blocks_) h = b(h);
    h = nn::global_avg_pool(nn::leaky_relu(h, T(0.2)));

    std::vector<VarT<T>> head_outs;
    head_outs.reserve(heads_.size());
    for (const auto& head : heads_) head_outs.push_back(head(h));
    return nn::select_rows(head_outs, labels);
}

template class MappingNetworkT<float>;
template class MappingNetworkT<double>;
template class StyleEncoderT<float>;
template class StyleEncoderT<double>;

} // namespace missgan
