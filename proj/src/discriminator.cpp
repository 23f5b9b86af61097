#include "missgan/discriminator.hpp"

#include "missgan/nnops.hpp"

#include <algorithm>

namespace missgan {

template <typename T>
DiscriminatorT<T>::DiscriminatorT(const ModelConfig& cfg, Rng rng)
    : num_domains_(cfg.num_domains), image_size_(cfg.image_size) {
    const int w = cfg.base_width;
    const int cap = 8 * w;
    stem_ = make_conv(params_, rng, "discriminator/stem", 3, w, 3, 1, 1);
    int ch = w;
    const int depth = backbone_depth(image_size_);
    for (int i = 0; i < depth; ++i) {
        int out_ch = std::min(2 * ch, cap);
        blocks_.push_back(PlainResBlockT<T>::make(
            params_, rng, "discriminator/block" + std::to_string(i), ch, out_ch));
        ch = out_ch;
    }
    final_ = make_conv(params_, rng, "discriminator/final", ch, num_domains_, 4, 1, 0);
}

template <typename T>
VarT<T> DiscriminatorT<T>::forward(const VarT<T>& x, const std::vector<int>& labels) const {
    const auto& xs = x.value().shape();
    if (x.value().ndim() != 4 || xs[1] != 3 || xs[2] != image_size_ || xs[3] != image_size_)
        fail(ErrorCategory::Args, "discriminator expects N x 3 x " +
                                      std::to_string(image_size_) + " x " +
                                      std::to_string(image_size_) + " input, got " +
                                      TensorT<T>::shape_str(xs));
    if (static_cast<int>(labels.size()) != xs[0])
        fail(ErrorCategory::Internal, "label count does not match batch size");

    VarT<T> h = stem_(x);
    for (const auto& b : blocks_) h = b(h);
    h = final_(nn::leaky_relu(h, T(0.2)));
    h = nn::reshape(h, {xs[0], num_domains_});
    return nn::select_logits(h, labels);
}

template <typename T>
VarT<T> DiscriminatorT<T>::forward_jvp(const TensorT<T>& x, const TensorT<T>& tangent,
                                       const std::vector<int>& labels) const {
    if (!x.same_shape(tangent))
        fail(ErrorCategory::Internal, "tangent shape does not match input");
    VarT<T> p = VarT<T>::constant(x);
    VarT<T> t = VarT<T>::constant(tangent);

    p = VarT<T>::constant(stem_(p).value());
    t = nn::conv2d(t, stem_.w, VarT<T>(), stem_.stride, stem_.pad);
    for (const auto& b : blocks_) b.jvp(p, t);

    TensorT<T> mask(p.value().shape());
    for (int64_t i = 0; i < mask.numel(); ++i)
        mask[i] = p.value()[i] > T(0) ? T(1) : T(0.2);
    t = nn::mul(t, VarT<T>::constant(std::move(mask)));
    t = nn::conv2d(t, final_.w, VarT<T>(), 1, 0);
    t = nn::reshape(t, {x.dim(0), num_domains_});
    return nn::sum(nn::select_logits(t, labels));
}

template class DiscriminatorT<float>;
template class DiscriminatorT<double>;

} // namespace missgan
