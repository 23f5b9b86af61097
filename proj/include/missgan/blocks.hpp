#pragma once

#include "missgan/params.hpp"

#include <cmath>
#include <string>

namespace missgan {

// Pre-activation residual downsampling block without normalization,
// used by the style encoder and discriminator backbones:
// branch lrelu -> conv3x3 -> avgpool -> lrelu -> conv3x3,
// shortcut (1x1 conv when widths differ) -> avgpool, sum scaled by 1/sqrt(2).
template <typename T>
struct PlainResBlockT {
    Conv2dLayerT<T> conv1, conv2, shortcut;
    bool has_shortcut = false;

    static PlainResBlockT make(ParamSetT<T>& ps, Rng& rng, const std::string& base, int in_ch,
                               int out_ch) {
        PlainResBlockT b;
        b.conv1 = make_conv(ps, rng, base + "/conv1", in_ch, in_ch, 3, 1, 1);
        b.conv2 = make_conv(ps, rng, base + "/conv2", in_ch, out_ch, 3, 1, 1);
        b.has_shortcut = in_ch != out_ch;
        if (b.has_shortcut)
            b.shortcut = make_conv(ps, rng, base + "/shortcut", in_ch, out_ch, 1, 1, 0, false);
        return b;
    }

    VarT<T> operator()(const VarT<T>& x) const {
        const T slope = T(0.2);
        VarT<T> h = nn::avgpool_2x2(conv1(nn::leaky_relu(x, slope)));
        h = conv2(nn::leaky_relu(h, slope));
        VarT<T> sc = has_shortcut ? shortcut(x) : x;
        sc = nn::avgpool_2x2(sc);
        return nn::scale(nn::add(h, sc), T(1) / std::sqrt(T(2)));
    }

    // Forward-mode pass: advances the primal values (kept out of the
    // gradient graph) together with a tangent that stays wired to the
    // convolution weights, so d(tangent_out)/d(weights) is exact.
    // Activation masks are taken from the primal point.
    void jvp(VarT<T>& p, VarT<T>& t) const {
        const T slope = T(0.2);
        auto masked = [&](const VarT<T>& primal, const VarT<T>& tan) {
            TensorT<T> mask(primal.value().shape());
            for (int64_t i = 0; i < mask.numel(); ++i)
                mask[i] = primal.value()[i] > T(0) ? T(1) : slope;
            return nn::mul(tan, VarT<T>::constant(std::move(mask)));
        };
        VarT<T> tb = masked(p, t);
        VarT<T> pb = nn::leaky_relu(p, slope);
        pb = VarT<T>::constant(conv1(pb).value());
        tb = nn::conv2d(tb, conv1.w, VarT<T>(), 1, 1);
        pb = VarT<T>::constant(nn::avgpool_2x2(pb).value());
        tb = nn::avgpool_2x2(tb);
        VarT<T> tb2 = masked(pb, tb);
        VarT<T> pb2 = nn::leaky_relu(pb, slope);
        pb2 = VarT<T>::constant(conv2(pb2).value());
        tb2 = nn::conv2d(tb2, conv2.w, VarT<T>(), 1, 1);

        VarT<T> ps = p, ts = t;
        if (has_shortcut) {
            ps = VarT<T>::constant(shortcut(ps).value());
            ts = nn::conv2d(ts, shortcut.w, VarT<T>(), 1, 0);
        }
        ps = VarT<T>::constant(nn::avgpool_2x2(ps).value());
        ts = nn::avgpool_2x2(ts);

        p = VarT<T>::constant(
            nn::scale(nn::add(pb2, ps), T(1) / std::sqrt(T(2))).value());
        t = nn::scale(nn::add(tb2, ts), T(1) / std::sqrt(T(2)));
    }
};

// Downsampling block count for a given input resolution: terminates at 4x4.
inline int backbone_depth(int image_size) {
    int depth = 0;
    int s = image_size;
    while (s > 4) {
        s /= 2;
        ++depth;
    }
    return depth;
}

} // namespace missgan
