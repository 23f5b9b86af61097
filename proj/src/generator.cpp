#include "missgan/generator.hpp"

#include "missgan/nnops.hpp"

#include <cmath>

namespace missgan {

namespace {

constexpr float kLrelu = 0.2f;
constexpr float kEps = 1e-5f;

template <typename T>
void check_input(const TensorT<T>& x) {
    if (x.ndim() != 4 || x.dim(1) != 3)
        fail(ErrorCategory::Args, "generator expects N x 3 x H x W input, got " +
                                      TensorT<T>::shape_str(x.shape()));
    if (x.dim(2) % 16 != 0 || x.dim(3) % 16 != 0)
        fail(ErrorCategory::Args, "input size " + std::to_string(x.dim(2)) + "x" +
                                      std::to_string(x.dim(3)) + " not divisible by 16");
}

} // namespace

template <typename T>
GeneratorT<T>::GeneratorT(const ModelConfig& cfg, Rng rng)
    : variant_(cfg.generator_variant), w_(cfg.base_width), style_dim_(cfg.style_dim) {
    if (variant_ == GeneratorVariant::Stargan2)
        build_stargan2(rng);
    else
        build_ganilla(rng);
}

template <typename T>
void GeneratorT<T>::build_ganilla(Rng& rng) {
    stem_ = make_conv(params_, rng, "encoder/stem/conv", 3, w_, 7, 1, 3);
    int in_ch = w_;
    for (int layer = 0; layer < 4; ++layer) {
        int out_ch = w_ << layer;
        int stride = layer == 0 ? 1 : 2;
        for (int blk = 0; blk < 2; ++blk) {
            std::string base =
                "encoder/layer" + std::to_string(layer + 1) + "/block" + std::to_string(blk);
            EncBlock& b = enc_layers_[layer][blk];
            int s = blk == 0 ? stride : 1;
            int bin = blk == 0 ? in_ch : out_ch;
            b.conv1 = make_conv(params_, rng, base + "/conv1", bin, out_ch, 3, s, 1);
            b.conv2 = make_conv(params_, rng, base + "/conv2", out_ch, out_ch, 3, 1, 1);
            b.has_shortcut = bin != out_ch || s != 1;
            if (b.has_shortcut)
                b.shortcut = make_conv(params_, rng, base + "/shortcut", bin, out_ch, 1, s, 0,
                                       /*bias=*/false);
        }
        in_ch = out_ch;
    }

    if (variant_ == GeneratorVariant::GanillaRes) {
        int ch = 8 * w_;
        for (int i = 0; i < 3; ++i) {
            std::string base = "decoder/block" + std::to_string(i);
            ResDecBlock& b = res_blocks_[i];
            int out_ch = ch / 2;
            b.conv1 = make_conv(params_, rng, base + "/conv1", ch, out_ch, 3, 1, 1);
            b.ada1 = make_adain_proj(params_, rng, base + "/adain1", style_dim_, out_ch);
            b.conv2 = make_conv(params_, rng, base + "/conv2", out_ch, out_ch, 3, 1, 1);
            b.ada2 = make_adain_proj(params_, rng, base + "/adain2", style_dim_, out_ch);
            b.shortcut =
                make_conv(params_, rng, base + "/shortcut", ch, out_ch, 1, 1, 0, /*bias=*/false);
            skip_proj_[2 - i] = make_conv(params_, rng, "decoder/skip_proj" + std::to_string(2 - i),
                                          out_ch, out_ch, 1, 1, 0, /*bias=*/false);
            ch = out_ch;
        }
    } else {
        int ch = 8 * w_;
        for (int i = 0; i < 3; ++i) {
            std::string base = "decoder/stage" + std::to_string(i);
            PlainDecStage& st = plain_stages_[i];
            int out_ch = ch / 2;
            st.conv = make_conv(params_, rng, base + "/conv", ch, out_ch, 3, 1, 1);
            st.ada = make_adain_proj(params_, rng, base + "/adain", style_dim_, out_ch);
            ch = out_ch;
        }
    }
    final_ = make_conv(params_, rng, "decoder/final/conv", w_, 3, 3, 1, 1);
}

template <typename T>
void GeneratorT<T>::build_stargan2(Rng& rng) {
    from_rgb_ = make_conv(params_, rng, "encoder/from_rgb", 3, w_, 3, 1, 1);
    int ch = w_;
    const int cap = 8 * w_;
    for (int i = 0; i < 4; ++i) {
        std::string base = "encoder/down" + std::to_string(i);
        SgBlock& b = sg_down_[i];
        int out_ch = std::min(2 * ch, cap);
        b.conv1 = make_conv(params_, rng, base + "/conv1", ch, ch, 3, 1, 1);
        b.conv2 = make_conv(params_, rng, base + "/conv2", ch, out_ch, 3, 1, 1);
        b.has_shortcut = ch != out_ch;
        if (b.has_shortcut)
            b.shortcut = make_conv(params_, rng, base + "/shortcut", ch, out_ch, 1, 1, 0, false);
        b.resample = true;
        ch = out_ch;
    }
    for (int i = 0; i < 2; ++i) {
        std::string base = "encoder/mid_in" + std::to_string(i);
        SgBlock& b = sg_mid_in_[i];
        b.conv1 = make_conv(params_, rng, base + "/conv1", ch, ch, 3, 1, 1);
        b.conv2 = make_conv(params_, rng, base + "/conv2", ch, ch, 3, 1, 1);
    }
    for (int i = 0; i < 2; ++i) {
        std::string base = "decoder/mid_ada" + std::to_string(i);
        SgBlock& b = sg_mid_ada_[i];
        b.conv1 = make_conv(params_, rng, base + "/conv1", ch, ch, 3, 1, 1);
        b.ada1 = make_adain_proj(params_, rng, base + "/adain1", style_dim_, ch);
        b.conv2 = make_conv(params_, rng, base + "/conv2", ch, ch, 3, 1, 1);
        b.ada2 = make_adain_proj(params_, rng, base + "/adain2", style_dim_, ch);
    }
    for (int i = 0; i < 4; ++i) {
        std::string base = "decoder/up" + std::to_string(i);
        SgBlock& b = sg_up_[i];
        int out_ch = i == 0 ? ch : ch / 2;
        b.ada1 = make_adain_proj(params_, rng, base + "/adain1", style_dim_, ch);
        b.conv1 = make_conv(params_, rng, base + "/conv1", ch, out_ch, 3, 1, 1);
        b.ada2 = make_adain_proj(params_, rng, base + "/adain2", style_dim_, out_ch);
        b.conv2 = make_conv(params_, rng, base + "/conv2", out_ch, out_ch, 3, 1, 1);
        b.has_shortcut = ch != out_ch;
        if (b.has_shortcut)
            b.shortcut = make_conv(params_, rng, base + "/shortcut", ch, out_ch, 1, 1, 0, false);
        b.resample = true;
        ch = out_ch;
    }
    to_rgb_ = make_conv(params_, rng, "decoder/to_rgb/conv", w_, 3, 1, 1, 0);
}

template <typename T>
VarT<T> GeneratorT<T>::enc_block_forward(const EncBlock& b, const VarT<T>& x) const {
    VarT<T> h = nn::relu(nn::instance_norm(b.conv1(x), T(kEps)));
    h = nn::instance_norm(b.conv2(h), T(kEps));
    VarT<T> sc = b.has_shortcut ? b.shortcut(x) : x;
    return nn::relu(nn::add(h, sc));
}

template <typename T>
EncodedT<T> GeneratorT<T>::encode_ganilla(const VarT<T>& x) const {
    VarT<T> h = nn::relu(nn::instance_norm(stem_(x), T(kEps)));
    h = nn::maxpool_3x3_s2(h);
    EncodedT<T> e;
    for (int layer = 0; layer < 4; ++layer) {
        h = enc_block_forward(enc_layers_[layer][0], h);
        h = enc_block_forward(enc_layers_[layer][1], h);
        if (layer < 3) e.skips.push_back(h);
    }
    e.content = h;
    return e;
}

template <typename T>
VarT<T> GeneratorT<T>::sg_in_block(const SgBlock& b, const VarT<T>& x) const {
    VarT<T> h = b.conv1(nn::leaky_relu(nn::instance_norm(x, T(kEps)), T(kLrelu)));
    if (b.resample) h = nn::avgpool_2x2(h);
    h = b.conv2(nn::leaky_relu(nn::instance_norm(h, T(kEps)), T(kLrelu)));
    VarT<T> sc = b.has_shortcut ? b.shortcut(x) : x;
    if (b.resample) sc = nn::avgpool_2x2(sc);
    return nn::scale(nn::add(h, sc), T(1) / std::sqrt(T(2)));
}

template <typename T>
VarT<T> GeneratorT<T>::sg_ada_block(const SgBlock& b, const VarT<T>& x, const VarT<T>& s) const {
    auto [g1, b1] = b.ada1(s);
    VarT<T> h = nn::leaky_relu(nn::adain(x, g1, b1, T(kEps)), T(kLrelu));
    if (b.resample) h = nn::upsample_nearest(h, 2);
    h = b.conv1(h);
    auto [g2, b2] = b.ada2(s);
    h = b.conv2(nn::leaky_relu(nn::adain(h, g2, b2, T(kEps)), T(kLrelu)));
    VarT<T> sc = x;
    if (b.resample) sc = nn::upsample_nearest(sc, 2);
    if (b.has_shortcut) sc = b.shortcut(sc);
    return nn::scale(nn::add(h, sc), T(1) / std::sqrt(T(2)));
}

template <typename T>
EncodedT<T> GeneratorT<T>::encode_stargan2(const VarT<T>& x) const {
    VarT<T> h = from_rgb_(x);
    for (const SgBlock& b : sg_down_) h = sg_in_block(b, h);
    for (const SgBlock& b : sg_mid_in_) h = sg_in_block(b, h);
    EncodedT<T> e;
    e.content = h;
    return e;
}

template <typename T>
EncodedT<T> GeneratorT<T>::encode(const VarT<T>& x) const {
    check_input(x.value());
    return variant_ == GeneratorVariant::Stargan2 ? encode_stargan2(x) : encode_ganilla(x);
}

template <typename T>
VarT<T> GeneratorT<T>::decode_res(const EncodedT<T>& e, const VarT<T>& s) const {
    if (e.skips.size() != 3)
        fail(ErrorCategory::Internal, "decoder expects 3 encoder skips, got " +
                                          std::to_string(e.skips.size()));
    VarT<T> h = e.content;
    for (int i = 0; i < 3; ++i) {
        const ResDecBlock& b = res_blocks_[i];
        auto [g1, b1] = b.ada1(s);
        VarT<T> r = nn::relu(nn::adain(b.conv1(h), g1, b1, T(kEps)));
        r = nn::upsample_nearest(r, 2);
        auto [g2, b2] = b.ada2(s);
        r = nn::relu(nn::adain(b.conv2(r), g2, b2, T(kEps)));
        VarT<T> sc = b.shortcut(nn::upsample_nearest(h, 2));
        h = nn::add(r, sc);
        const VarT<T>& skip = e.skips[static_cast<size_t>(2 - i)];
        if (!skip.value().same_shape(h.value()))
            fail(ErrorCategory::Internal,
                 "skip feature shape " + TensorT<T>::shape_str(skip.value().shape()) +
                     " does not match decoder state " +
                     TensorT<T>::shape_str(h.value().shape()));
        h = nn::add(h, skip_proj_[static_cast<size_t>(2 - i)](skip));
    }
    return final_(nn::upsample_nearest(h, 2));
}

template <typename T>
VarT<T> GeneratorT<T>::decode_plain(const EncodedT<T>& e, const VarT<T>& s) const {
    if (e.skips.size() != 3)
        fail(ErrorCategory::Internal, "decoder expects 3 encoder skips, got " +
                                          std::to_string(e.skips.size()));
    VarT<T> h = e.content;
    for (int i = 0; i < 3; ++i) {
        const PlainDecStage& st = plain_stages_[i];
        auto [g, b] = st.ada(s);
        h = nn::relu(nn::adain(st.conv(nn::upsample_nearest(h, 2)), g, b, T(kEps)));
        const VarT<T>& skip = e.skips[static_cast<size_t>(2 - i)];
        if (!skip.value().same_shape(h.value()))
            fail(ErrorCategory::Internal,
                 "skip feature shape " + TensorT<T>::shape_str(skip.value().shape()) +
                     " does not match decoder state " +
                     TensorT<T>::shape_str(h.value().shape()));
        h = nn::add(h, skip);
    }
    return final_(nn::upsample_nearest(h, 2));
}

template <typename T>
VarT<T> GeneratorT<T>::decode_stargan2(const EncodedT<T>& e, const VarT<T>& s) const {
    VarT<T> h = e.content;
    for (const SgBlock& b : sg_mid_ada_) h = sg_ada_block(b, h, s);
    for (const SgBlock& b : sg_up_) h = sg_ada_block(b, h, s);
    return to_rgb_(nn::leaky_relu(nn::instance_norm(h, T(kEps)), T(kLrelu)));
}

template <typename T>
VarT<T> GeneratorT<T>::decode(const EncodedT<T>& e, const VarT<T>& s) const {
    if (s.value().ndim() != 2 || s.value().dim(1) != style_dim_)
        fail(ErrorCategory::Args, "style code must be N x " + std::to_string(style_dim_) +
                                      ", got " + TensorT<T>::shape_str(s.value().shape()));
    switch (variant_) {
    case GeneratorVariant::GanillaRes: return decode_res(e, s);
    case GeneratorVariant::GanillaPlain: return decode_plain(e, s);
    case GeneratorVariant::Stargan2: return decode_stargan2(e, s);
    }
    fail(ErrorCategory::Internal, "unreachable generator variant");
}

template <typename T>
VarT<T> GeneratorT<T>::forward(const VarT<T>& x, const VarT<T>& s) const {
    return decode(encode(x), s);
}

template class GeneratorT<float>;
template class GeneratorT<double>;

} // namespace missgan
