#pragma once

#include "missgan/config.hpp"
#include "missgan/params.hpp"
#include "missgan/rng.hpp"

#include <array>
#include <vector>

namespace missgan {

// Content representation produced by the generator's encoder half.
// GANILLA variants carry three skip taps; the STARGAN2 variant has none
// and `content` is the feature map right before style injection.
template <typename T>
struct EncodedT {
    VarT<T> content;
    std::vector<VarT<T>> skips;
};

template <typename T>
class GeneratorT {
public:
    GeneratorT(const ModelConfig& cfg, Rng rng);

    EncodedT<T> encode(const VarT<T>& x) const;
    VarT<T> decode(const EncodedT<T>& e, const VarT<T>& s) const;
    VarT<T> forward(const VarT<T>& x, const VarT<T>& s) const;

    ParamSetT<T>& params() { return params_; }
    const ParamSetT<T>& params() const { return params_; }
    GeneratorVariant variant() const { return variant_; }

private:
    struct EncBlock {
        Conv2dLayerT<T> conv1, conv2, shortcut;
        bool has_shortcut = false;
    };
    struct ResDecBlock {
        Conv2dLayerT<T> conv1, conv2, shortcut;
        AdainProjT<T> ada1, ada2;
    };
    struct PlainDecStage {
        Conv2dLayerT<T> conv;
        AdainProjT<T> ada;
    };
    struct SgBlock {
        Conv2dLayerT<T> conv1, conv2, shortcut;
        AdainProjT<T> ada1, ada2;
        bool has_shortcut = false;
        bool resample = false;
    };

    void build_ganilla(Rng& rng);
    void build_stargan2(Rng& rng);

    EncodedT<T> encode_ganilla(const VarT<T>& x) const;
    EncodedT<T> encode_stargan2(const VarT<T>& x) const;
    VarT<T> decode_res(const EncodedT<T>& e, const VarT<T>& s) const;
    VarT<T> decode_plain(const EncodedT<T>& e, const VarT<T>& s) const;
    VarT<T> decode_stargan2(const EncodedT<T>& e, const VarT<T>& s) const;

    VarT<T> enc_block_forward(const EncBlock& b, const VarT<T>& x) const;
    VarT<T> sg_in_block(const SgBlock& b, const VarT<T>& x) const;
    VarT<T> sg_ada_block(const SgBlock& b, const VarT<T>& x, const VarT<T>& s) const;

    GeneratorVariant variant_;
    int w_ = 0;
    int style_dim_ = 0;
    ParamSetT<T> params_;

    Conv2dLayerT<T> stem_;
    std::array<std::array<EncBlock, 2>, 4> enc_layers_;
    std::array<ResDecBlock, 3> res_blocks_;
    std::array<Conv2dLayerT<T>, 3> skip_proj_;
    std::array<PlainDecStage, 3> plain_stages_;
    Conv2dLayerT<T> final_;

    Conv2dLayerT<T> from_rgb_, to_rgb_;
    std::array<SgBlock, 4> sg_down_;
    std::array<SgBlock, 2> sg_mid_in_;
    std::array<SgBlock, 2> sg_mid_ada_;
    std::array<SgBlock, 4> sg_up_;
};

using Generator = GeneratorT<float>;

} // namespace missgan
