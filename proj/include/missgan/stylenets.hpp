#pragma once

#include "missgan/blocks.hpp"
#include "missgan/config.hpp"

#include <vector>

namespace missgan {

// Latent-to-style MLP: shared trunk, one head per domain.
template <typename T>
class MappingNetworkT {
public:
    MappingNetworkT(const ModelConfig& cfg, Rng rng);

    // s[n] = head_{labels[n]}(trunk(z[n]))
    VarT<T> forward(const VarT<T>& z, const std::vector<int>& labels) const;

    ParamSetT<T>& params() { return params_; }
    const ParamSetT<T>& params() const { return params_; }

private:
    int latent_dim_ = 0;
    int num_domains_ = 0;
    ParamSetT<T> params_;
    std::vector<LinearLayerT<T>> trunk_;
    std::vector<std::vector<LinearLayerT<T>>> heads_;
};

// Image-to-style CNN: shared backbone to 4x4, global pooling,
// one linear head per domain.
template <typename T>
class StyleEncoderT {
public:
    StyleEncoderT(const ModelConfig& cfg, Rng rng);

    VarT<T> forward(const VarT<T>& x, const std::vector<int>& labels) const;

    ParamSetT<T>& params() { return params_; }
    const ParamSetT<T>& params() const { return params_; }

private:
    int num_domains_ = 0;
    int image_size_ = 0;
    ParamSetT<T> params_;
    Conv2dLayerT<T> stem_;
    std::vector<PlainResBlockT<T>> blocks_;
    std::vector<LinearLayerT<T>> heads_;
};

using MappingNetwork = MappingNetworkT<float>;
using StyleEncoder = StyleEncoderT<float>;

} // namespace missgan
