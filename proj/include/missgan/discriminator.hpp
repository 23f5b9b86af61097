#pragma once

#include "missgan/blocks.hpp"
#include "missgan/config.hpp"

#include <vector>

namespace missgan {

// Multi-domain discriminator: shared backbone to 4x4, final 4x4 conv
// producing K logits, with the domain label selecting one per sample.
template <typename T>
class DiscriminatorT {
public:
    DiscriminatorT(const ModelConfig& cfg, Rng rng);

    // Per-sample logit of the labeled branch, shape N.
    VarT<T> forward(const VarT<T>& x, const std::vector<int>& labels) const;

    // Directional derivative of the selected logits along `tangent`,
    // summed over the batch and wired to the parameters. Combined with a
    // plain input-gradient pass this yields exact parameter gradients of
    // the gradient-norm penalty without general second-order support.
    VarT<T> forward_jvp(const TensorT<T>& x, const TensorT<T>& tangent,
                        const std::vector<int>& labels) const;

    ParamSetT<T>& params() { return params_; }
    const ParamSetT<T>& params() const { return params_; }

private:
    int num_domains_ = 0;
    int image_size_ = 0;
    ParamSetT<T> params_;
    Conv2dLayerT<T> stem_;
    std::vector<PlainResBlockT<T>> blocks_;
    Conv2dLayerT<T> final_;
};

using Discriminator = DiscriminatorT<float>;

} // namespace missgan
