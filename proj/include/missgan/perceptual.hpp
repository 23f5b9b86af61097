#pragma once

#include "missgan/config.hpp"
#include "missgan/graph.hpp"
#include "missgan/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace missgan {

// Frozen feature extractor for the content features loss. Parameters are
// graph constants: gradients flow through the features to the image but
// never into the extractor.
template <typename T>
class PerceptualT {
public:
    static PerceptualT identity();
    static PerceptualT toy();
    // Tensor blob holding phi/conv*_*/{weight,bias} plus phi/mean, phi/std.
    static PerceptualT vgg_from_file(const std::string& path);
    static PerceptualT from_config(const ModelConfig& cfg);

    VarT<T> operator()(const VarT<T>& x) const;

    PhiKind kind() const { return kind_; }
    const std::vector<std::pair<std::string, TensorT<T>>>& tensors() const { return tensors_; }

private:
    struct Layer {
        VarT<T> w, b;
        int pad = 1;
        bool pool_before = false;
    };

    PhiKind kind_ = PhiKind::Identity;
    std::vector<Layer> layers_;
    std::vector<T> renorm_a_, renorm_b_;
    std::vector<std::pair<std::string, TensorT<T>>> tensors_;
};

using Perceptual = PerceptualT<float>;

// Expected VGG16 trunk tensor names in load order.
std::vector<std::string> vgg_trunk_tensor_names();

} // namespace missgan
