#pragma once

#include "missgan/config.hpp"
#include "missgan/generator.hpp"
#include "missgan/perceptual.hpp"
#include "missgan/stylenets.hpp"
#include "missgan/tensor.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace missgan {

struct EvalScores {
    float content = 0.0f;
    float diversity = 0.0f;
};

// content = mean feature distance from the input to each output;
// diversity = mean pairwise pixel distance among the outputs, 0 when
// there are fewer than two
EvalScores score_outputs(const PerceptualT<float>& phi, const Tensor& input_chw,
                         const std::vector<Tensor>& outputs_chw);

// Output filename for one styled generation: <stem>_styleNN.png.
std::string style_output_name(const std::string& input_stem, int style_index);

// Inference over a saved checkpoint directory. Uses the EMA parameter
// copies unless told otherwise.
class ModelSession {
public:
    static ModelSession open(const std::string& checkpoint_dir, bool use_ema = true);

    const ModelConfig& config() const { return cfg_; }
    int64_t iteration() const { return iteration_; }

    // one output per style, all from mapped standard-normal latents;
    // deterministic in the seed
    std::vector<Tensor> generate_latent(const Tensor& image_chw, int target_domain,
                                        int num_styles, uint64_t seed) const;

    Tensor generate_reference(const Tensor& image_chw, const Tensor& reference_chw,
                              int target_domain) const;

    EvalScores eval_scores(const Tensor& image_chw, int target_domain, int num_styles,
                           uint64_t seed);

private:
    ModelSession() = default;
    const PerceptualT<float>& ensure_phi();
    Tensor run_generator(const Tensor& image_chw, const VarT<float>& style) const;

    ModelConfig cfg_;
    int64_t iteration_ = 0;
    std::unique_ptr<GeneratorT<float>> g_;
    std::unique_ptr<MappingNetworkT<float>> f_;
    std::unique_ptr<StyleEncoderT<float>> e_;
    std::optional<PerceptualT<float>> phi_;
};

} // namespace missgan
