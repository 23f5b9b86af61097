#pragma once

#include "missgan/checkpoint.hpp"
#include "missgan/config.hpp"
#include "missgan/data.hpp"
#include "missgan/discriminator.hpp"
#include "missgan/generator.hpp"
#include "missgan/losses.hpp"
#include "missgan/perceptual.hpp"
#include "missgan/stylenets.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace missgan {

// Diversity weight under linear decay: initial * max(0, 1 - iter / N).
float ds_weight_at(int64_t iteration, float initial, int decay_iters);

// Adam for one parameter set. Weight decay is folded into the gradient
// before the moment updates (L2 style, matching torch.optim.Adam).
class AdamOpt {
public:
    AdamOpt() = default;
    AdamOpt(const ParamSet& ps, float lr, const ModelConfig& cfg);

    // applies one update from the accumulated gradients; empty gradients
    // count as zero, which still moves parameters through weight decay
    void step(ParamSet& ps);

    int64_t steps() const { return t_; }
    void set_steps(int64_t t) { t_ = t; }

    void append_state(const std::string& prefix, NamedTensors& out) const;
    void load_state(const std::string& prefix, const std::map<std::string, Tensor>& blob);

private:
    float lr_ = 0.0f, beta1_ = 0.0f, beta2_ = 0.99f, eps_ = 1e-8f, wd_ = 0.0f;
    int64_t t_ = 0;
    std::vector<std::pair<std::string, Tensor>> m_, v_;
};

// One optimization step per iteration runs, in order: a discriminator
// update against latent-styled fakes, one against reference-styled fakes,
// a generator round driven by mapped latents (stepping G, F and E), a
// generator round driven by encoded references (stepping G only), the EMA
// update of G/F/E, and the diversity-weight decay tick. The returned
// report carries the latent-round values.
class Trainer {
public:
    explicit Trainer(const ModelConfig& cfg);

    LossReport train_step(const Batch& batch);

    // substeps exposed so alternation is directly observable
    LossReport step_discriminator(const Batch& batch, bool latent_styles);
    LossReport step_generator(const Batch& batch, bool latent_styles);
    void update_ema();

    // runs train_step until total_iters, appending one CSV row per
    // iteration to <out_dir>/train_log.csv and writing a checkpoint
    // directory every checkpoint_every iterations plus at the end
    void fit(const DatasetManifest& data, int64_t total_iters, int64_t checkpoint_every,
             const std::string& out_dir);

    void save_checkpoint(const std::string& dir) const;
    void load_checkpoint(const std::string& dir);

    int64_t iteration() const { return iteration_; }
    float current_ds_weight() const;

    GeneratorT<float>& generator() { return g_; }
    MappingNetworkT<float>& mapping() { return f_; }
    StyleEncoderT<float>& style_encoder() { return e_; }
    DiscriminatorT<float>& discriminator() { return d_; }
    PerceptualT<float>& phi() { return phi_; }
    GeneratorT<float>& ema_generator() { return ema_g_; }
    MappingNetworkT<float>& ema_mapping() { return ema_f_; }
    StyleEncoderT<float>& ema_style_encoder() { return ema_e_; }
    const ModelConfig& config() const { return cfg_; }

private:
    Batch make_batch(const DatasetManifest& data, int64_t k) const;

    ModelConfig cfg_;
    GeneratorT<float> g_;
    MappingNetworkT<float> f_;
    StyleEncoderT<float> e_;
    DiscriminatorT<float> d_;
    GeneratorT<float> ema_g_;
    MappingNetworkT<float> ema_f_;
    StyleEncoderT<float> ema_e_;
    PerceptualT<float> phi_;
    AdamOpt opt_g_, opt_f_, opt_e_, opt_d_;
    Rng data_rng_;
    int64_t iteration_ = 0;
};

} // namespace missgan
