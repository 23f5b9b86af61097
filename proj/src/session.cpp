#include "missgan/session.hpp"

#include "missgan/checkpoint.hpp"
#include "missgan/losses.hpp"

#include <cstdio>
#include <filesystem>

namespace fs = std::filesystem;

namespace missgan {

namespace {

Tensor batch_of_one(const Tensor& img) {
    if (img.ndim() != 3 || img.dim(0) != 3)
        fail(ErrorCategory::Args, "image tensor must be 3 x H x W");
    return Tensor({1, 3, img.dim(1), img.dim(2)}, img.vec());
}

Tensor unbatch(const Tensor& t) {
    return Tensor({t.dim(1), t.dim(2), t.dim(3)}, t.vec());
}

} // namespace

EvalScores score_outputs(const PerceptualT<float>& phi, const Tensor& input_chw,
                         const std::vector<Tensor>& outputs_chw) {
    EvalScores scores;
    if (outputs_chw.empty()) return scores;

    VarT<float> x = VarT<float>::constant(batch_of_one(input_chw));
    double content = 0.0;
    for (const auto& out : outputs_chw)
        content += loss::content_feat(phi, x, VarT<float>::constant(batch_of_one(out)))
                       .value()[0];
    scores.content = static_cast<float>(content / static_cast<double>(outputs_chw.size()));

    if (outputs_chw.size() >= 2) {
        double diversity = 0.0;
        int64_t pairs = 0;
        for (size_t i = 0; i < outputs_chw.size(); ++i)
            for (size_t j = i + 1; j < outputs_chw.size(); ++j) {
                diversity += loss::ds(VarT<float>::constant(outputs_chw[i]),
                                      VarT<float>::constant(outputs_chw[j]))
                                 .value()[0];
                ++pairs;
            }
        scores.diversity = static_cast<float>(diversity / static_cast<double>(pairs));
    }
    return scores;
}

std::string style_output_name(const std::string& input_stem, int style_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_style%02d.png", style_index);
    return input_stem + buf;
}

ModelSession ModelSession::open(const std::string& checkpoint_dir, bool use_ema) {
    fs::path dir(checkpoint_dir);
    if (!fs::exists(dir / "manifest.json"))
        fail(ErrorCategory::Checkpoint,
             "not a checkpoint directory (no manifest.json): " + checkpoint_dir);
    CheckpointManifest man = read_manifest((dir / "manifest.json").string());

    ModelSession s;
    s.cfg_ = ModelConfig::parse_file((dir / "config.cfg").string());
    if (std::to_string(s.cfg_.hash()) != man.config_hash)
        fail(ErrorCategory::Checkpoint,
             "checkpoint config does not match its manifest hash");
    s.iteration_ = man.iteration;

    s.g_ = std::make_unique<GeneratorT<float>>(s.cfg_, Rng(s.cfg_.seed).fork("generator"));
    s.f_ = std::make_unique<MappingNetworkT<float>>(s.cfg_, Rng(s.cfg_.seed).fork("mapping"));
    s.e_ = std::make_unique<StyleEncoderT<float>>(s.cfg_,
                                                  Rng(s.cfg_.seed).fork("style_encoder"));

    const char* g_blob = use_ema ? "generator_ema.mgt" : "generator.mgt";
    const char* f_blob = use_ema ? "mapping_ema.mgt" : "mapping.mgt";
    const char* e_blob = use_ema ? "style_encoder_ema.mgt" : "style_encoder.mgt";
    s.g_->params().load(read_tensor_blob((dir / g_blob).string()));
    s.f_->params().load(read_tensor_blob((dir / f_blob).string()));
    s.e_->params().load(read_tensor_blob((dir / e_blob).string()));
    return s;
}

const PerceptualT<float>& ModelSession::ensure_phi() {
    if (!phi_) phi_ = PerceptualT<float>::from_config(cfg_);
    return *phi_;
}

Tensor ModelSession::run_generator(const Tensor& image_chw, const VarT<float>& style) const {
    VarT<float> x = VarT<float>::constant(batch_of_one(image_chw));
    return unbatch(g_->forward(x, style).value());
}

std::vector<Tensor> ModelSession::generate_latent(const Tensor& image_chw, int target_domain,
                                                  int num_styles, uint64_t seed) const {
    if (num_styles < 1) fail(ErrorCategory::Args, "num_styles must be at least 1");
    Rng rng = Rng(seed).fork("latent styles");
    std::vector<Tensor> outs;
    outs.reserve(static_cast<size_t>(num_styles));
    for (int i = 0; i < num_styles; ++i) {
        Tensor z({1, cfg_.latent_dim});
        for (int64_t j = 0; j < z.numel(); ++j) z[j] = static_cast<float>(rng.normal());
        VarT<float> s = f_->forward(VarT<float>::constant(z), {target_domain});
        outs.push_back(run_generator(image_chw, s));
    }
    return outs;
}

Tensor ModelSession::generate_reference(const Tensor& image_chw, const Tensor& reference_chw,
                                        int target_domain) const {
    VarT<float> ref = VarT<float>::constant(batch_of_one(reference_chw));
    VarT<float> s = e_->forward(ref, {target_domain});
    return run_generator(image_chw, s);
}

EvalScores ModelSession::eval_scores(const Tensor& image_chw, int target_domain,
                                     int num_styles, uint64_t seed) {
    std::vector<Tensor> outs = generate_latent(image_chw, target_domain, num_styles, seed);
    return score_outputs(ensure_phi(), image_chw, outs);
}

} // namespace missgan
