#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace missgan {

enum class GeneratorVariant { Stargan2, GanillaPlain, GanillaRes };
enum class PhiKind { VggFile, Identity, Toy };

const char* to_string(GeneratorVariant v);
const char* to_string(PhiKind k);

struct LossWeights {
    float lambda_sty = 1.0f;
    float lambda_ds = 1.0f;
    float lambda_cyc = 1.0f;
    float lambda_feat = 1.0f;
    float lambda_sacl = 0.0f;
    float r1_gamma = 1.0f;
};

// Flat key/value model configuration. Defaults equal the MISSGAN preset.
struct ModelConfig {
    int num_domains = 2;
    int latent_dim = 16;
    int style_dim = 64;
    int base_width = 64;
    int mapping_width = 512;
    GeneratorVariant generator_variant = GeneratorVariant::GanillaRes;
    int image_size = 128;
    uint64_t seed = 0;
    LossWeights loss;
    int ds_decay_iters = 100000;
    float lr_g = 1e-4f;
    float lr_d = 1e-4f;
    float lr_e = 1e-4f;
    float lr_f = 1e-6f;
    float adam_beta1 = 0.0f;
    float adam_beta2 = 0.99f;
    float weight_decay = 1e-4f;
    float ema_decay = 0.999f;
    int batch_size = 8;
    bool single_threaded_pipeline = false;
    std::string domain_dirs;
    PhiKind phi_kind = PhiKind::Toy;
    std::string phi_path;
    std::string preset = "MISSGAN";

    static const std::vector<std::string>& preset_names();
    static ModelConfig from_preset(const std::string& name);
    static ModelConfig parse_file(const std::string& path);
    static ModelConfig parse_text(const std::string& text);

    // Typed assignment with validation of the single value; unknown keys are
    // rejected with the key name in the message. set("preset", name) resets
    // every field to that preset.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    void validate() const;

    std::vector<std::string> domain_dir_list() const;

    // Canonical key=value text, fixed key order, locale-independent number
    // formatting. Two configs behave identically iff this matches
    // ("preset" is a label and is excluded).
    std::string serialize() const;
    uint64_t hash() const;
};

uint64_t fnv1a64(const void* data, size_t len);

} // namespace missgan
