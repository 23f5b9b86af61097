#include "missgan/config.hpp"

#include "missgan/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace missgan {

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCategory::Config, msg); }

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int64_t parse_int(const std::string& key, const std::string& value) {
    size_t pos = 0;
    int64_t v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        bad(key + ": expected an integer, got '" + value + "'");
    }
    if (pos != value.size()) bad(key + ": expected an integer, got '" + value + "'");
    return v;
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
    size_t pos = 0;
    uint64_t v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        bad(key + ": expected a non-negative integer, got '" + value + "'");
    }
    if (pos != value.size() || value.find('-') != std::string::npos)
        bad(key + ": expected a non-negative integer, got '" + value + "'");
    return v;
}

float parse_float(const std::string& key, const std::string& value) {
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        bad(key + ": expected a number, got '" + value + "'");
    }
    if (pos != value.size()) bad(key + ": expected a number, got '" + value + "'");
    return static_cast<float>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad(key + ": expected true or false, got '" + value + "'");
}

std::string fmt_float(float v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

const std::vector<std::string>& key_order() {
    static const std::vector<std::string> keys = {
        "num_domains",   "latent_dim", "style_dim",   "base_width",
        "mapping_width", "generator_variant", "image_size", "seed",
        "lambda_sty",    "lambda_ds",  "lambda_cyc",  "lambda_feat",
        "lambda_sacl",   "r1_gamma",   "ds_decay_iters", "lr_g",
        "lr_d",          "lr_e",       "lr_f",        "adam_beta1",
        "adam_beta2",    "weight_decay", "ema_decay", "batch_size",
        "single_threaded_pipeline", "domain_dirs", "phi_kind", "phi_path"};
    return keys;
}

} // namespace

const char* to_string(GeneratorVariant v) {
    switch (v) {
    case GeneratorVariant::Stargan2: return "stargan2";
    case GeneratorVariant::GanillaPlain: return "ganilla_plain";
    case GeneratorVariant::GanillaRes: return "ganilla_res";
    }
    return "?";
}

const char* to_string(PhiKind k) {
    switch (k) {
    case PhiKind::VggFile: return "vgg_file";
    case PhiKind::Identity: return "identity";
    case PhiKind::Toy: return "toy";
    }
    return "?";
}

const std::vector<std::string>& ModelConfig::preset_names() {
    static const std::vector<std::string> names = {"A", "B", "C", "D", "E", "MISSGAN"};
    return names;
}

ModelConfig ModelConfig::from_preset(const std::string& name) {
    ModelConfig cfg;
    cfg.preset = name;
    if (name == "A") {
        cfg.generator_variant = GeneratorVariant::Stargan2;
        cfg.loss.lambda_feat = 0.0f;
        cfg.loss.lambda_sacl = 0.0f;
    } else if (name == "B") {
        cfg.generator_variant = GeneratorVariant::GanillaPlain;
        cfg.loss.lambda_feat = 0.0f;
        cfg.loss.lambda_sacl = 0.0f;
    } else if (name == "C") {
        cfg.generator_variant = GeneratorVariant::GanillaRes;
        cfg.loss.lambda_feat = 0.0f;
        cfg.loss.lambda_sacl = 0.0f;
    } else if (name == "D") {
        cfg.generator_variant = GeneratorVariant::GanillaRes;
        cfg.loss.lambda_feat = 0.0f;
        cfg.loss.lambda_sacl = 1.0f;
    } else if (name == "E") {
        cfg.generator_variant = GeneratorVariant::GanillaRes;
        cfg.loss.lambda_feat = 1.0f;
        cfg.loss.lambda_sacl = 1.0f;
    } else if (name == "MISSGAN") {
        cfg.generator_variant = GeneratorVariant::GanillaRes;
        cfg.loss.lambda_feat = 1.0f;
        cfg.loss.lambda_sacl = 0.0f;
    } else {
        bad("unknown preset '" + name + "' (expected A, B, C, D, E or MISSGAN)");
    }
    return cfg;
}

ModelConfig ModelConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

ModelConfig ModelConfig::parse_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            bad("line " + std::to_string(lineno) + ": expected key = value, got '" + s + "'");
        entries.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    ModelConfig cfg;
    for (const auto& [k, v] : entries)
        if (k == "preset") cfg = from_preset(v);
    for (const auto& [k, v] : entries) {
        if (k == "preset") continue;
        cfg.set(k, v);
    }
    cfg.validate();
    return cfg;
}

void ModelConfig::set(const std::string& key, const std::string& value) {
    if (key == "preset") { *this = from_preset(value); return; }
    if (key == "num_domains") num_domains = static_cast<int>(parse_int(key, value));
    else if (key == "latent_dim") latent_dim = static_cast<int>(parse_int(key, value));
    else if (key == "style_dim") style_dim = static_cast<int>(parse_int(key, value));
    else if (key == "base_width") base_width = static_cast<int>(parse_int(key, value));
    else if (key == "mapping_width") mapping_width = static_cast<int>(parse_int(key, value));
    else if (key == "generator_variant") {
        if (value == "stargan2") generator_variant = GeneratorVariant::Stargan2;
        else if (value == "ganilla_plain") generator_variant = GeneratorVariant::GanillaPlain;
        else if (value == "ganilla_res") generator_variant = GeneratorVariant::GanillaRes;
        else bad("generator_variant: expected stargan2, ganilla_plain or ganilla_res, got '" +
                 value + "'");
    } else if (key == "image_size") image_size = static_cast<int>(parse_int(key, value));
    else if (key == "seed") seed = parse_uint(key, value);
    else if (key == "lambda_sty") loss.lambda_sty = parse_float(key, value);
    else if (key == "lambda_ds") loss.lambda_ds = parse_float(key, value);
    else if (key == "lambda_cyc") loss.lambda_cyc = parse_float(key, value);
    else if (key == "lambda_feat") loss.lambda_feat = parse_float(key, value);
    else if (key == "lambda_sacl") loss.lambda_sacl = parse_float(key, value);
    else if (key == "r1_gamma") loss.r1_gamma = parse_float(key, value);
    else if (key == "ds_decay_iters") ds_decay_iters = static_cast<int>(parse_int(key, value));
    else if (key == "lr_g") lr_g = parse_float(key, value);
    else if (key == "lr_d") lr_d = parse_float(key, value);
    else if (key == "lr_e") lr_e = parse_float(key, value);
    else if (key == "lr_f") lr_f = parse_float(key, value);
    else if (key == "adam_beta1") adam_beta1 = parse_float(key, value);
    else if (key == "adam_beta2") adam_beta2 = parse_float(key, value);
    else if (key == "weight_decay") weight_decay = parse_float(key, value);
    else if (key == "ema_decay") ema_decay = parse_float(key, value);
    else if (key == "batch_size") batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "single_threaded_pipeline") single_threaded_pipeline = parse_bool(key, value);
    else if (key == "domain_dirs") domain_dirs = value;
    else if (key == "phi_kind") {
        if (value == "vgg_file") phi_kind = PhiKind::VggFile;
        else if (value == "identity") phi_kind = PhiKind::Identity;
        else if (value == "toy") phi_kind = PhiKind::Toy;
        else bad("phi_kind: expected vgg_file, identity or toy, got '" + value + "'");
    } else if (key == "phi_path") phi_path = value;
    else bad("unknown key '" + key + "'");
}

std::string ModelConfig::get(const std::string& key) const {
    if (key == "preset") return preset;
    if (key == "num_domains") return std::to_string(num_domains);
    if (key == "latent_dim") return std::to_string(latent_dim);
    if (key == "style_dim") return std::to_string(style_dim);
    if (key == "base_width") return std::to_string(base_width);
    if (key == "mapping_width") return std::to_string(mapping_width);
    if (key == "generator_variant") return to_string(generator_variant);
    if (key == "image_size") return std::to_string(image_size);
    if (key == "seed") return std::to_string(seed);
    if (key == "lambda_sty") return fmt_float(loss.lambda_sty);
    if (key == "lambda_ds") return fmt_float(loss.lambda_ds);
    if (key == "lambda_cyc") return fmt_float(loss.lambda_cyc);
    if (key == "lambda_feat") return fmt_float(loss.lambda_feat);
    if (key == "lambda_sacl") return fmt_float(loss.lambda_sacl);
    if (key == "r1_gamma") return fmt_float(loss.r1_gamma);
    if (key == "ds_decay_iters") return std::to_string(ds_decay_iters);
    if (key == "lr_g") return fmt_float(lr_g);
    if (key == "lr_d") return fmt_float(lr_d);
    if (key == "lr_e") return fmt_float(lr_e);
    if (key == "lr_f") return fmt_float(lr_f);
    if (key == "adam_beta1") return fmt_float(adam_beta1);
    if (key == "adam_beta2") return fmt_float(adam_beta2);
    if (key == "weight_decay") return fmt_float(weight_decay);
    if (key == "ema_decay") return fmt_float(ema_decay);
    if (key == "batch_size") return std::to_string(batch_size);
    if (key == "single_threaded_pipeline") return single_threaded_pipeline ? "true" : "false";
    if (key == "domain_dirs") return domain_dirs;
    if (key == "phi_kind") return to_string(phi_kind);
    if (key == "phi_path") return phi_path;
    bad("unknown key '" + key + "'");
}

void ModelConfig::validate() const {
    if (num_domains < 2)
        bad("num_domains must be at least 2, got " + std::to_string(num_domains));
    if (latent_dim < 1) bad("latent_dim must be positive, got " + std::to_string(latent_dim));
    if (style_dim < 1) bad("style_dim must be positive, got " + std::to_string(style_dim));
    if (base_width < 4)
        bad("base_width must be at least 4, got " + std::to_string(base_width));
    if (mapping_width < 1)
        bad("mapping_width must be positive, got " + std::to_string(mapping_width));
    if (image_size % 16 != 0)
        bad("image_size " + std::to_string(image_size) + " not divisible by 16");
    if (!is_pow2(image_size) || image_size < 32)
        bad("image_size must be a power of two of at least 32, got " +
            std::to_string(image_size));
    auto nonneg = [](const char* k, float v) {
        if (!(v >= 0.0f))
            bad(std::string(k) + " must be non-negative, got " + fmt_float(v));
    };
    nonneg("lambda_sty", loss.lambda_sty);
    nonneg("lambda_ds", loss.lambda_ds);
    nonneg("lambda_cyc", loss.lambda_cyc);
    nonneg("lambda_feat", loss.lambda_feat);
    nonneg("lambda_sacl", loss.lambda_sacl);
    nonneg("r1_gamma", loss.r1_gamma);
    if (ds_decay_iters < 1)
        bad("ds_decay_iters must be positive, got " + std::to_string(ds_decay_iters));
    auto poslr = [](const char* k, float v) {
        if (!(v > 0.0f)) bad(std::string(k) + " must be positive, got " + fmt_float(v));
    };
    poslr("lr_g", lr_g);
    poslr("lr_d", lr_d);
    poslr("lr_e", lr_e);
    poslr("lr_f", lr_f);
    auto beta = [](const char* k, float v) {
        if (!(v >= 0.0f && v < 1.0f))
            bad(std::string(k) + " must be in [0, 1), got " + fmt_float(v));
    };
    beta("adam_beta1", adam_beta1);
    beta("adam_beta2", adam_beta2);
    nonneg("weight_decay", weight_decay);
    if (!(ema_decay >= 0.0f && ema_decay < 1.0f))
        bad("ema_decay must be in [0, 1), got " + fmt_float(ema_decay));
    if (batch_size < 1) bad("batch_size must be positive, got " + std::to_string(batch_size));
    if (phi_kind == PhiKind::VggFile && loss.lambda_feat > 0.0f && phi_path.empty())
        bad("phi_path is required when phi_kind is vgg_file and lambda_feat > 0");
    if (!domain_dirs.empty()) {
        auto dirs = domain_dir_list();
        if (static_cast<int>(dirs.size()) != num_domains)
            bad("domain_dirs lists " + std::to_string(dirs.size()) + " entries but num_domains is " +
                std::to_string(num_domains));
    }
}

std::vector<std::string> ModelConfig::domain_dir_list() const {
    std::vector<std::string> out;
    if (domain_dirs.empty()) return out;
    std::string cur;
    for (char c : domain_dirs) {
        if (c == ',') {
            std::string t = trim(cur);
            if (t.empty()) bad("domain_dirs contains an empty entry");
            out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string t = trim(cur);
    if (t.empty()) bad("domain_dirs contains an empty entry");
    out.push_back(t);
    return out;
}

std::string ModelConfig::serialize() const {
    std::string out;
    for (const auto& key : key_order()) {
        out += key;
        out += '=';
        out += get(key);
        out += '\n';
    }
    return out;
}

uint64_t ModelConfig::hash() const {
    std::string s = serialize();
    return fnv1a64(s.data(), s.size());
}

uint64_t fnv1a64(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace missgan
