#include "missgan.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct ConfigDeleter {
    void operator()(mg_config* c) const { mg_config_free(c); }
};
struct ModelDeleter {
    void operator()(mg_model* m) const { mg_model_free(m); }
};
using ConfigPtr = std::unique_ptr<mg_config, ConfigDeleter>;
using ModelPtr = std::unique_ptr<mg_model, ModelDeleter>;

struct ImageDeleter {
    void operator()(float* p) const { mg_image_free(p); }
};
using ImagePtr = std::unique_ptr<float, ImageDeleter>;

[[noreturn]] void die(mg_status s) {
    std::fprintf(stderr, "error: %s: %s\n", mg_status_name(s), mg_last_error());
    std::exit(s);
}

void check(mg_status s) {
    if (s != MG_OK) die(s);
}

[[noreturn]] void die_args(const std::string& msg) {
    std::fprintf(stderr, "error: args: %s\n", msg.c_str());
    std::exit(MG_ERR_ARGS);
}

bool has_image_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> collect_inputs(const std::string& input) {
    fs::path p(input);
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& ent : fs::recursive_directory_iterator(p))
            if (ent.is_regular_file() && has_image_ext(ent.path())) files.push_back(ent.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) die_args("no images found under " + input);
        return files;
    }
    if (!fs::exists(p)) die_args("input does not exist: " + input);
    return {p};
}

struct LoadedImage {
    ImagePtr data;
    int h = 0;
    int w = 0;
};

// Inputs pass through the generator at their stored size, which must be a
// multiple of 16; --resize instead snaps them to the model's training size.
LoadedImage load_input(const fs::path& path, int model_size, bool resize) {
    LoadedImage img;
    float* raw = nullptr;
    if (resize) {
        check(mg_image_load(path.string().c_str(), model_size, &raw, &img.h, &img.w));
        img.data.reset(raw);
        return img;
    }
    check(mg_image_load(path.string().c_str(), 0, &raw, &img.h, &img.w));
    img.data.reset(raw);
    if (img.h % 16 != 0 || img.w % 16 != 0)
        die_args(path.string() + " is " + std::to_string(img.w) + "x" +
                 std::to_string(img.h) +
                 ", not a multiple of 16; pass --resize to rescale it");
    return img;
}

ConfigPtr make_config(const std::string& config_path, const std::string& preset) {
    ConfigPtr cfg(config_path.empty() ? mg_config_create(preset.empty() ? nullptr
                                                                        : preset.c_str())
                                      : mg_config_load(config_path.c_str()));
    if (!cfg) die(mg_last_status());
    return cfg;
}

ModelPtr open_model(const std::string& checkpoint, bool use_ema) {
    ModelPtr m(mg_model_open(checkpoint.c_str(), use_ema ? 1 : 0));
    if (!m) die(mg_last_status());
    return m;
}

int run_train(const std::string& config_path, const std::string& preset,
              const std::string& data_root, const std::string& out_dir, int64_t iters,
              int64_t checkpoint_every, const std::string& resume) {
    ConfigPtr cfg = make_config(config_path, preset);
    check(mg_train(cfg.get(), data_root.c_str(), iters, checkpoint_every, out_dir.c_str(),
                   resume.empty() ? nullptr : resume.c_str()));
    std::printf("trained %lld iterations into %s\n", static_cast<long long>(iters),
                out_dir.c_str());
    return 0;
}

int run_generate(const std::string& checkpoint, const std::string& input,
                 const std::string& out_dir, const std::string& mode,
                 const std::string& ref_path, int target_domain, int num_styles,
                 uint64_t seed, bool resize, bool use_ema) {
    ModelPtr model = open_model(checkpoint, use_ema);
    int model_size = mg_model_image_size(model.get());
    fs::create_directories(out_dir);

    ImagePtr ref;
    if (mode == "reference") {
        if (ref_path.empty()) die_args("reference mode needs --ref");
        float* raw = nullptr;
        int rh = 0, rw = 0;
        check(mg_image_load(ref_path.c_str(), model_size, &raw, &rh, &rw));
        ref.reset(raw);
    } else if (mode != "latent") {
        die_args("mode must be latent or reference");
    }

    for (const fs::path& in : collect_inputs(input)) {
        LoadedImage img = load_input(in, model_size, resize);
        size_t plane = static_cast<size_t>(3) * img.h * img.w;
        std::string stem = in.stem().string();

        if (mode == "latent") {
            std::vector<float> out(plane * static_cast<size_t>(num_styles));
            check(mg_generate_latent(model.get(), img.data.get(), img.h, img.w,
                                     target_domain, num_styles, seed, out.data()));
            for (int i = 0; i < num_styles; ++i) {
                char suffix[24];
                std::snprintf(suffix, sizeof suffix, "_style%02d.png", i);
                fs::path dest = fs::path(out_dir) / (stem + suffix);
                check(mg_image_save(dest.string().c_str(), out.data() + plane * i, img.h,
                                    img.w));
                std::printf("%s\n", dest.string().c_str());
            }
        } else {
            std::vector<float> out(plane);
            check(mg_generate_reference(model.get(), img.data.get(), img.h, img.w,
                                        ref.get(), target_domain, out.data()));
            fs::path dest = fs::path(out_dir) / (stem + "_ref.png");
            check(mg_image_save(dest.string().c_str(), out.data(), img.h, img.w));
            std::printf("%s\n", dest.string().c_str());
        }
    }
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& folder,
             const std::string& out_csv, int target_domain, int num_styles, uint64_t seed,
             bool use_ema) {
    ModelPtr model = open_model(checkpoint, use_ema);
    int model_size = mg_model_image_size(model.get());

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_csv.empty()) {
        file.open(out_csv);
        if (!file) die_args("cannot open " + out_csv);
        out = &file;
    }

    *out << "path,content,diversity\n";
    double content_sum = 0.0, diversity_sum = 0.0;
    size_t n = 0;
    for (const fs::path& in : collect_inputs(folder)) {
        float* raw = nullptr;
        int h = 0, w = 0;
        check(mg_image_load(in.string().c_str(), model_size, &raw, &h, &w));
        ImagePtr img(raw);
        float content = 0.0f, diversity = 0.0f;
        check(mg_eval(model.get(), img.get(), h, w, target_domain, num_styles, seed,
                      &content, &diversity));
        *out << in.string() << ',' << content << ',' << diversity << '\n';
        content_sum += content;
        diversity_sum += diversity;
        ++n;
    }
    *out << "mean," << content_sum / static_cast<double>(n) << ','
         << diversity_sum / static_cast<double>(n) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-illustrator style transfer"};
    app.require_subcommand(1);

    std::string config_path, preset, data_root, out_dir, resume;
    int64_t iters = 100000, checkpoint_every = 10000;
    CLI::App* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", config_path, "Config file (key=value lines)");
    train->add_option("--preset", preset, "Preset name: A, B, C, D, E or MISSGAN")
        ->excludes("--config");
    train->add_option("--data-root", data_root, "Dataset root directory")->required();
    train->add_option("--out-dir", out_dir, "Checkpoint/log output directory")->required();
    train->add_option("--iters", iters, "Total training iterations");
    train->add_option("--checkpoint-every", checkpoint_every, "Checkpoint interval");
    train->add_option("--resume", resume, "Checkpoint directory to resume from");

    std::string checkpoint, input, mode = "latent", ref_path;
    int target_domain = 1, num_styles = 3;
    uint64_t seed = 0;
    bool resize = false, use_ema = true;
    CLI::App* gen = app.add_subcommand("generate", "Stylize images from a checkpoint");
    gen->add_option("checkpoint", checkpoint, "Checkpoint directory")->required();
    gen->add_option("input", input, "Input image file or folder")->required();
    gen->add_option("--out-dir", out_dir, "Output directory")->default_val(".");
    gen->add_option("--mode", mode, "latent or reference");
    gen->add_option("--ref", ref_path, "Reference illustration (reference mode)");
    gen->add_option("--target-domain", target_domain,
                    "Target domain index (default 1, the illustration domain)");
    gen->add_option("--num-styles", num_styles, "Styles per input (latent mode)");
    gen->add_option("--seed", seed, "Latent sampling seed");
    gen->add_flag("--resize", resize, "Rescale inputs to the model's training size");
    gen->add_flag("--use-ema,!--no-use-ema", use_ema,
                  "Use averaged weights (default on)");

    std::string folder, out_csv;
    CLI::App* eval = app.add_subcommand("eval", "Content/diversity diagnostics");
    eval->add_option("checkpoint", checkpoint, "Checkpoint directory")->required();
    eval->add_option("folder", folder, "Evaluation image folder")->required();
    eval->add_option("--out", out_csv, "CSV output file (default stdout)");
    eval->add_option("--target-domain", target_domain, "Target domain index");
    eval->add_option("--num-styles", num_styles, "Styles sampled per image");
    eval->add_option("--seed", seed, "Latent sampling seed");
    eval->add_flag("--use-ema,!--no-use-ema", use_ema,
                   "Use averaged weights (default on)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: args: %s\n", e.what());
        return MG_ERR_ARGS;
    }

    if (train->parsed())
        return run_train(config_path, preset, data_root, out_dir, iters, checkpoint_every,
                         resume);
    if (gen->parsed())
        return run_generate(checkpoint, input, out_dir, mode, ref_path, target_domain,
                            num_styles, seed, resize, use_ema);
    return run_eval(checkpoint, folder, out_csv, target_domain, num_styles, seed, use_ema);
}
