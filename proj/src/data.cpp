#include "missgan/data.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace missgan {

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// path components of `file` relative to `base`, excluding the filename
std::vector<std::string> subdir_components(const fs::path& base, const fs::path& file) {
    fs::path rel = fs::relative(file.parent_path(), base);
    std::vector<std::string> out;
    for (const auto& part : rel) {
        std::string s = part.string();
        if (!s.empty() && s != ".") out.push_back(s);
    }
    return out;
}

} // namespace

std::map<std::string, int64_t> DatasetManifest::illustrator_counts(int domain) const {
    std::map<std::string, int64_t> out;
    for (int64_t i : by_domain.at(static_cast<size_t>(domain)))
        ++out[records[static_cast<size_t>(i)].illustrator];
    return out;
}

DatasetManifest scan_image_folders(const std::string& root,
                                   const std::vector<std::string>& domain_dirs) {
    if (!fs::exists(root))
        fail(ErrorCategory::Data, "dataset root does not exist: " + root);
    if (domain_dirs.empty())
        fail(ErrorCategory::Data, "no domain directories given");

    DatasetManifest m;
    m.domain_dirs = domain_dirs;
    m.by_domain.resize(domain_dirs.size());

    for (size_t d = 0; d < domain_dirs.size(); ++d) {
        fs::path base = fs::path(root) / domain_dirs[d];
        if (!fs::is_directory(base))
            fail(ErrorCategory::Data,
                 "domain directory does not exist: " + base.string());

        std::vector<fs::path> files;
        std::error_code ec;
        for (fs::recursive_directory_iterator it(base, ec), end; it != end;
             it.increment(ec)) {
            if (ec)
                fail(ErrorCategory::Data, "cannot read " + base.string() + ": " + ec.message());
            if (it->is_regular_file() && has_image_extension(it->path()))
                files.push_back(it->path());
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

        if (files.empty())
            fail(ErrorCategory::Data, "domain " + domain_dirs[d] + " contains no images");

        for (const auto& f : files) {
            DataRecord rec;
            rec.path = f.string();
            rec.domain = static_cast<int>(d);
            auto parts = subdir_components(base, f);
            if (!parts.empty()) rec.illustrator = parts[0];
            if (parts.size() > 1) rec.book = parts[1];
            m.by_domain[d].push_back(static_cast<int64_t>(m.records.size()));
            m.records.push_back(std::move(rec));
        }
    }
    return m;
}

void write_manifest_csv(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::Io, "cannot write manifest csv: " + path);
    out << "path,domain,illustrator,book\n";
    for (const auto& rec : m.records)
        out << rec.path << ',' << rec.domain << ',' << rec.illustrator << ',' << rec.book
            << '\n';
    if (!out.flush()) fail(ErrorCategory::Io, "cannot write manifest csv: " + path);
}

namespace {

Tensor mat_to_chw(const cv::Mat& m) {
    int h = m.rows, w = m.cols;
    Tensor out({3, h, w});
    for (int y = 0; y < h; ++y) {
        const cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < w; ++x) {
            // OpenCV decodes BGR
            for (int c = 0; c < 3; ++c) {
                float u = static_cast<float>(row[x][2 - c]);
                out[(static_cast<int64_t>(c) * h + y) * w + x] = u / 127.5f - 1.0f;
            }
        }
    }
    return out;
}

} // namespace

Tensor decode_image_chw(const std::string& path, int size) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) fail(ErrorCategory::Data, "cannot decode image: " + path);
    cv::Mat resized;
    if (img.cols == size && img.rows == size)
        resized = img;
    else
        cv::resize(img, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
    return mat_to_chw(resized);
}

Tensor decode_image_chw(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) fail(ErrorCategory::Data, "cannot decode image: " + path);
    return mat_to_chw(img);
}

Tensor hflip_chw(const Tensor& img) {
    int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor out(img.shape());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<int64_t>(ch) * h + y) * w + x] =
                    img[(static_cast<int64_t>(ch) * h + y) * w + (w - 1 - x)];
    return out;
}

void save_image_chw(const std::string& path, const Tensor& img) {
    if (img.ndim() != 3 || img.dim(0) != 3)
        fail(ErrorCategory::Args, "image tensor must be 3 x H x W");
    int h = img.dim(1), w = img.dim(2);
    cv::Mat out(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = std::clamp(img[(static_cast<int64_t>(c) * h + y) * w + x], -1.0f,
                                     1.0f);
                out.at<cv::Vec3b>(y, x)[2 - c] =
                    static_cast<unsigned char>(std::lround((v + 1.0f) * 127.5f));
            }
    if (!cv::imwrite(path, out)) fail(ErrorCategory::Io, "cannot write image: " + path);
}

Tensor load_and_preprocess(const DataRecord& rec, int target_size, bool augment, Rng& rng) {
    Tensor t = decode_image_chw(rec.path, target_size);
    if (augment && rng.bernoulli(0.5)) t = hflip_chw(t);
    return t;
}

BatchPlan plan_training_batch(const DatasetManifest& m, int batch_size, int latent_dim,
                              Rng& rng, bool augment) {
    if (m.records.empty()) fail(ErrorCategory::Data, "dataset is empty");
    for (int d = 0; d < m.num_domains(); ++d)
        if (m.by_domain[static_cast<size_t>(d)].empty())
            fail(ErrorCategory::Data,
                 "domain " + m.domain_dirs[static_cast<size_t>(d)] + " is empty");

    BatchPlan plan;
    plan.slots.resize(static_cast<size_t>(batch_size));
    for (auto& slot : plan.slots) {
        int64_t xi = rng.uniform_int(static_cast<int64_t>(m.records.size()));
        slot.x_rec = xi;
        slot.y_org = m.records[static_cast<size_t>(xi)].domain;

        slot.y_trg = static_cast<int>(rng.uniform_int(m.num_domains()));
        const auto& pool = m.by_domain[static_cast<size_t>(slot.y_trg)];
        if (pool.size() < 2)
            fail(ErrorCategory::Data,
                 "target domain " + m.domain_dirs[static_cast<size_t>(slot.y_trg)] +
                     " needs at least 2 images for reference sampling");
        int64_t a = rng.uniform_int(static_cast<int64_t>(pool.size()));
        int64_t b = rng.uniform_int(static_cast<int64_t>(pool.size()) - 1);
        if (b >= a) ++b;
        slot.ref_rec = pool[static_cast<size_t>(a)];
        slot.ref2_rec = pool[static_cast<size_t>(b)];

        if (augment) {
            slot.x_flip = rng.bernoulli(0.5);
            slot.ref_flip = rng.bernoulli(0.5);
            slot.ref2_flip = rng.bernoulli(0.5);
        }
    }

    plan.z = Tensor({batch_size, latent_dim});
    plan.z2 = Tensor({batch_size, latent_dim});
    for (int64_t i = 0; i < plan.z.numel(); ++i) plan.z[i] = static_cast<float>(rng.normal());
    for (int64_t i = 0; i < plan.z2.numel(); ++i) plan.z2[i] = static_cast<float>(rng.normal());
    return plan;
}

namespace {

// Decode with fallback: on failure, walk forward through the record's
// domain until something decodes. Keeps realization free of random draws.
Tensor decode_with_fallback(const DatasetManifest& m, int64_t rec_idx, int size, bool flip,
                            int64_t avoid, int* skipped) {
    const DataRecord& first = m.records[static_cast<size_t>(rec_idx)];
    const auto& pool = m.by_domain[static_cast<size_t>(first.domain)];
    size_t start = 0;
    while (start < pool.size() && pool[start] != rec_idx) ++start;

    for (size_t hop = 0; hop < pool.size(); ++hop) {
        int64_t idx = pool[(start + hop) % pool.size()];
        if (hop > 0 && idx == avoid) continue;
        const DataRecord& rec = m.records[static_cast<size_t>(idx)];
        try {
            Tensor t = decode_image_chw(rec.path, size);
            return flip ? hflip_chw(t) : t;
        } catch (const Error&) {
            std::fprintf(stderr, "warning: skipping undecodable image %s\n", rec.path.c_str());
            ++*skipped;
        }
    }
    fail(ErrorCategory::Data, "no decodable images in domain of " + first.path);
}

void put_sample(Tensor& dst, int slot, const Tensor& img) {
    int64_t n = img.numel();
    std::copy(img.data(), img.data() + n, dst.data() + static_cast<int64_t>(slot) * n);
}

} // namespace

Batch realize_training_batch(const DatasetManifest& m, const BatchPlan& plan, int image_size) {
    int bs = static_cast<int>(plan.slots.size());
    Batch batch;
    batch.x = Tensor({bs, 3, image_size, image_size});
    batch.x_ref = Tensor({bs, 3, image_size, image_size});
    batch.x_ref2 = Tensor({bs, 3, image_size, image_size});
    batch.z = plan.z;
    batch.z2 = plan.z2;

    for (int i = 0; i < bs; ++i) {
        const BatchSlot& slot = plan.slots[static_cast<size_t>(i)];
        put_sample(batch.x, i,
                   decode_with_fallback(m, slot.x_rec, image_size, slot.x_flip, -1,
                                        &batch.skipped));
        put_sample(batch.x_ref, i,
                   decode_with_fallback(m, slot.ref_rec, image_size, slot.ref_flip,
                                        slot.ref2_rec, &batch.skipped));
        put_sample(batch.x_ref2, i,
                   decode_with_fallback(m, slot.ref2_rec, image_size, slot.ref2_flip,
                                        slot.ref_rec, &batch.skipped));
        batch.y_org.push_back(slot.y_org);
        batch.y_trg.push_back(slot.y_trg);
    }
    return batch;
}

Batch sample_training_batch(const DatasetManifest& m, const ModelConfig& cfg, Rng& rng) {
    BatchPlan plan = plan_training_batch(m, cfg.batch_size, cfg.latent_dim, rng);
    return realize_training_batch(m, plan, cfg.image_size);
}

std::vector<std::string> default_domain_dirs(const ModelConfig& cfg) {
    std::vector<std::string> dirs = cfg.domain_dir_list();
    if (!dirs.empty()) return dirs;
    if (cfg.num_domains == 2) return {"photos", "illustrations"};
    std::vector<std::string> out;
    for (int d = 0; d < cfg.num_domains; ++d) out.push_back("domain" + std::to_string(d));
    return out;
}

void make_synthetic_dataset(const std::string& root, int per_domain, int size, uint64_t seed) {
    Rng rng(seed);
    fs::create_directories(fs::path(root) / "photos" / "scenes");
    fs::create_directories(fs::path(root) / "illustrations" / "painterA");

    auto draw_shape = [&](cv::Mat& img, const cv::Scalar& color, int thickness) {
        int cx = 4 + static_cast<int>(rng.uniform_int(size - 8));
        int cy = 4 + static_cast<int>(rng.uniform_int(size - 8));
        int r = 3 + static_cast<int>(rng.uniform_int(size / 3));
        if (rng.bernoulli(0.5))
            cv::circle(img, {cx, cy}, r, color, thickness);
        else
            cv::rectangle(img, {cx - r, cy - r}, {cx + r, cy + r}, color, thickness);
    };

    char name[64];
    for (int i = 0; i < per_domain; ++i) {
        // textured noise shapes stand in for photographs
        cv::Mat photo(size, size, CV_8UC3);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                int base = 60 + (x * 120) / size;
                for (int c = 0; c < 3; ++c)
                    photo.at<cv::Vec3b>(y, x)[c] = static_cast<unsigned char>(
                        std::clamp<int64_t>(base + rng.uniform_int(90) - 45 + 20 * c, 0, 255));
            }
        cv::Scalar pc(static_cast<double>(rng.uniform_int(256)),
                      static_cast<double>(rng.uniform_int(256)),
                      static_cast<double>(rng.uniform_int(256)));
        draw_shape(photo, pc, -1);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (rng.bernoulli(0.3)) {
                    auto& px = photo.at<cv::Vec3b>(y, x);
                    for (int c = 0; c < 3; ++c)
                        px[c] = static_cast<unsigned char>(std::clamp<int64_t>(
                            px[c] + rng.uniform_int(50) - 25, 0, 255));
                }
        std::snprintf(name, sizeof(name), "photo_%04d.png", i);
        cv::imwrite((fs::path(root) / "photos" / "scenes" / name).string(), photo);

        // flat-color shapes stand in for illustrations
        cv::Mat illus(size, size, CV_8UC3,
                      cv::Scalar(static_cast<double>(200 + rng.uniform_int(56)),
                                 static_cast<double>(200 + rng.uniform_int(56)),
                                 static_cast<double>(200 + rng.uniform_int(56))));
        int shapes = 1 + static_cast<int>(rng.uniform_int(3));
        for (int s = 0; s < shapes; ++s) {
            cv::Scalar ic(static_cast<double>(rng.uniform_int(200)),
                          static_cast<double>(rng.uniform_int(200)),
                          static_cast<double>(rng.uniform_int(200)));
            draw_shape(illus, ic, -1);
        }
        std::snprintf(name, sizeof(name), "illus_%04d.png", i);
        cv::imwrite((fs::path(root) / "illustrations" / "painterA" / name).string(), illus);
    }
}

} // namespace missgan
