#pragma once

#include "missgan/config.hpp"
#include "missgan/rng.hpp"
#include "missgan/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace missgan {

struct DataRecord {
    std::string path;
    int domain = 0;
    std::string illustrator;
    std::string book;
};

struct DatasetManifest {
    std::vector<DataRecord> records;
    std::vector<std::vector<int64_t>> by_domain;
    std::vector<std::string> domain_dirs;

    int num_domains() const { return static_cast<int>(by_domain.size()); }
    int64_t domain_count(int d) const { return static_cast<int64_t>(by_domain.at(d).size()); }
    std::map<std::string, int64_t> illustrator_counts(int domain) const;
};

// Recursive scan for .png/.jpg/.jpeg (case-insensitive) under
// root/<dir> per domain, ordered lexicographically by path. The first
// subfolder level below the domain dir becomes the illustrator tag, the
// second the book tag.
DatasetManifest scan_image_folders(const std::string& root,
                                   const std::vector<std::string>& domain_dirs);

void write_manifest_csv(const DatasetManifest& m, const std::string& path);

// Decode, resize to size x size (bilinear), map intensities to
// u / 127.5 - 1. Throws a data error when the file cannot be decoded.
Tensor decode_image_chw(const std::string& path, int size);

// Same mapping at the stored size.
Tensor decode_image_chw(const std::string& path);

Tensor hflip_chw(const Tensor& img);

// Clamp a 3 x H x W tensor to [-1, 1], map back to 8-bit and write a PNG.
void save_image_chw(const std::string& path, const Tensor& img);

Tensor load_and_preprocess(const DataRecord& rec, int target_size, bool augment, Rng& rng);

// One sample's worth of pre-drawn random choices. Realizing a plan does
// no random draws, so batches are identical whether decoding runs inline
// or on a prefetch thread.
struct BatchSlot {
    int64_t x_rec = 0;
    int64_t ref_rec = 0;
    int64_t ref2_rec = 0;
    bool x_flip = false;
    bool ref_flip = false;
    bool ref2_flip = false;
    int y_org = 0;
    int y_trg = 0;
};

struct BatchPlan {
    std::vector<BatchSlot> slots;
    Tensor z, z2;
};

struct Batch {
    Tensor x;
    std::vector<int> y_org;
    Tensor x_ref, x_ref2;
    std::vector<int> y_trg;
    Tensor z, z2;
    int skipped = 0;
};

BatchPlan plan_training_batch(const DatasetManifest& m, int batch_size, int latent_dim,
                              Rng& rng, bool augment = true);

Batch realize_training_batch(const DatasetManifest& m, const BatchPlan& plan, int image_size);

Batch sample_training_batch(const DatasetManifest& m, const ModelConfig& cfg, Rng& rng);

// Domain directory names used when the config leaves domain_dirs empty.
std::vector<std::string> default_domain_dirs(const ModelConfig& cfg);

// Writes a small procedural two-domain image set: noisy textured shapes
// under <root>/photos, flat-color shapes under <root>/illustrations.
void make_synthetic_dataset(const std::string& root, int per_domain, int size, uint64_t seed);

} // namespace missgan
