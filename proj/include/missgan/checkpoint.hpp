#pragma once

#include "missgan/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace missgan {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary tensor blob: "MGT1" magic, u32 count, then per tensor
// u16 name length, name bytes, u8 dtype (0 = f32), u8 ndim,
// ndim x u32 dims, raw payload. All integers little-endian.
void write_tensor_blob(const std::string& path, const NamedTensors& tensors);
std::map<std::string, Tensor> read_tensor_blob(const std::string& path);

struct CheckpointManifest {
    int format_version = 1;
    int64_t iteration = 0;
    std::string config_hash;
    std::map<std::string, std::vector<std::string>> tensor_index;
    std::string rng_state;
    std::map<std::string, int64_t> optim_steps;
};

void write_manifest(const std::string& path, const CheckpointManifest& m);
CheckpointManifest read_manifest(const std::string& path);

std::string checkpoint_dir_name(int64_t iteration);

} // namespace missgan
