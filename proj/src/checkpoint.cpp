#include "missgan/checkpoint.hpp"

#include "missgan/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "tensor blob writer assumes a little-endian host");

namespace missgan {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
    fail(ErrorCategory::Checkpoint, path + ": " + msg);
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    uint8_t u8() { return static_cast<uint8_t>(byte()); }

    uint16_t u16() {
        uint16_t v = static_cast<uint8_t>(byte());
        v |= static_cast<uint16_t>(static_cast<uint8_t>(byte())) << 8;
        return v;
    }

    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(byte())) << (8 * i);
        return v;
    }

    std::string bytes(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void floats(float* dst, size_t n) {
        need(n * sizeof(float));
        std::memcpy(dst, data_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }

    bool done() const { return pos_ == data_.size(); }

private:
    char byte() {
        need(1);
        return data_[pos_++];
    }

    void need(size_t n) {
        if (pos_ + n > data_.size()) bad(path_, "truncated tensor blob");
    }

    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Checkpoint, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::Io, "cannot write " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) fail(ErrorCategory::Io, "write failed for " + path);
}

} // namespace

void write_tensor_blob(const std::string& path, const NamedTensors& tensors) {
    std::string out;
    out += "MGT1";
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xffff)
            fail(ErrorCategory::Internal, "tensor name too long: " + name);
        put_u16(out, static_cast<uint16_t>(name.size()));
        out += name;
        out.push_back(0);                                   // dtype f32
        out.push_back(static_cast<char>(t.ndim()));
        for (int d = 0; d < t.ndim(); ++d) put_u32(out, static_cast<uint32_t>(t.dim(d)));
        size_t bytes = static_cast<size_t>(t.numel()) * sizeof(float);
        size_t off = out.size();
        out.resize(off + bytes);
        std::memcpy(out.data() + off, t.data(), bytes);
    }
    write_all(path, out);
}

std::map<std::string, Tensor> read_tensor_blob(const std::string& path) {
    Reader r(read_all(path), path);
    if (r.bytes(4) != "MGT1") bad(path, "bad magic, not a tensor blob");
    uint32_t count = r.u32();
    std::map<std::string, Tensor> out;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = r.u16();
        std::string name = r.bytes(name_len);
        uint8_t dtype = r.u8();
        if (dtype != 0) bad(path, "unsupported dtype " + std::to_string(dtype) + " for " + name);
        uint8_t ndim = r.u8();
        std::vector<int> shape(ndim);
        int64_t numel = 1;
        for (int d = 0; d < ndim; ++d) {
            uint32_t v = r.u32();
            if (v == 0 || v > (1u << 28)) bad(path, "implausible dimension for " + name);
            shape[d] = static_cast<int>(v);
            numel *= shape[d];
        }
        Tensor t(shape);
        r.floats(t.data(), static_cast<size_t>(numel));
        if (!out.emplace(name, std::move(t)).second) bad(path, "duplicate tensor " + name);
    }
    if (!r.done()) bad(path, "trailing bytes after last tensor");
    return out;
}

void write_manifest(const std::string& path, const CheckpointManifest& m) {
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["iteration"] = m.iteration;
    j["config_hash"] = m.config_hash;
    j["tensor_index"] = m.tensor_index;
    j["rng_state"] = m.rng_state;
    j["optim_steps"] = m.optim_steps;
    write_all(path, j.dump(2) + "\n");
}

CheckpointManifest read_manifest(const std::string& path) {
    std::string text = read_all(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        bad(path, std::string("invalid manifest JSON: ") + e.what());
    }
    CheckpointManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != 1)
            bad(path, "unsupported format_version " + std::to_string(m.format_version));
        m.iteration = j.at("iteration").get<int64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.tensor_index =
            j.at("tensor_index").get<std::map<std::string, std::vector<std::string>>>();
        m.rng_state = j.at("rng_state").get<std::string>();
        m.optim_steps = j.at("optim_steps").get<std::map<std::string, int64_t>>();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        bad(path, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::string checkpoint_dir_name(int64_t iteration) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%08lld", static_cast<long long>(iteration));
    return buf;
}

} // namespace missgan
