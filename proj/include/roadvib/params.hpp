#pragma once

#include <cstring>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "roadvib/io.hpp"
#include "roadvib/tensor.hpp"

namespace roadvib {

/// Named parameter tensors with deterministic (lexicographic) iteration.
/// Running statistics live here too but are excluded from optimizer updates.
template <typename T>
struct ModelParams {
    std::map<std::string, Tensor<T>> tensors;

    Tensor<T>& at(const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError("unknown parameter: " + name);
        return it->second;
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError("unknown parameter: " + name);
        return it->second;
    }

    static bool trainable(const std::string& name) { return name.find("running_") == std::string::npos; }

    std::int64_t total_count() const {
        std::int64_t n = 0;
        for (const auto& [_, t] : tensors) n += t.size();
        return n;
    }
    std::int64_t trainable_count() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : tensors)
            if (trainable(name)) n += t.size();
        return n;
    }

    void ensure_grads() {
        for (auto& [name, t] : tensors)
            if (trainable(name)) t.ensure_grad();
    }
    void zero_grads() {
        for (auto& [name, t] : tensors)
            if (trainable(name)) t.zero_grad();
    }

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.template cast<U>());
        return out;
    }

    bool same_manifest(const ModelParams& o) const {
        if (tensors.size() != o.tensors.size()) return false;
        auto a = tensors.begin();
        auto b = o.tensors.begin();
        for (; a != tensors.end(); ++a, ++b)
            if (a->first != b->first || a->second.shape != b->second.shape) return false;
        return true;
    }
};

// Checkpoint format: u32 manifest length (LE) + JSON manifest + f32 payloads
// concatenated in manifest order. Save/load is bit-exact.

template <typename T>
std::string checkpoint_to_bytes(const ModelParams<T>& params) {
    ojson manifest;
    manifest["format_version"] = 1;
    manifest["dtype"] = "f32";
    manifest["tensors"] = ojson::array();
    for (const auto& [name, t] : params.tensors)
        manifest["tensors"].push_back({{"name", name}, {"shape", t.shape}});
    const std::string m = manifest.dump();

    std::string out;
    const auto mlen = static_cast<std::uint32_t>(m.size());
    out.append(reinterpret_cast<const char*>(&mlen), 4);
    out += m;
    for (const auto& [name, t] : params.tensors) {
        for (T val : t.v) {
            const float f = static_cast<float>(val);
            char buf[4];
            std::memcpy(buf, &f, 4);
            out.append(buf, 4);
        }
    }
    return out;
}

inline ModelParams<float> checkpoint_from_bytes(const std::string& bytes) {
    if (bytes.size() < 4) throw DataError("checkpoint truncated");
    std::uint32_t mlen = 0;
    std::memcpy(&mlen, bytes.data(), 4);
    if (bytes.size() < 4 + static_cast<std::size_t>(mlen)) throw DataError("checkpoint truncated (manifest)");
    ojson manifest;
    try {
        manifest = ojson::parse(bytes.substr(4, mlen));
    } catch (const ojson::exception& e) {
        throw DataError(std::string("bad checkpoint manifest: ") + e.what());
    }
    if (manifest.at("dtype").get<std::string>() != "f32") throw DataError("unsupported checkpoint dtype");

    ModelParams<float> params;
    std::size_t off = 4 + mlen;
    for (const auto& entry : manifest.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        Tensor<float> t(entry.at("shape").get<std::vector<std::int64_t>>());
        const std::size_t n = t.v.size();
        if (off + 4 * n > bytes.size()) throw DataError("checkpoint truncated (payload for " + name + ")");
        std::memcpy(t.v.data(), bytes.data() + off, 4 * n);
        off += 4 * n;
        params.tensors.emplace(name, std::move(t));
    }
    if (off != bytes.size()) throw DataError("checkpoint has trailing bytes");
    return params;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params) {
    detail::write_file(path, checkpoint_to_bytes(params));
}

inline ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
    try {
        return checkpoint_from_bytes(detail::read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace roadvib
