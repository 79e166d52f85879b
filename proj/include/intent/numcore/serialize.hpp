#pragma once

// Versioned JSON container for model parameters:
//
//   {
//     "magic": "INTENT-BENCH-MODEL",
//     "version": 1,
//     "kind": "mlp" | "lstm" | "knn" | "linear_svm" | "logistic_regression" | "random_guess",
//     "config": {...},          // kind-specific hyperparameters
//     "metadata": {...},        // seed, config_hash, final_loss
//     "tensors": [ {"name": "...", "shape": [rows, cols], "data": [row-major values]} ]
//   }
//
// Doubles are written in shortest round-trip form, so save/load is exact.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intent/error.hpp"
#include "intent/numcore/matrix.hpp"

namespace intent {

inline constexpr const char* kModelMagic = "INTENT-BENCH-MODEL";
inline constexpr int kModelFormatVersion = 1;

struct NamedTensor {
    std::string name;
    Matrix value;
};

struct ModelContainer {
    std::string kind;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<NamedTensor> tensors;

    void add(std::string name, Matrix m) { tensors.push_back({std::move(name), std::move(m)}); }

    void add(std::string name, const Vector& v) {
        Matrix m(1, v.size());
        m.data = v;
        tensors.push_back({std::move(name), std::move(m)});
    }

    const Matrix& tensor(const std::string& name) const {
        for (const auto& t : tensors) {
            if (t.name == name) return t.value;
        }
        throw Error(ErrorCode::SerializationError, "model container has no tensor '" + name + "'");
    }

    // Copies a stored tensor into a destination of matching size.
    void load_into(const std::string& name, std::span<double> dst) const {
        const Matrix& m = tensor(name);
        if (m.data.size() != dst.size()) {
            throw Error(ErrorCode::SerializationError, "tensor '" + name + "' has " + std::to_string(m.data.size()) +
                                                           " values, expected " + std::to_string(dst.size()));
        }
        std::copy(m.data.begin(), m.data.end(), dst.begin());
    }
};

inline nlohmann::json to_json(const ModelContainer& c) {
    nlohmann::json j;
    j["magic"] = kModelMagic;
    j["version"] = kModelFormatVersion;
    j["kind"] = c.kind;
    j["config"] = c.config;
    j["metadata"] = c.metadata;
    j["tensors"] = nlohmann::json::array();
    for (const auto& t : c.tensors) {
        j["tensors"].push_back({{"name", t.name}, {"shape", {t.value.rows, t.value.cols}}, {"data", t.value.data}});
    }
    return j;
}

inline ModelContainer container_from_json(const nlohmann::json& j) {
    try {
        if (j.at("magic").get<std::string>() != kModelMagic) {
            throw Error(ErrorCode::SerializationError, "not a model container (bad magic)");
        }
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorCode::SerializationError, "unsupported model format version " + j.at("version").dump());
        }
        ModelContainer c;
        c.kind = j.at("kind").get<std::string>();
        c.config = j.at("config");
        c.metadata = j.at("metadata");
        for (const auto& t : j.at("tensors")) {
            NamedTensor nt;
            nt.name = t.at("name").get<std::string>();
            const auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2) throw Error(ErrorCode::SerializationError, "tensor shape must have two dimensions");
            nt.value = Matrix(shape[0], shape[1]);
            nt.value.data = t.at("data").get<std::vector<double>>();
            if (nt.value.data.size() != shape[0] * shape[1]) {
                throw Error(ErrorCode::SerializationError, "tensor '" + nt.name + "' data does not match its shape");
            }
            c.tensors.push_back(std::move(nt));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, std::string("malformed model container: ") + e.what());
    }
}

inline void save_container(const std::filesystem::path& path, const ModelContainer& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << to_json(c).dump() << '\n';
}

inline ModelContainer load_container(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SerializationError, std::string("cannot parse model file: ") + e.what());
    }
    return container_from_json(j);
}

}  // namespace intent
