#pragma once

// Run manifest: config snapshot, git-style input hash, output checksums and
// per-stage wall-clock times.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace rlnn::bench {

namespace detail {

inline std::string digest_hex(const EVP_MD* md, const std::string& data) {
    unsigned char buf[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), buf, &len, md, nullptr) != 1)
        throw std::runtime_error("digest computation failed");
    std::ostringstream os;
    for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(buf[k]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// SHA-1 of "blob <size>\0<content>", as git hash-object computes it.
inline std::string git_blob_hash(const std::string& content) {
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    blob += content;
    return detail::digest_hex(EVP_sha1(), blob);
}

inline std::string sha256_hex(const std::string& content) { return detail::digest_hex(EVP_sha256(), content); }

class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config, std::filesystem::path out_dir)
        : command_(std::move(command)), config_(std::move(config)), out_dir_(std::move(out_dir)) {}

    const std::filesystem::path& out_dir() const noexcept { return out_dir_; }

    /// Records a file written under the output directory.
    void add_output(const std::string& name) { outputs_.push_back(name); }

    void add_stage(const std::string& name, double wall_ms) { stages_.push_back({name, wall_ms}); }

    void add_note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

    void set_status(std::string status, std::string message = {}) {
        status_ = std::move(status);
        message_ = std::move(message);
    }

    std::string input_hash() const { return git_blob_hash(config_.dump()); }

    nlohmann::json to_json() const {
        nlohmann::json outputs = nlohmann::json::array();
        for (const auto& name : outputs_) {
            const std::string bytes = detail::read_file(out_dir_ / name);
            outputs.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
        }
        nlohmann::json stages = nlohmann::json::array();
        for (const auto& s : stages_) stages.push_back({{"stage", s.name}, {"wall_ms", s.wall_ms}});
        nlohmann::json j{{"format", "rlnn-bench-manifest"},
                         {"version", 1},
                         {"command", command_},
                         {"status", status_},
                         {"input_hash", input_hash()},
                         {"config", config_},
                         {"outputs", outputs},
                         {"stages", stages}};
        if (!message_.empty()) j["message"] = message_;
        if (!notes_.empty()) j["notes"] = notes_;
        return j;
    }

    void write(const std::string& name = "manifest.json") const {
        std::ofstream out(out_dir_ / name);
        if (!out) throw std::runtime_error("cannot write manifest");
        out << to_json().dump(2) << '\n';
    }

private:
    struct Stage {
        std::string name;
        double wall_ms;
    };
    std::string command_;
    nlohmann::json config_;
    std::filesystem::path out_dir_;
    std::vector<std::string> outputs_;
    std::vector<Stage> stages_;
    nlohmann::json notes_ = nlohmann::json::object();
    std::string status_ = "ok";
    std::string message_;
};

/// Adds the elapsed time to the manifest when destroyed.
class StageTimer {
public:
    StageTimer(RunManifest& manifest, std::string name)
        : manifest_(manifest), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;
    ~StageTimer() {
        manifest_.add_stage(name_,
                            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count());
    }

private:
    RunManifest& manifest_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace rlnn::bench
