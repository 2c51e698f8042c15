#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace amd::cli {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;     // bad flags or config keys
inline constexpr int kExitData = 3;      // bad input data
inline constexpr int kExitInternal = 4;  // invariant violation

// One JSON document per run; flags override config keys. Typed getters name
// the offending dotted key on error.
class Config {
public:
    Config();
    static Config from_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    int64_t get_int(const std::string& key, int64_t def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::string get_string(const std::string& key, const std::string& def) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& def) const;
    std::vector<std::string> get_strings(const std::string& key,
                                         const std::vector<std::string>& def) const;
    void set(const std::string& key, nlohmann::json value);

    const nlohmann::json& root() const { return root_; }

private:
    const nlohmann::json* find(const std::string& key) const;
    nlohmann::json root_;
};

struct RunContext {
    Config config;
    std::filesystem::path out_dir = "run";
    uint64_t seed = 1;

    std::filesystem::path dataset_dir() const { return out_dir / "dataset"; }
    std::filesystem::path checkpoint_dir() const { return out_dir / "checkpoints"; }
    std::filesystem::path manifest_path() const;
    std::filesystem::path image_root() const;
};

// Command bodies; shared by the binary and the test suites.
void cmd_synth(const RunContext& ctx);
void cmd_train(const RunContext& ctx);
nlohmann::json cmd_grade(const RunContext& ctx, const std::filesystem::path& left,
                         const std::filesystem::path& right);
void cmd_eval(const RunContext& ctx);
void cmd_interpret(const RunContext& ctx);
void cmd_report(const RunContext& ctx);

// Full argv entry point with exit-code mapping.
int run_cli(int argc, const char* const* argv);

}  // namespace amd::cli
