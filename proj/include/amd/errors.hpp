#pragma once

#include <stdexcept>
#include <string>

namespace amd {

// Bad input data: manifests, image files, checkpoints, datasets.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration; message names the offending key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace amd
