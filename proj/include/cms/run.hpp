#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cms {

/// Command-line overrides on top of the configuration file.
struct RunOptions {
    std::string config_path;
    std::optional<std::string> mode;
    std::string out_dir = ".";
    std::string export_mesh;
    std::string export_system;
    std::string export_reduced;
    std::string basis_cache;
    std::optional<bool> reference;
    bool full_spectrum_s = false;
    std::optional<int> dual_depth;
    std::optional<std::uint64_t> seed;
};

/// Runs the configured mode and writes its artifacts into out_dir.
/// Returns 0 on success, 2 if some load case was not resolvable, 1 on errors.
int run(const RunOptions& options);

}  // namespace cms
