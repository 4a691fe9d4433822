#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cms/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Component mode synthesis for damped frequency response problems"};
    cms::RunOptions opt;
    std::string mode, reference, log_level = "info";
    std::optional<int> dual_depth;
    std::optional<std::uint64_t> seed;

    app.add_option("--config", opt.config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "Override the configured mode")
        ->check(CLI::IsMember({"solve", "estimate", "adapt-goal", "adapt-energy", "sweep"}));
    app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    app.add_option("--export-mesh", opt.export_mesh, "Write the mesh to this file");
    app.add_option("--export-system", opt.export_system, "Write K, M, b as Matrix Market into this directory");
    app.add_option("--export-reduced", opt.export_reduced, "Write the final reduced matrices into this directory");
    app.add_option("--basis-cache", opt.basis_cache, "Directory for cached modal bases");
    app.add_option("--reference", reference, "Reference solve")->check(CLI::IsMember({"none", "full"}));
    app.add_flag("--full-spectrum-s", opt.full_spectrum_s, "Stability factor from the full spectrum");
    app.add_option("--dual-depth", dual_depth, "Extra dual modes per subspace")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "Seed for the iterative eigensolver start vectors");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::from_str(log_level));
    if (!mode.empty()) opt.mode = mode;
    if (!reference.empty()) opt.reference = reference == "full";
    opt.dual_depth = dual_depth;
    opt.seed = seed;
    return cms::run(opt);
}
