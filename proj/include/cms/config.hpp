#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cms/adaptivity.hpp"
#include "cms/problem.hpp"

namespace cms {

enum class RunMode { solve, estimate, adapt_goal, adapt_energy, sweep };

RunMode parse_mode(const std::string& s);
const char* to_string(RunMode m);

/// Parsed and validated run configuration (YAML, schema_version 1).
struct RunConfig {
    int schema_version = 1;
    RunMode mode = RunMode::solve;
    ProblemSpec problem;
    std::optional<GaussianField> goal;
    double omega = 1.0;
    /// Explicit selection for solve / estimate; empty means one mode per subspace.
    std::vector<int> selection;
    AdaptConfig adapt;
    std::vector<double> sweep_omega2;
    bool reference = false;
    bool full_spectrum_s = false;
    std::uint64_t seed = 0;
    /// Whether the basis mode counts were given explicitly.
    bool explicit_mode_caps = false;
};

/// Throws ConfigError for unreadable files, unknown keys and invalid values;
/// messages carry the line number.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");

/// The problem to build for a run: the eigensolver seed applied and, when only
/// adapt caps M_i are given, M_i + 1 modes per subspace so that the weight
/// Lambda_{i, M_i + 1} exists.
ProblemSpec problem_for(const RunConfig& cfg);

/// The adaptive settings with the run-level reference and stability options applied.
AdaptConfig adapt_for(const RunConfig& cfg);

}  // namespace cms
