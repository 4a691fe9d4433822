#include "cms/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "cms/errors.hpp"

namespace cms {

RunMode parse_mode(const std::string& s) {
    static const std::map<std::string, RunMode> modes{{"solve", RunMode::solve},
                                                      {"estimate", RunMode::estimate},
                                                      {"adapt-goal", RunMode::adapt_goal},
                                                      {"adapt-energy", RunMode::adapt_energy},
                                                      {"sweep", RunMode::sweep}};
    const auto it = modes.find(s);
    if (it == modes.end())
        throw InvalidArgument(
            fmt::format("unknown mode '{}' (expected solve, estimate, adapt-goal, adapt-energy or sweep)", s));
    return it->second;
}

const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::solve: return "solve";
        case RunMode::estimate: return "estimate";
        case RunMode::adapt_goal: return "adapt-goal";
        case RunMode::adapt_energy: return "adapt-energy";
        case RunMode::sweep: return "sweep";
    }
    return "unknown";
}

namespace {

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
        const auto mark = node.Mark();
        if (mark.line >= 0) throw ConfigError(fmt::format("{}:{}: {}", source_, mark.line + 1, msg));
        throw ConfigError(fmt::format("{}: {}", source_, msg));
    }

    /// Rejects keys of `map` outside `allowed`.
    void check_keys(const YAML::Node& map, const std::string& where, const std::set<std::string>& allowed) const {
        if (!map.IsMap()) fail(map, fmt::format("'{}' must be a mapping", where));
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.contains(key)) fail(kv.first, fmt::format("unknown key '{}' in {}", key, where));
        }
    }

    template <class T>
    T scalar(const YAML::Node& node, const std::string& name) const {
        if (!node.IsScalar()) fail(node, fmt::format("'{}' must be a scalar", name));
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, fmt::format("'{}' has an invalid value '{}'", name, node.Scalar()));
        }
    }

    template <class T>
    std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& name) const {
        if (node.IsScalar()) return {scalar<T>(node, name)};
        if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a number or a list", name));
        std::vector<T> out;
        for (const auto& v : node) out.push_back(scalar<T>(v, name));
        return out;
    }

    std::array<double, 2> pair(const YAML::Node& node, const std::string& name) const {
        if (!node.IsSequence() || node.size() != 2) fail(node, fmt::format("'{}' must be a list of two numbers", name));
        return {scalar<double>(node[0], name), scalar<double>(node[1], name)};
    }

    GaussianField gaussian(const YAML::Node& node, const std::string& where) const {
        check_keys(node, where, {"center", "direction", "amplitude", "sharpness"});
        GaussianField g;
        if (!node["center"]) fail(node, fmt::format("{} needs a center", where));
        const auto c = pair(node["center"], where + ".center");
        g.center = {c[0], c[1]};
        if (node["direction"]) g.direction = pair(node["direction"], where + ".direction");
        if (node["amplitude"]) g.amplitude = scalar<double>(node["amplitude"], where + ".amplitude");
        if (node["sharpness"]) {
            g.sharpness = scalar<double>(node["sharpness"], where + ".sharpness");
            if (!(g.sharpness >= 0.0)) fail(node["sharpness"], "sharpness must be >= 0");
        }
        return g;
    }

    RunConfig parse(const YAML::Node& root) const {
        if (!root.IsDefined() || root.IsNull()) throw ConfigError(fmt::format("{}: empty configuration", source_));
        check_keys(root, "the top level",
                   {"schema_version", "mode", "omega", "omega2", "geometry", "material", "load", "goal", "selection",
                    "basis", "adapt", "sweep", "reference", "full_spectrum_s", "seed"});
        RunConfig cfg;
        if (!root["schema_version"]) fail(root, "missing schema_version");
        cfg.schema_version = scalar<int>(root["schema_version"], "schema_version");
        if (cfg.schema_version != 1)
            fail(root["schema_version"], fmt::format("unsupported schema_version {}", cfg.schema_version));
        if (root["mode"]) {
            try {
                cfg.mode = parse_mode(scalar<std::string>(root["mode"], "mode"));
            } catch (const InvalidArgument& e) {
                fail(root["mode"], e.what());
            }
        }
        if (root["omega"] && root["omega2"]) fail(root["omega2"], "give either omega or omega2, not both");
        if (root["omega"]) cfg.omega = scalar<double>(root["omega"], "omega");
        if (root["omega2"]) {
            const double w2 = scalar<double>(root["omega2"], "omega2");
            if (!(w2 >= 0.0)) fail(root["omega2"], "omega2 must be >= 0");
            cfg.omega = std::sqrt(w2);
        }
        if (!(cfg.omega >= 0.0)) fail(root["omega"], "omega must be >= 0");

        auto& p = cfg.problem;
        if (const auto g = root["geometry"]) {
            check_keys(g, "geometry", {"width", "height", "nx", "ny", "subdomains", "clamp_right"});
            if (g["width"]) p.width = scalar<double>(g["width"], "width");
            if (g["height"]) p.height = scalar<double>(g["height"], "height");
            if (g["nx"]) p.nx = scalar<int>(g["nx"], "nx");
            if (g["ny"]) p.ny = scalar<int>(g["ny"], "ny");
            if (g["subdomains"]) {
                const auto s = g["subdomains"];
                if (!s.IsSequence() || s.size() != 2) fail(s, "subdomains must be a list [gx, gy]");
                p.grid = {scalar<int>(s[0], "subdomains"), scalar<int>(s[1], "subdomains")};
            }
            if (g["clamp_right"]) p.clamp_right = scalar<bool>(g["clamp_right"], "clamp_right");
            if (!(p.width > 0.0 && p.height > 0.0)) fail(g, "width and height must be positive");
            if (p.nx < 1 || p.ny < 1) fail(g, "nx and ny must be >= 1");
            if (p.grid.gx < 1 || p.grid.gy < 1) fail(g, "subdomain grid entries must be >= 1");
            if (p.nx % p.grid.gx != 0 || p.ny % p.grid.gy != 0)
                fail(g, fmt::format("subdomain grid {}x{} does not divide the {}x{} cells", p.grid.gx, p.grid.gy,
                                    p.nx, p.ny));
        }
        if (const auto m = root["material"]) {
            check_keys(m, "material", {"E", "nu", "rho", "alpha", "beta"});
            auto& mat = p.material;
            if (m["E"]) mat.E = scalar<double>(m["E"], "E");
            if (m["nu"]) mat.nu = scalar<double>(m["nu"], "nu");
            if (m["rho"]) mat.rho = scalar<double>(m["rho"], "rho");
            if (m["alpha"]) mat.alpha = scalar<double>(m["alpha"], "alpha");
            if (m["beta"]) mat.beta = scalar<double>(m["beta"], "beta");
            try {
                mat.validate();
            } catch (const InvalidArgument& e) {
                fail(m, e.what());
            }
        }
        if (const auto l = root["load"]) {
            check_keys(l, "load", {"traction", "body_force"});
            if (l["traction"]) p.traction = gaussian(l["traction"], "load.traction");
            if (l["body_force"]) p.body_force = gaussian(l["body_force"], "load.body_force");
        }
        if (root["goal"]) cfg.goal = gaussian(root["goal"], "goal");
        if (root["selection"]) cfg.selection = scalar_or_list<int>(root["selection"], "selection");

        if (const auto b = root["basis"]) {
            check_keys(b, "basis", {"modes", "dense_threshold", "tolerance"});
            if (b["modes"]) {
                p.mode_caps = scalar_or_list<int>(b["modes"], "basis.modes");
                cfg.explicit_mode_caps = true;
                for (int c : p.mode_caps)
                    if (c < 1) fail(b["modes"], "basis.modes entries must be >= 1");
            }
            if (b["dense_threshold"])
                p.basis_options.eigen.dense_threshold = scalar<int>(b["dense_threshold"], "dense_threshold");
            if (b["tolerance"]) p.basis_options.eigen.tolerance = scalar<double>(b["tolerance"], "tolerance");
        }

        if (const auto a = root["adapt"]) {
            check_keys(a, "adapt",
                       {"nmodes", "nits", "tol", "add", "remove", "caps", "initial", "max_inner", "tol_share",
                        "dual_depth", "exact_dual"});
            auto& ad = cfg.adapt;
            if (a["nmodes"]) ad.nmodes = scalar<int>(a["nmodes"], "nmodes");
            if (a["nits"]) ad.nits = scalar<int>(a["nits"], "nits");
            if (a["tol"]) ad.tol = scalar<double>(a["tol"], "tol");
            if (a["add"]) ad.add = scalar_or_list<int>(a["add"], "add");
            if (a["remove"]) ad.remove = scalar_or_list<int>(a["remove"], "remove");
            if (a["caps"]) ad.caps = scalar_or_list<int>(a["caps"], "caps");
            if (a["initial"]) ad.initial = scalar_or_list<int>(a["initial"], "initial");
            if (a["max_inner"]) ad.max_inner = scalar<int>(a["max_inner"], "max_inner");
            if (a["dual_depth"]) ad.dual_depth = scalar<int>(a["dual_depth"], "dual_depth");
            if (a["exact_dual"]) ad.exact_dual = scalar<bool>(a["exact_dual"], "exact_dual");
            if (a["tol_share"]) {
                const auto v = scalar<std::string>(a["tol_share"], "tol_share");
                if (v == "unresolved")
                    ad.tol_share = ToleranceShare::UnresolvedSubspaces;
                else if (v == "subdomains")
                    ad.tol_share = ToleranceShare::Subdomains;
                else
                    fail(a["tol_share"], "tol_share must be 'unresolved' or 'subdomains'");
            }
            if (ad.nmodes < 1) fail(a, "nmodes must be >= 1");
            if (ad.nits < 1) fail(a, "nits must be >= 1");
            if (!(ad.tol > 0.0 && ad.tol < 1.0)) fail(a, "tol must lie in (0, 1)");
            if (ad.max_inner < 1) fail(a, "max_inner must be >= 1");
            if (ad.dual_depth < 0) fail(a, "dual_depth must be >= 0");
        }

        if (const auto s = root["sweep"]) {
            check_keys(s, "sweep", {"omega2", "omega2_start", "omega2_stop", "omega2_step"});
            if (s["omega2"]) {
                if (s["omega2_start"] || s["omega2_stop"] || s["omega2_step"])
                    fail(s, "give either sweep.omega2 or a start/stop/step range");
                cfg.sweep_omega2 = scalar_or_list<double>(s["omega2"], "sweep.omega2");
            } else {
                if (!s["omega2_start"] || !s["omega2_stop"] || !s["omega2_step"])
                    fail(s, "sweep range needs omega2_start, omega2_stop and omega2_step");
                const double a = scalar<double>(s["omega2_start"], "omega2_start");
                const double b = scalar<double>(s["omega2_stop"], "omega2_stop");
                const double h = scalar<double>(s["omega2_step"], "omega2_step");
                if (!(h > 0.0) || b < a) fail(s, "sweep range needs step > 0 and stop >= start");
                const int n = static_cast<int>(std::floor((b - a) / h + 1e-9));
                for (int k = 0; k <= n; ++k) cfg.sweep_omega2.push_back(a + k * h);
            }
            for (double w2 : cfg.sweep_omega2)
                if (!(w2 >= 0.0)) fail(s, "sweep frequencies must be >= 0");
        }

        if (root["reference"]) {
            const auto v = scalar<std::string>(root["reference"], "reference");
            if (v == "full")
                cfg.reference = true;
            else if (v == "none")
                cfg.reference = false;
            else
                fail(root["reference"], "reference must be 'none' or 'full'");
        }
        if (root["full_spectrum_s"]) cfg.full_spectrum_s = scalar<bool>(root["full_spectrum_s"], "full_spectrum_s");
        if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");

        if ((cfg.mode == RunMode::adapt_goal) && !cfg.goal) fail(root, "mode adapt-goal needs a goal");
        if (cfg.mode == RunMode::sweep && cfg.sweep_omega2.empty()) fail(root, "mode sweep needs sweep frequencies");
        return cfg;
    }

private:
    std::string source_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
    }
    return Parser(source).parse(root);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read configuration {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

ProblemSpec problem_for(const RunConfig& cfg) {
    ProblemSpec spec = cfg.problem;
    spec.basis_options.eigen.seed = cfg.seed;
    if (!cfg.explicit_mode_caps && !cfg.adapt.caps.empty()) {
        spec.mode_caps = cfg.adapt.caps;
        for (int& c : spec.mode_caps) c += 1;
    }
    return spec;
}

AdaptConfig adapt_for(const RunConfig& cfg) {
    AdaptConfig ad = cfg.adapt;
    ad.reference = cfg.reference;
    ad.full_spectrum_s = cfg.full_spectrum_s;
    return ad;
}

}  // namespace cms
