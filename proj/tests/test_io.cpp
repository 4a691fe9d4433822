#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "cms/basis_cache.hpp"
#include "cms/config.hpp"
#include "cms/errors.hpp"
#include "cms/matrix_market.hpp"
#include "cms/report.hpp"
#include "support.hpp"

using namespace cms;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cms_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct MarketFile {
    std::string header;
    int rows = 0, cols = 0, entries = 0;
    std::map<std::pair<int, int>, double> values;  // coordinate entries, 0-based
    std::vector<double> array;
};

// Small reader written against the format description, not the writer.
MarketFile read_market(const fs::path& path) {
    std::ifstream in(path);
    MarketFile f;
    std::getline(in, f.header);
    std::string line;
    while (std::getline(in, line) && line.starts_with("%")) {
    }
    std::istringstream size(line);
    const bool coordinate = f.header.find("coordinate") != std::string::npos;
    size >> f.rows >> f.cols;
    if (coordinate) size >> f.entries;
    if (coordinate) {
        int i, j;
        double v;
        while (in >> i >> j >> v) f.values[{i - 1, j - 1}] = v;
    } else {
        double v;
        while (in >> v) f.array.push_back(v);
    }
    return f;
}

AdaptTrace synthetic_trace(int n) {
    AdaptTrace t;
    t.omega = 1.0;
    t.termination = Termination::budget_exhausted;
    for (int i = 0; i < n; ++i) {
        AdaptIteration rec;
        rec.m.m = {1 + i, 1 + 2 * i, 1};
        rec.dofs = rec.m.total();
        rec.error = 0.5 * std::pow(0.4, i);
        rec.estimate = 3.0 * *rec.error;
        rec.relative_estimate = rec.estimate / 2.0;
        rec.relative_error = *rec.error / 2.0;
        rec.report.S.S = 1.25;
        t.iterations.push_back(rec);
    }
    return t;
}

const char* kValidConfig = R"(schema_version: 1
mode: sweep
geometry:
  width: 1.0
  height: 0.5
  nx: 12
  ny: 6
  subdomains: [3, 2]
  clamp_right: true
material: {E: 2.0, nu: 0.3, alpha: 0.01, beta: 0.02}
load:
  traction: {center: [0.7, 0.5], direction: [0, -1], sharpness: 100}
goal: {center: [0.95, 0.25], direction: [1, 0]}
basis: {modes: [20, 8, 8, 8, 8, 8, 8], dense_threshold: 500}
adapt:
  nmodes: 100
  nits: 5
  tol: 0.05
  add: 2
  remove: [1, 1, 1, 1, 1, 1, 1]
  caps: 8
  tol_share: subdomains
  dual_depth: 4
  exact_dual: true
sweep: {omega2_start: 0.1, omega2_stop: 1.0, omega2_step: 0.1}
reference: full
seed: 17
)";

void expect_config_error(const std::string& text, const std::string& fragment, int line) {
    try {
        parse_config(text, "cfg.yaml");
        ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find(fragment), std::string::npos) << what;
        if (line > 0) {
            EXPECT_NE(what.find("cfg.yaml:" + std::to_string(line) + ":"), std::string::npos) << what;
        }
    }
}

}  // namespace

TEST(MatrixMarket, SymmetricSparseRoundTrip) {
    const auto& p = test::small_problem();
    const auto dir = temp_dir("mm_sym");
    write_matrix_market((dir / "K.mtx").string(), p.system.K, true);
    const auto f = read_market(dir / "K.mtx");
    EXPECT_EQ(f.header, "%%MatrixMarket matrix coordinate real symmetric");
    EXPECT_EQ(f.rows, p.system.size());
    EXPECT_EQ(f.cols, p.system.size());
    EXPECT_EQ(f.entries, static_cast<int>(f.values.size()));
    Matrix rebuilt = Matrix::Zero(f.rows, f.cols);
    for (const auto& [ij, v] : f.values) {
        EXPECT_GE(ij.first, ij.second);
        rebuilt(ij.first, ij.second) = v;
        rebuilt(ij.second, ij.first) = v;
    }
    EXPECT_EQ(rebuilt, Matrix(p.system.K));
}

TEST(MatrixMarket, GeneralSparseAndDense) {
    const auto dir = temp_dir("mm_gen");
    SparseMatrix A(2, 3);
    A.insert(0, 2) = 0.1;
    A.insert(1, 0) = -3.5e-20;
    A.makeCompressed();
    write_matrix_market((dir / "A.mtx").string(), A, false);
    const auto f = read_market(dir / "A.mtx");
    EXPECT_EQ(f.header, "%%MatrixMarket matrix coordinate real general");
    EXPECT_EQ(f.entries, 2);
    EXPECT_EQ((f.values.at({0, 2})), 0.1);
    EXPECT_EQ((f.values.at({1, 0})), -3.5e-20);
    EXPECT_THROW(write_matrix_market((dir / "B.mtx").string(), A, true), InvalidArgument);

    Matrix D(2, 2);
    D << 1.0 / 3.0, 2.0, -1.0, 1e300;
    write_matrix_market((dir / "D.mtx").string(), D);
    const auto d = read_market(dir / "D.mtx");
    EXPECT_EQ(d.header, "%%MatrixMarket matrix array real general");
    ASSERT_EQ(d.array.size(), 4u);
    EXPECT_EQ(d.array[0], D(0, 0));
    EXPECT_EQ(d.array[1], D(1, 0));
    EXPECT_EQ(d.array[2], D(0, 1));
    EXPECT_EQ(d.array[3], D(1, 1));

    const Vector v = Vector::LinSpaced(3, 0.1, 0.3);
    write_matrix_market((dir / "v.mtx").string(), v);
    const auto vf = read_market(dir / "v.mtx");
    EXPECT_EQ(vf.rows, 3);
    EXPECT_EQ(vf.cols, 1);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(vf.array[i], v[i]);
}

TEST(Csv, NumbersRoundTrip) {
    EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
    EXPECT_EQ(csv_number(std::optional<double>{}), "");
    EXPECT_EQ(std::stod(csv_number(1.0 / 3.0)), 1.0 / 3.0);
    CsvTable t{{"a", "b"}, {{"1", ""}, {"x", "2"}}};
    EXPECT_EQ(t.str(), "a,b\n1,\nx,2\n");
}

TEST(Csv, TraceTables) {
    const auto trace = synthetic_trace(3);
    const auto t = trace_table(trace);
    EXPECT_EQ(t.header, (std::vector<std::string>{"iteration", "dofs", "m_0", "m_1", "m_2", "estimate", "error",
                                                  "relative_estimate", "relative_error", "stability_factor"}));
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.rows[2][0], "3");
    EXPECT_EQ(t.rows[2][1], std::to_string(trace.iterations[2].dofs));
    EXPECT_EQ(std::stod(t.rows[1][6]), *trace.iterations[1].error);

    const auto s = sweep_summary_table({trace, trace});
    EXPECT_EQ(s.header.front(), "omega2");
    EXPECT_EQ(s.header.back(), "termination");
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_EQ(s.rows[0].back(), "budget_exhausted");
    const auto st = sweep_trace_table({trace, trace});
    EXPECT_EQ(st.rows.size(), 6u);
    EXPECT_EQ(st.header[0], "case");
}

TEST(Svg, SinglePointAndGolden) {
    const std::string one = convergence_svg(synthetic_trace(1));
    EXPECT_NE(one.find("<svg"), std::string::npos);
    EXPECT_NE(one.find("</svg>"), std::string::npos);
    EXPECT_EQ(one.find("nan"), std::string::npos);

    const std::string ten = convergence_svg(synthetic_trace(10));
    EXPECT_EQ(ten, convergence_svg(synthetic_trace(10)));
    const auto count = [&](const std::string& what) {
        std::size_t n = 0;
        for (auto pos = ten.find(what); pos != std::string::npos; pos = ten.find(what, pos + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("<circle"), 11u);  // ten markers and the legend
    EXPECT_GE(count("<rect"), 10u);
    EXPECT_NE(ten.find("class=\"error\""), std::string::npos);
    EXPECT_NE(ten.find("class=\"estimate\""), std::string::npos);

    const fs::path golden = fs::path(CMS_TEST_DATA_DIR) / "convergence_golden.svg";
    if (std::getenv("CMS_UPDATE_GOLDEN")) {
        std::ofstream(golden, std::ios::binary) << ten;
    }
    ASSERT_TRUE(fs::exists(golden));
    EXPECT_EQ(ten, slurp(golden));

    const auto dir = temp_dir("svg");
    emit_convergence_plot(synthetic_trace(10), (dir / "c.svg").string());
    EXPECT_EQ(slurp(dir / "c.svg"), ten);
}

TEST(Config, ParsesEveryKey) {
    const auto cfg = parse_config(kValidConfig, "cfg.yaml");
    EXPECT_EQ(cfg.mode, RunMode::sweep);
    EXPECT_EQ(cfg.problem.width, 1.0);
    EXPECT_EQ(cfg.problem.height, 0.5);
    EXPECT_EQ(cfg.problem.nx, 12);
    EXPECT_EQ(cfg.problem.ny, 6);
    EXPECT_EQ(cfg.problem.grid.gx, 3);
    EXPECT_TRUE(cfg.problem.clamp_right);
    EXPECT_EQ(cfg.problem.material.E, 2.0);
    EXPECT_EQ(cfg.problem.material.beta, 0.02);
    ASSERT_TRUE(cfg.problem.traction.has_value());
    EXPECT_EQ(cfg.problem.traction->center.x, 0.7);
    ASSERT_TRUE(cfg.goal.has_value());
    EXPECT_EQ(cfg.goal->direction[0], 1.0);
    EXPECT_EQ(cfg.goal->sharpness, 100.0);
    EXPECT_EQ(cfg.problem.mode_caps, (std::vector<int>{20, 8, 8, 8, 8, 8, 8}));
    EXPECT_TRUE(cfg.explicit_mode_caps);
    EXPECT_EQ(cfg.problem.basis_options.eigen.dense_threshold, 500);
    EXPECT_EQ(cfg.adapt.nmodes, 100);
    EXPECT_EQ(cfg.adapt.nits, 5);
    EXPECT_EQ(cfg.adapt.tol, 0.05);
    EXPECT_EQ(cfg.adapt.add, std::vector<int>{2});
    EXPECT_EQ(cfg.adapt.remove.size(), 7u);
    EXPECT_EQ(cfg.adapt.caps, std::vector<int>{8});
    EXPECT_EQ(cfg.adapt.tol_share, ToleranceShare::Subdomains);
    EXPECT_EQ(cfg.adapt.dual_depth, 4);
    EXPECT_TRUE(cfg.adapt.exact_dual);
    ASSERT_EQ(cfg.sweep_omega2.size(), 10u);
    EXPECT_NEAR(cfg.sweep_omega2.back(), 1.0, 1e-12);
    EXPECT_TRUE(cfg.reference);
    EXPECT_EQ(cfg.seed, 17u);
}

TEST(Config, Defaults) {
    const auto cfg = parse_config("schema_version: 1\n");
    EXPECT_EQ(cfg.mode, RunMode::solve);
    EXPECT_EQ(cfg.omega, 1.0);
    EXPECT_EQ(cfg.problem.width, 1.0);
    EXPECT_FALSE(cfg.problem.traction.has_value());
    EXPECT_FALSE(cfg.explicit_mode_caps);
    EXPECT_FALSE(cfg.reference);
    EXPECT_NEAR(parse_config("schema_version: 1\nomega2: 2.25\n").omega, 1.5, 1e-15);
}

TEST(Config, ErrorsCarryLineNumbers) {
    expect_config_error("schema_version: 1\ngeometry:\n  nx: 4\n  nz: 4\n", "unknown key 'nz' in geometry", 4);
    expect_config_error("schema_version: 1\nfoo: 2\n", "unknown key 'foo'", 2);
    expect_config_error("mode: solve\n", "missing schema_version", 0);
    expect_config_error("schema_version: 2\n", "unsupported schema_version 2", 1);
    expect_config_error("schema_version: 1\nmode: fly\n", "unknown mode 'fly'", 2);
    expect_config_error("schema_version: 1\nomega: abc\n", "invalid value 'abc'", 2);
    expect_config_error("schema_version: 1\nmode: adapt-goal\n", "needs a goal", 0);
    expect_config_error("schema_version: 1\nmode: sweep\n", "needs sweep frequencies", 0);
    expect_config_error("schema_version: 1\ngeometry: {nx: 5, subdomains: [3, 2]}\n", "does not divide", 2);
    expect_config_error("schema_version: 1\nadapt:\n  tol: 1.5\n", "tol must lie in (0, 1)", 0);
    expect_config_error("schema_version: 1\nreference: maybe\n", "reference must be", 2);
    expect_config_error("schema_version: 1\nsweep: {omega2_start: 1}\n", "omega2_stop", 2);
    expect_config_error("schema_version: 1\nkey: [unclosed\n", "cfg.yaml:", 0);
    EXPECT_THROW(load_config("/nonexistent/cfg.yaml"), ConfigError);
}

TEST(Config, LoadsFile) {
    const auto dir = temp_dir("cfg");
    std::ofstream(dir / "c.yaml") << kValidConfig;
    EXPECT_EQ(load_config((dir / "c.yaml").string()).mode, RunMode::sweep);
    EXPECT_NO_THROW(load_config(std::string(CMS_CONFIG_DIR) + "/solve.yaml"));
}

TEST(BasisCache, RoundTripAndKeyMismatch) {
    ProblemSpec spec = test::small_spec();
    spec.mode_caps = {5};
    const auto dir = temp_dir("cache");
    const Problem built = build_problem(spec, dir.string());
    const auto counts = requested_counts(spec.mode_caps, built.partition);
    const auto key = basis_cache_key(built.mesh, spec.material, built.partition, counts, spec.basis_options);
    const auto path = basis_cache_path(dir.string(), key);
    ASSERT_TRUE(fs::exists(path));

    const auto loaded = load_basis(path, key, built.partition, *built.extension, built.system.K, built.system.M);
    ASSERT_TRUE(loaded.has_value());
    for (int s = 0; s < built.num_subspaces(); ++s) {
        EXPECT_EQ(loaded->subspace(s).eigenvalues, built.basis->subspace(s).eigenvalues);
        EXPECT_EQ(loaded->subspace(s).local, built.basis->subspace(s).local);
        EXPECT_LE((loaded->lift(s) - built.basis->lift(s)).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_FALSE(load_basis(path, key + 1, built.partition, *built.extension, built.system.K, built.system.M).has_value());
    EXPECT_FALSE(load_basis((dir / "missing.bin").string(), key, built.partition, *built.extension, built.system.K, built.system.M));

    // a second build reads the cache and gives the same basis
    const Problem again = build_problem(spec, dir.string());
    EXPECT_EQ(again.basis->subspace(3).eigenvalues, built.basis->subspace(3).eigenvalues);

    // the key depends on the material and on the counts
    Material other = spec.material;
    other.nu = 0.3;
    EXPECT_NE(basis_cache_key(built.mesh, other, built.partition, counts, spec.basis_options), key);
    auto more = counts;
    more[0] += 1;
    EXPECT_NE(basis_cache_key(built.mesh, spec.material, built.partition, more, spec.basis_options), key);

    // truncated files are rejected
    const std::string bytes = slurp(path);
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
    EXPECT_FALSE(load_basis(path, key, built.partition, *built.extension, built.system.K, built.system.M).has_value());
}
