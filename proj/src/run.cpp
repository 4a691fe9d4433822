#include "cms/run.hpp"

#include <filesystem>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cms/adaptivity.hpp"
#include "cms/config.hpp"
#include "cms/errors.hpp"
#include "cms/matrix_market.hpp"
#include "cms/mesh_io.hpp"
#include "cms/problem.hpp"
#include "cms/report.hpp"

namespace cms {

namespace fs = std::filesystem;

namespace {

ReducedSelection selection_for(const RunConfig& cfg, const ModalBasis& basis) {
    const int ns = basis.num_subspaces();
    std::vector<int> m = cfg.selection;
    if (m.empty()) m.assign(ns, 1);
    if (m.size() == 1) m.assign(ns, m[0]);
    ReducedSelection sel{m};
    sel.validate(basis);
    return sel;
}

void export_reduced(const std::string& dir, const ReducedModel& model) {
    fs::create_directories(dir);
    write_matrix_market((fs::path(dir) / "Km.mtx").string(), model.Km);
    write_matrix_market((fs::path(dir) / "Mm.mtx").string(), model.Mm);
    write_matrix_market((fs::path(dir) / "bm.mtx").string(), model.bm);
    spdlog::info("reduced matrices written to {}", dir);
}

std::vector<std::string> m_header(int ns) {
    std::vector<std::string> h;
    for (int s = 0; s < ns; ++s) h.push_back(fmt::format("m_{}", s));
    return h;
}

void append(std::vector<std::string>& row, const std::vector<int>& m) {
    for (int v : m) row.push_back(std::to_string(v));
}

int run_solve(const RunConfig& cfg, const Problem& p, const RunOptions& opt, const fs::path& out) {
    const auto m = selection_for(cfg, *p.basis);
    const ReducedModel model = project(p.system, *p.basis, m);
    const ReducedSolution sol = solve_reduced(model, cfg.omega, p.system.material);
    const AlgebraicResidual res = algebraic_residual(p.system, sol);
    CsvTable t;
    t.header = {"omega2", "dofs", "full_dofs"};
    const auto mh = m_header(p.num_subspaces());
    t.header.insert(t.header.end(), mh.begin(), mh.end());
    for (const char* c : {"energy_norm", "solve_residual", "galerkin_violation", "relative_true_error"})
        t.header.emplace_back(c);
    std::vector<std::string> row{csv_number(cfg.omega * cfg.omega), std::to_string(m.total()),
                                 std::to_string(p.system.size())};
    append(row, m.m);
    const double u_norm = energy_norm(p.system.K, sol.full_expansion());
    row.push_back(csv_number(u_norm));
    row.push_back(csv_number(reduced_residual(model, cfg.omega, p.system.material, sol.coefficients())));
    row.push_back(csv_number(res.galerkin_violation));
    std::optional<double> rel;
    if (cfg.reference) {
        const VectorC U = solve_full_response(p.system, cfg.omega);
        const double un = energy_norm(p.system.K, U);
        if (un > 0.0) rel = energy_norm(p.system.K, VectorC(U - sol.full_expansion())) / un;
    }
    row.push_back(csv_number(rel));
    t.rows.push_back(row);
    t.write((out / "report.csv").string());
    if (!opt.export_reduced.empty()) export_reduced(opt.export_reduced, model);
    return 0;
}

int run_estimate(const RunConfig& cfg, const Problem& p, const RunOptions& opt, const fs::path& out) {
    const auto& basis = *p.basis;
    const auto m = selection_for(cfg, basis);
    const ReducedModel model = project(p.system, basis, m);
    const ReducedSolution sol = solve_reduced(model, cfg.omega, p.system.material);
    const AlgebraicResidual res = algebraic_residual(p.system, sol);
    const CompleteResidualNorms complete(p.system.M, p.partition, *p.extension);
    const auto norms = complete(res, basis, m);
    const StabilityFactor S =
        cfg.full_spectrum_s
            ? stability_factor(full_spectrum(p.system), cfg.omega, p.system.material, SpectrumSource::FullSpectrum)
            : stability_factor(reduced_eigenvalues(model), cfg.omega, p.system.material,
                               SpectrumSource::ReducedSpectrum);
    std::optional<VectorC> U;
    if (cfg.reference) U = solve_full_response(p.system, cfg.omega);
    EstimateReport rep = energy_estimate(norms, basis, m, S, sol, p.system.K, U ? &*U : nullptr);

    std::optional<double> goal_error;
    if (cfg.goal) {
        const Vector psi = p.goal_vector(*cfg.goal);
        std::vector<int> depth;
        VectorC phi;
        if (cfg.adapt.exact_dual) {
            depth = full_depth(basis);
            phi = solve_dual(p.system, psi, cfg.omega);
        } else {
            depth = default_depth(basis, m, cfg.adapt.dual_depth);
            phi = solve_dual(p.system, basis, psi, cfg.omega, ReducedSelection{depth});
        }
        rep.goal = goal_indicators(p.system.K, res, phi, basis, m, depth);
        if (U) {
            const Vector h = goal_load(p.system, psi);
            goal_error = std::abs(Complex(h.cast<Complex>().transpose() * (*U - sol.full_expansion())));
        }
    }
    spdlog::debug("estimate report\n{}", to_text(rep));

    const int ns = p.num_subspaces();
    CsvTable t;
    t.header = {"omega2"};
    const auto mh = m_header(ns);
    t.header.insert(t.header.end(), mh.begin(), mh.end());
    for (const char* c : {"dofs", "I1", "I2", "stability_factor", "energy_bound", "relative_bound", "indicator_sum",
                          "energy_norm", "true_error", "efficiency_index", "goal_estimate", "goal_error"})
        t.header.emplace_back(c);
    for (int s = 0; s < ns; ++s) t.header.push_back(fmt::format("eta_a_{}", s));
    for (int s = 0; s < ns; ++s) t.header.push_back(fmt::format("eta_J_{}", s));

    std::vector<std::string> row{csv_number(cfg.omega * cfg.omega)};
    append(row, m.m);
    row.push_back(std::to_string(m.total()));
    for (double v : {rep.I1, rep.I2, rep.S.S, rep.energy_bound, rep.relative_bound(), rep.indicator_sum(),
                     rep.solution_energy_norm})
        row.push_back(csv_number(v));
    row.push_back(csv_number(rep.true_error));
    row.push_back(csv_number(rep.efficiency_index));
    row.push_back(rep.goal ? csv_number(rep.goal->estimate) : std::string());
    row.push_back(csv_number(goal_error));
    for (double v : rep.eta_a) row.push_back(csv_number(v));
    for (int s = 0; s < ns; ++s) row.push_back(rep.goal ? csv_number(rep.goal->eta[s]) : std::string());
    t.rows.push_back(row);
    t.write((out / "report.csv").string());
    if (!opt.export_reduced.empty()) export_reduced(opt.export_reduced, model);
    return 0;
}

int finish_adaptive(const RunConfig& cfg, const Problem& p, const RunOptions& opt, const fs::path& out,
                    const AdaptTrace& trace, const Vector& rhs) {
    trace_table(trace).write((out / "trace.csv").string());
    if (!trace.iterations.empty()) emit_convergence_plot(trace, (out / "convergence.svg").string());
    CsvTable t;
    t.header = {"omega2", "iterations", "dofs"};
    const auto mh = m_header(p.num_subspaces());
    t.header.insert(t.header.end(), mh.begin(), mh.end());
    for (const char* c : {"estimate", "error", "relative_estimate", "relative_error", "termination"})
        t.header.emplace_back(c);
    std::vector<std::string> row{csv_number(cfg.omega * cfg.omega), std::to_string(trace.iterations.size())};
    if (!trace.iterations.empty()) {
        const auto& last = trace.last();
        row.push_back(std::to_string(last.dofs));
        append(row, last.m.m);
        row.push_back(csv_number(last.estimate));
        row.push_back(csv_number(last.error));
        row.push_back(csv_number(last.relative_estimate));
        row.push_back(csv_number(last.relative_error));
    } else {
        row.resize(t.header.size() - 1);
    }
    row.push_back(to_string(trace.termination));
    t.rows.push_back(row);
    t.write((out / "report.csv").string());
    if (!opt.export_reduced.empty() && !trace.iterations.empty())
        export_reduced(opt.export_reduced, project(p.system, *p.basis, trace.last().m, rhs));
    if (trace.termination == Termination::failed) {
        spdlog::error("{}", trace.message);
        return 1;
    }
    return trace.termination == Termination::non_resolvable ? 2 : 0;
}

int run_sweep(const RunConfig& cfg, const Problem& p, const RunOptions& opt, const fs::path& out) {
    std::vector<LoadCase> cases;
    for (double w2 : cfg.sweep_omega2) cases.push_back({std::sqrt(w2), p.system.b});
    const auto traces = adapt_sweep(p, cases, adapt_for(cfg));
    sweep_summary_table(traces).write((out / "report.csv").string());
    sweep_trace_table(traces).write((out / "trace.csv").string());
    if (!opt.export_reduced.empty() && !traces.empty() && !traces.back().iterations.empty())
        export_reduced(opt.export_reduced, project(p.system, *p.basis, traces.back().last().m));
    int code = 0;
    for (const auto& t : traces) {
        if (t.termination == Termination::failed) return 1;
        if (t.termination == Termination::non_resolvable) code = 2;
    }
    return code;
}

}  // namespace

int run(const RunOptions& opt) {
    try {
        RunConfig cfg = load_config(opt.config_path);
        if (opt.mode) cfg.mode = parse_mode(*opt.mode);
        if (opt.reference) cfg.reference = *opt.reference;
        if (opt.full_spectrum_s) cfg.full_spectrum_s = true;
        if (opt.dual_depth) {
            if (*opt.dual_depth < 0) throw InvalidArgument("--dual-depth must be >= 0");
            cfg.adapt.dual_depth = *opt.dual_depth;
        }
        if (opt.seed) cfg.seed = *opt.seed;
        if (cfg.mode == RunMode::adapt_goal && !cfg.goal) throw ConfigError("mode adapt-goal needs a goal");
        if (cfg.mode == RunMode::sweep && cfg.sweep_omega2.empty())
            throw ConfigError("mode sweep needs sweep frequencies");

        const fs::path out(opt.out_dir);
        fs::create_directories(out);
        spdlog::info("mode {}, mesh {}x{}, subdomains {}x{}", to_string(cfg.mode), cfg.problem.nx, cfg.problem.ny,
                     cfg.problem.grid.gx, cfg.problem.grid.gy);
        const Problem p = build_problem(problem_for(cfg), opt.basis_cache);
        spdlog::info("{} free DOFs, {} subspaces", p.system.size(), p.num_subspaces());

        if (!opt.export_mesh.empty()) write_mesh(opt.export_mesh, p.mesh);
        if (!opt.export_system.empty()) {
            fs::create_directories(opt.export_system);
            write_matrix_market((fs::path(opt.export_system) / "K.mtx").string(), p.system.K, true);
            write_matrix_market((fs::path(opt.export_system) / "M.mtx").string(), p.system.M, true);
            write_matrix_market((fs::path(opt.export_system) / "b.mtx").string(), p.system.b);
        }

        switch (cfg.mode) {
            case RunMode::solve: return run_solve(cfg, p, opt, out);
            case RunMode::estimate: return run_estimate(cfg, p, opt, out);
            case RunMode::adapt_goal: {
                const auto trace = adapt_goal(p, p.system.b, p.goal_vector(*cfg.goal), cfg.omega, adapt_for(cfg));
                return finish_adaptive(cfg, p, opt, out, trace, p.system.b);
            }
            case RunMode::adapt_energy: {
                const auto trace = adapt_energy(p, p.system.b, cfg.omega, adapt_for(cfg));
                return finish_adaptive(cfg, p, opt, out, trace, p.system.b);
            }
            case RunMode::sweep: return run_sweep(cfg, p, opt, out);
        }
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}

}  // namespace cms
