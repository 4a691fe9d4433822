#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cms/adaptivity.hpp"
#include "cms/estimation.hpp"

namespace cms {

/// A CSV document. Numbers are written with 17 significant digits and missing
/// values as empty fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string str() const;
    void write(const std::string& path) const;
};

std::string csv_number(double v);
std::string csv_number(const std::optional<double>& v);

/// Columns: iteration, dofs, m_0..m_n, estimate, error, relative_estimate,
/// relative_error, stability_factor.
CsvTable trace_table(const AdaptTrace& trace);

/// One row per load case: omega2, m_0..m_n, dofs, iterations,
/// efficiency_index, relative_true_error, relative_estimate, stability_factor,
/// termination.
CsvTable sweep_summary_table(const std::vector<AdaptTrace>& traces);

/// Every inner iteration of a sweep: case, omega2, then the trace columns.
CsvTable sweep_trace_table(const std::vector<AdaptTrace>& traces);

/// Semilog plot of error and estimate against DOFs. Deterministic output.
std::string convergence_svg(const AdaptTrace& trace);
void emit_convergence_plot(const AdaptTrace& trace, const std::string& path);

}  // namespace cms
