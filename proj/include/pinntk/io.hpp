#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace pinntk {

/// Render a double with 17 significant digits, enough to reproduce the
/// exact bit pattern on read-back.  Non-finite values come out as "nan",
/// "inf" or "-inf".
std::string format_full(double x);

/// Create the directory (and parents) if needed.  IoError on failure.
void ensure_dir(const std::filesystem::path& dir);

/// Write a CSV file: one header row, then one row per entry, cells joined
/// by commas.  Cells are written verbatim, so numeric cells should come
/// from format_full.  IoError on any filesystem failure.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

/// Minimal self-contained SVG line chart of eigenvalue curves on a log10
/// vertical scale (values clipped at 1e-18), one polyline per labeled
/// curve.  A convenience view; the CSV files are the contract.
std::string spectrum_svg(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& curves);

}  // namespace pinntk
