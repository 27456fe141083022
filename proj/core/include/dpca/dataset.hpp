#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpca/matrix.hpp"

namespace dpca {

struct Dataset {
  DenseMatrix values;                     ///< n x p
  std::vector<std::string> column_names;  ///< empty when the file had no header

  Index n() const noexcept { return values.rows(); }
  Index p() const noexcept { return values.cols(); }
};

/// What to do with a row holding a missing or non-numeric cell.
enum class MissingPolicy { error_on_missing, drop_rows };

/// Comma-separated values, one observation per line. The first row is taken
/// as a header when any of its cells is neither numeric nor a missing marker
/// ("", NA, NaN, null; case-insensitive). Blank lines are ignored.
Dataset parse_csv(std::istream& in, MissingPolicy policy = MissingPolicy::error_on_missing);
Dataset ingest_csv(const std::filesystem::path& path,
                   MissingPolicy policy = MissingPolicy::error_on_missing);

/// Splits one line on commas, trimming blanks and surrounding double quotes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest text that parses back to the same double.
std::string format_real(double value);
/// Whole-token parse of a double; throws IoError otherwise.
double parse_real(std::string_view text);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& values,
                      std::span<const std::string> header = {});
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      std::span<const std::string> header = {});

}  // namespace dpca
