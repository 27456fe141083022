#include "dpca/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>

#include "dpca/error.hpp"

namespace dpca {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view cell) {
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

std::optional<double> try_parse(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell =
        trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string format_real(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

double parse_real(std::string_view text) {
  const auto v = try_parse(trim(text));
  if (!v) throw IoError("not a number: '" + std::string(text) + "'");
  return *v;
}

Dataset parse_csv(std::istream& in, MissingPolicy policy) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
    line_of.push_back(lineno);
  }
  if (in.bad()) throw IoError("read error");
  if (rows.empty()) throw DataError("no data rows");

  Dataset out;
  std::size_t first = 0;
  const bool header = std::any_of(rows[0].begin(), rows[0].end(), [](const std::string& c) {
    return !is_missing(c) && !try_parse(c);
  });
  if (header) {
    out.column_names = rows[0];
    first = 1;
  }
  const std::size_t p = rows[0].size();

  std::vector<double> values;
  std::size_t n = 0;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != p) {
      throw IoError("line " + std::to_string(line_of[r]) + ": expected " +
                    std::to_string(p) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> parsed;
    parsed.reserve(p);
    bool bad = false;
    for (std::size_t j = 0; j < p && !bad; ++j) {
      const auto v = is_missing(cells[j]) ? std::nullopt : try_parse(cells[j]);
      if (!v || !std::isfinite(*v)) {
        if (policy == MissingPolicy::error_on_missing) {
          throw DataError("line " + std::to_string(line_of[r]) + ", column " +
                          std::to_string(j + 1) + ": missing or non-numeric value '" +
                          cells[j] + "'");
        }
        bad = true;
      } else {
        parsed.push_back(*v);
      }
    }
    if (bad) continue;
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++n;
  }
  if (n == 0) throw DataError("no complete data rows");

  Eigen::MatrixXd m(static_cast<Index>(n), static_cast<Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * p + j];
    }
  }
  out.values = DenseMatrix(std::move(m));
  return out;
}

Dataset ingest_csv(const std::filesystem::path& path, MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_csv(in, policy);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& values,
                      std::span<const std::string> header) {
  if (!header.empty()) {
    if (static_cast<Index>(header.size()) != values.cols()) {
      throw DimensionError("write_matrix_csv: header width differs from column count");
    }
    for (std::size_t j = 0; j < header.size(); ++j) {
      out << (j ? "," : "") << header[j];
    }
    out << '\n';
  }
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_real(values(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      std::span<const std::string> header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_matrix_csv(out, values, header);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dpca
