#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pgcov/datamodel.hpp"
#include "pgcov/errors.hpp"

namespace pgcov {
namespace {

// Splits one logical CSV record; quoted fields may contain commas, doubled
// quotes and newlines. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (int ch = in.get(); ch != EOF; ch = in.get()) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (in_quotes) throw InputError("csv: unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t line,
                    const std::string& column) {
  const std::string s = trim(raw);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw InputError("csv line " + std::to_string(line) + ": column '" +
                     column + "' has non-numeric value '" + raw + "'");
  }
  return value;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in, std::string_view response) {
  std::vector<std::string> header;
  if (!read_record(in, header)) throw InputError("csv: missing header row");
  for (auto& h : header) h = trim(h);
  Index response_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response) response_col = static_cast<Index>(j);
  }
  if (response_col < 0) {
    throw InputError("csv: response column '" + std::string(response) +
                     "' not found in header");
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> fields;
  std::size_t line = 1;
  while (read_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != header.size()) {
      throw InputError("csv line " + std::to_string(line) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_number(fields[j], line, header[j]);
    }
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(header.size()) - 1;
  VectorXd y(n);
  MatrixXd x(n, p);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<Index>(j) != response_col) names.push_back(header[j]);
  }
  for (Index i = 0; i < n; ++i) {
    Index c = 0;
    for (Index j = 0; j <= p; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (j == response_col) {
        y(i) = v;
      } else {
        x(i, c++) = v;
      }
    }
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

Dataset read_csv_file(const std::string& path, std::string_view response) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv(in, response);
}

void write_csv(std::ostream& out, const Dataset& data,
               std::string_view response_name) {
  out << quote_if_needed(std::string(response_name));
  for (const auto& name : data.names()) out << ',' << quote_if_needed(name);
  out << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (Index i = 0; i < data.n(); ++i) {
    cell.str("");
    cell << data.y()(i);
    for (Index j = 0; j < data.p(); ++j) cell << ',' << data.x()(i, j);
    out << cell.str() << '\n';
  }
}

}  // namespace pgcov
