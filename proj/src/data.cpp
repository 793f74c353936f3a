#include "causal_shap/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "causal_shap/errors.hpp"

namespace cshap {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ValidationError("unterminated quote in CSV line: " + line);
  out.push_back(std::move(cur));
  return out;
}

double parse_number(const std::string& field, const std::string& context) {
  std::size_t b = 0, e = field.size();
  while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
  while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t')) --e;
  const char* first = field.data() + b;
  const char* last = field.data() + e;
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (first == last || ec != std::errc() || ptr != last) {
    throw ValidationError(context + ": cannot parse '" + field + "' as a number");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

DataMatrix parse_csv(const std::string& text, const FeatureSpace& features) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV is empty");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> column_of(features.size(), header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (auto f = features.find(header[c])) {
      if (column_of[*f] != header.size()) throw ValidationError("CSV header repeats column '" + header[c] + "'");
      column_of[*f] = c;
    }
  }
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (column_of[f] == header.size()) {
      throw ValidationError("CSV header is missing feature '" + features[f].name + "'");
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> row(features.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto& cell = cells[column_of[f]];
      const std::string ctx = "CSV line " + std::to_string(line_no) + ", column '" + features[f].name + "'";
      if (features.is_categorical(f)) {
        const auto& levels = features[f].levels;
        std::size_t lv = 0;
        while (lv < levels.size() && levels[lv] != cell) ++lv;
        if (lv == levels.size()) throw ValidationError(ctx + ": unknown level '" + cell + "'");
        row[f] = static_cast<double>(lv);
      } else {
        row[f] = parse_number(cell, ctx);
        if (!std::isfinite(row[f])) throw ValidationError(ctx + ": value must be finite");
      }
    }
    rows.push_back(std::move(row));
  }

  DataMatrix data{features, RowMatrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()))};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < features.size(); ++f) data.rows(r, f) = rows[r][f];
  }
  return data;
}

DataMatrix read_csv(const std::filesystem::path& path, const FeatureSpace& features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), features);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_csv(const DataMatrix& data) {
  std::string out;
  for (std::size_t f = 0; f < data.features.size(); ++f) {
    if (f) out += ',';
    out += csv_field(data.features[f].name);
  }
  out += '\n';
  for (Eigen::Index r = 0; r < data.rows.rows(); ++r) {
    for (std::size_t f = 0; f < data.features.size(); ++f) {
      if (f) out += ',';
      const double v = data.rows(r, static_cast<Eigen::Index>(f));
      if (data.features.is_categorical(f)) {
        out += csv_field(data.features[f].levels.at(static_cast<std::size_t>(v)));
      } else {
        out += format_double(v);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace cshap
