#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ascii/dataset.hpp"

namespace ascii {
namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  if (options.label_column.empty())
    throw std::invalid_argument("load_csv: label_column is required");
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw ParseError("load_csv: " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_line(line, options.delimiter);
  for (auto& h : header) h = trim(h);
  auto find_col = [&](const std::string& name) -> std::optional<size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<size_t>(it - header.begin());
  };
  auto label_col = find_col(options.label_column);
  if (!label_col)
    throw ParseError("load_csv: label column '" + options.label_column +
                     "' not found in header");
  std::optional<size_t> id_col;
  if (options.id_column) {
    id_col = find_col(*options.id_column);
    if (!id_col)
      throw ParseError("load_csv: id column '" + *options.id_column +
                       "' not found in header");
  }

  std::vector<size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (size_t c = 0; c < header.size(); ++c) {
    if (c == *label_col || (id_col && c == *id_col)) continue;
    feature_cols.push_back(c);
    feature_names.push_back(header[c]);
  }
  if (feature_cols.empty())
    throw ParseError("load_csv: no feature columns in " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::vector<std::string> ids;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line, options.delimiter);
    if (cells.size() != header.size())
      throw ParseError("load_csv: row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    std::string label = trim(cells[*label_col]);
    if (label.empty())
      throw ParseError("load_csv: missing label at row " + std::to_string(line_no));
    raw_labels.push_back(label);
    ids.push_back(id_col ? trim(cells[*id_col]) : std::string());
    std::vector<double> fr(feature_cols.size());
    for (size_t j = 0; j < feature_cols.size(); ++j) {
      if (!parse_double(cells[feature_cols[j]], fr[j]))
        throw ParseError("load_csv: non-numeric value '" + trim(cells[feature_cols[j]]) +
                         "' in column '" + feature_names[j] + "' at row " +
                         std::to_string(line_no));
    }
    rows.push_back(std::move(fr));
  }
  if (rows.empty()) throw ParseError("load_csv: no data rows in " + path.string());

  // Label mapping: numeric order when every label parses as a number,
  // lexicographic otherwise.
  std::vector<std::string> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  bool all_numeric = true;
  std::vector<std::pair<double, std::string>> numeric;
  for (const auto& s : distinct) {
    double v;
    if (!parse_double(s, v)) {
      all_numeric = false;
      break;
    }
    numeric.emplace_back(v, s);
  }
  std::map<std::string, int> label_to_class;
  if (all_numeric) {
    std::sort(numeric.begin(), numeric.end());
    for (size_t k = 0; k < numeric.size(); ++k)
      label_to_class[numeric[k].second] = static_cast<int>(k) + 1;
  } else {
    for (size_t k = 0; k < distinct.size(); ++k)
      label_to_class[distinct[k]] = static_cast<int>(k) + 1;
  }
  if (label_to_class.size() < 2)
    throw ParseError("load_csv: need at least two distinct labels in " + path.string());

  Dataset out;
  out.label_name = options.label_column;
  out.features.rows = rows.size();
  out.features.cols = feature_cols.size();
  out.features.column_names = feature_names;
  out.features.values.reserve(rows.size() * feature_cols.size());
  for (const auto& fr : rows)
    out.features.values.insert(out.features.values.end(), fr.begin(), fr.end());
  out.labels.num_classes = static_cast<int>(label_to_class.size());
  out.labels.labels.reserve(rows.size());
  for (const auto& s : raw_labels) out.labels.labels.push_back(label_to_class[s]);
  out.sample_ids.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    out.sample_ids[i] = id_col ? ids[i] : zero_padded_id(i, rows.size());

  // Duplicate-ID detection with a row-numbered message.
  {
    std::map<std::string, size_t> seen;
    for (size_t i = 0; i < out.sample_ids.size(); ++i) {
      auto [it, inserted] = seen.emplace(out.sample_ids[i], i);
      if (!inserted)
        throw ParseError("load_csv: duplicate id '" + out.sample_ids[i] +
                         "' at row " + std::to_string(i + 2));
    }
  }
  out.validate();
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              char delimiter) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("save_csv: cannot open " + path.string());
  out << "id" << delimiter;
  for (size_t j = 0; j < data.cols(); ++j) {
    std::string name = data.features.column_names.empty()
                           ? "x" + std::to_string(j + 1)
                           : data.features.column_names[j];
    out << name << delimiter;
  }
  out << (data.label_name.empty() ? "label" : data.label_name) << "\n";
  for (size_t i = 0; i < data.rows(); ++i) {
    out << data.sample_ids[i] << delimiter;
    for (size_t j = 0; j < data.cols(); ++j)
      out << fmt_g17(data.features.at(i, j)) << delimiter;
    out << data.labels.labels[i] << "\n";
  }
  if (!out) throw ParseError("save_csv: write failed for " + path.string());
}

}  // namespace ascii
