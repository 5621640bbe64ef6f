#include "nimai/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace nimai {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string cell_pos(std::size_t row, std::size_t col) {
  std::ostringstream os;
  os << "row " << row << ", column " << col;
  return os.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty csv file: " + path.string());

  const std::size_t n_feat = schema.n_features();
  auto header = split_line(line);
  if (header.size() != n_feat + 1) {
    throw DataError("header has " + std::to_string(header.size()) +
                    " columns, schema expects " + std::to_string(n_feat + 1));
  }
  for (std::size_t i = 0; i < n_feat; ++i) {
    if (header[i] != schema.feature_names[i])
      throw DataError("missing column '" + schema.feature_names[i] +
                      "': header has '" + header[i] + "' at " +
                      cell_pos(1, i + 1));
  }
  if (header[n_feat] != schema.label_name)
    throw DataError("missing label column '" + schema.label_name +
                    "': header has '" + header[n_feat] + "'");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != n_feat + 1)
      throw DataError("wrong cell count at row " + std::to_string(row));
    for (std::size_t i = 0; i < n_feat; ++i) {
      double v = 0.0;
      const auto& cell = cells[i];
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw DataError("unparseable cell '" + cell + "' at " +
                        cell_pos(row, i + 1));
      values.push_back(v);
    }
    int cls = schema.class_id(cells[n_feat]);
    if (cls < 0)
      throw DataError("unknown class label '" + cells[n_feat] + "' at " +
                      cell_pos(row, n_feat + 1));
    labels.push_back(cls);
  }
  if (labels.empty()) throw DataError("csv has no data rows: " + path.string());

  Dataset out;
  out.schema = schema;
  out.labels = std::move(labels);
  out.features = Mat(out.labels.size(), n_feat);
  out.features.a = std::move(values);
  out.validate();
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv file: " + path.string());
  for (std::size_t i = 0; i < data.schema.n_features(); ++i)
    out << data.schema.feature_names[i] << ',';
  out << data.schema.label_name << '\n';
  for (std::size_t r = 0; r < data.n_samples(); ++r) {
    for (std::size_t c = 0; c < data.features.cols; ++c)
      out << format_double(data.features(r, c)) << ',';
    out << data.schema.class_names[std::size_t(data.labels[r])] << '\n';
  }
}

}  // namespace nimai
