#include "ocrt/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ocrt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  table.header = split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw ConfigError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " cells");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

Matrix gather_columns(const CsvTable& t, const std::vector<std::size_t>& cols) {
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.rows[i][cols[c]];
    }
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j, std::size_t dim, const char* what) {
  if (!j.is_array() || j.size() != dim) {
    throw DimensionError(std::string(what) + " must be an array of length " + std::to_string(dim));
  }
  Vector v(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

std::vector<LinearConstraint> rows_from_json(const nlohmann::json& j, std::size_t dim, const char* what) {
  std::vector<LinearConstraint> rows;
  if (j.is_null()) return rows;
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  for (const auto& r : j) rows.push_back({vector_from_json(r.at("a"), dim, what), r.at("b").get<double>()});
  return rows;
}

nlohmann::json rows_to_json(const std::vector<LinearConstraint>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"a", std::vector<double>(r.a.data(), r.a.data() + r.a.size())}, {"b", r.b}});
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  std::vector<std::size_t> xs, ys;
  std::vector<std::string> xn, yn;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (!name.empty() && (name[0] == 'x' || name[0] == 'X')) {
      xs.push_back(c);
      xn.push_back(name);
    } else if (!name.empty() && (name[0] == 'y' || name[0] == 'Y')) {
      ys.push_back(c);
      yn.push_back(name);
    } else {
      throw ConfigError(path.string() + ": column '" + name + "' is neither x* nor y*");
    }
  }
  if (table.rows.empty()) throw DimensionError(path.string() + " has no data rows");
  return Dataset(gather_columns(table, xs), gather_columns(table, ys), xn, yn);
}

Matrix read_features_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  std::vector<std::size_t> xs;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (name.empty() || (name[0] != 'y' && name[0] != 'Y')) xs.push_back(c);
  }
  return gather_columns(table, xs);
}

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& header, const std::filesystem::path& path) {
  if (header.size() != static_cast<std::size_t>(m.cols())) throw DimensionError("CSV header width differs from matrix");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(i, c));
    out << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  Matrix both(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(data.p() + data.k()));
  both << data.features(), data.targets();
  auto header = data.feature_names();
  header.insert(header.end(), data.target_names().begin(), data.target_names().end());
  write_matrix_csv(both, header, path);
}

nlohmann::json to_json(const FeasibleSet& set) {
  nlohmann::json doc;
  doc["dim"] = set.dim();
  doc["eq"] = rows_to_json(set.equalities());
  doc["ineq"] = rows_to_json(set.inequalities());
  doc["nonneg"] = set.nonneg();
  if (set.cardinality()) {
    doc["cardinality"] = {{"s", set.cardinality()->max_support}, {"M", set.cardinality()->big_m}};
  } else {
    doc["cardinality"] = nullptr;
  }
  return doc;
}

FeasibleSet feasible_set_from_json(const nlohmann::json& doc) {
  try {
    const auto dim = doc.at("dim").get<std::size_t>();
    auto eq = rows_from_json(doc.value("eq", nlohmann::json::array()), dim, "eq row");
    auto ineq = rows_from_json(doc.value("ineq", nlohmann::json::array()), dim, "ineq row");
    std::vector<bool> nonneg(dim, false);
    if (doc.contains("nonneg") && !doc["nonneg"].is_null()) {
      const auto& nn = doc["nonneg"];
      if (nn.is_boolean()) {
        nonneg.assign(dim, nn.get<bool>());
      } else {
        if (!nn.is_array() || nn.size() != dim) throw DimensionError("nonneg must have one flag per coordinate");
        for (std::size_t k = 0; k < dim; ++k) nonneg[k] = nn[k].get<bool>();
      }
    }
    std::optional<Cardinality> card;
    if (doc.contains("cardinality") && !doc["cardinality"].is_null()) {
      const auto& c = doc["cardinality"];
      card = Cardinality{c.at("s").get<std::size_t>(), c.at("M").get<double>()};
    }
    return FeasibleSet(dim, std::move(eq), std::move(ineq), std::move(nonneg), card);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed feasible set document: ") + e.what());
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

FeasibleSet read_feasible_set(const std::filesystem::path& path) { return feasible_set_from_json(read_json(path)); }

void write_feasible_set(const FeasibleSet& set, const std::filesystem::path& path) { write_json(to_json(set), path); }

}  // namespace ocrt
