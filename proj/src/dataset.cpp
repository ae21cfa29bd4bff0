#include "lcwm/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lcwm {

namespace {

[[noreturn]] void csv_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw std::runtime_error(msg.str());
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t\"");
    const auto e = f.find_last_not_of(" \t\"");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA" || s == "NaN"; }

} // namespace

std::string format_double(double v) {
  if (std::isnan(v))
    return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Index Dataset::n_missing() const {
  Index n = 0;
  for (bool m : missing)
    n += m ? 1 : 0;
  return n;
}

std::vector<Index> Dataset::missing_rows() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < missing.size(); ++i)
    if (missing[i])
      out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> Dataset::observed_rows() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < missing.size(); ++i)
    if (!missing[i])
      out.push_back(static_cast<Index>(i));
  return out;
}

Index Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name)
      return static_cast<Index>(i);
  throw std::invalid_argument("unknown column '" + name + "'");
}

std::vector<Index> Dataset::column_indices(const std::vector<std::string>& names) const {
  std::vector<Index> out;
  for (const auto& n : names)
    out.push_back(column_index(n));
  return out;
}

Matrix Dataset::observed_outputs() const {
  const auto rows_obs = observed_rows();
  Matrix out(static_cast<Index>(rows_obs.size()), roles.p());
  for (std::size_t r = 0; r < rows_obs.size(); ++r)
    for (Index j = 0; j < roles.p(); ++j)
      out(static_cast<Index>(r), j) = values(rows_obs[r], roles.output_idx[static_cast<std::size_t>(j)]);
  return out;
}

Matrix Dataset::outputs() const {
  Matrix out(rows(), roles.p());
  for (Index j = 0; j < roles.p(); ++j)
    out.col(j) = values.col(roles.output_idx[static_cast<std::size_t>(j)]);
  return out;
}

void Dataset::validate() const {
  if (static_cast<Index>(columns.size()) != cols())
    throw std::invalid_argument("Dataset: column names do not match the matrix");
  roles.validate(cols());
  if (static_cast<Index>(missing.size()) != rows())
    throw std::invalid_argument("Dataset: mask length does not match rows");
  if (labels && static_cast<Index>(labels->size()) != rows())
    throw std::invalid_argument("Dataset: label count does not match rows");
  for (Index i = 0; i < rows(); ++i) {
    for (Index c : roles.input_idx)
      if (!std::isfinite(values(i, c)))
        throw std::invalid_argument("Dataset: input cell is not finite at row " + std::to_string(i + 1));
    for (Index c : roles.output_idx) {
      const bool nan = std::isnan(values(i, c));
      if (nan != static_cast<bool>(missing[static_cast<std::size_t>(i)]))
        throw std::invalid_argument("Dataset: output cell disagrees with mask at row " + std::to_string(i + 1));
      if (!nan && !std::isfinite(values(i, c)))
        throw std::invalid_argument("Dataset: infinite output at row " + std::to_string(i + 1));
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const RoleNames& role_names) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    csv_error(path, 1, "missing header row");
  Dataset ds;
  ds.columns = split_line(line);

  std::map<std::string, Index> pos;
  for (std::size_t i = 0; i < ds.columns.size(); ++i)
    if (!pos.emplace(ds.columns[i], static_cast<Index>(i)).second)
      csv_error(path, 1, "duplicate column '" + ds.columns[i] + "'");
  std::vector<int> role(ds.columns.size(), -1);
  for (const auto& n : role_names.inputs) {
    auto it = pos.find(n);
    if (it == pos.end())
      throw std::invalid_argument("unknown column '" + n + "'");
    ds.roles.input_idx.push_back(it->second);
    role[static_cast<std::size_t>(it->second)] = 0;
  }
  for (const auto& n : role_names.outputs) {
    auto it = pos.find(n);
    if (it == pos.end())
      throw std::invalid_argument("unknown column '" + n + "'");
    ds.roles.output_idx.push_back(it->second);
    role[static_cast<std::size_t>(it->second)] = 1;
  }
  for (std::size_t i = 0; i < role.size(); ++i)
    if (role[i] < 0)
      csv_error(path, 1, "column '" + ds.columns[i] + "' has no role");
  ds.roles.validate(static_cast<Index>(ds.columns.size()));

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    auto fields = split_line(line);
    if (fields.size() != ds.columns.size())
      csv_error(path, lineno, "expected " + std::to_string(ds.columns.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    int n_missing_out = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& f = fields[c];
      if (is_missing_token(f)) {
        if (role[c] == 0)
          csv_error(path, lineno, "missing value in input column '" + ds.columns[c] + "'");
        row[c] = std::numeric_limits<double>::quiet_NaN();
        ++n_missing_out;
        continue;
      }
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        csv_error(path, lineno, "non-numeric value '" + f + "' in column '" + ds.columns[c] + "'");
      row[c] = v;
    }
    if (n_missing_out != 0 && n_missing_out != static_cast<int>(ds.roles.p()))
      csv_error(path, lineno, "partial output non-response is not supported");
    ds.missing.push_back(n_missing_out != 0);
    rows.push_back(std::move(row));
  }
  ds.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(ds.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < ds.columns.size(); ++c)
      ds.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  ds.validate();
  return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".meta.json";
  return p;
}

nlohmann::json dataset_metadata(const Dataset& ds) {
  nlohmann::json meta;
  meta["columns"] = ds.columns;
  std::vector<std::string> inputs, outputs;
  for (Index i : ds.roles.input_idx)
    inputs.push_back(ds.columns[static_cast<std::size_t>(i)]);
  for (Index i : ds.roles.output_idx)
    outputs.push_back(ds.columns[static_cast<std::size_t>(i)]);
  meta["inputs"] = inputs;
  meta["outputs"] = outputs;
  meta["rows"] = ds.rows();
  meta["missing_rows"] = ds.n_missing();
  if (ds.labels) {
    meta["labels"] = *ds.labels;
    std::map<int, std::pair<int, int>> table;
    for (std::size_t i = 0; i < ds.labels->size(); ++i) {
      auto& cell = table[(*ds.labels)[i]];
      (ds.missing[i] ? cell.second : cell.first) += 1;
    }
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& [label, cell] : table)
      counts.push_back({{"label", label}, {"observed", cell.first}, {"missing", cell.second}});
    meta["mask_by_label"] = counts;
  }
  return meta;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < ds.columns.size(); ++c)
    out << (c ? "," : "") << ds.columns[c];
  out << '\n';
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index c = 0; c < ds.cols(); ++c)
      out << (c ? "," : "") << format_double(ds.values(i, c));
    out << '\n';
  }
  std::ofstream meta(sidecar_path(path));
  meta << dataset_metadata(ds).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path, const RoleNames& roles) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("cannot open " + path.string());
  RoleNames names = roles;
  std::optional<std::vector<int>> labels;
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    const auto meta = nlohmann::json::parse(in);
    if (names.inputs.empty() && names.outputs.empty()) {
      names.inputs = meta.at("inputs").get<std::vector<std::string>>();
      names.outputs = meta.at("outputs").get<std::vector<std::string>>();
    }
    if (meta.contains("labels"))
      labels = meta.at("labels").get<std::vector<int>>();
  }
  if (names.outputs.empty())
    throw std::invalid_argument("no output columns given and no metadata sidecar for " + path.string());
  Dataset ds = load_csv(path, names);
  if (labels) {
    if (static_cast<Index>(labels->size()) != ds.rows())
      throw std::invalid_argument("sidecar labels do not match row count");
    ds.labels = std::move(labels);
  }
  return ds;
}

} // namespace lcwm
