#include "lcwm/params_json.hpp"

#include <fstream>

namespace lcwm {

using nlohmann::json;

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array())
    throw std::invalid_argument("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array())
    throw std::invalid_argument("expected a JSON array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument("ragged matrix in JSON");
    for (Index k = 0; k < cols; ++k)
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json to_json(const FmmParams& fmm) {
  json out;
  out["g"] = fmm.g();
  out["alpha"] = to_json(fmm.alpha);
  out["mu"] = json::array();
  out["sigma"] = json::array();
  for (Index c = 0; c < fmm.g(); ++c) {
    out["mu"].push_back(to_json(fmm.mu[static_cast<std::size_t>(c)]));
    out["sigma"].push_back(to_json(fmm.sigma[static_cast<std::size_t>(c)].matrix()));
  }
  return out;
}

FmmParams fmm_from_json(const json& j) {
  FmmParams fmm;
  fmm.alpha = vector_from_json(j.at("alpha"));
  for (const auto& m : j.at("mu"))
    fmm.mu.push_back(vector_from_json(m));
  for (const auto& s : j.at("sigma"))
    fmm.sigma.emplace_back(matrix_from_json(s));
  if (j.contains("g") && j.at("g").get<Index>() != fmm.g())
    throw std::invalid_argument("FmmParams JSON: g does not match alpha length");
  fmm.validate();
  return fmm;
}

json to_json(const LcwmParams& lcwm) {
  json out;
  out["g"] = lcwm.g();
  out["d"] = lcwm.d;
  out["p"] = lcwm.p;
  out["alpha"] = to_json(lcwm.alpha());
  for (const char* key : {"mu_x", "sigma_x", "coef", "intercept", "sigma_cond"})
    out[key] = json::array();
  for (const auto& c : lcwm.components) {
    out["mu_x"].push_back(to_json(c.mu_x));
    out["sigma_x"].push_back(to_json(c.sigma_x));
    out["coef"].push_back(to_json(c.coef));
    out["intercept"].push_back(to_json(c.intercept));
    out["sigma_cond"].push_back(to_json(c.sigma_cond.matrix()));
  }
  return out;
}

FmmParams read_fmm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open parameter file " + path.string());
  return fmm_from_json(json::parse(in));
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

} // namespace lcwm
