#include "lcwm/simulate.hpp"

#include "lcwm/distributions.hpp"

#include <cmath>
#include <limits>

namespace lcwm {

Dataset simulate_fmm(const FmmParams& params, Index n, RngStream& rng,
                     std::vector<std::string> columns, ColumnRoles roles) {
  params.validate();
  if (n < 0)
    throw std::invalid_argument("simulate_fmm: negative row count");
  if (static_cast<Index>(columns.size()) != params.dim())
    throw std::invalid_argument("simulate_fmm: column names do not match the model dimension");
  roles.validate(params.dim());

  Dataset ds;
  ds.columns = std::move(columns);
  ds.roles = std::move(roles);
  ds.values.resize(n, params.dim());
  ds.missing.assign(static_cast<std::size_t>(n), false);
  std::vector<int> labels(static_cast<std::size_t>(n));
  const std::span<const double> alpha(params.alpha.data(), static_cast<std::size_t>(params.g()));
  for (Index i = 0; i < n; ++i) {
    const auto g = sample_categorical(rng, alpha);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(g);
    ds.values.row(i) = mvn_sample(rng, params.mu[g], params.sigma[g]).transpose();
  }
  ds.labels = std::move(labels);
  return ds;
}

FmmParams sim_preset_params() {
  FmmParams p;
  p.alpha = Vector(2);
  p.alpha << 0.6, 0.4;
  Vector mu1(4), mu2(4);
  mu1 << 1, 3, 4, 2;
  mu2 << 1, 9, 7, 6;
  p.mu = {mu1, mu2};
  Matrix s1 = Matrix::Constant(4, 4, 0.5);
  s1.diagonal().setOnes();
  Matrix s2(4, 4);
  s2 << 1, -.5, -.5, .5,
        -.5, 1, .5, -.5,
        -.5, .5, 1, -.5,
        .5, -.5, -.5, 1;
  p.sigma = {SpdMatrix(s1, "sigma_1"), SpdMatrix(s2, "sigma_2")};
  return p;
}

std::vector<std::string> sim_preset_columns() { return {"x1", "x2", "y1", "y2"}; }

ColumnRoles sim_preset_roles() { return ColumnRoles::leading(2, 2); }

double inv_logit(double t) {
  if (t >= 0)
    return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

Amputation apply_mask(const Dataset& ds, const std::vector<bool>& mask) {
  Amputation out{ds, {}};
  for (Index i = 0; i < ds.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)])
      continue;
    out.data.missing[static_cast<std::size_t>(i)] = true;
    for (Index c : ds.roles.output_idx)
      out.data.values(i, c) = std::numeric_limits<double>::quiet_NaN();
  }
  if (out.data.observed_rows().empty())
    out.warnings.emplace_back("every row lost its output block");
  return out;
}

} // namespace

Amputation amputate_mar(const Dataset& ds, const std::vector<double>& rates, RngStream& rng) {
  if (!ds.labels)
    throw std::invalid_argument("amputate_mar: dataset has no labels");
  for (double r : rates)
    if (!(r >= 0.0 && r <= 1.0))
      throw std::invalid_argument("amputate_mar: rates must lie in [0, 1]");
  std::vector<bool> mask(static_cast<std::size_t>(ds.rows()), false);
  std::vector<int> total(rates.size(), 0), hit(rates.size(), 0);
  for (Index i = 0; i < ds.rows(); ++i) {
    const int label = (*ds.labels)[static_cast<std::size_t>(i)];
    if (label < 0 || static_cast<std::size_t>(label) >= rates.size())
      throw std::invalid_argument("amputate_mar: no rate for label " + std::to_string(label));
    const double u = rng.uniform();
    const bool m = !ds.missing[static_cast<std::size_t>(i)] && u < rates[static_cast<std::size_t>(label)];
    mask[static_cast<std::size_t>(i)] = m || ds.missing[static_cast<std::size_t>(i)];
    total[static_cast<std::size_t>(label)] += 1;
    hit[static_cast<std::size_t>(label)] += mask[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  auto out = apply_mask(ds, mask);
  for (std::size_t k = 0; k < rates.size(); ++k)
    if (total[k] > 0 && hit[k] == total[k])
      out.warnings.push_back("every row of cluster " + std::to_string(k) + " is missing");
  return out;
}

Amputation amputate_mnar(const Dataset& ds, double beta0, double beta1,
                         const std::string& driver, RngStream& rng) {
  const Index col = ds.column_index(driver);
  bool is_output = false;
  for (Index c : ds.roles.output_idx)
    is_output = is_output || c == col;
  if (!is_output)
    throw std::invalid_argument("amputate_mnar: driver '" + driver + "' is not an output column");
  std::vector<bool> mask(static_cast<std::size_t>(ds.rows()), false);
  for (Index i = 0; i < ds.rows(); ++i) {
    const double u = rng.uniform();
    if (ds.missing[static_cast<std::size_t>(i)]) {
      mask[static_cast<std::size_t>(i)] = true;
      continue;
    }
    mask[static_cast<std::size_t>(i)] = u < inv_logit(beta0 + beta1 * ds.values(i, col));
  }
  return apply_mask(ds, mask);
}

Amputation amputate(const Dataset& ds, const AmputationSpec& spec, RngStream& rng) {
  if (const auto* mar = std::get_if<MarSpec>(&spec))
    return amputate_mar(ds, mar->rates, rng);
  const auto& mnar = std::get<MnarSpec>(spec);
  return amputate_mnar(ds, mnar.beta0, mnar.beta1, mnar.driver, rng);
}

} // namespace lcwm
