#include "lcwm/gibbs_io.hpp"

#include "lcwm/dataset.hpp"
#include "lcwm/params_json.hpp"

#include <fstream>

namespace lcwm {

nlohmann::json to_json(const Hyperparams& hp) {
  return {{"g_max", hp.g_max}, {"mu0", to_json(hp.mu0)}, {"h", hp.h},
          {"f", hp.f},         {"a_delta", hp.a_delta},   {"b_delta", hp.b_delta},
          {"a_eta", hp.a_eta}, {"b_eta", hp.b_eta}};
}

nlohmann::json to_json(const SamplerConfig& cfg) {
  return {{"burn_in", cfg.burn_in},
          {"target_ess", cfg.target_ess},
          {"max_sweeps", cfg.max_sweeps},
          {"thin", cfg.thin},
          {"seed", cfg.seed},
          {"store_imputations", cfg.store_imputations},
          {"relabel", cfg.relabel},
          {"ess_check_every", cfg.ess_check_every}};
}

nlohmann::json posterior_summary(const PosteriorDraws& draws, const MixtureData& data,
                                 const Hyperparams& hp, const SamplerConfig& cfg) {
  nlohmann::json j;
  j["hyperparameters"] = to_json(hp);
  j["sampler"] = to_json(cfg);
  j["d"] = data.d;
  j["p"] = data.p;
  j["rows"] = data.n();
  j["missing_rows"] = data.n_missing();
  j["sweeps_run"] = draws.sweeps_run;
  j["stored_draws"] = draws.loglik.size();
  j["ess"] = draws.ess;
  j["below_target"] = draws.below_target;
  j["g_saturated"] = draws.g_saturated;
  j["nonempty_histogram"] = draws.nonempty_histogram;
  j["completed_sweeps"] = draws.completed_sweeps;
  if (!draws.params.empty()) {
    const FmmParams mean = posterior_mean(draws);
    j["posterior_mean"] = to_json(mean);
    if (data.d > 0)
      j["posterior_mean_lcwm"] = to_json(fmm_to_lcwm(mean, ColumnRoles::leading(data.d, data.p)));
  }
  if (!draws.eta.empty()) {
    double s = 0.0;
    for (double e : draws.eta)
      s += e;
    j["eta_mean"] = s / static_cast<double>(draws.eta.size());
  }
  return j;
}

void write_trace_csv(const PosteriorDraws& draws, const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  const Index g = draws.alpha.empty() ? 0 : draws.alpha.front().size();
  out << "sweep,loglik,nonempty_count";
  for (Index k = 0; k < g; ++k)
    out << ",alpha_" << (k + 1);
  out << '\n';
  for (std::size_t s = 0; s < draws.loglik.size(); ++s) {
    out << draws.sweep[s] << ',' << format_double(draws.loglik[s]) << ',' << draws.nonempty[s];
    for (Index k = 0; k < g; ++k)
      out << ',' << format_double(draws.alpha[s](k));
    out << '\n';
  }
}

} // namespace lcwm
