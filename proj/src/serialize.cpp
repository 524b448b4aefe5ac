#include "mlr/serialize.hpp"

#include <fstream>
#include <sstream>

#include "mlr/error.hpp"

namespace mlr {

Json upper_entries_json(const ParameterMatrix& theta) {
  Json out = Json::array();
  for (int i = 0; i < theta.dim(); ++i)
    for (int j = i; j < theta.dim(); ++j)
      if (theta(i, j) != 0.0) out.push_back(Json::array({i, j, theta(i, j)}));
  return out;
}

Json to_json(const FitResult& fit) {
  Json j;
  j["d"] = fit.theta_hat.dim();
  j["support"] = fit.support;
  j["rank"] = fit.rank;
  j["entries"] = upper_entries_json(fit.theta_hat);
  j["objective"] = fit.objective;
  j["neg_loglik"] = fit.neg_loglik;
  j["penalty"] = fit.penalty_value;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["models_searched"] = fit.model_count_searched;
  if (!fit.objective_history.empty()) j["kkt_residual"] = fit.kkt_residual;
  return j;
}

Json to_json(const IsometryReport& rep) {
  Json j;
  j["s"] = rep.s;
  j["delta"] = rep.delta;
  j["lambda_min"] = rep.lambda_min;
  j["lambda_max"] = rep.lambda_max;
  j["mode"] = rep.mode == IsometryMode::exact ? "exact" : "monte_carlo";
  j["supports_checked"] = rep.supports_checked;
  j["worst_support"] = rep.worst_support;
  j["degenerate"] = rep.degenerate();
  return j;
}

Json to_json(const PackingSet& pack) {
  Json j;
  j["d"] = pack.d;
  j["k"] = pack.k;
  j["c0"] = pack.c0;
  j["scale"] = pack.scale;
  j["size"] = pack.size();
  j["min_pairwise_hamming"] = pack.min_pairwise_hamming;
  j["supports"] = pack.supports;
  return j;
}

Json to_json(const CardinalityAudit& a) {
  Json j;
  j["applicable"] = a.applicable;
  j["rho"] = a.rho;
  j["separation_c"] = a.separation_c;
  j["required_log"] = a.required_log;
  j["actual_log"] = a.actual_log;
  j["satisfied"] = a.satisfied;
  return j;
}

Json to_json(const PowerCell& c) {
  Json j;
  j["n"] = c.spec.n;
  j["k"] = c.spec.k;
  j["q"] = c.spec.q;
  j["method"] = to_string(c.method);
  j["skipped"] = c.skipped;
  if (c.skipped) {
    j["reason"] = c.reason;
    return j;
  }
  j["threshold"] = c.threshold;
  j["trials"] = c.trials;
  j["type1"] = c.type1();
  j["type1_se"] = c.type1_se();
  j["type2"] = c.type2();
  j["type2_se"] = c.type2_se();
  j["total_error"] = c.total_error();
  j["null_stats"] = c.null_stats;
  j["alt_stats"] = c.alt_stats;
  return j;
}

Json to_json(const MarginalTest& t) {
  Json j;
  j["trials"] = t.trials;
  j["in_block"] = {{"chi2", t.in_block_stat}, {"df", t.in_block_df}, {"p", t.in_block_p}};
  j["off_block"] = {{"chi2", t.off_block_stat}, {"df", t.off_block_df}, {"p", t.off_block_p}};
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["d"] = c.d;
  j["k"] = c.k;
  j["r"] = c.r;
  j["n"] = c.vertices();
  j["M"] = c.M;
  j["N_grid"] = c.N_grid;
  j["trials"] = c.trials;
  j["estimators"] = c.estimators;
  j["penalty_c"] = c.penalty_c;
  j["lambda_c4"] = c.lambda_c4;
  j["seed"] = c.seed;
  j["k_max"] = c.k_max > 0 ? c.k_max : c.k;
  j["r_max"] = c.r_max > 0 ? c.r_max : c.r;
  j["signal"] = c.signal;
  j["max_iters"] = c.max_iters;
  j["restarts"] = c.restarts;
  return j;
}

Json to_json(const RateTable& t) {
  Json j;
  j["version"] = MLR_VERSION;
  j["seed"] = t.config.seed;
  j["config"] = to_json(t.config);
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"estimator", r.estimator},
                    {"N", r.N},
                    {"median_frob_sq_error", r.median_frob_sq_error},
                    {"iqr", r.iqr},
                    {"median_kl", r.median_kl},
                    {"median_pred_error", r.median_pred_error},
                    {"mean_frob_sq_error", r.mean_frob_sq_error},
                    {"mean_kl", r.mean_kl},
                    {"mean_pred_error", r.mean_pred_error},
                    {"trials", r.trials},
                    {"failures", r.failures},
                    {"max_kkt", r.max_kkt}});
  j["rows"] = rows;
  Json designs = Json::array();
  for (const auto& d : t.designs)
    designs.push_back({{"N", d.N}, {"trial", d.trial}, {"s", d.s}, {"delta", d.delta}, {"witness", d.witness}});
  j["designs"] = designs;
  Json records = Json::array();
  for (const auto& r : t.records) {
    Json rec = {{"estimator", r.estimator}, {"N", r.N}, {"trial", r.trial}, {"ok", r.ok}};
    if (r.ok) {
      rec["frob_sq"] = r.frob_sq;
      rec["kl"] = r.kl;
      rec["pred"] = r.pred;
      rec["selected_k"] = r.selected_k;
      rec["selected_r"] = r.selected_r;
      if (r.estimator == "lasso") rec["kkt"] = r.kkt;
    } else {
      rec["error"] = r.error;
    }
    records.push_back(rec);
  }
  j["trials"] = records;
  return j;
}

std::string rates_csv(const RateTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << "estimator,N,median_frob_sq_error,iqr,median_kl,median_pred_error,mean_frob_sq_error,mean_kl,mean_pred_error,trials,failures\n";
  for (const auto& r : t.rows)
    out << r.estimator << ',' << r.N << ',' << r.median_frob_sq_error << ',' << r.iqr << ',' << r.median_kl << ','
        << r.median_pred_error << ',' << r.mean_frob_sq_error << ',' << r.mean_kl << ',' << r.mean_pred_error << ','
        << r.trials << ',' << r.failures << '\n';
  return out.str();
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace mlr
