#include "scalelaw/report.hpp"

#include <cmath>
#include <sstream>

#include "scalelaw/io.hpp"

namespace scalelaw {

namespace {

Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json named(const NamedValues& values) {
  Json j = Json::object();
  for (const auto& [k, v] : values) j[k] = num(v);
  return j;
}

std::string role_name(PointRole r) {
  switch (r) {
    case PointRole::kFitted: return "fitted";
    case PointRole::kPredicted: return "predicted";
    case PointRole::kExcluded: return "excluded";
  }
  return "unknown";
}

std::string csv_num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace

Json to_json(const ParamSet& params) {
  Json j;
  if (const auto* d = std::get_if<DenseParams>(&params)) {
    j["form"] = "dense";
    j["alpha"] = num(d->alpha);
    j["beta"] = num(d->beta);
    j["b"] = num(d->b);
    j["c_inf"] = num(d->c_inf);
    j["eta"] = num(d->eta);
    j["eps0"] = num(d->eps0);
    j["eps0_mode"] = d->eps0_mode == Eps0Mode::kFixedFromClasses ? "fixed" : "free";
    const auto ir = irreducible_error(*d);
    j["irreducible_error"] = {{"exact", num(ir.exact)}, {"first_order", num(ir.first_order)}};
  } else if (const auto* s = std::get_if<PruneParams>(&params)) {
    j["form"] = "prune_single";
    j["eps_up"] = num(s->eps_up);
    j["gamma"] = num(s->gamma);
    j["p"] = num(s->p);
  } else {
    const auto& p = std::get<PruneJointParams>(params);
    j["form"] = "prune_joint";
    j["eps_up"] = num(p.eps_up);
    j["gamma"] = num(p.gamma);
    j["p_prime"] = num(p.p_prime);
    j["phi"] = num(p.phi);
    j["psi"] = num(p.psi);
  }
  return j;
}

Json to_json(const FitReport& r) {
  Json j;
  j["params"] = to_json(r.params);
  j["mu"] = num(r.mu);
  j["sigma"] = num(r.sigma);
  j["objective"] = num(r.objective);
  j["converged"] = r.converged;
  j["best_restart"] = r.best_restart;
  Json restarts = Json::array();
  for (double f : r.restarts_summary) restarts.push_back(num(f));
  j["restart_objectives"] = restarts;
  Json pts = Json::array();
  for (const auto& p : r.per_point)
    pts.push_back({{"index", p.index},
                   {"actual", num(p.actual)},
                   {"estimated", num(p.estimated)},
                   {"delta", num(p.delta)}});
  j["per_point"] = pts;
  if (r.folds) {
    Json folds = Json::array();
    for (const auto& f : *r.folds)
      folds.push_back({{"held_out", f.held_out}, {"mu", num(f.mu)}, {"sigma", num(f.sigma)}});
    j["folds"] = folds;
    j["fold_mu_std"] = num(r.fold_mu_std);
    j["fold_sigma_std"] = num(r.fold_sigma_std);
  }
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const ExtrapolationReport& r) {
  Json j;
  if (r.subset.empty()) {
    j["corner_m"] = num(r.corner_m);
    j["corner_n"] = num(r.corner_n);
  } else {
    j["subset"] = r.subset;
  }
  j["fitted_points"] = r.fitted_points;
  j["predicted_points"] = r.predicted_points;
  j["excluded_points"] = r.excluded_points;
  j["mu"] = num(r.mu);
  j["sigma"] = num(r.sigma);
  j["band_restarts"] = r.band_restarts;
  Json roles = Json::array();
  for (PointRole role : r.roles) roles.push_back(role_name(role));
  j["roles"] = roles;
  Json pts = Json::array();
  for (const auto& p : r.per_point)
    pts.push_back({{"index", p.index},
                   {"actual", num(p.actual)},
                   {"predicted", num(p.predicted)},
                   {"delta", num(p.delta)},
                   {"mean_prediction", num(p.mean_prediction)},
                   {"band", num(p.band)},
                   {"band_all", num(p.band_all)}});
  j["per_point"] = pts;
  if (r.fit) j["fit"] = to_json(*r.fit);
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const SweepEntry& e) {
  Json j;
  j["i"] = e.i;
  j["j"] = e.j;
  j["corner_m"] = num(e.corner_m);
  j["corner_n"] = num(e.corner_n);
  j["skipped"] = e.skipped;
  if (e.skipped) j["reason"] = e.reason;
  if (e.report) {
    j["fitted_points"] = e.report->fitted_points;
    j["predicted_points"] = e.report->predicted_points;
    j["mu"] = num(e.report->mu);
    j["sigma"] = num(e.report->sigma);
  }
  return j;
}

Json to_json(const DesignAnswer& a) {
  Json j;
  j["kind"] = std::string(design_kind_name(a.kind));
  j["feasible"] = a.feasible;
  j["inputs"] = named(a.inputs);
  j["values"] = named(a.values);
  j["achieved_error"] = num(a.achieved_error);
  j["residuals"] = named(a.residuals);
  j["formula"] = a.formula;
  j["note"] = a.note;
  return j;
}

Json to_json(const ContourResult& c) {
  Json j;
  j["kind"] = "contour";
  j["target"] = num(c.target);
  Json pts = Json::array();
  for (const auto& p : c.points)
    pts.push_back({{"m", num(p.m)},
                   {"n", num(p.n)},
                   {"error", num(p.error)},
                   {"relative_residual", num(std::abs(p.error / c.target - 1.0))},
                   {"iterations", p.iterations},
                   {"power_region_valid", p.power_region_valid}});
  j["points"] = pts;
  Json limited = Json::array();
  for (double m : c.model_limited) limited.push_back(num(m));
  j["model_limited"] = limited;
  j["note"] = c.note;
  return j;
}

Json to_json(const StabilityPoint& p) {
  Json j;
  j["sample_size"] = p.sample_size;
  j["repeats"] = p.repeats;
  j["failed"] = p.failed;
  j["mu_mean"] = num(p.mu_mean);
  j["mu_std"] = num(p.mu_std);
  j["sigma_mean"] = num(p.sigma_mean);
  j["sigma_std"] = num(p.sigma_std);
  Json mus = Json::array(), sigmas = Json::array();
  for (double v : p.mus) mus.push_back(num(v));
  for (double v : p.sigmas) sigmas.push_back(num(v));
  j["mus"] = mus;
  j["sigmas"] = sigmas;
  return j;
}

Json to_json(const Preset& p) {
  static const char* kNames[] = {"alpha", "beta", "b", "c_inf", "eta", "eps0"};
  Json j;
  j["name"] = p.name;
  j["units"] = p.units;
  j["eps0_mode"] = p.classes ? "fixed" : "free";
  if (p.classes) j["classes"] = *p.classes;
  Json pub = Json::object();
  for (std::size_t k = 0; k < 6; ++k)
    if (!p.published[k].empty()) pub[kNames[k]] = p.published[k];
  j["published"] = pub;
  j["params"] = to_json(ParamSet(p.params));
  return j;
}

Json make_report(const std::string& command, Json inputs, Json result) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["inputs"] = std::move(inputs);
  j["result"] = std::move(result);
  return j;
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

std::string dense_landscape_csv(const std::vector<DenseMeasurement>& data,
                                const FitReport& report) {
  std::string out = "log10_m,log10_n,actual,estimated\n";
  for (const auto& p : report.per_point) {
    const auto& d = data[p.index];
    out += csv_num(std::log10(d.m)) + "," + csv_num(std::log10(d.n)) + "," + csv_num(p.actual) +
           "," + csv_num(p.estimated) + "\n";
  }
  return out;
}

std::string prune_landscape_csv(const std::vector<PruneMeasurement>& data,
                                const FitReport& report) {
  std::string out = "log10_density,depth,width_scale,n,actual,estimated\n";
  for (const auto& p : report.per_point) {
    const auto& d = data[p.index];
    out += csv_num(std::log10(d.density)) + "," + csv_num(d.depth) + "," + csv_num(d.width) +
           "," + csv_num(d.n) + "," + csv_num(p.actual) + "," + csv_num(p.estimated) + "\n";
  }
  return out;
}

std::string contour_csv(const ContourResult& contour) {
  std::string out = "m,n,error,iterations,power_region_valid\n";
  for (const auto& p : contour.points)
    out += csv_num(p.m) + "," + csv_num(p.n) + "," + csv_num(p.error) + "," +
           std::to_string(p.iterations) + "," + (p.power_region_valid ? "1" : "0") + "\n";
  return out;
}

std::string extrapolation_grid_csv(const std::vector<SweepEntry>& sweep) {
  std::string out = "i,j,corner_m,corner_n,skipped,fitted_points,predicted_points,mu,sigma\n";
  for (const auto& e : sweep) {
    out += std::to_string(e.i) + "," + std::to_string(e.j) + "," + csv_num(e.corner_m) + "," +
           csv_num(e.corner_n) + "," + (e.skipped ? "1" : "0") + ",";
    if (e.report) {
      out += std::to_string(e.report->fitted_points) + "," +
             std::to_string(e.report->predicted_points) + "," + csv_num(e.report->mu) + "," +
             csv_num(e.report->sigma);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

std::string per_point_csv(const FitReport& report) {
  std::string out = "index,actual,estimated,delta\n";
  for (const auto& p : report.per_point)
    out += std::to_string(p.index) + "," + csv_num(p.actual) + "," + csv_num(p.estimated) + "," +
           csv_num(p.delta) + "\n";
  return out;
}

std::string presets_csv() {
  std::string out = "name,alpha,beta,b,c_inf,eta,eps0,eps0_mode,classes,units\n";
  for (const auto& p : preset_catalog()) {
    out += p.name;
    for (std::size_t k = 0; k < 5; ++k) out += "," + p.published[k];
    out += "," + (p.classes ? format_double(p.params.eps0) : p.published[5]);
    out += std::string(",") + (p.classes ? "fixed" : "free") + ",";
    out += (p.classes ? std::to_string(*p.classes) : std::string()) + "," + p.units + "\n";
  }
  return out;
}

}  // namespace scalelaw
