#include "scalelaw/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "scalelaw/design.hpp"
#include "scalelaw/errors.hpp"
#include "scalelaw/extrapolation.hpp"
#include "scalelaw/fit.hpp"
#include "scalelaw/io.hpp"
#include "scalelaw/presets.hpp"
#include "scalelaw/report.hpp"
#include "scalelaw/synthetic.hpp"

namespace scalelaw::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kNoiseConvention =
    "multiplicative lognormal noise exp(sigma z); a testing assumption, not a measured model";

struct Options {
  std::uint64_t seed = 0;
  int restarts = 100;
  int folds = 10;
  std::string out_dir;
  std::string format = "json";
  std::string preset;
  std::string params;
  std::string eps0;
  bool fix_phi = false;
  bool fix_psi = false;
  bool average = false;
  std::string file;

  // extrapolate
  double corner_m = 0.0;
  double corner_n = 0.0;
  bool sweep = false;
  double max_params = 0.0;

  // design
  double n_lim = 0.0, m_lim = 0.0, threshold = 10.0, c = 0.0;
  double target = 0.0, m_lo = 1.0, m_hi = 1e6;
  int count = 25;
  bool power_region = false;
  std::string prune_params;
  std::string eps_np_table;
  double size_divisor = 20.0;
  double n = 1.0;
  std::string depths = "8:98:12";
  std::string widths = "0.0625:4:12";
  std::vector<double> eps_k;
  bool no_refine = false;

  // simulate / stability
  std::string kind = "dense";
  double noise_sigma = 0.0;
  double dip_depth = 0.0;
  int replicates = 1;
  int ladder = 24;
  int m_count = 7, n_count = 7;
  std::vector<int> sizes{5, 10, 15, 25, 40};
  int repeats = 30;
  std::string mode = "configurations";
};

struct Output {
  Json report;
  std::vector<std::pair<std::string, std::string>> tables;  // file name, content
  std::string csv;  // stdout rendering for --format csv
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError(std::string("cannot parse ") + what + " entry `" + item + "`");
    }
  }
  return out;
}

std::vector<double> parse_range(const std::string& text, const char* what) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ':', ',');
  const auto v = parse_list(t, what);
  if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2]))
    throw ParseError(std::string(what) + " must be lo:hi:count");
  return geometric_grid(v[0], v[1], static_cast<int>(v[2]));
}

DenseParams dense_params(const Options& o) {
  if (!o.params.empty()) {
    const auto v = parse_list(o.params, "--params");
    if (v.size() != 6) throw ParseError("--params needs alpha,beta,b,c_inf,eta,eps0");
    return DenseParams(v[0], v[1], v[2], v[3], v[4], v[5]);
  }
  if (o.preset.empty()) throw ParseError("a dense law is required: pass --preset or --params");
  return find_preset(o.preset).params;
}

Json dense_source(const Options& o) {
  if (!o.params.empty()) return Json{{"params", o.params}};
  return Json{{"preset", o.preset}};
}

FitConfig fit_config(const Options& o) {
  FitConfig cfg;
  cfg.seed = o.seed;
  cfg.restarts = o.restarts;
  cfg.fix_phi = o.fix_phi;
  cfg.fix_psi = o.fix_psi;
  if (o.eps0 == "free") {
    cfg.eps0_mode = Eps0Mode::kFreeParameter;
  } else if (o.eps0.rfind("fixed:", 0) == 0) {
    const std::string n = o.eps0.substr(6);
    int classes = 0;
    try {
      std::size_t used = 0;
      classes = std::stoi(n, &used);
      if (used != n.size()) throw std::invalid_argument(n);
    } catch (const std::exception&) {
      throw ParseError("--eps0 fixed:<classes> needs an integer class count, got `" + n + "`");
    }
    cfg.eps0_mode = Eps0Mode::kFixedFromClasses;
    cfg.fixed_eps0 = eps0_from_classes(classes);
  } else if (!o.eps0.empty()) {
    throw ParseError("--eps0 must be `free` or `fixed:<classes>`");
  } else if (!o.preset.empty() && find_preset(o.preset).classes) {
    cfg.eps0_mode = Eps0Mode::kFixedFromClasses;
    cfg.fixed_eps0 = find_preset(o.preset).params.eps0;
  }
  return cfg;
}

Json fit_inputs(const Options& o, const FitConfig& cfg, std::size_t records) {
  Json j;
  j["file"] = o.file;
  j["records"] = records;
  j["seed"] = o.seed;
  j["restarts"] = cfg.restarts;
  j["eps0_mode"] = cfg.eps0_mode == Eps0Mode::kFixedFromClasses ? "fixed" : "free";
  if (cfg.eps0_mode == Eps0Mode::kFixedFromClasses) j["fixed_eps0"] = cfg.fixed_eps0;
  j["fix_phi"] = cfg.fix_phi;
  j["fix_psi"] = cfg.fix_psi;
  j["average_replicates"] = o.average;
  return j;
}

std::vector<DenseMeasurement> dense_data(const Options& o) {
  auto data = load_dense_csv(o.file);
  if (o.average) data = average_replicates(data).data;
  return data;
}

LoadedPrune prune_data(const Options& o) {
  auto loaded = load_prune_csv(o.file);
  if (o.average) loaded.records = average_replicates(loaded.records).data;
  return loaded;
}

void append_warnings(Json& result, const std::vector<std::string>& extra) {
  for (const auto& w : extra) result["warnings"].push_back(w);
}

// ---------------------------------------------------------------------------

Output cmd_fit_dense(const Options& o) {
  const auto data = dense_data(o);
  const FitConfig cfg = fit_config(o);
  const FitReport rep = fit_dense(data, cfg);
  Output out;
  out.report = make_report("fit-dense", fit_inputs(o, cfg, data.size()), to_json(rep));
  out.tables.emplace_back("landscape.csv", dense_landscape_csv(data, rep));
  out.csv = per_point_csv(rep);
  return out;
}

Output cmd_fit_prune(const Options& o) {
  const LoadedPrune loaded = prune_data(o);
  const FitConfig cfg = fit_config(o);
  std::map<std::tuple<double, double, double>, std::vector<PruneMeasurement>> groups;
  for (const auto& r : loaded.records) groups[{r.depth, r.width, r.n}].push_back(r);
  Json curves = Json::array();
  std::string csv = "depth,width_scale,n,eps_np,eps_up,gamma,p,mu,sigma\n";
  std::size_t failed = 0;
  std::string first_failure;
  for (const auto& [key, curve] : groups) {
    const auto& [l, w, n] = key;
    Json entry{{"depth", l}, {"width_scale", w}, {"n", n}, {"eps_np", curve.front().eps_np}};
    try {
      const FitReport rep = fit_prune_single(curve, curve.front().eps_np, cfg);
      const auto& p = std::get<PruneParams>(rep.params);
      entry["fit"] = to_json(rep);
      csv += format_double(l) + "," + format_double(w) + "," + format_double(n) + "," +
             format_double(curve.front().eps_np) + "," + format_double(p.eps_up) + "," +
             format_double(p.gamma) + "," + format_double(p.p) + "," + format_double(rep.mu) +
             "," + format_double(rep.sigma) + "\n";
    } catch (const IllPosedError& e) {
      // Curves that never leave a plateau do not identify the law; keep going.
      std::ostringstream os;
      os << "group (depth=" << l << ", width_scale=" << w << ", n=" << n << "): " << e.what();
      entry["error"] = os.str();
      if (failed++ == 0) first_failure = os.str();
    }
    curves.push_back(entry);
  }
  if (failed == groups.size()) throw IllPosedError(first_failure);
  Json result;
  result["curves"] = curves;
  result["failed_curves"] = failed;
  result["warnings"] = loaded.warnings;
  Output out;
  out.report = make_report("fit-prune", fit_inputs(o, cfg, loaded.records.size()), result);
  out.tables.emplace_back("curves.csv", csv);
  out.csv = csv;
  return out;
}

Output cmd_fit_prune_joint(const Options& o) {
  const LoadedPrune loaded = prune_data(o);
  const FitConfig cfg = fit_config(o);
  const FitReport rep = fit_prune_joint(loaded.records, cfg);
  Json result = to_json(rep);
  append_warnings(result, loaded.warnings);
  Output out;
  out.report = make_report("fit-prune-joint", fit_inputs(o, cfg, loaded.records.size()), result);
  out.tables.emplace_back("landscape.csv", prune_landscape_csv(loaded.records, rep));
  out.csv = per_point_csv(rep);
  return out;
}

Output cmd_cv(const Options& o) {
  const FitConfig cfg = fit_config(o);
  Output out;
  if (detect_csv_kind(read_text_file(o.file)) == CsvKind::kDense) {
    const auto data = dense_data(o);
    const FitReport rep = cross_validate(data, o.folds, cfg);
    Json inputs = fit_inputs(o, cfg, data.size());
    inputs["folds"] = o.folds;
    out.report = make_report("cv", inputs, to_json(rep));
    out.tables.emplace_back("landscape.csv", dense_landscape_csv(data, rep));
    out.csv = per_point_csv(rep);
  } else {
    const LoadedPrune loaded = prune_data(o);
    const FitReport rep = cross_validate(loaded.records, o.folds, cfg);
    Json inputs = fit_inputs(o, cfg, loaded.records.size());
    inputs["folds"] = o.folds;
    Json result = to_json(rep);
    append_warnings(result, loaded.warnings);
    out.report = make_report("cv", inputs, result);
    out.tables.emplace_back("landscape.csv", prune_landscape_csv(loaded.records, rep));
    out.csv = per_point_csv(rep);
  }
  return out;
}

std::string extrapolation_points_csv(const ExtrapolationReport& rep) {
  std::string csv = "index,actual,predicted,delta,mean_prediction,band\n";
  for (const auto& p : rep.per_point)
    csv += std::to_string(p.index) + "," + format_double(p.actual) + "," +
           format_double(p.predicted) + "," + format_double(p.delta) + "," +
           format_double(p.mean_prediction) + "," + format_double(p.band) + "\n";
  return csv;
}

Output cmd_extrapolate(const Options& o) {
  const FitConfig cfg = fit_config(o);
  Output out;
  if (detect_csv_kind(read_text_file(o.file)) == CsvKind::kDense) {
    const auto data = dense_data(o);
    Json inputs = fit_inputs(o, cfg, data.size());
    if (o.sweep) {
      const auto sweep = extrapolation_sweep(data, cfg);
      Json entries = Json::array();
      for (const auto& e : sweep) entries.push_back(to_json(e));
      out.report = make_report("extrapolate", inputs, Json{{"sweep", entries}});
      out.tables.emplace_back("extrapolation_grid.csv", extrapolation_grid_csv(sweep));
      out.csv = extrapolation_grid_csv(sweep);
      return out;
    }
    if (!(o.corner_m > 0.0) || !(o.corner_n > 0.0))
      throw ParseError("dense extrapolation needs --corner-m and --corner-n, or --sweep");
    inputs["corner_m"] = o.corner_m;
    inputs["corner_n"] = o.corner_n;
    ExtrapolationReport rep = extrapolate_dense(data, o.corner_m, o.corner_n, cfg);
    SweepEntry row;
    row.i = 0;
    row.j = 0;
    row.corner_m = o.corner_m;
    row.corner_n = o.corner_n;
    row.report = rep;
    out.report = make_report("extrapolate", inputs, to_json(rep));
    out.tables.emplace_back("extrapolation_grid.csv", extrapolation_grid_csv({row}));
    out.tables.emplace_back("extrapolation_points.csv", extrapolation_points_csv(rep));
    out.csv = extrapolation_points_csv(rep);
    return out;
  }
  const LoadedPrune loaded = prune_data(o);
  if (!(o.max_params > 0.0))
    throw ParseError("pruning extrapolation needs --max-params (fit depth * width^2 <= P)");
  Json inputs = fit_inputs(o, cfg, loaded.records.size());
  inputs["max_params"] = o.max_params;
  const double cap = o.max_params;
  std::ostringstream label;
  label << "depth * width_scale^2 <= " << format_double(cap);
  ExtrapolationReport rep = extrapolate_prune(
      loaded.records, [cap](double l, double w, double) { return l * w * w <= cap; },
      label.str(), cfg);
  Json result = to_json(rep);
  append_warnings(result, loaded.warnings);
  out.report = make_report("extrapolate", inputs, result);
  out.tables.emplace_back("extrapolation_points.csv", extrapolation_points_csv(rep));
  out.csv = extrapolation_points_csv(rep);
  return out;
}

std::string answer_csv(const DesignAnswer& a) {
  std::string csv = "name,value\n";
  for (const auto& [k, v] : a.values) csv += k + "," + format_double(v) + "\n";
  csv += "achieved_error," + format_double(a.achieved_error) + "\n";
  return csv;
}

Output design_answer(const std::string& sub, Json inputs, const DesignAnswer& a) {
  Output out;
  out.report = make_report("design " + sub, std::move(inputs), to_json(a));
  out.csv = answer_csv(a);
  return out;
}

Output cmd_design(const std::string& sub, const Options& o) {
  if (sub == "prune-min") {
    std::vector<double> pp{0.9, 1.2, 0.003, 0.8, 1.6};
    if (!o.prune_params.empty()) pp = parse_list(o.prune_params, "--prune-params");
    if (pp.size() != 5) throw ParseError("--prune-params needs eps_up,gamma,p_prime,phi,psi");
    const PruneJointParams params(pp[0], pp[1], pp[2], pp[3], pp[4]);
    if (o.eps_k.empty()) throw ParseError("design prune-min needs --eps-k");

    Json inputs;
    inputs["prune_params"] = to_json(ParamSet(params));
    EpsNpProvider family;
    if (!o.eps_np_table.empty()) {
      // Table rows: depth,width_scale,error over a full grid.
      const LoadedPrune t = [&] {
        std::string text = read_text_file(o.eps_np_table);
        const auto nl = text.find('\n');
        if (text.substr(0, nl).find("depth,width_scale,error") != 0)
          throw ParseError(o.eps_np_table + ": header must be `depth,width_scale,error`");
        std::string body = "depth,width_scale,density,n,error\n";
        std::stringstream ss(text.substr(nl + 1));
        std::string line;
        while (std::getline(ss, line)) {
          if (line.empty() || line[0] == '#') continue;
          const auto c1 = line.find(',');
          const auto c2 = line.find(',', c1 + 1);
          if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError(o.eps_np_table + ": expected depth,width_scale,error rows");
          body += line.substr(0, c2) + ",1,1," + line.substr(c2 + 1) + "\n";
        }
        return parse_prune_csv(body);
      }();
      std::vector<double> ds, ws;
      for (const auto& r : t.records) {
        ds.push_back(r.depth);
        ws.push_back(r.width);
      }
      std::sort(ds.begin(), ds.end());
      ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
      std::sort(ws.begin(), ws.end());
      ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
      std::vector<std::vector<double>> vals(ds.size(), std::vector<double>(ws.size(), 0.0));
      for (const auto& r : t.records) {
        const auto i = std::lower_bound(ds.begin(), ds.end(), r.depth) - ds.begin();
        const auto j = std::lower_bound(ws.begin(), ws.end(), r.width) - ws.begin();
        vals[i][j] = r.eps_np;
      }
      for (const auto& row : vals)
        for (double v : row)
          if (v == 0.0) throw ParseError(o.eps_np_table + ": table must cover every depth x width");
      family = measured_eps_np(ds, ws, vals);
      inputs["eps_np"] = Json{{"table", o.eps_np_table}};
    } else {
      const DenseParams dense = dense_params(o);
      const double div = o.size_divisor;
      family = modeled_eps_np(dense, [div](double l, double w) { return l * w * w / div; }, o.n,
                              "dense law at m = depth * width^2 / " + format_double(div));
      inputs["eps_np"] = dense_source(o);
      inputs["eps_np"]["size_divisor"] = div;
      inputs["eps_np"]["n"] = o.n;
    }
    PruneSearchDomain dom{parse_range(o.depths, "--depths"), parse_range(o.widths, "--widths"),
                          !o.no_refine};
    inputs["depths"] = o.depths;
    inputs["widths"] = o.widths;
    inputs["refine"] = dom.refine;
    inputs["eps_k"] = o.eps_k;
    if (o.eps_k.size() == 1) {
      const DesignAnswer a = prune_min_params(family, params, o.eps_k.front(), dom);
      return design_answer(sub, inputs, a);
    }
    const auto env = prune_min_param_envelope(family, params, o.eps_k, dom);
    Json levels = Json::array();
    std::string csv = "eps_k,feasible,depth,width,density,parameter_count,achieved_error\n";
    for (const auto& a : env) {
      levels.push_back(to_json(a));
      csv += format_double(a.inputs.front().second) + "," + (a.feasible ? "1" : "0");
      if (a.feasible) {
        csv += "," + format_double(a.value("depth")) + "," + format_double(a.value("width")) +
               "," + format_double(a.value("density")) + "," +
               format_double(a.value("parameter_count")) + "," +
               format_double(a.achieved_error);
      } else {
        csv += ",,,,,";
      }
      csv += "\n";
    }
    Output out;
    out.report = make_report("design prune-min", inputs,
                             Json{{"kind", "prune_envelope"}, {"levels", levels}});
    out.tables.emplace_back("envelope.csv", csv);
    out.csv = csv;
    return out;
  }

  const DenseParams p = dense_params(o);
  Json inputs = dense_source(o);
  if (sub == "max-model") {
    inputs["n_lim"] = o.n_lim;
    inputs["T"] = o.threshold;
    return design_answer(sub, inputs, max_useful_model(p, o.n_lim, o.threshold));
  }
  if (sub == "max-data") {
    inputs["m_lim"] = o.m_lim;
    inputs["T"] = o.threshold;
    return design_answer(sub, inputs, max_useful_data(p, o.m_lim, o.threshold));
  }
  if (sub == "optimal-pair") {
    inputs["c"] = o.c;
    return design_answer(sub, inputs, optimal_compute_pair(p, o.c));
  }
  // contour
  inputs["target"] = o.target;
  inputs["m_lo"] = o.m_lo;
  inputs["m_hi"] = o.m_hi;
  inputs["count"] = o.count;
  inputs["method"] = o.power_region ? "power_region" : "bisection";
  const ContourResult c =
      error_contour(p, o.target, o.m_lo, o.m_hi, o.count,
                    o.power_region ? ContourMethod::kPowerRegion : ContourMethod::kBisection);
  Output out;
  out.report = make_report("design contour", inputs, to_json(c));
  out.tables.emplace_back("contour.csv", contour_csv(c));
  out.csv = contour_csv(c);
  return out;
}

Output cmd_simulate(const Options& o) {
  NoiseModel noise;
  noise.seed = o.seed;
  noise.sigma = o.noise_sigma;
  noise.dip_depth = o.dip_depth;
  noise.kind = o.dip_depth > 0.0   ? NoiseKind::kDip
               : o.noise_sigma > 0 ? NoiseKind::kLognormal
                                   : NoiseKind::kNone;
  Json inputs;
  inputs["kind"] = o.kind;
  inputs["seed"] = o.seed;
  inputs["noise_sigma"] = o.noise_sigma;
  inputs["replicates"] = o.replicates;
  Json result;
  Output out;
  if (o.kind == "dense") {
    const DenseParams truth = dense_params(o);
    inputs["truth"] = dense_source(o);
    inputs["m_scales"] = "4^-k, k < " + std::to_string(o.m_count);
    inputs["n_scales"] = "2^-k, k < " + std::to_string(o.n_count);
    GenerationStats stats;
    const auto data = generate_dense_grid(truth, geometric_scales(4.0, o.m_count),
                                          geometric_scales(2.0, o.n_count), noise, o.replicates,
                                          &stats);
    result["truth"] = to_json(ParamSet(truth));
    result["records"] = data.size();
    result["clamped"] = stats.clamped;
    out.csv = dense_csv(data);
  } else if (o.kind == "prune") {
    inputs["dip_depth"] = o.dip_depth;
    inputs["ladder"] = o.ladder;
    inputs["family"] = "CIFAR-like: depths {8,14,20,26,50,98}, widths 2^-4..2^2, n {1,1/2,1/4,1/8}";
    const auto truth = cifar_like_prune_truth();
    const auto configs = cifar_like_configs();
    const auto data = generate_prune_family(truth, cifar_like_eps_np_rule(), configs,
                                            imp_ladder(o.ladder), noise, o.replicates);
    result["truth"] = to_json(ParamSet(truth));
    result["records"] = data.size();
    out.csv = prune_csv(data);
  } else {
    throw ParseError("--kind must be dense or prune");
  }
  result["noise_convention"] = kNoiseConvention;
  out.report = make_report("simulate", inputs, result);
  out.tables.emplace_back("measurements.csv", out.csv);
  return out;
}

Output cmd_stability(const Options& o) {
  const LoadedPrune loaded = prune_data(o);
  FitConfig cfg = fit_config(o);
  SampleMode mode;
  if (o.mode == "configurations") {
    mode = SampleMode::kConfigurations;
  } else if (o.mode == "networks") {
    mode = SampleMode::kNetworks;
  } else {
    throw ParseError("--mode must be configurations or networks");
  }
  Json inputs = fit_inputs(o, cfg, loaded.records.size());
  inputs["mode"] = o.mode;
  inputs["sizes"] = o.sizes;
  inputs["repeats"] = o.repeats;
  Json points = Json::array();
  std::string csv = "sample_size,mu_mean,mu_std,sigma_mean,sigma_std,failed\n";
  for (int t : o.sizes) {
    if (t < 1) throw ParseError("--sizes entries must be positive");
    const auto pt = stability_experiment(loaded.records, static_cast<std::size_t>(t), mode,
                                         o.repeats, cfg);
    points.push_back(to_json(pt));
    csv += std::to_string(t) + "," + format_double(pt.mu_mean) + "," + format_double(pt.mu_std) +
           "," + format_double(pt.sigma_mean) + "," + format_double(pt.sigma_std) + "," +
           std::to_string(pt.failed) + "\n";
  }
  Json result{{"points", points}, {"warnings", loaded.warnings}};
  Output out;
  out.report = make_report("stability", inputs, result);
  out.tables.emplace_back("stability.csv", csv);
  out.csv = csv;
  return out;
}

Output cmd_presets(const Options& o) {
  Json list = Json::array();
  for (const auto& p : preset_catalog())
    if (o.preset.empty() || p.name == o.preset) list.push_back(to_json(p));
  if (!o.preset.empty()) find_preset(o.preset);  // unknown names are an error
  Output out;
  out.report = make_report("presets", Json::object(), Json{{"presets", list}});
  out.csv = presets_csv();
  return out;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "seed for every random stream");
  app->add_option("--out", o.out_dir, "directory for report.json and tables");
  app->add_option("--format", o.format, "stdout format when --out is absent")
      ->check(CLI::IsMember({"json", "csv"}));
}

void add_fit(CLI::App* app, Options& o) {
  app->add_option("file", o.file, "measurement CSV")->required();
  app->add_option("--restarts", o.restarts, "random restarts");
  app->add_option("--eps0", o.eps0, "fixed:<classes> or free (dense fits)");
  app->add_option("--preset", o.preset, "take eps0 from a vision preset");
  app->add_flag("--fix-phi", o.fix_phi, "hold the depth exponent at zero");
  app->add_flag("--fix-psi", o.fix_psi, "hold the width exponent at zero");
  app->add_flag("--average", o.average, "average replicates before fitting");
}

void add_dense_source(CLI::App* app, Options& o) {
  app->add_option("--preset", o.preset, "published law");
  app->add_option("--params", o.params, "alpha,beta,b,c_inf,eta,eps0");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Scaling-law fitting, extrapolation and design toolkit", "scalelaw"};
  app.require_subcommand(1);

  auto* fd = app.add_subcommand("fit-dense", "fit the dense envelope law");
  add_common(fd, o);
  add_fit(fd, o);
  auto* fp = app.add_subcommand("fit-prune", "fit the density law to each curve");
  add_common(fp, o);
  add_fit(fp, o);
  auto* fj = app.add_subcommand("fit-prune-joint", "fit the joint pruning law");
  add_common(fj, o);
  add_fit(fj, o);
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  add_common(cv, o);
  add_fit(cv, o);
  cv->add_option("--folds", o.folds, "number of folds");
  auto* ex = app.add_subcommand("extrapolate", "fit small configurations, predict large ones");
  add_common(ex, o);
  add_fit(ex, o);
  ex->add_option("--corner-m", o.corner_m, "largest fitted model size");
  ex->add_option("--corner-n", o.corner_n, "largest fitted data size");
  ex->add_flag("--sweep", o.sweep, "run every corner");
  ex->add_option("--max-params", o.max_params, "pruning: fit depth * width^2 <= P");

  auto* design = app.add_subcommand("design", "design questions on a fitted law");
  design->require_subcommand(1);
  std::vector<std::pair<std::string, CLI::App*>> design_subs;
  for (const char* name : {"max-model", "max-data", "optimal-pair", "contour", "prune-min"}) {
    auto* s = design->add_subcommand(name);
    add_common(s, o);
    design_subs.emplace_back(name, s);
  }
  auto* mm = design_subs[0].second;
  add_dense_source(mm, o);
  mm->add_option("--n-lim", o.n_lim, "available data size")->required();
  mm->add_option("--T", o.threshold, "relative contribution threshold");
  auto* md = design_subs[1].second;
  add_dense_source(md, o);
  md->add_option("--m-lim", o.m_lim, "available model size")->required();
  md->add_option("--T", o.threshold, "relative contribution threshold");
  auto* op = design_subs[2].second;
  add_dense_source(op, o);
  op->add_option("--c", o.c, "level of n^-alpha + b m^-beta")->required();
  auto* ct = design_subs[3].second;
  add_dense_source(ct, o);
  ct->add_option("--target", o.target, "target error")->required();
  ct->add_option("--m-lo", o.m_lo, "smallest model size");
  ct->add_option("--m-hi", o.m_hi, "largest model size");
  ct->add_option("--count", o.count, "model sizes in the sweep");
  ct->add_flag("--power-region", o.power_region, "closed-form power-region approximation");
  auto* pm = design_subs[4].second;
  add_dense_source(pm, o);
  pm->add_option("--prune-params", o.prune_params, "eps_up,gamma,p_prime,phi,psi");
  pm->add_option("--eps-np-table", o.eps_np_table, "CSV depth,width_scale,error");
  pm->add_option("--size-divisor", o.size_divisor, "m = depth * width^2 / divisor");
  pm->add_option("--n", o.n, "data size for the modeled unpruned error");
  pm->add_option("--depths", o.depths, "lo:hi:count");
  pm->add_option("--widths", o.widths, "lo:hi:count");
  pm->add_option("--eps-k", o.eps_k, "target error(s)")->delimiter(',')->required();
  pm->add_flag("--no-refine", o.no_refine, "grid search only");

  auto* sim = app.add_subcommand("simulate", "generate synthetic measurements");
  add_common(sim, o);
  add_dense_source(sim, o);
  sim->add_option("--kind", o.kind, "dense or prune");
  sim->add_option("--noise-sigma", o.noise_sigma, "lognormal sigma");
  sim->add_option("--dip-depth", o.dip_depth, "dip depth for pruning families");
  sim->add_option("--replicates", o.replicates, "replicates per point");
  sim->add_option("--ladder", o.ladder, "densities 0.8^i, i < ladder");
  sim->add_option("--m-count", o.m_count, "model sizes 4^-k");
  sim->add_option("--n-count", o.n_count, "data sizes 2^-k");

  auto* st = app.add_subcommand("stability", "resampling stability of joint pruning fits");
  add_common(st, o);
  add_fit(st, o);
  st->add_option("--sizes", o.sizes, "sample sizes")->delimiter(',');
  st->add_option("--repeats", o.repeats, "draws per sample size");
  st->add_option("--mode", o.mode, "configurations or networks");

  auto* pr = app.add_subcommand("presets", "published dense-law fits");
  add_common(pr, o);
  pr->add_option("--preset", o.preset, "show one preset");

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' &&
      !app.get_subcommand_no_throw(args.front())) {
    err << "code: parse-error: unknown subcommand '" << args.front() << "'\n";
    return static_cast<int>(ExitCode::kInput);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "code: parse-error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInput);
  }

  try {
    Output result;
    std::string name;
    if (fd->parsed()) {
      result = cmd_fit_dense(o);
    } else if (fp->parsed()) {
      result = cmd_fit_prune(o);
    } else if (fj->parsed()) {
      result = cmd_fit_prune_joint(o);
    } else if (cv->parsed()) {
      result = cmd_cv(o);
    } else if (ex->parsed()) {
      result = cmd_extrapolate(o);
    } else if (design->parsed()) {
      for (const auto& [sub, s] : design_subs)
        if (s->parsed()) result = cmd_design(sub, o);
    } else if (sim->parsed()) {
      result = cmd_simulate(o);
    } else if (st->parsed()) {
      result = cmd_stability(o);
    } else {
      result = cmd_presets(o);
    }

    if (!o.out_dir.empty()) {
      const fs::path dir(o.out_dir);
      write_file_atomic(dir / "report.json", dump_report(result.report));
      for (const auto& [file, content] : result.tables) write_file_atomic(dir / file, content);
      out << (dir / "report.json").string() << "\n";
    } else if (o.format == "csv") {
      out << result.csv;
    } else {
      out << dump_report(result.report);
    }
    return 0;
  } catch (const Error& e) {
    err << "code: " << e.code() << ": " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    err << "code: io-error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInput);
  }
}

}  // namespace scalelaw::cli
