#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <modalreg/reports.hpp>

using namespace modalreg;

namespace {

struct Common
{
  std::size_t threads = 0;
  std::uint64_t seed = 0;
};

void
add_threads(CLI::App* cmd, Common& c)
{
  cmd->add_option("--threads", c.threads, "Worker threads (0: MODALREG_THREADS, else all cores)");
}

CLI::Option*
add_seed(CLI::App* cmd, Common& c)
{
  return cmd->add_option("--seed", c.seed, "Random seed")->required();
}

void
apply_threads(std::size_t requested)
{
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("MODALREG_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end == env || *end != '\0')
        throw InvalidArgument("MODALREG_THREADS must be a positive integer");
      n = v;
    }
  }
  if (n == 0)
    n = std::max(1u, std::thread::hardware_concurrency());
  set_num_threads(n);
}

template<class T>
std::vector<T>
parse_list(const std::string& text, const std::string& flag)
{
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw InvalidArgument(flag + ": '" + item + "' is not a valid list element");
    out.push_back(v);
  }
  if (out.empty())
    throw InvalidArgument(flag + ": empty list");
  return out;
}

void
print_json(const json& j)
{
  std::cout << j.dump(2) << '\n';
}

void
write_json(const std::string& path, const json& j)
{
  write_text_file(path, j.dump(2) + "\n");
}

void
write_csv(const std::string& path, const CsvTable& t)
{
  write_text_file(path, to_csv(t));
}

void
print_error(const std::string& code, const std::string& message, std::size_t row = 0, std::size_t column = 0)
{
  json j = { { "error", code }, { "message", message } };
  if (row || column) {
    j["row"] = row;
    j["column"] = column;
  }
  std::cerr << j.dump() << '\n';
}

struct DataArgs
{
  std::string data;
  double h = 0.0;
};

void
add_data(CLI::App* cmd, DataArgs& a, bool with_h = true)
{
  cmd->add_option("--data", a.data, "Input CSV with columns x1..xd,y")->required();
  if (with_h)
    cmd->add_option("--h", a.h, "Bandwidth (0: normal-reference rule)");
}

KdeModel
load_model(const DataArgs& a)
{
  if (!(a.h >= 0.0))
    throw InvalidArgument("--h must be positive");
  DataSet data = read_data_file(a.data);
  const double h = a.h > 0.0 ? a.h : rule_of_thumb_bandwidth(data);
  return KdeModel(std::move(data), h);
}

PointSet
mesh_for(const KdeModel& model, std::size_t points, double trim)
{
  if (!(trim >= 0.0 && trim < 0.5))
    throw InvalidArgument("--trim must lie in [0, 0.5)");
  return make_mesh(model.data().x_bounds(), points, trim);
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Nonparametric modal regression: conditional mode sets, confidence and prediction bands, "
                "bandwidth selection, clustering, ridge diagnostics and simulation studies." };
  app.set_help_flag("--help", "Print this help message and exit");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "modalreg 1.0");

  Common common;
  std::function<void()> action;

  // gen
  auto* gen = app.add_subcommand("gen", "Draw a synthetic data set from a design file");
  std::string gen_spec, gen_out, gen_labels;
  std::size_t gen_n = 0;
  gen->add_option("--spec", gen_spec, "Design JSON")->required();
  gen->add_option("--n", gen_n, "Sample size")->required();
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--labels", gen_labels, "Optional CSV of generating component labels");
  add_seed(gen, common);
  add_threads(gen, common);
  gen->callback([&] {
    action = [&] {
      const Design d = read_design_file(gen_spec);
      const Generated g = generate(d, gen_n, common.seed);
      write_csv(gen_out, data_to_table(g.data));
      if (!gen_labels.empty()) {
        CsvTable t;
        t.header = { "label" };
        for (auto l : g.labels)
          t.rows.push_back({ static_cast<double>(l) });
        write_csv(gen_labels, t);
      }
      print_json({ { "n", g.data.size() }, { "dim", g.data.dim() }, { "seed", common.seed } });
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate the modal set on a mesh");
  DataArgs fit_data;
  std::size_t fit_mesh = 50;
  double fit_trim = 0.0;
  std::string fit_out;
  add_data(fit, fit_data);
  fit->add_option("--mesh", fit_mesh, "Mesh points per covariate");
  fit->add_option("--trim", fit_trim, "Fraction of the covariate range trimmed at each end");
  fit->add_option("--out", fit_out, "Output CSV (mesh_index, x, y, p_yy, label)");
  add_threads(fit, common);
  fit->callback([&] {
    action = [&] {
      const KdeModel model = load_model(fit_data);
      const ModalSet modal = build_modal_set(model, mesh_for(model, fit_mesh, fit_trim));
      if (!fit_out.empty())
        write_csv(fit_out, modal_set_table(modal));
      print_json(modal_set_summary(modal));
    };
  });

  // confidence
  auto* conf = app.add_subcommand("confidence", "Bootstrap confidence band for the modal set");
  DataArgs conf_data;
  std::size_t conf_mesh = 50, conf_B = 200;
  double conf_trim = 0.0, conf_alpha = 0.1;
  std::string conf_kind = "uniform", conf_out;
  add_data(conf, conf_data);
  conf->add_option("--mesh", conf_mesh, "Mesh points per covariate");
  conf->add_option("--trim", conf_trim, "Fraction of the covariate range trimmed at each end");
  conf->add_option("--alpha", conf_alpha, "Significance level");
  conf->add_option("--B", conf_B, "Bootstrap replicates");
  conf->add_option("--kind", conf_kind, "pointwise or uniform")->check(CLI::IsMember({ "pointwise", "uniform" }));
  conf->add_option("--out", conf_out, "Output CSV (mesh_index, x, y, delta)");
  add_seed(conf, common);
  add_threads(conf, common);
  conf->callback([&] {
    action = [&] {
      const KdeModel model = load_model(conf_data);
      const BootstrapConfig cfg{ conf_B, conf_alpha, common.seed };
      const auto reps = bootstrap_replicates(model, mesh_for(model, conf_mesh, conf_trim), cfg);
      const ConfidenceBand band = conf_kind == "uniform" ? uniform_band(reps, conf_alpha) : pointwise_band(reps, conf_alpha);
      if (!conf_out.empty())
        write_csv(conf_out, band_table(band, "delta"));
      json j = { { "kind", conf_kind }, { "alpha", conf_alpha }, { "B", conf_B }, { "seed", common.seed }, { "h", model.h() } };
      std::size_t unstable = 0;
      for (std::size_t q = 0; q < band.mesh.size(); ++q)
        unstable += band.unstable(q);
      if (band.kind == ConfidenceBand::Kind::uniform)
        j["delta"] = json_number(band.delta.front());
      j["unstable_points"] = band.kind == ConfidenceBand::Kind::uniform ? (unstable ? band.mesh.size() : 0) : unstable;
      print_json(j);
    };
  });

  // predict
  auto* pred = app.add_subcommand("predict", "Prediction band around the modal set");
  DataArgs pred_data;
  std::size_t pred_mesh = 50;
  double pred_trim = 0.0, pred_alpha = 0.05, pred_frac = 0.5;
  std::string pred_kind = "uniform", pred_out, pred_resid;
  bool pred_cv = false;
  add_data(pred, pred_data);
  pred->add_option("--alpha", pred_alpha, "Miscoverage level");
  pred->add_option("--kind", pred_kind, "uniform or pointwise")->check(CLI::IsMember({ "pointwise", "uniform" }));
  pred->add_option("--mesh", pred_mesh, "Mesh points per covariate");
  pred->add_option("--trim", pred_trim, "Fraction of the covariate range trimmed at each end");
  pred->add_flag("--cv", pred_cv, "Uniform width from a train/validation split (needs --seed)");
  pred->add_option("--train-fraction", pred_frac, "Train share of the split with --cv");
  pred->add_option("--seed", common.seed, "Random seed (required with --cv)");
  pred->add_option("--out", pred_out, "Output CSV (mesh_index, x, y, epsilon)");
  pred->add_option("--residuals", pred_resid, "Output CSV of residual distances (index, distance)");
  add_threads(pred, common);
  pred->callback([&] {
    if (pred_cv && pred->count("--seed") == 0)
      throw CLI::RequiredError("--seed (with --cv)");
    action = [&] {
      const KdeModel model = load_model(pred_data);
      const PointSet mesh = mesh_for(model, pred_mesh, pred_trim);
      json j = { { "kind", pred_kind }, { "alpha", pred_alpha }, { "h", model.h() } };
      if (pred_kind == "pointwise") {
        const PredictionBand band = pointwise_prediction_band(model, mesh, pred_alpha);
        if (!pred_out.empty())
          write_csv(pred_out, band_table(band, "epsilon"));
        double mean_len = 0.0;
        std::size_t finite = 0;
        for (double l : band.length)
          if (std::isfinite(l)) {
            mean_len += l;
            ++finite;
          }
        j["mean_length"] = json_number(finite ? mean_len / static_cast<double>(finite) : infinity);
        j["unreachable_points"] = band.mesh.size() - finite;
        print_json(j);
        return;
      }
      std::vector<double> resid;
      double eps = 0.0;
      KdeModel fitted = model;
      if (pred_cv) {
        auto cv = uniform_epsilon_cv(model.data(), model.h(), pred_alpha, common.seed, pred_frac);
        eps = cv.epsilon;
        resid = std::move(cv.residuals);
        fitted = cv.train_model;
        j["seed"] = common.seed;
      } else {
        resid = residual_distances(model, model.data()).distance;
        eps = uniform_epsilon(resid, pred_alpha);
      }
      const ModalSet modal = build_modal_set(fitted, mesh);
      const PredictionBand band = uniform_prediction_band(modal, eps, pred_alpha);
      if (!pred_out.empty())
        write_csv(pred_out, band_table(band, "epsilon"));
      if (!pred_resid.empty()) {
        CsvTable t;
        t.header = { "index", "distance" };
        for (std::size_t i = 0; i < resid.size(); ++i)
          t.rows.push_back({ static_cast<double>(i), resid[i] });
        write_csv(pred_resid, t);
      }
      j["epsilon"] = json_number(eps);
      j["residuals"] = resid.size();
      if (model.dim() == 1)
        j["volume"] = json_number(uniform_volume(modal, eps));
      print_json(j);
    };
  });

  // select-h
  auto* sel = app.add_subcommand("select-h", "Bandwidth minimising the prediction-band volume");
  DataArgs sel_data;
  SelectionConfig sel_cfg;
  std::string sel_grid, sel_out;
  std::size_t sel_count = 20;
  double sel_lo = 0.2, sel_hi = 2.0;
  add_data(sel, sel_data, false);
  sel->add_option("--alpha", sel_cfg.alpha, "Miscoverage level");
  sel->add_option("--grid", sel_grid, "Comma-separated ascending bandwidths (overrides the default grid)");
  sel->add_option("--grid-count", sel_count, "Default grid: number of bandwidths");
  sel->add_option("--grid-lo", sel_lo, "Default grid: smallest multiple of the reference bandwidth");
  sel->add_option("--grid-hi", sel_hi, "Default grid: largest multiple of the reference bandwidth");
  sel->add_option("--train-fraction", sel_cfg.train_fraction, "Train share of the split");
  sel->add_option("--mesh", sel_cfg.mesh_points, "Mesh points for the volume");
  sel->add_option("--out", sel_out, "Output CSV of the curve (h, volume, num_manifolds, epsilon, ok)");
  add_seed(sel, common);
  add_threads(sel, common);
  sel->callback([&] {
    action = [&] {
      const DataSet data = read_data_file(sel_data.data);
      const std::vector<double> grid =
        sel_grid.empty() ? default_bandwidth_grid(data, sel_count, sel_lo, sel_hi) : parse_list<double>(sel_grid, "--grid");
      sel_cfg.seed = common.seed;
      const BandwidthSelection s = select_bandwidth(data, grid, sel_cfg);
      if (!sel_out.empty())
        write_csv(sel_out, selection_table(s));
      print_json({ { "h", s.h }, { "index", s.index }, { "grid_size", grid.size() }, { "seed", common.seed } });
    };
  });

  // cluster
  auto* clu = app.add_subcommand("cluster", "Conditional clustering by basins of attraction");
  DataArgs clu_data;
  std::string clu_out;
  add_data(clu, clu_data);
  clu->add_option("--out", clu_out, "Output CSV (index, x1..xd, y, destination, label)");
  add_threads(clu, common);
  clu->callback([&] {
    action = [&] {
      const KdeModel model = load_model(clu_data);
      const ClusterModel c = cluster(model);
      if (!clu_out.empty())
        write_csv(clu_out, cluster_table(model.data(), c));
      json j = cluster_summary(c);
      j["h"] = model.h();
      print_json(j);
    };
  });

  // ridge-check
  auto* rid = app.add_subcommand("ridge-check", "Ridge membership of every mode point (one covariate)");
  DataArgs rid_data;
  std::size_t rid_mesh = 50;
  double rid_trim = 0.0, rid_tol = 1e-4;
  std::string rid_out;
  add_data(rid, rid_data);
  rid->add_option("--mesh", rid_mesh, "Mesh points");
  rid->add_option("--trim", rid_trim, "Fraction of the covariate range trimmed at each end");
  rid->add_option("--tol", rid_tol, "Relative tolerance (times p/h for gradients, p/h^2 for p_xy)");
  rid->add_option("--out", rid_out, "Output CSV of the scan");
  add_threads(rid, common);
  rid->callback([&] {
    action = [&] {
      const KdeModel model = load_model(rid_data);
      const ModalSet modal = build_modal_set(model, mesh_for(model, rid_mesh, rid_trim));
      const RidgeScanReport scan = ridge_scan(model, modal, rid_tol);
      if (!rid_out.empty())
        write_csv(rid_out, ridge_table(scan));
      json j = ridge_summary(scan);
      j["h"] = model.h();
      print_json(j);
    };
  });

  // experiment rate | coverage
  auto* exp = app.add_subcommand("experiment", "Monte Carlo studies");
  exp->require_subcommand(1);
  auto* rate = exp->add_subcommand("rate", "Error rate of the modal set against the design's true modes");
  std::string rate_design, rate_out, rate_curve, rate_ngrid = "250,500,1000,2000,4000";
  RateStudyConfig rate_cfg;
  rate_cfg.h_scale = 1.0;
  rate->add_option("--design", rate_design, "Design JSON (one covariate)")->required();
  rate->add_option("--n-grid", rate_ngrid, "Comma-separated ascending sample sizes");
  rate->add_option("--reps", rate_cfg.reps, "Replicates per sample size");
  rate->add_option("--h-scale", rate_cfg.h_scale, "h = h_scale * n^(-1/(d+7))");
  rate->add_option("--mesh", rate_cfg.mesh_points, "Evaluation mesh points");
  rate->add_option("--trim", rate_cfg.trim, "Fraction trimmed at each end of the evaluation range");
  rate->add_option("--out", rate_out, "Output JSON report");
  rate->add_option("--curve", rate_curve, "Output CSV of errors by n");
  add_seed(rate, common);
  add_threads(rate, common);
  rate->callback([&] {
    action = [&] {
      rate_cfg.n_grid = parse_list<std::size_t>(rate_ngrid, "--n-grid");
      rate_cfg.seed = common.seed;
      const RateReport r = rate_study(read_design_file(rate_design), rate_cfg);
      json j = rate_json(r);
      j["seed"] = common.seed;
      if (!rate_out.empty())
        write_json(rate_out, j);
      if (!rate_curve.empty())
        write_csv(rate_curve, rate_table(r));
      print_json(j);
    };
  });

  auto* cov = exp->add_subcommand("coverage", "Coverage of the smoothed mode by bootstrap bands (Gaussian design)");
  std::string cov_design, cov_out, cov_curve, cov_alphas = "0.1";
  CoverageStudyConfig cov_cfg;
  cov->add_option("--design", cov_design, "Gaussian design JSON (one covariate)")->required();
  cov->add_option("--n", cov_cfg.n, "Sample size");
  cov->add_option("--alpha", cov_alphas, "Comma-separated significance levels");
  cov->add_option("--B", cov_cfg.B, "Bootstrap replicates");
  cov->add_option("--reps", cov_cfg.reps, "Monte Carlo replicates");
  cov->add_option("--h", cov_cfg.h, "Bandwidth");
  cov->add_option("--mesh", cov_cfg.mesh_points, "Evaluation mesh points");
  cov->add_option("--trim", cov_cfg.trim, "Fraction trimmed at each end of the evaluation range");
  cov->add_option("--out", cov_out, "Output JSON report");
  cov->add_option("--curve", cov_curve, "Output CSV of coverage by alpha");
  add_seed(cov, common);
  add_threads(cov, common);
  cov->callback([&] {
    action = [&] {
      cov_cfg.alphas = parse_list<double>(cov_alphas, "--alpha");
      cov_cfg.seed = common.seed;
      const CoverageReport r = coverage_study(read_design_file(cov_design), cov_cfg);
      json j = coverage_json(r);
      j["seed"] = common.seed;
      if (!cov_out.empty())
        write_json(cov_out, j);
      if (!cov_curve.empty())
        write_csv(cov_curve, coverage_table(r));
      print_json(j);
    };
  });

  // reformat
  auto* ref = app.add_subcommand("reformat", "Read a CSV or JSON output file and write it back in canonical form");
  std::string ref_in, ref_out;
  ref->add_option("--in", ref_in, "Input file (.csv or .json)")->required();
  ref->add_option("--out", ref_out, "Output file")->required();
  add_threads(ref, common);
  ref->callback([&] {
    action = [&] {
      if (ref_in.size() >= 5 && ref_in.compare(ref_in.size() - 5, 5, ".json") == 0) {
        std::ifstream in(ref_in, std::ios::binary);
        if (!in)
          throw InvalidArgument("cannot open '" + ref_in + "' for reading");
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ParseError(e.what(), 0, 0);
        }
        write_json(ref_out, j);
      } else {
        write_csv(ref_out, read_table_file(ref_in));
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    apply_threads(common.threads);
    action();
  } catch (const ParseError& e) {
    print_error(e.code(), e.what(), e.row(), e.column());
    return 1;
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
