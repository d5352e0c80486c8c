// Command-line front end: fit mixtures to weighted attention grids, compute
// context vectors, render density maps, compare attention maps, and run a
// self-contained synthetic demo. All runs are deterministic given --seed.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mca/attention.hpp"
#include "mca/basis.hpp"
#include "mca/em.hpp"
#include "mca/errors.hpp"
#include "mca/eval.hpp"
#include "mca/io.hpp"
#include "mca/selection.hpp"
#include "mca/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* tool_version = "0.1.0";

struct RunConfig {
  int basis_side = 10;
  double basis_var = 0.001;
  double ridge = 0.01;
  double lambda = 5.0;
  int k_max = 4;
  int iters = 10;
  int restarts = 3;
  std::uint64_t seed = 0;
  int height = 32;
  int width = 32;
  int fixed_k = 0;  // 0 = run model selection
};

RunConfig load_config_file(const std::string& config_path) {
  RunConfig cfg;
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw mca::parse_error("cannot open '" + config_path + "'");
  const nlohmann::json j = mca::io::parse_json(in, config_path);
  if (!j.is_object()) throw mca::parse_error(config_path + ": expected an object");
  auto get_int = [&](const char* key, auto& slot) {
    if (j.contains(key)) {
      if (!j[key].is_number_integer())
        throw mca::parse_error(config_path + ": '" + key + "' must be an integer");
      slot = j[key].template get<std::remove_reference_t<decltype(slot)>>();
    }
  };
  auto get_num = [&](const char* key, double& slot) {
    if (j.contains(key)) {
      if (!j[key].is_number())
        throw mca::parse_error(config_path + ": '" + key + "' must be a number");
      slot = j[key].get<double>();
    }
  };
  get_int("basis_side", cfg.basis_side);
  get_num("basis_var", cfg.basis_var);
  get_num("ridge", cfg.ridge);
  get_num("lambda", cfg.lambda);
  get_int("k_max", cfg.k_max);
  get_int("iters", cfg.iters);
  get_int("restarts", cfg.restarts);
  get_int("seed", cfg.seed);
  get_int("height", cfg.height);
  get_int("width", cfg.width);
  get_int("k", cfg.fixed_k);
  return cfg;
}

// CLI flag slots; only flags the user actually passed override the config
// file, which in turn overrides the defaults.
struct Flags {
  RunConfig v;
  CLI::Option* basis_side = nullptr;
  CLI::Option* basis_var = nullptr;
  CLI::Option* ridge = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* k_max = nullptr;
  CLI::Option* iters = nullptr;
  CLI::Option* restarts = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* height = nullptr;
  CLI::Option* width = nullptr;
  CLI::Option* fixed_k = nullptr;
  std::string config_path;

  void attach(CLI::App* sub) {
    basis_side = sub->add_option("--basis-side", v.basis_side, "RBF lattice side (N = side^2)");
    basis_var = sub->add_option("--basis-var", v.basis_var, "RBF isotropic variance");
    ridge = sub->add_option("--ridge", v.ridge, "ridge regression penalty");
    lambda = sub->add_option("--lambda", v.lambda, "model selection penalty per component");
    k_max = sub->add_option("--k-max", v.k_max, "maximum number of mixture components");
    iters = sub->add_option("--iters", v.iters, "EM iterations");
    restarts = sub->add_option("--restarts", v.restarts, "EM restarts per k");
    seed = sub->add_option("--seed", v.seed, "random seed");
    height = sub->add_option("--height", v.height, "discretization grid height");
    width = sub->add_option("--width", v.width, "discretization grid width");
    fixed_k = sub->add_option("--k", v.fixed_k, "fit exactly k components (skip selection)");
    sub->add_option("--config", config_path, "JSON config file (flags take precedence)");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (basis_side->count()) cfg.basis_side = v.basis_side;
    if (basis_var->count()) cfg.basis_var = v.basis_var;
    if (ridge->count()) cfg.ridge = v.ridge;
    if (lambda->count()) cfg.lambda = v.lambda;
    if (k_max->count()) cfg.k_max = v.k_max;
    if (iters->count()) cfg.iters = v.iters;
    if (restarts->count()) cfg.restarts = v.restarts;
    if (seed->count()) cfg.seed = v.seed;
    if (height->count()) cfg.height = v.height;
    if (width->count()) cfg.width = v.width;
    if (fixed_k->count()) cfg.fixed_k = v.fixed_k;
    return cfg;
  }
};

void write_config(mca::io::JsonWriter& w, const RunConfig& cfg) {
  w.begin_object();
  w.key("basis_side");
  w.value(cfg.basis_side);
  w.key("basis_var");
  w.value(cfg.basis_var);
  w.key("ridge");
  w.value(cfg.ridge);
  w.key("lambda");
  w.value(cfg.lambda);
  w.key("k_max");
  w.value(cfg.k_max);
  w.key("iters");
  w.value(cfg.iters);
  w.key("restarts");
  w.value(cfg.restarts);
  w.key("seed");
  w.value(cfg.seed);
  w.key("height");
  w.value(cfg.height);
  w.key("width");
  w.value(cfg.width);
  w.key("k");
  w.value(cfg.fixed_k);
  w.end_object();
}

void write_selection(mca::io::JsonWriter& w, const mca::SelectionReport& report) {
  w.begin_object();
  w.key("chosen_k");
  w.value(report.chosen_k);
  w.key("per_k");
  w.begin_array();
  for (const mca::SelectionEntry& e : report.per_k) {
    w.begin_object();
    w.key("k");
    w.value(e.k);
    w.key("loglik");
    w.value(e.loglik);
    w.key("criterion");
    w.value(e.criterion);
    w.key("collapsed");
    w.value(e.collapsed);
    w.end_object();
  }
  w.end_array();
  w.key("chosen_params");
  mca::io::write_mixture(w, report.chosen_params);
  w.end_object();
}

void write_context(mca::io::JsonWriter& w, const mca::ContextVector& ctx) {
  w.begin_object();
  w.key("value");
  w.begin_array();
  for (double x : ctx.value) w.value(x);
  w.end_array();
  w.key("per_component");
  w.begin_array();
  for (const auto& part : ctx.per_component) {
    w.begin_object();
    w.key("pi");
    w.value(part.pi);
    w.key("c");
    w.begin_array();
    for (double x : part.context) w.value(x);
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

void write_gradients(mca::io::JsonWriter& w, const mca::AttentionGradients& g) {
  w.begin_object();
  w.key("components");
  w.begin_array();
  for (const auto& comp : g.components) {
    w.begin_object();
    auto matrix = [&](const char* key, const std::vector<double>& m, std::size_t cols) {
      w.key(key);
      w.begin_array();
      for (std::size_t d = 0; d < g.dim; ++d) {
        w.begin_array();
        for (std::size_t c = 0; c < cols; ++c) w.value(m[d * cols + c]);
        w.end_array();
      }
      w.end_array();
    };
    matrix("jac_mean", comp.jac_mean, 2);
    matrix("jac_cov", comp.jac_cov, 3);
    w.key("jac_pi");
    w.begin_array();
    for (double x : comp.jac_pi) w.value(x);
    w.end_array();
    w.key("grad_mean");
    w.begin_array();
    w.value(comp.grad_mean.u);
    w.value(comp.grad_mean.v);
    w.end_array();
    w.key("grad_cov");
    w.begin_array();
    for (double x : comp.grad_cov) w.value(x);
    w.end_array();
    w.key("grad_pi");
    w.value(comp.grad_pi);
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

void emit(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload << "\n";
  } else {
    mca::io::write_file(out_path, payload + "\n");
  }
}

// Selection report (or fixed-k fit wrapped as one) plus provenance.
std::string fit_bundle_json(const mca::SelectionReport& report, const RunConfig& cfg,
                            const std::string& input_name, const std::string& input_bytes) {
  mca::io::JsonWriter w;
  w.begin_object();
  w.key("tool_version");
  w.value(std::string_view(tool_version));
  w.key("config");
  write_config(w, cfg);
  w.key("input");
  w.begin_object();
  w.key("path");
  w.value(std::string_view(input_name));
  w.key("fnv1a64");
  w.value(std::string_view(mca::io::fnv1a64_hex(input_bytes)));
  w.end_object();
  w.key("selection");
  write_selection(w, report);
  w.key("mixture");
  mca::io::write_mixture(w, report.chosen_params);
  w.end_object();
  return w.str();
}

mca::SelectionReport fit_dataset(const mca::WeightedDataset& data, const RunConfig& cfg) {
  if (cfg.fixed_k > 0) {
    mca::EMReport fit = mca::run_em_restarts(data, cfg.fixed_k, cfg.restarts, cfg.iters,
                                             mca::detail::derive_seed(cfg.seed, (std::uint64_t)cfg.fixed_k));
    mca::SelectionReport report;
    report.chosen_k = cfg.fixed_k;
    report.chosen_params = fit.params;
    report.per_k.push_back({cfg.fixed_k, fit.final_loglik(),
                            mca::criterion(fit.final_loglik(), cfg.fixed_k, cfg.lambda),
                            false});
    return report;
  }
  mca::SelectionConfig sel;
  sel.k_min = 1;
  sel.k_max = cfg.k_max;
  sel.lambda = cfg.lambda;
  sel.restarts = cfg.restarts;
  sel.max_iters = cfg.iters;
  sel.base_seed = cfg.seed;
  return mca::select_k(data, sel);
}

int cmd_fit(const std::string& weights_path, const Flags& flags, const std::string& out) {
  const RunConfig cfg = flags.resolve();
  const std::string bytes = mca::io::read_file(weights_path);
  mca::WeightedDataset data = [&] {
    std::istringstream in(bytes);
    if (weights_path.size() >= 5 && weights_path.substr(weights_path.size() - 5) == ".json")
      return mca::io::read_weights_json(in, weights_path);
    return mca::io::read_weights_csv(in, weights_path);
  }();
  const mca::SelectionReport report = fit_dataset(data, cfg);
  emit(out, fit_bundle_json(report, cfg, fs::path(weights_path).filename().string(), bytes));
  return 0;
}

// Selection report only (the fit bundle adds provenance around this).
int cmd_select(const std::string& weights_path, const Flags& flags, const std::string& out) {
  const RunConfig cfg = flags.resolve();
  const mca::WeightedDataset data = mca::io::read_weights_file(weights_path);
  const mca::SelectionReport report = fit_dataset(data, cfg);
  mca::io::JsonWriter w;
  write_selection(w, report);
  emit(out, w.str());
  return 0;
}

int cmd_forward(const std::string& features_path, const std::string& mixture_path,
                const Flags& flags, const std::string& out, bool with_grad,
                const std::string& upstream_path) {
  const RunConfig cfg = flags.resolve();
  const mca::FeatureGrid grid = mca::io::read_features_file(features_path);
  const mca::MixtureParams mix = mca::io::read_mixture_file(mixture_path);
  const mca::RBFBasis basis = mca::make_grid_basis(cfg.basis_side, cfg.basis_var);
  const mca::FeatureFunction f = mca::fit_ridge(grid, basis, cfg.ridge);
  const mca::ContextVector ctx = mca::multimodal_context(f, mix);

  mca::io::JsonWriter w;
  w.begin_object();
  w.key("dim");
  w.value((std::int64_t)f.dim);
  w.key("context");
  write_context(w, ctx);
  if (with_grad) {
    std::vector<double> upstream(f.dim, 1.0);
    if (!upstream_path.empty()) {
      std::ifstream in(upstream_path, std::ios::binary);
      if (!in) throw mca::parse_error("cannot open '" + upstream_path + "'");
      const auto rows = mca::io::csv::parse_rows(in, upstream_path);
      if (rows.size() == 1 && rows[0].size() == f.dim) upstream = rows[0];
      else if (rows.size() == f.dim && rows[0].size() == 1) {
        for (std::size_t d = 0; d < f.dim; ++d) upstream[d] = rows[d][0];
      } else {
        throw mca::parse_error(upstream_path + ": expected " + std::to_string(f.dim) +
                               " upstream values");
      }
    }
    w.key("gradients");
    write_gradients(w, mca::multimodal_backward(f, mix, upstream));
  }
  w.end_object();
  emit(out, w.str());
  return 0;
}

int cmd_render(const std::string& mixture_path, int height, int width,
               const std::string& out_path, const std::string& format) {
  if (height < 1 || width < 1) throw mca::parse_error("render: grid dimensions must be >= 1");
  const mca::MixtureParams mix = mca::io::read_mixture_file(mixture_path);
  const mca::DensityGrid grid = mca::discretize(mix, (std::size_t)height, (std::size_t)width);
  std::string fmt = format;
  if (fmt.empty()) {
    const std::string ext = fs::path(out_path).extension().string();
    fmt = ext == ".csv" ? "csv" : "pgm";
  }
  if (fmt == "csv") mca::io::write_file(out_path, mca::io::density_to_csv(grid));
  else if (fmt == "pgm") mca::io::write_file(out_path, mca::io::density_to_pgm(grid));
  else throw mca::parse_error("render: unknown format '" + fmt + "'");
  return 0;
}

int cmd_compare(const std::string& reference_path, const std::vector<std::string>& candidate_paths,
                bool tsv, const std::string& out) {
  const mca::DensityGrid reference = mca::io::read_density_file(reference_path);
  std::vector<std::pair<std::string, mca::DensityGrid>> candidates;
  candidates.reserve(candidate_paths.size());
  for (const std::string& p : candidate_paths)
    candidates.emplace_back(p, mca::io::read_density_file(p));
  const std::vector<mca::ModelComparison> ranked = mca::compare_models(reference, candidates);

  if (tsv) {
    std::string payload = "name\tjs\n";
    for (const auto& r : ranked)
      payload += r.name + "\t" + mca::io::format_double(r.js) + "\n";
    if (out.empty()) std::cout << payload;
    else mca::io::write_file(out, payload);
    return 0;
  }
  mca::io::JsonWriter w;
  w.begin_object();
  w.key("reference");
  w.value(std::string_view(reference_path));
  w.key("ranking");
  w.begin_array();
  for (const auto& r : ranked) {
    w.begin_object();
    w.key("name");
    w.value(std::string_view(r.name));
    w.key("js");
    w.value(r.js);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  emit(out, w.str());
  return 0;
}

int cmd_demo(const Flags& flags, std::string out_dir, int trials, bool train_time_k) {
  const RunConfig cfg = flags.resolve();
  if (trials < 1) throw mca::parse_error("demo: --trials must be >= 1");
  if (out_dir.empty()) out_dir = "demo_out";
  fs::create_directories(out_dir);

  mca::io::JsonWriter summary;
  summary.begin_object();
  summary.key("tool_version");
  summary.value(std::string_view(tool_version));
  summary.key("config");
  write_config(summary, cfg);
  summary.key("trials_per_k");
  summary.value(trials);
  summary.key("per_k");
  summary.begin_array();

  for (int true_k = 1; true_k <= cfg.k_max; ++true_k) {
    const std::string dir = out_dir + "/k" + std::to_string(true_k);
    fs::create_directories(dir);

    int recovered = 0;
    mca::SelectionReport first_report;
    mca::synthetic::BlobScene first_scene;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed =
          mca::detail::derive_seed(cfg.seed, (std::uint64_t)(true_k * 100003 + t));
      mca::SelectionConfig sel;
      sel.k_max = cfg.k_max;
      sel.lambda = cfg.lambda;
      sel.restarts = cfg.restarts;
      sel.max_iters = cfg.iters;
      const mca::synthetic::RecoveryTrial trial =
          mca::synthetic::recovery_trial(true_k, trial_seed, sel, cfg.height, cfg.width);
      recovered += trial.chosen_k == true_k;
      if (t == 0) {
        first_report = trial.report;
        first_scene = mca::synthetic::make_blob_scene(true_k, trial_seed, cfg.height, cfg.width);
      }
    }

    // artifacts for the first trial of each k
    std::string weights_csv = "u,v,w\n";
    for (int i = 0; i < first_scene.height; ++i)
      for (int j = 0; j < first_scene.width; ++j) {
        weights_csv += mca::io::format_double(((double)j + 0.5) / first_scene.width);
        weights_csv += ',';
        weights_csv += mca::io::format_double(((double)i + 0.5) / first_scene.height);
        weights_csv += ',';
        weights_csv += mca::io::format_double(
            first_scene.weights[(std::size_t)i * first_scene.width + j]);
        weights_csv += '\n';
      }
    mca::io::write_file(dir + "/weights.csv", weights_csv);
    mca::io::write_file(dir + "/fit.json",
                        fit_bundle_json(first_report, cfg, "weights.csv", weights_csv) + "\n");
    mca::io::write_file(dir + "/mixture.json",
                        mca::io::mixture_to_json(first_report.chosen_params) + "\n");

    const mca::WeightedDataset data = mca::synthetic::to_dataset(first_scene);
    const mca::DensityGrid reference((std::size_t)first_scene.height,
                                     (std::size_t)first_scene.width, first_scene.weights);
    const mca::DensityGrid fitted =
        mca::discretize(first_report.chosen_params, (std::size_t)first_scene.height,
                        (std::size_t)first_scene.width);
    const mca::Gaussian2 mm = mca::moment_match(data);
    mca::MixtureParams unimodal;
    unimodal.components.push_back({1.0, mm.mean, mm.cov});
    const mca::DensityGrid unimodal_grid = mca::discretize(
        unimodal, (std::size_t)first_scene.height, (std::size_t)first_scene.width);

    mca::io::write_file(dir + "/attention.pgm", mca::io::density_to_pgm(fitted));
    mca::io::write_file(dir + "/reference.csv", mca::io::density_to_csv(reference));
    mca::io::write_file(dir + "/attention.csv", mca::io::density_to_csv(fitted));
    mca::io::write_file(dir + "/unimodal.csv", mca::io::density_to_csv(unimodal_grid));

    const auto ranked = mca::compare_models(
        reference, {{"multimodal", fitted}, {"unimodal", unimodal_grid}});
    mca::io::JsonWriter cw;
    cw.begin_object();
    cw.key("reference");
    cw.value(std::string_view("reference.csv"));
    cw.key("ranking");
    cw.begin_array();
    for (const auto& r : ranked) {
      cw.begin_object();
      cw.key("name");
      cw.value(std::string_view(r.name));
      cw.key("js");
      cw.value(r.js);
      cw.end_object();
    }
    cw.end_array();
    cw.end_object();
    mca::io::write_file(dir + "/compare.json", cw.str() + "\n");

    // forward pass over synthetic features
    const mca::FeatureGrid features = mca::synthetic::make_demo_features(
        4, first_scene.height, first_scene.width,
        mca::detail::derive_seed(cfg.seed, (std::uint64_t)(0xfea0 + true_k)));
    const mca::RBFBasis basis = mca::make_grid_basis(cfg.basis_side, cfg.basis_var);
    const mca::FeatureFunction f = mca::fit_ridge(features, basis, cfg.ridge);
    const mca::ContextVector ctx = mca::multimodal_context(f, first_report.chosen_params);
    mca::io::JsonWriter xw;
    write_context(xw, ctx);
    mca::io::write_file(dir + "/context.json", xw.str() + "\n");

    double js_multi = 0.0, js_uni = 0.0;
    for (const auto& r : ranked) {
      if (r.name == "multimodal") js_multi = r.js;
      if (r.name == "unimodal") js_uni = r.js;
    }
    summary.begin_object();
    summary.key("true_k");
    summary.value(true_k);
    summary.key("chosen_k");
    summary.value(first_report.chosen_k);
    summary.key("recovered");
    summary.value(recovered);
    summary.key("trials");
    summary.value(trials);
    summary.key("js_multimodal");
    summary.value(js_multi);
    summary.key("js_unimodal");
    summary.value(js_uni);
    summary.end_object();
  }
  summary.end_array();

  if (train_time_k) {
    // training-time policy: component count drawn uniformly from {1..k_max}
    mca::detail::Rng rng(mca::detail::derive_seed(cfg.seed, 0x7141));
    summary.key("train_time_k_samples");
    summary.begin_array();
    for (int t = 0; t < trials; ++t)
      summary.value((std::int64_t)(1 + (int)rng.index((std::size_t)cfg.k_max)));
    summary.end_array();
  }

  summary.end_object();
  mca::io::write_file(out_dir + "/summary.json", summary.str() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal continuous attention toolkit"};
  app.require_subcommand(1);

  // fit
  CLI::App* fit = app.add_subcommand("fit", "fit a mixture attention density to a weight map");
  std::string fit_weights, fit_out;
  Flags fit_flags;
  fit->add_option("weights", fit_weights, "weights CSV (u,v,w) or JSON grid")->required();
  fit_flags.attach(fit);
  fit->add_option("--out", fit_out, "output path (default: stdout)");

  // select
  CLI::App* select = app.add_subcommand("select", "run component-count selection only");
  std::string sel_weights, sel_out;
  Flags sel_flags;
  select->add_option("weights", sel_weights, "weights CSV (u,v,w) or JSON grid")->required();
  sel_flags.attach(select);
  select->add_option("--out", sel_out, "output path (default: stdout)");

  // forward
  CLI::App* forward = app.add_subcommand("forward", "compute the context vector for a mixture");
  std::string fwd_features, fwd_mixture, fwd_out, fwd_upstream;
  bool fwd_grad = false;
  Flags fwd_flags;
  forward->add_option("features", fwd_features, "features CSV (u,v,f1..fD) or JSON descriptor")
      ->required();
  forward->add_option("mixture", fwd_mixture, "mixture JSON")->required();
  fwd_flags.attach(forward);
  forward->add_flag("--grad", fwd_grad, "emit analytic gradients");
  forward->add_option("--upstream", fwd_upstream, "CSV with D upstream values (default: ones)");
  forward->add_option("--out", fwd_out, "output path (default: stdout)");

  // render
  CLI::App* render = app.add_subcommand("render", "discretize a mixture to PGM/CSV");
  std::string rnd_mixture, rnd_out, rnd_format;
  int rnd_h = 0, rnd_w = 0;
  std::string rnd_config;
  render->add_option("mixture", rnd_mixture, "mixture JSON")->required();
  render->add_option("height", rnd_h, "grid height")->required();
  render->add_option("width", rnd_w, "grid width")->required();
  render->add_option("out", rnd_out, "output file (.pgm or .csv)")->required();
  render->add_option("--format", rnd_format, "pgm or csv (default: by extension)");
  render->add_option("--config", rnd_config, "JSON config file");

  // compare
  CLI::App* compare = app.add_subcommand("compare", "rank candidate maps by JS divergence");
  std::string cmp_reference, cmp_out;
  std::vector<std::string> cmp_candidates;
  bool cmp_tsv = false;
  compare->add_option("reference", cmp_reference, "reference density CSV")->required();
  compare->add_option("candidates", cmp_candidates, "candidate density CSVs")
      ->required()
      ->expected(-1);
  compare->add_flag("--tsv", cmp_tsv, "emit TSV instead of JSON");
  compare->add_option("--out", cmp_out, "output path (default: stdout)");
  std::string cmp_config;
  compare->add_option("--config", cmp_config, "JSON config file");

  // demo
  CLI::App* demo = app.add_subcommand("demo", "run the synthetic end-to-end pipeline");
  std::string demo_out;
  int demo_trials = 1;
  bool demo_train_k = false;
  Flags demo_flags;
  demo_flags.attach(demo);
  demo->add_option("--out", demo_out, "output directory (default: demo_out)");
  demo->add_option("--trials", demo_trials, "recovery trials per true k");
  demo->add_flag("--train-time-k", demo_train_k,
                 "also sample component counts uniformly (training-time policy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_weights, fit_flags, fit_out);
    if (select->parsed()) return cmd_select(sel_weights, sel_flags, sel_out);
    if (forward->parsed())
      return cmd_forward(fwd_features, fwd_mixture, fwd_flags, fwd_out, fwd_grad, fwd_upstream);
    if (render->parsed()) {
      if (!rnd_config.empty()) (void)load_config_file(rnd_config);
      return cmd_render(rnd_mixture, rnd_h, rnd_w, rnd_out, rnd_format);
    }
    if (compare->parsed()) {
      if (!cmp_config.empty()) (void)load_config_file(cmp_config);
      return cmd_compare(cmp_reference, cmp_candidates, cmp_tsv, cmp_out);
    }
    if (demo->parsed()) return cmd_demo(demo_flags, demo_out, demo_trials, demo_train_k);
  } catch (const mca::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mca::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
