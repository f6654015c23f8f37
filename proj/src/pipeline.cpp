#include "graphon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "graphon/json_io.hpp"
#include "graphon/parallel.hpp"
#include "graphon/rng.hpp"

namespace graphon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kEpsilonMin = 0.01;
constexpr double kEpsilonMax = 0.5;
constexpr int kDumpVersion = 1;

const std::vector<std::pair<Stage, std::string>>& stage_names() {
  static const std::vector<std::pair<Stage, std::string>> names{
      {Stage::Config, "config"},     {Stage::Generate, "generate"}, {Stage::Spectrum, "spectrum"},
      {Stage::Moments, "moments"},   {Stage::Fit, "fit"},           {Stage::Estimate, "estimate"},
      {Stage::Evaluate, "evaluate"}};
  return names;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

std::string format_h(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", h);
  return buf;
}

}  // namespace

std::string stage_name(Stage stage) {
  for (const auto& [s, name] : stage_names())
    if (s == stage) return name;
  return "unknown";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  for (const auto& [s, n] : stage_names())
    if (n == name) return s;
  return std::nullopt;
}

void PipelineConfig::validate() const {
  if (n < 100) throw InvalidArgument("n must be at least 100");
  if (!(e0 > 0.0)) throw InvalidArgument("e0 must be positive");
  if (M && !(*M > 0.0)) throw InvalidArgument("M must be positive");
  if (epsilon_override && !(*epsilon_override > 0.0 && *epsilon_override < 1.0))
    throw InvalidArgument("epsilon_override must lie in (0, 1)");
  if (e1_override && !(*e1_override > 0.0)) throw InvalidArgument("e1_override must be positive");
  if (N_override && *N_override < 1) throw InvalidArgument("N_override must be positive");
  if (delta_override && !(*delta_override > 0.0)) throw InvalidArgument("delta_override must be positive");
  if (m_override && *m_override < 1) throw InvalidArgument("m_override must be positive");
  if (K_cap < 1) throw InvalidArgument("K_cap must be positive");
  if (N_cap < 1) throw InvalidArgument("N_cap must be positive");
  if (!(delta_floor > 0.0)) throw InvalidArgument("delta_floor must be positive");
  if (density_grid < 32) throw InvalidArgument("density_grid must be at least 32");
  if (eval_grid < 1) throw InvalidArgument("eval_grid must be positive");
  if (!(h > 0.0)) throw InvalidArgument("h must be positive");
  for (double x : h_ladder)
    if (!(x > 0.0)) throw InvalidArgument("h_ladder entries must be positive");
  if (!model) throw InvalidArgument("config has no model");
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> known{
      "n",           "seed",         "e0",         "M",           "epsilon_override", "e1_override",
      "N_override",  "delta_override", "m_override", "K_cap",     "N_cap",            "delta_floor",
      "density_grid", "eval_grid",   "spectrum_tol", "max_restarts", "ihara_bass",    "moment_table_cap",
      "h",           "h_ladder",     "deterministic", "threads",  "model",            "out_dir"};
  if (!j.is_object()) throw ParseError("config", "expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ParseError("config." + key, "unknown field");
  PipelineConfig cfg;
  try {
    cfg.n = j.value("n", cfg.n);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.e0 = j.value("e0", cfg.e0);
    read_optional(j, "M", cfg.M);
    read_optional(j, "epsilon_override", cfg.epsilon_override);
    read_optional(j, "e1_override", cfg.e1_override);
    read_optional(j, "N_override", cfg.N_override);
    read_optional(j, "delta_override", cfg.delta_override);
    read_optional(j, "m_override", cfg.m_override);
    cfg.K_cap = j.value("K_cap", cfg.K_cap);
    cfg.N_cap = j.value("N_cap", cfg.N_cap);
    cfg.delta_floor = j.value("delta_floor", cfg.delta_floor);
    cfg.density_grid = j.value("density_grid", cfg.density_grid);
    cfg.eval_grid = j.value("eval_grid", cfg.eval_grid);
    cfg.spectrum_tol = j.value("spectrum_tol", cfg.spectrum_tol);
    cfg.max_restarts = j.value("max_restarts", cfg.max_restarts);
    cfg.ihara_bass = j.value("ihara_bass", cfg.ihara_bass);
    cfg.moment_table_cap = j.value("moment_table_cap", cfg.moment_table_cap);
    cfg.h = j.value("h", cfg.h);
    cfg.h_ladder = j.value("h_ladder", cfg.h_ladder);
    cfg.deterministic = j.value("deterministic", cfg.deterministic);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError("config", e.what());
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.is_string()) {
      fs::path p = m.get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.model_path = p;
      cfg.model = step_graphon_from_json(read_json_file(p));
    } else {
      cfg.model = step_graphon_from_json(m);
    }
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

json canonical_config(const PipelineConfig& cfg) {
  json model = nullptr;
  if (cfg.model) to_json(model, *cfg.model);
  return json{{"n", cfg.n},
              {"seed", cfg.seed},
              {"e0", cfg.e0},
              {"M", optional_json(cfg.M)},
              {"epsilon_override", optional_json(cfg.epsilon_override)},
              {"e1_override", optional_json(cfg.e1_override)},
              {"N_override", optional_json(cfg.N_override)},
              {"delta_override", optional_json(cfg.delta_override)},
              {"m_override", optional_json(cfg.m_override)},
              {"K_cap", cfg.K_cap},
              {"N_cap", cfg.N_cap},
              {"delta_floor", cfg.delta_floor},
              {"density_grid", cfg.density_grid},
              {"eval_grid", cfg.eval_grid},
              {"spectrum_tol", cfg.spectrum_tol},
              {"max_restarts", cfg.max_restarts},
              {"ihara_bass", cfg.ihara_bass},
              {"moment_table_cap", cfg.moment_table_cap},
              {"h", cfg.h},
              {"model", model}};
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(cfg).dump())));
  return buf;
}

double epsilon_formula(std::size_t n) {
  return 1.0 / std::log(std::log(static_cast<double>(n)));
}

double N_formula_log10(std::size_t K, double M, double e0) {
  return (6.0 * static_cast<double>(K) + 30.0) * std::log10(2.0 * static_cast<double>(K) * M / e0);
}

double delta_formula(double e0, std::size_t K, double lambda1, double M) {
  return std::sqrt(e0 / (64.0 * static_cast<double>(K) * lambda1 * M * M));
}

RunState prepare(const PipelineConfig& cfg) {
  cfg.validate();
  RunState state;
  state.config_hash = config_hash(cfg);
  state.model = cfg.h == 1.0 ? *cfg.model : scale(*cfg.model, cfg.h);
  state.truth = spectral_decompose(*cfg.model);
  state.M = cfg.M ? *cfg.M * cfg.h : state.model.bound();
  return state;
}

namespace {

fs::path dump_path(const PipelineConfig& cfg, const std::string& name) { return cfg.out_dir / name; }

json stamp(const RunState& state, json j) {
  j["version"] = kDumpVersion;
  j["config_hash"] = state.config_hash;
  return j;
}

json load_checked(const PipelineConfig& cfg, const RunState& state, const std::string& name) {
  const fs::path path = dump_path(cfg, name);
  if (!fs::exists(path)) throw Error("missing stage input " + path.string());
  json j = read_json_file(path);
  const std::string found = j.value("config_hash", std::string{});
  if (found != state.config_hash)
    throw ConfigMismatch(path.string() + " was written under config hash '" + found +
                         "', current config hash is " + state.config_hash);
  return j;
}

json complex_list(const std::vector<std::complex<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back({v.real(), v.imag()});
  return out;
}

// ---- generate ----

void do_generate(const PipelineConfig& cfg, RunState& state) {
  SampledGraph sample = sample_graph(state.model, cfg.n, derive_seed(cfg.seed, "generate"));
  state.epsilon = cfg.epsilon_override
                      ? *cfg.epsilon_override
                      : std::clamp(epsilon_formula(cfg.n), kEpsilonMin, kEpsilonMax);
  EdgeSplit split = split_edges(sample.graph, state.epsilon, derive_seed(cfg.seed, "split"));
  state.mean_degree = degree_stats(sample.graph).mean;
  state.graph = std::move(sample.graph);
  state.latents = std::move(sample.latents);
  state.g1 = std::move(split.g1);
  state.g2 = std::move(split.g2);
  if (cfg.out_dir.empty()) return;
  write_edge_list(*state.graph, dump_path(cfg, "graph.txt"));
  write_latents(state.latents, dump_path(cfg, "latents.txt"));
  write_edge_list(*state.g1, dump_path(cfg, "g1.txt"));
  write_edge_list(*state.g2, dump_path(cfg, "g2.txt"));
  write_json_file(stamp(state, json{{"n", cfg.n},
                                    {"edges", state.graph->num_edges()},
                                    {"g1_edges", state.g1->num_edges()},
                                    {"g2_edges", state.g2->num_edges()},
                                    {"epsilon", state.epsilon},
                                    {"epsilon_formula", epsilon_formula(cfg.n)},
                                    {"mean_degree", state.mean_degree}}),
                  dump_path(cfg, "generate.json"));
}

void load_generate_meta(const PipelineConfig& cfg, RunState& state) {
  const json j = load_checked(cfg, state, "generate.json");
  state.epsilon = j.at("epsilon").get<double>();
  state.mean_degree = j.at("mean_degree").get<double>();
}

// ---- spectrum ----

json spectrum_json(const RunState& state) {
  const NbSpectrum& s = *state.spectrum;
  return stamp(state, json{{"K", s.K},
                           {"lambdas", s.lambdas},
                           {"lambdas_rescaled", state.lambdas},
                           {"e1", s.e1},
                           {"cutoff", s.cutoff},
                           {"residuals", s.residuals},
                           {"computed_values", complex_list(s.computed_values)},
                           {"near_multiplicity", s.near_multiplicity},
                           {"matvecs", s.matvecs},
                           {"restarts", s.restarts}});
}

void do_spectrum(const PipelineConfig& cfg, RunState& state) {
  if (!state.g1) throw Error("spectrum stage needs G1");
  SpectrumOptions opt;
  opt.e1_override = cfg.e1_override;
  opt.tol = cfg.spectrum_tol;
  opt.max_restarts = cfg.max_restarts;
  opt.seed = derive_seed(cfg.seed, "spectrum");
  opt.k_cap = cfg.K_cap;
  opt.use_ihara_bass = cfg.ihara_bass;
  const OrientedEdgeSpace space(*state.g1);
  state.spectrum = top_spectrum(space, *state.g1, opt);
  // G1 keeps each edge with probability 1 - epsilon, so its informative
  // eigenvalues sit near (1 - epsilon) mu_k.
  state.lambdas.clear();
  for (double l : state.spectrum->lambdas) state.lambdas.push_back(l / (1.0 - state.epsilon));
  if (state.spectrum->near_multiplicity)
    state.warnings.push_back("near-multiple informative eigenvalues; eigenvectors may mix");
  if (state.spectrum->K == 0)
    state.warnings.push_back("no eigenvalue clears sqrt(lambda_1) + e1; emitting the constant estimate");
  if (cfg.out_dir.empty()) return;
  write_json_file(spectrum_json(state), dump_path(cfg, "spectrum.json"));
  write_aggregates(state.spectrum->vertex_aggregates, dump_path(cfg, "aggregates.bin"));
}

void load_spectrum(const PipelineConfig& cfg, RunState& state, bool with_aggregates) {
  const json j = load_checked(cfg, state, "spectrum.json");
  NbSpectrum s;
  s.K = j.at("K").get<std::size_t>();
  s.lambdas = j.at("lambdas").get<std::vector<double>>();
  s.e1 = j.at("e1").get<double>();
  s.cutoff = j.at("cutoff").get<double>();
  s.residuals = j.at("residuals").get<std::vector<double>>();
  for (const auto& v : j.at("computed_values"))
    s.computed_values.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  s.near_multiplicity = j.at("near_multiplicity").get<bool>();
  s.matvecs = j.at("matvecs").get<std::size_t>();
  s.restarts = j.at("restarts").get<std::size_t>();
  if (with_aggregates) s.vertex_aggregates = read_aggregates(dump_path(cfg, "aggregates.bin"), cfg.n, s.K);
  state.lambdas = j.at("lambdas_rescaled").get<std::vector<double>>();
  state.spectrum = std::move(s);
}

// ---- moments ----

unsigned effective_N(const PipelineConfig& cfg, std::size_t K, double M) {
  if (cfg.N_override) return *cfg.N_override;
  const double log10_formula = N_formula_log10(K, M, cfg.e0);
  if (!(log10_formula < std::log10(static_cast<double>(cfg.N_cap)))) return cfg.N_cap;
  return std::max(1u, static_cast<unsigned>(std::floor(std::pow(10.0, log10_formula))));
}

void do_moments(const PipelineConfig& cfg, RunState& state) {
  const std::size_t K = state.K();
  state.table.reset();
  json dump;
  if (K == 0) {
    state.N = 0;
    dump = json{{"skipped", true}, {"reason", "K = 0"}};
  } else {
    if (!state.g2) throw Error("moments stage needs G2");
    state.N = effective_N(cfg, K, state.M);
    MomentTableOptions opt;
    opt.max_entries = cfg.moment_table_cap;
    state.table = moment_table(*state.g2, state.spectrum->vertex_aggregates, state.lambdas,
                               state.epsilon, state.N, opt);
    if (!state.table->valid)
      state.warnings.push_back("some P_kk <= 0; all P_alpha set to 0 and the constant estimate is used");
    json table;
    to_json(table, *state.table);
    dump = json{{"skipped", false},
                {"N", state.N},
                {"N_formula_log10", N_formula_log10(K, state.M, cfg.e0)},
                {"N_cap", cfg.N_cap},
                {"table", table}};
  }
  if (!cfg.out_dir.empty()) write_json_file(stamp(state, dump), dump_path(cfg, "moments.json"));
}

void load_moments(const PipelineConfig& cfg, RunState& state) {
  const json j = load_checked(cfg, state, "moments.json");
  state.table.reset();
  state.N = 0;
  if (j.at("skipped").get<bool>()) return;
  state.N = j.at("N").get<unsigned>();
  state.table = moment_table_from_json(j.at("table"));
}

// ---- fit ----

std::size_t density_resolution(const PipelineConfig& cfg, std::size_t K) {
  // A 128^3 grid with cell-wise Gauss rules is too slow for a desk run.
  return K <= 2 ? cfg.density_grid : std::min<std::size_t>(cfg.density_grid, 32);
}

void do_fit(const PipelineConfig& cfg, RunState& state) {
  state.fit.reset();
  json dump;
  if (!state.table || !state.table->valid) {
    dump = json{{"skipped", true}};
  } else {
    const std::size_t K = state.table->K;
    const double lambda1 = state.lambdas.at(0);
    const double formula = delta_formula(cfg.e0, K, lambda1, state.M);
    state.delta = cfg.delta_override ? *cfg.delta_override : std::max(formula, cfg.delta_floor);
    state.kappa = 2.0 * state.M / std::sqrt(lambda1);
    const MollifierMoments mm = mollifier_moments(state.delta, state.table->N);
    const auto mollified = mollify_moments(*state.table, mm);
    const LegendreBasis basis = legendre_basis(state.table->N, state.kappa);
    DensityFit fit = fit_density(mollified, basis, K, state.delta);
    l1_norm_plus(fit, density_resolution(cfg, K));
    if (fit.accuracy_warning)
      state.warnings.push_back("L1 norm of h_N^+ moved by more than 1e-4 under grid refinement");
    json f;
    to_json(f, fit);
    dump = json{{"skipped", false}, {"delta_formula", formula}, {"delta_floor", cfg.delta_floor}, {"fit", f}};
    state.fit = std::move(fit);
  }
  if (!cfg.out_dir.empty()) write_json_file(stamp(state, dump), dump_path(cfg, "fit.json"));
}

void load_fit(const PipelineConfig& cfg, RunState& state) {
  const json j = load_checked(cfg, state, "fit.json");
  state.fit.reset();
  if (j.at("skipped").get<bool>()) return;
  state.fit = density_fit_from_json(j.at("fit"));
  state.delta = state.fit->delta;
  state.kappa = state.fit->kappa;
}

// ---- estimate ----

void do_estimate(const PipelineConfig& cfg, RunState& state) {
  if (!state.fit) {
    state.estimate = constant_estimate(state.mean_degree);
    state.sample_report = {};
  } else {
    const std::size_t m = cfg.m_override ? *cfg.m_override : cfg.n;
    RowMatrix Z = sample_density(*state.fit, m, derive_seed(cfg.seed, "estimate"), &state.sample_report);
    if (state.sample_report.used_grid)
      state.warnings.push_back("rejection acceptance below 1e-3; sampled from the grid CDF");
    std::vector<double> lambdas(state.lambdas.begin(),
                                state.lambdas.begin() + static_cast<std::ptrdiff_t>(state.fit->K));
    state.estimate = assemble(std::move(Z), std::move(lambdas));
    state.estimate->kappa = state.fit->kappa;
  }
  state.estimate->seed = cfg.seed;
  state.estimate->config_hash = state.config_hash;
  if (!cfg.out_dir.empty()) write_estimate(*state.estimate, dump_path(cfg, "estimate.json"));
}

void load_estimate(const PipelineConfig& cfg, RunState& state) {
  GraphonEstimate est = read_estimate(dump_path(cfg, "estimate.json"));
  if (est.config_hash != state.config_hash)
    throw ConfigMismatch("estimate.json was written under config hash '" + est.config_hash +
                         "', current config hash is " + state.config_hash);
  state.estimate = std::move(est);
}

// ---- evaluate ----

void do_evaluate(const PipelineConfig& cfg, RunState& state) {
  if (!state.estimate) throw Error("evaluate stage needs an estimate");
  GraphonEstimate est = *state.estimate;
  for (double& l : est.lambdas) l /= cfg.h;
  const StepGraphon& truth_kernel = *cfg.model;
  state.alignment = delta2_upper(est, state.truth, cfg.eval_grid);
  state.l2 = l2_distance_grid([&](double x, double y) { return est(x, y); },
                              [&](double x, double y) { return truth_kernel(x, y); }, cfg.eval_grid);
  if (state.l2->resolution_warning)
    state.warnings.push_back("L2 grid distance is not resolved at the evaluation grid");
  state.fraction_negative = fraction_negative(est, cfg.eval_grid);
  state.diagnostics.reset();
  if (state.K() > 0 && state.spectrum->vertex_aggregates.rows() > 0 && !state.latents.latents.empty())
    state.diagnostics = diagnostics_C(state.spectrum->vertex_aggregates, state.latents, state.truth);

  json C = nullptr;
  json contraction = nullptr;
  json diagonal = nullptr;
  if (state.diagnostics) {
    C = json::array();
    for (Eigen::Index i = 0; i < state.diagnostics->C.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < state.diagnostics->C.cols(); ++j) row.push_back(state.diagnostics->C(i, j));
      C.push_back(row);
    }
    contraction = state.diagnostics->contraction;
    diagonal = state.diagnostics->diagonal;
  }
  json runtime = json::object();
  for (const auto& [name, secs] : state.stage_seconds) runtime[name] = secs;
  state.metrics = stamp(state, json{{"K", est.K()},
                                    {"degenerate", est.degenerate},
                                    {"h", cfg.h},
                                    {"delta2_upper", state.alignment->delta2_upper},
                                    {"sign_pattern", state.alignment->sign_pattern},
                                    {"key_order", state.alignment->key_order},
                                    {"method", to_string(state.alignment->method)},
                                    {"grid", state.alignment->grid},
                                    {"l2_grid", state.l2->value},
                                    {"l2_grid_refined", state.l2->refined},
                                    {"C_matrix", C},
                                    {"C_contraction", contraction},
                                    {"C_diagonal", diagonal},
                                    {"fraction_negative_Qhat", state.fraction_negative},
                                    {"runtime_sec", runtime}});
  if (cfg.out_dir.empty()) return;
  write_json_file(state.metrics, dump_path(cfg, "metrics.json"));
  write_estimate_grid_csv(est, std::min<std::size_t>(cfg.eval_grid, 128), dump_path(cfg, "estimate_grid.csv"));
}

void load_evaluate_inputs(const PipelineConfig& cfg, RunState& state) {
  load_generate_meta(cfg, state);
  load_spectrum(cfg, state, true);
  const fs::path latents = dump_path(cfg, "latents.txt");
  if (fs::exists(latents)) state.latents = read_latents(latents);
  load_estimate(cfg, state);
}

json build_manifest(const PipelineConfig& cfg, const RunState& state) {
  const std::size_t K = state.K();
  json stages = json::array();
  for (const auto& [name, secs] : state.stage_seconds)
    stages.push_back(json{{"name", name}, {"wall_time_sec", secs}});
  const double lambda1 = state.lambdas.empty() ? 0.0 : state.lambdas[0];
  json params{
      {"epsilon",
       {{"formula", epsilon_formula(cfg.n)},
        {"clamp", {kEpsilonMin, kEpsilonMax}},
        {"override", optional_json(cfg.epsilon_override)},
        {"effective", state.epsilon}}},
      {"e1",
       {{"formula", default_e1(cfg.n)},
        {"override", optional_json(cfg.e1_override)},
        {"effective", state.spectrum ? state.spectrum->e1 : default_e1(cfg.n)}}},
      {"lambda_rescale", 1.0 / (1.0 - state.epsilon)},
      {"M", state.M},
      {"m", {{"formula", cfg.n}, {"override", optional_json(cfg.m_override)},
             {"effective", state.estimate ? state.estimate->m : 0}}}};
  if (K > 0) {
    params["N"] = {{"formula_log10", N_formula_log10(K, state.M, cfg.e0)},
                   {"cap", cfg.N_cap},
                   {"override", optional_json(cfg.N_override)},
                   {"effective", state.N}};
    params["delta"] = {{"formula", delta_formula(cfg.e0, K, lambda1, state.M)},
                       {"floor", cfg.delta_floor},
                       {"override", optional_json(cfg.delta_override)},
                       {"effective", state.fit ? state.delta : 0.0}};
    params["kappa"] = {{"formula", 2.0 * state.M / std::sqrt(lambda1)}, {"effective", state.kappa}};
  }
  return stamp(state, json{{"config", canonical_config(cfg)},
                           {"parameters", params},
                           {"K", K},
                           {"lambdas", state.lambdas},
                           {"degenerate", state.estimate ? state.estimate->degenerate : true},
                           {"delta2_upper", state.alignment ? json(state.alignment->delta2_upper) : json(nullptr)},
                           {"warnings", state.warnings},
                           {"stages", stages}});
}

}  // namespace

void run_stage(Stage stage, const PipelineConfig& cfg, RunState& state) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
    switch (stage) {
      case Stage::Config: break;
      case Stage::Generate: do_generate(cfg, state); break;
      case Stage::Spectrum: do_spectrum(cfg, state); break;
      case Stage::Moments: do_moments(cfg, state); break;
      case Stage::Fit: do_fit(cfg, state); break;
      case Stage::Estimate: do_estimate(cfg, state); break;
      case Stage::Evaluate: do_evaluate(cfg, state); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  state.stage_seconds.emplace_back(stage_name(stage), elapsed.count());
}

void load_stage_inputs(Stage stage, const PipelineConfig& cfg, RunState& state) {
  if (cfg.out_dir.empty()) throw InvalidArgument("staged execution needs an output directory");
  switch (stage) {
    case Stage::Config:
    case Stage::Generate: break;
    case Stage::Spectrum:
      load_generate_meta(cfg, state);
      state.g1 = read_edge_list(dump_path(cfg, "g1.txt"));
      break;
    case Stage::Moments:
      load_generate_meta(cfg, state);
      load_spectrum(cfg, state, true);
      state.g2 = read_edge_list(dump_path(cfg, "g2.txt"));
      break;
    case Stage::Fit:
      load_generate_meta(cfg, state);
      load_spectrum(cfg, state, false);
      load_moments(cfg, state);
      break;
    case Stage::Estimate:
      load_generate_meta(cfg, state);
      load_spectrum(cfg, state, false);
      load_fit(cfg, state);
      break;
    case Stage::Evaluate: load_evaluate_inputs(cfg, state); break;
  }
}

RunState run_pipeline(const PipelineConfig& cfg) {
  RunState state;
  try {
    state = prepare(cfg);
  } catch (const std::exception& e) {
    throw StageError(Stage::Config, e.what());
  }
  set_thread_count(cfg.deterministic ? 1 : cfg.threads);
  for (Stage s : {Stage::Generate, Stage::Spectrum, Stage::Moments, Stage::Fit, Stage::Estimate,
                  Stage::Evaluate})
    run_stage(s, cfg, state);
  state.manifest = build_manifest(cfg, state);
  if (!cfg.out_dir.empty()) write_json_file(state.manifest, dump_path(cfg, "manifest.json"));
  return state;
}

RunState run_scaled_single(const PipelineConfig& cfg, double h) {
  PipelineConfig scaled = cfg;
  scaled.h = h;
  if (!cfg.out_dir.empty()) scaled.out_dir = cfg.out_dir / ("h_" + format_h(h));
  return run_pipeline(scaled);
}

std::vector<ScaledRow> run_scaled(const PipelineConfig& cfg) {
  std::vector<ScaledRow> rows;
  json table = json::array();
  for (double h : cfg.h_ladder) {
    const RunState state = run_scaled_single(cfg, h);
    ScaledRow row;
    row.h = h;
    row.K = state.K();
    row.delta2_upper = state.alignment->delta2_upper;
    row.l2_grid = state.l2->value;
    row.degenerate = state.estimate->degenerate;
    rows.push_back(row);
    table.push_back(json{{"h", h},
                         {"K", row.K},
                         {"delta2_upper", row.delta2_upper},
                         {"l2_grid", row.l2_grid},
                         {"degenerate", row.degenerate}});
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_json_file(json{{"version", kDumpVersion}, {"config_hash", config_hash(cfg)}, {"rows", table}},
                    cfg.out_dir / "scaled.json");
  }
  return rows;
}

json strip_timing(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [key, value] : j.items()) {
      if (key == "wall_time_sec" || key == "runtime_sec") continue;
      out[key] = strip_timing(value);
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(strip_timing(v));
    return out;
  }
  return j;
}

}  // namespace graphon
