#pragma once

// Experiment orchestration: flat key=value specs, problem construction,
// replicate fan-out over a worker pool, and CSV/JSON emission.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "dsgd/analysis.hpp"
#include "dsgd/graph.hpp"
#include "dsgd/objective.hpp"
#include "dsgd/random.hpp"
#include "dsgd/solver.hpp"

namespace dsgd {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Preset { sec4_logistic, quadratic_custom };

inline const char* to_string(Preset p) { return p == Preset::sec4_logistic ? "sec4-logistic" : "quadratic-custom"; }

struct ExperimentSpec {
  Preset preset = Preset::sec4_logistic;

  // graph
  std::size_t nodes = 10;
  std::size_t edges = 23;
  double radius = 0.0;  // > 0 overrides the edge-count bisection
  std::uint64_t graph_seed = 1;
  std::string graph_file;

  // data and losses
  std::size_t samples_per_node = 10;
  std::size_t feature_dim = 3;
  double label_noise_sd = 2.0;
  double feature_spread = 5.0;
  std::uint64_t data_seed = 1;
  std::string data_file;
  LossKind loss = LossKind::logistic;
  double kappa = 0.5;
  NoiseMode noise = NoiseMode::datapoint;
  double noise_variance = 0.0;
  std::size_t batch = 1;

  // algorithm
  std::vector<double> pfail{0.0, 0.5, 0.9};
  double alpha0 = 1.0;
  std::optional<double> k0 = 1.0;   // nullopt: auto
  std::optional<double> beta0;      // nullopt: 1/theta
  double nu = 0.5;

  // run
  std::uint64_t horizon = 100000;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  bool centralized = true;
  std::optional<std::uint64_t> slope_lo;  // nullopt: horizon/100
  std::optional<std::uint64_t> slope_hi;  // nullopt: horizon
  std::uint64_t probe_draws = 10000;
  std::string out = "results";

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;

  std::uint64_t window_lo() const { return slope_lo.value_or(std::max<std::uint64_t>(1, horizon / 100)); }
  std::uint64_t window_hi() const { return slope_hi.value_or(horizon); }

  void validate() const {
    auto bad = [](const std::string& msg) { throw SpecError("invalid spec: " + msg); };
    if (nodes < 1) bad("nodes must be >= 1");
    if (samples_per_node < 1) bad("samples_per_node must be >= 1");
    if (feature_dim < 1) bad("feature_dim must be >= 1");
    if (!(label_noise_sd >= 0)) bad("label_noise_sd must be >= 0");
    if (!(feature_spread >= 0)) bad("feature_spread must be >= 0");
    if (!(kappa >= 0)) bad("kappa must be >= 0");
    if (!(noise_variance >= 0)) bad("noise_variance must be >= 0");
    if (batch < 1) bad("batch must be >= 1");
    if (pfail.empty()) bad("pfail list is empty");
    for (double p : pfail)
      if (!(p >= 0.0 && p <= 1.0)) bad("every pfail must lie in [0, 1]");
    if (!(alpha0 > 0)) bad("alpha0 must be > 0");
    if (k0 && !(*k0 >= 1)) bad("k0 must be >= 1");
    if (beta0 && !(*beta0 > 0)) bad("beta0 must be > 0");
    if (!(nu >= 0 && nu <= 0.5)) bad("nu must lie in [0, 1/2]");
    if (horizon < 1) bad("horizon must be >= 1");
    if (replicates < 1) bad("replicates must be >= 1");
    if (radius != 0.0 && !(radius > 0 && radius <= std::sqrt(2.0))) bad("radius must lie in (0, sqrt(2)]");
    if (probe_draws < 2) bad("probe_draws must be >= 2");
    if (slope_lo && *slope_lo < 1) bad("slope_lo must be >= 1");
    if (window_lo() >= window_hi() && horizon > 1) bad("slope window must satisfy slope_lo < slope_hi");
  }
};

inline ExperimentSpec preset_defaults(Preset p) {
  ExperimentSpec s;
  s.preset = p;
  if (p == Preset::quadratic_custom) {
    s.loss = LossKind::quadratic;
    s.feature_spread = 0.0;
    s.label_noise_sd = 0.5;
    s.k0.reset();
    s.pfail = {0.0, 0.5};
    s.horizon = 10000;
    s.replicates = 20;
  }
  return s;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw SpecError("malformed value for key '" + key + "': '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  // Accept scientific notation such as 1e5 as long as it is integral.
  const double d = parse_double(key, v);
  if (!(d >= 0) || d != std::floor(d) || d > 9.0e18)
    throw SpecError("malformed value for key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw SpecError("malformed value for key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) throw SpecError("malformed value for key '" + key + "': empty list element");
    out.push_back(parse_double(key, cell));
  }
  if (out.empty()) throw SpecError("malformed value for key '" + key + "': empty list");
  return out;
}

inline Preset parse_preset(const std::string& v) {
  if (v == "sec4-logistic") return Preset::sec4_logistic;
  if (v == "quadratic-custom") return Preset::quadratic_custom;
  throw SpecError("malformed value for key 'preset': '" + v + "'");
}

inline void apply_key(ExperimentSpec& s, const std::string& key, const std::string& v) {
  auto opt_auto = [&](auto parse) -> std::optional<std::decay_t<decltype(parse(v))>> {
    if (v == "auto") return std::nullopt;
    return parse(v);
  };
  auto d = [&](const std::string& x) { return parse_double(key, x); };
  auto u = [&](const std::string& x) { return parse_uint(key, x); };

  if (key == "preset") s.preset = parse_preset(v);
  else if (key == "nodes") s.nodes = u(v);
  else if (key == "edges") s.edges = u(v);
  else if (key == "radius") s.radius = d(v);
  else if (key == "graph_seed") s.graph_seed = u(v);
  else if (key == "graph_file") s.graph_file = v;
  else if (key == "samples_per_node") s.samples_per_node = u(v);
  else if (key == "feature_dim") s.feature_dim = u(v);
  else if (key == "label_noise_sd") s.label_noise_sd = d(v);
  else if (key == "feature_spread") s.feature_spread = d(v);
  else if (key == "data_seed") s.data_seed = u(v);
  else if (key == "data_file") s.data_file = v;
  else if (key == "loss") {
    if (v == "logistic") s.loss = LossKind::logistic;
    else if (v == "quadratic") s.loss = LossKind::quadratic;
    else throw SpecError("malformed value for key 'loss': '" + v + "'");
  } else if (key == "kappa") s.kappa = d(v);
  else if (key == "noise") {
    if (v == "datapoint") s.noise = NoiseMode::datapoint;
    else if (v == "gaussian") s.noise = NoiseMode::gaussian;
    else if (v == "none") s.noise = NoiseMode::none;
    else throw SpecError("malformed value for key 'noise': '" + v + "'");
  } else if (key == "noise_variance") s.noise_variance = d(v);
  else if (key == "batch") s.batch = u(v);
  else if (key == "pfail") s.pfail = parse_list(key, v);
  else if (key == "alpha0") s.alpha0 = d(v);
  else if (key == "k0") s.k0 = opt_auto(d);
  else if (key == "beta0") s.beta0 = opt_auto(d);
  else if (key == "nu") s.nu = d(v);
  else if (key == "horizon") s.horizon = u(v);
  else if (key == "replicates") s.replicates = u(v);
  else if (key == "seed") s.seed = u(v);
  else if (key == "centralized") s.centralized = parse_bool(key, v);
  else if (key == "slope_lo") s.slope_lo = opt_auto(u);
  else if (key == "slope_hi") s.slope_hi = opt_auto(u);
  else if (key == "probe_draws") s.probe_draws = u(v);
  else if (key == "out") s.out = v;
  else throw SpecError("unknown key '" + key + "'");
}

inline std::vector<std::pair<std::string, std::string>> parse_pairs(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SpecError("line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw SpecError("line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace detail

/// Parses key=value text (blank lines and '#' comments ignored). The preset
/// is resolved first, its defaults applied, then every key in file order and
/// finally `overrides` in order. Unknown keys and malformed values throw
/// SpecError naming the key.
inline ExperimentSpec parse_spec(const std::string& text,
                                 const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  auto pairs = detail::parse_pairs(text);
  pairs.insert(pairs.end(), overrides.begin(), overrides.end());
  Preset preset = Preset::sec4_logistic;
  for (const auto& [k, v] : pairs)
    if (k == "preset") preset = detail::parse_preset(v);
  ExperimentSpec spec = preset_defaults(preset);
  for (const auto& [k, v] : pairs) detail::apply_key(spec, k, v);
  spec.validate();
  return spec;
}

inline ExperimentSpec parse_spec_file(const std::string& path,
                                      const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), overrides);
}

/// Every key with its resolved value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> spec_entries(const ExperimentSpec& s) {
  using detail::format_double;
  auto opt = [](const auto& o, auto fmt) { return o ? fmt(*o) : std::string("auto"); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  std::string pf;
  for (std::size_t i = 0; i < s.pfail.size(); ++i) pf += (i ? "," : "") + format_double(s.pfail[i]);
  return {
      {"preset", to_string(s.preset)},
      {"nodes", u(s.nodes)},
      {"edges", u(s.edges)},
      {"radius", format_double(s.radius)},
      {"graph_seed", u(s.graph_seed)},
      {"graph_file", s.graph_file},
      {"samples_per_node", u(s.samples_per_node)},
      {"feature_dim", u(s.feature_dim)},
      {"label_noise_sd", format_double(s.label_noise_sd)},
      {"feature_spread", format_double(s.feature_spread)},
      {"data_seed", u(s.data_seed)},
      {"data_file", s.data_file},
      {"loss", to_string(s.loss)},
      {"kappa", format_double(s.kappa)},
      {"noise", to_string(s.noise)},
      {"noise_variance", format_double(s.noise_variance)},
      {"batch", u(s.batch)},
      {"pfail", pf},
      {"alpha0", format_double(s.alpha0)},
      {"k0", opt(s.k0, format_double)},
      {"beta0", opt(s.beta0, format_double)},
      {"nu", format_double(s.nu)},
      {"horizon", u(s.horizon)},
      {"replicates", u(s.replicates)},
      {"seed", u(s.seed)},
      {"centralized", s.centralized ? "true" : "false"},
      {"slope_lo", opt(s.slope_lo, u)},
      {"slope_hi", opt(s.slope_hi, u)},
      {"probe_draws", u(s.probe_draws)},
      {"out", s.out},
  };
}

inline std::string to_text(const ExperimentSpec& s) {
  std::string text;
  for (const auto& [k, v] : spec_entries(s)) text += k + "=" + v + "\n";
  return text;
}

/// FNV-1a over the resolved spec, excluding the output directory.
inline std::uint64_t config_hash(const ExperimentSpec& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : spec_entries(s)) {
    if (k == "out") continue;
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

/// Graph, losses and reference optimum shared by every run of a spec.
struct Problem {
  Graph graph;
  double radius = 0.0;
  std::uint64_t graph_attempt = 0;
  std::shared_ptr<const LossModel> loss;
  Eigen::VectorXd true_vector;
  CurvatureBounds curvature;
  ReferenceSolution reference;
  std::size_t theta = 0;
  double lambda2_base = 0.0;
  Schedules schedules;
};

inline Problem build_problem(const ExperimentSpec& spec) {
  spec.validate();
  Problem p;
  if (!spec.graph_file.empty()) {
    std::ifstream in(spec.graph_file);
    if (!in) throw std::runtime_error("cannot read graph file '" + spec.graph_file + "'");
    p.graph = read_edge_list(in);
  } else if (spec.radius > 0.0) {
    p.graph = build_geometric_graph(spec.nodes, spec.radius, spec.graph_seed);
    p.radius = spec.radius;
  } else {
    auto fit = build_geometric_graph_with_edges(spec.nodes, spec.edges, spec.graph_seed);
    p.graph = std::move(fit.graph);
    p.radius = fit.radius;
    p.graph_attempt = fit.attempt;
  }
  Dataset data;
  if (!spec.data_file.empty()) {
    std::ifstream in(spec.data_file);
    if (!in) throw std::runtime_error("cannot read data file '" + spec.data_file + "'");
    data = read_dataset_csv(in);
  } else {
    DataGenOptions opt;
    opt.n_nodes = p.graph.node_count();
    opt.n_per_node = spec.samples_per_node;
    opt.feature_dim = spec.feature_dim;
    opt.label_noise_sd = spec.label_noise_sd;
    opt.feature_spread = spec.feature_spread;
    opt.labels = spec.loss;
    opt.seed = spec.data_seed;
    auto gen = generate_dataset(opt);
    data = std::move(gen.dataset);
    p.true_vector = std::move(gen.true_vector);
  }
  if (data.node_count() != p.graph.node_count())
    throw std::invalid_argument("dataset has " + std::to_string(data.node_count()) + " nodes, graph has " +
                                std::to_string(p.graph.node_count()));
  p.loss = std::make_shared<const LossModel>(spec.loss, std::move(data), spec.kappa);
  p.curvature = curvature_bounds(*p.loss);
  p.reference = solve_reference_optimum(*p.loss);
  p.theta = max_degree(p.graph);
  p.lambda2_base = algebraic_connectivity(graph_laplacian(p.graph));

  p.schedules.alpha0 = spec.alpha0;
  p.schedules.nu = spec.nu;
  p.schedules.k0 = spec.k0 ? *spec.k0 : default_k0(spec.alpha0, p.graph.node_count(), p.curvature);
  if (spec.beta0) {
    p.schedules.beta0 = *spec.beta0;
  } else {
    if (p.theta == 0) throw std::invalid_argument("beta0=auto needs a graph with at least one edge");
    p.schedules.beta0 = 1.0 / static_cast<double>(p.theta);
  }
  p.schedules.validate();
  return p;
}

/// Probe points for the noise diagnostics: the origin plus x* displaced by
/// random directions at growing scales (distinct norms almost surely).
inline std::vector<Eigen::VectorXd> noise_probe_points(const Eigen::VectorXd& x_star, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> probes{Eigen::VectorXd::Zero(x_star.size())};
  Stream s(StreamKey{seed, 0, Purpose::probe, 0xffff, 0});
  const double base = std::max(1.0, x_star.norm());
  for (double scale : {0.5, 1.0, 2.0, 4.0}) {
    Eigen::VectorXd dir(x_star.size());
    for (Eigen::Index c = 0; c < dir.size(); ++c) dir(c) = s.normal();
    probes.push_back(x_star + scale * base * dir.normalized());
  }
  return probes;
}

struct TraceReport {
  std::string name;
  std::optional<double> pfail;  // nullopt: centralized baseline
  AggregateTrace trace;
  double lambda2_mean = 0.0;
  std::optional<SlopeEstimate> mse_slope;
  std::optional<SlopeEstimate> disagreement_slope;
  std::vector<std::string> notes;
};

struct ExperimentReport {
  ExperimentSpec spec;
  Problem problem;
  NoiseFit noise_fit;
  std::vector<TraceReport> traces;
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;
};

inline std::string trace_name(std::optional<double> pfail) {
  return pfail ? "distributed_pfail_" + detail::format_double(*pfail) : std::string("centralized");
}

inline SolverConfig solver_config(const ExperimentSpec& spec, const Problem& p, double pfail) {
  SolverConfig cfg;
  cfg.graph = p.graph;
  cfg.failure = FailureModel(pfail);
  cfg.loss = p.loss;
  cfg.noise = NoiseOracle{spec.noise, spec.noise_variance, spec.batch};
  cfg.schedules = p.schedules;
  cfg.horizon = spec.horizon;
  cfg.seed = spec.seed;
  cfg.replicates = spec.replicates;
  cfg.optimum = p.reference.x_star;
  cfg.config_hash = config_hash(spec);
  return cfg;
}

/// Runs `jobs` on up to `workers` threads; job i writes only slot i, so the
/// result is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec, std::size_t workers = 1) {
  ExperimentReport report;
  report.spec = spec;
  report.config_hash = config_hash(spec);
  report.problem = build_problem(spec);
  const Problem& p = report.problem;

  report.noise_fit = noise_moment_fit(
      *p.loss, [&] {
        std::vector<std::size_t> all(p.loss->node_count());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }(),
      noise_probe_points(p.reference.x_star, spec.seed), spec.probe_draws,
      NoiseOracle{spec.noise, spec.noise_variance, spec.batch}, spec.seed);

  struct Job {
    std::optional<double> pfail;
    std::size_t config;
    std::uint64_t replicate;
  };
  std::vector<std::optional<double>> configs(spec.pfail.begin(), spec.pfail.end());
  if (spec.centralized) configs.push_back(std::nullopt);
  std::vector<SolverConfig> solver_cfgs;
  for (const auto& pf : configs) solver_cfgs.push_back(solver_config(spec, p, pf.value_or(0.0)));

  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (std::uint64_t r = 0; r < spec.replicates; ++r) jobs.push_back({configs[c], c, r});
  std::vector<RunTrace> results(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    try {
      results[j] = job.pfail ? run_distributed(solver_cfgs[job.config], job.replicate)
                             : run_centralized(solver_cfgs[job.config], job.replicate);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.round(), trace_name(job.pfail) + ", replicate " + std::to_string(job.replicate) +
                                           ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(trace_name(job.pfail) + ", replicate " + std::to_string(job.replicate) + ": " +
                               e.what());
    }
  });

  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<RunTrace> group;
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (jobs[j].config == c) group.push_back(std::move(results[j]));
    TraceReport tr;
    tr.name = trace_name(configs[c]);
    tr.pfail = configs[c];
    tr.lambda2_mean = group.front().meta.lambda2_mean;
    for (const auto& w : group.front().meta.warnings)
      if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end())
        report.warnings.push_back(w);
    tr.trace = aggregate(group);
    try {
      tr.mse_slope = rate_slope(tr.trace, Metric::mse, spec.window_lo(), spec.window_hi());
    } catch (const std::exception& e) {
      tr.notes.push_back(std::string("mse slope unavailable: ") + e.what());
    }
    if (tr.pfail) {
      try {
        tr.disagreement_slope = rate_slope(tr.trace, Metric::disagreement, spec.window_lo(), spec.window_hi());
      } catch (const std::exception& e) {
        tr.notes.push_back(std::string("disagreement slope unavailable: ") + e.what());
      }
    }
    report.traces.push_back(std::move(tr));
  }
  return report;
}

inline void write_trace_csv(std::ostream& os, const AggregateTrace& t) {
  os << "k,mse_mean,mse_stderr,disagreement_mean,disagreement_stderr,iterate_norm_sq_mean\n";
  char buf[160];
  for (std::size_t p = 0; p < t.rounds.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(t.rounds[p]), t.mse_mean[p], t.mse_stderr[p],
                  t.disagreement_mean[p], t.disagreement_stderr[p], t.iterate_norm_sq_mean[p]);
    os << buf;
  }
}

namespace detail {

inline nlohmann::json slope_json(const std::optional<SlopeEstimate>& s) {
  if (!s) return nullptr;
  return {{"slope", s->slope},         {"intercept", s->intercept}, {"k_lo", s->k_lo},
          {"k_hi", s->k_hi},           {"residual_rms", s->residual_rms}, {"points", s->points}};
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

inline nlohmann::json noise_fit_json(const NoiseFit& fit, std::uint64_t draws) {
  return {{"c_v", fit.c_v}, {"c_v_prime", fit.c_v_prime}, {"max_mean_norm", fit.max_mean_norm},
          {"probes", fit.probes.size()}, {"draws_per_probe", draws}};
}

inline nlohmann::json certificates_json(const ExperimentSpec& spec, const Problem& p, const NoiseFit& fit) {
  nlohmann::json l2 = nlohmann::json::object();
  for (double pf : spec.pfail)
    l2[detail::format_double(pf)] = algebraic_connectivity(mean_laplacian(p.graph, FailureModel(pf)));
  return {
      {"lambda2_base", p.lambda2_base},
      {"lambda2_mean", l2},
      {"theta", p.theta},
      {"mu", p.curvature.mu},
      {"L", p.curvature.lip},
      {"rate_condition_met", rate_condition_met(p.schedules, p.graph.node_count(), p.curvature.mu)},
      {"noise_fit", noise_fit_json(fit, spec.probe_draws)},
  };
}

inline nlohmann::json summary_json(const ExperimentReport& r) {
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : spec_entries(r.spec))
    if (k != "out") config[k] = v;
  const Problem& p = r.problem;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : p.graph.edges()) edges.push_back({i, j});
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& t : r.traces) {
    nlohmann::json jt = {
        {"name", t.name},
        {"file", t.name + ".csv"},
        {"p_fail", t.pfail ? nlohmann::json(*t.pfail) : nlohmann::json(nullptr)},
        {"replicates", t.trace.replicates},
        {"lambda2_mean", t.lambda2_mean},
        {"mse_slope", detail::slope_json(t.mse_slope)},
        {"disagreement_slope", detail::slope_json(t.disagreement_slope)},
        {"final", {{"k", t.trace.rounds.back()},
                   {"mse_mean", t.trace.mse_mean.back()},
                   {"disagreement_mean", t.trace.disagreement_mean.back()},
                   {"iterate_norm_sq_mean", t.trace.iterate_norm_sq_mean.back()}}},
        {"notes", t.notes},
    };
    traces.push_back(std::move(jt));
  }
  return {
      {"config", config},
      {"config_hash", r.config_hash},
      {"resolved",
       {{"alpha0", p.schedules.alpha0},
        {"k0", p.schedules.k0},
        {"beta0", p.schedules.beta0},
        {"nu", p.schedules.nu},
        {"radius", p.radius},
        {"graph_attempt", p.graph_attempt},
        {"slope_window", {r.spec.window_lo(), r.spec.window_hi()}}}},
      {"graph", {{"nodes", p.graph.node_count()}, {"edge_count", p.graph.edge_count()}, {"edges", edges}}},
      {"certificates", certificates_json(r.spec, p, r.noise_fit)},
      {"reference",
       {{"x_star", detail::vector_json(p.reference.x_star)},
        {"grad_norm", p.reference.grad_norm_at_solution},
        {"iterations", p.reference.iterations}}},
      {"traces", traces},
      {"warnings", r.warnings},
  };
}

/// Writes `<name>.csv` per trace and `summary.json`; returns the paths written.
inline std::vector<std::filesystem::path> emit_traces(const ExperimentReport& report,
                                                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto open = [](const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    return os;
  };
  for (const auto& t : report.traces) {
    const auto path = dir / (t.name + ".csv");
    auto os = open(path);
    write_trace_csv(os, t.trace);
    if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
    written.push_back(path);
  }
  const auto path = dir / "summary.json";
  auto os = open(path);
  os << summary_json(report).dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
  written.push_back(path);
  return written;
}

}  // namespace dsgd
