// dsgd: command-line front end for the distributed SGD simulator.
//
//   dsgd run --spec exp.cfg [--out dir] [--replicates R] [--horizon K] [--seed S] [--pfail 0,0.5]
//   dsgd check-assumptions --spec exp.cfg
//   dsgd lemma1 --a1 2 --a2 1 --d1 1 --d2 2 --horizon 1000000

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "dsgd/analysis.hpp"
#include "dsgd/experiment.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

void write_artifacts(const dsgd::ExperimentReport& report, const std::filesystem::path& dir) {
  {
    std::ofstream os(dir / "graph.txt");
    dsgd::write_edge_list(os, report.problem.graph);
  }
  {
    std::ofstream os(dir / "dataset.csv");
    dsgd::write_dataset_csv(os, report.problem.loss->dataset());
  }
  {
    std::ofstream os(dir / "reference.csv");
    dsgd::write_reference_csv(os, report.problem.reference);
  }
}

int cmd_run(const std::string& spec_path, const Overrides& overrides, std::size_t workers, bool artifacts) {
  const auto spec = dsgd::parse_spec_file(spec_path, overrides);
  const auto report = dsgd::run_experiment(spec, workers);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  const auto files = dsgd::emit_traces(report, spec.out);
  if (artifacts) write_artifacts(report, spec.out);
  for (const auto& t : report.traces) {
    std::printf("%-28s mse(K)=%.6g", t.name.c_str(), t.trace.mse_mean.back());
    if (t.mse_slope) std::printf("  mse_slope=%.4f", t.mse_slope->slope);
    if (t.disagreement_slope) std::printf("  disagreement_slope=%.4f", t.disagreement_slope->slope);
    std::printf("\n");
    for (const auto& n : t.notes) std::printf("  note: %s\n", n.c_str());
  }
  for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
  return 0;
}

int cmd_check(const std::string& spec_path) {
  const auto spec = dsgd::parse_spec_file(spec_path);
  const auto problem = dsgd::build_problem(spec);
  const auto fit = dsgd::noise_moment_fit(
      *problem.loss,
      [&] {
        std::vector<std::size_t> all(problem.loss->node_count());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }(),
      dsgd::noise_probe_points(problem.reference.x_star, spec.seed), spec.probe_draws,
      dsgd::NoiseOracle{spec.noise, spec.noise_variance, spec.batch}, spec.seed);
  std::cout << dsgd::certificates_json(spec, problem, fit).dump(2) << '\n';
  return 0;
}

int cmd_lemma1(double a1, double a2, double d1, double d2, double z0, std::uint64_t horizon) {
  const auto r = dsgd::lemma1_check(a1, a2, d1, d2, z0, horizon);
  std::printf("case: %s\n", dsgd::to_string(r.label));
  std::printf("scaled by (k+1): %s\n", r.scaled_by_k ? "yes" : "no");
  std::printf("%12s  %s\n", "k", "scaled z(k)");
  for (const auto& [k, v] : r.table) std::printf("%12llu  %.10g\n", static_cast<unsigned long long>(k), v);
  std::printf("plateau ratio: %.6f (%s)\n", r.plateau_ratio, r.plateaued ? "plateaued" : "growing");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed SGD over random networks"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out;
  std::string pfail;
  std::uint64_t replicates = 0, horizon = 0, seed = 0;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool artifacts = false;
  auto* run = app.add_subcommand("run", "Run an experiment and write traces plus summary.json");
  run->add_option("--spec", spec_path, "key=value spec file")->required()->check(CLI::ExistingFile);
  auto* o_out = run->add_option("--out", out, "output directory");
  auto* o_rep = run->add_option("--replicates", replicates, "replicates per configuration")->check(CLI::PositiveNumber);
  auto* o_hor = run->add_option("--horizon", horizon, "rounds per run")->check(CLI::PositiveNumber);
  auto* o_seed = run->add_option("--seed", seed, "master seed");
  auto* o_pf = run->add_option("--pfail", pfail, "comma-separated link failure probabilities");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--artifacts", artifacts, "also write graph.txt, dataset.csv and reference.csv");

  std::string check_spec;
  auto* check = app.add_subcommand("check-assumptions", "Print lambda2, mu, L and the noise-moment fit");
  check->add_option("--spec", check_spec, "key=value spec file")->required()->check(CLI::ExistingFile);

  double a1 = 0, a2 = 0, d1 = 0, d2 = 0, z0 = 1;
  std::uint64_t l_horizon = 1000000;
  auto* lemma = app.add_subcommand("lemma1", "Iterate the scalar step-size recursion and print the scaled-sup table");
  lemma->add_option("--a1", a1)->required();
  lemma->add_option("--a2", a2)->required();
  lemma->add_option("--d1", d1)->required();
  lemma->add_option("--d2", d2)->required();
  lemma->add_option("--z0", z0);
  lemma->add_option("--horizon", l_horizon)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      Overrides ov;
      if (*o_out) ov.emplace_back("out", out);
      if (*o_rep) ov.emplace_back("replicates", std::to_string(replicates));
      if (*o_hor) ov.emplace_back("horizon", std::to_string(horizon));
      if (*o_seed) ov.emplace_back("seed", std::to_string(seed));
      if (*o_pf) ov.emplace_back("pfail", pfail);
      return cmd_run(spec_path, ov, workers, artifacts);
    }
    if (check->parsed()) return cmd_check(check_spec);
    if (lemma->parsed()) return cmd_lemma1(a1, a2, d1, d2, z0, l_horizon);
  } catch (const dsgd::SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dsgd::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
