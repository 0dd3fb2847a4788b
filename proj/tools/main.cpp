// Command-line front end: verify a dataset against a model, sweep the alpha
// weight or the division strategies, generate seeded models, and run the
// standalone validation checks.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lstmcert/dataset.hpp"
#include "lstmcert/model.hpp"
#include "lstmcert/oracle.hpp"
#include "lstmcert/refine.hpp"
#include "lstmcert/rng.hpp"
#include "lstmcert/runner.hpp"

namespace {

using namespace lstmcert;

void add_common_flags(CLI::App* cmd, RunConfig* cfg, std::string* format,
                      std::string* method, std::string* strategy) {
  cmd->add_option("--model", cfg->model_path, "Model file")->required();
  cmd->add_option("--dataset", cfg->dataset_path,
                  "Dataset path (jsonl file, or \"images,labels\" for idx)")
      ->required();
  cmd->add_option("--format", *format, "Dataset format: jsonl | idx");
  cmd->add_option("--epsilon", cfg->epsilons, "Perturbation radii (repeatable)");
  cmd->add_option("--method", *method, "Relaxation method: distance | volume | hybrid");
  cmd->add_option("--alpha", cfg->alpha, "Hybrid objective weight");
  cmd->add_option("--strategy", *strategy,
                  "Division strategy: none | 2-tri-up | 2-tri-down | 4-tri | 2-rec-vec | "
                  "2-rec-hor | 4-rec | 9-rec | 16-rec");
  cmd->add_option("--lp-density", cfg->sample_density, "LP sample points per axis");
  cmd->add_option("--offset-grid", cfg->offset_grid, "Soundness offset grid per axis");
  cmd->add_option("--timeout", cfg->timeout_seconds, "Per-sample timeout in seconds");
  cmd->add_option("--seed", cfg->seed, "Sample selection seed");
  cmd->add_option("--samples", cfg->num_samples, "Number of samples to verify");
  cmd->add_option("--output", cfg->output_path, "CSV report path");
  cmd->add_flag("--clip", cfg->clip, "Clip perturbed inputs to [--clip-lo, --clip-hi]");
  cmd->add_option("--clip-lo", cfg->clip_lo, "Clip lower bound");
  cmd->add_option("--clip-hi", cfg->clip_hi, "Clip upper bound");
}

bool apply_parsed_names(RunConfig* cfg, const std::string& format, const std::string& method,
                        const std::string& strategy) {
  if (format == "jsonl") {
    cfg->format = DatasetFormat::Jsonl;
  } else if (format == "idx") {
    cfg->format = DatasetFormat::Idx;
  } else {
    std::cerr << "unknown dataset format: " << format << "\n";
    return false;
  }
  if (method == "distance") {
    cfg->method = RelaxMethod::Distance;
  } else if (method == "volume") {
    cfg->method = RelaxMethod::Volume;
  } else if (method == "hybrid") {
    cfg->method = RelaxMethod::Hybrid;
  } else {
    std::cerr << "unknown relaxation method: " << method << "\n";
    return false;
  }
  const auto parsed = parse_strategy(strategy);
  if (!parsed) {
    std::cerr << "unknown division strategy: " << strategy << "\n";
    return false;
  }
  cfg->strategy = *parsed;
  return true;
}

int cmd_verify(const RunConfig& cfg) {
  const RunOutcome outcome = run_verify(cfg);
  for (const auto& s : outcome.summaries) {
    std::printf("epsilon=%g robust=%d/%d (attempted %d)\n", s.epsilon, s.robust, s.requested,
                s.attempted);
  }
  if (!outcome.csv_path.empty()) std::printf("report written to %s\n", outcome.csv_path.c_str());
  return 0;
}

int cmd_sweep_alpha(const RunConfig& cfg, double a0, double a1, double step,
                    const std::vector<double>& grid) {
  std::vector<double> alphas = grid;
  if (alphas.empty()) {
    for (double a = a0; a <= a1 + 1e-12; a += step) alphas.push_back(a);
  }
  const AlphaSweepResult res = run_alpha_sweep(cfg, alphas);
  for (const auto& pt : res.curve)
    std::printf("alpha=%.4f mean_margin=%.9g\n", pt.alpha, pt.mean_margin);
  std::printf("best alpha=%.4f\n", res.best_alpha);
  return 0;
}

int cmd_sweep_strategy(const RunConfig& cfg, const std::vector<std::string>& names) {
  std::vector<DivisionStrategy> strategies;
  if (names.empty()) {
    strategies = all_strategies();
  } else {
    for (const auto& n : names) {
      const auto s = parse_strategy(n);
      if (!s) {
        std::cerr << "unknown division strategy: " << n << "\n";
        return 2;
      }
      strategies.push_back(*s);
    }
  }
  const auto rows = run_strategy_sweep(cfg, strategies);
  for (const auto& row : rows) {
    for (const auto& s : row.summaries) {
      std::printf("strategy=%s epsilon=%g robust=%d/%d\n", strategy_name(row.strategy), s.epsilon,
                  s.robust, s.requested);
    }
  }
  return 0;
}

int cmd_gen_model(const std::string& out, int frames, int input_dim, int hidden, int layers,
                  int classes, std::uint64_t seed, double scale) {
  const LstmNetwork net =
      random_network(frames, input_dim, hidden, layers, classes, seed, scale);
  save_network_file(net, out);
  std::printf("wrote %s (f=%d, d=%d, h=%d, l=%d, classes=%d)\n", out.c_str(), frames, input_dim,
              hidden, layers, classes);
  return 0;
}

int check_volume(int count, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int it = 0; it < count; ++it) {
    const PolyPrism prism = random_prism(rng, rng.uniform_int(3, 8));
    const double exact = poly_prism_volume_exact(prism);
    const double formula = poly_prism_volume_formula(prism);
    worst = std::max(worst, std::abs(exact - formula) / std::abs(formula));
  }
  std::printf("volume identity: %d prisms, worst relative gap %.3e\n", count, worst);
  return worst <= 1e-9 ? 0 : 1;
}

int check_corners(int count, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int it = 0; it < count; ++it) {
    const PlaneCoeffs plane{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double lx = rng.uniform(-4, 4);
    const double ly = rng.uniform(-4, 4);
    const Box2 box{lx, lx + rng.uniform(0.01, 5.0), ly, ly + rng.uniform(0.01, 5.0)};
    const CornerIdentities ids = coplanar_corner_identities(plane, box);
    worst = std::max({worst, ids.opposite_gap, ids.centroid_gap});
  }
  std::printf("corner identities: %d planes, worst gap %.3e\n", count, worst);
  return worst <= 1e-12 ? 0 : 1;
}

int check_surface(int count, std::uint64_t seed) {
  Rng rng(seed);
  double worst_sum = 0.0;
  int out_of_bracket = 0;
  for (int it = 0; it < count; ++it) {
    const double a = rng.uniform(0.2, 4.0), b = rng.uniform(0.2, 4.0);
    double z2 = rng.uniform(0.0, 3.0), z3 = rng.uniform(0.0, 3.0);
    if (z3 > z2) std::swap(z2, z3);
    const DegenerateTopCheck chk = degenerate_top_check(a, b, z2, z3);
    worst_sum = std::max(worst_sum, std::abs(chk.deviation_sum - chk.expected_sum));
    if (chk.top_area < chk.area_lower - 1e-9 || chk.top_area > chk.area_upper + 1e-9)
      ++out_of_bracket;
  }
  std::printf("degenerate tops: %d cases, worst sum gap %.3e, out-of-bracket %d\n", count,
              worst_sum, out_of_bracket);
  return (worst_sum <= 1e-9 && out_of_bracket == 0) ? 0 : 1;
}

int check_attack(const std::string& model, const std::string& dataset, const std::string& format,
                 int index, double epsilon, int samples, std::uint64_t seed) {
  const LstmNetwork net = load_network_file(model);
  const Dataset ds = load_dataset(
      dataset, format == "idx" ? DatasetFormat::Idx : DatasetFormat::Jsonl, net.num_frames);
  if (index < 0 || index >= static_cast<int>(ds.samples.size())) {
    std::cerr << "sample index out of range\n";
    return 2;
  }
  PerturbationSpec spec;
  spec.epsilon = epsilon;
  const auto cex = grid_attack(net, ds.samples[index], spec, samples, seed);
  if (cex) {
    std::printf("counterexample found for sample %d at epsilon %g\n", index, epsilon);
    return 1;
  }
  std::printf("no counterexample in %d samples\n", samples);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified robustness verification for LSTM classifiers"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.workers = env_worker_count();
  std::string format = "jsonl", method = "hybrid", strategy = "none";

  auto* verify = app.add_subcommand("verify", "Verify robustness over a dataset");
  add_common_flags(verify, &cfg, &format, &method, &strategy);

  auto* sweep_alpha = app.add_subcommand("sweep-alpha", "Mean certified margin per alpha");
  add_common_flags(sweep_alpha, &cfg, &format, &method, &strategy);
  double a0 = 0.0, a1 = 1.0, astep = 0.1;
  std::vector<double> agrid;
  sweep_alpha->add_option("--from", a0, "Grid start");
  sweep_alpha->add_option("--to", a1, "Grid end");
  sweep_alpha->add_option("--step", astep, "Grid step");
  sweep_alpha->add_option("--grid", agrid, "Explicit alpha values (overrides from/to/step)");

  auto* sweep_strategy = app.add_subcommand("sweep-strategy", "Verified counts per division");
  add_common_flags(sweep_strategy, &cfg, &format, &method, &strategy);
  std::vector<std::string> strategy_names;
  sweep_strategy->add_option("--strategies", strategy_names, "Strategies to sweep");

  auto* gen = app.add_subcommand("gen-model", "Emit a seeded random model file");
  std::string gen_out = "model.json";
  int gen_frames = 2, gen_input = 2, gen_hidden = 2, gen_layers = 1, gen_classes = 3;
  std::uint64_t gen_seed = 1;
  double gen_scale = 1.0;
  gen->add_option("--out", gen_out, "Output path")->required();
  gen->add_option("--frames", gen_frames, "Frames");
  gen->add_option("--input-dim", gen_input, "Inputs per frame");
  gen->add_option("--hidden", gen_hidden, "Hidden units");
  gen->add_option("--layers", gen_layers, "Layers");
  gen->add_option("--classes", gen_classes, "Classes");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--scale", gen_scale, "Weight scale");

  auto* check = app.add_subcommand("check", "Standalone validation checks");
  check->require_subcommand(1);
  int chk_count = 1000;
  std::uint64_t chk_seed = 7;
  auto* chk_volume = check->add_subcommand("volume", "Prism volume identity");
  chk_volume->add_option("--count", chk_count, "Cases");
  chk_volume->add_option("--seed", chk_seed, "Seed");
  auto* chk_corners = check->add_subcommand("corners", "Plane corner identities");
  chk_corners->add_option("--count", chk_count, "Cases");
  chk_corners->add_option("--seed", chk_seed, "Seed");
  auto* chk_surface = check->add_subcommand("surface", "Degenerate top-face bracket");
  chk_surface->add_option("--count", chk_count, "Cases");
  chk_surface->add_option("--seed", chk_seed, "Seed");
  auto* chk_attack = check->add_subcommand("attack", "Sampling attack on one sample");
  std::string atk_model, atk_dataset, atk_format = "jsonl";
  int atk_index = 0, atk_samples = 100000;
  double atk_eps = 0.01;
  std::uint64_t atk_seed = 7;
  chk_attack->add_option("--model", atk_model, "Model file")->required();
  chk_attack->add_option("--dataset", atk_dataset, "Dataset path")->required();
  chk_attack->add_option("--format", atk_format, "Dataset format");
  chk_attack->add_option("--sample", atk_index, "Sample index");
  chk_attack->add_option("--epsilon", atk_eps, "Perturbation radius");
  chk_attack->add_option("--samples", atk_samples, "Attack samples");
  chk_attack->add_option("--seed", atk_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed() || sweep_alpha->parsed() || sweep_strategy->parsed()) {
      if (!apply_parsed_names(&cfg, format, method, strategy)) return 2;
    }
    if (verify->parsed()) return cmd_verify(cfg);
    if (sweep_alpha->parsed()) return cmd_sweep_alpha(cfg, a0, a1, astep, agrid);
    if (sweep_strategy->parsed()) return cmd_sweep_strategy(cfg, strategy_names);
    if (gen->parsed())
      return cmd_gen_model(gen_out, gen_frames, gen_input, gen_hidden, gen_layers, gen_classes,
                           gen_seed, gen_scale);
    if (check->parsed()) {
      if (chk_volume->parsed()) return check_volume(chk_count, chk_seed);
      if (chk_corners->parsed()) return check_corners(chk_count, chk_seed);
      if (chk_surface->parsed()) return check_surface(chk_count, chk_seed);
      if (chk_attack->parsed())
        return check_attack(atk_model, atk_dataset, atk_format, atk_index, atk_eps, atk_samples,
                            atk_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
