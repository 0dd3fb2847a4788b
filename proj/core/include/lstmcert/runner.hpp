#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lstmcert/dataset.hpp"
#include "lstmcert/refine.hpp"
#include "lstmcert/relax.hpp"
#include "lstmcert/verifier.hpp"

namespace lstmcert {

struct RunConfig {
  std::string model_path;
  std::string dataset_path;
  DatasetFormat format = DatasetFormat::Jsonl;
  std::vector<double> epsilons;
  RelaxMethod method = RelaxMethod::Hybrid;
  double alpha = 0.674;
  DivisionStrategy strategy = DivisionStrategy::None;
  int sample_density = 10;
  int offset_grid = 64;
  double timeout_seconds = 120.0;
  std::uint64_t seed = 1;
  std::string output_path;
  bool clip = false;
  double clip_lo = 0.0;
  double clip_hi = 1.0;
  int num_samples = 100;
  int workers = 1;

  void validate() const;  // throws on inconsistent settings
  VerifyConfig verify_config() const;
};

struct EpsilonSummary {
  double epsilon = 0.0;
  int robust = 0;
  int attempted = 0;
  int requested = 0;
};

struct RunOutcome {
  std::vector<EpsilonSummary> summaries;
  std::string csv_path;
};

// Verifies the configured suite at every epsilon, writes the CSV report and
// the accuracy summary block. Returns the per-epsilon counts.
RunOutcome run_verify(const RunConfig& config);

struct AlphaSweepPoint {
  double alpha = 0.0;
  double mean_margin = 0.0;
};

struct AlphaSweepResult {
  std::vector<AlphaSweepPoint> curve;
  double best_alpha = 0.0;
};

// Mean certified margin over the suite per alpha (hybrid method); reports the
// argmax. Uses the first epsilon of the config.
AlphaSweepResult run_alpha_sweep(const RunConfig& config, const std::vector<double>& alphas);

struct StrategySweepRow {
  DivisionStrategy strategy;
  std::vector<EpsilonSummary> summaries;
};

std::vector<StrategySweepRow> run_strategy_sweep(const RunConfig& config,
                                                 const std::vector<DivisionStrategy>& strategies);

// Worker count from the environment (LSTMCERT_WORKERS), defaulting to 1.
int env_worker_count();

}  // namespace lstmcert
