#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "lstmcert/domain.hpp"
#include "lstmcert/model.hpp"
#include "lstmcert/refine.hpp"
#include "lstmcert/relax.hpp"

namespace lstmcert {

struct PerturbationSpec {
  double epsilon = 0.0;  // L-infinity radius
  std::optional<std::pair<double, double>> clip_range;
};

struct VerifyConfig {
  RelaxConfig relax;
  DivisionStrategy strategy = DivisionStrategy::None;
  AscentSchedule schedule;
  double timeout_seconds = 120.0;
};

struct VerificationQuery {
  std::vector<Eigen::VectorXd> sample;
  int true_label = 0;
  PerturbationSpec spec;
  VerifyConfig config;
};

enum class Verdict { Robust, Unknown, Timeout, Misclassified };

const char* verdict_name(Verdict v);

struct VerificationResult {
  Verdict verdict = Verdict::Unknown;
  // Certified lower bound of logit_t - logit_p per label p (NaN at p == t and
  // for labels not reached before a timeout).
  std::vector<double> margins;
  double min_margin = 0.0;
  int worst_label = -1;
  double elapsed_seconds = 0.0;
  VerifyConfig config_echo;
  double epsilon = 0.0;
};

// Result of one abstract pass: the state, where the final hidden block lives,
// and (for method-driven passes) the relaxation records for refinement.
struct PipelineResult {
  AbstractState state;
  int final_gen = 0;
  int h_offset = 0;
  std::vector<MethodPlaneSource::Record> records;
};

PipelineResult run_pipeline(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sample,
                            const PerturbationSpec& spec, const RelaxConfig& cfg,
                            PlaneSource* planes = nullptr);

// Certified lower bound of logit_true - logit_p over the perturbation ball.
double margin(const LstmNetwork& net, const VerificationQuery& query, int p,
              PlaneSource* planes = nullptr);

// Margins for every adversarial label from an existing pass.
std::vector<double> margins_from_pipeline(const LstmNetwork& net, const PipelineResult& pipe,
                                          int true_label);

VerificationResult verify_sample(const LstmNetwork& net, const VerificationQuery& query);

struct ReportRow {
  int sample_index = 0;
  int true_label = 0;
  VerificationResult result;
};

struct DatasetReport {
  std::vector<ReportRow> rows;  // sorted by sample_index
  int requested = 0;            // samples asked for
  int attempted = 0;            // correctly classified samples verified
  int robust = 0;
  double mean_seconds = 0.0;
};

struct Sample;  // dataset.hpp

DatasetReport verify_dataset(const LstmNetwork& net, const std::vector<Sample>& samples,
                             const PerturbationSpec& spec, const VerifyConfig& config,
                             int num_samples, std::uint64_t seed, int workers = 1);

}  // namespace lstmcert
