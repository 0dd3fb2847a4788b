#include "lstmcert/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lstmcert/model.hpp"

namespace lstmcert {

namespace {

const char* method_name(RelaxMethod m) {
  switch (m) {
    case RelaxMethod::Distance: return "distance";
    case RelaxMethod::Volume: return "volume";
    case RelaxMethod::Hybrid: return "hybrid";
  }
  return "hybrid";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (model_path.empty()) throw std::invalid_argument("config: model path is required");
  if (dataset_path.empty()) throw std::invalid_argument("config: dataset path is required");
  if (epsilons.empty()) throw std::invalid_argument("config: at least one epsilon is required");
  for (double e : epsilons) {
    if (!(e >= 0.0)) throw std::invalid_argument("config: epsilon must be >= 0");
  }
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha must be in [0,1]");
  if (sample_density < 3) throw std::invalid_argument("config: sample density must be >= 3");
  if (offset_grid < 16) throw std::invalid_argument("config: offset grid must be >= 16");
  if (clip && clip_lo > clip_hi) throw std::invalid_argument("config: clip range is empty");
  if (num_samples <= 0) throw std::invalid_argument("config: sample count must be positive");
}

VerifyConfig RunConfig::verify_config() const {
  VerifyConfig vc;
  vc.relax.method = method;
  vc.relax.alpha = alpha;
  vc.relax.sample_density = sample_density;
  vc.relax.offset_grid = offset_grid;
  vc.strategy = strategy;
  vc.timeout_seconds = timeout_seconds;
  return vc;
}

int env_worker_count() {
  const char* env = std::getenv("LSTMCERT_WORKERS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

RunOutcome run_verify(const RunConfig& config) {
  config.validate();
  const LstmNetwork net = load_network_file(config.model_path);
  const Dataset ds = load_dataset(config.dataset_path, config.format, net.num_frames);
  if (ds.num_frames != net.num_frames || ds.frame_dim != net.input_dim)
    throw std::invalid_argument("config: dataset frames do not match the model");

  PerturbationSpec spec;
  if (config.clip) spec.clip_range = {config.clip_lo, config.clip_hi};
  const VerifyConfig vc = config.verify_config();

  RunOutcome outcome;
  std::ofstream csv;
  if (!config.output_path.empty()) {
    csv.open(config.output_path);
    if (!csv) throw std::runtime_error("config: cannot write " + config.output_path);
    csv << "sample_index,true_label,verdict,min_margin,worst_label,elapsed_s,"
           "method,alpha,strategy,epsilon\n";
  }

  for (double eps : config.epsilons) {
    spec.epsilon = eps;
    const DatasetReport report = verify_dataset(net, ds.samples, spec, vc, config.num_samples,
                                                config.seed, config.workers);
    for (const ReportRow& row : report.rows) {
      if (csv.is_open()) {
        csv << row.sample_index << ',' << row.true_label << ','
            << verdict_name(row.result.verdict) << ',' << format_double(row.result.min_margin)
            << ',' << row.result.worst_label << ','
            << format_double(row.result.elapsed_seconds) << ',' << method_name(config.method)
            << ',' << format_double(config.alpha) << ',' << strategy_name(config.strategy) << ','
            << format_double(eps) << '\n';
      }
    }
    outcome.summaries.push_back(
        {eps, report.robust, report.attempted, report.requested});
  }

  if (csv.is_open()) {
    for (const auto& s : outcome.summaries) {
      csv << "# epsilon=" << format_double(s.epsilon) << " robust=" << s.robust
          << " attempted=" << s.attempted << " requested=" << s.requested
          << " accuracy=" << format_double(static_cast<double>(s.robust) / s.requested) << '\n';
    }
    outcome.csv_path = config.output_path;
  }
  return outcome;
}

AlphaSweepResult run_alpha_sweep(const RunConfig& config, const std::vector<double>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("alpha sweep: empty grid");
  config.validate();
  const LstmNetwork net = load_network_file(config.model_path);
  const Dataset ds = load_dataset(config.dataset_path, config.format, net.num_frames);

  PerturbationSpec spec;
  spec.epsilon = config.epsilons.front();
  if (config.clip) spec.clip_range = {config.clip_lo, config.clip_hi};

  AlphaSweepResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (double alpha : alphas) {
    RunConfig cfg = config;
    cfg.alpha = alpha;
    const VerifyConfig vc = cfg.verify_config();

    double sum = 0.0;
    long count = 0;
    const int n = std::min<int>(config.num_samples, static_cast<int>(ds.samples.size()));
    for (int i = 0; i < n; ++i) {
      const Sample& s = ds.samples[i];
      if (predict(net, s.sequence) != s.label) continue;
      PipelineResult pipe = run_pipeline(net, s.sequence, spec, vc.relax);
      const auto margins = margins_from_pipeline(net, pipe, s.label);
      for (int p = 0; p < net.num_classes(); ++p) {
        if (p == s.label) continue;
        sum += margins[p];
        ++count;
      }
    }
    const double mean = count > 0 ? sum / count : 0.0;
    result.curve.push_back({alpha, mean});
    if (mean > best) {
      best = mean;
      result.best_alpha = alpha;
    }
  }
  return result;
}

std::vector<StrategySweepRow> run_strategy_sweep(
    const RunConfig& config, const std::vector<DivisionStrategy>& strategies) {
  std::vector<StrategySweepRow> rows;
  for (DivisionStrategy s : strategies) {
    RunConfig cfg = config;
    cfg.strategy = s;
    cfg.output_path.clear();
    RunOutcome outcome = run_verify(cfg);
    rows.push_back({s, std::move(outcome.summaries)});
  }
  return rows;
}

}  // namespace lstmcert
