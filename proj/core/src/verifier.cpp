#include "lstmcert/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "lstmcert/dataset.hpp"
#include "lstmcert/rng.hpp"

namespace lstmcert {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd flatten(const std::vector<Eigen::VectorXd>& sample) {
  Eigen::Index total = 0;
  for (const auto& f : sample) total += f.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const auto& f : sample) {
    flat.segment(at, f.size()) = f;
    at += f.size();
  }
  return flat;
}

std::vector<int> iota_vec(int start, int count) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), start);
  return v;
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Robust: return "robust";
    case Verdict::Unknown: return "unknown";
    case Verdict::Timeout: return "timeout";
    case Verdict::Misclassified: return "misclassified";
  }
  return "unknown";
}

PipelineResult run_pipeline(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sample,
                            const PerturbationSpec& spec, const RelaxConfig& cfg,
                            PlaneSource* planes) {
  net.validate();
  if (static_cast<int>(sample.size()) != net.num_frames)
    throw std::invalid_argument("run_pipeline: frame count mismatch");

  MethodPlaneSource method_source(cfg);
  PlaneSource* src = planes != nullptr ? planes : &method_source;

  AbstractState state = AbstractState::input_state(flatten(sample), spec.epsilon,
                                                   spec.clip_range);

  const int f = net.num_frames;
  // Positions of each frame's input slice in the current last generation.
  std::vector<std::vector<int>> inputs(f);
  for (int t = 0; t < f; ++t) inputs[t] = iota_vec(t * net.input_dim, net.input_dim);

  LstmStepLayout layout{};
  for (int l = 0; l < net.num_layers(); ++l) {
    const LstmLayer& layer = net.layers[l];
    const int h = layer.hidden_dim();
    const bool keep_outputs = l + 1 < net.num_layers();
    std::vector<int> h_prev, c_prev;
    std::vector<std::vector<int>> outputs;
    for (int t = 0; t < f; ++t) {
      // carry: the later frames' inputs, then the accumulated outputs.
      std::vector<int> carry;
      for (int u = t + 1; u < f; ++u) carry.insert(carry.end(), inputs[u].begin(), inputs[u].end());
      for (const auto& o : outputs) carry.insert(carry.end(), o.begin(), o.end());

      layout = lstm_abstract_step(state, layer, inputs[t], h_prev, c_prev, carry,
                                  cfg, src);

      // Recompute positions inside the appended generation: h, c, then the
      // carried block in the order it was passed.
      h_prev = iota_vec(layout.h_offset, h);
      c_prev = iota_vec(layout.c_offset, h);
      int at = layout.carry_offset;
      for (int u = t + 1; u < f; ++u) {
        inputs[u] = iota_vec(at, static_cast<int>(inputs[u].size()));
        at += static_cast<int>(inputs[u].size());
      }
      for (auto& o : outputs) {
        o = iota_vec(at, static_cast<int>(o.size()));
        at += static_cast<int>(o.size());
      }
      if (keep_outputs) outputs.push_back(h_prev);
    }
    if (keep_outputs) {
      inputs = std::move(outputs);
    }
  }

  PipelineResult res{std::move(state), layout.gen, layout.h_offset, {}};
  if (planes == nullptr) res.records = method_source.records();
  return res;
}

namespace {

double single_margin(const LstmNetwork& net, const PipelineResult& pipe, int true_label, int p) {
  const int h = net.hidden_dim();
  LinExpr expr;
  expr.generation = pipe.final_gen;
  expr.coeffs = Eigen::VectorXd::Zero(pipe.state.width(pipe.final_gen));
  for (int j = 0; j < h; ++j)
    expr.coeffs(pipe.h_offset + j) =
        net.classifier.w_out(true_label, j) - net.classifier.w_out(p, j);
  expr.constant = net.classifier.b_out(true_label) - net.classifier.b_out(p);
  return pipe.state.backsubstitute(expr).lo;
}

}  // namespace

std::vector<double> margins_from_pipeline(const LstmNetwork& net, const PipelineResult& pipe,
                                          int true_label) {
  const int classes = net.num_classes();
  std::vector<double> out(classes, std::numeric_limits<double>::quiet_NaN());
  for (int p = 0; p < classes; ++p) {
    if (p == true_label) continue;
    out[p] = single_margin(net, pipe, true_label, p);
  }
  return out;
}

double margin(const LstmNetwork& net, const VerificationQuery& query, int p,
              PlaneSource* planes) {
  if (p == query.true_label) throw std::invalid_argument("margin: p equals the true label");
  const PipelineResult pipe =
      run_pipeline(net, query.sample, query.spec, query.config.relax, planes);
  return margins_from_pipeline(net, pipe, query.true_label)[p];
}

namespace {

// Refinement state for one sample: fixed per-neuron candidate sets from the
// first pass, indexed in construction order.
struct RefinementPlan {
  std::vector<CandidateSet> candidates;
  SimplexBlocks blocks;
  int lambda_dim = 0;
};

RefinementPlan build_plan(const std::vector<MethodPlaneSource::Record>& records,
                          DivisionStrategy strategy, const RelaxConfig& cfg) {
  RefinementPlan plan;
  plan.candidates.reserve(records.size());
  for (const auto& rec : records) {
    plan.candidates.push_back(candidate_planes(rec.box, rec.kind, strategy, cfg));
    const int k = static_cast<int>(plan.candidates.back().count());
    plan.blocks.spans.push_back({plan.lambda_dim, k});
    plan.lambda_dim += k;
    plan.blocks.spans.push_back({plan.lambda_dim, k});
    plan.lambda_dim += k;
  }
  return plan;
}

// lambda layout per relaxed neuron: [lower block | upper block].
std::vector<PlanePair> assemble_planes(const RefinementPlan& plan, const Eigen::VectorXd& lambda) {
  std::vector<PlanePair> planes(plan.candidates.size());
  for (std::size_t i = 0; i < plan.candidates.size(); ++i) {
    const CandidateSet& set = plan.candidates[i];
    const int k = static_cast<int>(set.count());
    const auto [lo_off, lo_len] = plan.blocks.spans[2 * i];
    const auto [hi_off, hi_len] = plan.blocks.spans[2 * i + 1];
    PlanePair pair;
    for (int j = 0; j < k; ++j) {
      const double wl = lambda(lo_off + j);
      pair.lower.a += wl * set.lower_planes[j].a;
      pair.lower.b += wl * set.lower_planes[j].b;
      pair.lower.c += wl * set.lower_planes[j].c;
      const double wu = lambda(hi_off + j);
      pair.upper.a += wu * set.upper_planes[j].a;
      pair.upper.b += wu * set.upper_planes[j].b;
      pair.upper.c += wu * set.upper_planes[j].c;
    }
    (void)lo_len;
    (void)hi_len;
    planes[i] = pair;
  }
  return planes;
}

}  // namespace

VerificationResult verify_sample(const LstmNetwork& net, const VerificationQuery& query) {
  const auto t0 = Clock::now();
  const double deadline = query.config.timeout_seconds;
  const auto out_of_time = [&] { return seconds_since(t0) > deadline; };

  VerificationResult res;
  res.config_echo = query.config;
  res.epsilon = query.spec.epsilon;
  res.margins.assign(net.num_classes(), std::numeric_limits<double>::quiet_NaN());

  const auto finish = [&](Verdict v) {
    res.verdict = v;
    res.min_margin = std::numeric_limits<double>::infinity();
    res.worst_label = -1;
    for (int p = 0; p < net.num_classes(); ++p) {
      if (p == query.true_label || std::isnan(res.margins[p])) continue;
      if (res.margins[p] < res.min_margin) {
        res.min_margin = res.margins[p];
        res.worst_label = p;
      }
    }
    if (res.worst_label < 0) res.min_margin = 0.0;
    res.elapsed_seconds = seconds_since(t0);
    return res;
  };

  if (predict(net, query.sample) != query.true_label) return finish(Verdict::Misclassified);

  PipelineResult pass1 = run_pipeline(net, query.sample, query.spec, query.config.relax);
  res.margins = margins_from_pipeline(net, pass1, query.true_label);
  if (out_of_time()) return finish(Verdict::Timeout);

  std::vector<int> failing;
  for (int p = 0; p < net.num_classes(); ++p) {
    if (p == query.true_label) continue;
    if (res.margins[p] < 0.0) failing.push_back(p);
  }
  if (failing.empty()) return finish(Verdict::Robust);
  if (query.config.strategy == DivisionStrategy::None) return finish(Verdict::Unknown);

  // Multi-plane refinement: candidates are computed once from the first
  // pass's boxes and stay fixed while lambda moves.
  const RefinementPlan plan = build_plan(pass1.records, query.config.strategy, query.config.relax);
  if (out_of_time()) return finish(Verdict::Timeout);

  // Vertex initialization: index 0 of every block is the undivided region's
  // plane, so the starting margin equals the single-plane margin.
  Eigen::VectorXd init = Eigen::VectorXd::Zero(plan.lambda_dim);
  for (const auto& [off, len] : plan.blocks.spans) init(off) = 1.0;

  for (int p : failing) {
    const auto objective = [&](const Eigen::VectorXd& lambda) {
      OverridePlaneSource src(assemble_planes(plan, lambda));
      PipelineResult pipe = run_pipeline(net, query.sample, query.spec, query.config.relax, &src);
      return single_margin(net, pipe, query.true_label, p);
    };
    const AscentResult best =
        optimize_lambda(objective, init, plan.blocks, query.config.schedule, out_of_time);
    res.margins[p] = std::max(res.margins[p], best.best_margin);
    if (out_of_time()) return finish(Verdict::Timeout);
  }

  for (int p : failing) {
    if (res.margins[p] < 0.0) return finish(Verdict::Unknown);
  }
  return finish(Verdict::Robust);
}

DatasetReport verify_dataset(const LstmNetwork& net, const std::vector<Sample>& samples,
                             const PerturbationSpec& spec, const VerifyConfig& config,
                             int num_samples, std::uint64_t seed, int workers) {
  DatasetReport report;
  report.requested = num_samples;

  // Seeded shuffle, then scan for the first num_samples correctly classified
  // samples. Misclassified samples scanned along the way are reported too.
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_int(0, i)]);
  }

  std::vector<int> scan;
  int correct = 0;
  for (int idx : order) {
    if (correct >= num_samples) break;
    scan.push_back(idx);
    if (predict(net, samples[idx].sequence) == samples[idx].label) ++correct;
  }

  std::vector<ReportRow> rows(scan.size());
  std::atomic<std::size_t> cursor{0};
  const auto work = [&] {
    for (;;) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= scan.size()) return;
      const int idx = scan[k];
      VerificationQuery query;
      query.sample = samples[idx].sequence;
      query.true_label = samples[idx].label;
      query.spec = spec;
      query.config = config;
      rows[k] = {idx, samples[idx].label, verify_sample(net, query)};
    }
  };
  const int nw = std::max(1, workers);
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int i = 0; i < nw; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  double total_s = 0.0;
  for (auto& row : rows) {
    total_s += row.result.elapsed_seconds;
    if (row.result.verdict == Verdict::Robust) ++report.robust;
    if (row.result.verdict != Verdict::Misclassified) ++report.attempted;
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.sample_index < b.sample_index; });
  report.mean_seconds = report.rows.empty() ? 0.0 : total_s / report.rows.size();
  return report;
}

}  // namespace lstmcert
