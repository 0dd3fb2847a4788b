#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "lstmcert/model.hpp"
#include "lstmcert/relax.hpp"

namespace lstmcert {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Linear expression over the neurons of one generation.
struct LinExpr {
  int generation = 0;
  Eigen::VectorXd coeffs;
  double constant = 0.0;
};

// Per-query abstract state: an input box plus a chain of generations, each
// carrying symbolic linear lower/upper bounds over the immediately preceding
// generation and the numeric interval obtained by backsubstituting those
// bounds all the way to the input box.
class AbstractState {
 public:
  enum class Provenance { Input, Affine, Relax, Mixed };

  static AbstractState input_state(const Eigen::VectorXd& center, double epsilon,
                                   std::optional<std::pair<double, double>> clip = std::nullopt);

  int num_generations() const { return static_cast<int>(gens_.size()); }
  int last() const { return num_generations() - 1; }
  int width(int gen) const;
  Interval bounds(int gen, int neuron) const;
  Provenance provenance(int gen) const { return gens_[gen].prov; }
  const Eigen::VectorXd& input_lower() const { return input_lb_; }
  const Eigen::VectorXd& input_upper() const { return input_ub_; }

  // Appends an exact affine generation over the last one.
  int affine(const Eigen::MatrixXd& w, const Eigen::VectorXd& b);

  // Appends a single-neuron generation relaxing the product of neurons xs and
  // ys of the last generation, using planes from cfg.method over their joint
  // box unless an override pair is supplied.
  int hadamard_relax(int xs, int ys, BivariateKind kind, const RelaxConfig& cfg,
                     const std::optional<PlanePair>& planes_override = std::nullopt);

  // Interval of a linear expression, backsubstituted to the input box.
  Interval backsubstitute(const LinExpr& expr) const;

  // One-step interval evaluation of the same expression against the stored
  // neuron intervals (no backsubstitution); used to audit tightness.
  Interval interval_eval(const LinExpr& expr) const;

  // Row-by-row construction of a generation mixing affine, pass-through and
  // relaxed rows. Rows reference the current last generation.
  class Builder {
   public:
    explicit Builder(AbstractState& state);
    int affine_row(const Eigen::VectorXd& w, double b);
    int identity_row(int src);
    int relax_row(int xs, int ys, const PlanePair& planes);
    // Appends the generation; computes numeric bounds unless deferred.
    int commit(Provenance prov = Provenance::Mixed, bool concretize = true);

   private:
    AbstractState& state_;
    std::vector<Eigen::VectorXd> lo_rows_, hi_rows_;
    std::vector<double> lo_cst_, hi_cst_;
  };

 private:
  friend class Builder;

  struct Generation {
    Eigen::MatrixXd lo_c, hi_c;  // width x prev_width
    Eigen::VectorXd lo_b, hi_b;
    Eigen::VectorXd lb, ub;
    Provenance prov = Provenance::Input;
    bool concretized = false;
  };

  // Bounds of rows C.x_gen + d, backsubstituted to the input box.
  Eigen::VectorXd back_lower(Eigen::MatrixXd c, Eigen::VectorXd d, int gen) const;
  Eigen::VectorXd back_upper(Eigen::MatrixXd c, Eigen::VectorXd d, int gen) const;
  void concretize(Generation& g, int prev_gen);

  Eigen::VectorXd input_lb_, input_ub_;
  std::vector<Generation> gens_;
};

// Plane provider for abstract LSTM steps. Calls arrive in a deterministic
// construction order, one per relaxed neuron.
class PlaneSource {
 public:
  virtual ~PlaneSource() = default;
  virtual PlanePair planes(const Box2& box, BivariateKind kind) = 0;
  // Whether the source needs operand boxes (method sources do; replay
  // sources do not, which lets callers skip intermediate concretization).
  virtual bool needs_boxes() const { return true; }
};

// Computes planes from the configured method and records every request, so a
// later pass can reproduce or refine the same relaxations.
class MethodPlaneSource : public PlaneSource {
 public:
  explicit MethodPlaneSource(const RelaxConfig& cfg) : cfg_(cfg) {}
  PlanePair planes(const Box2& box, BivariateKind kind) override;

  struct Record {
    Box2 box;
    BivariateKind kind;
    PlanePair planes;
  };
  const std::vector<Record>& records() const { return records_; }

 private:
  RelaxConfig cfg_;
  std::vector<Record> records_;
};

// Replays a fixed plane list in construction order.
class OverridePlaneSource : public PlaneSource {
 public:
  explicit OverridePlaneSource(std::vector<PlanePair> planes) : planes_(std::move(planes)) {}
  PlanePair planes(const Box2& box, BivariateKind kind) override;
  bool needs_boxes() const override { return false; }

 private:
  std::vector<PlanePair> planes_;
  std::size_t next_ = 0;
};

// Positions of the step outputs inside the appended generation.
struct LstmStepLayout {
  int gen = 0;
  int h_offset = 0;      // h_t block, hidden wide
  int c_offset = 0;      // c_t block, hidden wide
  int carry_offset = 0;  // pass-through block, in the order given
};

// One abstract LSTM cell step. Builds the gate pre-activations via an exact
// affine generation, relaxes the three Hadamard products, forms c_t as an
// exact sum and h_t from the output gate. Neuron indices reference the
// current last generation; empty h_prev/c_prev mean a zero initial state.
// carry lists neurons to pass through unchanged.
LstmStepLayout lstm_abstract_step(AbstractState& state, const LstmLayer& layer,
                                  const std::vector<int>& x_idx,
                                  const std::vector<int>& h_prev_idx,
                                  const std::vector<int>& c_prev_idx,
                                  const std::vector<int>& carry_idx, const RelaxConfig& cfg,
                                  PlaneSource* planes);

}  // namespace lstmcert
