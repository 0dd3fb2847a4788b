#include "lstmcert/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace lstmcert {

AbstractState AbstractState::input_state(const Eigen::VectorXd& center, double epsilon,
                                         std::optional<std::pair<double, double>> clip) {
  if (epsilon < 0.0) throw std::invalid_argument("input_state: negative epsilon");
  AbstractState st;
  st.input_lb_ = center.array() - epsilon;
  st.input_ub_ = center.array() + epsilon;
  if (clip) {
    st.input_lb_ = st.input_lb_.cwiseMax(clip->first);
    st.input_ub_ = st.input_ub_.cwiseMin(clip->second);
  }
  Generation g;
  g.lb = st.input_lb_;
  g.ub = st.input_ub_;
  g.prov = Provenance::Input;
  g.concretized = true;
  st.gens_.push_back(std::move(g));
  return st;
}

int AbstractState::width(int gen) const { return static_cast<int>(gens_[gen].lb.size()); }

Interval AbstractState::bounds(int gen, int neuron) const {
  const Generation& g = gens_[gen];
  if (!g.concretized) throw std::logic_error("bounds: generation not concretized");
  return {g.lb(neuron), g.ub(neuron)};
}

int AbstractState::affine(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  const int prev = last();
  if (w.cols() != width(prev)) throw std::invalid_argument("affine: width mismatch");
  if (w.rows() != b.size()) throw std::invalid_argument("affine: bias size mismatch");
  Generation g;
  g.lo_c = w;
  g.hi_c = w;
  g.lo_b = b;
  g.hi_b = b;
  g.prov = Provenance::Affine;
  concretize(g, prev);
  gens_.push_back(std::move(g));
  return last();
}

int AbstractState::hadamard_relax(int xs, int ys, BivariateKind kind, const RelaxConfig& cfg,
                                  const std::optional<PlanePair>& planes_override) {
  const int prev = last();
  const Interval bx = bounds(prev, xs);
  const Interval by = bounds(prev, ys);
  if (!std::isfinite(bx.lo) || !std::isfinite(bx.hi) || !std::isfinite(by.lo) ||
      !std::isfinite(by.hi))
    throw std::invalid_argument("hadamard_relax: non-finite source bounds");
  PlanePair planes;
  if (planes_override) {
    planes = *planes_override;
  } else {
    MethodPlaneSource src(cfg);
    planes = src.planes(Box2{bx.lo, bx.hi, by.lo, by.hi}, kind);
  }
  Builder b(*this);
  b.relax_row(xs, ys, planes);
  return b.commit(Provenance::Relax);
}

Eigen::VectorXd AbstractState::back_lower(Eigen::MatrixXd c, Eigen::VectorXd d, int gen) const {
  for (int g = gen; g > 0; --g) {
    const Generation& gg = gens_[g];
    const Eigen::MatrixXd pos = c.cwiseMax(0.0);
    const Eigen::MatrixXd neg = c.cwiseMin(0.0);
    d += pos * gg.lo_b + neg * gg.hi_b;
    c = pos * gg.lo_c + neg * gg.hi_c;
  }
  return d + c.cwiseMax(0.0) * input_lb_ + c.cwiseMin(0.0) * input_ub_;
}

Eigen::VectorXd AbstractState::back_upper(Eigen::MatrixXd c, Eigen::VectorXd d, int gen) const {
  for (int g = gen; g > 0; --g) {
    const Generation& gg = gens_[g];
    const Eigen::MatrixXd pos = c.cwiseMax(0.0);
    const Eigen::MatrixXd neg = c.cwiseMin(0.0);
    d += pos * gg.hi_b + neg * gg.lo_b;
    c = pos * gg.hi_c + neg * gg.lo_c;
  }
  return d + c.cwiseMax(0.0) * input_ub_ + c.cwiseMin(0.0) * input_lb_;
}

void AbstractState::concretize(Generation& g, int prev_gen) {
  g.lb = back_lower(g.lo_c, g.lo_b, prev_gen);
  g.ub = back_upper(g.hi_c, g.hi_b, prev_gen);
  g.concretized = true;
}

Interval AbstractState::backsubstitute(const LinExpr& expr) const {
  if (expr.generation < 0 || expr.generation >= num_generations())
    throw std::invalid_argument("backsubstitute: bad generation");
  Eigen::MatrixXd c = expr.coeffs.transpose();
  Eigen::VectorXd d = Eigen::VectorXd::Constant(1, expr.constant);
  const double lo = back_lower(c, d, expr.generation)(0);
  const double hi = back_upper(std::move(c), std::move(d), expr.generation)(0);
  return {lo, hi};
}

Interval AbstractState::interval_eval(const LinExpr& expr) const {
  const Generation& g = gens_[expr.generation];
  if (!g.concretized) throw std::logic_error("interval_eval: generation not concretized");
  double lo = expr.constant, hi = expr.constant;
  for (int i = 0; i < expr.coeffs.size(); ++i) {
    const double w = expr.coeffs(i);
    if (w >= 0.0) {
      lo += w * g.lb(i);
      hi += w * g.ub(i);
    } else {
      lo += w * g.ub(i);
      hi += w * g.lb(i);
    }
  }
  return {lo, hi};
}

AbstractState::Builder::Builder(AbstractState& state) : state_(state) {}

int AbstractState::Builder::affine_row(const Eigen::VectorXd& w, double b) {
  if (w.size() != state_.width(state_.last()))
    throw std::invalid_argument("affine_row: width mismatch");
  lo_rows_.push_back(w);
  hi_rows_.push_back(w);
  lo_cst_.push_back(b);
  hi_cst_.push_back(b);
  return static_cast<int>(lo_rows_.size()) - 1;
}

int AbstractState::Builder::identity_row(int src) {
  const int w = state_.width(state_.last());
  if (src < 0 || src >= w) throw std::invalid_argument("identity_row: bad index");
  Eigen::VectorXd row = Eigen::VectorXd::Zero(w);
  row(src) = 1.0;
  lo_rows_.push_back(row);
  hi_rows_.push_back(std::move(row));
  lo_cst_.push_back(0.0);
  hi_cst_.push_back(0.0);
  return static_cast<int>(lo_rows_.size()) - 1;
}

int AbstractState::Builder::relax_row(int xs, int ys, const PlanePair& planes) {
  const int w = state_.width(state_.last());
  if (xs < 0 || xs >= w || ys < 0 || ys >= w)
    throw std::invalid_argument("relax_row: bad index");
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(w);
  lo(xs) += planes.lower.a;
  lo(ys) += planes.lower.b;
  Eigen::VectorXd hi = Eigen::VectorXd::Zero(w);
  hi(xs) += planes.upper.a;
  hi(ys) += planes.upper.b;
  lo_rows_.push_back(std::move(lo));
  hi_rows_.push_back(std::move(hi));
  lo_cst_.push_back(planes.lower.c);
  hi_cst_.push_back(planes.upper.c);
  return static_cast<int>(lo_rows_.size()) - 1;
}

int AbstractState::Builder::commit(Provenance prov, bool concretize) {
  const int rows = static_cast<int>(lo_rows_.size());
  if (rows == 0) throw std::logic_error("commit: empty generation");
  const int prev = state_.last();
  const int pw = state_.width(prev);
  Generation g;
  g.lo_c.resize(rows, pw);
  g.hi_c.resize(rows, pw);
  g.lo_b.resize(rows);
  g.hi_b.resize(rows);
  for (int r = 0; r < rows; ++r) {
    g.lo_c.row(r) = lo_rows_[r].transpose();
    g.hi_c.row(r) = hi_rows_[r].transpose();
    g.lo_b(r) = lo_cst_[r];
    g.hi_b(r) = hi_cst_[r];
  }
  g.prov = prov;
  if (concretize) {
    state_.concretize(g, prev);
  } else {
    g.lb = Eigen::VectorXd::Zero(rows);
    g.ub = Eigen::VectorXd::Zero(rows);
    g.concretized = false;
  }
  state_.gens_.push_back(std::move(g));
  return state_.last();
}

PlanePair MethodPlaneSource::planes(const Box2& box, BivariateKind kind) {
  PlanePair p = relax(box, kind, cfg_);
  records_.push_back({box, kind, p});
  return p;
}

PlanePair OverridePlaneSource::planes(const Box2&, BivariateKind) {
  if (next_ >= planes_.size())
    throw std::logic_error("OverridePlaneSource: ran out of planes");
  return planes_[next_++];
}

LstmStepLayout lstm_abstract_step(AbstractState& state, const LstmLayer& layer,
                                  const std::vector<int>& x_idx,
                                  const std::vector<int>& h_prev_idx,
                                  const std::vector<int>& c_prev_idx,
                                  const std::vector<int>& carry_idx, const RelaxConfig& cfg,
                                  PlaneSource* planes) {
  const int h = layer.hidden_dim();
  const int d = layer.input_dim();
  if (static_cast<int>(x_idx.size()) != d)
    throw std::invalid_argument("lstm_abstract_step: frame width mismatch");
  if (!h_prev_idx.empty() && static_cast<int>(h_prev_idx.size()) != h)
    throw std::invalid_argument("lstm_abstract_step: h_prev width mismatch");
  if (!c_prev_idx.empty() && static_cast<int>(c_prev_idx.size()) != h)
    throw std::invalid_argument("lstm_abstract_step: c_prev width mismatch");
  const bool has_c = !c_prev_idx.empty();
  const bool lazy = planes != nullptr && !planes->needs_boxes();

  MethodPlaneSource fallback(cfg);
  PlaneSource* src = planes != nullptr ? planes : &fallback;

  // Generation A: gate pre-activations plus pass-throughs for c_{t-1} and
  // the carried neurons.
  const int prev_w = state.width(state.last());
  const auto gate_row = [&](const Eigen::MatrixXd& w, int unit) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(prev_w);
    for (int k = 0; k < h && !h_prev_idx.empty(); ++k) row(h_prev_idx[k]) += w(unit, k);
    for (int k = 0; k < d; ++k) row(x_idx[k]) += w(unit, h + k);
    return row;
  };
  {
    AbstractState::Builder a(state);
    for (int j = 0; j < h; ++j) a.affine_row(gate_row(layer.w_f, j), layer.b_f(j));
    for (int j = 0; j < h; ++j) a.affine_row(gate_row(layer.w_i, j), layer.b_i(j));
    for (int j = 0; j < h; ++j) a.affine_row(gate_row(layer.w_c, j), layer.b_c(j));
    for (int j = 0; j < h; ++j) a.affine_row(gate_row(layer.w_o, j), layer.b_o(j));
    if (has_c)
      for (int idx : c_prev_idx) a.identity_row(idx);
    for (int idx : carry_idx) a.identity_row(idx);
    a.commit(AbstractState::Provenance::Affine, !lazy);
  }
  // Positions in A.
  const int zf0 = 0, zi0 = h, zc0 = 2 * h, zo0 = 3 * h;
  const int cprev0 = 4 * h;
  const int carry_a0 = has_c ? 5 * h : 4 * h;
  const int carry_n = static_cast<int>(carry_idx.size());

  const auto relax_pair = [&](int xs, int ys, BivariateKind kind) {
    Box2 box{};
    if (!lazy) {
      const Interval bx = state.bounds(state.last(), xs);
      const Interval by = state.bounds(state.last(), ys);
      box = Box2{bx.lo, bx.hi, by.lo, by.hi};
    }
    return src->planes(box, kind);
  };

  // Generation B: the two cell-state products, with the output gate and the
  // carried neurons passed through. Relaxation order per unit: forget product
  // first (if any), then the input product.
  {
    AbstractState::Builder b(state);
    if (has_c) {
      for (int j = 0; j < h; ++j)
        b.relax_row(zf0 + j, cprev0 + j, relax_pair(zf0 + j, cprev0 + j, BivariateKind::SigMul));
    }
    for (int j = 0; j < h; ++j)
      b.relax_row(zi0 + j, zc0 + j, relax_pair(zi0 + j, zc0 + j, BivariateKind::SigTanh));
    for (int j = 0; j < h; ++j) b.identity_row(zo0 + j);
    for (int k = 0; k < carry_n; ++k) b.identity_row(carry_a0 + k);
    b.commit(AbstractState::Provenance::Relax, !lazy);
  }
  const int u0 = 0;
  const int v0 = has_c ? h : 0;
  const int zo1 = has_c ? 2 * h : h;
  const int carry_b0 = zo1 + h;

  // Generation C: c_t as an exact sum, plus pass-throughs.
  {
    const int wb = state.width(state.last());
    AbstractState::Builder c(state);
    for (int j = 0; j < h; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(wb);
      if (has_c) row(u0 + j) = 1.0;
      row(v0 + j) = 1.0;
      c.affine_row(row, 0.0);
    }
    for (int j = 0; j < h; ++j) c.identity_row(zo1 + j);
    for (int k = 0; k < carry_n; ++k) c.identity_row(carry_b0 + k);
    c.commit(AbstractState::Provenance::Affine, !lazy);
  }
  const int ct0 = 0, zo2 = h, carry_c0 = 2 * h;

  // Generation D: h_t from the output gate and the new cell state, then the
  // cell state and carried neurons pass through.
  {
    AbstractState::Builder out(state);
    for (int j = 0; j < h; ++j)
      out.relax_row(zo2 + j, ct0 + j, relax_pair(zo2 + j, ct0 + j, BivariateKind::SigTanh));
    for (int j = 0; j < h; ++j) out.identity_row(ct0 + j);
    for (int k = 0; k < carry_n; ++k) out.identity_row(carry_c0 + k);
    out.commit(AbstractState::Provenance::Relax, !lazy);
  }

  LstmStepLayout layout;
  layout.gen = state.last();
  layout.h_offset = 0;
  layout.c_offset = h;
  layout.carry_offset = 2 * h;
  return layout;
}

}  // namespace lstmcert
