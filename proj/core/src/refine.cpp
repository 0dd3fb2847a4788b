#include "lstmcert/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lstmcert {

namespace {

Region2 tri(double x0, double y0, double x1, double y1, double x2, double y2) {
  return Triangle2{{Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y1), Eigen::Vector2d(x2, y2)}};
}

void grid_split(const Box2& b, int k, std::vector<Region2>* out) {
  for (int i = 0; i < k; ++i) {
    const double x0 = b.lx + b.width() * i / k;
    const double x1 = i + 1 == k ? b.ux : b.lx + b.width() * (i + 1) / k;
    for (int j = 0; j < k; ++j) {
      const double y0 = b.ly + b.height() * j / k;
      const double y1 = j + 1 == k ? b.uy : b.ly + b.height() * (j + 1) / k;
      out->push_back(Box2{x0, x1, y0, y1});
    }
  }
}

}  // namespace

const char* strategy_name(DivisionStrategy s) {
  switch (s) {
    case DivisionStrategy::None: return "none";
    case DivisionStrategy::TriUp2: return "2-tri-up";
    case DivisionStrategy::TriDown2: return "2-tri-down";
    case DivisionStrategy::Tri4: return "4-tri";
    case DivisionStrategy::RecVec2: return "2-rec-vec";
    case DivisionStrategy::RecHor2: return "2-rec-hor";
    case DivisionStrategy::Rec4: return "4-rec";
    case DivisionStrategy::Rec9: return "9-rec";
    case DivisionStrategy::Rec16: return "16-rec";
  }
  return "none";
}

std::optional<DivisionStrategy> parse_strategy(std::string_view name) {
  for (DivisionStrategy s : all_strategies()) {
    if (name == strategy_name(s)) return s;
  }
  return std::nullopt;
}

std::vector<DivisionStrategy> all_strategies() {
  return {DivisionStrategy::None,    DivisionStrategy::TriUp2,  DivisionStrategy::TriDown2,
          DivisionStrategy::Tri4,    DivisionStrategy::RecVec2, DivisionStrategy::RecHor2,
          DivisionStrategy::Rec4,    DivisionStrategy::Rec9,    DivisionStrategy::Rec16};
}

Division divide(const Box2& box, DivisionStrategy strategy) {
  Division d;
  if (strategy == DivisionStrategy::None) {
    d.regions.push_back(box);
    return d;
  }
  if (box.width() == 0.0 || box.height() == 0.0) {
    d.regions.push_back(box);
    d.degenerate = true;
    return d;
  }
  const double mx = box.mid_x(), my = box.mid_y();
  switch (strategy) {
    case DivisionStrategy::TriUp2:
      d.regions.push_back(tri(box.lx, box.ly, box.ux, box.ly, box.ux, box.uy));
      d.regions.push_back(tri(box.lx, box.ly, box.ux, box.uy, box.lx, box.uy));
      break;
    case DivisionStrategy::TriDown2:
      d.regions.push_back(tri(box.lx, box.ly, box.ux, box.ly, box.lx, box.uy));
      d.regions.push_back(tri(box.ux, box.ly, box.ux, box.uy, box.lx, box.uy));
      break;
    case DivisionStrategy::Tri4:
      d.regions.push_back(tri(box.lx, box.ly, box.ux, box.ly, mx, my));
      d.regions.push_back(tri(box.ux, box.ly, box.ux, box.uy, mx, my));
      d.regions.push_back(tri(box.ux, box.uy, box.lx, box.uy, mx, my));
      d.regions.push_back(tri(box.lx, box.uy, box.lx, box.ly, mx, my));
      break;
    case DivisionStrategy::RecVec2:
      d.regions.push_back(Box2{box.lx, mx, box.ly, box.uy});
      d.regions.push_back(Box2{mx, box.ux, box.ly, box.uy});
      break;
    case DivisionStrategy::RecHor2:
      d.regions.push_back(Box2{box.lx, box.ux, box.ly, my});
      d.regions.push_back(Box2{box.lx, box.ux, my, box.uy});
      break;
    case DivisionStrategy::Rec4: grid_split(box, 2, &d.regions); break;
    case DivisionStrategy::Rec9: grid_split(box, 3, &d.regions); break;
    case DivisionStrategy::Rec16: grid_split(box, 4, &d.regions); break;
    case DivisionStrategy::None: break;
  }
  return d;
}

CandidateSet candidate_planes(const Box2& box, BivariateKind kind, DivisionStrategy strategy,
                              const RelaxConfig& cfg) {
  CandidateSet set;
  set.regions.push_back(box);
  if (strategy != DivisionStrategy::None) {
    Division d = divide(box, strategy);
    if (!d.degenerate) {
      for (const auto& r : d.regions) set.regions.push_back(r);
    }
  }
  const Region2 full(box);
  for (const Region2& region : set.regions) {
    const PlanePair local = relax_region(region, kind, cfg);
    set.lower_planes.push_back(offset_lower(local.lower, full, kind, cfg.offset_grid));
    set.upper_planes.push_back(offset_upper(local.upper, full, kind, cfg.offset_grid));
  }
  return set;
}

PlaneCoeffs combine(const std::vector<PlaneCoeffs>& candidates, const Eigen::VectorXd& lambda) {
  if (static_cast<std::size_t>(lambda.size()) != candidates.size())
    throw std::invalid_argument("combine: lambda size mismatch");
  double sum = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-9) throw std::invalid_argument("combine: negative lambda");
    sum += lambda(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("combine: lambda must sum to 1");
  PlaneCoeffs out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double w = lambda(static_cast<int>(k));
    out.a += w * candidates[k].a;
    out.b += w * candidates[k].b;
    out.c += w * candidates[k].c;
  }
  return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  for (int j = 0; j < n; ++j) {
    css += u[j];
    const double t = (1.0 - css) / (j + 1);
    if (u[j] + t > 0.0) tau = t;
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = std::max(v(i) + tau, 0.0);
  return out;
}

AscentResult optimize_lambda(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& init, const SimplexBlocks& blocks,
                             const AscentSchedule& schedule,
                             const std::function<bool()>& cancelled) {
  const auto project_blocks = [&](Eigen::VectorXd v) {
    for (const auto& [off, len] : blocks.spans) {
      v.segment(off, len) = project_to_simplex(v.segment(off, len));
    }
    return v;
  };

  AscentResult res;
  res.lambda = init;
  res.best_margin = objective(init);
  if (res.best_margin >= 0.0) return res;

  Eigen::VectorXd current = init;
  Eigen::VectorXd grad(init.size());
  bool grad_valid = false;
  double step = schedule.step;
  int since_improve = 0;

  for (int iter = 1; iter <= schedule.max_iters; ++iter) {
    if (cancelled && cancelled()) break;
    res.iterations = iter;
    if (!grad_valid) {
      Eigen::VectorXd probe = current;
      for (int i = 0; i < current.size(); ++i) {
        const double v0 = current(i);
        probe(i) = v0 + schedule.fd_step;
        const double up = objective(probe);
        probe(i) = v0 - schedule.fd_step;
        const double dn = objective(probe);
        probe(i) = v0;
        grad(i) = (up - dn) / (2.0 * schedule.fd_step);
      }
      grad_valid = true;
    }
    const Eigen::VectorXd cand = project_blocks(current + step * grad);
    const double m = objective(cand);
    if (m > res.best_margin) {
      res.best_margin = m;
      res.lambda = cand;
      current = cand;
      grad_valid = false;
      since_improve = 0;
      if (m >= 0.0) break;
    } else {
      if (++since_improve >= schedule.patience) break;
    }
    if (iter % schedule.decay_every == 0) step *= schedule.decay;
  }
  return res;
}

}  // namespace lstmcert
