#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lstmcert/relax.hpp"

namespace lstmcert {

enum class DivisionStrategy {
  None,
  TriUp2,
  TriDown2,
  Tri4,
  RecVec2,
  RecHor2,
  Rec4,
  Rec9,
  Rec16,
};

// CLI names: "none", "2-tri-up", "2-tri-down", "4-tri", "2-rec-vec",
// "2-rec-hor", "4-rec", "9-rec", "16-rec".
const char* strategy_name(DivisionStrategy s);
std::optional<DivisionStrategy> parse_strategy(std::string_view name);
std::vector<DivisionStrategy> all_strategies();

struct Division {
  std::vector<Region2> regions;
  bool degenerate = false;  // box had a zero-width axis; returned unchanged
};

// Deterministic tiling of the box. Sub-regions share edges and tile the box
// exactly. TriUp2 splits along the (lx,ly)-(ux,uy) diagonal, TriDown2 along
// (lx,uy)-(ux,ly); Tri4 joins each edge to the center.
Division divide(const Box2& box, DivisionStrategy strategy);

// Candidate bounding planes: index 0 is the undivided region, then one
// candidate per sub-region. Every plane is offset-corrected over the FULL box
// so any convex combination of candidates is sound over it.
struct CandidateSet {
  std::vector<Region2> regions;
  std::vector<PlaneCoeffs> lower_planes;
  std::vector<PlaneCoeffs> upper_planes;
  std::size_t count() const { return lower_planes.size(); }
};

CandidateSet candidate_planes(const Box2& box, BivariateKind kind, DivisionStrategy strategy,
                              const RelaxConfig& cfg);

// Convex combination of candidate planes. lambda must lie on the probability
// simplex to within 1e-9.
PlaneCoeffs combine(const std::vector<PlaneCoeffs>& candidates, const Eigen::VectorXd& lambda);

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

// Contiguous simplex-constrained spans of a concatenated lambda vector.
struct SimplexBlocks {
  std::vector<std::pair<int, int>> spans;  // (offset, length)
};

struct AscentSchedule {
  double step = 0.05;
  double decay = 0.7;
  int decay_every = 20;
  int max_iters = 100;
  int patience = 15;     // stop after this many non-improving iterations
  double fd_step = 1e-4;
};

struct AscentResult {
  Eigen::VectorXd lambda;
  double best_margin = 0.0;
  int iterations = 0;
};

// Projected gradient ascent of the margin over per-block simplices. Gradients
// come from central finite differences; an update is kept only if it strictly
// improves the margin. Stops early once the margin is nonnegative, and always
// returns the best point seen.
AscentResult optimize_lambda(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& init, const SimplexBlocks& blocks,
                             const AscentSchedule& schedule,
                             const std::function<bool()>& cancelled = {});

}  // namespace lstmcert
