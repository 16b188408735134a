#pragma once

#include <vector>

#include "mweparse/errors.hpp"
#include "mweparse/tensor.hpp"

namespace mweparse {

enum class Regime { Projective, NonProjective };

// Log-potentials for head->dependent arcs, heads 0..n (0 = artificial root),
// dependents 1..n. Row-major (n+1) x n; self-arcs are never read.
struct ArcScores {
  int n = 0;
  std::vector<double> scores;  // scores[h * n + (d - 1)]

  static ArcScores zeros(int n);
  double at(int head, int dep) const;
  double& at(int head, int dep);
};

// heads[d-1] in [0, n]; exactly one dependent of the artificial root.
struct DepTree {
  std::vector<int> heads;
  bool operator==(const DepTree&) const = default;
  int size() const { return static_cast<int>(heads.size()); }
};

bool is_valid_tree(const std::vector<int>& heads);
bool is_projective(const std::vector<int>& heads);

double tree_score(const ArcScores& scores, const DepTree& tree);

// log sum over all single-root trees of exp(sum of arc scores).
double log_partition(const ArcScores& scores, Regime regime);

// mu[h][d] = P((h,d) in tree), same layout as ArcScores. Columns sum to 1.
std::vector<double> marginals(const ArcScores& scores, Regime regime);

DepTree map_tree(const ArcScores& scores, Regime regime);

struct NllResult {
  double loss = 0;            // logZ - score(gold), >= 0
  std::vector<double> grad;   // mu - gold indicator, ArcScores layout
};
NllResult tree_nll(const ArcScores& scores, const DepTree& gold, Regime regime);

// Tape-integrated NLL. scores_tensor is (n+1) x n in ArcScores layout; the
// registered backward adds upstream * (mu - gold indicator).
Tensor tree_nll_op(const Tensor& scores_tensor, const DepTree& gold, Regime regime);

// Exhaustive oracle: every valid single-root tree exactly once, n <= 7.
std::vector<DepTree> enumerate_trees(int n, Regime regime);

}  // namespace mweparse
