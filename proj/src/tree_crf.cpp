#include "mweparse/tree_crf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace mweparse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Finite stand-in for a forbidden arc inside Chu-Liu/Edmonds contractions.
constexpr double kForbidden = -1e30;

double log_sum_exp(const std::vector<double>& xs) {
  double mx = kNegInf;
  for (double x : xs) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_scores(const ArcScores& a) {
  if (a.n < 1) throw DegenerateInputError("arc scores for an empty sentence");
  if (a.scores.size() != static_cast<std::size_t>(a.n + 1) * a.n) {
    throw ShapeError("arc score matrix has " + std::to_string(a.scores.size()) +
                     " entries, expected " + std::to_string((a.n + 1) * a.n));
  }
  for (int h = 0; h <= a.n; ++h)
    for (int d = 1; d <= a.n; ++d)
      if (h != d && !std::isfinite(a.at(h, d)))
        throw ContractError("non-finite arc score at (" + std::to_string(h) + "," +
                            std::to_string(d) + ")");
}

void check_gold(const DepTree& gold, int n, Regime regime) {
  if (gold.size() != n || !is_valid_tree(gold.heads)) {
    throw ContractError("gold heads do not form a valid single-rooted tree");
  }
  if (regime == Regime::Projective && !is_projective(gold.heads)) {
    throw RegimeMismatchError("gold tree is non-projective");
  }
}

}  // namespace

ArcScores ArcScores::zeros(int n) {
  ArcScores a;
  a.n = n;
  a.scores.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
  return a;
}

double ArcScores::at(int head, int dep) const {
  return scores[static_cast<std::size_t>(head) * n + (dep - 1)];
}

double& ArcScores::at(int head, int dep) {
  return scores[static_cast<std::size_t>(head) * n + (dep - 1)];
}

bool is_valid_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return false;
  int roots = 0;
  for (int d = 1; d <= n; ++d) {
    int h = heads[d - 1];
    if (h < 0 || h > n || h == d) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  for (int d = 1; d <= n; ++d) {
    int cur = d;
    int steps = 0;
    while (cur != 0) {
      cur = heads[cur - 1];
      if (++steps > n) return false;  // cycle
    }
  }
  return true;
}

bool is_projective(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int d = 1; d <= n; ++d) {
    int lo = std::min(heads[d - 1], d);
    int hi = std::max(heads[d - 1], d);
    for (int e = 1; e <= n; ++e) {
      int lo2 = std::min(heads[e - 1], e);
      int hi2 = std::max(heads[e - 1], e);
      if (lo < lo2 && lo2 < hi && hi < hi2) return false;
    }
  }
  return true;
}

double tree_score(const ArcScores& scores, const DepTree& tree) {
  double total = 0;
  for (int d = 1; d <= scores.n; ++d) total += scores.at(tree.heads[d - 1], d);
  return total;
}

// ---------------------------------------------------------------------------
// Projective regime: first-order inside chart over complete/incomplete spans,
// marginals by reverse accumulation through the same chart.

namespace {

struct EisnerChart {
  int n;
  // indexed [i * (n + 1) + j], positions 1..n
  std::vector<double> cl, cr, il, ir;
  double log_z = kNegInf;

  explicit EisnerChart(int n_)
      : n(n_),
        cl(static_cast<std::size_t>(n_ + 1) * (n_ + 1), kNegInf),
        cr(cl),
        il(cl),
        ir(cl) {}
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * (n + 1) + j; }
};

EisnerChart eisner_inside(const ArcScores& s) {
  const int n = s.n;
  EisnerChart ch(n);
  for (int i = 1; i <= n; ++i) ch.cl[ch.idx(i, i)] = ch.cr[ch.idx(i, i)] = 0.0;
  std::vector<double> acc;
  for (int len = 1; len < n; ++len) {
    for (int i = 1; i + len <= n; ++i) {
      const int j = i + len;
      acc.clear();
      for (int k = i; k < j; ++k)
        acc.push_back(ch.cr[ch.idx(i, k)] + ch.cl[ch.idx(k + 1, j)]);
      const double span = log_sum_exp(acc);
      ch.il[ch.idx(i, j)] = span + s.at(j, i);
      ch.ir[ch.idx(i, j)] = span + s.at(i, j);
      acc.clear();
      for (int k = i; k < j; ++k)
        acc.push_back(ch.cl[ch.idx(i, k)] + ch.il[ch.idx(k, j)]);
      ch.cl[ch.idx(i, j)] = log_sum_exp(acc);
      acc.clear();
      for (int k = i + 1; k <= j; ++k)
        acc.push_back(ch.ir[ch.idx(i, k)] + ch.cr[ch.idx(k, j)]);
      ch.cr[ch.idx(i, j)] = log_sum_exp(acc);
    }
  }
  acc.clear();
  for (int k = 1; k <= n; ++k)
    acc.push_back(s.at(0, k) + ch.cl[ch.idx(1, k)] + ch.cr[ch.idx(k, n)]);
  ch.log_z = log_sum_exp(acc);
  return ch;
}

std::vector<double> eisner_marginals(const ArcScores& s, const EisnerChart& ch) {
  const int n = s.n;
  std::vector<double> mu(static_cast<std::size_t>(n + 1) * n, 0.0);
  std::vector<double> gcl(ch.cl.size(), 0.0), gcr(gcl), gil(gcl), gir(gcl);
  for (int k = 1; k <= n; ++k) {
    double w = std::exp(s.at(0, k) + ch.cl[ch.idx(1, k)] + ch.cr[ch.idx(k, n)] - ch.log_z);
    mu[k - 1] += w;  // root arc (0, k)
    gcl[ch.idx(1, k)] += w;
    gcr[ch.idx(k, n)] += w;
  }
  for (int len = n - 1; len >= 1; --len) {
    for (int i = 1; i + len <= n; ++i) {
      const int j = i + len;
      // complete items first: they feed incomplete items of the same length
      double g = gcr[ch.idx(i, j)];
      if (g > 0) {
        for (int k = i + 1; k <= j; ++k) {
          double w =
              g * std::exp(ch.ir[ch.idx(i, k)] + ch.cr[ch.idx(k, j)] - ch.cr[ch.idx(i, j)]);
          gir[ch.idx(i, k)] += w;
          gcr[ch.idx(k, j)] += w;
        }
      }
      g = gcl[ch.idx(i, j)];
      if (g > 0) {
        for (int k = i; k < j; ++k) {
          double w =
              g * std::exp(ch.cl[ch.idx(i, k)] + ch.il[ch.idx(k, j)] - ch.cl[ch.idx(i, j)]);
          gcl[ch.idx(i, k)] += w;
          gil[ch.idx(k, j)] += w;
        }
      }
      g = gir[ch.idx(i, j)];
      if (g > 0) {
        mu[static_cast<std::size_t>(i) * n + (j - 1)] += g;
        const double span = ch.ir[ch.idx(i, j)] - s.at(i, j);
        for (int k = i; k < j; ++k) {
          double w = g * std::exp(ch.cr[ch.idx(i, k)] + ch.cl[ch.idx(k + 1, j)] - span);
          gcr[ch.idx(i, k)] += w;
          gcl[ch.idx(k + 1, j)] += w;
        }
      }
      g = gil[ch.idx(i, j)];
      if (g > 0) {
        mu[static_cast<std::size_t>(j) * n + (i - 1)] += g;
        const double span = ch.il[ch.idx(i, j)] - s.at(j, i);
        for (int k = i; k < j; ++k) {
          double w = g * std::exp(ch.cr[ch.idx(i, k)] + ch.cl[ch.idx(k + 1, j)] - span);
          gcr[ch.idx(i, k)] += w;
          gcl[ch.idx(k + 1, j)] += w;
        }
      }
    }
  }
  return mu;
}

DepTree eisner_map(const ArcScores& s) {
  const int n = s.n;
  EisnerChart ch(n);
  std::vector<int> bcl(ch.cl.size(), -1), bcr(bcl), bil(bcl), bir(bcl);
  for (int i = 1; i <= n; ++i) ch.cl[ch.idx(i, i)] = ch.cr[ch.idx(i, i)] = 0.0;
  for (int len = 1; len < n; ++len) {
    for (int i = 1; i + len <= n; ++i) {
      const int j = i + len;
      double best = kNegInf;
      int arg = -1;
      for (int k = i; k < j; ++k) {
        double v = ch.cr[ch.idx(i, k)] + ch.cl[ch.idx(k + 1, j)];
        if (v > best) best = v, arg = k;
      }
      ch.il[ch.idx(i, j)] = best + s.at(j, i);
      ch.ir[ch.idx(i, j)] = best + s.at(i, j);
      bil[ch.idx(i, j)] = bir[ch.idx(i, j)] = arg;
      best = kNegInf, arg = -1;
      for (int k = i; k < j; ++k) {
        double v = ch.cl[ch.idx(i, k)] + ch.il[ch.idx(k, j)];
        if (v > best) best = v, arg = k;
      }
      ch.cl[ch.idx(i, j)] = best;
      bcl[ch.idx(i, j)] = arg;
      best = kNegInf, arg = -1;
      for (int k = i + 1; k <= j; ++k) {
        double v = ch.ir[ch.idx(i, k)] + ch.cr[ch.idx(k, j)];
        if (v > best) best = v, arg = k;
      }
      ch.cr[ch.idx(i, j)] = best;
      bcr[ch.idx(i, j)] = arg;
    }
  }
  double best = kNegInf;
  int root = -1;
  for (int k = 1; k <= n; ++k) {
    double v = s.at(0, k) + ch.cl[ch.idx(1, k)] + ch.cr[ch.idx(k, n)];
    if (v > best) best = v, root = k;
  }

  DepTree tree;
  tree.heads.assign(n, -1);
  // item kinds: 0 = complete-left, 1 = complete-right, 2 = inc-left, 3 = inc-right
  std::vector<std::array<int, 3>> todo{{0, 1, root}, {1, root, n}};
  while (!todo.empty()) {
    auto [kind, i, j] = todo.back();
    todo.pop_back();
    if (i == j && kind < 2) continue;
    const std::size_t id = ch.idx(i, j);
    switch (kind) {
      case 0:
        todo.push_back({0, i, bcl[id]});
        todo.push_back({2, bcl[id], j});
        break;
      case 1:
        todo.push_back({3, i, bcr[id]});
        todo.push_back({1, bcr[id], j});
        break;
      case 2:
        tree.heads[i - 1] = j;
        todo.push_back({1, i, bil[id]});
        todo.push_back({0, bil[id] + 1, j});
        break;
      case 3:
        tree.heads[j - 1] = i;
        todo.push_back({1, i, bir[id]});
        todo.push_back({0, bir[id] + 1, j});
        break;
    }
  }
  tree.heads[root - 1] = 0;
  return tree;
}

}  // namespace

// ---------------------------------------------------------------------------
// Non-projective regime: matrix-tree construction with the root-row
// replacement enforcing a single root child. Per-column score maxima are
// factored out of the weights before the determinant; they cancel exactly in
// the marginal formulas.

namespace {

struct MatrixTree {
  int n = 0;
  std::vector<double> col_max;  // per dependent
  std::vector<double> w;        // exp(score - col_max), (n+1) x n layout
  std::vector<double> lu;       // row-major n x n factorization of L-hat
  std::vector<int> piv;
  double log_det = 0;
};

// Partial-pivoting LU of the scaled root-adjusted Laplacian. Returns false on
// a collapsed pivot or a non-positive determinant; caller retries with jitter.
bool factorize(MatrixTree& mt, double jitter) {
  const int n = mt.n;
  auto wgt = [&](int h, int d) { return mt.w[static_cast<std::size_t>(h) * n + (d - 1)]; };
  std::vector<double>& a = mt.lu;
  a.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 1; j <= n; ++j) {
    a[j - 1] = wgt(0, j);  // replaced first row carries the root weights
    if (j != 1) {
      double diag = 0;
      for (int h = 1; h <= n; ++h)
        if (h != j) diag += wgt(h, j);
      a[static_cast<std::size_t>(j - 1) * n + (j - 1)] = diag + jitter;
    }
    for (int h = 2; h <= n; ++h)
      if (h != j) a[static_cast<std::size_t>(h - 1) * n + (j - 1)] = -wgt(h, j);
  }
  mt.piv.assign(n, 0);
  int sign = 1;
  double log_abs = 0;
  for (int col = 0; col < n; ++col) {
    int p = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[static_cast<std::size_t>(r) * n + col]) >
          std::fabs(a[static_cast<std::size_t>(p) * n + col]))
        p = r;
    mt.piv[col] = p;
    if (p != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(p) * n + c],
                  a[static_cast<std::size_t>(col) * n + c]);
      sign = -sign;
    }
    double pivot = a[static_cast<std::size_t>(col) * n + col];
    if (std::fabs(pivot) < 1e-300 || !std::isfinite(pivot)) return false;
    if (pivot < 0) sign = -sign;
    log_abs += std::log(std::fabs(pivot));
    for (int r = col + 1; r < n; ++r) {
      double f = a[static_cast<std::size_t>(r) * n + col] / pivot;
      a[static_cast<std::size_t>(r) * n + col] = f;
      for (int c = col + 1; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
    }
  }
  if (sign <= 0) return false;  // Z is a sum of positive tree weights
  mt.log_det = log_abs;
  return true;
}

MatrixTree build_matrix_tree(const ArcScores& s) {
  MatrixTree mt;
  const int n = mt.n = s.n;
  mt.col_max.assign(n, kNegInf);
  for (int d = 1; d <= n; ++d)
    for (int h = 0; h <= n; ++h)
      if (h != d) mt.col_max[d - 1] = std::max(mt.col_max[d - 1], s.at(h, d));
  mt.w.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d)
        mt.w[static_cast<std::size_t>(h) * n + (d - 1)] =
            std::exp(s.at(h, d) - mt.col_max[d - 1]);
  if (!factorize(mt, 0.0) && !factorize(mt, 1e-12)) {
    throw NumericalDegeneracyError("matrix-tree Laplacian is numerically singular");
  }
  return mt;
}

// Inverse of L-hat from its LU factors, one unit-vector solve per column.
std::vector<double> lu_inverse(const MatrixTree& mt) {
  const int n = mt.n;
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> x(n);
  for (int col = 0; col < n; ++col) {
    std::fill(x.begin(), x.end(), 0.0);
    x[col] = 1.0;
    for (int i = 0; i < n; ++i) std::swap(x[i], x[mt.piv[i]]);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) x[i] -= mt.lu[static_cast<std::size_t>(i) * n + j] * x[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) x[i] -= mt.lu[static_cast<std::size_t>(i) * n + j] * x[j];
      x[i] /= mt.lu[static_cast<std::size_t>(i) * n + i];
    }
    for (int r = 0; r < n; ++r) inv[static_cast<std::size_t>(r) * n + col] = x[r];
  }
  return inv;
}

std::vector<double> matrix_tree_marginals(const MatrixTree& mt) {
  const int n = mt.n;
  const std::vector<double> inv = lu_inverse(mt);
  auto binv = [&](int r, int c) { return inv[static_cast<std::size_t>(r - 1) * n + (c - 1)]; };
  auto wgt = [&](int h, int d) { return mt.w[static_cast<std::size_t>(h) * n + (d - 1)]; };
  std::vector<double> mu(static_cast<std::size_t>(n + 1) * n, 0.0);
  for (int m = 1; m <= n; ++m) {
    mu[m - 1] = wgt(0, m) * binv(m, 1);
    for (int h = 1; h <= n; ++h) {
      if (h == m) continue;
      double v = 0;
      if (m != 1) v += binv(m, m);
      if (h != 1) v -= binv(m, h);
      mu[static_cast<std::size_t>(h) * n + (m - 1)] = wgt(h, m) * v;
    }
  }
  return mu;
}

// Chu-Liu/Edmonds maximum spanning arborescence rooted at node 0 over nodes
// 0..n, dense scores, recursive cycle contraction.
std::vector<int> cle(std::vector<std::vector<double>> sc) {
  const int n = static_cast<int>(sc.size()) - 1;
  std::vector<int> best_head(n + 1, -1);
  for (int d = 1; d <= n; ++d) {
    double best = kNegInf;
    for (int h = 0; h <= n; ++h) {
      if (h == d) continue;
      if (sc[h][d] > best) best = sc[h][d], best_head[d] = h;
    }
  }
  // find a cycle among the greedy heads
  std::vector<int> color(n + 1, 0);
  std::vector<int> cycle;
  for (int start = 1; start <= n && cycle.empty(); ++start) {
    if (color[start] != 0) continue;
    int v = start;
    std::vector<int> path;
    while (v != 0 && color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = best_head[v];
    }
    if (v != 0 && color[v] == 1) {
      auto it = std::find(path.begin(), path.end(), v);
      cycle.assign(it, path.end());
    }
    for (int u : path) color[u] = 2;
  }
  if (cycle.empty()) return best_head;

  std::vector<bool> in_cycle(n + 1, false);
  for (int v : cycle) in_cycle[v] = true;
  double cycle_score = 0;
  for (int v : cycle) cycle_score += sc[best_head[v]][v];

  // contract: node 0, nodes outside the cycle, then the merged node labelled m
  std::vector<int> keep;
  for (int v = 1; v <= n; ++v)
    if (!in_cycle[v]) keep.push_back(v);
  const int m = static_cast<int>(keep.size()) + 1;
  std::vector<std::vector<double>> sub(m + 1, std::vector<double>(m + 1, kForbidden));
  std::vector<int> enter_via(m + 1, -1);  // which cycle node an entering arc rewires
  auto old_of = [&](int idx) { return idx == 0 ? 0 : keep[idx - 1]; };
  for (int a = 0; a < m; ++a) {
    int va = old_of(a);
    for (int b = 1; b < m; ++b) {
      int vb = old_of(b);
      if (va != vb) sub[a][b] = sc[va][vb];
    }
    double best = kForbidden;
    int best_target = -1;
    for (int v : cycle) {
      if (va == v) continue;
      double gain = sc[va][v] - sc[best_head[v]][v];
      if (best_target == -1 || gain > best) best = gain, best_target = v;
    }
    sub[a][m] = cycle_score + best;
    enter_via[a] = best_target;
  }
  for (int b = 1; b < m; ++b) {
    int vb = old_of(b);
    double best = kForbidden;
    for (int v : cycle) best = std::max(best, sc[v][vb]);
    sub[m][b] = best;
  }

  std::vector<int> sub_heads = cle(std::move(sub));

  std::vector<int> heads(n + 1, -1);
  for (int b = 1; b < m; ++b) {
    int vb = old_of(b);
    int h = sub_heads[b];
    if (h == m) {
      double best = kNegInf;
      int arg = -1;
      for (int v : cycle)
        if (sc[v][vb] > best) best = sc[v][vb], arg = v;
      heads[vb] = arg;
    } else {
      heads[vb] = old_of(h);
    }
  }
  for (int v : cycle) heads[v] = best_head[v];
  heads[enter_via[sub_heads[m]]] = old_of(sub_heads[m]);
  return heads;
}

DepTree cle_map(const ArcScores& s) {
  const int n = s.n;
  auto dense = [&](bool forced, int forced_root) {
    std::vector<std::vector<double>> sc(n + 1, std::vector<double>(n + 1, kForbidden));
    for (int h = 0; h <= n; ++h)
      for (int d = 1; d <= n; ++d) {
        if (h == d) continue;
        if (forced && h == 0 && d != forced_root) continue;
        sc[h][d] = s.at(h, d);
      }
    return sc;
  };
  auto to_tree = [&](const std::vector<int>& heads) {
    DepTree t;
    t.heads.assign(heads.begin() + 1, heads.end());
    return t;
  };

  DepTree unconstrained = to_tree(cle(dense(false, 0)));
  if (std::count(unconstrained.heads.begin(), unconstrained.heads.end(), 0) == 1) {
    return unconstrained;
  }
  // otherwise the best tree under each forced root child, exact by exhaustion
  DepTree best_tree;
  double best = kNegInf;
  for (int k = 1; k <= n; ++k) {
    DepTree t = to_tree(cle(dense(true, k)));
    double v = tree_score(s, t);
    if (v > best) best = v, best_tree = t;
  }
  return best_tree;
}

}  // namespace

// ---------------------------------------------------------------------------

double log_partition(const ArcScores& scores, Regime regime) {
  check_scores(scores);
  if (regime == Regime::Projective) return eisner_inside(scores).log_z;
  const MatrixTree mt = build_matrix_tree(scores);
  return std::accumulate(mt.col_max.begin(), mt.col_max.end(), mt.log_det);
}

std::vector<double> marginals(const ArcScores& scores, Regime regime) {
  check_scores(scores);
  if (regime == Regime::Projective) {
    const EisnerChart ch = eisner_inside(scores);
    return eisner_marginals(scores, ch);
  }
  return matrix_tree_marginals(build_matrix_tree(scores));
}

DepTree map_tree(const ArcScores& scores, Regime regime) {
  check_scores(scores);
  return regime == Regime::Projective ? eisner_map(scores) : cle_map(scores);
}

NllResult tree_nll(const ArcScores& scores, const DepTree& gold, Regime regime) {
  check_scores(scores);
  check_gold(gold, scores.n, regime);
  NllResult res;
  res.loss = log_partition(scores, regime) - tree_score(scores, gold);
  res.grad = marginals(scores, regime);
  for (int d = 1; d <= scores.n; ++d)
    res.grad[static_cast<std::size_t>(gold.heads[d - 1]) * scores.n + (d - 1)] -= 1.0;
  return res;
}

Tensor tree_nll_op(const Tensor& scores_tensor, const DepTree& gold, Regime regime) {
  const int n = scores_tensor.cols();
  if (scores_tensor.rows() != n + 1) {
    throw ShapeError("tree_nll_op: expected (n+1) x n arc scores, got " +
                     std::to_string(scores_tensor.rows()) + "x" + std::to_string(n));
  }
  ArcScores s;
  s.n = n;
  s.scores = scores_tensor.data();
  NllResult res = tree_nll(s, gold, regime);
  return custom_scalar(
      scores_tensor, res.loss, "tree_nll",
      [gold, regime, n](const std::vector<double>& value, double upstream,
                        std::vector<double>& grad) {
        ArcScores sc;
        sc.n = n;
        sc.scores = value;
        NllResult r = tree_nll(sc, gold, regime);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += upstream * r.grad[i];
      });
}

std::vector<DepTree> enumerate_trees(int n, Regime regime) {
  if (n < 1 || n > 7) {
    throw ContractError("enumerate_trees supports 1 <= n <= 7, got " + std::to_string(n));
  }
  std::vector<DepTree> out;
  std::vector<int> heads(n, 0);
  while (true) {
    if (is_valid_tree(heads) &&
        (regime == Regime::NonProjective || is_projective(heads))) {
      out.push_back(DepTree{heads});
    }
    int i = 0;
    while (i < n && heads[i] == n) heads[i++] = 0;
    if (i == n) break;
    ++heads[i];
  }
  return out;
}

}  // namespace mweparse
