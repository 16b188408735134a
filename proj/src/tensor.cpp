#include "mweparse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mweparse {

namespace {

using detail::TapeNode;
using NodePtr = std::shared_ptr<TapeNode>;

std::string shape_str(const TapeNode& n) {
  return std::to_string(n.rows) + "x" + std::to_string(n.cols);
}

NodePtr new_node(int rows, int cols, const char* op) {
  auto n = std::make_shared<TapeNode>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  n->op = op;
  return n;
}

// Grad buffers of every reachable node are allocated by backward() before any
// backward_fn runs, so backward_fn bodies index parents' grad unconditionally.
void attach(const NodePtr& out, std::initializer_list<NodePtr> parents,
            std::function<void(TapeNode&)> fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (!rg) return;
  out->requires_grad = true;
  out->parents.assign(parents);
  out->backward_fn = std::move(fn);
}

}  // namespace

int Tensor::index(int r, int c) const {
  if (r < 0 || r >= node_->rows || c < 0 || c >= node_->cols) {
    throw IndexError("tensor index (" + std::to_string(r) + "," + std::to_string(c) +
                     ") outside " + shape_str(*node_));
  }
  return r * node_->cols + c;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("tensor dimensions must be positive, got " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  auto n = new_node(rows, cols, "leaf");
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double v) {
  Tensor t = zeros(1, 1, false);
  t.node()->value[0] = v;
  return t;
}

Tensor Tensor::from_data(int rows, int cols, std::vector<double> data, bool requires_grad) {
  Tensor t = zeros(rows, cols, requires_grad);
  if (data.size() != t.node()->size()) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not fill " +
                     shape_str(*t.node()));
  }
  t.node()->value = std::move(data);
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  if (rows.empty() || rows[0].empty()) throw ShapeError("from_rows: empty input");
  std::vector<double> flat;
  flat.reserve(rows.size() * rows[0].size());
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw ShapeError("from_rows: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return from_data(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()),
                   std::move(flat), requires_grad);
}

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() on non-scalar tensor " + shape_str(*node_));
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw ContractError("gradient not computed; run backward() first");
  return node_->grad;
}

std::vector<double>& Tensor::mut_grad() {
  if (!has_grad()) throw ContractError("gradient not computed; run backward() first");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->size(), 0.0);
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(*a.node()) +
                     " x " + shape_str(*b.node()));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  auto out = new_node(m, n, "matmul");
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) out->value[i * n + j] += aip * bv[p * n + j];
    }
  }
  attach(out, {a.node(), b.node()}, [m, k, n](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    TapeNode& B = *o.parents[1];
    if (A.requires_grad) {
      // dL/dA = dL/dC . B^T
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double s = 0;
          for (int j = 0; j < n; ++j) s += o.grad[i * n + j] * B.value[p * n + j];
          A.grad[i * k + p] += s;
        }
    }
    if (B.requires_grad) {
      // dL/dB = A^T . dL/dC
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int i = 0; i < m; ++i) s += A.value[i * k + p] * o.grad[i * n + j];
          B.grad[p * n + j] += s;
        }
    }
  });
  return Tensor(out);
}

Tensor transpose(const Tensor& a) {
  const int m = a.rows(), n = a.cols();
  auto out = new_node(n, m, "transpose");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->value[j * m + i] = a.node()->value[i * n + j];
  attach(out, {a.node()}, [m, n](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A.grad[i * n + j] += o.grad[j * m + i];
  });
  return Tensor(out);
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes differ, " + shape_str(*a.node()) +
                     " vs " + shape_str(*b.node()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = new_node(a.rows(), a.cols(), "add");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = a.node()->value[i] + b.node()->value[i];
  attach(out, {a.node(), b.node()}, [](TapeNode& o) {
    for (int s = 0; s < 2; ++s) {
      TapeNode& p = *o.parents[s];
      if (!p.requires_grad) continue;
      for (std::size_t i = 0; i < o.size(); ++i) p.grad[i] += o.grad[i];
    }
  });
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = new_node(a.rows(), a.cols(), "mul");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = a.node()->value[i] * b.node()->value[i];
  attach(out, {a.node(), b.node()}, [](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    TapeNode& B = *o.parents[1];
    if (A.requires_grad)
      for (std::size_t i = 0; i < o.size(); ++i) A.grad[i] += o.grad[i] * B.value[i];
    if (B.requires_grad)
      for (std::size_t i = 0; i < o.size(); ++i) B.grad[i] += o.grad[i] * A.value[i];
  });
  return Tensor(out);
}

Tensor scale(const Tensor& a, double c) {
  auto out = new_node(a.rows(), a.cols(), "scale");
  for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a.node()->value[i] * c;
  attach(out, {a.node()}, [c](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (std::size_t i = 0; i < o.size(); ++i) A.grad[i] += o.grad[i] * c;
  });
  return Tensor(out);
}

Tensor tanh(const Tensor& a) {
  auto out = new_node(a.rows(), a.cols(), "tanh");
  for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = std::tanh(a.node()->value[i]);
  attach(out, {a.node()}, [](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (std::size_t i = 0; i < o.size(); ++i)
      A.grad[i] += o.grad[i] * (1.0 - o.value[i] * o.value[i]);
  });
  return Tensor(out);
}

Tensor relu(const Tensor& a) {
  auto out = new_node(a.rows(), a.cols(), "relu");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = a.node()->value[i] > 0.0 ? a.node()->value[i] : 0.0;
  attach(out, {a.node()}, [](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (std::size_t i = 0; i < o.size(); ++i)
      if (A.value[i] > 0.0) A.grad[i] += o.grad[i];
  });
  return Tensor(out);
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: need 1x" + std::to_string(a.cols()) + " bias row, got " +
                     shape_str(*row.node()) + " for " + shape_str(*a.node()));
  }
  const int m = a.rows(), n = a.cols();
  auto out = new_node(m, n, "add_row");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->value[i * n + j] = a.node()->value[i * n + j] + row.node()->value[j];
  attach(out, {a.node(), row.node()}, [m, n](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    TapeNode& R = *o.parents[1];
    if (A.requires_grad)
      for (std::size_t i = 0; i < o.size(); ++i) A.grad[i] += o.grad[i];
    if (R.requires_grad)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) R.grad[j] += o.grad[i * n + j];
  });
  return Tensor(out);
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: column counts differ, " + shape_str(*a.node()) + " vs " +
                     shape_str(*b.node()));
  }
  const int ma = a.rows(), mb = b.rows(), n = a.cols();
  auto out = new_node(ma + mb, n, "concat_rows");
  std::copy(a.node()->value.begin(), a.node()->value.end(), out->value.begin());
  std::copy(b.node()->value.begin(), b.node()->value.end(), out->value.begin() + ma * n);
  attach(out, {a.node(), b.node()}, [ma, mb, n](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    TapeNode& B = *o.parents[1];
    if (A.requires_grad)
      for (int i = 0; i < ma * n; ++i) A.grad[i] += o.grad[i];
    if (B.requires_grad)
      for (int i = 0; i < mb * n; ++i) B.grad[i] += o.grad[ma * n + i];
  });
  return Tensor(out);
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  const int v = table.rows(), d = table.cols();
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw IndexError("gather_rows: id " + std::to_string(id) + " outside [0," +
                       std::to_string(v) + ")");
    }
  }
  auto out = new_node(static_cast<int>(ids.size()), d, "gather_rows");
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.node()->value.begin() + static_cast<std::size_t>(ids[i]) * d, d,
                out->value.begin() + i * d);
  attach(out, {table.node()}, [ids, d](TapeNode& o) {
    TapeNode& T = *o.parents[0];
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j)
        T.grad[static_cast<std::size_t>(ids[i]) * d + j] += o.grad[i * d + j];
  });
  return Tensor(out);
}

Tensor softmax_rows(const Tensor& a) {
  const int m = a.rows(), n = a.cols();
  auto out = new_node(m, n, "softmax_rows");
  for (int i = 0; i < m; ++i) {
    const double* row = a.node()->value.data() + i * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < n; ++j) {
      out->value[i * n + j] = std::exp(row[j] - mx);
      z += out->value[i * n + j];
    }
    for (int j = 0; j < n; ++j) out->value[i * n + j] /= z;
  }
  attach(out, {a.node()}, [m, n](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (int i = 0; i < m; ++i) {
      double dot = 0;
      for (int j = 0; j < n; ++j) dot += o.grad[i * n + j] * o.value[i * n + j];
      for (int j = 0; j < n; ++j)
        A.grad[i * n + j] += o.value[i * n + j] * (o.grad[i * n + j] - dot);
    }
  });
  return Tensor(out);
}

Tensor sum(const Tensor& a) {
  auto out = new_node(1, 1, "sum");
  double s = 0;
  for (double v : a.node()->value) s += v;
  out->value[0] = s;
  attach(out, {a.node()}, [](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    for (std::size_t i = 0; i < A.size(); ++i) A.grad[i] += o.grad[0];
  });
  return Tensor(out);
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                             const std::vector<bool>& mask) {
  const int m = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != m || static_cast<int>(mask.size()) != m) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(m) + " logit rows vs " +
                     std::to_string(targets.size()) + " targets / " +
                     std::to_string(mask.size()) + " mask entries");
  }
  int unmasked = 0;
  for (int i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    ++unmasked;
    if (targets[i] < 0 || targets[i] >= c) {
      throw IndexError("softmax_cross_entropy: target " + std::to_string(targets[i]) +
                       " outside [0," + std::to_string(c) + ") at row " + std::to_string(i));
    }
  }
  if (unmasked == 0) {
    throw DegenerateInputError("softmax_cross_entropy: every position is masked");
  }
  auto out = new_node(1, 1, "softmax_cross_entropy");
  double total = 0;
  for (int i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    const double* row = logits.node()->value.data() + i * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    total += mx + std::log(z) - row[targets[i]];
  }
  out->value[0] = total / unmasked;
  attach(out, {logits.node()}, [m, c, targets, mask, unmasked](TapeNode& o) {
    TapeNode& L = *o.parents[0];
    const double g = o.grad[0] / unmasked;
    for (int i = 0; i < m; ++i) {
      if (!mask[i]) continue;  // masked rows get exactly zero gradient
      const double* row = L.value.data() + i * c;
      double mx = row[0];
      for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      double z = 0;
      for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
      for (int j = 0; j < c; ++j) {
        double soft = std::exp(row[j] - mx) / z;
        L.grad[i * c + j] += g * (soft - (j == targets[i] ? 1.0 : 0.0));
      }
    }
  });
  return Tensor(out);
}

Tensor custom_scalar(
    const Tensor& input, double value, const char* op,
    std::function<void(const std::vector<double>&, double, std::vector<double>&)> vjp) {
  auto out = new_node(1, 1, op);
  out->value[0] = value;
  attach(out, {input.node()}, [vjp = std::move(vjp)](TapeNode& o) {
    TapeNode& A = *o.parents[0];
    vjp(A.value, o.grad[0], A.grad);
  });
  return Tensor(out);
}

void backward(const Tensor& root) {
  if (!root.defined() || !root.is_scalar()) {
    throw ContractError("backward: root must be a scalar tensor");
  }
  // Reverse post-order DFS gives a deterministic topological order.
  std::vector<TapeNode*> order;
  std::unordered_set<TapeNode*> seen;
  std::vector<std::pair<TapeNode*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TapeNode* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (TapeNode* n : order) {
    n->grad.assign(n->size(), 0.0);
  }
  root.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TapeNode* n = *it;
    if (n->backward_fn && n->requires_grad) n->backward_fn(*n);
  }
}

}  // namespace mweparse
