#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mweparse/errors.hpp"

namespace mweparse {

namespace detail {

// One node of the reverse-mode tape. Holds the forward value and, during
// backward(), the accumulated adjoint. Parents are kept alive through
// shared_ptr so a Tensor handle to the loss keeps the whole graph reachable.
struct TapeNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily by backward()
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TapeNode>> parents;
  // Pushes this node's grad into parents' grad buffers.
  std::function<void(TapeNode&)> backward_fn;

  std::size_t size() const { return value.size(); }
};

}  // namespace detail

// Dense row-major 2-D tensor of doubles. Scalars are 1x1, row vectors 1xn.
// Copying a Tensor copies the handle, not the data. A graph of tensors is
// confined to one thread; independent graphs may run concurrently.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor from_data(int rows, int cols, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  int size() const { return node_->rows * node_->cols; }
  bool is_scalar() const { return defined() && size() == 1; }

  double at(int r, int c) const { return node_->value[index(r, c)]; }
  // Leaf mutation for the optimizer; never use on interior nodes.
  double& mut_at(int r, int c) { return node_->value[index(r, c)]; }
  double item() const;

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mut_data() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  std::vector<double>& mut_grad();
  void zero_grad();

  std::shared_ptr<detail::TapeNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TapeNode> node) : node_(std::move(node)) {}

 private:
  int index(int r, int c) const;
  std::shared_ptr<detail::TapeNode> node_;
};

// --- forward operations (each registers its backward rule) ---

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
// a[n x d] + row[1 x d] broadcast over rows; the only broadcast we allow.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor softmax_rows(const Tensor& a);
Tensor sum(const Tensor& a);
// Mean of -log softmax(logits[i])[targets[i]] over rows with mask true.
// Masked rows contribute nothing to the value or the gradient.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                             const std::vector<bool>& mask);

// Scalar node with a caller-supplied gradient rule; vjp(input_value, upstream,
// input_grad) accumulates d(value)/d(input) * upstream into input_grad.
Tensor custom_scalar(
    const Tensor& input, double value, const char* op,
    std::function<void(const std::vector<double>&, double, std::vector<double>&)> vjp);

// Reverse pass from a scalar root. Grad buffers of every reachable node are
// reset first, so repeated calls on the same graph are idempotent.
void backward(const Tensor& root);

}  // namespace mweparse
