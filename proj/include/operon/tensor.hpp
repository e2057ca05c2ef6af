#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace operon {

struct TensorNode;

/// Dense 64-bit float tensor (up to 4 axes, row-major) with a gradient slot of
/// identical shape. Value-semantic handle into a dynamically recorded reverse-
/// mode graph: ops build nodes, backward() walks them in reverse topological
/// order. Leaves with requires_grad accumulate into grad until zero_grad().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(std::array<int, 4> shape, int ndim, bool requires_grad = false);
    static Tensor from_values(std::vector<double> values, std::array<int, 4> shape, int ndim,
                              bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor vector(std::vector<double> values, bool requires_grad = false);
    static Tensor matrix(std::vector<double> values, int rows, int cols, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::array<int, 4>& shape() const;
    int ndim() const;
    std::size_t numel() const;
    int dim(int axis) const { return shape()[axis]; }

    std::vector<double>& values();
    const std::vector<double>& values() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    bool requires_grad() const;

    double item() const;  // scalar tensors only

    TensorNode* raw() const { return node_.get(); }
    const std::shared_ptr<TensorNode>& ptr() const { return node_; }

private:
    std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
    std::array<int, 4> shape{1, 1, 1, 1};
    int ndim = 1;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;  // leaf parameter flag
    bool needs_grad = false;     // reachable from a requires_grad leaf
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;
};

/// Node factory for custom ops: `values` is the forward result, `backward_fn`
/// reads node.grad and accumulates (+=) into the parents' grads.
Tensor make_op(std::vector<double> values, std::array<int, 4> shape, int ndim,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn);

/// Populates gradients of a scalar loss with respect to every tensor reachable
/// from a requires-grad leaf. Throws on non-scalar loss.
void backward(const Tensor& loss);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor sum(const Tensor& a);

// ---- dense linear algebra ----
/// y = x W^T + b with x (B,in), W (out,in), b (out).
Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b);
/// a (m,k) times b^T with b (n,k).
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Branch-trunk contraction: branch (B, d_o*N_tr), trunk (N_x, N_tr),
/// bias (d_o) -> (B, d_o*N_x), component-blocked along the output axis.
Tensor dot_combine(const Tensor& branch, const Tensor& trunk, const Tensor& bias, int d_o);

// ---- grid/channel ops (FNO) ----
/// x (B,n1,n2,C_in) -> (B,C_out,n1,n2); fused channels-last affine + permute.
Tensor lift_channels(const Tensor& x, const Tensor& W, const Tensor& b);
/// z (B,C_in,n1,n2) -> (B,C_out,n1,n2); per-pixel channel mix.
Tensor pointwise_conv(const Tensor& z, const Tensor& W, const Tensor& b);
/// z (B,C,n1,n2) -> (B,n1,n2,d_o); fused affine + permute back.
Tensor project_channels(const Tensor& z, const Tensor& W, const Tensor& b);

// ---- losses ----
/// sum((pred - target)^2) / divisor; target is a plain constant array.
Tensor scaled_sq_error(const Tensor& pred, const std::vector<double>& target, double divisor);
/// Mean over all elements of the squared difference.
Tensor mse(const Tensor& pred, const std::vector<double>& target);

} // namespace operon
