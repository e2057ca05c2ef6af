#include "operon/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace operon {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

std::size_t shape_numel(const std::array<int, 4>& shape) {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3];
}

std::shared_ptr<TensorNode> new_node(std::array<int, 4> shape, int ndim, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    for (int i = ndim; i < 4; ++i) shape[i] = 1;
    node->shape = shape;
    node->ndim = ndim;
    node->val.assign(shape_numel(shape), 0.0);
    node->grad.assign(node->val.size(), 0.0);
    node->requires_grad = requires_grad;
    node->needs_grad = requires_grad;
    return node;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace

Tensor Tensor::zeros(std::array<int, 4> shape, int ndim, bool requires_grad) {
    return Tensor(new_node(shape, ndim, requires_grad));
}

Tensor Tensor::from_values(std::vector<double> values, std::array<int, 4> shape, int ndim,
                           bool requires_grad) {
    auto node = new_node(shape, ndim, requires_grad);
    if (values.size() != node->val.size()) throw std::invalid_argument("Tensor::from_values: size mismatch");
    node->val = std::move(values);
    return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({v}, {1, 1, 1, 1}, 1, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
    const int n = static_cast<int>(values.size());
    return from_values(std::move(values), {n, 1, 1, 1}, 1, requires_grad);
}

Tensor Tensor::matrix(std::vector<double> values, int rows, int cols, bool requires_grad) {
    return from_values(std::move(values), {rows, cols, 1, 1}, 2, requires_grad);
}

const std::array<int, 4>& Tensor::shape() const { return node_->shape; }
int Tensor::ndim() const { return node_->ndim; }
std::size_t Tensor::numel() const { return node_->val.size(); }
std::vector<double>& Tensor::values() { return node_->val; }
const std::vector<double>& Tensor::values() const { return node_->val; }
std::vector<double>& Tensor::grad() { return node_->grad; }
const std::vector<double>& Tensor::grad() const { return node_->grad; }
bool Tensor::requires_grad() const { return node_->requires_grad; }

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar");
    return node_->val[0];
}

Tensor make_op(std::vector<double> values, std::array<int, 4> shape, int ndim,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn) {
    auto node = new_node(shape, ndim, false);
    if (values.size() != node->val.size()) throw std::invalid_argument("make_op: value size mismatch");
    node->val = std::move(values);
    bool needs = false;
    for (const Tensor& p : parents) needs = needs || p.raw()->needs_grad;
    if (needs) {
        node->needs_grad = true;
        node->parents.reserve(parents.size());
        for (const Tensor& p : parents) node->parents.push_back(p.ptr());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(node);
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");

    // reverse topological order via iterative DFS
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.push_back({loss.raw(), 0});
    seen.insert(loss.raw());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            TensorNode* child = node->parents[next_child].get();
            ++next_child;
            if (child->needs_grad && !seen.count(child)) {
                seen.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.raw()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op(std::move(out), a.shape(), a.ndim(), {a, b}, [](TensorNode& node) {
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
            node.parents[0]->grad[i] += node.grad[i];
            node.parents[1]->grad[i] += node.grad[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.values()[i];
    return make_op(std::move(out), a.shape(), a.ndim(), {a}, [c](TensorNode& node) {
        for (std::size_t i = 0; i < node.grad.size(); ++i) node.parents[0]->grad[i] += c * node.grad[i];
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    return make_op(std::move(out), a.shape(), a.ndim(), {a}, [](TensorNode& node) {
        for (std::size_t i = 0; i < node.grad.size(); ++i)
            if (node.parents[0]->val[i] > 0.0) node.parents[0]->grad[i] += node.grad[i];
    });
}

Tensor gelu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.values()[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    return make_op(std::move(out), a.shape(), a.ndim(), {a}, [](TensorNode& node) {
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
            const double x = node.parents[0]->val[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            node.parents[0]->grad[i] += node.grad[i] * (cdf + x * pdf);
        }
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op({s}, {1, 1, 1, 1}, 1, {a}, [](TensorNode& node) {
        const double g = node.grad[0];
        for (std::size_t i = 0; i < node.parents[0]->grad.size(); ++i) node.parents[0]->grad[i] += g;
    });
}

Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) {
    const int batch = x.dim(0), in = x.dim(1);
    const int out_dim = W.dim(0);
    if (W.dim(1) != in) throw std::invalid_argument("linear: weight/input width mismatch");
    if (b.dim(0) != out_dim) throw std::invalid_argument("linear: bias size mismatch");

    std::vector<double> y(static_cast<std::size_t>(batch) * out_dim);
    const double* xv = x.values().data();
    const double* wv = W.values().data();
    const double* bv = b.values().data();
    for (int i = 0; i < batch; ++i) {
        const double* xr = xv + static_cast<std::size_t>(i) * in;
        double* yr = y.data() + static_cast<std::size_t>(i) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wr = wv + static_cast<std::size_t>(o) * in;
            double acc = bv[o];
            for (int k = 0; k < in; ++k) acc += xr[k] * wr[k];
            yr[o] = acc;
        }
    }
    return make_op(std::move(y), {batch, out_dim, 1, 1}, 2, {x, W, b},
                   [batch, in, out_dim](TensorNode& node) {
                       auto& xn = *node.parents[0];
                       auto& wn = *node.parents[1];
                       auto& bn = *node.parents[2];
                       const double* gy = node.grad.data();
                       for (int i = 0; i < batch; ++i) {
                           const double* gr = gy + static_cast<std::size_t>(i) * out_dim;
                           const double* xr = xn.val.data() + static_cast<std::size_t>(i) * in;
                           double* xg = xn.grad.data() + static_cast<std::size_t>(i) * in;
                           for (int o = 0; o < out_dim; ++o) {
                               const double g = gr[o];
                               if (g == 0.0) continue;
                               bn.grad[o] += g;
                               double* wg = wn.grad.data() + static_cast<std::size_t>(o) * in;
                               const double* wr = wn.val.data() + static_cast<std::size_t>(o) * in;
                               for (int k = 0; k < in; ++k) {
                                   wg[k] += g * xr[k];
                                   xg[k] += g * wr[k];
                               }
                           }
                       }
                   });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) throw std::invalid_argument("matmul_nt: inner dimension mismatch");

    std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            const double* ar = av + static_cast<std::size_t>(i) * k;
            const double* br = bv + static_cast<std::size_t>(j) * k;
            for (int t = 0; t < k; ++t) acc += ar[t] * br[t];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    return make_op(std::move(c), {m, n, 1, 1}, 2, {a, b}, [m, n, k](TensorNode& node) {
        auto& an = *node.parents[0];
        auto& bn = *node.parents[1];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const double g = node.grad[static_cast<std::size_t>(i) * n + j];
                if (g == 0.0) continue;
                double* ag = an.grad.data() + static_cast<std::size_t>(i) * k;
                double* bg = bn.grad.data() + static_cast<std::size_t>(j) * k;
                const double* ar = an.val.data() + static_cast<std::size_t>(i) * k;
                const double* br = bn.val.data() + static_cast<std::size_t>(j) * k;
                for (int t = 0; t < k; ++t) {
                    ag[t] += g * br[t];
                    bg[t] += g * ar[t];
                }
            }
    });
}

Tensor dot_combine(const Tensor& branch, const Tensor& trunk, const Tensor& bias, int d_o) {
    const int batch = branch.dim(0);
    const int n_tr = trunk.dim(1);
    const int n_x = trunk.dim(0);
    if (branch.dim(1) != d_o * n_tr) throw std::invalid_argument("dot_combine: branch width != d_o*N_tr");
    if (bias.dim(0) != d_o) throw std::invalid_argument("dot_combine: bias size != d_o");

    std::vector<double> out(static_cast<std::size_t>(batch) * d_o * n_x);
    const double* brv = branch.values().data();
    const double* trv = trunk.values().data();
    const double* biv = bias.values().data();
    for (int i = 0; i < batch; ++i)
        for (int c = 0; c < d_o; ++c) {
            const double* alpha = brv + static_cast<std::size_t>(i) * d_o * n_tr + c * n_tr;
            double* row = out.data() + static_cast<std::size_t>(i) * d_o * n_x + c * n_x;
            for (int x = 0; x < n_x; ++x) {
                const double* phi = trv + static_cast<std::size_t>(x) * n_tr;
                double acc = biv[c];
                for (int t = 0; t < n_tr; ++t) acc += alpha[t] * phi[t];
                row[x] = acc;
            }
        }
    return make_op(std::move(out), {batch, d_o * n_x, 1, 1}, 2, {branch, trunk, bias},
                   [batch, d_o, n_tr, n_x](TensorNode& node) {
                       auto& brn = *node.parents[0];
                       auto& trn = *node.parents[1];
                       auto& bin = *node.parents[2];
                       for (int i = 0; i < batch; ++i)
                           for (int c = 0; c < d_o; ++c) {
                               const double* g = node.grad.data() +
                                                 static_cast<std::size_t>(i) * d_o * n_x + c * n_x;
                               const double* alpha = brn.val.data() +
                                                     static_cast<std::size_t>(i) * d_o * n_tr + c * n_tr;
                               double* galpha = brn.grad.data() +
                                                static_cast<std::size_t>(i) * d_o * n_tr + c * n_tr;
                               for (int x = 0; x < n_x; ++x) {
                                   const double gx = g[x];
                                   if (gx == 0.0) continue;
                                   bin.grad[c] += gx;
                                   const double* phi = trn.val.data() + static_cast<std::size_t>(x) * n_tr;
                                   double* gphi = trn.grad.data() + static_cast<std::size_t>(x) * n_tr;
                                   for (int t = 0; t < n_tr; ++t) {
                                       galpha[t] += gx * phi[t];
                                       gphi[t] += gx * alpha[t];
                                   }
                               }
                           }
                   });
}

Tensor lift_channels(const Tensor& x, const Tensor& W, const Tensor& b) {
    const int batch = x.dim(0), n1 = x.dim(1), n2 = x.dim(2), c_in = x.dim(3);
    const int c_out = W.dim(0);
    if (W.dim(1) != c_in) throw std::invalid_argument("lift_channels: channel mismatch");

    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    std::vector<double> y(static_cast<std::size_t>(batch) * c_out * plane);
    const double* xv = x.values().data();
    const double* wv = W.values().data();
    const double* bv = b.values().data();
    for (int i = 0; i < batch; ++i)
        for (std::size_t p = 0; p < plane; ++p) {
            const double* xi = xv + (static_cast<std::size_t>(i) * plane + p) * c_in;
            for (int o = 0; o < c_out; ++o) {
                double acc = bv[o];
                const double* wr = wv + static_cast<std::size_t>(o) * c_in;
                for (int k = 0; k < c_in; ++k) acc += wr[k] * xi[k];
                y[(static_cast<std::size_t>(i) * c_out + o) * plane + p] = acc;
            }
        }
    return make_op(std::move(y), {batch, c_out, n1, n2}, 4, {x, W, b},
                   [batch, plane, c_in, c_out](TensorNode& node) {
                       auto& xn = *node.parents[0];
                       auto& wn = *node.parents[1];
                       auto& bn = *node.parents[2];
                       for (int i = 0; i < batch; ++i)
                           for (std::size_t p = 0; p < plane; ++p) {
                               const double* xi = xn.val.data() + (static_cast<std::size_t>(i) * plane + p) * c_in;
                               double* xg = xn.grad.data() + (static_cast<std::size_t>(i) * plane + p) * c_in;
                               for (int o = 0; o < c_out; ++o) {
                                   const double g =
                                       node.grad[(static_cast<std::size_t>(i) * c_out + o) * plane + p];
                                   if (g == 0.0) continue;
                                   bn.grad[o] += g;
                                   const double* wr = wn.val.data() + static_cast<std::size_t>(o) * c_in;
                                   double* wg = wn.grad.data() + static_cast<std::size_t>(o) * c_in;
                                   for (int k = 0; k < c_in; ++k) {
                                       wg[k] += g * xi[k];
                                       xg[k] += g * wr[k];
                                   }
                               }
                           }
                   });
}

Tensor pointwise_conv(const Tensor& z, const Tensor& W, const Tensor& b) {
    const int batch = z.dim(0), c_in = z.dim(1), n1 = z.dim(2), n2 = z.dim(3);
    const int c_out = W.dim(0);
    if (W.dim(1) != c_in) throw std::invalid_argument("pointwise_conv: channel mismatch");

    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    std::vector<double> y(static_cast<std::size_t>(batch) * c_out * plane);
    const double* zv = z.values().data();
    const double* wv = W.values().data();
    const double* bv = b.values().data();
    for (int i = 0; i < batch; ++i) {
        const double* zi = zv + static_cast<std::size_t>(i) * c_in * plane;
        double* yi = y.data() + static_cast<std::size_t>(i) * c_out * plane;
        for (int o = 0; o < c_out; ++o) {
            double* yo = yi + static_cast<std::size_t>(o) * plane;
            for (std::size_t p = 0; p < plane; ++p) yo[p] = bv[o];
            for (int k = 0; k < c_in; ++k) {
                const double w = wv[static_cast<std::size_t>(o) * c_in + k];
                const double* zk = zi + static_cast<std::size_t>(k) * plane;
                for (std::size_t p = 0; p < plane; ++p) yo[p] += w * zk[p];
            }
        }
    }
    return make_op(std::move(y), {batch, c_out, n1, n2}, 4, {z, W, b},
                   [batch, plane, c_in, c_out](TensorNode& node) {
                       auto& zn = *node.parents[0];
                       auto& wn = *node.parents[1];
                       auto& bn = *node.parents[2];
                       for (int i = 0; i < batch; ++i) {
                           const double* zi = zn.val.data() + static_cast<std::size_t>(i) * c_in * plane;
                           double* zgi = zn.grad.data() + static_cast<std::size_t>(i) * c_in * plane;
                           const double* gi = node.grad.data() + static_cast<std::size_t>(i) * c_out * plane;
                           for (int o = 0; o < c_out; ++o) {
                               const double* go = gi + static_cast<std::size_t>(o) * plane;
                               double bsum = 0.0;
                               for (std::size_t p = 0; p < plane; ++p) bsum += go[p];
                               bn.grad[o] += bsum;
                               for (int k = 0; k < c_in; ++k) {
                                   const double w = wn.val[static_cast<std::size_t>(o) * c_in + k];
                                   const double* zk = zi + static_cast<std::size_t>(k) * plane;
                                   double* zgk = zgi + static_cast<std::size_t>(k) * plane;
                                   double wsum = 0.0;
                                   for (std::size_t p = 0; p < plane; ++p) {
                                       wsum += go[p] * zk[p];
                                       zgk[p] += go[p] * w;
                                   }
                                   wn.grad[static_cast<std::size_t>(o) * c_in + k] += wsum;
                               }
                           }
                       }
                   });
}

Tensor project_channels(const Tensor& z, const Tensor& W, const Tensor& b) {
    const int batch = z.dim(0), c_in = z.dim(1), n1 = z.dim(2), n2 = z.dim(3);
    const int d_o = W.dim(0);
    if (W.dim(1) != c_in) throw std::invalid_argument("project_channels: channel mismatch");

    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    std::vector<double> y(static_cast<std::size_t>(batch) * plane * d_o);
    const double* zv = z.values().data();
    const double* wv = W.values().data();
    const double* bv = b.values().data();
    for (int i = 0; i < batch; ++i)
        for (std::size_t p = 0; p < plane; ++p)
            for (int o = 0; o < d_o; ++o) {
                double acc = bv[o];
                for (int k = 0; k < c_in; ++k)
                    acc += wv[static_cast<std::size_t>(o) * c_in + k] *
                           zv[(static_cast<std::size_t>(i) * c_in + k) * plane + p];
                y[(static_cast<std::size_t>(i) * plane + p) * d_o + o] = acc;
            }
    return make_op(std::move(y), {batch, n1, n2, d_o}, 4, {z, W, b},
                   [batch, plane, c_in, d_o](TensorNode& node) {
                       auto& zn = *node.parents[0];
                       auto& wn = *node.parents[1];
                       auto& bn = *node.parents[2];
                       for (int i = 0; i < batch; ++i)
                           for (std::size_t p = 0; p < plane; ++p)
                               for (int o = 0; o < d_o; ++o) {
                                   const double g =
                                       node.grad[(static_cast<std::size_t>(i) * plane + p) * d_o + o];
                                   if (g == 0.0) continue;
                                   bn.grad[o] += g;
                                   for (int k = 0; k < c_in; ++k) {
                                       const std::size_t zi = (static_cast<std::size_t>(i) * c_in + k) * plane + p;
                                       wn.grad[static_cast<std::size_t>(o) * c_in + k] += g * zn.val[zi];
                                       zn.grad[zi] += g * wn.val[static_cast<std::size_t>(o) * c_in + k];
                                   }
                               }
                   });
}

Tensor scaled_sq_error(const Tensor& pred, const std::vector<double>& target, double divisor) {
    if (pred.numel() != target.size()) throw std::invalid_argument("scaled_sq_error: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pred.values()[i] - target[i];
        s += d * d;
    }
    auto target_copy = std::make_shared<std::vector<double>>(target);
    const double inv = 1.0 / divisor;
    return make_op({s * inv}, {1, 1, 1, 1}, 1, {pred}, [target_copy, inv](TensorNode& node) {
        const double g = 2.0 * inv * node.grad[0];
        auto& pn = *node.parents[0];
        for (std::size_t i = 0; i < pn.val.size(); ++i)
            pn.grad[i] += g * (pn.val[i] - (*target_copy)[i]);
    });
}

Tensor mse(const Tensor& pred, const std::vector<double>& target) {
    return scaled_sq_error(pred, target, static_cast<double>(pred.numel()));
}

} // namespace operon
