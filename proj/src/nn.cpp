#include "operon/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace operon {

namespace {
std::vector<double> uniform_pm(Rng& rng, std::size_t n, double bound) {
    std::vector<double> v(n);
    for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
    return v;
}
} // namespace

Tensor affine_init(int out_dim, int in_dim, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    return Tensor::matrix(uniform_pm(rng, static_cast<std::size_t>(out_dim) * in_dim, bound),
                          out_dim, in_dim, /*requires_grad=*/true);
}

Tensor bias_init(int out_dim, int in_dim, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    return Tensor::vector(uniform_pm(rng, out_dim, bound), /*requires_grad=*/true);
}

Mlp::Mlp(int input_size, int hidden_size, int output_size, int depth, Rng& rng)
    : input_size_(input_size), hidden_size_(hidden_size), output_size_(output_size) {
    if (depth < 2) throw std::invalid_argument("Mlp: depth must be >= 2");
    for (int l = 0; l < depth; ++l) {
        const int in = (l == 0) ? input_size : hidden_size;
        const int out = (l == depth - 1) ? output_size : hidden_size;
        weights_.push_back(affine_init(out, in, rng));
        biases_.push_back(bias_init(out, in, rng));
    }
}

Tensor Mlp::forward(const Tensor& x, bool final_relu) const {
    if (x.dim(1) != input_size_) throw std::invalid_argument("Mlp::forward: input width mismatch");
    Tensor h = x;
    const int n_layers = static_cast<int>(weights_.size());
    for (int l = 0; l < n_layers; ++l) {
        h = linear(h, weights_[l], biases_[l]);
        if (l + 1 < n_layers)
            h = relu(h);
        else if (final_relu)
            h = relu(h);
    }
    return h;
}

std::vector<Tensor> Mlp::parameters() const {
    std::vector<Tensor> params;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        params.push_back(weights_[l]);
        params.push_back(biases_[l]);
    }
    return params;
}

Adam::Adam(std::vector<Tensor> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i].numel(), 0.0);
        v_[i].assign(params_[i].numel(), 0.0);
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_)
        std::fill(p.grad().begin(), p.grad().end(), 0.0);
}

void Adam::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& val = params_[i].values();
        const auto& grad = params_[i].grad();
        for (std::size_t j = 0; j < val.size(); ++j) {
            const double g = grad[j] + weight_decay_ * val[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            const double m_hat = m_[i][j] / bc1;
            const double v_hat = v_[i][j] / bc2;
            val[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

Adam::State Adam::state() const { return State{m_, v_, step_count_}; }

void Adam::restore(const State& s) {
    if (s.m.size() != params_.size() || s.v.size() != params_.size())
        throw std::invalid_argument("Adam::restore: state does not match parameter list");
    m_ = s.m;
    v_ = s.v;
    step_count_ = s.step_count;
}

double step_lr(int epoch, double base_lr) {
    if (epoch < 1) throw std::invalid_argument("step_lr: epoch must be >= 1");
    return base_lr * std::pow(0.5, static_cast<double>(epoch / 100));
}

} // namespace operon
