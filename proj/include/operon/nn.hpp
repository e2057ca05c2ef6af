#pragma once

#include <cstdint>
#include <vector>

#include "operon/rng.hpp"
#include "operon/tensor.hpp"

namespace operon {

/// Fully connected network: `depth` affine layers with relu between them, the
/// last one raw unless the caller asks for a final relu (DeepONet trunk).
/// Weights initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
class Mlp {
public:
    Mlp() = default;
    Mlp(int input_size, int hidden_size, int output_size, int depth, Rng& rng);

    Tensor forward(const Tensor& x, bool final_relu = false) const;

    std::vector<Tensor> parameters() const;
    int input_size() const { return input_size_; }
    int output_size() const { return output_size_; }
    int depth() const { return static_cast<int>(weights_.size()); }
    int hidden_size() const { return hidden_size_; }

    // direct access for checkpointing
    std::vector<Tensor>& weights() { return weights_; }
    std::vector<Tensor>& biases() { return biases_; }
    const std::vector<Tensor>& weights() const { return weights_; }
    const std::vector<Tensor>& biases() const { return biases_; }

private:
    int input_size_ = 0, hidden_size_ = 0, output_size_ = 0;
    std::vector<Tensor> weights_;  // (out, in) each
    std::vector<Tensor> biases_;
};

Tensor affine_init(int out_dim, int in_dim, Rng& rng);  // weight matrix
Tensor bias_init(int out_dim, int in_dim, Rng& rng);

/// Adam with coupled L2 weight decay (decay added to the gradient) and
/// bias-corrected moments; betas (0.9, 0.999), eps 1e-8.
class Adam {
public:
    explicit Adam(std::vector<Tensor> params, double lr = 1e-3, double weight_decay = 1e-4);

    void zero_grad();
    void step();

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    std::int64_t step_count() const { return step_count_; }

    // for exact training resume
    struct State {
        std::vector<std::vector<double>> m, v;
        std::int64_t step_count = 0;
    };
    State state() const;
    void restore(const State& s);

    const std::vector<Tensor>& params() const { return params_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, weight_decay_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::int64_t step_count_ = 0;
};

/// Step schedule: base_lr halved every 100 epochs, lr = base * 0.5^floor(epoch/100).
double step_lr(int epoch, double base_lr);

} // namespace operon
