#pragma once

#include <optional>

#include "operon/dimred.hpp"
#include "operon/nn.hpp"
#include "operon/surrogate.hpp"

namespace operon {

/// Branch/trunk data layout: branch rows are (normalized) parameter vectors,
/// trunk rows are output coordinates, Y rows hold the solution at every trunk
/// point, component-blocked for vector outputs.
struct DeepOnetData {
    std::vector<double> X_br;  // N x p_m
    std::vector<double> X_tr;  // N_x x q_u
    std::vector<double> Y;     // N x (N_x * d_o)
    int n = 0, p_m = 0, n_x = 0, d_o = 1;
};

/// Rows of X are raw parameter samples; they are normalized with `norm`
/// (fitted on training inputs). Trunk points default to the mesh nodes, in
/// which case Y rows are the stored solution rows; explicit points fall back
/// to barycentric interpolation.
DeepOnetData deeponet_build_data(const Mesh& mesh, const Normalizer& norm,
                                 const std::vector<const double*>& x_rows,
                                 const std::vector<const double*>& y_rows, int p_m, int d_o,
                                 const std::optional<std::vector<std::array<double, 2>>>& points =
                                     std::nullopt);

class DeepOnetModel final : public Surrogate {
public:
    // fresh model; draws branch then trunk weights from rng
    DeepOnetModel(Mesh mesh, int d_o, int n_tr, int depth, int width, Rng& rng);

    /// Batched bilinear combine: component c of the prediction is
    /// sum_k branch[k + c*N_tr] * trunk_k(x) + bias_c; trunk runs with a final
    /// relu. Output (B, d_o*N_x) component-blocked.
    Tensor forward(const Tensor& m_batch, const Tensor& coords) const;

    NodalField predict(const NodalField& m) const override;
    std::string arch() const override { return "deeponet"; }
    int output_components() const override { return d_o_; }
    void save(const std::string& dir) const override;
    const Mesh& mesh() const override { return mesh_; }

    /// Runs epochs trained_epochs_+1 .. opts.epochs; a freshly loaded
    /// checkpoint continues bit-exactly (optimizer state travels with it).
    void train(const Dataset& ds, const TrainOptions& opts);

    Mlp& branch() { return branch_; }
    Mlp& trunk() { return trunk_; }
    Tensor& bias() { return bias_; }
    Normalizer& input_norm() { return input_norm_; }
    int n_tr() const { return n_tr_; }
    int trained_epochs() const { return trained_epochs_; }

    static std::shared_ptr<DeepOnetModel> load(const std::string& dir);

private:
    std::vector<Tensor> parameters() const;
    void refresh_trunk_cache() const;

    Mesh mesh_;
    int d_o_, n_tr_;
    Mlp branch_, trunk_;
    Tensor bias_;
    Normalizer input_norm_;
    std::uint64_t init_seed_ = 0;
    int trained_epochs_ = 0;
    std::optional<Adam::State> last_adam_state_;

    mutable std::vector<double> trunk_cache_;  // N_x x N_tr, valid when frozen
};

} // namespace operon
