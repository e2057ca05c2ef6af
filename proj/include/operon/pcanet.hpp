#pragma once

#include <optional>

#include "operon/dimred.hpp"
#include "operon/nn.hpp"
#include "operon/surrogate.hpp"

namespace operon {

/// Reduced-space surrogate: normalize -> project (r_m) -> MLP -> lift (r_u)
/// -> denormalize. The core network is trained on the projected data with the
/// objective (1/N) sum_I ||y_I - F(x_I)||^2.
class PcaNetModel final : public Surrogate {
public:
    PcaNetModel(Mesh mesh, int d_o, int r_m, int r_u, int depth, int width, Rng& rng);

    Tensor forward_reduced(const Tensor& x_reduced) const { return core_.forward(x_reduced); }

    NodalField predict(const NodalField& m) const override;
    std::string arch() const override { return "pcanet"; }
    int output_components() const override { return d_o_; }
    void save(const std::string& dir) const override;
    const Mesh& mesh() const override { return mesh_; }

    void train(const Dataset& ds, const TrainOptions& opts);
    int trained_epochs() const { return trained_epochs_; }

    const Normalizer& input_norm() const { return input_norm_; }
    const Normalizer& output_norm() const { return output_norm_; }
    const Projector& input_proj() const { return input_proj_; }
    const Projector& output_proj() const { return output_proj_; }
    Mlp& core() { return core_; }

    static std::shared_ptr<PcaNetModel> load(const std::string& dir);

private:
    Mesh mesh_;
    int d_o_, r_m_, r_u_;
    Mlp core_;
    Normalizer input_norm_, output_norm_;
    Projector input_proj_, output_proj_;
    std::uint64_t init_seed_ = 0;
    int trained_epochs_ = 0;
    std::optional<Adam::State> last_adam_state_;
};

} // namespace operon
