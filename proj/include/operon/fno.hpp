#pragma once

#include <memory>
#include <optional>

#include "operon/dimred.hpp"
#include "operon/fft.hpp"
#include "operon/grid_transfer.hpp"
#include "operon/nn.hpp"
#include "operon/surrogate.hpp"

namespace operon {

/// Fourier mixing layer kernel: real 2-D FFT per channel, keep the two
/// corner blocks (rows [0,k) and [n1-k,n1) crossed with columns [0,k) of the
/// half spectrum), channel-mix each retained coefficient with the complex
/// weight blocks ("b i x y, i o x y -> b o x y"), zero elsewhere, inverse
/// transform. When the row blocks overlap the second block wins, matching the
/// write-then-overwrite reference semantics.
///
/// z is (B, C_in, n1, n2); the weight blocks are (C_in, C_out, k, k) split
/// into real and imaginary parts.
Tensor spectral_conv(const Tensor& z, const Tensor& r1_re, const Tensor& r1_im,
                     const Tensor& r2_re, const Tensor& r2_im, int k_max,
                     const std::shared_ptr<Fft2>& fft);

struct FnoOptions {
    int d_h = 20;
    int layers = 3;
    int k_max = 8;
};

/// Grid-based surrogate: lift (affine 3 -> d_h) -> L x (spectral_conv +
/// pointwise affine, gelu on all but the last layer) -> project (d_h -> d_o).
/// Channel 0 of the input is the normalized parameter, channels 1,2 the grid
/// coordinates.
class FnoModel final : public Surrogate {
public:
    FnoModel(Mesh mesh, int d_o, int n1, int n2, FnoOptions opt, Rng& rng);

    /// x is (B, n1, n2, 3); returns (B, n1, n2, d_o).
    Tensor forward(const Tensor& x) const;

    NodalField predict(const NodalField& m) const override;
    std::string arch() const override { return "fno"; }
    int output_components() const override { return d_o_; }
    void save(const std::string& dir) const override;
    const Mesh& mesh() const override { return mesh_; }

    void train(const Dataset& ds, const TrainOptions& opts);
    int trained_epochs() const { return trained_epochs_; }

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    const FnoOptions& options() const { return opt_; }
    std::vector<Tensor> parameters() const;

    static std::shared_ptr<FnoModel> load(const std::string& dir);

private:
    struct SpectralLayer {
        Tensor r1_re, r1_im, r2_re, r2_im;  // (C_in, C_out, k, k)
        Tensor w, b;                        // pointwise affine
    };

    Mesh mesh_;
    int d_o_, n1_, n2_;
    FnoOptions opt_;
    Tensor lift_w_, lift_b_;  // d_h x 3
    std::vector<SpectralLayer> layers_;
    Tensor proj_w_, proj_b_;  // d_o x d_h
    std::shared_ptr<Fft2> fft_;
    std::unique_ptr<GridTransfer> transfer_;
    Normalizer grid_norm_in_, grid_norm_out_;
    std::uint64_t init_seed_ = 0;
    int trained_epochs_ = 0;
    std::optional<Adam::State> last_adam_state_;
};

} // namespace operon
