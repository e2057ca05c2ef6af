#include "operon/fno.hpp"

#include <complex>
#include <stdexcept>

#include "checkpoint.hpp"
#include "trainer.hpp"

namespace operon {

namespace {
using cplx = std::complex<double>;

// ownership of half-spectrum rows under write-then-overwrite block assignment
enum class RowOwner : char { none, block1, block2 };

std::vector<RowOwner> row_owners(int n1, int k) {
    std::vector<RowOwner> owner(n1, RowOwner::none);
    for (int r = 0; r < k; ++r) owner[r] = RowOwner::block1;
    for (int r = n1 - k; r < n1; ++r) owner[r] = RowOwner::block2;
    return owner;
}
} // namespace

Tensor spectral_conv(const Tensor& z, const Tensor& r1_re, const Tensor& r1_im,
                     const Tensor& r2_re, const Tensor& r2_im, int k_max,
                     const std::shared_ptr<Fft2>& fft) {
    const int batch = z.dim(0), c_in = z.dim(1), n1 = z.dim(2), n2 = z.dim(3);
    const int c_out = r1_re.dim(1);
    if (r1_re.dim(0) != c_in || r1_re.dim(2) != k_max || r1_re.dim(3) != k_max)
        throw std::invalid_argument("spectral_conv: weight block shape mismatch");
    if (fft->n1() != n1 || fft->n2() != n2) throw std::invalid_argument("spectral_conv: fft size mismatch");
    if (k_max < 1 || k_max > n1 / 2 + 1 || k_max > n2 / 2 + 1)
        throw std::invalid_argument("spectral_conv: mode bound violation");

    const int hc = fft->half_cols();
    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    const std::size_t half = static_cast<std::size_t>(n1) * hc;
    const std::size_t block = static_cast<std::size_t>(2 * k_max) * k_max;  // retained rows x cols
    const auto owner = row_owners(n1, k_max);

    // retained input spectrum, laid out [b][i][2k x k]: block1 rows then block2 rows
    auto z_hat = std::make_shared<std::vector<cplx>>(static_cast<std::size_t>(batch) * c_in * block);
    {
        std::vector<cplx> spectrum(half);
        for (int b = 0; b < batch; ++b)
            for (int i = 0; i < c_in; ++i) {
                fft->forward(z.values().data() + (static_cast<std::size_t>(b) * c_in + i) * plane,
                             spectrum.data());
                cplx* dst = z_hat->data() + (static_cast<std::size_t>(b) * c_in + i) * block;
                for (int r = 0; r < k_max; ++r)
                    for (int c = 0; c < k_max; ++c) {
                        dst[static_cast<std::size_t>(r) * k_max + c] = spectrum[static_cast<std::size_t>(r) * hc + c];
                        dst[static_cast<std::size_t>(k_max + r) * k_max + c] =
                            spectrum[static_cast<std::size_t>(n1 - k_max + r) * hc + c];
                    }
            }
    }

    auto mix = [&](const cplx* zi_blocks, const double* w1re, const double* w1im,
                   const double* w2re, const double* w2im, cplx* out_blocks, int i, int o) {
        const std::size_t w_off = (static_cast<std::size_t>(i) * c_out + o) * k_max * k_max;
        for (int r = 0; r < k_max; ++r)
            for (int c = 0; c < k_max; ++c) {
                const std::size_t m = static_cast<std::size_t>(r) * k_max + c;
                const cplx w1(w1re[w_off + m], w1im[w_off + m]);
                const cplx w2(w2re[w_off + m], w2im[w_off + m]);
                out_blocks[m] += zi_blocks[m] * w1;
                out_blocks[block / 2 + m] += zi_blocks[block / 2 + m] * w2;
            }
    };

    // mixed output spectrum blocks, then scatter by row ownership and invert
    std::vector<double> y(static_cast<std::size_t>(batch) * c_out * plane);
    std::vector<cplx> out_blocks(block);
    std::vector<cplx> out_spectrum(half);
    for (int b = 0; b < batch; ++b)
        for (int o = 0; o < c_out; ++o) {
            std::fill(out_blocks.begin(), out_blocks.end(), cplx(0.0, 0.0));
            for (int i = 0; i < c_in; ++i)
                mix(z_hat->data() + (static_cast<std::size_t>(b) * c_in + i) * block,
                    r1_re.values().data(), r1_im.values().data(), r2_re.values().data(),
                    r2_im.values().data(), out_blocks.data(), i, o);
            std::fill(out_spectrum.begin(), out_spectrum.end(), cplx(0.0, 0.0));
            for (int r = 0; r < n1; ++r) {
                if (owner[r] == RowOwner::none) continue;
                for (int c = 0; c < k_max; ++c)
                    out_spectrum[static_cast<std::size_t>(r) * hc + c] =
                        owner[r] == RowOwner::block1
                            ? out_blocks[static_cast<std::size_t>(r) * k_max + c]
                            : out_blocks[static_cast<std::size_t>(k_max + r - (n1 - k_max)) * k_max + c];
            }
            fft->half_inverse(out_spectrum.data(),
                              y.data() + (static_cast<std::size_t>(b) * c_out + o) * plane);
        }

    return make_op(
        std::move(y), {batch, c_out, n1, n2}, 4, {z, r1_re, r1_im, r2_re, r2_im},
        [batch, c_in, c_out, n1, n2, k_max, hc, plane, half, block, owner, z_hat,
         fft](TensorNode& node) {
            auto& zn = *node.parents[0];
            auto& w1re = *node.parents[1];
            auto& w1im = *node.parents[2];
            auto& w2re = *node.parents[3];
            auto& w2im = *node.parents[4];
            const double inv_n = 1.0 / (static_cast<double>(n1) * n2);

            // column multiplicities of the hermitian extension
            std::vector<double> col_weight(hc);
            for (int c = 0; c < hc; ++c) col_weight[c] = fft->column_weight(c);

            std::vector<cplx> g_spectrum(half);
            std::vector<cplx> g_blocks(block);
            std::vector<cplx> dz_hat(static_cast<std::size_t>(c_in) * block);
            std::vector<cplx> dz_spectrum(half);
            std::vector<double> dz_plane(plane);

            for (int b = 0; b < batch; ++b) {
                std::fill(dz_hat.begin(), dz_hat.end(), cplx(0.0, 0.0));
                for (int o = 0; o < c_out; ++o) {
                    // vjp of half_inverse: (d/N) * forward FFT of the cotangent
                    fft->forward(node.grad.data() + (static_cast<std::size_t>(b) * c_out + o) * plane,
                                 g_spectrum.data());
                    std::fill(g_blocks.begin(), g_blocks.end(), cplx(0.0, 0.0));
                    for (int r = 0; r < n1; ++r) {
                        if (owner[r] == RowOwner::none) continue;
                        for (int c = 0; c < k_max; ++c) {
                            const cplx g = g_spectrum[static_cast<std::size_t>(r) * hc + c] *
                                           (col_weight[c] * inv_n);
                            if (owner[r] == RowOwner::block1)
                                g_blocks[static_cast<std::size_t>(r) * k_max + c] = g;
                            else
                                g_blocks[static_cast<std::size_t>(k_max + r - (n1 - k_max)) * k_max + c] = g;
                        }
                    }
                    // weight and input-spectrum gradients via conjugate products
                    for (int i = 0; i < c_in; ++i) {
                        const cplx* zi = z_hat->data() + (static_cast<std::size_t>(b) * c_in + i) * block;
                        cplx* dzi = dz_hat.data() + static_cast<std::size_t>(i) * block;
                        const std::size_t w_off = (static_cast<std::size_t>(i) * c_out + o) * k_max * k_max;
                        for (std::size_t m = 0; m < block / 2; ++m) {
                            const cplx g1 = g_blocks[m];
                            const cplx g2 = g_blocks[block / 2 + m];
                            const cplx w1(w1re.val[w_off + m], w1im.val[w_off + m]);
                            const cplx w2(w2re.val[w_off + m], w2im.val[w_off + m]);
                            const cplx dw1 = g1 * std::conj(zi[m]);
                            const cplx dw2 = g2 * std::conj(zi[block / 2 + m]);
                            w1re.grad[w_off + m] += dw1.real();
                            w1im.grad[w_off + m] += dw1.imag();
                            w2re.grad[w_off + m] += dw2.real();
                            w2im.grad[w_off + m] += dw2.imag();
                            dzi[m] += g1 * std::conj(w1);
                            dzi[block / 2 + m] += g2 * std::conj(w2);
                        }
                    }
                }
                // vjp of the forward FFT: N * half_inverse(dz_hat / d)
                for (int i = 0; i < c_in; ++i) {
                    std::fill(dz_spectrum.begin(), dz_spectrum.end(), cplx(0.0, 0.0));
                    const cplx* dzi = dz_hat.data() + static_cast<std::size_t>(i) * block;
                    for (int r = 0; r < k_max; ++r)
                        for (int c = 0; c < k_max; ++c) {
                            dz_spectrum[static_cast<std::size_t>(r) * hc + c] +=
                                dzi[static_cast<std::size_t>(r) * k_max + c] / col_weight[c];
                            dz_spectrum[static_cast<std::size_t>(n1 - k_max + r) * hc + c] +=
                                dzi[static_cast<std::size_t>(k_max + r) * k_max + c] / col_weight[c];
                        }
                    fft->half_inverse(dz_spectrum.data(), dz_plane.data());
                    double* zg = zn.grad.data() + (static_cast<std::size_t>(b) * c_in + i) * plane;
                    const double n_total = static_cast<double>(n1) * n2;
                    for (std::size_t p = 0; p < plane; ++p) zg[p] += n_total * dz_plane[p];
                }
            }
        });
}

FnoModel::FnoModel(Mesh mesh, int d_o, int n1, int n2, FnoOptions opt, Rng& rng)
    : mesh_(std::move(mesh)), d_o_(d_o), n1_(n1), n2_(n2), opt_(opt) {
    init_seed_ = rng.seed();
    if (opt.k_max > n1 / 2 + 1 || opt.k_max > n2 / 2 + 1)
        throw std::invalid_argument("FnoModel: k_max exceeds the Nyquist bound");

    lift_w_ = affine_init(opt.d_h, 3, rng);
    lift_b_ = bias_init(opt.d_h, 3, rng);
    const double r_scale = 1.0 / (static_cast<double>(opt.d_h) * opt.d_h);
    const std::size_t r_count = static_cast<std::size_t>(opt.d_h) * opt.d_h * opt.k_max * opt.k_max;
    for (int l = 0; l < opt.layers; ++l) {
        SpectralLayer layer;
        // interleaved draws match the reference init order (re/im per block)
        {
            std::vector<double> re(r_count), im(r_count);
            for (std::size_t m = 0; m < r_count; ++m) {
                re[m] = r_scale * rng.uniform();
                im[m] = r_scale * rng.uniform();
            }
            layer.r1_re = Tensor::from_values(std::move(re), {opt.d_h, opt.d_h, opt.k_max, opt.k_max}, 4, true);
            layer.r1_im = Tensor::from_values(std::move(im), {opt.d_h, opt.d_h, opt.k_max, opt.k_max}, 4, true);
        }
        {
            std::vector<double> re(r_count), im(r_count);
            for (std::size_t m = 0; m < r_count; ++m) {
                re[m] = r_scale * rng.uniform();
                im[m] = r_scale * rng.uniform();
            }
            layer.r2_re = Tensor::from_values(std::move(re), {opt.d_h, opt.d_h, opt.k_max, opt.k_max}, 4, true);
            layer.r2_im = Tensor::from_values(std::move(im), {opt.d_h, opt.d_h, opt.k_max, opt.k_max}, 4, true);
        }
        layer.w = affine_init(opt.d_h, opt.d_h, rng);
        layer.b = bias_init(opt.d_h, opt.d_h, rng);
        layers_.push_back(std::move(layer));
    }
    proj_w_ = affine_init(d_o, opt.d_h, rng);
    proj_b_ = bias_init(d_o, opt.d_h, rng);

    fft_ = std::make_shared<Fft2>(n1, n2);
    transfer_ = std::make_unique<GridTransfer>(mesh_, n1, n2);
    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    grid_norm_in_.mean.assign(plane, 0.0);
    grid_norm_in_.std_dev.assign(plane, 1.0);
    grid_norm_out_.mean.assign(plane * d_o, 0.0);
    grid_norm_out_.std_dev.assign(plane * d_o, 1.0);
}

std::vector<Tensor> FnoModel::parameters() const {
    std::vector<Tensor> params{lift_w_, lift_b_};
    for (const auto& layer : layers_) {
        params.push_back(layer.r1_re);
        params.push_back(layer.r1_im);
        params.push_back(layer.r2_re);
        params.push_back(layer.r2_im);
        params.push_back(layer.w);
        params.push_back(layer.b);
    }
    params.push_back(proj_w_);
    params.push_back(proj_b_);
    return params;
}

Tensor FnoModel::forward(const Tensor& x) const {
    if (x.dim(1) != n1_ || x.dim(2) != n2_ || x.dim(3) != 3)
        throw std::invalid_argument("fno forward: expected (B, n1, n2, 3) input");
    Tensor z = lift_channels(x, lift_w_, lift_b_);
    const int n_layers = static_cast<int>(layers_.size());
    for (int l = 0; l < n_layers; ++l) {
        const auto& layer = layers_[l];
        const Tensor s = spectral_conv(z, layer.r1_re, layer.r1_im, layer.r2_re, layer.r2_im,
                                       opt_.k_max, fft_);
        const Tensor w = pointwise_conv(z, layer.w, layer.b);
        z = add(s, w);
        if (l + 1 < n_layers) z = gelu(z);
    }
    return project_channels(z, proj_w_, proj_b_);
}

NodalField FnoModel::predict(const NodalField& m) const {
    if (m.components != 1 || m.node_count() != mesh_.node_count())
        throw std::invalid_argument("fno predict: input does not match the training mesh");
    const std::size_t plane = static_cast<std::size_t>(n1_) * n2_;

    std::vector<double> m_grid = transfer_->fem_to_grid(m.values);
    grid_norm_in_.apply_inplace(m_grid.data());
    std::vector<double> x(plane * 3);
    for (int a = 0; a < n1_; ++a)
        for (int b = 0; b < n2_; ++b) {
            const std::size_t g = static_cast<std::size_t>(a) * n2_ + b;
            const auto pt = transfer_->grid_point(a, b);
            x[g * 3 + 0] = m_grid[g];
            x[g * 3 + 1] = pt[0];
            x[g * 3 + 2] = pt[1];
        }
    const Tensor out = forward(Tensor::from_values(std::move(x), {1, n1_, n2_, 3}, 4));
    std::vector<double> y = out.values();
    grid_norm_out_.invert_inplace(y.data());

    NodalField result;
    result.components = d_o_;
    result.values.resize(static_cast<std::size_t>(mesh_.node_count()) * d_o_);
    std::vector<double> component(plane);
    for (int c = 0; c < d_o_; ++c) {
        for (std::size_t g = 0; g < plane; ++g) component[g] = y[g * d_o_ + c];
        const std::vector<double> nodal = transfer_->grid_to_fem(component);
        std::copy(nodal.begin(), nodal.end(),
                  result.values.begin() + static_cast<std::size_t>(c) * mesh_.node_count());
    }
    return result;
}

void FnoModel::train(const Dataset& ds, const TrainOptions& opts) {
    if (!ds.has_grid()) throw std::invalid_argument("fno train: dataset has no grid arrays");
    if (ds.meta.grid_n1 != n1_ || ds.meta.grid_n2 != n2_)
        throw std::invalid_argument("fno train: grid size mismatch");
    const DatasetView train = train_view(ds);
    const DatasetView test = test_view(ds);
    if (train.size() < 2) throw std::invalid_argument("fno train: need a train split");

    grid_norm_in_ = ds.grid_norm_in;
    grid_norm_out_ = ds.grid_norm_out;
    const std::size_t plane = static_cast<std::size_t>(n1_) * n2_;

    // rows pre-normalized once; channel 0 of X, all of Y
    auto build_rows = [&](const DatasetView& view, std::vector<double>& xs, std::vector<double>& ys) {
        xs.resize(static_cast<std::size_t>(view.size()) * plane * 3);
        ys.resize(static_cast<std::size_t>(view.size()) * plane * d_o_);
        for (int k = 0; k < view.size(); ++k) {
            const double* xg = ds.Xgrid.data() + static_cast<std::size_t>(view.indices[k]) * plane * 3;
            double* xd = xs.data() + static_cast<std::size_t>(k) * plane * 3;
            std::copy(xg, xg + plane * 3, xd);
            for (std::size_t g = 0; g < plane; ++g)
                xd[g * 3] = (xd[g * 3] - grid_norm_in_.mean[g]) /
                            (grid_norm_in_.std_dev[g] + grid_norm_in_.tol);
            const double* yg = ds.Ygrid.data() + static_cast<std::size_t>(view.indices[k]) * plane * d_o_;
            double* yd = ys.data() + static_cast<std::size_t>(k) * plane * d_o_;
            std::copy(yg, yg + plane * d_o_, yd);
            grid_norm_out_.apply_inplace(yd);
        }
    };
    std::vector<double> xtrain, ytrain, xtest, ytest;
    build_rows(train, xtrain, ytrain);
    build_rows(test, xtest, ytest);

    Adam adam(parameters(), opts.lr, opts.weight_decay);
    if (trained_epochs_ > 0 && last_adam_state_) adam.restore(*last_adam_state_);

    auto gather = [&](const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::vector<int>& rows, Tensor& x_out, std::vector<double>& y_out) {
        const int b = static_cast<int>(rows.size());
        std::vector<double> xb(static_cast<std::size_t>(b) * plane * 3);
        y_out.resize(static_cast<std::size_t>(b) * plane * d_o_);
        for (int k = 0; k < b; ++k) {
            std::copy(xs.begin() + static_cast<std::size_t>(rows[k]) * plane * 3,
                      xs.begin() + static_cast<std::size_t>(rows[k] + 1) * plane * 3,
                      xb.begin() + static_cast<std::size_t>(k) * plane * 3);
            std::copy(ys.begin() + static_cast<std::size_t>(rows[k]) * plane * d_o_,
                      ys.begin() + static_cast<std::size_t>(rows[k] + 1) * plane * d_o_,
                      y_out.begin() + static_cast<std::size_t>(k) * plane * d_o_);
        }
        x_out = Tensor::from_values(std::move(xb), {b, n1_, n2_, 3}, 4);
    };

    auto train_step = [&](const std::vector<int>& batch) {
        Tensor xb;
        std::vector<double> yb;
        gather(xtrain, ytrain, batch, xb, yb);
        const Tensor pred = forward(xb);
        // mean over samples and grid points of the squared (vector) error
        const Tensor loss =
            scaled_sq_error(pred, yb, static_cast<double>(batch.size()) * plane);
        adam.zero_grad();
        backward(loss);
        adam.step();
        return loss.item();
    };

    auto test_loss = [&]() {
        const int n = test.size();
        if (n == 0) return 0.0;
        double sum = 0.0;
        int n_batches = 0;
        for (int begin = 0; begin < n; begin += opts.batch_size) {
            const int end = std::min(n, begin + opts.batch_size);
            std::vector<int> rows(static_cast<std::size_t>(end - begin));
            std::iota(rows.begin(), rows.end(), begin);
            Tensor xb;
            std::vector<double> yb;
            gather(xtest, ytest, rows, xb, yb);
            sum += scaled_sq_error(forward(xb), yb, static_cast<double>(rows.size()) * plane).item();
            ++n_batches;
        }
        return sum / n_batches;
    };

    run_epochs(adam, opts, trained_epochs_, train.size(), train_step, test_loss, loss_log_);
    trained_epochs_ = opts.epochs;
    last_adam_state_ = adam.state();
}

void FnoModel::save(const std::string& dir) const {
    ckpt::Writer writer;
    writer.meta["format_version"] = "1";
    writer.meta["arch"] = "fno";
    writer.meta["mesh"] = {{"nx", mesh_.nx}, {"ny", mesh_.ny}, {"L1", mesh_.L1}, {"L2", mesh_.L2}};
    writer.meta["d_o"] = d_o_;
    writer.meta["grid"] = {{"n1", n1_}, {"n2", n2_}};
    writer.meta["d_h"] = opt_.d_h;
    writer.meta["layers"] = opt_.layers;
    writer.meta["k_max"] = opt_.k_max;
    writer.meta["epoch"] = trained_epochs_;
    writer.meta["seed"] = init_seed_;
    writer.param("lift.w", lift_w_);
    writer.param("lift.b", lift_b_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string p = "layer" + std::to_string(l);
        writer.param(p + ".r1_re", layers_[l].r1_re);
        writer.param(p + ".r1_im", layers_[l].r1_im);
        writer.param(p + ".r2_re", layers_[l].r2_re);
        writer.param(p + ".r2_im", layers_[l].r2_im);
        writer.param(p + ".w", layers_[l].w);
        writer.param(p + ".b", layers_[l].b);
    }
    writer.param("proj.w", proj_w_);
    writer.param("proj.b", proj_b_);
    writer.aux("grid_norm_in.mean", grid_norm_in_.mean);
    writer.aux("grid_norm_in.std", grid_norm_in_.std_dev);
    writer.aux("grid_norm_out.mean", grid_norm_out_.mean);
    writer.aux("grid_norm_out.std", grid_norm_out_.std_dev);
    if (last_adam_state_) {
        Adam adam(parameters());
        adam.restore(*last_adam_state_);
        writer.optimizer(adam);
    }
    writer.write(dir);
}

std::shared_ptr<FnoModel> FnoModel::load(const std::string& dir) {
    ckpt::Reader reader(dir);
    const auto& meta = reader.meta;
    const Mesh mesh = build_rect_mesh(meta.at("mesh").at("nx").get<int>(),
                                      meta.at("mesh").at("ny").get<int>(),
                                      meta.at("mesh").at("L1").get<double>(),
                                      meta.at("mesh").at("L2").get<double>());
    Rng rng(meta.at("seed").get<std::uint64_t>());
    FnoOptions opt;
    opt.d_h = meta.at("d_h").get<int>();
    opt.layers = meta.at("layers").get<int>();
    opt.k_max = meta.at("k_max").get<int>();
    auto model = std::make_shared<FnoModel>(mesh, meta.at("d_o").get<int>(),
                                            meta.at("grid").at("n1").get<int>(),
                                            meta.at("grid").at("n2").get<int>(), opt, rng);
    reader.param(model->lift_w_);
    reader.param(model->lift_b_);
    for (auto& layer : model->layers_) {
        reader.param(layer.r1_re);
        reader.param(layer.r1_im);
        reader.param(layer.r2_re);
        reader.param(layer.r2_im);
        reader.param(layer.w);
        reader.param(layer.b);
    }
    reader.param(model->proj_w_);
    reader.param(model->proj_b_);
    const std::size_t plane = static_cast<std::size_t>(model->n1_) * model->n2_;
    model->grid_norm_in_.mean = reader.aux(plane);
    model->grid_norm_in_.std_dev = reader.aux(plane);
    model->grid_norm_out_.mean = reader.aux(plane * model->d_o_);
    model->grid_norm_out_.std_dev = reader.aux(plane * model->d_o_);
    model->trained_epochs_ = meta.at("epoch").get<int>();
    if (reader.has_optimizer()) {
        Adam adam(model->parameters());
        reader.restore_optimizer(adam);
        model->last_adam_state_ = adam.state();
    }
    return model;
}

} // namespace operon
