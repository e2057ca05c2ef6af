#include "operon/pcanet.hpp"

#include <stdexcept>

#include "checkpoint.hpp"
#include "trainer.hpp"

namespace operon {

PcaNetModel::PcaNetModel(Mesh mesh, int d_o, int r_m, int r_u, int depth, int width, Rng& rng)
    : mesh_(std::move(mesh)), d_o_(d_o), r_m_(r_m), r_u_(r_u) {
    init_seed_ = rng.seed();
    core_ = Mlp(r_m, width, r_u, depth, rng);
}

NodalField PcaNetModel::predict(const NodalField& m) const {
    if (m.components != 1 || m.node_count() != mesh_.node_count())
        throw std::invalid_argument("pcanet predict: input does not match the training mesh");
    if (input_proj_.r == 0) throw std::invalid_argument("pcanet predict: model is not trained");

    const std::vector<double> x_reduced = input_proj_.project(input_norm_.apply(m.values));
    const Tensor out = core_.forward(Tensor::matrix(std::vector<double>(x_reduced), 1, r_m_));
    const std::vector<double> lifted = output_proj_.lift(out.values());
    return NodalField(output_norm_.invert(lifted), d_o_);
}

void PcaNetModel::train(const Dataset& ds, const TrainOptions& opts) {
    const DatasetView train = train_view(ds);
    const DatasetView test = test_view(ds);
    if (train.size() < 2) throw std::invalid_argument("pcanet train: need a train split");
    const int p_m = ds.meta.p_m, p_u = ds.meta.p_u;

    // centering/scaling and SVD projectors from the training rows only
    std::vector<double> xhat(static_cast<std::size_t>(train.size()) * p_m);
    std::vector<double> yhat(static_cast<std::size_t>(train.size()) * p_u);
    for (int k = 0; k < train.size(); ++k) {
        std::copy(train.x_row(k), train.x_row(k) + p_m, xhat.begin() + static_cast<std::size_t>(k) * p_m);
        std::copy(train.y_row(k), train.y_row(k) + p_u, yhat.begin() + static_cast<std::size_t>(k) * p_u);
    }
    input_norm_ = fit_normalizer(xhat, train.size(), p_m);
    output_norm_ = fit_normalizer(yhat, train.size(), p_u);
    for (int k = 0; k < train.size(); ++k) {
        input_norm_.apply_inplace(xhat.data() + static_cast<std::size_t>(k) * p_m);
        output_norm_.apply_inplace(yhat.data() + static_cast<std::size_t>(k) * p_u);
    }
    input_proj_ = fit_projector(xhat, train.size(), p_m, r_m_);
    output_proj_ = fit_projector(yhat, train.size(), p_u, r_u_);

    auto reduce = [&](const DatasetView& view) {
        std::vector<double> xr(static_cast<std::size_t>(view.size()) * r_m_);
        std::vector<double> yr(static_cast<std::size_t>(view.size()) * r_u_);
        for (int k = 0; k < view.size(); ++k) {
            std::vector<double> x(view.x_row(k), view.x_row(k) + p_m);
            std::vector<double> y(view.y_row(k), view.y_row(k) + p_u);
            input_norm_.apply_inplace(x.data());
            output_norm_.apply_inplace(y.data());
            const std::vector<double> xz = input_proj_.project(x);
            const std::vector<double> yz = output_proj_.project(y);
            std::copy(xz.begin(), xz.end(), xr.begin() + static_cast<std::size_t>(k) * r_m_);
            std::copy(yz.begin(), yz.end(), yr.begin() + static_cast<std::size_t>(k) * r_u_);
        }
        return std::pair{xr, yr};
    };
    const auto [xtrain, ytrain] = reduce(train);
    const auto [xtest, ytest] = reduce(test);

    Adam adam(core_.parameters(), opts.lr, opts.weight_decay);
    if (trained_epochs_ > 0 && last_adam_state_) adam.restore(*last_adam_state_);

    auto gather = [&](const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::vector<int>& rows, Tensor& x_out, std::vector<double>& y_out) {
        const int b = static_cast<int>(rows.size());
        std::vector<double> xb(static_cast<std::size_t>(b) * r_m_);
        y_out.resize(static_cast<std::size_t>(b) * r_u_);
        for (int k = 0; k < b; ++k) {
            std::copy(xs.begin() + static_cast<std::size_t>(rows[k]) * r_m_,
                      xs.begin() + static_cast<std::size_t>(rows[k] + 1) * r_m_,
                      xb.begin() + static_cast<std::size_t>(k) * r_m_);
            std::copy(ys.begin() + static_cast<std::size_t>(rows[k]) * r_u_,
                      ys.begin() + static_cast<std::size_t>(rows[k] + 1) * r_u_,
                      y_out.begin() + static_cast<std::size_t>(k) * r_u_);
        }
        x_out = Tensor::matrix(std::move(xb), b, r_m_);
    };

    auto train_step = [&](const std::vector<int>& batch) {
        Tensor xb;
        std::vector<double> yb;
        gather(xtrain, ytrain, batch, xb, yb);
        const Tensor pred = core_.forward(xb);
        // (1/N) sum of squared row errors
        const Tensor loss = scaled_sq_error(pred, yb, static_cast<double>(batch.size()));
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
            sum += scaled_sq_error(core_.forward(xb), yb, static_cast<double>(rows.size())).item();
            ++n_batches;
        }
        return sum / n_batches;
    };

    run_epochs(adam, opts, trained_epochs_, train.size(), train_step, test_loss, loss_log_);
    trained_epochs_ = opts.epochs;
    last_adam_state_ = adam.state();
}

void PcaNetModel::save(const std::string& dir) const {
    ckpt::Writer writer;
    writer.meta["format_version"] = "1";
    writer.meta["arch"] = "pcanet";
    writer.meta["mesh"] = {{"nx", mesh_.nx}, {"ny", mesh_.ny}, {"L1", mesh_.L1}, {"L2", mesh_.L2}};
    writer.meta["d_o"] = d_o_;
    writer.meta["r_m"] = r_m_;
    writer.meta["r_u"] = r_u_;
    writer.meta["depth"] = core_.depth();
    writer.meta["width"] = core_.hidden_size();
    writer.meta["epoch"] = trained_epochs_;
    writer.meta["seed"] = init_seed_;
    for (std::size_t l = 0; l < core_.weights().size(); ++l) {
        writer.param("core.w" + std::to_string(l), core_.weights()[l]);
        writer.param("core.b" + std::to_string(l), core_.biases()[l]);
    }
    writer.aux("input_norm.mean", input_norm_.mean);
    writer.aux("input_norm.std", input_norm_.std_dev);
    writer.aux("output_norm.mean", output_norm_.mean);
    writer.aux("output_norm.std", output_norm_.std_dev);
    writer.aux("input_proj.basis", input_proj_.basis);
    writer.aux("output_proj.basis", output_proj_.basis);
    // full spectra kept with the model for reproducible decay plots
    writer.meta["spectrum_sizes"] = {input_proj_.singular_values.size(),
                                     output_proj_.singular_values.size()};
    writer.aux("input_proj.sigma", input_proj_.singular_values);
    writer.aux("output_proj.sigma", output_proj_.singular_values);
    if (last_adam_state_) {
        Adam adam(core_.parameters());
        adam.restore(*last_adam_state_);
        writer.optimizer(adam);
    }
    writer.write(dir);
}

std::shared_ptr<PcaNetModel> PcaNetModel::load(const std::string& dir) {
    ckpt::Reader reader(dir);
    const auto& meta = reader.meta;
    const Mesh mesh = build_rect_mesh(meta.at("mesh").at("nx").get<int>(),
                                      meta.at("mesh").at("ny").get<int>(),
                                      meta.at("mesh").at("L1").get<double>(),
                                      meta.at("mesh").at("L2").get<double>());
    Rng rng(meta.at("seed").get<std::uint64_t>());
    const int d_o = meta.at("d_o").get<int>();
    const int r_m = meta.at("r_m").get<int>();
    const int r_u = meta.at("r_u").get<int>();
    auto model = std::make_shared<PcaNetModel>(mesh, d_o, r_m, r_u, meta.at("depth").get<int>(),
                                               meta.at("width").get<int>(), rng);
    for (std::size_t l = 0; l < model->core_.weights().size(); ++l) {
        reader.param(model->core_.weights()[l]);
        reader.param(model->core_.biases()[l]);
    }
    const std::size_t p_m = static_cast<std::size_t>(model->mesh_.node_count());
    const std::size_t p_u = p_m * d_o;
    model->input_norm_.mean = reader.aux(p_m);
    model->input_norm_.std_dev = reader.aux(p_m);
    model->output_norm_.mean = reader.aux(p_u);
    model->output_norm_.std_dev = reader.aux(p_u);
    model->input_proj_.r = r_m;
    model->input_proj_.p = static_cast<int>(p_m);
    model->input_proj_.basis = reader.aux(static_cast<std::size_t>(r_m) * p_m);
    model->output_proj_.r = r_u;
    model->output_proj_.p = static_cast<int>(p_u);
    model->output_proj_.basis = reader.aux(static_cast<std::size_t>(r_u) * p_u);
    const auto sizes = meta.at("spectrum_sizes").get<std::vector<std::size_t>>();
    model->input_proj_.singular_values = reader.aux(sizes[0]);
    model->output_proj_.singular_values = reader.aux(sizes[1]);
    model->trained_epochs_ = meta.at("epoch").get<int>();
    if (reader.has_optimizer()) {
        Adam adam(model->core_.parameters());
        reader.restore_optimizer(adam);
        model->last_adam_state_ = adam.state();
    }
    return model;
}

} // namespace operon
