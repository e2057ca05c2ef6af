#include "operon/deeponet.hpp"

#include <cmath>
#include <stdexcept>

#include "checkpoint.hpp"
#include "trainer.hpp"

namespace operon {

DeepOnetData deeponet_build_data(const Mesh& mesh, const Normalizer& norm,
                                 const std::vector<const double*>& x_rows,
                                 const std::vector<const double*>& y_rows, int p_m, int d_o,
                                 const std::optional<std::vector<std::array<double, 2>>>& points) {
    if (x_rows.size() != y_rows.size())
        throw std::invalid_argument("deeponet_build_data: inconsistent sample counts");

    DeepOnetData data;
    data.n = static_cast<int>(x_rows.size());
    data.p_m = p_m;
    data.d_o = d_o;

    const bool use_nodes = !points.has_value();
    const int n_x = use_nodes ? mesh.node_count() : static_cast<int>(points->size());
    data.n_x = n_x;

    data.X_tr.resize(static_cast<std::size_t>(n_x) * 2);
    for (int j = 0; j < n_x; ++j) {
        const auto& pt = use_nodes ? mesh.nodes[j] : (*points)[j];
        data.X_tr[2 * j] = pt[0];
        data.X_tr[2 * j + 1] = pt[1];
    }

    data.X_br.resize(static_cast<std::size_t>(data.n) * p_m);
    data.Y.resize(static_cast<std::size_t>(data.n) * n_x * d_o);
    for (int i = 0; i < data.n; ++i) {
        double* xb = data.X_br.data() + static_cast<std::size_t>(i) * p_m;
        std::copy(x_rows[i], x_rows[i] + p_m, xb);
        norm.apply_inplace(xb);

        double* yr = data.Y.data() + static_cast<std::size_t>(i) * n_x * d_o;
        if (use_nodes) {
            std::copy(y_rows[i], y_rows[i] + static_cast<std::size_t>(n_x) * d_o, yr);
        } else {
            NodalField u(std::vector<double>(y_rows[i], y_rows[i] + static_cast<std::size_t>(mesh.node_count()) * d_o), d_o);
            const std::vector<double> vals = interpolate_at_points(mesh, u, *points);
            std::copy(vals.begin(), vals.end(), yr);
        }
    }
    return data;
}

DeepOnetModel::DeepOnetModel(Mesh mesh, int d_o, int n_tr, int depth, int width, Rng& rng)
    : mesh_(std::move(mesh)), d_o_(d_o), n_tr_(n_tr) {
    init_seed_ = rng.seed();
    branch_ = Mlp(mesh_.node_count(), width, d_o * n_tr, depth, rng);
    trunk_ = Mlp(2, width, n_tr, depth, rng);
    bias_ = Tensor::vector(std::vector<double>(d_o, 1.0), /*requires_grad=*/true);
    input_norm_.mean.assign(mesh_.node_count(), 0.0);
    input_norm_.std_dev.assign(mesh_.node_count(), 1.0);
    refresh_trunk_cache();
}

std::vector<Tensor> DeepOnetModel::parameters() const {
    std::vector<Tensor> params = branch_.parameters();
    const std::vector<Tensor> trunk_params = trunk_.parameters();
    params.insert(params.end(), trunk_params.begin(), trunk_params.end());
    params.push_back(bias_);
    return params;
}

Tensor DeepOnetModel::forward(const Tensor& m_batch, const Tensor& coords) const {
    const Tensor branch_out = branch_.forward(m_batch);
    const Tensor trunk_out = trunk_.forward(coords, /*final_relu=*/true);
    return dot_combine(branch_out, trunk_out, bias_, d_o_);
}

void DeepOnetModel::refresh_trunk_cache() const {
    std::vector<double> coords(static_cast<std::size_t>(mesh_.node_count()) * 2);
    for (int j = 0; j < mesh_.node_count(); ++j) {
        coords[2 * j] = mesh_.nodes[j][0];
        coords[2 * j + 1] = mesh_.nodes[j][1];
    }
    const Tensor coord_tensor = Tensor::matrix(std::move(coords), mesh_.node_count(), 2);
    trunk_cache_ = trunk_.forward(coord_tensor, /*final_relu=*/true).values();
}

NodalField DeepOnetModel::predict(const NodalField& m) const {
    if (m.components != 1 || m.node_count() != mesh_.node_count())
        throw std::invalid_argument("deeponet predict: input does not match the training mesh");
    const Tensor m_in = Tensor::matrix(input_norm_.apply(m.values), 1, mesh_.node_count());
    const Tensor branch_out = branch_.forward(m_in);
    const Tensor trunk_vals = Tensor::matrix(std::vector<double>(trunk_cache_), mesh_.node_count(), n_tr_);
    const Tensor out = dot_combine(branch_out, trunk_vals, bias_, d_o_);
    return NodalField(out.values(), d_o_);
}

void DeepOnetModel::train(const Dataset& ds, const TrainOptions& opts) {
    const DatasetView train = train_view(ds);
    const DatasetView test = test_view(ds);
    if (train.size() < 2) throw std::invalid_argument("deeponet train: need a train split");

    auto collect = [&](const DatasetView& view) {
        std::vector<const double*> xr, yr;
        for (int k = 0; k < view.size(); ++k) {
            xr.push_back(view.x_row(k));
            yr.push_back(view.y_row(k));
        }
        return std::pair{xr, yr};
    };

    // normalizer fitted on raw training inputs; Y stays in physical units
    {
        std::vector<double> xtrain(static_cast<std::size_t>(train.size()) * ds.meta.p_m);
        for (int k = 0; k < train.size(); ++k)
            std::copy(train.x_row(k), train.x_row(k) + ds.meta.p_m,
                      xtrain.begin() + static_cast<std::size_t>(k) * ds.meta.p_m);
        input_norm_ = fit_normalizer(xtrain, train.size(), ds.meta.p_m);
    }

    const auto [xtr_rows, ytr_rows] = collect(train);
    const auto [xte_rows, yte_rows] = collect(test);
    const DeepOnetData train_data =
        deeponet_build_data(mesh_, input_norm_, xtr_rows, ytr_rows, ds.meta.p_m, d_o_);
    const DeepOnetData test_data =
        deeponet_build_data(mesh_, input_norm_, xte_rows, yte_rows, ds.meta.p_m, d_o_);

    const Tensor coords = Tensor::matrix(std::vector<double>(train_data.X_tr),
                                         train_data.n_x, 2);
    const int n_x = train_data.n_x;
    const int p_m = ds.meta.p_m;

    Adam adam(parameters(), opts.lr, opts.weight_decay);
    if (trained_epochs_ > 0 && last_adam_state_) adam.restore(*last_adam_state_);

    auto gather = [&](const DeepOnetData& data, const std::vector<int>& rows, Tensor& x_out,
                      std::vector<double>& y_out) {
        const int b = static_cast<int>(rows.size());
        std::vector<double> xb(static_cast<std::size_t>(b) * p_m);
        y_out.resize(static_cast<std::size_t>(b) * n_x * d_o_);
        for (int k = 0; k < b; ++k) {
            std::copy(data.X_br.begin() + static_cast<std::size_t>(rows[k]) * p_m,
                      data.X_br.begin() + static_cast<std::size_t>(rows[k] + 1) * p_m,
                      xb.begin() + static_cast<std::size_t>(k) * p_m);
            std::copy(data.Y.begin() + static_cast<std::size_t>(rows[k]) * n_x * d_o_,
                      data.Y.begin() + static_cast<std::size_t>(rows[k] + 1) * n_x * d_o_,
                      y_out.begin() + static_cast<std::size_t>(k) * n_x * d_o_);
        }
        x_out = Tensor::matrix(std::move(xb), b, p_m);
    };

    auto train_step = [&](const std::vector<int>& batch) {
        Tensor xb;
        std::vector<double> yb;
        gather(train_data, batch, xb, yb);
        const Tensor pred = forward(xb, coords);
        // mean over (sample, point) pairs of the squared error
        const Tensor loss = scaled_sq_error(pred, yb, static_cast<double>(batch.size()) * n_x);
        adam.zero_grad();
        backward(loss);
        adam.step();
        return loss.item();
    };

    auto test_loss = [&]() {
        if (test_data.n == 0) return 0.0;
        double sum = 0.0;
        int n_batches = 0;
        for (int begin = 0; begin < test_data.n; begin += opts.batch_size) {
            const int end = std::min(test_data.n, begin + opts.batch_size);
            std::vector<int> rows(static_cast<std::size_t>(end - begin));
            std::iota(rows.begin(), rows.end(), begin);
            Tensor xb;
            std::vector<double> yb;
            gather(test_data, rows, xb, yb);
            const Tensor pred = forward(xb, coords);
            sum += scaled_sq_error(pred, yb, static_cast<double>(rows.size()) * n_x).item();
            ++n_batches;
        }
        return sum / n_batches;
    };

    run_epochs(adam, opts, trained_epochs_, train_data.n, train_step, test_loss, loss_log_);
    trained_epochs_ = opts.epochs;
    last_adam_state_ = adam.state();
    refresh_trunk_cache();
}

void DeepOnetModel::save(const std::string& dir) const {
    ckpt::Writer writer;
    writer.meta["format_version"] = "1";
    writer.meta["arch"] = "deeponet";
    writer.meta["mesh"] = {{"nx", mesh_.nx}, {"ny", mesh_.ny}, {"L1", mesh_.L1}, {"L2", mesh_.L2}};
    writer.meta["d_o"] = d_o_;
    writer.meta["n_tr"] = n_tr_;
    writer.meta["depth"] = branch_.depth();
    writer.meta["width"] = branch_.hidden_size();
    writer.meta["epoch"] = trained_epochs_;
    writer.meta["seed"] = init_seed_;
    for (std::size_t l = 0; l < branch_.weights().size(); ++l) {
        writer.param("branch.w" + std::to_string(l), branch_.weights()[l]);
        writer.param("branch.b" + std::to_string(l), branch_.biases()[l]);
    }
    for (std::size_t l = 0; l < trunk_.weights().size(); ++l) {
        writer.param("trunk.w" + std::to_string(l), trunk_.weights()[l]);
        writer.param("trunk.b" + std::to_string(l), trunk_.biases()[l]);
    }
    writer.param("bias", bias_);
    writer.aux("input_norm.mean", input_norm_.mean);
    writer.aux("input_norm.std", input_norm_.std_dev);
    if (last_adam_state_) {
        Adam adam(parameters());
        adam.restore(*last_adam_state_);
        writer.optimizer(adam);
    }
    writer.write(dir);
}

std::shared_ptr<DeepOnetModel> DeepOnetModel::load(const std::string& dir) {
    ckpt::Reader reader(dir);
    const auto& meta = reader.meta;
    const Mesh mesh = build_rect_mesh(meta.at("mesh").at("nx").get<int>(),
                                      meta.at("mesh").at("ny").get<int>(),
                                      meta.at("mesh").at("L1").get<double>(),
                                      meta.at("mesh").at("L2").get<double>());
    Rng rng(meta.at("seed").get<std::uint64_t>());
    auto model = std::make_shared<DeepOnetModel>(mesh, meta.at("d_o").get<int>(),
                                                 meta.at("n_tr").get<int>(),
                                                 meta.at("depth").get<int>(),
                                                 meta.at("width").get<int>(), rng);
    for (std::size_t l = 0; l < model->branch_.weights().size(); ++l) {
        reader.param(model->branch_.weights()[l]);
        reader.param(model->branch_.biases()[l]);
    }
    for (std::size_t l = 0; l < model->trunk_.weights().size(); ++l) {
        reader.param(model->trunk_.weights()[l]);
        reader.param(model->trunk_.biases()[l]);
    }
    reader.param(model->bias_);
    const std::size_t p = static_cast<std::size_t>(model->mesh_.node_count());
    model->input_norm_.mean = reader.aux(p);
    model->input_norm_.std_dev = reader.aux(p);
    model->trained_epochs_ = meta.at("epoch").get<int>();
    if (reader.has_optimizer()) {
        Adam adam(model->parameters());
        reader.restore_optimizer(adam);
        model->last_adam_state_ = adam.state();
    }
    model->refresh_trunk_cache();
    return model;
}

} // namespace operon
