#include "operon/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "operon/deeponet.hpp"
#include "operon/fno.hpp"
#include "operon/io.hpp"
#include "operon/pcanet.hpp"

namespace operon {

std::shared_ptr<Surrogate> train_surrogate(const std::string& arch, const Dataset& ds,
                                           const TrainOptions& opts, const std::string& resume_dir) {
    if (!ds.has_split()) throw std::invalid_argument("train_surrogate: dataset has no split");
    const auto mesh = ds.make_mesh();

    if (arch == "deeponet") {
        std::shared_ptr<DeepOnetModel> model;
        if (!resume_dir.empty()) {
            model = DeepOnetModel::load(resume_dir);
        } else {
            Rng rng(opts.seed);
            model = std::make_shared<DeepOnetModel>(*mesh, ds.meta.d_o, opts.n_tr, opts.depth,
                                                    opts.width, rng);
        }
        model->train(ds, opts);
        return model;
    }
    if (arch == "pcanet") {
        std::shared_ptr<PcaNetModel> model;
        if (!resume_dir.empty()) {
            model = PcaNetModel::load(resume_dir);
        } else {
            Rng rng(opts.seed);
            model = std::make_shared<PcaNetModel>(*mesh, ds.meta.d_o, opts.r_m, opts.r_u, opts.depth,
                                                  opts.width, rng);
        }
        model->train(ds, opts);
        return model;
    }
    if (arch == "fno") {
        if (!ds.has_grid()) throw std::invalid_argument("train_surrogate: fno needs grid arrays");
        std::shared_ptr<FnoModel> model;
        if (!resume_dir.empty()) {
            model = FnoModel::load(resume_dir);
        } else {
            Rng rng(opts.seed);
            FnoOptions fno_opt{opts.d_h, opts.fno_layers, opts.k_max};
            model = std::make_shared<FnoModel>(*mesh, ds.meta.d_o, ds.meta.grid_n1, ds.meta.grid_n2,
                                               fno_opt, rng);
        }
        model->train(ds, opts);
        return model;
    }
    throw std::invalid_argument("train_surrogate: unknown architecture '" + arch + "'");
}

std::shared_ptr<Surrogate> load_surrogate(const std::string& dir) {
    const auto meta = nlohmann::json::parse(read_text(dir + "/meta.json"));
    const std::string arch = meta.at("arch").get<std::string>();
    if (arch == "deeponet") return DeepOnetModel::load(dir);
    if (arch == "pcanet") return PcaNetModel::load(dir);
    if (arch == "fno") return FnoModel::load(dir);
    throw std::invalid_argument("load_surrogate: unknown architecture '" + arch + "'");
}

void write_loss_csv(const std::string& path, const std::vector<LossLogRow>& log) {
    std::ostringstream out;
    out << "epoch,train_mse,test_mse\n";
    out.precision(17);
    for (const auto& row : log)
        out << row.epoch << "," << row.train_loss << "," << row.test_loss << "\n";
    write_text(path, out.str());
}

EvalReport evaluate_surrogate(const Surrogate& model, const DatasetView& view) {
    EvalReport report;
    const int p_u = view.ds->meta.p_u;
    for (int k = 0; k < view.size(); ++k) {
        NodalField m(std::vector<double>(view.x_row(k), view.x_row(k) + view.ds->meta.p_m), 1);
        const NodalField pred = model.predict(m);
        double num = 0.0, den = 0.0;
        const double* truth = view.y_row(k);
        for (int j = 0; j < p_u; ++j) {
            const double d = pred.values[j] - truth[j];
            num += d * d;
            den += truth[j] * truth[j];
        }
        report.sample_indices.push_back(view.indices[k]);
        report.rel_l2_percent.push_back(100.0 * std::sqrt(num / den));
    }
    std::vector<double> sorted = report.rel_l2_percent;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n > 0) {
        report.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        double sum = 0.0;
        for (double e : sorted) sum += e;
        report.mean = sum / n;
    }
    return report;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
    std::ostringstream out;
    out << "sample_index,rel_l2_error_percent\n";
    out.precision(17);
    for (std::size_t k = 0; k < report.sample_indices.size(); ++k)
        out << report.sample_indices[k] << "," << report.rel_l2_percent[k] << "\n";
    write_text(path, out.str());
}

} // namespace operon
