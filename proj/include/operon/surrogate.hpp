#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "operon/dataset.hpp"
#include "operon/mesh.hpp"

namespace operon {

struct TrainOptions {
    int epochs = 1000;
    int batch_size = 20;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;

    // architecture knobs; each model reads the ones it owns
    int depth = 4;
    int width = 128;
    int n_tr = 100;       // DeepONet trunk outputs (branch gets d_o * n_tr)
    int r_m = 100;        // PCANet reduced dims
    int r_u = 100;
    int d_h = 20;         // FNO
    int fno_layers = 3;
    int k_max = 8;
};

struct LossLogRow {
    int epoch;
    double train_loss;
    double test_loss;
};

/// Trained operator surrogate with the uniform predict interface used by the
/// MCMC driver: a NodalField on the training mesh in, a NodalField out.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual NodalField predict(const NodalField& m) const = 0;
    virtual std::string arch() const = 0;
    virtual int output_components() const = 0;
    virtual void save(const std::string& dir) const = 0;
    virtual const Mesh& mesh() const = 0;

    const std::vector<LossLogRow>& loss_log() const { return loss_log_; }

protected:
    std::vector<LossLogRow> loss_log_;
};

/// Train `arch` in {"deeponet", "pcanet", "fno"} on the dataset's train split,
/// logging the train/test objective per epoch. `resume_dir` continues a saved
/// checkpoint (parameters + optimizer state) up to opts.epochs.
std::shared_ptr<Surrogate> train_surrogate(const std::string& arch, const Dataset& ds,
                                           const TrainOptions& opts,
                                           const std::string& resume_dir = "");

std::shared_ptr<Surrogate> load_surrogate(const std::string& dir);

void write_loss_csv(const std::string& path, const std::vector<LossLogRow>& log);

struct EvalReport {
    std::vector<int> sample_indices;
    std::vector<double> rel_l2_percent;
    double median = 0.0;
    double mean = 0.0;
};

/// Per-sample relative l2 error (percent) of predictions against stored
/// solutions, plus median/mean summary.
EvalReport evaluate_surrogate(const Surrogate& model, const DatasetView& view);
void write_eval_csv(const std::string& path, const EvalReport& report);

} // namespace operon
