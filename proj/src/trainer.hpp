#pragma once

// Shared epoch loop: step-lr schedule, per-epoch shuffle drawn from the
// substream (seed, epoch) so an interrupted run resumes bit-exactly.

#include <functional>
#include <numeric>
#include <vector>

#include "operon/nn.hpp"
#include "operon/rng.hpp"
#include "operon/surrogate.hpp"

namespace operon {

inline void run_epochs(Adam& adam, const TrainOptions& opts, int start_epoch, int n_train,
                       const std::function<double(const std::vector<int>&)>& train_step,
                       const std::function<double()>& test_loss,
                       std::vector<LossLogRow>& log) {
    const Rng root(opts.seed);
    std::vector<int> order(n_train);
    for (int epoch = start_epoch + 1; epoch <= opts.epochs; ++epoch) {
        adam.set_lr(step_lr(epoch, opts.lr));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = root.substream(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order.data(), order.size());

        double loss_sum = 0.0;
        int n_batches = 0;
        for (int begin = 0; begin < n_train; begin += opts.batch_size) {
            const int end = std::min(n_train, begin + opts.batch_size);
            const std::vector<int> batch(order.begin() + begin, order.begin() + end);
            loss_sum += train_step(batch);
            ++n_batches;
        }
        log.push_back({epoch, loss_sum / n_batches, test_loss()});
    }
}

} // namespace operon
