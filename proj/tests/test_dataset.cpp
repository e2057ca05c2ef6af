#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "operon/dataset.hpp"
#include "operon/surrogate.hpp"

using namespace operon;

namespace {

std::shared_ptr<ForwardModel> make_model(const std::string& problem, int n_cells) {
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(n_cells, n_cells, 1.0, 1.0));
    auto prior = build_prior(*mesh, 0.005, 1.0, 0.2, NodalField::constant(0.0, mesh->node_count()), 0);
    const TransformParams tp =
        problem == "poisson" ? TransformParams{1.0, 0.0} : TransformParams{100.0, 1000.0};
    return make_forward_model(problem, mesh, prior, tp);
}

} // namespace

TEST_CASE("generate shapes and determinism") {
    auto model = make_model("poisson", 5);
    const int p = model->mesh().node_count();

    const Dataset one = generate(*model, 1, 3);
    CHECK(one.meta.N == 1);
    CHECK(static_cast<int>(one.X.size()) == p);
    CHECK(static_cast<int>(one.Y.size()) == p);

    const Dataset a = generate(*model, 6, 42);
    const Dataset b = generate(*model, 6, 42);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);

    // worker count does not change the result
    const Dataset c = generate(*model, 6, 42, /*threads=*/2);
    CHECK(a.X == c.X);
    CHECK(a.Y == c.Y);

    // stored parameters are the transformed (positive) fields
    for (double v : a.X) CHECK(v > 0.0);
}

TEST_CASE("elasticity datasets carry two output components") {
    auto model = make_model("linear_elasticity", 4);
    const Dataset ds = generate(*model, 2, 1);
    CHECK(ds.meta.d_o == 2);
    CHECK(ds.meta.p_u == 2 * ds.meta.p_m);
}

TEST_CASE("split properties") {
    auto model = make_model("poisson", 4);
    Dataset ds = generate(*model, 10, 5);

    SUBCASE("empty test set") {
        split(ds, 10, 0, 1);
        CHECK(train_view(ds).size() == 10);
        CHECK(test_view(ds).size() == 0);
    }

    SUBCASE("disjoint and exhaustive") {
        split(ds, 7, 3, 1);
        std::set<int> seen;
        for (int idx : ds.meta.train_indices) seen.insert(idx);
        for (int idx : ds.meta.test_indices) seen.insert(idx);
        CHECK(seen.size() == 10);
    }

    SUBCASE("seeded shuffle is reproducible") {
        split(ds, 7, 3, 9);
        const auto train_a = ds.meta.train_indices;
        split(ds, 7, 3, 9);
        CHECK(ds.meta.train_indices == train_a);
    }

    SUBCASE("count overflow is rejected") {
        CHECK_THROWS_AS(split(ds, 8, 3, 1), std::invalid_argument);
    }
}

TEST_CASE("grid dataset arrays and statistics") {
    auto model = make_model("poisson", 6);
    Dataset ds = generate(*model, 8, 11);
    split(ds, 6, 2, 3);

    // overwrite one parameter row with a linear field: channel 0 must be exact
    const Mesh& mesh = model->mesh();
    for (int n = 0; n < mesh.node_count(); ++n)
        ds.X[n] = 1.0 + 0.5 * mesh.nodes[n][0] + 0.25 * mesh.nodes[n][1];

    const GridTransfer transfer(mesh, 9, 9);
    to_grid_dataset(ds, transfer);
    CHECK(ds.meta.grid_n1 == 9);

    const std::size_t plane = 81;
    for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b) {
            const auto pt = transfer.grid_point(a, b);
            const std::size_t g = static_cast<std::size_t>(a) * 9 + b;
            CHECK(std::abs(ds.Xgrid[g * 3] - (1.0 + 0.5 * pt[0] + 0.25 * pt[1])) < 1e-12);
        }

    // coordinate channels identical across samples
    for (int i = 1; i < ds.meta.N; ++i)
        for (std::size_t g = 0; g < plane; ++g) {
            CHECK(ds.Xgrid[(i * plane + g) * 3 + 1] == ds.Xgrid[g * 3 + 1]);
            CHECK(ds.Xgrid[(i * plane + g) * 3 + 2] == ds.Xgrid[g * 3 + 2]);
        }

    // stored normalization statistics match a recomputation from raw rows
    const auto& train = ds.meta.train_indices;
    for (std::size_t g = 0; g < plane; ++g) {
        double mean = 0.0;
        for (int idx : train) mean += ds.Xgrid[(static_cast<std::size_t>(idx) * plane + g) * 3];
        mean /= train.size();
        double var = 0.0;
        for (int idx : train) {
            const double d = ds.Xgrid[(static_cast<std::size_t>(idx) * plane + g) * 3] - mean;
            var += d * d;
        }
        CHECK(std::abs(ds.grid_norm_in.mean[g] - mean) < 1e-12);
        CHECK(std::abs(ds.grid_norm_in.std_dev[g] - std::sqrt(var / train.size())) < 1e-12);
    }

    SUBCASE("grid resampling requires a split") {
        Dataset fresh = generate(*model, 4, 2);
        const GridTransfer t2(mesh, 7, 7);
        CHECK_THROWS_AS(to_grid_dataset(fresh, t2), std::invalid_argument);
    }
}

TEST_CASE("dataset save/load round trip is bitwise") {
    auto model = make_model("poisson", 5);
    Dataset ds = generate(*model, 6, 13);
    split(ds, 4, 2, 17);
    const GridTransfer transfer(model->mesh(), 7, 7);
    to_grid_dataset(ds, transfer);

    const std::string dir = "/tmp/operon_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    const Dataset back = load_dataset(dir);

    CHECK(back.X == ds.X);
    CHECK(back.Y == ds.Y);
    CHECK(back.Xgrid == ds.Xgrid);
    CHECK(back.Ygrid == ds.Ygrid);
    CHECK(back.grid_norm_in.mean == ds.grid_norm_in.mean);
    CHECK(back.grid_norm_in.std_dev == ds.grid_norm_in.std_dev);
    CHECK(back.grid_norm_out.mean == ds.grid_norm_out.mean);
    CHECK(back.meta.train_indices == ds.meta.train_indices);
    CHECK(back.meta.test_indices == ds.meta.test_indices);
    CHECK(back.meta.problem == ds.meta.problem);
    CHECK(back.meta.seed == ds.meta.seed);
    CHECK(back.meta.alpha_m == ds.meta.alpha_m);

    // mesh reconstructed deterministically from the metadata
    auto mesh = back.make_mesh();
    CHECK(mesh->node_count() == model->mesh().node_count());
    for (int n = 0; n < mesh->node_count(); ++n) {
        CHECK(mesh->nodes[n][0] == model->mesh().nodes[n][0]);
        CHECK(mesh->nodes[n][1] == model->mesh().nodes[n][1]);
    }

    // regeneration from the stored metadata reproduces the arrays bitwise
    auto model2 = back.make_model();
    const Dataset regen = generate(*model2, back.meta.N, back.meta.seed);
    CHECK(regen.X == ds.X);
    CHECK(regen.Y == ds.Y);
}

TEST_CASE("surrogate checkpoints restore predictions exactly") {
    auto model = make_model("poisson", 5);
    Dataset ds = generate(*model, 14, 19);
    split(ds, 12, 2, 23);
    const GridTransfer transfer(model->mesh(), 7, 7);
    to_grid_dataset(ds, transfer);

    TrainOptions opts;
    opts.epochs = 3;
    opts.batch_size = 6;
    opts.seed = 29;
    opts.width = 12;
    opts.n_tr = 4;
    opts.r_m = 6;
    opts.r_u = 6;
    opts.d_h = 4;
    opts.fno_layers = 2;
    opts.k_max = 2;

    NodalField probe(std::vector<double>(ds.x_row(1), ds.x_row(1) + ds.meta.p_m), 1);
    for (const std::string arch : {"deeponet", "pcanet", "fno"}) {
        CAPTURE(arch);
        auto trained = train_surrogate(arch, ds, opts);
        const NodalField before = trained->predict(probe);

        const std::string dir = "/tmp/operon_test_ckpt_" + arch;
        std::filesystem::remove_all(dir);
        trained->save(dir);
        auto loaded = load_surrogate(dir);
        CHECK(loaded->arch() == arch);
        const NodalField after = loaded->predict(probe);
        CHECK(before.values == after.values);
    }
}

TEST_CASE("resumed training continues the uninterrupted trajectory exactly") {
    auto model = make_model("poisson", 5);
    Dataset ds = generate(*model, 14, 31);
    split(ds, 12, 2, 37);

    TrainOptions opts;
    opts.batch_size = 6;
    opts.seed = 41;
    opts.width = 12;
    opts.r_m = 6;
    opts.r_u = 6;

    // uninterrupted run: 6 epochs
    opts.epochs = 6;
    auto full = train_surrogate("pcanet", ds, opts);

    // interrupted run: 3 epochs, checkpoint, resume to 6
    opts.epochs = 3;
    auto half = train_surrogate("pcanet", ds, opts);
    const std::string dir = "/tmp/operon_test_resume";
    std::filesystem::remove_all(dir);
    half->save(dir);

    opts.epochs = 6;
    auto resumed = train_surrogate("pcanet", ds, opts, dir);

    // epochs 4..6 of the resumed run match the uninterrupted run bitwise
    REQUIRE(resumed->loss_log().size() == 3);
    for (int e = 0; e < 3; ++e) {
        CHECK(resumed->loss_log()[e].epoch == full->loss_log()[3 + e].epoch);
        CHECK(resumed->loss_log()[e].train_loss == full->loss_log()[3 + e].train_loss);
        CHECK(resumed->loss_log()[e].test_loss == full->loss_log()[3 + e].test_loss);
    }

    // and so do the predictions of the final models
    NodalField probe(std::vector<double>(ds.x_row(0), ds.x_row(0) + ds.meta.p_m), 1);
    CHECK(full->predict(probe).values == resumed->predict(probe).values);
}

TEST_CASE("evaluation reports per-sample relative errors with summary stats") {
    auto model = make_model("poisson", 5);
    Dataset ds = generate(*model, 12, 43);
    split(ds, 10, 2, 47);

    TrainOptions opts;
    opts.epochs = 5;
    opts.batch_size = 5;
    opts.seed = 53;
    opts.width = 12;
    opts.r_m = 5;
    opts.r_u = 5;
    auto trained = train_surrogate("pcanet", ds, opts);

    const EvalReport report = evaluate_surrogate(*trained, test_view(ds));
    REQUIRE(report.rel_l2_percent.size() == 2);
    for (double e : report.rel_l2_percent) CHECK(e >= 0.0);
    const double lo = std::min(report.rel_l2_percent[0], report.rel_l2_percent[1]);
    const double hi = std::max(report.rel_l2_percent[0], report.rel_l2_percent[1]);
    CHECK(report.median == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
    CHECK(report.mean == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
}
