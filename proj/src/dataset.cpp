#include "operon/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "operon/io.hpp"
#include "operon/rng.hpp"

namespace operon {

using nlohmann::json;

std::shared_ptr<const Mesh> Dataset::make_mesh() const {
    return std::make_shared<Mesh>(build_rect_mesh(meta.nx, meta.ny, meta.L1, meta.L2));
}

std::shared_ptr<ForwardModel> Dataset::make_model() const {
    auto mesh = make_mesh();
    auto prior = meta.b_c_is_field
                     ? build_prior(*mesh, meta.a_c, b_c_field, meta.c_c,
                                   NodalField::constant(0.0, mesh->node_count()), meta.prior_seed)
                     : build_prior(*mesh, meta.a_c, meta.b_c, meta.c_c,
                                   NodalField::constant(0.0, mesh->node_count()), meta.prior_seed);
    return make_forward_model(meta.problem, mesh, prior, {meta.alpha_m, meta.beta_m});
}

Dataset generate(const ForwardModel& model, int N, std::uint64_t seed, int threads) {
    if (N < 1) throw std::invalid_argument("generate: N must be >= 1");
    const Mesh& mesh = model.mesh();
    const GaussianPrior& prior = model.prior();

    Dataset ds;
    ds.meta.problem = model.problem_tag();
    ds.meta.nx = mesh.nx;
    ds.meta.ny = mesh.ny;
    ds.meta.L1 = mesh.L1;
    ds.meta.L2 = mesh.L2;
    ds.meta.a_c = prior.a_c();
    ds.meta.c_c = prior.c_c();
    {
        const auto& b = prior.b_c().values;
        const bool constant = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
        if (constant) {
            ds.meta.b_c = b[0];
        } else {
            ds.meta.b_c_is_field = true;
            ds.b_c_field = prior.b_c();
        }
    }
    ds.meta.alpha_m = model.transform_params().alpha_m;
    ds.meta.beta_m = model.transform_params().beta_m;
    ds.meta.prior_seed = prior.seed();
    ds.meta.seed = seed;
    ds.meta.N = N;
    ds.meta.p_m = mesh.node_count();
    ds.meta.d_o = model.output_components();
    ds.meta.p_u = mesh.node_count() * ds.meta.d_o;

    ds.X.resize(static_cast<std::size_t>(N) * ds.meta.p_m);
    ds.Y.resize(static_cast<std::size_t>(N) * ds.meta.p_u);

    const Rng root(seed);
    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            Rng rng = root.substream(static_cast<std::uint64_t>(i));
            int attempts = 0;
            for (;;) {
                try {
                    const NodalField m = model.sample_prior(rng, /*transform=*/true);
                    const NodalField u = model.solve(m);
                    std::copy(m.values.begin(), m.values.end(),
                              ds.X.begin() + static_cast<std::size_t>(i) * ds.meta.p_m);
                    std::copy(u.values.begin(), u.values.end(),
                              ds.Y.begin() + static_cast<std::size_t>(i) * ds.meta.p_u);
                    break;
                } catch (const std::exception&) {
                    if (++attempts > 3) throw;
                }
            }
        }
    };

    const int n_threads = std::max(1, std::min(threads, N));
    if (n_threads == 1) {
        worker(0, N);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (N + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(N, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return ds;
}

void split(Dataset& ds, int n_train, int n_test, std::uint64_t seed) {
    if (n_train < 0 || n_test < 0 || n_train + n_test > ds.meta.N)
        throw std::invalid_argument("split: counts exceed dataset size");
    std::vector<int> order(ds.meta.N);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order.data(), order.size());
    ds.meta.n_train = n_train;
    ds.meta.n_test = n_test;
    ds.meta.split_seed = seed;
    ds.meta.train_indices.assign(order.begin(), order.begin() + n_train);
    ds.meta.test_indices.assign(order.begin() + n_train, order.begin() + n_train + n_test);
}

DatasetView train_view(const Dataset& ds) { return {&ds, ds.meta.train_indices}; }
DatasetView test_view(const Dataset& ds) { return {&ds, ds.meta.test_indices}; }

void to_grid_dataset(Dataset& ds, const GridTransfer& transfer) {
    if (transfer.mesh().nx != ds.meta.nx || transfer.mesh().ny != ds.meta.ny)
        throw std::invalid_argument("to_grid_dataset: transfer mesh does not match dataset");
    if (!ds.has_split()) throw std::invalid_argument("to_grid_dataset: split the dataset first");

    const int n1 = transfer.n1(), n2 = transfer.n2();
    const int N = ds.meta.N, d_o = ds.meta.d_o, p_m = ds.meta.p_m;
    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    ds.meta.grid_n1 = n1;
    ds.meta.grid_n2 = n2;
    ds.Xgrid.assign(static_cast<std::size_t>(N) * plane * 3, 0.0);
    ds.Ygrid.assign(static_cast<std::size_t>(N) * plane * d_o, 0.0);

    for (int i = 0; i < N; ++i) {
        std::vector<double> m_row(ds.x_row(i), ds.x_row(i) + p_m);
        const std::vector<double> m_grid = transfer.fem_to_grid(m_row);
        double* xg = ds.Xgrid.data() + static_cast<std::size_t>(i) * plane * 3;
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n2; ++b) {
                const auto pt = transfer.grid_point(a, b);
                const std::size_t g = static_cast<std::size_t>(a) * n2 + b;
                xg[g * 3 + 0] = m_grid[g];
                xg[g * 3 + 1] = pt[0];
                xg[g * 3 + 2] = pt[1];
            }
        double* yg = ds.Ygrid.data() + static_cast<std::size_t>(i) * plane * d_o;
        for (int c = 0; c < d_o; ++c) {
            std::vector<double> u_row(ds.y_row(i) + static_cast<std::size_t>(c) * p_m,
                                      ds.y_row(i) + static_cast<std::size_t>(c + 1) * p_m);
            const std::vector<double> u_grid = transfer.fem_to_grid(u_row);
            for (std::size_t g = 0; g < plane; ++g) yg[g * d_o + c] = u_grid[g];
        }
    }

    // normalization statistics over training rows only
    const auto& train = ds.meta.train_indices;
    std::vector<double> m_cols(train.size() * plane);
    std::vector<double> u_cols(train.size() * plane * d_o);
    for (std::size_t k = 0; k < train.size(); ++k) {
        const double* xg = ds.Xgrid.data() + static_cast<std::size_t>(train[k]) * plane * 3;
        for (std::size_t g = 0; g < plane; ++g) m_cols[k * plane + g] = xg[g * 3];
        const double* yg = ds.Ygrid.data() + static_cast<std::size_t>(train[k]) * plane * d_o;
        std::copy(yg, yg + plane * d_o, u_cols.begin() + k * plane * d_o);
    }
    ds.grid_norm_in = fit_normalizer(m_cols, static_cast<int>(train.size()), static_cast<int>(plane));
    ds.grid_norm_out =
        fit_normalizer(u_cols, static_cast<int>(train.size()), static_cast<int>(plane * d_o));
}

namespace {

json meta_to_json(const DatasetMeta& m) {
    json j;
    j["format_version"] = m.format_version;
    j["dtype"] = "f64";
    j["byte_order"] = "little";
    j["problem"] = m.problem;
    j["mesh"] = {{"nx", m.nx}, {"ny", m.ny}, {"L1", m.L1}, {"L2", m.L2}};
    j["prior"] = {{"a_c", m.a_c}, {"c_c", m.c_c}, {"seed", m.prior_seed}};
    if (m.b_c_is_field)
        j["prior"]["b_c_file"] = "b_c.bin";
    else
        j["prior"]["b_c"] = m.b_c;
    j["transform"] = {{"alpha_m", m.alpha_m}, {"beta_m", m.beta_m}};
    j["seed"] = m.seed;
    j["shapes"]["X"] = {m.N, m.p_m};
    j["shapes"]["Y"] = {m.N, m.p_u};
    j["d_o"] = m.d_o;
    if (m.grid_n1 > 0) {
        j["shapes"]["Xgrid"] = {m.N, m.grid_n1, m.grid_n2, 3};
        j["shapes"]["Ygrid"] = {m.N, m.grid_n1, m.grid_n2, m.d_o};
    }
    if (!m.train_indices.empty()) {
        j["split"] = {{"n_train", m.n_train},
                      {"n_test", m.n_test},
                      {"seed", m.split_seed},
                      {"train_indices", m.train_indices},
                      {"test_indices", m.test_indices}};
    }
    return j;
}

void meta_from_json(const json& j, DatasetMeta& m) {
    m.format_version = j.at("format_version").get<std::string>();
    m.problem = j.at("problem").get<std::string>();
    m.nx = j.at("mesh").at("nx").get<int>();
    m.ny = j.at("mesh").at("ny").get<int>();
    m.L1 = j.at("mesh").at("L1").get<double>();
    m.L2 = j.at("mesh").at("L2").get<double>();
    m.a_c = j.at("prior").at("a_c").get<double>();
    m.c_c = j.at("prior").at("c_c").get<double>();
    m.b_c_is_field = j.at("prior").contains("b_c_file");
    if (!m.b_c_is_field) m.b_c = j.at("prior").at("b_c").get<double>();
    m.prior_seed = j.at("prior").at("seed").get<std::uint64_t>();
    m.alpha_m = j.at("transform").at("alpha_m").get<double>();
    m.beta_m = j.at("transform").at("beta_m").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.N = j.at("shapes").at("X").at(0).get<int>();
    m.p_m = j.at("shapes").at("X").at(1).get<int>();
    m.p_u = j.at("shapes").at("Y").at(1).get<int>();
    m.d_o = j.at("d_o").get<int>();
    if (j.at("shapes").contains("Xgrid")) {
        m.grid_n1 = j.at("shapes").at("Xgrid").at(1).get<int>();
        m.grid_n2 = j.at("shapes").at("Xgrid").at(2).get<int>();
    }
    if (j.contains("split")) {
        m.n_train = j.at("split").at("n_train").get<int>();
        m.n_test = j.at("split").at("n_test").get<int>();
        m.split_seed = j.at("split").at("seed").get<std::uint64_t>();
        m.train_indices = j.at("split").at("train_indices").get<std::vector<int>>();
        m.test_indices = j.at("split").at("test_indices").get<std::vector<int>>();
    }
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path root(dir);
    write_text((root / "meta.json").string(), meta_to_json(ds.meta).dump(2) + "\n");
    write_f64((root / "X.bin").string(), ds.X);
    write_f64((root / "Y.bin").string(), ds.Y);
    if (ds.meta.b_c_is_field) write_f64((root / "b_c.bin").string(), ds.b_c_field.values);
    if (ds.has_grid()) {
        write_f64((root / "Xgrid.bin").string(), ds.Xgrid);
        write_f64((root / "Ygrid.bin").string(), ds.Ygrid);
        json norm;
        norm["input"] = {{"mean", ds.grid_norm_in.mean}, {"std", ds.grid_norm_in.std_dev},
                         {"tol", ds.grid_norm_in.tol}};
        norm["output"] = {{"mean", ds.grid_norm_out.mean}, {"std", ds.grid_norm_out.std_dev},
                          {"tol", ds.grid_norm_out.tol}};
        write_text((root / "norm.json").string(), norm.dump() + "\n");
    }
}

Dataset load_dataset(const std::string& dir) {
    const std::filesystem::path root(dir);
    Dataset ds;
    meta_from_json(json::parse(read_text((root / "meta.json").string())), ds.meta);
    ds.X = read_f64((root / "X.bin").string(), static_cast<std::size_t>(ds.meta.N) * ds.meta.p_m);
    ds.Y = read_f64((root / "Y.bin").string(), static_cast<std::size_t>(ds.meta.N) * ds.meta.p_u);
    if (ds.meta.b_c_is_field)
        ds.b_c_field = NodalField(
            read_f64((root / "b_c.bin").string(),
                     static_cast<std::size_t>(ds.meta.nx + 1) * (ds.meta.ny + 1)),
            1);
    if (ds.has_grid()) {
        const std::size_t plane = static_cast<std::size_t>(ds.meta.grid_n1) * ds.meta.grid_n2;
        ds.Xgrid = read_f64((root / "Xgrid.bin").string(), static_cast<std::size_t>(ds.meta.N) * plane * 3);
        ds.Ygrid = read_f64((root / "Ygrid.bin").string(),
                            static_cast<std::size_t>(ds.meta.N) * plane * ds.meta.d_o);
        const json norm = json::parse(read_text((root / "norm.json").string()));
        ds.grid_norm_in.mean = norm.at("input").at("mean").get<std::vector<double>>();
        ds.grid_norm_in.std_dev = norm.at("input").at("std").get<std::vector<double>>();
        ds.grid_norm_in.tol = norm.at("input").at("tol").get<double>();
        ds.grid_norm_out.mean = norm.at("output").at("mean").get<std::vector<double>>();
        ds.grid_norm_out.std_dev = norm.at("output").at("std").get<std::vector<double>>();
        ds.grid_norm_out.tol = norm.at("output").at("tol").get<double>();
    }
    return ds;
}

} // namespace operon
