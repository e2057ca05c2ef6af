#pragma once

// Internal checkpoint helpers: meta.json with a declared-order manifest plus
// raw little-endian f64 blobs (params.bin, aux.bin, optional opt.bin).

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "operon/io.hpp"
#include "operon/nn.hpp"
#include "operon/tensor.hpp"

namespace operon::ckpt {

class Writer {
public:
    nlohmann::json meta;

    void param(const std::string& name, const Tensor& t) {
        nlohmann::json entry;
        entry["name"] = name;
        std::vector<int> shape(t.shape().begin(), t.shape().begin() + t.ndim());
        entry["shape"] = shape;
        meta["params"].push_back(entry);
        params_.insert(params_.end(), t.values().begin(), t.values().end());
    }

    void aux(const std::string& name, const std::vector<double>& v) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["count"] = v.size();
        meta["aux"].push_back(entry);
        aux_.insert(aux_.end(), v.begin(), v.end());
    }

    void optimizer(const Adam& adam) {
        const Adam::State s = adam.state();
        meta["opt_step"] = s.step_count;
        for (const auto& m : s.m) opt_.insert(opt_.end(), m.begin(), m.end());
        for (const auto& v : s.v) opt_.insert(opt_.end(), v.begin(), v.end());
    }

    void write(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        const std::filesystem::path root(dir);
        write_text((root / "meta.json").string(), meta.dump(2) + "\n");
        write_f64((root / "params.bin").string(), params_);
        write_f64((root / "aux.bin").string(), aux_);
        if (!opt_.empty()) write_f64((root / "opt.bin").string(), opt_);
    }

private:
    std::vector<double> params_, aux_, opt_;
};

class Reader {
public:
    nlohmann::json meta;

    explicit Reader(const std::string& dir) : root_(dir) {
        meta = nlohmann::json::parse(read_text((root_ / "meta.json").string()));
        std::size_t n_params = 0;
        for (const auto& e : meta.value("params", nlohmann::json::array())) {
            std::size_t n = 1;
            for (int d : e.at("shape").get<std::vector<int>>()) n *= static_cast<std::size_t>(d);
            n_params += n;
        }
        std::size_t n_aux = 0;
        for (const auto& e : meta.value("aux", nlohmann::json::array()))
            n_aux += e.at("count").get<std::size_t>();
        params_ = read_f64((root_ / "params.bin").string(), n_params);
        aux_ = read_f64((root_ / "aux.bin").string(), n_aux);
    }

    // next parameter in declared order
    void param(Tensor& t) {
        if (p_cursor_ + t.numel() > params_.size())
            throw std::runtime_error("checkpoint: params.bin exhausted");
        std::copy(params_.begin() + p_cursor_, params_.begin() + p_cursor_ + t.numel(),
                  t.values().begin());
        p_cursor_ += t.numel();
    }

    std::vector<double> aux(std::size_t count) {
        if (a_cursor_ + count > aux_.size()) throw std::runtime_error("checkpoint: aux.bin exhausted");
        std::vector<double> out(aux_.begin() + a_cursor_, aux_.begin() + a_cursor_ + count);
        a_cursor_ += count;
        return out;
    }

    bool has_optimizer() const { return std::filesystem::exists(root_ / "opt.bin"); }

    void restore_optimizer(Adam& adam) const {
        Adam::State s;
        s.step_count = meta.at("opt_step").get<std::int64_t>();
        std::size_t total = 0;
        for (const Tensor& p : adam.params()) total += p.numel();
        const std::vector<double> blob = read_f64((root_ / "opt.bin").string(), 2 * total);
        std::size_t off = 0;
        for (const Tensor& p : adam.params()) {
            s.m.emplace_back(blob.begin() + off, blob.begin() + off + p.numel());
            off += p.numel();
        }
        for (const Tensor& p : adam.params()) {
            s.v.emplace_back(blob.begin() + off, blob.begin() + off + p.numel());
            off += p.numel();
        }
        adam.restore(s);
    }

private:
    std::filesystem::path root_;
    std::vector<double> params_, aux_;
    std::size_t p_cursor_ = 0, a_cursor_ = 0;
};

} // namespace operon::ckpt
