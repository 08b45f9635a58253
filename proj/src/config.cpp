#include "otalign/config.hpp"

#include <fstream>
#include <set>

namespace otalign {

namespace {

const std::set<std::string> kRequired = {"edges1", "edges2", "anchors", "alpha", "beta",
                                         "gamma_p", "lr", "epochs", "inner_steps", "T",
                                         "N", "tol", "seed", "train_ratio", "output_dir"};
const std::set<std::string> kOptional = {"attrs1", "attrs2", "mode", "noise_kind",
                                         "noise_p", "batch_size", "hidden"};

template <class T>
T get(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Config, "config key '" + key + "' has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::set_mode(const std::string& name) {
    if (name == "noise") {
        train.mode = TrainMode::Full;
    } else {
        train.mode = parse_train_mode(name);
    }
    mode = name;
}

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw Error(ErrorKind::Config, "config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!kRequired.count(key) && !kOptional.count(key)) {
            throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
        }
    }
    for (const auto& key : kRequired) {
        if (!j.contains(key)) {
            throw Error(ErrorKind::Config, "missing config key '" + key + "'");
        }
    }

    RunConfig cfg;
    cfg.snapshot = j;
    cfg.data.edges1 = resolve(base_dir, get<std::string>(j, "edges1"));
    cfg.data.edges2 = resolve(base_dir, get<std::string>(j, "edges2"));
    cfg.data.anchors = resolve(base_dir, get<std::string>(j, "anchors"));
    if (j.contains("attrs1") != j.contains("attrs2")) {
        throw Error(ErrorKind::Config, "attrs1 and attrs2 must be given together");
    }
    if (j.contains("attrs1")) {
        cfg.data.attrs1 = resolve(base_dir, get<std::string>(j, "attrs1"));
        cfg.data.attrs2 = resolve(base_dir, get<std::string>(j, "attrs2"));
    }
    cfg.output_dir = resolve(base_dir, get<std::string>(j, "output_dir"));

    auto& t = cfg.train;
    t.alpha = get<double>(j, "alpha");
    t.beta = get<double>(j, "beta");
    t.gamma_p = get<double>(j, "gamma_p");
    t.lr = get<double>(j, "lr");
    t.epochs = get<int>(j, "epochs");
    t.inner_steps = get<int>(j, "inner_steps");
    t.prox_iters = get<int>(j, "T");
    t.sinkhorn_iters = get<int>(j, "N");
    t.sinkhorn_tol = get<double>(j, "tol");
    t.seed = get<std::uint64_t>(j, "seed");
    cfg.train_ratio = get<double>(j, "train_ratio");
    if (j.contains("batch_size")) {
        t.batch_size = get<Index>(j, "batch_size");
    }
    if (j.contains("hidden")) {
        t.hidden = get<Index>(j, "hidden");
    }
    cfg.set_mode(j.contains("mode") ? get<std::string>(j, "mode") : "full");
    if (j.contains("noise_kind")) {
        const auto kind = get<std::string>(j, "noise_kind");
        if (kind == "structural") {
            cfg.noise_kind = NoiseKind::Structural;
        } else if (kind == "attribute") {
            cfg.noise_kind = NoiseKind::Attribute;
        } else {
            throw Error(ErrorKind::Config, "noise_kind must be structural or attribute");
        }
    }
    if (j.contains("noise_p")) {
        cfg.noise_p = get<double>(j, "noise_p");
    }
    if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0)) {
        throw Error(ErrorKind::Config, "train_ratio must lie in (0, 1)");
    }
    if (cfg.noise_p < 0.0 || cfg.noise_p > 100.0) {
        throw Error(ErrorKind::Config, "noise_p must lie in [0, 100]");
    }
    t.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

}  // namespace otalign
