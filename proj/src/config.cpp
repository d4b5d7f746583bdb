#include "mimvc/config.hpp"

#include "mimvc/error.hpp"

#include <fstream>
#include <set>

using nlohmann::json;

namespace mimvc {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "dataset",       "out",          "eta",         "mask_seed",   "epochs",
        "lr",            "lambda",       "tau",         "eps",         "k",
        "seed",          "graph_refresh_period",        "variant",     "use_bias",
        "literal_eq14",  "scale",        "hidden1",     "hidden2",     "latent",
        "eval_runs",     "kmeans_restarts",             "eval_every",  "cluster_on",
        "checkpoint_every",             "lambda_grid", "seeds"};
    return keys;
}

std::string cluster_on_name(ClusterOn c) { return c == ClusterOn::fused ? "F" : "Y"; }

ClusterOn cluster_on_from(const std::string& s) {
    if (s == "F") return ClusterOn::fused;
    if (s == "Y") return ClusterOn::projection;
    throw ConfigError("cluster_on must be 'F' or 'Y', got '" + s + "'");
}

}  // namespace

json RunConfig::to_json() const {
    json j;
    j["dataset"] = dataset.string();
    j["out"] = out.string();
    j["eta"] = mask.missing_rate;
    if (explicit_mask_seed) j["mask_seed"] = mask.seed;
    j["epochs"] = train.epochs;
    j["lr"] = train.learning_rate;
    j["lambda"] = train.lambda;
    j["tau"] = train.tau;
    j["eps"] = train.eps;
    j["k"] = train.k;
    j["seed"] = train.seed;
    j["graph_refresh_period"] = train.graph_refresh_period;
    j["variant"] = to_string(train.variant);
    j["use_bias"] = train.use_bias;
    j["literal_eq14"] = train.literal_eq14;
    j["scale"] = train.scale_features;
    j["hidden1"] = train.hidden1;
    j["hidden2"] = train.hidden2;
    j["latent"] = train.latent;
    j["eval_runs"] = train.eval_runs;
    j["kmeans_restarts"] = train.kmeans_restarts;
    j["eval_every"] = train.eval_every;
    j["cluster_on"] = cluster_on_name(train.cluster_on);
    j["checkpoint_every"] = train.checkpoint_every;
    j["lambda_grid"] = lambda_grid;
    j["seeds"] = seeds;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    RunConfig c;
    bool mask_seed_given = false;
    try {
        if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        if (j.contains("eta")) c.mask.missing_rate = j["eta"].get<double>();
        if (j.contains("mask_seed")) {
            c.mask.seed = j["mask_seed"].get<std::uint64_t>();
            mask_seed_given = true;
        }
        if (j.contains("epochs")) c.train.epochs = j["epochs"].get<int>();
        if (j.contains("lr")) c.train.learning_rate = j["lr"].get<double>();
        if (j.contains("lambda")) c.train.lambda = j["lambda"].get<double>();
        if (j.contains("tau")) c.train.tau = j["tau"].get<double>();
        if (j.contains("eps")) c.train.eps = j["eps"].get<double>();
        if (j.contains("k")) c.train.k = j["k"].get<int>();
        if (j.contains("seed")) c.train.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("graph_refresh_period"))
            c.train.graph_refresh_period = j["graph_refresh_period"].get<int>();
        if (j.contains("variant")) c.train.variant = variant_from_string(j["variant"].get<std::string>());
        if (j.contains("use_bias")) c.train.use_bias = j["use_bias"].get<bool>();
        if (j.contains("literal_eq14")) c.train.literal_eq14 = j["literal_eq14"].get<bool>();
        if (j.contains("scale")) c.train.scale_features = j["scale"].get<bool>();
        if (j.contains("hidden1")) c.train.hidden1 = j["hidden1"].get<Eigen::Index>();
        if (j.contains("hidden2")) c.train.hidden2 = j["hidden2"].get<Eigen::Index>();
        if (j.contains("latent")) c.train.latent = j["latent"].get<Eigen::Index>();
        if (j.contains("eval_runs")) c.train.eval_runs = j["eval_runs"].get<int>();
        if (j.contains("kmeans_restarts")) c.train.kmeans_restarts = j["kmeans_restarts"].get<int>();
        if (j.contains("eval_every")) c.train.eval_every = j["eval_every"].get<int>();
        if (j.contains("cluster_on")) c.train.cluster_on = cluster_on_from(j["cluster_on"].get<std::string>());
        if (j.contains("checkpoint_every"))
            c.train.checkpoint_every = j["checkpoint_every"].get<int>();
        if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.explicit_mask_seed = mask_seed_given;
    if (!mask_seed_given) c.mask.seed = c.train.seed;
    c.validate();
    return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    json j = to_json();
    json parsed;
    const bool is_string = key == "dataset" || key == "out" || key == "variant" || key == "cluster_on";
    if (is_string) {
        parsed = value;
    } else {
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            throw ConfigError("bad value for '" + key + "': " + value);
        }
    }
    j[key] = parsed;
    *this = from_json(j);
}

void RunConfig::validate() const {
    train.validate();
    if (mask.missing_rate < 0.0 || mask.missing_rate >= 1.0)
        throw ConfigError("eta must lie in [0, 1)");
    if (lambda_grid.empty()) throw ConfigError("lambda_grid must not be empty");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + file.string() + ": " + e.what());
    }
    return RunConfig::from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << cfg.to_json().dump(2) << '\n';
}

}  // namespace mimvc
