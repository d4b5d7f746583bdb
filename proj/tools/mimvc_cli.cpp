// mimvc: command-line front end.
//
//   mimvc mask   --data DIR --eta 0.3 --seed 0 --out DIR
//   mimvc train  --data DIR --out RUN [--config FILE] [--lambda ...]
//   mimvc eval   --run RUN [--data DIR]
//   mimvc export --run RUN [--data DIR]
//   mimvc ablate --data DIR --out DIR
//   mimvc sweep  --data DIR --out DIR
//   mimvc synth  --out DIR
//
// Exit codes: 0 ok, 2 configuration, 3 training, 4 data or labels.

#include "mimvc/config.hpp"
#include "mimvc/error.hpp"
#include "mimvc/model_io.hpp"
#include "mimvc/synthetic.hpp"
#include "mimvc/training.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

using namespace mimvc;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kGeneric = 1, kConfig = 2, kTraining = 3, kData = 4 };

// Flags shared by every subcommand that builds a RunConfig. Values stay as
// text and are applied through RunConfig::set after the config file.
struct Overrides {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::vector<std::string> assignments;  // --set key=value
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_file, "JSON run configuration");
    const std::vector<std::pair<std::string, std::string>> flags{
        {"--data", "dataset"},       {"--out", "out"},
        {"--lambda", "lambda"},      {"--tau", "tau"},
        {"--eta", "eta"},            {"--k", "k"},
        {"--epochs", "epochs"},      {"--lr", "lr"},
        {"--seed", "seed"},          {"--variant", "variant"},
        {"--mask-seed", "mask_seed"}, {"--eval-every", "eval_every"},
        {"--cluster-on", "cluster_on"}};
    for (const auto& [flag, key] : flags)
        cmd->add_option_function<std::string>(
            flag, [&o, key = key](const std::string& v) { o.values[key] = v; },
            "sets config key '" + key + "'");
    cmd->add_option("--set", o.assignments, "any config key as key=value")->take_all();
}

RunConfig build_config(const Overrides& o) {
    RunConfig cfg = o.config_file.empty() ? RunConfig{} : load_run_config(o.config_file);
    for (const auto& a : o.assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
        cfg.set(a.substr(0, eq), a.substr(eq + 1));
    }
    for (const auto& [key, value] : o.values) cfg.set(key, value);
    return cfg;
}

int workers_from_env() {
    const char* w = std::getenv("MIMVC_WORKERS");
    if (!w || !*w) return 1;
    try {
        const int n = std::stoi(w);
        if (n < 1) throw std::invalid_argument("");
        return n;
    } catch (const std::exception&) {
        throw ConfigError(std::string("MIMVC_WORKERS must be a positive integer, got '") + w + "'");
    }
}

Mask make_mask(Eigen::Index n, Eigen::Index v, const MaskSpec& spec) {
    try {
        return generate_mask(n, v, spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// Dataset as seen by training: the stored mask, or a fresh one when eta > 0.
MultiViewDataset load_for_run(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset given (--data or \"dataset\")");
    auto data = load_dataset(cfg.dataset);
    if (cfg.mask.missing_rate > 0.0) {
        if (!is_complete(data.mask))
            throw DataError("dataset already has missing views; use eta = 0 or a complete dataset");
        data.mask = make_mask(data.num_samples(), data.num_views(), cfg.mask);
        data.validate();
    }
    return data;
}

fs::path require_out(const RunConfig& cfg) {
    if (cfg.out.empty()) throw ConfigError("no output directory given (--out or \"out\")");
    fs::create_directories(cfg.out);
    return cfg.out;
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    body(out);
}

void print_metrics(const MetricsRecord& m) {
    std::printf("acc=%.4f nmi=%.4f ari=%.4f fscore=%.4f (variant=%s eta=%.2f lambda=%g seed=%llu "
                "epoch=%d)\n",
                m.acc, m.nmi, m.ari, m.fscore, m.variant.c_str(), m.eta, m.lambda,
                static_cast<unsigned long long>(m.seed), m.epoch);
}

// ---------------------------------------------------------------------------

int cmd_mask(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset given (--data)");
    const auto out = require_out(cfg);
    auto data = load_dataset(cfg.dataset);
    if (!is_complete(data.mask)) throw DataError("input dataset already has missing views");
    data.mask = make_mask(data.num_samples(), data.num_views(), cfg.mask);
    save_dataset(data, out);
    const auto zeros = (data.mask.array() == 0).count();
    std::printf("masked %lld of %lld cells (eta=%.4f) -> %s\n", static_cast<long long>(zeros),
                static_cast<long long>(data.mask.size()),
                static_cast<double>(zeros) / static_cast<double>(data.mask.size()),
                out.string().c_str());
    return kOk;
}

int cmd_train(RunConfig cfg) {
    const auto out = require_out(cfg);
    const auto data = load_for_run(cfg);
    cfg.train.checkpoint_path = out / "model.bin";
    save_run_config(cfg, out / "config.json");
    write_mask_csv(data.mask, out / "mask.csv");

    const auto prep = prepare(data, cfg.train);
    const auto result = train(prep, cfg.train);
    save_model_state(result.state, out / "model.bin");
    write_file(out / "history.csv", [&](std::ostream& o) { result.history.write_csv(o); });
    if (result.history.has_metrics)
        write_file(out / "plot.csv", [&](std::ostream& o) { result.history.write_plot_csv(o); });

    const auto& last = result.history.epochs.back().loss;
    std::printf("trained %d epochs: loss=%.6g rec=%.6g contrastive=%.6g\n", result.state.epoch,
                last.total, last.reconstruction, last.contrastive);
    if (data.labels) {
        auto m = evaluate_model(result.state.model, prep, cfg.train);
        m.epoch = result.state.epoch;
        write_file(out / "metrics.csv", [&](std::ostream& o) {
            o << kMetricsHeader << '\n';
            write_metrics_row(o, m);
        });
        print_metrics(m);
    }
    return kOk;
}

struct LoadedRun {
    RunConfig cfg;
    ModelState state;
    PreparedData prep;
};

LoadedRun load_run(const fs::path& run, const std::string& data_override) {
    if (run.empty()) throw ConfigError("no run directory given (--run)");
    LoadedRun r;
    r.cfg = load_run_config(run / "config.json");
    if (!data_override.empty()) r.cfg.dataset = data_override;
    auto data = load_for_run(r.cfg);
    if (fs::exists(run / "mask.csv")) {
        data.mask = read_mask_csv(run / "mask.csv");
        data.validate();
    }
    r.state = load_model_state(run / "model.bin");
    r.prep = prepare(data, r.cfg.train);
    return r;
}

int cmd_eval(const fs::path& run, const std::string& data_override) {
    const auto r = load_run(run, data_override);
    if (!r.prep.data.labels) throw DataError("evaluation needs labels.csv in the dataset");
    auto m = evaluate_model(r.state.model, r.prep, r.cfg.train);
    m.epoch = r.state.epoch;
    write_file(run / "eval.csv", [&](std::ostream& o) {
        o << kMetricsHeader << '\n';
        write_metrics_row(o, m);
    });
    std::cout << kMetricsHeader << '\n';
    write_metrics_row(std::cout, m);
    return kOk;
}

int cmd_export(const fs::path& run, const std::string& data_override) {
    const auto r = load_run(run, data_override);
    const auto vs = settings_for(r.cfg.train);
    const Matrix f = embed(r.state.model, r.prep, vs.masked_features);
    write_file(run / "embeddings.csv", [&](std::ostream& o) {
        for (Eigen::Index j = 0; j < f.cols(); ++j) o << 'f' << j << ',';
        o << "label\n";
        char buf[32];
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            for (Eigen::Index j = 0; j < f.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", f(i, j));
                o << buf << ',';
            }
            if (r.prep.data.labels) o << (*r.prep.data.labels)[static_cast<std::size_t>(i)];
            o << '\n';
        }
    });
    std::printf("wrote %lld x %lld embedding to %s\n", static_cast<long long>(f.rows()),
                static_cast<long long>(f.cols()), (run / "embeddings.csv").string().c_str());
    return kOk;
}

void write_table(const RunTable& t, const fs::path& out, const std::string& stem) {
    write_file(out / (stem + ".csv"), [&](std::ostream& o) {
        o << kMetricsHeader << '\n';
        for (const auto& c : t.cells) write_metrics_row(o, c.metrics);
    });
    write_file(out / (stem + "_summary.csv"), [&](std::ostream& o) {
        o << kMetricsHeader << '\n';
        for (const auto& m : t.summary) write_metrics_row(o, m);
    });
    for (const auto& c : t.cells) {
        char name[96];
        std::snprintf(name, sizeof name, "%s_lambda%g_seed%llu", to_string(c.config.variant).c_str(),
                      c.config.lambda, static_cast<unsigned long long>(c.config.seed));
        const auto dir = out / "cells" / name;
        fs::create_directories(dir);
        write_file(dir / "history.csv", [&](std::ostream& o) { c.history.write_csv(o); });
        write_file(dir / "plot.csv", [&](std::ostream& o) { c.history.write_plot_csv(o); });
    }
    for (const auto& m : t.summary) print_metrics(m);
}

int cmd_ablate(const RunConfig& cfg) {
    const auto out = require_out(cfg);
    const auto data = load_for_run(cfg);
    if (!data.labels) throw DataError("ablation needs labels.csv in the dataset");
    save_run_config(cfg, out / "config.json");
    write_table(run_ablation(data, cfg.train, cfg.seeds, workers_from_env()), out, "ablation");
    return kOk;
}

int cmd_sweep(const RunConfig& cfg) {
    const auto out = require_out(cfg);
    const auto data = load_for_run(cfg);
    if (!data.labels) throw DataError("sweep needs labels.csv in the dataset");
    save_run_config(cfg, out / "config.json");
    write_table(run_sweep(data, cfg.train, cfg.lambda_grid, cfg.seeds, workers_from_env()), out,
                "sweep");
    return kOk;
}

int cmd_synth(const fs::path& out, const BlobSpec& spec) {
    if (out.empty()) throw ConfigError("no output directory given (--out)");
    save_dataset(make_gaussian_blobs(spec), out);
    std::printf("wrote %lld-sample, %zu-view blobs to %s\n", static_cast<long long>(spec.samples),
                spec.dims.size(), out.string().c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mask-informed incomplete multi-view clustering"};
    app.require_subcommand(1);

    Overrides mask_o, train_o, ablate_o, sweep_o;
    auto* mask = app.add_subcommand("mask", "inject missing views into a complete dataset");
    add_config_flags(mask, mask_o);
    auto* trn = app.add_subcommand("train", "train one model and write a run directory");
    add_config_flags(trn, train_o);
    auto* abl = app.add_subcommand("ablate", "train all seven variants for every seed");
    add_config_flags(abl, ablate_o);
    auto* swp = app.add_subcommand("sweep", "train every lambda of the grid for every seed");
    add_config_flags(swp, sweep_o);

    std::string eval_run, eval_data, export_run, export_data;
    auto* ev = app.add_subcommand("eval", "score a trained run");
    ev->add_option("--run", eval_run, "run directory written by train")->required();
    ev->add_option("--data", eval_data, "dataset directory (default: the run's snapshot)");
    auto* ex = app.add_subcommand("export", "write the fused representation as CSV");
    ex->add_option("--run", export_run, "run directory written by train")->required();
    ex->add_option("--data", export_data, "dataset directory (default: the run's snapshot)");

    BlobSpec blobs;
    std::string synth_out;
    auto* syn = app.add_subcommand("synth", "write a multi-view Gaussian blob dataset");
    syn->add_option("--out", synth_out, "output directory")->required();
    syn->add_option("--samples", blobs.samples, "number of samples");
    syn->add_option("--clusters", blobs.clusters, "number of classes");
    syn->add_option("--dims", blobs.dims, "per-view dimensions")->delimiter(',');
    syn->add_option("--sigma", blobs.sigma, "noise standard deviation");
    syn->add_option("--seed", blobs.seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*mask) return cmd_mask(build_config(mask_o));
        if (*trn) return cmd_train(build_config(train_o));
        if (*abl) return cmd_ablate(build_config(ablate_o));
        if (*swp) return cmd_sweep(build_config(sweep_o));
        if (*ev) return cmd_eval(eval_run, eval_data);
        if (*ex) return cmd_export(export_run, export_data);
        if (*syn) return cmd_synth(synth_out, blobs);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return kTraining;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kGeneric;
    }
    return kGeneric;
}
