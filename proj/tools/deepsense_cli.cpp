#include "deepsense/errors.hpp"
#include "deepsense/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace deepsense;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool full_scale = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config file")->required();
    cmd->add_option("--out", c.out, "output directory (overrides the config's out key)");
    cmd->add_option("--seed", c.seed, "master seed, overrides the config");
    cmd->add_option("--threads", c.threads, "worker threads (default: DEEPSENSE_THREADS or 1)");
    cmd->add_flag("--full-scale", c.full_scale, "full-size datasets, 10 repetitions and a 0:50:1000 schedule");
}

std::size_t resolve_threads(const Common& c) {
    if (c.threads) {
        if (*c.threads < 1) throw ConfigError("--threads must be >= 1");
        return *c.threads;
    }
    if (const char* env = std::getenv("DEEPSENSE_THREADS"); env && *env) {
        try {
            std::size_t used = 0;
            const long v = std::stol(env, &used);
            if (used != std::string(env).size() || v < 1) throw std::invalid_argument("range");
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ConfigError(std::string("DEEPSENSE_THREADS must be a positive integer, got '") + env + "'");
        }
    }
    return 1;
}

harness::ExperimentConfig resolve_config(const Common& c) {
    auto cfg = harness::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.full_scale) cfg.apply_full_scale();
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

void print_report(const harness::MetricReport& r) {
    std::cout << "config_hash " << r.config_hash << " seed " << r.seed << "\n";
    for (const auto& a : r.arms) std::cout << "  " << a.name << "  auc " << a.auc << "  pd@pfa " << a.pd_at_pfa << "\n";
    for (const auto& [arm, v] : r.auc_over_examples) std::cout << "  " << arm << "  auc_over_examples " << v << "\n";
    if (r.sweep) {
        std::cout << "  n_examples  finetune  scratch  ed\n";
        for (std::size_t i = 0; i < r.sweep->finetune.size(); ++i)
            std::cout << "  " << r.sweep->finetune[i].n_examples << "  " << r.sweep->finetune[i].mean_pd << "  "
                      << r.sweep->scratch[i].mean_pd << "  " << r.sweep->energy_pd << "\n";
    }
    for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
    for (const auto& f : r.files) std::cout << "wrote " << f.string() << "\n";
}

void print_files(const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectrum-sensing workbench: simulate, train, evaluate and transfer deep detectors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(harness::kToolVersion));

    Common common;
    std::string data, model;
    std::vector<std::string> inspect_paths;

    auto* gen = app.add_subcommand("gen", "write train/test dataset files for the configured scenarios");
    add_common(gen, common);
    auto* train = app.add_subcommand("train", "train the CNN on the source scenario");
    add_common(train, common);
    train->add_option("--data", data, "train on this dataset file instead of generating one")->check(CLI::ExistingFile);
    auto* eval = app.add_subcommand("eval", "score a checkpoint on the evaluation split");
    add_common(eval, common);
    eval->add_option("--model", model, "CNN checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data, "evaluate on this dataset file instead of generating one")->check(CLI::ExistingFile);

    struct Experiment {
        const char* name;
        const char* help;
        harness::ExperimentKind kind;
        CLI::App* cmd = nullptr;
    };
    Experiment experiments[] = {
        {"roc-compare", "CNN vs energy detector vs LLR on one scenario", harness::ExperimentKind::roc_compare},
        {"transfer-unsup", "same-domain, cross-domain, TCA and ED arms on the target", harness::ExperimentKind::transfer_unsup},
        {"finetune-sweep", "fine-tune vs scratch over a labeled-example schedule", harness::ExperimentKind::finetune_sweep},
    };
    for (auto& e : experiments) {
        e.cmd = app.add_subcommand(e.name, e.help);
        add_common(e.cmd, common);
    }
    auto* inspect = app.add_subcommand("inspect", "print the header of dataset and checkpoint files");
    inspect->add_option("paths", inspect_paths, "files to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (inspect->parsed()) {
            for (const auto& p : inspect_paths) std::cout << harness::inspect_file(p);
            return 0;
        }
        const auto cfg = resolve_config(common);
        const auto threads = resolve_threads(common);
        if (gen->parsed()) {
            print_files(harness::run_gen(cfg, threads));
        } else if (train->parsed()) {
            print_files(harness::run_train(cfg, data.empty() ? std::nullopt : std::optional<std::filesystem::path>(data),
                                           threads));
        } else if (eval->parsed()) {
            print_files(harness::run_eval(cfg, model,
                                          data.empty() ? std::nullopt : std::optional<std::filesystem::path>(data), threads));
        } else {
            for (const auto& e : experiments) {
                if (!e.cmd->parsed()) continue;
                if (cfg.kind != e.kind)
                    throw ConfigError(std::string("config kind is ") + std::string(harness::to_string(cfg.kind)) +
                                      ", subcommand " + e.name + " needs " + std::string(harness::to_string(e.kind)));
                print_report(harness::run_experiment(cfg, threads));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
