// Command-line front end. Everything funnels through the C API so the CLI
// exercises the same surface an embedding application would.
#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "ekmid.h"

namespace {

struct ConfigGuard {
    ekmid_config* cfg = ekmid_config_create();
    ~ConfigGuard() { ekmid_config_free(cfg); }
};

int fail(ekmid_status st) {
    std::fprintf(stderr, "error: %s\n", ekmid_last_error());
    return static_cast<int>(st);
}

// Collect --key value flags into config entries; --config files load first so
// command-line flags win.
struct Options {
    std::string config_file;
    std::map<std::string, std::string> kv;

    void flag(CLI::App* cmd, const std::string& name, const std::string& key,
              const std::string& help) {
        cmd->add_option_function<std::string>(
            name, [this, key](const std::string& v) { kv[key] = v; }, help);
    }

    int apply(ekmid_config* cfg) const {
        if (!config_file.empty()) {
            auto st = ekmid_config_load_file(cfg, config_file.c_str());
            if (st != EKMID_OK) return fail(st);
        }
        for (const auto& [k, v] : kv) {
            auto st = ekmid_config_set(cfg, k.c_str(), v.c_str());
            if (st != EKMID_OK) return fail(st);
        }
        return 0;
    }
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_file, "key=value config file; flags override");
    opt.flag(cmd, "--seed", "seed", "RNG seed (default 0)");
}

void add_build_flags(CLI::App* cmd, Options& opt) {
    opt.flag(cmd, "--db", "db", "source kind: wfdb, plaintext, or synthetic");
    opt.flag(cmd, "--in", "in", "input directory of records");
    opt.flag(cmd, "--out", "out", "output dataset directory");
    opt.flag(cmd, "--channel", "channel", "signal channel index (default 0)");
    opt.flag(cmd, "--bpf", "bpf", "beats per frame (default 3)");
    opt.flag(cmd, "--alpha-i", "alpha_i", "pre-peak window fraction (default 0.2)");
    opt.flag(cmd, "--alpha-e", "alpha_e", "post-peak window fraction (default 0.3)");
    opt.flag(cmd, "--cap", "cap", "max frames per subject (0 = unlimited)");
    opt.flag(cmd, "--train-frac", "train_frac", "chronological train fraction (default 0.8)");
    opt.flag(cmd, "--pathology", "pathology", "comma list of diagnosis substrings to keep");
    opt.flag(cmd, "--fs", "fs", "sampling rate for plaintext/synthetic input");
    opt.flag(cmd, "--subjects", "subjects", "synthetic subject count");
    opt.flag(cmd, "--duration", "duration", "synthetic record length in seconds");
    opt.flag(cmd, "--threads", "threads", "worker threads for the build");
}

void add_train_flags(CLI::App* cmd, Options& opt) {
    opt.flag(cmd, "--dataset", "dataset", "dataset directory from the build step");
    opt.flag(cmd, "--model", "model", "output model path");
    opt.flag(cmd, "--epochs", "epochs", "training epochs (default 100)");
    opt.flag(cmd, "--batch", "batch", "batch size (default 32)");
    opt.flag(cmd, "--lr", "lr", "Adam learning rate (default 1e-3)");
    opt.flag(cmd, "--val-frac", "val_frac", "validation fraction of the train pool");
    opt.flag(cmd, "--steps-per-epoch", "steps_per_epoch", "cap on batches per epoch (0 = all)");
    opt.flag(cmd, "--history", "history", "per-epoch loss/accuracy CSV path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EKM-based ECG biometric identification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ekmid_version());

    Options build_opt, train_opt, eval_opt, repro_opt;

    auto* build = app.add_subcommand("build", "generate an EKM image dataset from ECG records");
    add_common(build, build_opt);
    add_build_flags(build, build_opt);

    auto* train = app.add_subcommand("train", "train the identification CNN");
    add_common(train, train_opt);
    add_train_flags(train, train_opt);

    auto* eval = app.add_subcommand("eval", "evaluate a model on the test split");
    add_common(eval, eval_opt);
    eval_opt.flag(eval, "--dataset", "dataset", "dataset directory");
    eval_opt.flag(eval, "--model", "model", "trained model path");
    eval_opt.flag(eval, "--report", "report", "metrics CSV output path");
    eval_opt.flag(eval, "--recall-report", "recall_report", "rank-k identification CSV path");

    auto* repro = app.add_subcommand("reproduce", "run a parameter grid end to end");
    add_common(repro, repro_opt);
    add_build_flags(repro, repro_opt);
    add_train_flags(repro, repro_opt);
    repro_opt.flag(repro, "--grid", "grid", "file of per-run key=value overrides");
    repro_opt.flag(repro, "--workdir", "workdir", "scratch directory for datasets and models");
    repro_opt.flag(repro, "--report", "report", "combined metrics CSV path");

    CLI11_PARSE(app, argc, argv);

    ConfigGuard guard;
    if (!guard.cfg) {
        std::fprintf(stderr, "error: out of memory\n");
        return static_cast<int>(EKMID_ERR_INTERNAL);
    }

    if (build->parsed()) {
        if (int rc = build_opt.apply(guard.cfg)) return rc;
        auto st = ekmid_build(guard.cfg);
        return st == EKMID_OK ? 0 : fail(st);
    }
    if (train->parsed()) {
        if (int rc = train_opt.apply(guard.cfg)) return rc;
        auto st = ekmid_train(guard.cfg);
        return st == EKMID_OK ? 0 : fail(st);
    }
    if (eval->parsed()) {
        if (int rc = eval_opt.apply(guard.cfg)) return rc;
        char* table = nullptr;
        auto st = ekmid_evaluate(guard.cfg, &table);
        if (st != EKMID_OK) return fail(st);
        std::fputs(table, stdout);
        ekmid_string_free(table);
        return 0;
    }
    if (repro->parsed()) {
        if (int rc = repro_opt.apply(guard.cfg)) return rc;
        auto st = ekmid_reproduce(guard.cfg);
        return st == EKMID_OK ? 0 : fail(st);
    }
    return 0;
}
