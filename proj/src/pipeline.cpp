#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dataset.hpp"

namespace ekmid::pipeline {

namespace fs = std::filesystem;

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a + 0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (std::getline(iss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

ekm::EkmParams ekm_params_from(const config::RunConfig& cfg) {
    ekm::EkmParams p;
    p.bpf = static_cast<int>(cfg.get_int("bpf", 3));
    p.alpha_i = cfg.get_double("alpha_i", 0.2);
    p.alpha_e = cfg.get_double("alpha_e", 0.3);
    p.validate();
    return p;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw DataError("input directory not found: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<wfdb::EcgRecord> collect_records(const config::RunConfig& cfg) {
    std::string db = cfg.get("db");
    uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
    std::vector<wfdb::EcgRecord> records;

    if (db == "wfdb") {
        fs::path in = cfg.get("in");
        int channel = static_cast<int>(cfg.get_int("channel", 0));
        auto headers = sorted_files(in, ".hea");
        if (headers.empty()) throw DataError("no .hea files under " + in.string());

        if (cfg.has("pathology")) {
            auto allow = split_commas(cfg.get("pathology"));
            std::vector<wfdb::RecordMeta> metas;
            std::vector<fs::path> paths;
            for (const auto& h : headers) {
                std::ifstream f(h);
                std::stringstream ss;
                ss << f.rdbuf();
                auto m = wfdb::parse_header(ss.str());
                m.subject_id = wfdb::derive_subject_id(h, m.record_name);
                metas.push_back(std::move(m));
                paths.push_back(h);
            }
            auto kept = wfdb::filter_subjects_by_pathology(metas, allow);
            for (const auto& k : kept) {
                for (size_t i = 0; i < metas.size(); ++i) {
                    if (metas[i].record_name == k.record_name &&
                        metas[i].subject_id == k.subject_id) {
                        records.push_back(wfdb::load_channel(paths[i], channel));
                        break;
                    }
                }
            }
        } else {
            for (const auto& h : headers) records.push_back(wfdb::load_channel(h, channel));
        }
    } else if (db == "plaintext") {
        fs::path in = cfg.get("in");
        double fsr = cfg.get_double("fs", 0.0);
        if (fsr <= 0) throw ConfigError("plaintext input needs fs=<Hz>");
        int column = static_cast<int>(cfg.get_int("column", 0));
        std::vector<fs::path> files;
        for (const auto& ext : {".txt", ".csv", ".tsv", ".asc"})
            for (auto& p : sorted_files(in, ext)) files.push_back(p);
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DataError("no plain-text recordings under " + in.string());
        for (const auto& f : files) records.push_back(wfdb::load_plaintext(f, fsr, column));
    } else if (db == "synthetic") {
        int subjects = static_cast<int>(cfg.get_int("subjects", 5));
        double duration = cfg.get_double("duration", 600.0);
        double fsr = cfg.get_double("fs", 250.0);
        if (subjects < 2) throw ConfigError("synthetic database needs at least 2 subjects");
        for (int i = 0; i < subjects; ++i) {
            char name[16];
            std::snprintf(name, sizeof name, "s%02d", i);
            auto sp = dataset::default_synth_params(i);
            records.push_back(
                dataset::synth_ecg(sp, fsr, duration, mix(seed, static_cast<uint64_t>(i)), name)
                    .record);
        }
    } else {
        throw ConfigError("unknown db kind: " + db);
    }
    return records;
}

ekm::DatasetManifest cmd_build(const config::RunConfig& cfg) {
    auto params = ekm_params_from(cfg);
    ekm::GenerationConfig gen;
    gen.out_root = cfg.get("out");
    gen.max_ekms_per_subject = static_cast<size_t>(cfg.get_int("cap", 0));
    gen.raster_h = static_cast<int>(cfg.get_int("raster_h", 25));
    gen.raster_w = static_cast<int>(cfg.get_int("raster_w", 37));
    gen.train_fraction = cfg.get_double("train_frac", 0.8);
    gen.threads = static_cast<int>(cfg.get_int("threads", 0));
    if (gen.train_fraction <= 0 || gen.train_fraction >= 1)
        throw ConfigError("train_frac must lie in (0, 1)");

    bool created = !fs::exists(gen.out_root);
    try {
        auto records = collect_records(cfg);
        auto manifest = ekm::generate_ekm_dataset(records, params, gen);
        std::ofstream rc(gen.out_root / "run_config.txt");
        rc << cfg.serialize();
        for (const auto& [subject, st] : manifest.per_subject) {
            std::cerr << "subject " << subject << ": " << st.ekms << " EKMs";
            if (st.skipped_out_of_bounds || st.skipped_constant)
                std::cerr << " (skipped " << st.skipped_out_of_bounds << " out-of-bounds, "
                          << st.skipped_constant << " constant)";
            std::cerr << "\n";
            if (st.ekms == 0) std::cerr << "warning: subject " << subject << " yielded no EKMs\n";
        }
        return manifest;
    } catch (...) {
        // do not leave partial datasets behind
        if (created && fs::exists(gen.out_root)) fs::remove_all(gen.out_root);
        throw;
    }
}

nn::TrainHistory cmd_train(const config::RunConfig& cfg) {
    fs::path ds = cfg.get("dataset");
    fs::path model_out = cfg.get("model");
    auto manifest = ekm::read_manifest(ds);

    dataset::SplitConfig split_cfg;
    split_cfg.validation_fraction = cfg.get_double("val_frac", 0.1);
    split_cfg.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
    auto split = dataset::split_dataset(manifest, split_cfg);
    auto vocab = dataset::label_vocabulary(manifest);

    int batch = static_cast<int>(cfg.get_int("batch", 32));
    dataset::BatchLoader train_loader(manifest, split.train, vocab, batch);
    dataset::BatchLoader val_loader(manifest, split.validation, vocab, batch);

    nn::Network<float> net;
    net.cfg.input_h = train_loader.image_height();
    net.cfg.input_w = train_loader.image_width();
    net.cfg.classes = static_cast<int>(vocab.size());
    net.vocab = vocab;

    config::RunConfig embedded = cfg;
    fs::path ds_cfg = ds / "run_config.txt";
    if (fs::exists(ds_cfg)) {
        config::RunConfig dcfg;
        dcfg.load_file(ds_cfg);
        dcfg.merge(embedded);
        embedded = dcfg;
    }
    net.run_config = embedded.serialize();
    net.init(split_cfg.seed);

    nn::TrainConfig tc;
    tc.epochs = static_cast<int>(cfg.get_int("epochs", 100));
    tc.learning_rate = cfg.get_double("lr", 1e-3);
    tc.batch_size = batch;
    tc.seed = split_cfg.seed;
    tc.steps_per_epoch = static_cast<int>(cfg.get_int("steps_per_epoch", 0));

    auto hist = nn::train(net, train_loader, val_loader, tc);
    nn::save_model(net, model_out);

    fs::path hist_path = cfg.get_or("history", (model_out.parent_path() / "history.csv").string());
    std::ofstream hf(hist_path);
    hf << "epoch,train_loss,val_loss,val_acc\n";
    for (const auto& e : hist.epochs) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_loss,
                      e.val_accuracy);
        hf << buf;
    }
    return hist;
}

eval::ReportRow cmd_eval(const config::RunConfig& cfg) {
    fs::path ds = cfg.get("dataset");
    auto manifest = ekm::read_manifest(ds);
    auto net = nn::load_model(cfg.get("model"));

    std::vector<ekm::ManifestEntry> test_entries;
    int bpf = 0;
    for (const auto& e : manifest.entries) {
        bpf = e.bpf;
        if (e.split == "test") test_entries.push_back(e);
    }
    if (test_entries.empty()) throw DataError("dataset has no test split");

    dataset::BatchLoader loader(manifest, test_entries, net.vocab, 64);
    eval::ConfusionMatrix cm(net.cfg.classes);
    std::vector<float> all_probs;
    std::vector<int> all_labels;
    double loss_sum = 0.0;
    for (const auto& batch : loader.epoch_batches(0, 0)) {
        auto pred = nn::predict(net, batch);
        loss_sum += static_cast<double>(
                        nn::cce_loss(pred.probabilities, batch.labels, net.cfg.classes)) *
                    batch.batch;
        for (int b = 0; b < batch.batch; ++b) ++cm.at(batch.labels[b], pred.classes[b]);
        all_probs.insert(all_probs.end(), pred.probabilities.begin(), pred.probabilities.end());
        all_labels.insert(all_labels.end(), batch.labels.begin(), batch.labels.end());
    }

    eval::ReportRow row;
    row.database = cfg.get_or("database", ds.filename().string());
    row.bpf = bpf;
    row.epochs = static_cast<int>(cfg.get_int("epochs", 0));
    row.report = eval::metrics(cm, loss_sum / static_cast<double>(loader.size()));
    row.report.ir_at_k = eval::rank_k_rates(all_probs, all_labels, net.cfg.classes, 5);

    if (cfg.has("report")) eval::report_csv({row}, cfg.get("report"));
    if (cfg.has("recall_report")) {
        std::ofstream f(cfg.get("recall_report"));
        f << "class,subject_id,recall\n";
        for (size_t c = 0; c < row.report.class_recall.size(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", row.report.class_recall[c]);
            f << c << ',' << (c < net.vocab.size() ? net.vocab[c] : "?") << ',' << buf << '\n';
        }
    }
    return row;
}

std::vector<eval::ReportRow> cmd_reproduce(const config::RunConfig& cfg) {
    fs::path grid_path = cfg.get("grid");
    fs::path workdir = cfg.get_or("workdir", "reproduce_work");
    std::ifstream gf(grid_path);
    if (!gf) throw ConfigError("cannot open grid file: " + grid_path.string());

    std::vector<eval::ReportRow> rows;
    std::string line;
    size_t run = 0;
    while (std::getline(gf, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream iss(line);
        config::RunConfig overrides;
        std::string tok;
        bool any = false;
        while (iss >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ConfigError("grid entries must be key=value: " + tok);
            overrides.set(tok.substr(0, eq), tok.substr(eq + 1));
            any = true;
        }
        if (!any) continue;
        ++run;
        config::RunConfig rc = cfg;
        rc.merge(overrides);
        int bpf = static_cast<int>(rc.get_int("bpf", 3));
        fs::path ds_dir = workdir / ("ds_bpf" + std::to_string(bpf));
        rc.set("out", ds_dir.string());
        if (!fs::exists(ds_dir / "manifest.csv")) {
            std::cerr << "[reproduce] building dataset bpf=" << bpf << "\n";
            cmd_build(rc);
        }
        fs::path model = workdir / ("model_run" + std::to_string(run) + ".ekmn");
        rc.set("dataset", ds_dir.string());
        rc.set("model", model.string());
        rc.set("history", (workdir / ("history_run" + std::to_string(run) + ".csv")).string());
        std::cerr << "[reproduce] training run " << run << " (bpf=" << bpf
                  << ", epochs=" << rc.get_int("epochs", 100) << ")\n";
        cmd_train(rc);
        auto row = cmd_eval(rc);
        row.epochs = static_cast<int>(rc.get_int("epochs", 100));
        rows.push_back(row);
    }
    if (cfg.has("report")) eval::report_csv(rows, cfg.get("report"));
    return rows;
}

}  // namespace ekmid::pipeline
