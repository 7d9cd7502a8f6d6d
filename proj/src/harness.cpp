#include "deepsense/harness.hpp"

#include "deepsense/binary_io.hpp"
#include "deepsense/errors.hpp"

#include <algorithm>

namespace deepsense::harness {

namespace {

using sim::Dataset;
using std::filesystem::path;

Dataset make_split(const ExperimentConfig& cfg, const sim::ScenarioConfig& scenario, std::string_view split,
                   std::size_t n, std::size_t threads) {
    auto s = scenario;
    s.seed = dataset_seed(cfg.seed, split, scenario);
    return sim::build_dataset(s, n, cfg.occupancy, threads);
}

net::NetworkWeights<float> train_cnn(const ExperimentConfig& cfg, const Dataset& data,
                                     const sim::ScenarioConfig& scenario) {
    auto t = cfg.train;
    t.seed = training_seed(cfg.seed, scenario);
    return net::train<float>(data, t, net::NetworkSpec::standard(scenario.n_samples)).weights;
}

std::vector<double> cnn_logits(const Dataset& d, const net::NetworkWeights<float>& w, std::size_t threads) {
    const auto scores = net::predict_scores(d, w, threads);
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& s : scores) out.push_back(s.logit);
    return out;
}

NamedCurve make_arm(std::string name, const std::vector<double>& scores, const Dataset& test, double pfa_star) {
    const auto split = detect::split_by_label(scores, test);
    NamedCurve c;
    c.name = std::move(name);
    c.roc = detect::roc_from_scores(split.first, split.second);
    c.auc = detect::roc_auc(c.roc);
    c.pd_at_pfa = pd_at_pfa(c.roc, pfa_star);
    return c;
}

MetricReport start_report(const ExperimentConfig& cfg, const Dataset& test) {
    MetricReport r;
    r.kind = cfg.kind;
    r.config_hash = cfg.hash();
    r.seed = cfg.seed;
    r.test_examples = test.size();
    r.test_checksum = io::to_hex(io::fnv1a64(sim::encode_dataset(test)));
    return r;
}

class OutputDir {
public:
    OutputDir(const ExperimentConfig& cfg) : dir_(cfg.output_dir) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }

    void write(const std::string& name, std::string_view contents) {
        if (!enabled()) return;
        io::write_file_atomic(dir_ / name, contents);
        files_.emplace_back(name, io::to_hex(io::fnv1a64(contents)));
    }

    template <typename Fn>
    void write_with(const std::string& name, Fn&& save) {
        if (!enabled()) return;
        save(dir_ / name);
        files_.emplace_back(name, io::to_hex(io::fnv1a64(io::read_file(dir_ / name))));
    }

    // Manifest goes last so it lists every file written before it.
    void finish(MetricReport& r) {
        if (!enabled()) return;
        std::string m;
        m += std::string(kToolVersion) + "\n";
        m += "kind " + std::string(to_string(r.kind)) + "\n";
        m += "config_hash " + r.config_hash + "\n";
        m += "seed " + std::to_string(r.seed) + "\n";
        m += "test_examples " + std::to_string(r.test_examples) + "\n";
        m += "test_checksum " + r.test_checksum + "\n";
        for (const auto& n : r.notes) m += "note " + n + "\n";
        for (const auto& [name, hash] : files_) m += "file " + name + " " + hash + "\n";
        io::write_file_atomic(dir_ / "manifest.txt", m);
        for (const auto& f : files_) r.files.push_back(dir_ / f.first);
        r.files.push_back(dir_ / "manifest.txt");
    }

    const path& dir() const { return dir_; }

private:
    path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string summary_csv(const ExperimentConfig& cfg, const MetricReport& r) {
    std::string s = csv_preamble(cfg) + "arm,auc,pd_at_pfa,pfa_star\n";
    for (const auto& a : r.arms)
        s += a.name + "," + io::format_real(a.auc) + "," + io::format_real(a.pd_at_pfa) + "," +
             io::format_real(cfg.pfa_star) + "\n";
    return s;
}

void write_arms(OutputDir& out, const ExperimentConfig& cfg, const MetricReport& r) {
    for (const auto& a : r.arms) out.write("roc_" + a.name + ".csv", roc_csv(cfg, a.roc));
    out.write("summary.csv", summary_csv(cfg, r));
}

const sim::ScenarioConfig& eval_scenario(const ExperimentConfig& cfg) { return cfg.target ? *cfg.target : cfg.source; }

}  // namespace

double auc_over_examples(const std::vector<std::pair<double, double>>& curve, double lo, double hi) {
    if (curve.empty()) throw ArgumentError("auc_over_examples: empty curve");
    if (!(lo < hi)) throw ArgumentError("auc_over_examples: need lo < hi");
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].first < curve[i - 1].first) throw ArgumentError("auc_over_examples: curve not sorted by n");
    auto value = [&](double n) {
        if (n <= curve.front().first) return curve.front().second;
        if (n >= curve.back().first) return curve.back().second;
        const auto hi_it = std::upper_bound(curve.begin(), curve.end(), n,
                                            [](double v, const std::pair<double, double>& p) { return v < p.first; });
        const auto& b = *hi_it;
        const auto& a = *(hi_it - 1);
        if (b.first == a.first) return b.second;
        return a.second + (n - a.first) / (b.first - a.first) * (b.second - a.second);
    };
    std::vector<double> xs{lo, hi};
    for (const auto& p : curve)
        if (p.first > lo && p.first < hi) xs.push_back(p.first);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double area = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) area += (xs[i] - xs[i - 1]) * 0.5 * (value(xs[i]) + value(xs[i - 1]));
    return area;
}

bool covers_range(const std::vector<std::pair<double, double>>& curve, double lo, double hi) {
    return !curve.empty() && curve.front().first <= lo && curve.back().first >= hi;
}

const NamedCurve& MetricReport::arm(std::string_view name) const {
    for (const auto& a : arms)
        if (a.name == name) return a;
    throw ArgumentError("report has no arm named " + std::string(name));
}

std::string csv_preamble(const ExperimentConfig& cfg) {
    return "# deepsense v1 config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

std::string roc_csv(const ExperimentConfig& cfg, const detect::RocCurve& roc) {
    std::string s = csv_preamble(cfg) + "threshold,pfa,pd\n";
    for (std::size_t i = 0; i < roc.points.size(); ++i)
        s += io::format_real(roc.thresholds[i]) + "," + io::format_real(roc.points[i].pfa) + "," +
             io::format_real(roc.points[i].pd) + "\n";
    return s;
}

MetricReport run_roc_compare(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    if (cfg.kind != ExperimentKind::roc_compare) throw ConfigError("run_roc_compare needs kind = roc_compare");
    OutputDir out(cfg);
    const auto& scenario = cfg.source;
    // Resolve the LLR covariances first so an unsupported scenario fails before training.
    std::optional<sim::CovariancePair> cov;
    if (cfg.llr == LlrMode::analytic) cov = sim::analytic_covariances(scenario);
    const auto train = make_split(cfg, scenario, "train", cfg.train_size, threads);
    const auto test = make_split(cfg, scenario, "test", cfg.test_size, threads);
    if (cfg.llr == LlrMode::estimated) cov = detect::estimate_covariance_pair(train);

    auto report = start_report(cfg, test);
    const auto weights = train_cnn(cfg, train, scenario);
    report.arms.push_back(make_arm("cnn", cnn_logits(test, weights, threads), test, cfg.pfa_star));
    report.arms.push_back(make_arm("ed", detect::energy_scores(test), test, cfg.pfa_star));
    if (cov) {
        const detect::LlrDetector llr(*cov);
        report.arms.push_back(make_arm("llr", detect::llr_scores(test, llr), test, cfg.pfa_star));
        report.notes.push_back(std::string("llr covariances ") +
                               (cfg.llr == LlrMode::analytic ? "analytic" : "estimated from the train split"));
    }
    report.notes.push_back("all arms scored on the same test split");

    out.write_with("model.dsnw", [&](const path& p) { net::save_weights(weights, p); });
    write_arms(out, cfg, report);
    out.finish(report);
    return report;
}

MetricReport run_transfer_unsup(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    if (cfg.kind != ExperimentKind::transfer_unsup) throw ConfigError("run_transfer_unsup needs kind = transfer_unsup");
    OutputDir out(cfg);
    const auto& src = cfg.source;
    const auto& tar = *cfg.target;
    const auto src_train = make_split(cfg, src, "train", cfg.train_size, threads);
    const auto tar_train = make_split(cfg, tar, "train", cfg.train_size, threads);
    const auto test = make_split(cfg, tar, "test", cfg.test_size, threads);
    auto report = start_report(cfg, test);

    const auto same = train_cnn(cfg, tar_train, tar);
    const auto cross = train_cnn(cfg, src_train, src);
    report.arms.push_back(make_arm("same_domain", cnn_logits(test, same, threads), test, cfg.pfa_star));
    report.arms.push_back(make_arm("cross_domain", cnn_logits(test, cross, threads), test, cfg.pfa_star));

    // Target labels are never used by the TCA arm.
    transfer::TcaOptions opts;
    opts.kernel = cfg.tca.kernel == transfer::Kernel::Kind::linear ? transfer::Kernel::linear()
                                                                   : transfer::Kernel::rbf(cfg.tca.gamma > 0 ? cfg.tca.gamma : 1.0);
    opts.median_gamma = cfg.tca.kernel == transfer::Kernel::Kind::rbf && cfg.tca.gamma == 0.0;
    opts.m = cfg.tca.m;
    opts.mu = cfg.tca.mu;
    opts.max_points = cfg.tca.max_points;
    opts.seed = derive_seed(cfg.seed, {0x7CA});
    const auto xs = transfer::to_columns(src_train, 0, std::min(cfg.tca.subsample, src_train.size()));
    const auto xt = transfer::to_columns(tar_train, 0, std::min(cfg.tca.subsample, tar_train.size()));
    auto model = transfer::tca_fit(xs, xt, opts);
    transfer::train_latent_classifier(model, src_train);
    report.arms.push_back(make_arm("tca", transfer::tca_logits(model, test, threads), test, cfg.pfa_star));
    report.arms.push_back(make_arm("ed", detect::energy_scores(test), test, cfg.pfa_star));

    const auto zs = transfer::tca_transform(model, xs), zt = transfer::tca_transform(model, xt);
    report.notes.push_back("tca fit on " + std::to_string(xs.cols()) + " source + " + std::to_string(xt.cols()) +
                           " target points; other points mapped through the landmark kernel");
    report.notes.push_back("tca gamma " + io::format_real(model.kernel.gamma));
    report.notes.push_back("input mmd " + io::format_real(transfer::mmd_distance(xs, xt, model.kernel)));
    report.notes.push_back("latent mmd " + io::format_real(transfer::mmd_distance(zs, zt, transfer::Kernel::linear())));

    out.write_with("tca.dstc", [&](const path& p) { transfer::save_tca(model, p); });
    write_arms(out, cfg, report);
    out.finish(report);
    return report;
}

MetricReport run_finetune_sweep(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    if (cfg.kind != ExperimentKind::finetune_sweep) throw ConfigError("run_finetune_sweep needs kind = finetune_sweep");
    OutputDir out(cfg);
    const auto& src = cfg.source;
    const auto& tar = *cfg.target;
    const auto src_train = make_split(cfg, src, "train", cfg.train_size, threads);
    const auto base = train_cnn(cfg, src_train, src);

    transfer::FinetunePlan plan;
    plan.schedule = cfg.schedule;
    plan.repetitions = cfg.repetitions;
    plan.finetune_cfg = cfg.finetune;
    plan.scratch_cfg = cfg.train;
    plan.pfa = cfg.pfa_star;
    plan.test_size = cfg.test_size;
    plan.seed = derive_seed(cfg.seed, {0x5EE9});
    plan.threads = threads;
    if (out.enabled()) plan.base_checkpoint = out.dir() / "pretrained.dsnw";
    auto sweep = transfer::run_finetune_sweep(plan, base, tar);

    auto test_cfg = tar;
    test_cfg.seed = derive_seed(plan.seed, {0x7E57});
    MetricReport report;
    report.kind = cfg.kind;
    report.config_hash = cfg.hash();
    report.seed = cfg.seed;
    report.test_examples = cfg.test_size;
    report.test_checksum =
        io::to_hex(io::fnv1a64(sim::encode_dataset(sim::build_dataset(test_cfg, cfg.test_size, 0.5, threads))));

    std::vector<std::pair<double, double>> ft, sc, ed;
    for (const auto& p : sweep.finetune) ft.emplace_back(static_cast<double>(p.n_examples), p.mean_pd);
    for (const auto& p : sweep.scratch) sc.emplace_back(static_cast<double>(p.n_examples), p.mean_pd);
    for (const auto& p : sweep.finetune) ed.emplace_back(static_cast<double>(p.n_examples), sweep.energy_pd);
    report.auc_over_examples = {{"finetune", auc_over_examples(ft, cfg.auc_lo, cfg.auc_hi)},
                                {"scratch", auc_over_examples(sc, cfg.auc_lo, cfg.auc_hi)},
                                {"ed", auc_over_examples(ed, cfg.auc_lo, cfg.auc_hi)}};
    const bool extended = !covers_range(ft, cfg.auc_lo, cfg.auc_hi);
    if (extended) report.notes.push_back("schedule does not span auc_range; end values held flat");
    report.notes.push_back("pd evaluated at pfa " + io::format_real(cfg.pfa_star) + " on a held-out target split");

    out.write_with("pretrained.dsnw", [&](const path& p) { net::save_weights(base, p); });
    out.write("sweep.csv", csv_preamble(cfg) + "n_examples,arm,rep,pd,pfa,seed\n" + transfer::sweep_csv_rows(sweep));
    std::string curve = csv_preamble(cfg) + "n_examples,arm,mean_pd,std_pd\n";
    auto add_rows = [&](const std::vector<transfer::SweepPoint>& pts, const char* arm) {
        for (const auto& p : pts)
            curve += std::to_string(p.n_examples) + "," + arm + "," + io::format_real(p.mean_pd) + "," +
                     io::format_real(p.std_pd) + "\n";
    };
    add_rows(sweep.finetune, "finetune");
    add_rows(sweep.scratch, "scratch");
    for (const auto& p : sweep.finetune)
        curve += std::to_string(p.n_examples) + ",ed," + io::format_real(sweep.energy_pd) + ",0\n";
    out.write("curve.csv", curve);
    std::string auc = csv_preamble(cfg) + "arm,auc_over_examples,lo,hi,extended\n";
    for (const auto& [arm, v] : report.auc_over_examples)
        auc += arm + "," + io::format_real(v) + "," + io::format_real(cfg.auc_lo) + "," + io::format_real(cfg.auc_hi) +
               "," + (extended ? "1" : "0") + "\n";
    out.write("auc.csv", auc);
    report.sweep = std::move(sweep);
    out.finish(report);
    return report;
}

MetricReport run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
    switch (cfg.kind) {
        case ExperimentKind::roc_compare: return run_roc_compare(cfg, threads);
        case ExperimentKind::transfer_unsup: return run_transfer_unsup(cfg, threads);
        case ExperimentKind::finetune_sweep: return run_finetune_sweep(cfg, threads);
    }
    throw ConfigError("unknown experiment kind");
}

std::vector<path> run_gen(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    if (cfg.output_dir.empty()) throw ConfigError("gen needs an output directory");
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<path> files;
    auto emit = [&](const sim::ScenarioConfig& s, const std::string& role) {
        for (const auto& [split, n] : {std::pair<std::string, std::size_t>{"train", cfg.train_size}, {"test", cfg.test_size}}) {
            const auto p = cfg.output_dir / (role + "_" + split + ".dsds");
            sim::save_dataset(make_split(cfg, s, split, n, threads), p);
            files.push_back(p);
        }
    };
    emit(cfg.source, "source");
    if (cfg.target) emit(*cfg.target, "target");
    return files;
}

std::vector<path> run_train(const ExperimentConfig& cfg, const std::optional<path>& data, std::size_t threads) {
    cfg.validate();
    if (cfg.output_dir.empty()) throw ConfigError("train needs an output directory");
    std::filesystem::create_directories(cfg.output_dir);
    const auto train = data ? sim::load_dataset(*data) : make_split(cfg, cfg.source, "train", cfg.train_size, threads);
    if (train.empty()) throw ArgumentError("training set is empty");
    auto t = cfg.train;
    t.seed = training_seed(cfg.seed, cfg.source);
    const auto result = net::train<float>(train, t, net::NetworkSpec::standard(train.n_samples_per_example));
    std::string loss = csv_preamble(cfg) + "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
        loss += std::to_string(e) + "," + io::format_real(result.epoch_loss[e]) + "\n";
    const auto model = cfg.output_dir / "model.dsnw";
    const auto log = cfg.output_dir / "train_loss.csv";
    net::save_weights(result.weights, model);
    io::write_file_atomic(log, loss);
    return {model, log};
}

std::vector<path> run_eval(const ExperimentConfig& cfg, const path& model, const std::optional<path>& data,
                           std::size_t threads) {
    cfg.validate();
    if (cfg.output_dir.empty()) throw ConfigError("eval needs an output directory");
    std::filesystem::create_directories(cfg.output_dir);
    const auto test = data ? sim::load_dataset(*data) : make_split(cfg, eval_scenario(cfg), "test", cfg.test_size, threads);
    const auto w = net::load_weights(model, net::NetworkSpec::standard(test.n_samples_per_example));
    const auto scores = net::predict_scores(test, w, threads);
    std::string per = csv_preamble(cfg) + "index,label,prob,logit\n";
    std::vector<double> logits;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        per += std::to_string(i) + "," + std::to_string(scores[i].label) + "," + io::format_real(scores[i].prob) + "," +
               io::format_real(scores[i].logit) + "\n";
        logits.push_back(scores[i].logit);
    }
    MetricReport r;
    r.arms.push_back(make_arm("cnn", logits, test, cfg.pfa_star));
    r.arms.push_back(make_arm("ed", detect::energy_scores(test), test, cfg.pfa_star));
    std::vector<path> files{cfg.output_dir / "scores.csv", cfg.output_dir / "roc_cnn.csv", cfg.output_dir / "roc_ed.csv",
                            cfg.output_dir / "summary.csv"};
    io::write_file_atomic(files[0], per);
    io::write_file_atomic(files[1], roc_csv(cfg, r.arms[0].roc));
    io::write_file_atomic(files[2], roc_csv(cfg, r.arms[1].roc));
    io::write_file_atomic(files[3], summary_csv(cfg, r));
    return files;
}

std::string inspect_file(const path& p) {
    const auto bytes = io::read_file(p);
    const std::string_view magic = std::string_view(bytes).substr(0, 4);
    std::string s;
    if (magic == "DSDS") {
        const auto h = sim::read_dataset_header(p);
        s += "dataset " + p.string() + "\n";
        s += "  version " + std::to_string(h.version) + "\n";
        s += "  N " + std::to_string(h.n_samples) + "\n";
        s += "  examples " + std::to_string(h.count) + "\n";
        return s;
    }
    if (magic == "DSNW") {
        const auto w = net::decode_weights(bytes);
        s += "checkpoint " + p.string() + "\n";
        s += "  N " + std::to_string(w.spec.n_samples) + "\n";
        for (std::size_t i = 0; i < net::kParamCount; ++i) {
            const auto param = static_cast<net::Param>(i);
            s += std::string("  ") + net::param_name(param) + " [";
            const auto dims = w.dims(param);
            for (std::size_t k = 0; k < dims.size(); ++k) s += (k ? "," : "") + std::to_string(dims[k]);
            s += "]\n";
        }
        s += "  parameters " + std::to_string(w.parameter_count()) + "\n";
        return s;
    }
    if (magic == "DSTC") {
        const auto m = transfer::decode_tca(bytes);
        s += "tca model " + p.string() + "\n";
        s += std::string("  kernel ") + (m.kernel.kind == transfer::Kernel::Kind::rbf ? "rbf" : "linear");
        if (m.kernel.kind == transfer::Kernel::Kind::rbf) s += " gamma " + io::format_real(m.kernel.gamma);
        s += "\n  mu " + io::format_real(m.mu) + "\n";
        s += "  m " + std::to_string(m.m) + "\n";
        s += "  landmarks " + std::to_string(m.landmark_count()) + " x " + std::to_string(m.input_dim()) + "\n";
        s += std::string("  classifier ") + (m.classifier.trained ? "trained" : "untrained") + "\n";
        return s;
    }
    throw FormatError("unrecognized file magic", 0);
}

}  // namespace deepsense::harness
