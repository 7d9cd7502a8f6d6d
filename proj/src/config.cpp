#include "deepsense/binary_io.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/harness.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace deepsense::harness {

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

[[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& why) {
    throw ConfigError("line " + std::to_string(e.line) + ": " + key + ": " + why);
}

double to_real(const std::string& s, const Entry& e, const std::string& key) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        fail(e, key, "expected a number, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s, const Entry& e, const std::string& key) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        fail(e, key, "expected a non-negative integer, got '" + s + "'");
    return v;
}

// Reads the keys of one section, erasing each as it is consumed so leftovers
// can be reported as unknown.
class Reader {
public:
    Reader(Section& s, std::string name) : s_(s), name_(std::move(name)) {}

    bool has(const std::string& k) const { return s_.count(k) != 0; }

    template <typename Fn>
    void take(const std::string& k, Fn&& fn) {
        auto it = s_.find(k);
        if (it == s_.end()) return;
        const Entry e = it->second;
        s_.erase(it);
        fn(e.value, e, name_ + "." + k);
    }

    void real(const std::string& k, double& out) {
        take(k, [&](const std::string& v, const Entry& e, const std::string& key) { out = to_real(v, e, key); });
    }
    void count(const std::string& k, std::size_t& out) {
        take(k, [&](const std::string& v, const Entry& e, const std::string& key) {
            out = static_cast<std::size_t>(to_u64(v, e, key));
        });
    }
    void u64(const std::string& k, std::uint64_t& out) {
        take(k, [&](const std::string& v, const Entry& e, const std::string& key) { out = to_u64(v, e, key); });
    }
    void flag(const std::string& k, bool& out) {
        take(k, [&](const std::string& v, const Entry& e, const std::string& key) {
            if (v == "true") out = true;
            else if (v == "false") out = false;
            else fail(e, key, "expected true or false");
        });
    }

    void finish() const {
        if (s_.empty()) return;
        const auto& [k, e] = *s_.begin();
        fail(e, name_ + "." + k, "unknown key");
    }

private:
    Section& s_;
    std::string name_;
};

sim::ScenarioConfig read_scenario(Section& s, const std::string& name) {
    sim::ScenarioConfig c;
    Reader r(s, name);
    r.take("signal", [&](const std::string& v, const Entry& e, const std::string& key) {
        try {
            c.signal_kind = sim::signal_kind_from_string(v);
        } catch (const Error&) {
            fail(e, key, "unknown signal '" + v + "' (gaussian_nb, bpsk, qpsk, qam16)");
        }
    });
    r.count("n_samples", c.n_samples);
    r.take("snr_db", [&](const std::string& v, const Entry& e, const std::string& key) {
        const auto w = words(v);
        if (w.empty() || w.size() > 2) fail(e, key, "expected one value or a 'lo hi' range");
        c.snr_db.lo_db = to_real(w[0], e, key);
        c.snr_db.hi_db = w.size() == 2 ? to_real(w[1], e, key) : c.snr_db.lo_db;
    });
    r.real("bandwidth_fraction", c.bandwidth_fraction);
    r.count("sps", c.sps);
    r.real("rolloff", c.srrc_rolloff);
    r.count("span", c.srrc_span_symbols);
    r.real("noise_variance", c.noise_variance);
    sim::RayleighFading fading;
    bool fading_params = r.has("fading_taps") || r.has("fading_decay_db");
    r.count("fading_taps", fading.n_taps);
    r.real("fading_decay_db", fading.decay_db_per_tap);
    bool rayleigh = false;
    r.take("fading", [&](const std::string& v, const Entry& e, const std::string& key) {
        if (v == "rayleigh") rayleigh = true;
        else if (v != "none") fail(e, key, "expected none or rayleigh");
    });
    if (fading_params && !rayleigh) throw ConfigError(name + ": fading_taps/fading_decay_db need fading = rayleigh");
    if (rayleigh) c.fading = fading;
    r.finish();
    return c;
}

void read_train(Section& s, const std::string& name, net::TrainConfig& t) {
    Reader r(s, name);
    r.real("learning_rate", t.learning_rate);
    r.real("adam_beta1", t.adam_beta1);
    r.real("adam_beta2", t.adam_beta2);
    r.real("adam_eps", t.adam_eps);
    r.count("batch_size", t.batch_size);
    r.count("epochs", t.epochs);
    r.flag("freeze_conv", t.freeze_conv);
    r.finish();
}

std::string scenario_body(const sim::ScenarioConfig& c) {
    std::string s;
    s += "signal = " + std::string(sim::to_string(c.signal_kind)) + "\n";
    s += "n_samples = " + std::to_string(c.n_samples) + "\n";
    s += "snr_db = " + io::format_real(c.snr_db.lo_db) + " " + io::format_real(c.snr_db.hi_db) + "\n";
    s += "bandwidth_fraction = " + io::format_real(c.bandwidth_fraction) + "\n";
    s += "sps = " + std::to_string(c.sps) + "\n";
    s += "rolloff = " + io::format_real(c.srrc_rolloff) + "\n";
    s += "span = " + std::to_string(c.srrc_span_symbols) + "\n";
    s += "noise_variance = " + io::format_real(c.noise_variance) + "\n";
    if (c.fading) {
        s += "fading = rayleigh\n";
        s += "fading_taps = " + std::to_string(c.fading->n_taps) + "\n";
        s += "fading_decay_db = " + io::format_real(c.fading->decay_db_per_tap) + "\n";
    } else {
        s += "fading = none\n";
    }
    return s;
}

std::string train_text(const net::TrainConfig& t) {
    std::string s;
    s += "learning_rate = " + io::format_real(t.learning_rate) + "\n";
    s += "adam_beta1 = " + io::format_real(t.adam_beta1) + "\n";
    s += "adam_beta2 = " + io::format_real(t.adam_beta2) + "\n";
    s += "adam_eps = " + io::format_real(t.adam_eps) + "\n";
    s += "batch_size = " + std::to_string(t.batch_size) + "\n";
    s += "epochs = " + std::to_string(t.epochs) + "\n";
    s += std::string("freeze_conv = ") + (t.freeze_conv ? "true" : "false") + "\n";
    return s;
}

std::string_view llr_name(LlrMode m) {
    switch (m) {
        case LlrMode::analytic: return "analytic";
        case LlrMode::estimated: return "estimated";
        case LlrMode::none: return "none";
    }
    return "?";
}

}  // namespace

std::string scenario_canonical(const sim::ScenarioConfig& scenario) { return scenario_body(scenario); }

std::uint64_t dataset_seed(std::uint64_t seed, std::string_view split, const sim::ScenarioConfig& scenario) {
    return derive_seed(seed, {0xDA7A, io::fnv1a64(split), io::fnv1a64(scenario_body(scenario))});
}

std::uint64_t training_seed(std::uint64_t seed, const sim::ScenarioConfig& scenario) {
    return derive_seed(dataset_seed(seed, "train", scenario), {0x7A19});
}

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::roc_compare: return "roc_compare";
        case ExperimentKind::transfer_unsup: return "transfer_unsup";
        case ExperimentKind::finetune_sweep: return "finetune_sweep";
    }
    return "?";
}

net::TrainConfig ExperimentConfig::default_train_config() {
    net::TrainConfig t;
    t.learning_rate = 1e-3;
    t.epochs = 30;
    t.batch_size = 64;
    return t;
}

void ExperimentConfig::apply_full_scale() {
    train_size = 20000;
    test_size = 20000;
    repetitions = 10;
    schedule.clear();
    for (std::size_t n = 0; n <= 1000; n += 50) schedule.push_back(n);
}

void ExperimentConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    try {
        source.validate();
        if (target) target->validate();
        train.validate();
        finetune.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    check(kind == ExperimentKind::roc_compare || target.has_value(),
          std::string(to_string(kind)) + " needs a [target] section");
    check(!target || target->n_samples == source.n_samples, "source and target must share n_samples");
    check(train_size >= 1 && test_size >= 2, "train_size must be >= 1 and test_size >= 2");
    check(occupancy > 0.0 && occupancy < 1.0, "occupancy must be in (0, 1)");
    check(pfa_star > 0.0 && pfa_star < 1.0, "pfa_star must be in (0, 1)");
    check(auc_lo < auc_hi, "auc_range must satisfy lo < hi");
    check(!schedule.empty(), "sweep.schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i) check(schedule[i] > schedule[i - 1], "sweep.schedule must increase");
    check(repetitions >= 1, "sweep.repetitions must be >= 1");
    check(tca.m >= 1, "tca.m must be >= 1");
    check(tca.mu > 0.0, "tca.mu must be positive");
    check(tca.gamma >= 0.0, "tca.gamma must be positive or auto");
    check(tca.subsample >= 2, "tca.subsample must be >= 2");
    check(2 * tca.subsample <= tca.max_points, "2 * tca.subsample exceeds tca.max_points");
    check(tca.m <= 2 * tca.subsample, "tca.m exceeds the number of fit points");
}

std::string ExperimentConfig::canonical() const {
    std::string s = "[experiment]\n";
    s += "kind = " + std::string(to_string(kind)) + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    s += "train_size = " + std::to_string(train_size) + "\n";
    s += "test_size = " + std::to_string(test_size) + "\n";
    s += "occupancy = " + io::format_real(occupancy) + "\n";
    s += "pfa_star = " + io::format_real(pfa_star) + "\n";
    s += "auc_range = " + io::format_real(auc_lo) + " " + io::format_real(auc_hi) + "\n";
    s += "llr = " + std::string(llr_name(llr)) + "\n";
    s += "[source]\n" + scenario_body(source);
    if (target) s += "[target]\n" + scenario_body(*target);
    s += "[train]\n" + train_text(train);
    s += "[finetune]\n" + train_text(finetune);
    s += "[sweep]\nschedule =";
    for (auto n : schedule) s += " " + std::to_string(n);
    s += "\nrepetitions = " + std::to_string(repetitions) + "\n";
    s += "[tca]\n";
    s += std::string("kernel = ") + (tca.kernel == transfer::Kernel::Kind::rbf ? "rbf" : "linear") + "\n";
    s += "gamma = " + (tca.gamma > 0.0 ? io::format_real(tca.gamma) : std::string("auto")) + "\n";
    s += "m = " + std::to_string(tca.m) + "\n";
    s += "mu = " + io::format_real(tca.mu) + "\n";
    s += "subsample = " + std::to_string(tca.subsample) + "\n";
    s += "max_points = " + std::to_string(tca.max_points) + "\n";
    return s;
}

std::string ExperimentConfig::hash() const { return io::to_hex(io::fnv1a64(canonical())); }

ExperimentConfig parse_config(std::string_view text) {
    static const std::set<std::string> kSections{"experiment", "source", "target", "train", "finetune", "sweep", "tca"};
    std::map<std::string, Section> sections;
    sections["experiment"];
    std::string current = "experiment";
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!kSections.count(current))
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + current + "]");
            if (sections.count(current) && current != "experiment")
                throw ConfigError("line " + std::to_string(line_no) + ": section [" + current + "] repeated");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
        if (!sections[current].emplace(key, Entry{value, line_no}).second)
            throw ConfigError("line " + std::to_string(line_no) + ": " + current + "." + key + " given twice");
    }

    ExperimentConfig cfg;
    {
        Reader r(sections["experiment"], "experiment");
        bool has_kind = false;
        r.take("kind", [&](const std::string& v, const Entry& e, const std::string& key) {
            has_kind = true;
            if (v == "roc_compare") cfg.kind = ExperimentKind::roc_compare;
            else if (v == "transfer_unsup") cfg.kind = ExperimentKind::transfer_unsup;
            else if (v == "finetune_sweep") cfg.kind = ExperimentKind::finetune_sweep;
            else fail(e, key, "unknown kind '" + v + "'");
        });
        if (!has_kind) throw ConfigError("experiment.kind is required");
        r.u64("seed", cfg.seed);
        r.count("train_size", cfg.train_size);
        r.count("test_size", cfg.test_size);
        r.real("occupancy", cfg.occupancy);
        r.real("pfa_star", cfg.pfa_star);
        r.take("auc_range", [&](const std::string& v, const Entry& e, const std::string& key) {
            const auto w = words(v);
            if (w.size() != 2) fail(e, key, "expected 'lo hi'");
            cfg.auc_lo = to_real(w[0], e, key);
            cfg.auc_hi = to_real(w[1], e, key);
        });
        r.take("out", [&](const std::string& v, const Entry&, const std::string&) { cfg.output_dir = v; });
        r.take("llr", [&](const std::string& v, const Entry& e, const std::string& key) {
            if (v == "analytic") cfg.llr = LlrMode::analytic;
            else if (v == "estimated") cfg.llr = LlrMode::estimated;
            else if (v == "none") cfg.llr = LlrMode::none;
            else fail(e, key, "expected analytic, estimated or none");
        });
        r.finish();
    }
    if (sections.count("source")) cfg.source = read_scenario(sections["source"], "source");
    if (sections.count("target")) cfg.target = read_scenario(sections["target"], "target");
    if (sections.count("train")) read_train(sections["train"], "train", cfg.train);
    if (sections.count("finetune")) read_train(sections["finetune"], "finetune", cfg.finetune);
    if (sections.count("sweep")) {
        Reader r(sections["sweep"], "sweep");
        r.take("schedule", [&](const std::string& v, const Entry& e, const std::string& key) {
            cfg.schedule.clear();
            for (const auto& w : words(v)) cfg.schedule.push_back(static_cast<std::size_t>(to_u64(w, e, key)));
            if (cfg.schedule.empty()) fail(e, key, "empty schedule");
        });
        r.count("repetitions", cfg.repetitions);
        r.finish();
    }
    if (sections.count("tca")) {
        Reader r(sections["tca"], "tca");
        r.take("kernel", [&](const std::string& v, const Entry& e, const std::string& key) {
            if (v == "rbf") cfg.tca.kernel = transfer::Kernel::Kind::rbf;
            else if (v == "linear") cfg.tca.kernel = transfer::Kernel::Kind::linear;
            else fail(e, key, "expected rbf or linear");
        });
        r.take("gamma", [&](const std::string& v, const Entry& e, const std::string& key) {
            cfg.tca.gamma = v == "auto" ? 0.0 : to_real(v, e, key);
            if (v != "auto" && !(cfg.tca.gamma > 0.0)) fail(e, key, "must be positive or auto");
        });
        r.count("m", cfg.tca.m);
        r.real("mu", cfg.tca.mu);
        r.count("subsample", cfg.tca.subsample);
        r.count("max_points", cfg.tca.max_points);
        r.finish();
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_config(text);
}

}  // namespace deepsense::harness
