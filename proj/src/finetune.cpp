#include "deepsense/binary_io.hpp"
#include "deepsense/detectors.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/parallel.hpp"
#include "deepsense/transfer.hpp"

#include <cmath>

namespace deepsense::transfer {

namespace {

double network_pd(const Dataset& test, const net::NetworkWeights<float>& w, double pfa) {
    const auto scores = net::predict_scores(test, w);
    std::vector<double> logits;
    logits.reserve(scores.size());
    for (const auto& s : scores) logits.push_back(s.logit);
    const auto [h0, h1] = detect::split_by_label(logits, test);
    return detect::pd_at_pfa(detect::roc_from_scores(h0, h1), pfa);
}

std::vector<SweepPoint> summarize(const std::vector<SweepCell>& cells, Arm arm, const std::vector<std::size_t>& schedule) {
    std::vector<SweepPoint> out;
    for (std::size_t n : schedule) {
        std::vector<double> pds;
        for (const auto& c : cells)
            if (c.arm == arm && c.n_examples == n) pds.push_back(c.pd);
        SweepPoint p;
        p.n_examples = n;
        for (double v : pds) p.mean_pd += v;
        p.mean_pd /= static_cast<double>(pds.size());
        double ss = 0.0;
        for (double v : pds) ss += (v - p.mean_pd) * (v - p.mean_pd);
        p.std_pd = pds.size() > 1 ? std::sqrt(ss / static_cast<double>(pds.size() - 1)) : 0.0;
        out.push_back(p);
    }
    return out;
}

}  // namespace

net::NetworkWeights<float> fine_tune(const net::NetworkWeights<float>& base, const Dataset& target_labeled,
                                     const net::TrainConfig& cfg) {
    if (base.spec.n_samples != target_labeled.n_samples_per_example && !target_labeled.empty())
        throw ShapeError("fine_tune: network expects N = " + std::to_string(base.spec.n_samples) + ", data has N = " +
                         std::to_string(target_labeled.n_samples_per_example));
    if (target_labeled.empty() || cfg.epochs == 0) return base;
    return net::train(target_labeled, cfg, base).weights;
}

net::TrainConfig FinetunePlan::default_finetune_config() {
    net::TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.epochs = 20;
    return cfg;
}

void FinetunePlan::validate() const {
    if (schedule.empty()) throw ArgumentError("finetune plan: schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] < schedule[i - 1]) throw ArgumentError("finetune plan: schedule must be nondecreasing");
    if (repetitions < 1) throw ArgumentError("finetune plan: repetitions must be >= 1");
    if (!(pfa > 0.0 && pfa < 1.0)) throw ArgumentError("finetune plan: pfa must be in (0, 1)");
    if (test_size < 2) throw ArgumentError("finetune plan: test set needs at least 2 examples");
    finetune_cfg.validate();
    scratch_cfg.validate();
}

std::string_view to_string(Arm arm) { return arm == Arm::finetune ? "finetune" : "scratch"; }

std::uint64_t cell_seed(std::uint64_t seed, std::size_t n_examples, std::size_t rep) {
    return derive_seed(seed, {0xCE11, n_examples, rep});
}

SweepResult run_finetune_sweep(const FinetunePlan& plan, const ScenarioConfig& src_cfg, const ScenarioConfig& tar_cfg) {
    src_cfg.validate();
    const auto base = net::load_weights(plan.base_checkpoint);
    if (base.spec.n_samples != src_cfg.n_samples)
        throw ShapeError("base checkpoint has N = " + std::to_string(base.spec.n_samples) + ", source scenario has N = " +
                         std::to_string(src_cfg.n_samples));
    return run_finetune_sweep(plan, base, tar_cfg);
}

SweepResult run_finetune_sweep(const FinetunePlan& plan, const net::NetworkWeights<float>& base,
                               const ScenarioConfig& tar_cfg) {
    plan.validate();
    tar_cfg.validate();
    if (base.spec.n_samples != tar_cfg.n_samples)
        throw ShapeError("base network has N = " + std::to_string(base.spec.n_samples) + ", target scenario has N = " +
                         std::to_string(tar_cfg.n_samples));

    auto test_cfg = tar_cfg;
    test_cfg.seed = derive_seed(plan.seed, {0x7E57});
    const auto test = sim::build_dataset(test_cfg, plan.test_size, 0.5, plan.threads);

    SweepResult result;
    {
        const auto [h0, h1] = detect::split_by_label(detect::energy_scores(test), test);
        result.energy_pd = detect::pd_at_pfa(detect::roc_from_scores(h0, h1), plan.pfa);
    }

    const std::size_t points = plan.schedule.size(), reps = plan.repetitions;
    std::vector<SweepCell> cells(points * 2 * reps);
    parallel_for(points * reps, plan.threads, [&](std::size_t task) {
        const std::size_t pi = task / reps, rep = task % reps, n = plan.schedule[pi];
        const std::uint64_t seed = cell_seed(plan.seed, n, rep);
        try {
            Dataset data;
            data.n_samples_per_example = tar_cfg.n_samples;
            if (n > 0) {
                auto data_cfg = tar_cfg;
                data_cfg.seed = derive_seed(seed, {0xDA7A});
                data = sim::build_dataset(data_cfg, n, 0.5);
            }
            auto ft_cfg = plan.finetune_cfg;
            ft_cfg.seed = derive_seed(seed, {0xF17E});
            const auto tuned = fine_tune(base, data, ft_cfg);

            auto sc_cfg = plan.scratch_cfg;
            sc_cfg.seed = derive_seed(seed, {0x5C2A});
            auto scratch = net::initialize<float>(base.spec, sc_cfg.seed, sc_cfg.init_scheme);
            if (n > 0 && sc_cfg.epochs > 0) scratch = net::train(data, sc_cfg, scratch).weights;

            const std::size_t slot = (pi * 2) * reps + rep;
            cells[slot] = {n, Arm::finetune, rep, network_pd(test, tuned, plan.pfa), plan.pfa, seed};
            cells[slot + reps] = {n, Arm::scratch, rep, network_pd(test, scratch, plan.pfa), plan.pfa, seed};
        } catch (const Error& e) {
            throw Error("finetune sweep at " + std::to_string(n) + " examples, repetition " + std::to_string(rep) +
                        ": " + e.what());
        }
    });
    result.cells = std::move(cells);
    result.finetune = summarize(result.cells, Arm::finetune, plan.schedule);
    result.scratch = summarize(result.cells, Arm::scratch, plan.schedule);
    return result;
}

std::string sweep_csv_rows(const SweepResult& r) {
    std::string out;
    for (const auto& c : r.cells) {
        out += std::to_string(c.n_examples) + ',' + std::string(to_string(c.arm)) + ',' + std::to_string(c.rep) + ',' +
               io::format_real(c.pd) + ',' + io::format_real(c.pfa) + ',' + std::to_string(c.seed) + '\n';
    }
    return out;
}

}  // namespace deepsense::transfer
