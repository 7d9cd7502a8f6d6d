#pragma once

#include "deepsense/deepnet.hpp"
#include "deepsense/detectors.hpp"
#include "deepsense/signal_sim.hpp"
#include "deepsense/transfer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace deepsense::harness {

inline constexpr std::string_view kToolVersion = "deepsense 1.0.0";

using detect::pd_at_pfa;

enum class ExperimentKind { roc_compare, transfer_unsup, finetune_sweep };
std::string_view to_string(ExperimentKind kind);

/// How the LLR arm of roc_compare gets its covariances.
enum class LlrMode { analytic, estimated, none };

struct TcaSettings {
    transfer::Kernel::Kind kernel = transfer::Kernel::Kind::rbf;
    double gamma = 0.0;  // 0 selects the median heuristic
    std::size_t m = 8;
    double mu = 1.0;
    std::size_t subsample = 1000;  // points per domain used by the fit
    std::size_t max_points = 4000;
};

/// Declarative description of one experiment. Text form:
///
///   kind = roc_compare            # top-level keys belong to [experiment]
///   seed = 1
///   [source]
///   signal = gaussian_nb
///   snr_db = -4                   # or a range: -4 -2
///
/// Sections: experiment, source, target, train, finetune, sweep, tca.
/// Unknown sections or keys are errors.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::roc_compare;
    sim::ScenarioConfig source;
    std::optional<sim::ScenarioConfig> target;
    std::size_t train_size = 5000;
    std::size_t test_size = 5000;
    double occupancy = 0.5;
    double pfa_star = 0.1;
    double auc_lo = 0.0;
    double auc_hi = 1000.0;
    std::uint64_t seed = 1;
    LlrMode llr = LlrMode::analytic;
    net::TrainConfig train = default_train_config();
    net::TrainConfig finetune = transfer::FinetunePlan::default_finetune_config();
    std::vector<std::size_t> schedule{0, 25, 50, 100, 200, 300, 500, 1000};
    std::size_t repetitions = 3;
    TcaSettings tca;
    std::filesystem::path output_dir;

    static net::TrainConfig default_train_config();

    /// Full-scale sizes: 2e4 train/test examples, 10 repetitions, a 50-step schedule.
    void apply_full_scale();
    /// Throws ConfigError on any violated invariant.
    void validate() const;
    /// Normalized text of every setting that affects results (not the output dir).
    std::string canonical() const;
    /// Hex FNV-1a of canonical().
    std::string hash() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Normalized `key = value` text of a scenario (the seed field excluded).
std::string scenario_canonical(const sim::ScenarioConfig& scenario);

/// Seed of a dataset split; identical scenarios under the same master seed
/// get identical data.
std::uint64_t dataset_seed(std::uint64_t seed, std::string_view split, const sim::ScenarioConfig& scenario);
/// Seed of a CNN training run on a scenario.
std::uint64_t training_seed(std::uint64_t seed, const sim::ScenarioConfig& scenario);

/// Trapezoidal integral of pd dn over [lo, hi]. The curve is read as piecewise
/// linear in n and held flat beyond its first and last points.
double auc_over_examples(const std::vector<std::pair<double, double>>& curve, double lo, double hi);
/// True when the curve's n range spans [lo, hi] without extension.
bool covers_range(const std::vector<std::pair<double, double>>& curve, double lo, double hi);

struct NamedCurve {
    std::string name;
    detect::RocCurve roc;
    double auc = 0.0;
    double pd_at_pfa = 0.0;
};

struct MetricReport {
    ExperimentKind kind = ExperimentKind::roc_compare;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<NamedCurve> arms;
    std::vector<std::pair<std::string, double>> auc_over_examples;
    std::optional<transfer::SweepResult> sweep;
    std::size_t test_examples = 0;
    std::string test_checksum;
    std::vector<std::string> notes;
    std::vector<std::filesystem::path> files;

    const NamedCurve& arm(std::string_view name) const;
};

/// Comment line that opens every CSV: `# deepsense v1 config_hash=<hex> seed=<n>`.
std::string csv_preamble(const ExperimentConfig& cfg);
std::string roc_csv(const ExperimentConfig& cfg, const detect::RocCurve& roc);

MetricReport run_roc_compare(const ExperimentConfig& cfg, std::size_t threads = 1);
MetricReport run_transfer_unsup(const ExperimentConfig& cfg, std::size_t threads = 1);
MetricReport run_finetune_sweep(const ExperimentConfig& cfg, std::size_t threads = 1);
MetricReport run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

/// Writes the source (and target, if any) train/test splits as dataset files.
std::vector<std::filesystem::path> run_gen(const ExperimentConfig& cfg, std::size_t threads = 1);

/// Trains the CNN on `data` (or the generated source train split) and writes
/// model.dsnw plus a per-epoch loss CSV.
std::vector<std::filesystem::path> run_train(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& data,
                                             std::size_t threads = 1);

/// Scores `model` on `data` (or the generated evaluation split) and writes
/// per-example scores, the ROC and a summary.
std::vector<std::filesystem::path> run_eval(const ExperimentConfig& cfg, const std::filesystem::path& model,
                                            const std::optional<std::filesystem::path>& data, std::size_t threads = 1);

/// Human-readable header of a dataset, CNN checkpoint or TCA checkpoint.
std::string inspect_file(const std::filesystem::path& path);

}  // namespace deepsense::harness
