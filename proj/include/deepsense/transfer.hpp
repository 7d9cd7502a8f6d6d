#pragma once

#include "deepsense/deepnet.hpp"
#include "deepsense/numerics.hpp"
#include "deepsense/signal_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace deepsense::transfer {

using numerics::RealMatrix;
using numerics::RealVector;
using sim::Dataset;
using sim::ScenarioConfig;
using sim::SensingExample;

/// Points are stored as columns of a d x n matrix throughout this module.
struct Kernel {
    enum class Kind : std::uint8_t { linear = 0, rbf = 1 };

    Kind kind = Kind::rbf;
    double gamma = 1.0;  // rbf: exp(-gamma * |a - b|^2)

    static Kernel rbf(double gamma);
    static Kernel linear();

    double operator()(const RealVector& a, const RealVector& b) const;
    bool operator==(const Kernel&) const = default;
};

/// K[i, j] = k(a_i, b_j).
RealMatrix kernel_matrix(const Kernel& k, const RealMatrix& a, const RealMatrix& b);

/// gamma = 1 / (2 * median^2) of pairwise distances over at most `subsample`
/// columns (chosen by `seed` when x has more).
double median_heuristic_gamma(const RealMatrix& x, std::size_t subsample = 500, std::uint64_t seed = 1);

/// Squared RKHS distance between the empirical kernel means of x and y.
double mmd_distance(const RealMatrix& x, const RealMatrix& y, const Kernel& k);

/// Tr(KL) over the stacked sample [x y], with L_ij = 1/n1^2, 1/n2^2 or -1/(n1 n2).
double mmd_trace_form(const RealMatrix& x, const RealMatrix& y, const Kernel& k);

/// Flattened examples as columns.
RealMatrix to_columns(const Dataset& d);
RealMatrix to_columns(const Dataset& d, std::size_t first, std::size_t count);

/// Logistic regression on standardized latent features.
struct LatentClassifier {
    RealVector mean;
    RealVector scale;
    RealVector weights;
    double bias = 0.0;
    bool trained = false;

    double logit(const RealVector& z) const;
    double probability(const RealVector& z) const;
};

struct TcaModel {
    Kernel kernel;
    double mu = 1.0;
    std::size_t m = 8;
    RealMatrix landmarks;  // d x (n1 + n2), source columns first
    RealMatrix w;          // (n1 + n2) x m
    LatentClassifier classifier;

    std::size_t landmark_count() const noexcept { return static_cast<std::size_t>(landmarks.cols()); }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(landmarks.rows()); }
};

struct TcaOptions {
    Kernel kernel = Kernel::rbf(1.0);
    bool median_gamma = true;  // overrides kernel.gamma for rbf
    std::size_t m = 8;
    double mu = 1.0;
    std::size_t max_points = 4000;
    std::uint64_t seed = 1;
};

/// Solves min Tr(W^T KLK W) + mu Tr(W^T W) s.t. W^T KHK W = I over the
/// stacked sample; W holds the leading m eigenvectors of (KLK + mu I)^-1 KHK.
TcaModel tca_fit(const RealMatrix& x_src, const RealMatrix& x_tar, const TcaOptions& opts);

/// W^T k(landmarks, x).
RealVector tca_transform(const TcaModel& model, const RealVector& x);
/// Column-wise transform; result is m x x.cols().
RealMatrix tca_transform(const TcaModel& model, const RealMatrix& x);

struct ClassifierOptions {
    double ridge = 1e-3;
    double tolerance = 1e-8;
    std::size_t max_iterations = 100;
};

/// Regularized logistic regression, mean loss + ridge/2 |w|^2 (bias not
/// penalized), solved by Newton steps until the gradient norm is below tolerance.
LatentClassifier fit_latent_classifier(const RealMatrix& latent, const std::vector<std::uint8_t>& labels,
                                       const ClassifierOptions& opts = {});

/// Projects the labeled source set and trains model.classifier on it.
void train_latent_classifier(TcaModel& model, const Dataset& labeled_src, const ClassifierOptions& opts = {});

/// Latent-classifier probability that the PU is present.
double tca_sense(const TcaModel& model, const SensingExample& x);
/// Same score as a logit; used for ROC sweeps to avoid ties at saturated probabilities.
double tca_logit(const TcaModel& model, const SensingExample& x);
std::vector<double> tca_logits(const TcaModel& model, const Dataset& d, std::size_t threads = 1);

/// Checkpoint: "DSTC", u32 version = 1, u8 kernel tag (0 linear, 1 rbf),
/// f64 gamma (rbf only), f64 mu, u32 m, u32 landmark count, u32 landmark dim,
/// float32 landmarks (column by column), float32 W (row-major, count x m),
/// then u8 trained flag and, when set, f64 mean[m], scale[m], weights[m], bias.
std::string encode_tca(const TcaModel& model);
TcaModel decode_tca(std::string_view bytes);
void save_tca(const TcaModel& model, const std::filesystem::path& path);
TcaModel load_tca(const std::filesystem::path& path);

/// Continues training from `base` with fresh Adam state. Empty data or zero
/// epochs return `base` unchanged.
net::NetworkWeights<float> fine_tune(const net::NetworkWeights<float>& base, const Dataset& target_labeled,
                                     const net::TrainConfig& cfg);

struct FinetunePlan {
    std::filesystem::path base_checkpoint;
    std::vector<std::size_t> schedule{0, 25, 50, 100, 200, 300, 500, 1000};
    std::size_t repetitions = 3;
    net::TrainConfig finetune_cfg = default_finetune_config();
    net::TrainConfig scratch_cfg;  // from-scratch training uses the pre-train settings
    double pfa = 0.1;
    std::size_t test_size = 5000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    static net::TrainConfig default_finetune_config();
    void validate() const;
};

enum class Arm { finetune, scratch };
std::string_view to_string(Arm arm);

struct SweepCell {
    std::size_t n_examples = 0;
    Arm arm = Arm::finetune;
    std::size_t rep = 0;
    double pd = 0.0;
    double pfa = 0.0;
    std::uint64_t seed = 0;
};

struct SweepPoint {
    std::size_t n_examples = 0;
    double mean_pd = 0.0;
    double std_pd = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // ordered by (point, arm, rep)
    std::vector<SweepPoint> finetune;
    std::vector<SweepPoint> scratch;
    double energy_pd = 0.0;        // ED on the same target test set
};

/// Seed of one (point, repetition) cell; independent of the schedule order.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t n_examples, std::size_t rep);

/// Loads plan.base_checkpoint and sweeps the schedule. The target test set is
/// tar_cfg with a seed derived from plan.seed; each cell draws its own labeled
/// target subset.
SweepResult run_finetune_sweep(const FinetunePlan& plan, const ScenarioConfig& src_cfg, const ScenarioConfig& tar_cfg);
SweepResult run_finetune_sweep(const FinetunePlan& plan, const net::NetworkWeights<float>& base,
                               const ScenarioConfig& tar_cfg);

/// Sweep CSV rows (header `n_examples,arm,rep,pd,pfa,seed`).
std::string sweep_csv_rows(const SweepResult& r);

}  // namespace deepsense::transfer
