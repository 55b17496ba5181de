#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hmmq/baselines.hpp"
#include "hmmq/belief_policy.hpp"
#include "hmmq/checkpoint.hpp"
#include "hmmq/config.hpp"

namespace hmmq {

/// One logged record. Evaluation fields are present only at evaluation checkpoints.
struct MetricsRow {
    long long step = 0;
    double loglik_ma = 0.0;  // mean of log(b^T u) over the trailing window
    double sigma = 0.0;
    double max_q_hmm = 0.0;
    double max_q_full = 0.0;
    double max_q_partial = 0.0;
    std::optional<double> eval_hmm;
    std::optional<double> eval_full;
    std::optional<double> eval_partial;
};

/// Header row of the metrics file.
std::string metrics_header();
/// One CSV line, floats at 17 significant digits, empty cells for absent values.
std::string format_metrics_row(const MetricsRow& row);
/// Throws std::runtime_error naming the 1-based line for malformed input.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

struct EvalResult {
    long long step = 0;
    double full = 0.0;
    double hmm = 0.0;
    double partial = 0.0;
};

/// Mean rewards of the three policy classes for a snapshot. The evaluation
/// stream is derived from (seed, checkpoint step), so results do not depend
/// on evaluation order.
EvalResult evaluate_snapshot(const Checkpoint& ckpt, const RunConfig& config);

/// Training driver that owns the environment trajectory, the HMM session and
/// the two Q-learning baselines fed from the same samples.
class Trainer {
public:
    explicit Trainer(RunConfig config);
    /// Resume from a snapshot taken under the same configuration.
    Trainer(RunConfig config, Checkpoint checkpoint);

    /// Consume one environment step. Returns the step log-likelihood.
    double step();

    const HmmSession& session() const { return ckpt_.session; }
    const Checkpoint& checkpoint() const { return ckpt_; }
    const RunConfig& config() const { return config_; }

private:
    RunConfig config_;
    EstimatorSettings settings_;
    Checkpoint ckpt_;
};

struct TrainSummary {
    Checkpoint final_checkpoint;
    std::filesystem::path checkpoint_path;
    std::filesystem::path metrics_path;
    std::vector<EvalResult> evaluations;
    long long numerical_guard_trips = 0;
};

/// Runs the configured number of steps, writing metrics.csv, timing.csv,
/// config.json and checkpoint.txt (plus per-evaluation checkpoints when
/// enabled) into config.output_dir.
TrainSummary run_train(const RunConfig& config, std::ostream* log = nullptr);

/// Evaluates a checkpoint and appends one row to eval.csv in config.output_dir.
EvalResult run_eval(const std::filesystem::path& checkpoint_path, const RunConfig& config);

struct ReportSummary {
    std::size_t rows = 0;
    std::optional<PermutationMatch> q_match;  // Q_hmm vs Q_full, when a checkpoint is given
    std::vector<std::string> warnings;
};

/// Splits a metrics file into one series file per plotted quantity and,
/// given a checkpoint, reports the best relabeled Q_hmm vs Q_full match.
ReportSummary emit_report(const std::filesystem::path& metrics_path, const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& checkpoint_path = std::nullopt);

}  // namespace hmmq
