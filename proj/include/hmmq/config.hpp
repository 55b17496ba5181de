#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "hmmq/estimators.hpp"
#include "hmmq/pomdp_env.hpp"
#include "hmmq/theta.hpp"

namespace hmmq {

/// Raised for unreadable, malformed or invalid configuration; the message
/// carries the offending key path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    PomdpModel model;
    BehaviorPolicy policy;
    StepSchedule schedule;
    ThetaBounds bounds;
    ThetaInit init;
    double q_margin = 1.0;
    TUpdateMode t_mode = TUpdateMode::averaging;
    QTiming q_timing = QTiming::alg1;

    long long steps = 200000;
    std::uint64_t seed = 0;
    int initial_state = -1;  // -1: drawn uniformly
    int log_interval = 100;
    int ll_window = 1000;
    int eval_interval = 1000;  // 0 disables evaluation during training
    int eval_episodes = 100;
    int eval_steps = 500;
    bool save_eval_checkpoints = false;
    std::string output_dir = "runs/latest";

    EstimatorSettings estimator_settings() const;

    /// Throws ConfigError on any violated invariant.
    void validate() const;

    bool operator==(const RunConfig& other) const;
};

/// Defaults for the 4-state benchmark: its model, behavior policy,
/// n^-0.4 schedule and discount 0.95.
RunConfig paper_s4_config();

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

TUpdateMode parse_t_mode(const std::string& text);
QTiming parse_q_timing(const std::string& text);
std::string to_string(TUpdateMode mode);
std::string to_string(QTiming timing);

}  // namespace hmmq
