#include "hmmq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace hmmq {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

/// Rejects keys outside `allowed` so typos surface instead of being ignored.
void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected a table");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(join(path, key) + ": unknown key");
    }
}

double get_real(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

long long get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return v.get<long long>();
}

MatrixXd get_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
    const std::size_t rows = v.size();
    if (!v[0].is_array() || v[0].empty()) throw ConfigError(path + "[0]: expected a non-empty row");
    const std::size_t cols = v[0].size();
    MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!v[r].is_array() || v[r].size() != cols) throw ConfigError(rp + ": ragged row");
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = get_real(v[r][c], rp + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
void assign_if(const json& obj, const char* key, const std::string& path, T& target) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string p = join(path, key);
    if constexpr (std::is_same_v<T, double>) {
        target = get_real(v, p);
    } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(p + ": expected true or false");
        target = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(p + ": expected a string");
        target = v.get<std::string>();
    } else {
        const long long x = get_int(v, p);
        if constexpr (std::is_unsigned_v<T>) {
            if (x < 0) throw ConfigError(p + ": expected a non-negative integer");
        }
        target = static_cast<T>(x);
    }
}

void read_model(const json& obj, PomdpModel& model) {
    const std::string path = "model";
    check_keys(obj, path, {"transition", "reward_mean", "obs", "noise_sigma", "discount"});
    if (obj.contains("transition")) {
        const json& t = obj.at("transition");
        if (!t.is_array() || t.empty()) throw ConfigError("model.transition: expected one matrix per action");
        model.transition.clear();
        for (std::size_t a = 0; a < t.size(); ++a) {
            model.transition.push_back(get_matrix(t[a], "model.transition[" + std::to_string(a) + "]"));
        }
    }
    if (obj.contains("reward_mean")) model.reward_mean = get_matrix(obj.at("reward_mean"), "model.reward_mean");
    if (obj.contains("obs")) model.obs = get_matrix(obj.at("obs"), "model.obs");
    assign_if(obj, "noise_sigma", path, model.noise_sigma);
    assign_if(obj, "discount", path, model.discount);
    model.num_actions = static_cast<int>(model.transition.size());
    model.num_states = static_cast<int>(model.obs.rows());
    model.num_obs = static_cast<int>(model.obs.cols());
}

}  // namespace

TUpdateMode parse_t_mode(const std::string& text) {
    if (text == "averaging") return TUpdateMode::averaging;
    if (text == "literal") return TUpdateMode::literal;
    throw ConfigError("t_mode: expected 'averaging' or 'literal', got '" + text + "'");
}

QTiming parse_q_timing(const std::string& text) {
    if (text == "alg1") return QTiming::alg1;
    if (text == "eq14") return QTiming::eq14;
    throw ConfigError("q_timing: expected 'alg1' or 'eq14', got '" + text + "'");
}

std::string to_string(TUpdateMode mode) { return mode == TUpdateMode::literal ? "literal" : "averaging"; }
std::string to_string(QTiming timing) { return timing == QTiming::eq14 ? "eq14" : "alg1"; }

EstimatorSettings RunConfig::estimator_settings() const {
    EstimatorSettings s;
    s.schedule = schedule;
    s.bounds = bounds;
    s.gamma = model.discount;
    s.q_bounds = QBounds::from_reward_bound(std::max(std::abs(bounds.r_lo), std::abs(bounds.r_hi)),
                                            model.discount, q_margin);
    s.t_mode = t_mode;
    s.q_timing = q_timing;
    return s;
}

void RunConfig::validate() const {
    try {
        model.validate();
        policy.validate(model);
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (!(schedule.exponent > 0.0 && schedule.exponent <= 1.0)) {
        throw ConfigError("schedule.exponent: must lie in (0, 1]");
    }
    if (!(schedule.scale > 0.0)) throw ConfigError("schedule.scale: must be positive");
    if (!(bounds.logit_lo < bounds.logit_hi)) throw ConfigError("bounds: logit_lo must be below logit_hi");
    if (!(bounds.sigma_floor > 0.0 && bounds.sigma_floor <= bounds.sigma_ceil)) {
        throw ConfigError("bounds: need 0 < sigma_floor <= sigma_ceil");
    }
    if (!(bounds.r_lo < bounds.r_hi)) throw ConfigError("bounds: r_lo must be below r_hi");
    if (!(init.logit_halfwidth >= 0.0 && init.r_halfwidth >= 0.0)) {
        throw ConfigError("init: half-widths must be non-negative");
    }
    if (!(init.sigma >= bounds.sigma_floor && init.sigma <= bounds.sigma_ceil)) {
        throw ConfigError("init.sigma: must lie within [sigma_floor, sigma_ceil]");
    }
    if (q_margin < 0.0) throw ConfigError("q_margin: must be non-negative");
    if (steps < 1) throw ConfigError("run.steps: must be at least 1");
    if (initial_state < -1 || initial_state >= model.num_states) {
        throw ConfigError("run.initial_state: must be -1 or a valid state index");
    }
    if (log_interval < 1) throw ConfigError("run.log_interval: must be at least 1");
    if (ll_window < 1) throw ConfigError("run.ll_window: must be at least 1");
    if (eval_interval < 0) throw ConfigError("run.eval_interval: must be non-negative");
    if (eval_episodes < 1 || eval_steps < 1) throw ConfigError("run.eval_episodes/eval_steps: must be at least 1");
    if (output_dir.empty()) throw ConfigError("run.output_dir: must not be empty");
}

bool RunConfig::operator==(const RunConfig& o) const {
    return config_to_json(*this) == config_to_json(o);
}

RunConfig paper_s4_config() {
    RunConfig c;
    c.model = paper_s4_model();
    c.policy = paper_s4_policy();
    c.schedule = StepSchedule{0.4, 1.0};
    c.bounds.sigma_ceil = 9.0;
    c.init.sigma = 9.0;
    c.init.logit_halfwidth = 1.0;
    return c;
}

RunConfig config_from_json(const json& doc) {
    check_keys(doc, "", {"preset", "model", "policy", "schedule", "bounds", "init", "q_margin", "run"});
    RunConfig c;
    if (doc.contains("preset")) {
        const json& p = doc.at("preset");
        if (!p.is_string() || p.get<std::string>() != "paper-s4") {
            throw ConfigError("preset: only 'paper-s4' is known");
        }
        c = paper_s4_config();
    } else if (!doc.contains("model") || !doc.contains("policy")) {
        throw ConfigError("model/policy: required unless a preset is given");
    }
    if (doc.contains("model")) read_model(doc.at("model"), c.model);
    if (doc.contains("policy")) {
        const json& p = doc.at("policy");
        check_keys(p, "policy", {"mu"});
        if (p.contains("mu")) c.policy.mu = get_matrix(p.at("mu"), "policy.mu");
    }
    if (doc.contains("schedule")) {
        const json& s = doc.at("schedule");
        check_keys(s, "schedule", {"scale", "exponent"});
        assign_if(s, "scale", "schedule", c.schedule.scale);
        assign_if(s, "exponent", "schedule", c.schedule.exponent);
    }
    if (doc.contains("bounds")) {
        const json& b = doc.at("bounds");
        check_keys(b, "bounds", {"logit_lo", "logit_hi", "sigma_floor", "sigma_ceil", "r_lo", "r_hi"});
        assign_if(b, "logit_lo", "bounds", c.bounds.logit_lo);
        assign_if(b, "logit_hi", "bounds", c.bounds.logit_hi);
        assign_if(b, "sigma_floor", "bounds", c.bounds.sigma_floor);
        assign_if(b, "sigma_ceil", "bounds", c.bounds.sigma_ceil);
        assign_if(b, "r_lo", "bounds", c.bounds.r_lo);
        assign_if(b, "r_hi", "bounds", c.bounds.r_hi);
    }
    if (doc.contains("init")) {
        const json& i = doc.at("init");
        check_keys(i, "init", {"logit_halfwidth", "r_halfwidth", "sigma"});
        assign_if(i, "logit_halfwidth", "init", c.init.logit_halfwidth);
        assign_if(i, "r_halfwidth", "init", c.init.r_halfwidth);
        assign_if(i, "sigma", "init", c.init.sigma);
    }
    assign_if(doc, "q_margin", "", c.q_margin);
    if (doc.contains("run")) {
        const json& r = doc.at("run");
        check_keys(r, "run", {"steps", "seed", "initial_state", "log_interval", "ll_window", "eval_interval",
                              "eval_episodes", "eval_steps", "save_eval_checkpoints", "t_mode",
                              "q_timing", "output_dir"});
        assign_if(r, "steps", "run", c.steps);
        assign_if(r, "seed", "run", c.seed);
        assign_if(r, "initial_state", "run", c.initial_state);
        assign_if(r, "log_interval", "run", c.log_interval);
        assign_if(r, "ll_window", "run", c.ll_window);
        assign_if(r, "eval_interval", "run", c.eval_interval);
        assign_if(r, "eval_episodes", "run", c.eval_episodes);
        assign_if(r, "eval_steps", "run", c.eval_steps);
        assign_if(r, "save_eval_checkpoints", "run", c.save_eval_checkpoints);
        assign_if(r, "output_dir", "run", c.output_dir);
        std::string text;
        if (r.contains("t_mode")) {
            assign_if(r, "t_mode", "run", text);
            c.t_mode = parse_t_mode(text);
        }
        if (r.contains("q_timing")) {
            assign_if(r, "q_timing", "run", text);
            c.q_timing = parse_q_timing(text);
        }
    }
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c) {
    json transition = json::array();
    for (const auto& t : c.model.transition) transition.push_back(matrix_json(t));
    return json{
        {"model",
         {{"transition", transition},
          {"reward_mean", matrix_json(c.model.reward_mean)},
          {"obs", matrix_json(c.model.obs)},
          {"noise_sigma", c.model.noise_sigma},
          {"discount", c.model.discount}}},
        {"policy", {{"mu", matrix_json(c.policy.mu)}}},
        {"schedule", {{"scale", c.schedule.scale}, {"exponent", c.schedule.exponent}}},
        {"bounds",
         {{"logit_lo", c.bounds.logit_lo},
          {"logit_hi", c.bounds.logit_hi},
          {"sigma_floor", c.bounds.sigma_floor},
          {"sigma_ceil", c.bounds.sigma_ceil},
          {"r_lo", c.bounds.r_lo},
          {"r_hi", c.bounds.r_hi}}},
        {"init",
         {{"logit_halfwidth", c.init.logit_halfwidth},
          {"r_halfwidth", c.init.r_halfwidth},
          {"sigma", c.init.sigma}}},
        {"q_margin", c.q_margin},
        {"run",
         {{"steps", c.steps},
          {"seed", c.seed},
          {"initial_state", c.initial_state},
          {"log_interval", c.log_interval},
          {"ll_window", c.ll_window},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes},
          {"eval_steps", c.eval_steps},
          {"save_eval_checkpoints", c.save_eval_checkpoints},
          {"t_mode", to_string(c.t_mode)},
          {"q_timing", to_string(c.q_timing)},
          {"output_dir", c.output_dir}}},
    };
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": parse error: " + e.what());
    }
    return config_from_json(doc);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot write");
    out << config_to_json(config).dump(2) << '\n';
}

}  // namespace hmmq
