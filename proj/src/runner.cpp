#include "hmmq/runner.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "hmmq/baselines.hpp"

namespace hmmq {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::optional<double> opt_cell(const std::string& cell, std::size_t lineno) {
    if (cell.empty()) return std::nullopt;
    char* end = nullptr;
    const double x = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
        throw std::runtime_error("metrics line " + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
    return x;
}

double req_cell(const std::string& cell, std::size_t lineno) {
    const auto v = opt_cell(cell, lineno);
    if (!v) throw std::runtime_error("metrics line " + std::to_string(lineno) + ": missing value");
    return *v;
}

/// Appends complete lines and flushes after each one.
class LineWriter {
public:
    LineWriter(const fs::path& path, bool append) : out_(path, append ? std::ios::app : std::ios::trunc) {
        if (!out_) throw std::runtime_error(path.string() + ": cannot write");
    }
    void line(const std::string& text) {
        out_ << text << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

}  // namespace

std::string metrics_header() {
    return "step,loglik_ma,sigma,max_q_hmm,max_q_full,max_q_partial,eval_hmm,eval_full,eval_partial";
}

std::string format_metrics_row(const MetricsRow& r) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
    return std::to_string(r.step) + "," + fmt17(r.loglik_ma) + "," + fmt17(r.sigma) + "," +
           fmt17(r.max_q_hmm) + "," + fmt17(r.max_q_full) + "," + fmt17(r.max_q_partial) + "," +
           opt(r.eval_hmm) + "," + opt(r.eval_full) + "," + opt(r.eval_partial);
}

std::vector<MetricsRow> read_metrics(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::vector<MetricsRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != metrics_header()) throw std::runtime_error("metrics line 1: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 9) {
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": expected 9 columns");
        }
        MetricsRow r;
        r.step = static_cast<long long>(req_cell(cells[0], lineno));
        r.loglik_ma = req_cell(cells[1], lineno);
        r.sigma = req_cell(cells[2], lineno);
        r.max_q_hmm = req_cell(cells[3], lineno);
        r.max_q_full = req_cell(cells[4], lineno);
        r.max_q_partial = req_cell(cells[5], lineno);
        r.eval_hmm = opt_cell(cells[6], lineno);
        r.eval_full = opt_cell(cells[7], lineno);
        r.eval_partial = opt_cell(cells[8], lineno);
        if (!rows.empty() && r.step <= rows.back().step) {
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": step not increasing");
        }
        rows.push_back(r);
    }
    return rows;
}

EvalResult evaluate_snapshot(const Checkpoint& ckpt, const RunConfig& config) {
    EvalResult res;
    res.step = ckpt.session.step;
    const auto episodes = config.eval_episodes;
    const auto steps = config.eval_steps;
    const auto stream = [&](const char* name) {
        return RandomStream::derive(config.seed, name, static_cast<std::uint64_t>(ckpt.session.step));
    };
    RandomStream full_rng = stream("evaluation/full");
    RandomStream hmm_rng = stream("evaluation/hmm");
    RandomStream partial_rng = stream("evaluation/partial");
    res.full = evaluate_policy(config.model, StateGreedyPolicy{ckpt.q_full}, episodes, steps, full_rng);
    res.hmm = evaluate_policy(config.model, BeliefGreedyPolicy{freeze(ckpt.session)}, episodes, steps, hmm_rng);
    res.partial = evaluate_policy(config.model, ObsGreedyPolicy{ckpt.q_partial}, episodes, steps, partial_rng);
    return res;
}

Trainer::Trainer(RunConfig config) : config_(std::move(config)), settings_(config_.estimator_settings()) {
    config_.validate();
    RunStreams streams = RunStreams::from_seed(config_.seed);
    const PomdpModel& m = config_.model;
    ckpt_.session = HmmSession::initialize(m.num_states, m.num_actions, m.num_obs, config_.init,
                                           streams.estimator_init);
    ckpt_.q_full = MatrixXd::Zero(m.num_states, m.num_actions);
    ckpt_.q_partial = MatrixXd::Zero(m.num_obs, m.num_actions);
    ckpt_.env_state = config_.initial_state >= 0 ? config_.initial_state
                                                 : streams.environment.uniform_index(m.num_states);
    ckpt_.env_obs = streams.environment.categorical(m.obs.row(ckpt_.env_state).transpose());
    ckpt_.rng_environment = streams.environment;
    ckpt_.rng_estimator_init = streams.estimator_init;
    ckpt_.rng_evaluation = streams.evaluation;
}

Trainer::Trainer(RunConfig config, Checkpoint checkpoint)
    : config_(std::move(config)), settings_(config_.estimator_settings()), ckpt_(std::move(checkpoint)) {
    config_.validate();
}

double Trainer::step() {
    const PomdpModel& m = config_.model;
    RandomStream& rng = ckpt_.rng_environment;
    const int state = ckpt_.env_state;
    const int obs = ckpt_.env_obs;

    // Same draw order as sample_step: observation (already drawn), action, reward, next state.
    ExtendedObs y;
    y.obs = obs;
    y.action = rng.categorical(config_.policy.mu.row(obs).transpose());
    y.reward = m.reward_mean(y.action, state) + (m.noise_sigma > 0.0 ? m.noise_sigma * rng.normal() : 0.0);
    const int next_state = rng.categorical(m.transition[y.action].row(state).transpose());
    const int next_obs = rng.categorical(m.obs.row(next_state).transpose());

    // The baselines and the environment advance even if the HMM step is rejected.
    const double epsilon = settings_.schedule.at(ckpt_.session.step + 1);
    ckpt_.q_full = q_learning_step(ckpt_.q_full, state, y.action, y.reward, next_state, epsilon, m.discount);
    ckpt_.q_partial = partial_q_learning_step(ckpt_.q_partial, obs, y.action, y.reward, next_obs, epsilon,
                                              m.discount);
    ckpt_.env_state = next_state;
    ckpt_.env_obs = next_obs;
    return algorithm1_step(ckpt_.session, y, settings_, config_.policy).log_likelihood;
}

TrainSummary run_train(const RunConfig& config, std::ostream* log) {
    config.validate();
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    save_config(config, dir / "config.json");

    TrainSummary summary;
    summary.metrics_path = dir / "metrics.csv";
    summary.checkpoint_path = dir / "checkpoint.txt";
    LineWriter metrics(summary.metrics_path, false);
    LineWriter timing(dir / "timing.csv", false);
    metrics.line(metrics_header());
    timing.line("step,wall_seconds");
    if (config.save_eval_checkpoints) fs::create_directories(dir / "checkpoints");

    Trainer trainer(config);
    std::deque<double> window;
    double window_sum = 0.0;
    const auto start = std::chrono::steady_clock::now();

    for (long long n = 1; n <= config.steps; ++n) {
        double ll = 0.0;
        try {
            ll = trainer.step();
        } catch (const DegenerateLikelihood& e) {
            // The step is skipped; the environment has already advanced.
            ++summary.numerical_guard_trips;
            if (log) *log << "step " << n << ": numerical guard: " << e.what() << '\n';
            continue;
        }
        window.push_back(ll);
        window_sum += ll;
        if (static_cast<int>(window.size()) > config.ll_window) {
            window_sum -= window.front();
            window.pop_front();
        }

        const bool eval_now = config.eval_interval > 0 && n % config.eval_interval == 0;
        if (n % config.log_interval != 0 && !eval_now && n != config.steps) continue;

        const Checkpoint& ckpt = trainer.checkpoint();
        MetricsRow row;
        row.step = n;
        row.loglik_ma = window_sum / static_cast<double>(window.size());
        row.sigma = ckpt.session.theta.sigma_param;
        row.max_q_hmm = ckpt.session.q.maxCoeff();
        row.max_q_full = ckpt.q_full.maxCoeff();
        row.max_q_partial = ckpt.q_partial.maxCoeff();
        if (eval_now) {
            const EvalResult ev = evaluate_snapshot(ckpt, config);
            row.eval_hmm = ev.hmm;
            row.eval_full = ev.full;
            row.eval_partial = ev.partial;
            summary.evaluations.push_back(ev);
            if (config.save_eval_checkpoints) {
                save_checkpoint(ckpt, dir / "checkpoints" / ("checkpoint_" + std::to_string(n) + ".txt"));
            }
        }
        metrics.line(format_metrics_row(row));
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        timing.line(std::to_string(n) + "," + fmt17(wall));
        if (log && eval_now) {
            *log << "step " << n << " loglik_ma " << row.loglik_ma << " sigma " << row.sigma << " eval(full/hmm/partial) "
                 << *row.eval_full << " / " << *row.eval_hmm << " / " << *row.eval_partial << '\n';
        }
    }

    summary.final_checkpoint = trainer.checkpoint();
    save_checkpoint(summary.final_checkpoint, summary.checkpoint_path);
    return summary;
}

EvalResult run_eval(const fs::path& checkpoint_path, const RunConfig& config) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const EvalResult res = evaluate_snapshot(ckpt, config);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    const fs::path out = dir / "eval.csv";
    const bool fresh = !fs::exists(out);
    LineWriter w(out, true);
    if (fresh) w.line("step,eval_full,eval_hmm,eval_partial");
    w.line(std::to_string(res.step) + "," + fmt17(res.full) + "," + fmt17(res.hmm) + "," + fmt17(res.partial));
    return res;
}

ReportSummary emit_report(const fs::path& metrics_path, const fs::path& out_dir,
                          const std::optional<fs::path>& checkpoint_path) {
    const std::vector<MetricsRow> rows = read_metrics(metrics_path);
    fs::create_directories(out_dir);
    ReportSummary summary;
    summary.rows = rows.size();
    if (rows.empty()) summary.warnings.push_back("metrics file has no data rows");

    LineWriter ll(out_dir / "series_loglik.csv", false);
    LineWriter sigma(out_dir / "series_sigma.csv", false);
    LineWriter maxq(out_dir / "series_max_q.csv", false);
    LineWriter reward(out_dir / "series_mean_reward.csv", false);
    ll.line("step,loglik_ma");
    sigma.line("step,sigma");
    maxq.line("step,max_q_full,max_q_partial,max_q_hmm");
    reward.line("step,eval_full,eval_partial,eval_hmm");
    for (const MetricsRow& r : rows) {
        const std::string step = std::to_string(r.step);
        ll.line(step + "," + fmt17(r.loglik_ma));
        sigma.line(step + "," + fmt17(r.sigma));
        maxq.line(step + "," + fmt17(r.max_q_full) + "," + fmt17(r.max_q_partial) + "," + fmt17(r.max_q_hmm));
        if (r.eval_full && r.eval_hmm && r.eval_partial) {
            reward.line(step + "," + fmt17(*r.eval_full) + "," + fmt17(*r.eval_partial) + "," +
                        fmt17(*r.eval_hmm));
        }
    }

    std::ofstream text(out_dir / "summary.txt");
    text << "rows " << rows.size() << '\n';
    if (!rows.empty()) {
        const MetricsRow& last = rows.back();
        text << "final_step " << last.step << '\n'
             << "final_loglik_ma " << fmt17(last.loglik_ma) << '\n'
             << "final_sigma " << fmt17(last.sigma) << '\n';
    }
    if (checkpoint_path) {
        const Checkpoint ckpt = load_checkpoint(*checkpoint_path);
        summary.q_match = best_permutation_match(ckpt.session.q, ckpt.q_full);
        text << "q_match_permutation";
        for (int p : summary.q_match->permutation) text << ' ' << p;
        text << "\nq_match_max_deviation " << fmt17(summary.q_match->max_deviation) << '\n';
        const MatrixXd permuted = permute_rows(ckpt.session.q, summary.q_match->permutation);
        LineWriter qcmp(out_dir / "q_comparison.csv", false);
        qcmp.line("state,action,q_hmm_permuted,q_full");
        for (Eigen::Index s = 0; s < permuted.rows(); ++s) {
            for (Eigen::Index a = 0; a < permuted.cols(); ++a) {
                qcmp.line(std::to_string(s) + "," + std::to_string(a) + "," + fmt17(permuted(s, a)) + "," +
                          fmt17(ckpt.q_full(s, a)));
            }
        }
    }
    for (const auto& w : summary.warnings) text << "warning " << w << '\n';
    return summary;
}

}  // namespace hmmq
