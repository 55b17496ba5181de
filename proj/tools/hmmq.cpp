#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hmmq/checkpoint.hpp"
#include "hmmq/config.hpp"
#include "hmmq/runner.hpp"

namespace fs = std::filesystem;
using namespace hmmq;

namespace {

struct ConfigFlags {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<long long> steps;
    std::string out;
    std::string t_mode;
    std::string q_timing;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--config", f.config_path, "configuration file (JSON, comments allowed)");
    cmd->add_option("--preset", f.preset, "built-in configuration")->check(CLI::IsMember({"paper-s4"}));
    cmd->add_option("--seed", f.seed, "override run.seed");
    cmd->add_option("--steps", f.steps, "override run.steps");
    cmd->add_option("--out", f.out, "override run.output_dir");
    cmd->add_option("--t-mode", f.t_mode, "override run.t_mode")->check(CLI::IsMember({"averaging", "literal"}));
    cmd->add_option("--q-timing", f.q_timing, "override run.q_timing")->check(CLI::IsMember({"alg1", "eq14"}));
}

// --config wins over --preset; with neither, fall back to the given default file or the preset.
RunConfig resolve_config(const ConfigFlags& f, const std::optional<fs::path>& fallback = std::nullopt) {
    RunConfig c;
    if (!f.config_path.empty()) {
        c = load_config(f.config_path);
    } else if (!f.preset.empty()) {
        c = paper_s4_config();
    } else if (fallback && fs::exists(*fallback)) {
        c = load_config(*fallback);
    } else {
        c = paper_s4_config();
    }
    if (f.seed) c.seed = *f.seed;
    if (f.steps) c.steps = *f.steps;
    if (!f.out.empty()) c.output_dir = f.out;
    if (!f.t_mode.empty()) c.t_mode = parse_t_mode(f.t_mode);
    if (!f.q_timing.empty()) c.q_timing = parse_q_timing(f.q_timing);
    c.validate();
    return c;
}

int cmd_train(const ConfigFlags& f, bool quiet) {
    const RunConfig c = resolve_config(f);
    const TrainSummary s = run_train(c, quiet ? nullptr : &std::cerr);
    const auto& theta = s.final_checkpoint.session.theta;
    std::cout << "steps " << s.final_checkpoint.session.step << "\n"
              << "sigma " << theta.sigma_param << "\n"
              << "guard_trips " << s.numerical_guard_trips << "\n"
              << "metrics " << s.metrics_path.string() << "\n"
              << "checkpoint " << s.checkpoint_path.string() << "\n";
    if (!s.evaluations.empty()) {
        const EvalResult& e = s.evaluations.back();
        std::cout << "eval step " << e.step << " full " << e.full << " hmm " << e.hmm << " partial " << e.partial
                  << "\n";
    }
    return 0;
}

int cmd_eval(ConfigFlags f, const std::string& checkpoint) {
    const fs::path ckpt(checkpoint);
    // Without --out the result lands next to the checkpoint.
    if (f.out.empty()) f.out = ckpt.parent_path().empty() ? "." : ckpt.parent_path().string();
    const RunConfig c = resolve_config(f, ckpt.parent_path() / "config.json");
    const EvalResult e = run_eval(ckpt, c);
    std::cout << "step " << e.step << "\nfull " << e.full << "\nhmm " << e.hmm << "\npartial " << e.partial << "\n";
    return 0;
}

int cmd_report(const std::string& metrics, const std::string& out, const std::string& checkpoint) {
    const fs::path m(metrics);
    const fs::path dir = out.empty() ? m.parent_path() / "report" : fs::path(out);
    std::optional<fs::path> ckpt;
    if (!checkpoint.empty()) ckpt = checkpoint;
    const ReportSummary s = emit_report(m, dir, ckpt);
    for (const std::string& w : s.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "rows " << s.rows << "\nseries " << dir.string() << "\n";
    if (s.q_match) {
        std::cout << "q_match_permutation";
        for (int p : s.q_match->permutation) std::cout << ' ' << p;
        std::cout << "\nq_match_max_deviation " << s.q_match->max_deviation << "\n";
    }
    return 0;
}

int cmd_validate(const ConfigFlags& f) {
    const RunConfig c = resolve_config(f);
    std::cout << config_to_json(c).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online HMM estimation and belief Q-learning for finite POMDPs"};
    app.require_subcommand(1);

    ConfigFlags train_flags;
    bool quiet = false;
    CLI::App* train = app.add_subcommand("train", "run training and write metrics and checkpoints");
    add_config_flags(train, train_flags);
    train->add_flag("--quiet", quiet, "no progress log on stderr");

    ConfigFlags eval_flags;
    std::string eval_ckpt;
    CLI::App* eval = app.add_subcommand("eval", "evaluate the three policies of a checkpoint");
    add_config_flags(eval, eval_flags);
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

    std::string metrics, report_out, report_ckpt;
    CLI::App* report = app.add_subcommand("report", "split a metrics file into plot-ready series");
    report->add_option("--metrics", metrics, "metrics.csv written by train")->required();
    report->add_option("--out", report_out, "output directory (default: <metrics dir>/report)");
    report->add_option("--checkpoint", report_ckpt, "checkpoint for the Q table comparison");

    ConfigFlags validate_flags;
    CLI::App* validate = app.add_subcommand("validate-config", "load, check and print the expanded configuration");
    add_config_flags(validate, validate_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(train_flags, quiet);
        if (*eval) return cmd_eval(eval_flags, eval_ckpt);
        if (*report) return cmd_report(metrics, report_out, report_ckpt);
        if (*validate) return cmd_validate(validate_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
