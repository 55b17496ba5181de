#include "hmmq/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace hmmq {

std::string hex_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

namespace {

double parse_double(const std::string& token, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw CheckpointError(key + ": cannot parse number '" + token + "'");
    }
    return x;
}

std::string matrix_text(const MatrixXd& m) {
    std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out += " " + hex_double(m(r, c));
    }
    return out;
}

MatrixXd parse_matrix(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    long long rows = -1;
    long long cols = -1;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw CheckpointError(key + ": bad matrix header");
    MatrixXd m(rows, cols);
    for (long long r = 0; r < rows; ++r) {
        for (long long c = 0; c < cols; ++c) {
            std::string tok;
            if (!(is >> tok)) throw CheckpointError(key + ": too few matrix entries");
            m(r, c) = parse_double(tok, key);
        }
    }
    std::string extra;
    if (is >> extra) throw CheckpointError(key + ": too many matrix entries");
    return m;
}

VectorXd as_vector(const MatrixXd& m, const std::string& key) {
    if (m.cols() != 1) throw CheckpointError(key + ": expected a column vector");
    return m.col(0);
}

class Fields {
public:
    explicit Fields(const std::string& text) {
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) {
                throw CheckpointError("line " + std::to_string(lineno) + ": expected 'key = value'");
            }
            values_[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }

    const std::string& raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw CheckpointError("missing key '" + key + "'");
        return it->second;
    }
    double real(const std::string& key) const { return parse_double(raw(key), key); }
    long long integer(const std::string& key) const {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(raw(key), &pos);
            if (pos != raw(key).size()) throw std::invalid_argument("trailing text");
            return v;
        } catch (const std::logic_error&) {
            throw CheckpointError(key + ": expected an integer");
        }
    }
    MatrixXd matrix(const std::string& key) const { return parse_matrix(raw(key), key); }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
    return session == o.session && q_full == o.q_full && q_partial == o.q_partial &&
           env_state == o.env_state && env_obs == o.env_obs && rng_environment == o.rng_environment &&
           rng_estimator_init == o.rng_estimator_init && rng_evaluation == o.rng_evaluation;
}

std::string checkpoint_to_text(const Checkpoint& c) {
    const HmmSession& s = c.session;
    std::ostringstream os;
    os << "# hmmq checkpoint\n";
    os << "format = 1\n";
    os << "step = " << s.step << '\n';
    os << "theta.p_logits = " << matrix_text(s.theta.p_logits) << '\n';
    os << "theta.o_logits = " << matrix_text(s.theta.o_logits) << '\n';
    os << "theta.r_values = " << matrix_text(s.theta.r_values) << '\n';
    os << "theta.sigma = " << hex_double(s.theta.sigma_param) << '\n';
    os << "filter.belief = " << matrix_text(s.filter.belief) << '\n';
    os << "filter.jacobian = " << matrix_text(s.filter.jacobian) << '\n';
    os << "q = " << matrix_text(s.q) << '\n';
    os << "t.actions = " << s.t.size() << '\n';
    for (std::size_t a = 0; a < s.t.size(); ++a) os << "t." << a << " = " << matrix_text(s.t[a]) << '\n';
    os << "posterior_prev = " << matrix_text(s.posterior_prev) << '\n';
    os << "reward_prev = " << hex_double(s.reward_prev) << '\n';
    os << "action_prev = " << s.action_prev << '\n';
    os << "q_full = " << matrix_text(c.q_full) << '\n';
    os << "q_partial = " << matrix_text(c.q_partial) << '\n';
    os << "env.state = " << c.env_state << '\n';
    os << "env.obs = " << c.env_obs << '\n';
    os << "rng.environment = " << c.rng_environment.serialize() << '\n';
    os << "rng.estimator_init = " << c.rng_estimator_init.serialize() << '\n';
    os << "rng.evaluation = " << c.rng_evaluation.serialize() << '\n';
    return os.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
    const Fields f(text);
    if (f.integer("format") != 1) throw CheckpointError("unsupported checkpoint format");
    Checkpoint c;
    HmmSession& s = c.session;
    s.step = f.integer("step");
    s.theta.p_logits = f.matrix("theta.p_logits");
    s.theta.o_logits = f.matrix("theta.o_logits");
    s.theta.r_values = f.matrix("theta.r_values");
    s.theta.sigma_param = f.real("theta.sigma");
    s.filter.belief = as_vector(f.matrix("filter.belief"), "filter.belief");
    s.filter.jacobian = f.matrix("filter.jacobian");
    s.q = f.matrix("q");
    const long long actions = f.integer("t.actions");
    if (actions < 1) throw CheckpointError("t.actions: must be positive");
    for (long long a = 0; a < actions; ++a) s.t.push_back(f.matrix("t." + std::to_string(a)));
    s.posterior_prev = as_vector(f.matrix("posterior_prev"), "posterior_prev");
    s.reward_prev = f.real("reward_prev");
    s.action_prev = static_cast<int>(f.integer("action_prev"));
    c.q_full = f.matrix("q_full");
    c.q_partial = f.matrix("q_partial");
    c.env_state = static_cast<int>(f.integer("env.state"));
    c.env_obs = static_cast<int>(f.integer("env.obs"));
    c.rng_environment.deserialize(f.raw("rng.environment"));
    c.rng_estimator_init.deserialize(f.raw("rng.estimator_init"));
    c.rng_evaluation.deserialize(f.raw("rng.evaluation"));

    const Eigen::Index n = s.theta.p_logits.rows();
    const Eigen::Index params = s.theta.layout().size();
    if (s.theta.p_logits.cols() != n || s.theta.o_logits.rows() != n || s.theta.r_values.cols() != n ||
        s.theta.r_values.rows() != actions || s.filter.belief.size() != n ||
        s.filter.jacobian.rows() != n || s.filter.jacobian.cols() != params || s.q.rows() != n ||
        s.q.cols() != actions || s.posterior_prev.size() != n || c.q_full.rows() != n ||
        c.q_partial.rows() != s.theta.o_logits.cols()) {
        throw CheckpointError("inconsistent table shapes");
    }
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw CheckpointError(path.string() + ": cannot write");
        out << checkpoint_to_text(ckpt);
        if (!out) throw CheckpointError(path.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError(path.string() + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_text(buf.str());
}

}  // namespace hmmq
