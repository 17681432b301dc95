#include "treebandit/policies.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace treebandit {

namespace {

void check_reward(int reward) {
    if (reward != 0 && reward != 1) throw std::invalid_argument("reward must be 0 or 1");
}

double beta_draw(double a, double b, Rng& rng) {
    double ga = a > 0.0 ? std::gamma_distribution<double>(a, 1.0)(rng) : 0.0;
    double gb = b > 0.0 ? std::gamma_distribution<double>(b, 1.0)(rng) : 0.0;
    double s = ga + gb;
    if (!(s > 0.0)) throw std::runtime_error("improper prior: Beta(0,0) draw");
    return ga / s;
}

}  // namespace

ArmGuard::ArmGuard(int num_actions, std::optional<int64_t> failure_threshold)
    : threshold_(failure_threshold), successes_(num_actions, 0), failures_(num_actions, 0) {
    if (num_actions < 1) throw std::invalid_argument("need at least one arm");
    if (threshold_ && *threshold_ < 1) throw std::invalid_argument("failure threshold must be positive");
}

void ArmGuard::check(int action) const {
    if (action < 0 || action >= static_cast<int>(successes_.size()))
        throw std::invalid_argument("action index out of range");
}

ArmGuard::Mode ArmGuard::mode(int action) const {
    check(action);
    if (successes_[action] > 0) return Mode::free;
    if (threshold_ && failures_[action] >= *threshold_) return Mode::eliminated;
    return Mode::forced;
}

std::optional<int> ArmGuard::forced_action() const {
    for (int a = 0; a < static_cast<int>(successes_.size()); ++a)
        if (mode(a) == Mode::forced) return a;
    return std::nullopt;
}

void ArmGuard::record(int action, int reward) {
    check(action);
    check_reward(reward);
    if (reward) ++successes_[action];
    else ++failures_[action];
}

int64_t ArmGuard::successes(int action) const {
    check(action);
    return successes_[action];
}

int64_t ArmGuard::failures(int action) const {
    check(action);
    return failures_[action];
}

void ArmGuard::set_counts(int action, int64_t successes, int64_t failures) {
    check(action);
    if (successes < 0 || failures < 0) throw std::invalid_argument("counts must be nonnegative");
    successes_[action] = successes;
    failures_[action] = failures;
}

TreeBootstrapPolicy::TreeBootstrapPolicy(SchemaPtr schema, int num_actions, TreeBootstrapConfig config)
    : config_(std::move(config)), guard_(num_actions, config_.failure_threshold) {
    if (!schema) throw std::invalid_argument("policy needs a schema");
    if (num_actions < 2) throw std::invalid_argument("need at least two actions");
    config_.cart.validate();
    for (int a = 0; a < num_actions; ++a) arms_.emplace_back(a, schema);
}

double TreeBootstrapPolicy::resample_prediction(const ActionDataset& data, const ContextVector& x,
                                                Rng& rng) const {
    int64_t n = data.size();
    std::vector<uint32_t> rows, weights;
    if (const std::vector<DatasetCell>* cells = data.cells()) {
        // Multinomial over distinct cells via conditional binomials; the joint
        // law matches drawing n rows uniformly with replacement.
        rows.reserve(cells->size());
        weights.reserve(cells->size());
        int64_t left = n;
        int64_t mass = n;
        for (const DatasetCell& c : *cells) {
            if (left == 0) break;
            uint32_t w;
            if (mass == c.count) {
                w = static_cast<uint32_t>(left);
            } else {
                double p = static_cast<double>(c.count) / static_cast<double>(mass);
                w = std::binomial_distribution<uint32_t>(static_cast<uint32_t>(left), p)(rng);
            }
            rows.push_back(c.row);
            weights.push_back(w);
            left -= w;
            mass -= c.count;
        }
    } else {
        std::vector<uint32_t> count(n, 0);
        std::uniform_int_distribution<int64_t> pick(0, n - 1);
        for (int64_t i = 0; i < n; ++i) ++count[pick(rng)];
        for (int64_t r = 0; r < n; ++r) {
            if (count[r] == 0) continue;
            rows.push_back(static_cast<uint32_t>(r));
            weights.push_back(count[r]);
        }
    }
    DecisionTree tree = fit_cart_weighted(data, rows, weights, config_.cart, rng);
    return tree.predict(x);
}

int TreeBootstrapPolicy::select(const ContextVector& x, Rng& rng) {
    validate_context(*arms_.front().schema(), x);
    if (config_.prior_injection && !injected_) {
        for (ActionDataset& arm : arms_) {
            if (arm.size() > 0) continue;
            arm.append(x, 1);
            arm.append(x, 0);
        }
        injected_ = true;
    }
    if (!config_.prior_injection) {
        if (std::optional<int> forced = guard_.forced_action()) return *forced;
    }
    std::vector<int> playable;
    std::vector<double> scores;
    for (int a = 0; a < num_actions(); ++a) {
        if (!config_.prior_injection && guard_.mode(a) == ArmGuard::Mode::eliminated) continue;
        playable.push_back(a);
        scores.push_back(resample_prediction(arms_[a], x, rng));
    }
    if (playable.empty()) throw std::runtime_error("no playable arm");
    return playable[argmax_uniform_ties(scores, rng)];
}

void TreeBootstrapPolicy::update(const ContextVector& x, int action, int reward, Rng&) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    arms_[action].append(x, reward);
    guard_.record(action, reward);
}

int64_t TreeBootstrapPolicy::arm_history_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].size();
}

TreeHeuristicPolicy::TreeHeuristicPolicy(SchemaPtr schema, int num_actions, TreeHeuristicConfig config)
    : config_(std::move(config)) {
    if (!schema) throw std::invalid_argument("policy needs a schema");
    if (num_actions < 2) throw std::invalid_argument("need at least two actions");
    config_.cart.validate();
    if (config_.prior_successes < 0.0 || config_.prior_failures < 0.0)
        throw std::invalid_argument("prior pseudo-counts must be nonnegative");
    for (int a = 0; a < num_actions; ++a)
        arms_.push_back({ActionDataset(a, schema), DecisionTree::single_leaf(schema), 0});
}

int TreeHeuristicPolicy::select(const ContextVector& x, Rng& rng) {
    std::vector<double> draws(arms_.size());
    for (std::size_t a = 0; a < arms_.size(); ++a) {
        auto [n1, n0] = arms_[a].tree.leaf_counts(x);
        draws[a] = beta_draw(static_cast<double>(n1) + config_.prior_successes,
                             static_cast<double>(n0) + config_.prior_failures, rng);
    }
    return static_cast<int>(argmax_uniform_ties(draws, rng));
}

void TreeHeuristicPolicy::update(const ContextVector& x, int action, int reward, Rng& rng) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    Arm& arm = arms_[action];
    arm.data.append(x, reward);
    arm.tree.observe(x, reward);
    int64_t n = arm.data.size();
    if (n >= 2 * arm.last_refit) {
        arm.tree = fit_cart(arm.data, config_.cart, rng);
        arm.last_refit = n;
    }
}

int64_t TreeHeuristicPolicy::arm_history_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].data.size();
}

const DecisionTree& TreeHeuristicPolicy::tree(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].tree;
}

int64_t TreeHeuristicPolicy::last_refit_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].last_refit;
}

ContextFreeTsPolicy::ContextFreeTsPolicy(int num_actions) : pulls_(num_actions, 0), wins_(num_actions, 0) {
    if (num_actions < 2) throw std::invalid_argument("need at least two actions");
}

int ContextFreeTsPolicy::select(const ContextVector&, Rng& rng) {
    std::vector<double> draws(pulls_.size());
    for (std::size_t a = 0; a < pulls_.size(); ++a)
        draws[a] = beta_draw(static_cast<double>(wins_[a]) + 1.0,
                             static_cast<double>(pulls_[a] - wins_[a]) + 1.0, rng);
    return static_cast<int>(argmax_uniform_ties(draws, rng));
}

void ContextFreeTsPolicy::update(const ContextVector&, int action, int reward, Rng&) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    check_reward(reward);
    ++pulls_[action];
    wins_[action] += reward;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd encode_checked(const ContextEncoder& enc, const ContextVector& x, int dim) {
    std::vector<double> v = enc(x);
    if (static_cast<int>(v.size()) != dim)
        throw std::invalid_argument("encoder produced " + std::to_string(v.size()) + " values, expected " +
                                    std::to_string(dim));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw std::runtime_error("numerical failure: design not positive definite");
    return llt.solve(b);
}

std::vector<int> deal_folds(std::size_t n, int folds, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, folds - 1);
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[i] = pick(rng);
    return fold;
}

}  // namespace

LinUcbPolicy::LinUcbPolicy(ContextEncoder encoder, int dim, int num_actions, LinUcbConfig config)
    : encoder_(std::move(encoder)), dim_(dim), config_(std::move(config)) {
    if (!encoder_) throw std::invalid_argument("policy needs an encoder");
    if (dim_ < 1) throw std::invalid_argument("encoded dimension must be positive");
    if (num_actions < 2) throw std::invalid_argument("need at least two actions");
    if (config_.alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    if (!(config_.ridge > 0.0)) throw std::invalid_argument("ridge weight must be positive");
    if (config_.tune_from) {
        if (*config_.tune_from < 1) throw std::invalid_argument("tune_from must be positive");
        if (config_.ridge_grid.empty()) throw std::invalid_argument("ridge grid must be non-empty");
        for (double g : config_.ridge_grid)
            if (!(g > 0.0)) throw std::invalid_argument("ridge grid values must be positive");
    }
    Arm blank;
    blank.design.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);
    for (int i = 0; i < dim_; ++i) blank.design[static_cast<std::size_t>(i) * dim_ + i] = 1.0;
    blank.response.assign(dim_, 0.0);
    blank.ridge = config_.ridge;
    arms_.assign(num_actions, blank);
}

double LinUcbPolicy::arm_score(const Arm& arm, const std::vector<double>& v) const {
    Eigen::Map<const RowMatrix> a(arm.design.data(), dim_, dim_);
    Eigen::Map<const Eigen::VectorXd> b(arm.response.data(), dim_);
    Eigen::Map<const Eigen::VectorXd> xv(v.data(), dim_);
    Eigen::MatrixXd reg = a;
    reg.diagonal().array() += arm.ridge;
    Eigen::VectorXd theta = solve_spd(reg, b);
    double mean = xv.dot(theta);
    double var = xv.dot(solve_spd(a, xv));
    double score = mean + config_.alpha * std::sqrt(std::max(0.0, var));
    if (!std::isfinite(score)) throw std::runtime_error("numerical failure: non-finite score");
    return score;
}

std::vector<double> LinUcbPolicy::scores(const ContextVector& x) const {
    Eigen::VectorXd xv = encode_checked(encoder_, x, dim_);
    std::vector<double> v(xv.data(), xv.data() + dim_);
    std::vector<double> out;
    out.reserve(arms_.size());
    for (const Arm& arm : arms_) out.push_back(arm_score(arm, v));
    return out;
}

int LinUcbPolicy::select(const ContextVector& x, Rng& rng) {
    std::vector<double> s = scores(x);
    return static_cast<int>(argmax_uniform_ties(s, rng));
}

void LinUcbPolicy::maybe_tune(Arm& arm, Rng& rng) {
    if (!config_.tune_from) return;
    int64_t n = static_cast<int64_t>(arm.ys.size());
    if (n < *config_.tune_from || n < 2 * arm.last_tune) return;
    arm.last_tune = n;

    constexpr int kFolds = 5;
    std::vector<int> fold = deal_folds(arm.ys.size(), kFolds, rng);
    double best_loss = std::numeric_limits<double>::infinity();
    double best = arm.ridge;
    for (double lambda : config_.ridge_grid) {
        double loss = 0.0;
        for (int f = 0; f < kFolds; ++f) {
            Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim_, dim_) * (1.0 + lambda);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(dim_);
            for (std::size_t i = 0; i < arm.ys.size(); ++i) {
                if (fold[i] == f) continue;
                Eigen::Map<const Eigen::VectorXd> xi(arm.xs.data() + i * dim_, dim_);
                a.noalias() += xi * xi.transpose();
                b += arm.ys[i] * xi;
            }
            Eigen::VectorXd theta = solve_spd(a, b);
            for (std::size_t i = 0; i < arm.ys.size(); ++i) {
                if (fold[i] != f) continue;
                Eigen::Map<const Eigen::VectorXd> xi(arm.xs.data() + i * dim_, dim_);
                double e = arm.ys[i] - xi.dot(theta);
                loss += e * e;
            }
        }
        if (loss < best_loss) {
            best_loss = loss;
            best = lambda;
        }
    }
    arm.ridge = best;
}

void LinUcbPolicy::update(const ContextVector& x, int action, int reward, Rng& rng) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    check_reward(reward);
    Eigen::VectorXd xv = encode_checked(encoder_, x, dim_);
    Arm& arm = arms_[action];
    Eigen::Map<RowMatrix> a(arm.design.data(), dim_, dim_);
    Eigen::Map<Eigen::VectorXd> b(arm.response.data(), dim_);
    a.noalias() += xv * xv.transpose();
    b += static_cast<double>(reward) * xv;
    arm.xs.insert(arm.xs.end(), xv.data(), xv.data() + dim_);
    arm.ys.push_back(static_cast<double>(reward));
    maybe_tune(arm, rng);
}

int64_t LinUcbPolicy::arm_history_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return static_cast<int64_t>(arms_[action].ys.size());
}

const std::vector<double>& LinUcbPolicy::design(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].design;
}

const std::vector<double>& LinUcbPolicy::response(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].response;
}

double LinUcbPolicy::ridge(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].ridge;
}

double logistic_ucb_radius(int dim, int64_t pulls, int64_t horizon, double delta) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    if (pulls < 1) throw std::invalid_argument("pull count must be positive");
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    double s = static_cast<double>(pulls);
    return std::sqrt(static_cast<double>(dim) * std::log(s) * std::log(s * static_cast<double>(horizon) / delta));
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Penalized log-loss: sum(log(1+e^z) - y z) + ridge/2 |theta|^2.
double logistic_loss(const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::vector<int>& fold, int skip, int d, double ridge,
                     const Eigen::VectorXd& theta) {
    double loss = 0.5 * ridge * theta.squaredNorm();
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (!fold.empty() && fold[i] == skip) continue;
        Eigen::Map<const Eigen::VectorXd> xi(xs.data() + i * d, d);
        double z = xi.dot(theta);
        // log(1+e^z), stable on both sides
        loss += (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - ys[i] * z;
    }
    return loss;
}

Eigen::VectorXd newton_logistic(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::vector<int>& fold, int skip, int d, double ridge, int max_iters) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
    double loss = logistic_loss(xs, ys, fold, skip, d, ridge, theta);
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::VectorXd g = ridge * theta;
        Eigen::MatrixXd h = ridge * Eigen::MatrixXd::Identity(d, d);
        for (std::size_t i = 0; i < ys.size(); ++i) {
            if (!fold.empty() && fold[i] == skip) continue;
            Eigen::Map<const Eigen::VectorXd> xi(xs.data() + i * d, d);
            double mu = sigmoid(xi.dot(theta));
            g += (mu - ys[i]) * xi;
            h.noalias() += (mu * (1.0 - mu)) * xi * xi.transpose();
        }
        Eigen::VectorXd step = solve_spd(h, g);
        double scale = 1.0;
        Eigen::VectorXd next;
        double next_loss;
        for (int half = 0;; ++half) {
            next = theta - scale * step;
            next_loss = logistic_loss(xs, ys, fold, skip, d, ridge, next);
            if (std::isfinite(next_loss) && next_loss <= loss + 1e-12) break;
            if (half >= 40) throw std::runtime_error("numerical failure: logistic fit did not converge");
            scale *= 0.5;
        }
        double moved = (scale * step).lpNorm<Eigen::Infinity>();
        theta = next;
        loss = next_loss;
        if (!theta.allFinite()) throw std::runtime_error("numerical failure: logistic fit did not converge");
        if (moved < 1e-10) return theta;
    }
    throw std::runtime_error("numerical failure: logistic fit did not converge");
}

}  // namespace

LogisticUcbPolicy::LogisticUcbPolicy(ContextEncoder encoder, int dim, int num_actions, LogisticUcbConfig config)
    : encoder_(std::move(encoder)), dim_(dim), config_(std::move(config)) {
    if (!encoder_) throw std::invalid_argument("policy needs an encoder");
    if (dim_ < 1) throw std::invalid_argument("encoded dimension must be positive");
    if (num_actions < 2) throw std::invalid_argument("need at least two actions");
    if (config_.alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    if (config_.horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    if (!(config_.ridge > 0.0)) throw std::invalid_argument("ridge weight must be positive");
    if (config_.max_newton_iters < 1) throw std::invalid_argument("iteration cap must be positive");
    if (config_.tune_from) {
        if (*config_.tune_from < 1) throw std::invalid_argument("tune_from must be positive");
        if (config_.ridge_grid.empty()) throw std::invalid_argument("ridge grid must be non-empty");
        for (double g : config_.ridge_grid)
            if (!(g > 0.0)) throw std::invalid_argument("ridge grid values must be positive");
    }
    Arm blank;
    blank.design.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);
    for (int i = 0; i < dim_; ++i) blank.design[static_cast<std::size_t>(i) * dim_ + i] = 1.0;
    blank.theta.assign(dim_, 0.0);
    blank.ridge = config_.ridge;
    arms_.assign(num_actions, blank);
}

std::vector<double> LogisticUcbPolicy::scores(const ContextVector& x) const {
    Eigen::VectorXd xv = encode_checked(encoder_, x, dim_);
    std::vector<double> out;
    out.reserve(arms_.size());
    for (const Arm& arm : arms_) {
        int64_t pulls = static_cast<int64_t>(arm.ys.size());
        if (pulls <= 1) {
            out.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        Eigen::Map<const Eigen::VectorXd> theta(arm.theta.data(), dim_);
        Eigen::Map<const RowMatrix> a(arm.design.data(), dim_, dim_);
        double mean = sigmoid(xv.dot(theta));
        double var = xv.dot(solve_spd(a, xv));
        double radius = logistic_ucb_radius(dim_, pulls, config_.horizon, config_.delta);
        double score = mean + config_.alpha * radius * std::sqrt(std::max(0.0, var));
        if (!std::isfinite(score)) throw std::runtime_error("numerical failure: non-finite score");
        out.push_back(score);
    }
    return out;
}

int LogisticUcbPolicy::select(const ContextVector& x, Rng& rng) {
    std::vector<double> s = scores(x);
    return static_cast<int>(argmax_uniform_ties(s, rng));
}

void LogisticUcbPolicy::refit(Arm& arm, Rng& rng) {
    int64_t n = static_cast<int64_t>(arm.ys.size());
    arm.last_refit = n;
    static const std::vector<int> kNoFolds;
    if (config_.tune_from && n >= *config_.tune_from) {
        constexpr int kFolds = 5;
        std::vector<int> fold = deal_folds(arm.ys.size(), kFolds, rng);
        double best_loss = std::numeric_limits<double>::infinity();
        double best = arm.ridge;
        for (double lambda : config_.ridge_grid) {
            double loss = 0.0;
            for (int f = 0; f < kFolds; ++f) {
                Eigen::VectorXd theta =
                    newton_logistic(arm.xs, arm.ys, fold, f, dim_, lambda, config_.max_newton_iters);
                for (std::size_t i = 0; i < arm.ys.size(); ++i) {
                    if (fold[i] != f) continue;
                    Eigen::Map<const Eigen::VectorXd> xi(arm.xs.data() + i * dim_, dim_);
                    double e = arm.ys[i] - sigmoid(xi.dot(theta));
                    loss += e * e;
                }
            }
            if (loss < best_loss) {
                best_loss = loss;
                best = lambda;
            }
        }
        arm.ridge = best;
    }
    Eigen::VectorXd theta = newton_logistic(arm.xs, arm.ys, kNoFolds, -1, dim_, arm.ridge,
                                            config_.max_newton_iters);
    arm.theta.assign(theta.data(), theta.data() + dim_);
}

void LogisticUcbPolicy::update(const ContextVector& x, int action, int reward, Rng& rng) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    check_reward(reward);
    Eigen::VectorXd xv = encode_checked(encoder_, x, dim_);
    Arm& arm = arms_[action];
    Eigen::Map<RowMatrix> a(arm.design.data(), dim_, dim_);
    a.noalias() += xv * xv.transpose();
    arm.xs.insert(arm.xs.end(), xv.data(), xv.data() + dim_);
    arm.ys.push_back(static_cast<double>(reward));
    int64_t n = static_cast<int64_t>(arm.ys.size());
    if (n <= config_.refit_every_until || n >= 2 * arm.last_refit) refit(arm, rng);
}

int64_t LogisticUcbPolicy::arm_history_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return static_cast<int64_t>(arms_[action].ys.size());
}

const std::vector<double>& LogisticUcbPolicy::theta(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].theta;
}

double LogisticUcbPolicy::ridge(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return arms_[action].ridge;
}

OfflineTreePolicy::OfflineTreePolicy(std::vector<DecisionTree> trees, std::vector<int64_t> class_counts)
    : trees_(std::move(trees)), counts_(std::move(class_counts)) {
    if (trees_.size() < 2) throw std::invalid_argument("need at least two actions");
    if (counts_.size() != trees_.size()) throw std::invalid_argument("one count per class required");
}

int OfflineTreePolicy::select(const ContextVector& x, Rng& rng) {
    std::vector<double> scores;
    scores.reserve(trees_.size());
    for (const DecisionTree& t : trees_) scores.push_back(t.predict(x));
    return static_cast<int>(argmax_uniform_ties(scores, rng));
}

OfflineFit offline_tree_fit(const ClassificationTable& table, int64_t holdout_size, const CartConfig& config,
                            Rng& rng) {
    int64_t n = static_cast<int64_t>(table.rows.size());
    if (holdout_size < 0) throw std::invalid_argument("holdout size must be nonnegative");
    if (holdout_size >= n) throw std::invalid_argument("holdout leaves no training rows");

    std::vector<int64_t> idx(n);
    std::iota(idx.begin(), idx.end(), int64_t{0});
    for (int64_t i = 0; i < holdout_size; ++i) {
        std::uniform_int_distribution<int64_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<char> held(n, 0);
    for (int64_t i = 0; i < holdout_size; ++i) held[idx[i]] = 1;

    OfflineFit out;
    out.holdout.schema = table.schema;
    out.holdout.class_names = table.class_names;
    out.holdout.class_counts.assign(table.num_classes(), 0);

    std::vector<ActionDataset> per_class;
    std::vector<int64_t> train_counts(table.num_classes(), 0);
    for (int k = 0; k < table.num_classes(); ++k) per_class.emplace_back(k, table.schema);
    for (int64_t i = 0; i < n; ++i) {
        if (held[i]) {
            out.holdout.rows.push_back(table.rows[i]);
            out.holdout.labels.push_back(table.labels[i]);
            ++out.holdout.class_counts[table.labels[i]];
            continue;
        }
        ++train_counts[table.labels[i]];
        for (int k = 0; k < table.num_classes(); ++k)
            per_class[k].append(table.rows[i], table.labels[i] == k ? 1 : 0);
    }

    std::vector<DecisionTree> trees;
    trees.reserve(per_class.size());
    for (const ActionDataset& ds : per_class) trees.push_back(fit_cart(ds, config, rng));
    out.policy = std::make_unique<OfflineTreePolicy>(std::move(trees), std::move(train_counts));
    return out;
}

}  // namespace treebandit
