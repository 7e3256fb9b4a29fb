#include "tcache/frank_wolfe.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace tcache {

std::string to_string(ModeSelection m) { return m == ModeSelection::SigmaMax ? "sigma" : "min-dim"; }

std::string to_string(UpdateRule u) { return u == UpdateRule::MultiRank ? "multi" : "rank1"; }

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::Running: return "running";
        case StopReason::BudgetExhausted: return "budget-exhausted";
        case StopReason::MaxIterations: return "max-iterations";
        case StopReason::RseTolerance: return "rse-tolerance";
        case StopReason::ZeroGradient: return "zero-gradient";
        case StopReason::AllModesStalled: return "all-modes-stalled";
        case StopReason::AllModesSaturated: return "all-modes-saturated";
    }
    return "unknown";
}

void FwConfig::validate(std::size_t order) const {
    if (rank_budget < 1) throw std::invalid_argument("rank budget must be >= 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be a positive finite number");
    if (shift < 1 || shift >= order) {
        throw std::invalid_argument("shift must lie in 1.." + std::to_string(order - 1) + ", got " +
                                    std::to_string(shift));
    }
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

FwState::FwState(const Shape& shape, std::size_t shift_)
    : x(shape), shift(shift_), components(shape.order()), active(shape.order(), true), r_next(shape.order(), 0) {
    for (std::size_t k = 0; k < shape.order(); ++k) {
        const UnfoldLayout layout = unfold_layout(shape, {k, shift});
        components[k].u.resize(static_cast<Eigen::Index>(layout.rows), 0);
        components[k].v.resize(static_cast<Eigen::Index>(layout.cols), 0);
        components[k].sigma.resize(0);
    }
}

std::size_t FwState::rank_used() const {
    std::size_t total = 0;
    for (const auto& c : components) total += c.rank();
    return total;
}

std::vector<std::size_t> rank_modes(const DenseTensor& grad, const FwConfig& cfg, const std::vector<bool>& active) {
    std::vector<std::size_t> modes;
    for (std::size_t k = 0; k < active.size(); ++k)
        if (active[k]) modes.push_back(k);
    if (modes.empty()) throw std::invalid_argument("mode selection over an empty active set");

    std::vector<double> score(active.size(), 0.0);
    for (std::size_t k : modes) {
        if (cfg.mode_selection == ModeSelection::SigmaMax) {
            score[k] = dominant_sigma(unfold(grad, {k, cfg.shift}));
        } else {
            const UnfoldLayout layout = unfold_layout(grad.shape(), {k, cfg.shift});
            score[k] = -static_cast<double>(std::min(layout.rows, layout.cols));
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    return modes;
}

std::size_t select_mode(const DenseTensor& grad, const FwConfig& cfg, const std::vector<bool>& active) {
    return rank_modes(grad, cfg, active).front();
}

std::optional<GradientStep> gradient_step(const DenseTensor& grad, std::size_t mode, std::size_t r, double beta,
                                          const FwConfig& cfg) {
    const UnfoldSpec spec{mode, cfg.shift};
    const UnfoldLayout layout = unfold_layout(grad.shape(), spec);
    if (r < 1 || r > std::min(layout.rows, layout.cols)) {
        throw std::out_of_range("gradient_step: rank " + std::to_string(r) + " outside 1.." +
                                std::to_string(std::min(layout.rows, layout.cols)));
    }
    if (grad.all_zero()) return std::nullopt;

    const std::size_t depth = cfg.update_rule == UpdateRule::RankOne ? 1 : r;
    SvdTriplet f = truncated_svd(unfold(grad, spec), static_cast<Eigen::Index>(depth), cfg.seed);

    // Components with numerically zero weight would be appended with sigma = 0.
    Eigen::Index keep = f.rank();
    while (keep > 1 && f.sigma(keep - 1) <= 1e-14 * f.sigma(0)) --keep;
    if (f.sigma(0) <= 0.0) return std::nullopt;
    if (keep < f.rank()) {
        f.u.conservativeResize(Eigen::NoChange, keep);
        f.v.conservativeResize(Eigen::NoChange, keep);
        f.sigma.conservativeResize(keep);
    }

    GradientStep step;
    step.mode = mode;
    step.beta = beta;
    if (cfg.update_rule == UpdateRule::RankOne) {
        step.weights = Vector::Ones(1);
    } else {
        step.weights = f.sigma / f.sigma.sum();
    }
    step.factors = std::move(f);
    Matrix s = beta * (step.factors.u * step.weights.asDiagonal() * step.factors.v.transpose());
    step.s = fold(s, spec, grad.shape());
    return step;
}

std::optional<double> line_search(const DenseTensor& x, const SparseTensor& t, const DenseTensor& s) {
    if (x.shape() != t.shape() || s.shape() != t.shape()) throw ShapeError("line_search: shape mismatch");
    double a = 0.0;
    double b = 0.0;
    const auto pos = t.positions();
    const auto tv = t.values();
    for (std::size_t e = 0; e < pos.size(); ++e) {
        const double sv = s[pos[e]];
        a += sv * sv;
        b += (x[pos[e]] - tv[e]) * sv;
    }
    if (a == 0.0) return std::nullopt;
    return std::max(b / a, 0.0);
}

void apply_update(FwState& state, const GradientStep& step, double gamma) {
    if (gamma < 0.0 || !std::isfinite(gamma)) {
        throw std::runtime_error("apply_update: invalid step size " + std::to_string(gamma));
    }
    if (gamma == 0.0) return;
    state.x.axpy(-gamma, step.s);
    if (!state.x.all_finite()) {
        throw std::runtime_error("apply_update: iterate became non-finite (mode " + std::to_string(step.mode + 1) +
                                 ", gamma " + std::to_string(gamma) + ", beta " + std::to_string(step.beta) + ")");
    }
    ModeComponents& c = state.components.at(step.mode);
    const Eigen::Index old = c.u.cols();
    const Eigen::Index add = step.factors.u.cols();
    c.u.conservativeResize(Eigen::NoChange, old + add);
    c.u.rightCols(add) = -step.factors.u;
    c.v.conservativeResize(Eigen::NoChange, old + add);
    c.v.rightCols(add) = step.factors.v;
    c.sigma.conservativeResize(old + add);
    c.sigma.tail(add) = (gamma * step.beta) * step.weights;
}

RankBudget update_rank_budget(FwState& state, std::size_t mode, const FwConfig& cfg) {
    const UnfoldLayout layout = unfold_layout(state.x.shape(), {mode, state.shift});
    const auto used = static_cast<long long>(state.rank_used());
    const auto mode_rank = static_cast<long long>(state.components.at(mode).rank());
    const long long global = static_cast<long long>(cfg.rank_budget) - used;
    const long long local =
        std::min(static_cast<long long>(layout.rows), static_cast<long long>(layout.cols)) - mode_rank;

    RankBudget out;
    if (global <= 0) {
        out.limit = RankBudget::Limit::BudgetExhausted;
    } else if (local <= 0) {
        out.limit = RankBudget::Limit::ModeSaturated;
        state.active[mode] = false;
    } else {
        out.r = static_cast<std::size_t>(std::min(global, local));
    }
    state.r_next[mode] = out.r;
    return out;
}

double observed_rse(const DenseTensor& x, const SparseTensor& t) {
    double num = 0.0;
    double den = 0.0;
    const auto pos = t.positions();
    const auto tv = t.values();
    for (std::size_t e = 0; e < pos.size(); ++e) {
        const double r = x[pos[e]] - tv[e];
        num += r * r;
        den += tv[e] * tv[e];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
    return std::sqrt(num / den);
}

DenseTensor reconstruct(const FwState& state) {
    DenseTensor out(state.x.shape());
    for (std::size_t k = 0; k < state.components.size(); ++k) {
        const ModeComponents& c = state.components[k];
        if (c.rank() == 0) continue;
        out.axpy(1.0, fold(c.u * c.sigma.asDiagonal() * c.v.transpose(), {k, state.shift}, out.shape()));
    }
    return out;
}

FwState complete(const SparseTensor& t, const FwConfig& cfg, const IterationObserver& observer) {
    cfg.validate(t.shape().order());
    if (t.nnz() == 0) throw std::invalid_argument("complete: observed tensor has no entries");

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    FwState state(t.shape(), cfg.shift);
    state.trace.push_back(TraceRow{0, 1.0, 0.0, -1, 0.0, 0.0});

    DenseTensor grad(t.shape());
    const auto pos = t.positions();
    const auto tv = t.values();

    for (std::size_t n = 1; n <= cfg.max_iter; ++n) {
        grad.fill(0.0);
        bool nonzero = false;
        for (std::size_t e = 0; e < pos.size(); ++e) {
            const double g = state.x[pos[e]] - tv[e];
            grad[pos[e]] = g;
            nonzero = nonzero || g != 0.0;
        }
        if (!nonzero) {
            state.stop = StopReason::ZeroGradient;
            break;
        }
        if (state.rank_used() >= cfg.rank_budget) {
            state.stop = StopReason::BudgetExhausted;
            break;
        }
        if (std::none_of(state.active.begin(), state.active.end(), [](bool a) { return a; })) {
            state.stop = StopReason::AllModesSaturated;
            break;
        }

        bool appended = false;
        for (std::size_t k : rank_modes(grad, cfg, state.active)) {
            const RankBudget budget = update_rank_budget(state, k, cfg);
            if (budget.limit == RankBudget::Limit::BudgetExhausted) {
                state.stop = StopReason::BudgetExhausted;
                break;
            }
            if (budget.limit == RankBudget::Limit::ModeSaturated) continue;

            auto step = gradient_step(grad, k, budget.r, cfg.beta, cfg);
            if (!step) {
                state.stop = StopReason::ZeroGradient;
                break;
            }
            const std::optional<double> gamma = line_search(state.x, t, step->s);
            if (!gamma || *gamma == 0.0) continue;  // stall: try the next mode

            apply_update(state, *step, *gamma);
            const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
            state.trace.push_back(
                TraceRow{n, observed_rse(state.x, t), elapsed, static_cast<int>(k), *gamma, *gamma * cfg.beta});
            appended = true;
            break;
        }
        if (state.stop != StopReason::Running) break;
        if (!appended) {
            const bool any = std::any_of(state.active.begin(), state.active.end(), [](bool a) { return a; });
            state.stop = any ? StopReason::AllModesStalled : StopReason::AllModesSaturated;
            break;
        }
        if (observer) observer(state);
        if (state.trace.back().rse < cfg.rse_tolerance) {
            state.stop = StopReason::RseTolerance;
            break;
        }
    }
    if (state.stop == StopReason::Running) state.stop = StopReason::MaxIterations;
    return state;
}

namespace {

double relative_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

BetaInvarianceReport beta_invariance(const SparseTensor& t, const FwConfig& cfg, const std::vector<double>& betas,
                                     double tolerance) {
    if (betas.size() < 2) throw std::invalid_argument("beta invariance needs at least two beta values");
    BetaInvarianceReport report;
    for (double beta : betas) {
        if (!(beta > 0.0)) throw std::invalid_argument("beta values must be positive");
        FwConfig c = cfg;
        c.beta = beta;
        report.runs.push_back(complete(t, c));
    }
    report.same_modes = true;
    const FwState& ref = report.runs.front();
    for (std::size_t r = 1; r < report.runs.size(); ++r) {
        const FwState& run = report.runs[r];
        if (run.trace.size() != ref.trace.size()) {
            report.same_modes = false;
            continue;
        }
        for (std::size_t i = 0; i < ref.trace.size(); ++i) {
            if (run.trace[i].mode != ref.trace[i].mode) report.same_modes = false;
            report.max_beta_gamma_deviation = std::max(
                report.max_beta_gamma_deviation, relative_gap(run.trace[i].beta_gamma, ref.trace[i].beta_gamma));
        }
        for (std::size_t i = 0; i < ref.x.size(); ++i) {
            report.max_x_deviation = std::max(report.max_x_deviation, relative_gap(run.x[i], ref.x[i]));
        }
    }
    report.invariant = report.same_modes && report.max_x_deviation <= tolerance &&
                       report.max_beta_gamma_deviation <= tolerance;
    return report;
}

bool beta_invariance_check(const SparseTensor& t, const FwConfig& cfg, const std::vector<double>& betas,
                           double tolerance) {
    return beta_invariance(t, cfg, betas, tolerance).invariant;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iter,rse,elapsed_s,mode,gamma,beta_gamma\n";
    out << std::setprecision(17);
    for (const TraceRow& row : trace) {
        out << row.iter << ',' << row.rse << ',' << row.elapsed_s << ',' << (row.mode + 1) << ',' << row.gamma << ','
            << row.beta_gamma << '\n';
    }
}

}  // namespace tcache
