#pragma once

// Rank-efficient Frank-Wolfe tensor completion over cyclic unfoldings.
//
// Minimizes F(X) = 0.5 * ||X(I) - T(I)||_F^2 under a latent nuclear-norm
// ball of radius beta and a global rank budget R. Each iteration picks one
// cyclic unfolding k*, takes the top-r_k* singular triplets of the gradient
// unfolded along it, and steps X <- X - gamma * S with an exact line search.
// The iterate is kept dense and also as per-mode SVD components so that
//
//   X == sum_k fold(U_k diag(sigma_k) V_k^T, (k, d)).

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcache/linalg.hpp"
#include "tcache/tensor.hpp"

namespace tcache {

enum class ModeSelection { SigmaMax, MinDim };
enum class UpdateRule { MultiRank, RankOne };

std::string to_string(ModeSelection m);
std::string to_string(UpdateRule u);

struct FwConfig {
    std::size_t rank_budget = 8;
    double beta = 1e5;
    std::size_t shift = 1;
    std::size_t max_iter = 1000;
    ModeSelection mode_selection = ModeSelection::SigmaMax;
    UpdateRule update_rule = UpdateRule::MultiRank;
    std::uint64_t seed = 0;
    // Early exit once the observed-entry RSE falls below this.
    double rse_tolerance = 1e-12;

    void validate(std::size_t order) const;
};

/// Accumulated SVD components of one mode's latent tensor.
struct ModeComponents {
    Matrix u;      // I_k x R_k
    Vector sigma;  // R_k, strictly positive
    Matrix v;      // J_k x R_k

    std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }
};

enum class StopReason {
    Running,
    BudgetExhausted,
    MaxIterations,
    RseTolerance,
    ZeroGradient,
    AllModesStalled,
    AllModesSaturated,
};

std::string to_string(StopReason r);

struct TraceRow {
    std::size_t iter = 0;
    double rse = 1.0;
    double elapsed_s = 0.0;
    int mode = -1;  // 0-based selected mode, -1 for the initial row
    double gamma = 0.0;
    double beta_gamma = 0.0;
};

struct FwState {
    FwState() = default;
    FwState(const Shape& shape, std::size_t shift);

    DenseTensor x;
    std::size_t shift = 1;
    std::vector<ModeComponents> components;
    std::vector<bool> active;
    std::vector<std::size_t> r_next;
    std::vector<TraceRow> trace;
    StopReason stop = StopReason::Running;

    std::size_t order() const { return components.size(); }
    std::size_t rank_used() const;
};

struct GradientStep {
    std::size_t mode = 0;
    SvdTriplet factors;  // top singular triplets of the unfolded gradient
    Vector weights;      // S unfolding = beta * U diag(weights) V^T
    double beta = 1.0;
    DenseTensor s;
};

/// Candidate modes in preference order (best first). Ties go to the smaller mode.
std::vector<std::size_t> rank_modes(const DenseTensor& grad, const FwConfig& cfg, const std::vector<bool>& active);

std::size_t select_mode(const DenseTensor& grad, const FwConfig& cfg, const std::vector<bool>& active);

/// nullopt when grad is identically zero.
std::optional<GradientStep> gradient_step(const DenseTensor& grad, std::size_t mode, std::size_t r, double beta,
                                          const FwConfig& cfg);

/// Closed-form gamma = max(<X(I)-T(I), S(I)> / ||S(I)||^2, 0). nullopt when S
/// vanishes on every observed cell.
std::optional<double> line_search(const DenseTensor& x, const SparseTensor& t, const DenseTensor& s);

/// X <- X - gamma*S and append (-U, gamma*beta*weights, V) to the selected mode.
void apply_update(FwState& state, const GradientStep& step, double gamma);

struct RankBudget {
    enum class Limit { None, ModeSaturated, BudgetExhausted };
    std::size_t r = 0;
    Limit limit = Limit::None;
};

/// r_k = min{I_k - R_k, J_k - R_k, R - sum_i R_i}. Prunes k from the active set
/// when it is saturated.
RankBudget update_rank_budget(FwState& state, std::size_t mode, const FwConfig& cfg);

double observed_rse(const DenseTensor& x, const SparseTensor& t);

/// Sum over modes of fold(U_k diag(sigma_k) V_k^T).
DenseTensor reconstruct(const FwState& state);

using IterationObserver = std::function<void(const FwState&)>;

FwState complete(const SparseTensor& t, const FwConfig& cfg, const IterationObserver& observer = {});

struct BetaInvarianceReport {
    bool invariant = false;
    bool same_modes = false;
    double max_x_deviation = 0.0;           // relative, elementwise
    double max_beta_gamma_deviation = 0.0;  // relative, per iteration
    std::vector<FwState> runs;
};

BetaInvarianceReport beta_invariance(const SparseTensor& t, const FwConfig& cfg, const std::vector<double>& betas,
                                     double tolerance = 1e-8);

bool beta_invariance_check(const SparseTensor& t, const FwConfig& cfg, const std::vector<double>& betas,
                           double tolerance = 1e-8);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace tcache
