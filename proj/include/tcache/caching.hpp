#pragma once

// Most-popular placement on predicted shares, hit-rate accounting, and the
// online slot-by-slot loop: observe the last tau slots, optionally complete
// the window tensor, forecast the next slot, place, and score the placement
// against that slot's realized demand.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tcache/frank_wolfe.hpp"
#include "tcache/prediction.hpp"
#include "tcache/tensor.hpp"

namespace tcache {

struct CachePlan {
    std::vector<double> placement;  // c(f) in [0, 1]
    std::size_t capacity = 0;

    bool cached(std::size_t f) const { return placement.at(f) > 0.0; }
    /// Integral plans hold exactly `capacity` ones; fractional plans sum to it.
    bool feasible(double tol = 1e-9) const;
};

/// Caches the `capacity` files with the largest shares, ties to the smaller index.
CachePlan mpc_place(const Vector& shares, std::size_t capacity);

struct HitRate {
    double rate = 0.0;
    double hits = 0.0;
    double requests = 0.0;
    bool zero_demand = false;
};

/// H_bt = sum_{f,i} D(f,i,b,t) c(f) / sum_{f,i} D(f,i,b,t) on an F x F x N_BS slot.
HitRate hit_rate(const DenseTensor& slot, const CachePlan& plan, std::size_t bs);

struct OnlineConfig {
    std::size_t window = 10;  // tau
    std::size_t capacity = 32;
    PredictorConfig predictor;  // order used by both predictor modes
    std::vector<PredictorMode> predictors = {PredictorMode::LeastSquares, PredictorMode::Mean};
    bool raw = true;         // predict from the observed window as is
    bool completion = true;  // predict from the completed window, once per rank
    std::vector<std::size_t> ranks = {8};
    FwConfig solver;  // rank_budget is overridden per rank
    AggregationAxis axis = AggregationAxis::Recommended;
    bool oracle = true;  // top-L of the realized next slot
};

struct SlotOutcome {
    std::size_t slot = 0;  // 0-based index of the scored slot
    std::size_t bs = 0;
    std::string method;
    std::size_t rank = 0;  // 0 when no completion is involved
    HitRate hit;
};

struct MethodSummary {
    std::string method;
    std::size_t rank = 0;
    double avg_hit_rate = 0.0;
    std::size_t scored = 0;
    std::size_t zero_demand = 0;
};

struct OnlineRunReport {
    std::vector<SlotOutcome> outcomes;
    std::vector<MethodSummary> summary;
    OnlineConfig config;

    const MethodSummary& find(const std::string& method, std::size_t rank = 0) const;
};

/// Stacks slots [begin, begin + tau) of F x F x N_BS tensors into F x F x N_BS x tau.
DenseTensor window_tensor(std::span<const DenseTensor> slots, std::size_t begin, std::size_t tau);

/// `observed` feeds prediction; `realized` (same length, or empty to reuse
/// `observed`) scores the placements.
OnlineRunReport run_online(std::span<const DenseTensor> observed, std::span<const DenseTensor> realized,
                           const OnlineConfig& cfg);

std::string method_label(const std::string& method, std::size_t rank);

/// slot,bs,method,hit_rate
void write_slot_csv(std::ostream& out, const OnlineRunReport& report);
/// method,rank,avg_hit_rate
void write_summary_csv(std::ostream& out, const OnlineRunReport& report);

}  // namespace tcache
