#pragma once

// Normalized per-slot demand shares and constrained linear prediction of the
// next slot's shares from the M most recent ones.

#include <iosfwd>
#include <string>
#include <vector>

#include "tcache/tensor.hpp"

namespace tcache {

/// Which index of D(f, i, b, t) is summed out when forming file shares.
/// Recommended: share of f = sum_i D(f, i, b, t). Primary: sum_f D(f, i, b, t)
/// credited to i.
enum class AggregationAxis { Recommended, Primary };

struct DemandHistory {
    std::size_t num_files = 0;
    std::size_t num_bs = 0;
    std::vector<Matrix> slots;  // oldest first; each num_files x num_bs, columns on the simplex

    std::size_t window() const { return slots.size(); }
};

/// d is F x F x N_BS x tau. Negative entries are clipped to 0; an all-zero
/// (b, t) column becomes uniform 1/F.
DemandHistory normalize_demands(const DenseTensor& d, AggregationAxis axis = AggregationAxis::Recommended);

/// Per-file request mass of one F x F x N_BS slot at base station b.
Vector file_demand(const DenseTensor& slot, std::size_t bs, AggregationAxis axis = AggregationAxis::Recommended);

enum class PredictorMode { LeastSquares, Mean };

std::string to_string(PredictorMode m);

struct PredictorConfig {
    std::size_t order = 6;
    PredictorMode mode = PredictorMode::LeastSquares;
};

struct Forecast {
    Vector shares;        // length F, on the simplex
    Vector coefficients;  // c_1..c_M, c_m weights the slot m steps back
    double residual = 0.0;
    bool clipped = false;          // negative predictions were zeroed and renormalized
    bool fell_back_to_mean = false;
};

Forecast fit_predict(const DemandHistory& h, const PredictorConfig& cfg, std::size_t bs);

/// bs,file,predicted_share (1-based file and bs)
void write_forecast_csv(std::ostream& out, const std::vector<Forecast>& per_bs);

}  // namespace tcache
