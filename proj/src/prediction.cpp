#include "tcache/prediction.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace tcache {

std::string to_string(PredictorMode m) { return m == PredictorMode::LeastSquares ? "LP" : "MP"; }

Vector file_demand(const DenseTensor& slot, std::size_t bs, AggregationAxis axis) {
    const Shape& s = slot.shape();
    if (s.order() != 3 || s.dim(0) != s.dim(1)) throw ShapeError("slot tensor must be F x F x N_BS");
    if (bs >= s.dim(2)) throw ShapeError("base station index out of range");
    const std::size_t files = s.dim(0);
    Vector mass = Vector::Zero(static_cast<Eigen::Index>(files));
    const std::size_t base = bs * files * files;
    for (std::size_t i = 0; i < files; ++i) {
        for (std::size_t f = 0; f < files; ++f) {
            const double v = std::max(slot[base + f + i * files], 0.0);
            mass(static_cast<Eigen::Index>(axis == AggregationAxis::Recommended ? f : i)) += v;
        }
    }
    return mass;
}

DemandHistory normalize_demands(const DenseTensor& d, AggregationAxis axis) {
    const Shape& s = d.shape();
    if (s.order() != 4 || s.dim(0) != s.dim(1)) throw ShapeError("demand tensor must be F x F x N_BS x tau");
    DemandHistory h;
    h.num_files = s.dim(0);
    h.num_bs = s.dim(2);
    const std::size_t files = h.num_files;
    const std::size_t slot_size = files * files * h.num_bs;
    for (std::size_t t = 0; t < s.dim(3); ++t) {
        Matrix shares = Matrix::Zero(static_cast<Eigen::Index>(files), static_cast<Eigen::Index>(h.num_bs));
        for (std::size_t b = 0; b < h.num_bs; ++b) {
            const std::size_t base = t * slot_size + b * files * files;
            for (std::size_t i = 0; i < files; ++i) {
                for (std::size_t f = 0; f < files; ++f) {
                    const double v = std::max(d[base + f + i * files], 0.0);
                    shares(static_cast<Eigen::Index>(axis == AggregationAxis::Recommended ? f : i),
                           static_cast<Eigen::Index>(b)) += v;
                }
            }
            const double total = shares.col(static_cast<Eigen::Index>(b)).sum();
            if (total > 0.0)
                shares.col(static_cast<Eigen::Index>(b)) /= total;
            else
                shares.col(static_cast<Eigen::Index>(b)).setConstant(1.0 / static_cast<double>(files));
        }
        h.slots.push_back(std::move(shares));
    }
    return h;
}

namespace {

// Slot `lag` steps before the last one, for base station b.
Vector lagged(const DemandHistory& h, std::size_t lag, std::size_t bs) {
    return h.slots[h.window() - 1 - lag].col(static_cast<Eigen::Index>(bs));
}

}  // namespace

Forecast fit_predict(const DemandHistory& h, const PredictorConfig& cfg, std::size_t bs) {
    const std::size_t order = cfg.order;
    if (order < 1) throw std::invalid_argument("prediction order must be >= 1");
    if (h.window() < order + 1) {
        throw std::invalid_argument("prediction order " + std::to_string(order) + " needs at least " +
                                    std::to_string(order + 1) + " slots, history has " + std::to_string(h.window()));
    }
    if (bs >= h.num_bs) throw std::out_of_range("base station index out of range");

    const auto m = static_cast<Eigen::Index>(order);
    const auto files = static_cast<Eigen::Index>(h.num_files);
    Forecast out;
    out.coefficients = Vector::Constant(m, 1.0 / static_cast<double>(order));

    if (cfg.mode == PredictorMode::LeastSquares && order > 1) {
        // Rows: (target slot j, file f). Target is the slot j steps back, regressor m is j + m steps back.
        const std::size_t samples = h.window() - order;
        const Eigen::Index rows = files * static_cast<Eigen::Index>(samples);
        Matrix a(rows, m);
        Vector y(rows);
        for (std::size_t j = 0; j < samples; ++j) {
            const Eigen::Index r0 = static_cast<Eigen::Index>(j) * files;
            y.segment(r0, files) = lagged(h, j, bs);
            for (Eigen::Index c = 0; c < m; ++c) a.block(r0, c, files, 1) = lagged(h, j + 1 + c, bs);
        }
        // Every regressor column block sums to one over files, so the unit-sum
        // prediction constraint is sum_m c_m = 1. Eliminate c_M.
        Matrix reduced = a.leftCols(m - 1).colwise() - a.col(m - 1);
        Vector target = y - a.col(m - 1);
        Eigen::ColPivHouseholderQR<Matrix> qr(reduced);
        qr.setThreshold(1e-10);
        if (qr.rank() < m - 1) {
            out.fell_back_to_mean = true;
        } else {
            Vector head = qr.solve(target);
            out.coefficients.head(m - 1) = head;
            out.coefficients(m - 1) = 1.0 - head.sum();
        }
        out.residual = (a * out.coefficients - y).squaredNorm();
    } else if (order == 1) {
        out.coefficients(0) = 1.0;
    }

    Vector shares = Vector::Zero(files);
    for (Eigen::Index c = 0; c < m; ++c) shares += out.coefficients(c) * lagged(h, static_cast<std::size_t>(c), bs);
    if ((shares.array() < 0.0).any()) {
        out.clipped = true;
        shares = shares.cwiseMax(0.0);
    }
    const double total = shares.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Every prediction clipped away; fall back to the mean of the lags.
        out.fell_back_to_mean = true;
        out.coefficients.setConstant(1.0 / static_cast<double>(order));
        shares.setZero();
        for (Eigen::Index c = 0; c < m; ++c)
            shares += out.coefficients(c) * lagged(h, static_cast<std::size_t>(c), bs);
    } else {
        shares /= total;
    }
    out.shares = std::move(shares);
    return out;
}

void write_forecast_csv(std::ostream& out, const std::vector<Forecast>& per_bs) {
    out << "bs,file,predicted_share\n" << std::setprecision(17);
    for (std::size_t b = 0; b < per_bs.size(); ++b)
        for (Eigen::Index f = 0; f < per_bs[b].shares.size(); ++f)
            out << (b + 1) << ',' << (f + 1) << ',' << per_bs[b].shares(f) << '\n';
}

}  // namespace tcache
