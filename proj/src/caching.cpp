#include "tcache/caching.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "tcache/coo_io.hpp"

namespace tcache {

bool CachePlan::feasible(double tol) const {
    const double total = std::accumulate(placement.begin(), placement.end(), 0.0);
    const bool in_range = std::all_of(placement.begin(), placement.end(), [](double c) { return c >= 0.0 && c <= 1.0; });
    return in_range && std::abs(total - static_cast<double>(capacity)) <= tol;
}

CachePlan mpc_place(const Vector& shares, std::size_t capacity) {
    const auto files = static_cast<std::size_t>(shares.size());
    if (capacity > files) {
        throw std::invalid_argument("cache capacity " + std::to_string(capacity) + " exceeds file count " +
                                    std::to_string(files));
    }
    std::vector<std::size_t> order(files);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return shares(static_cast<Eigen::Index>(a)) > shares(static_cast<Eigen::Index>(b));
    });
    CachePlan plan{std::vector<double>(files, 0.0), capacity};
    for (std::size_t j = 0; j < capacity; ++j) plan.placement[order[j]] = 1.0;
    return plan;
}

HitRate hit_rate(const DenseTensor& slot, const CachePlan& plan, std::size_t bs) {
    const Vector mass = file_demand(slot, bs, AggregationAxis::Recommended);
    if (static_cast<std::size_t>(mass.size()) != plan.placement.size()) {
        throw ShapeError("cache plan covers " + std::to_string(plan.placement.size()) + " files, slot has " +
                         std::to_string(mass.size()));
    }
    HitRate h;
    for (Eigen::Index f = 0; f < mass.size(); ++f) {
        h.requests += mass(f);
        h.hits += mass(f) * plan.placement[static_cast<std::size_t>(f)];
    }
    if (h.requests > 0.0) {
        h.rate = h.hits / h.requests;
    } else {
        h.zero_demand = true;
    }
    return h;
}

const MethodSummary& OnlineRunReport::find(const std::string& method, std::size_t rank) const {
    for (const auto& s : summary)
        if (s.method == method && s.rank == rank) return s;
    throw std::out_of_range("no summary row for " + method_label(method, rank));
}

std::string method_label(const std::string& method, std::size_t rank) {
    return rank == 0 ? method : method + "-R" + std::to_string(rank);
}

DenseTensor window_tensor(std::span<const DenseTensor> slots, std::size_t begin, std::size_t tau) {
    if (tau == 0 || begin + tau > slots.size()) throw std::out_of_range("window exceeds the slot stream");
    const Shape& s = slots[begin].shape();
    if (s.order() != 3) throw ShapeError("slot tensors must be F x F x N_BS");
    DenseTensor out(Shape({s.dim(0), s.dim(1), s.dim(2), tau}));
    const std::size_t slot_size = s.numel();
    for (std::size_t t = 0; t < tau; ++t) {
        const DenseTensor& slot = slots[begin + t];
        if (slot.shape() != s) throw ShapeError("slot shapes differ within the stream");
        std::copy(slot.values().begin(), slot.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(t * slot_size));
    }
    return out;
}

namespace {

struct Accumulator {
    double sum = 0.0;
    std::size_t scored = 0;
    std::size_t zero = 0;
};

}  // namespace

OnlineRunReport run_online(std::span<const DenseTensor> observed, std::span<const DenseTensor> realized,
                           const OnlineConfig& cfg) {
    if (realized.empty()) realized = observed;
    if (realized.size() != observed.size()) throw std::invalid_argument("observed and realized streams differ in length");
    if (observed.size() <= cfg.window) {
        throw std::invalid_argument("stream of " + std::to_string(observed.size()) + " slots is not longer than the window " +
                                    std::to_string(cfg.window));
    }
    if (cfg.predictor.order + 1 > cfg.window) throw std::invalid_argument("prediction order must be below the window");

    OnlineRunReport report;
    report.config = cfg;
    std::map<std::pair<std::string, std::size_t>, Accumulator> acc;
    std::vector<std::pair<std::string, std::size_t>> methods_in_order;

    auto record = [&](std::size_t slot, std::size_t bs, const std::string& method, std::size_t rank, const HitRate& h) {
        report.outcomes.push_back(SlotOutcome{slot, bs, method, rank, h});
        auto key = std::make_pair(method, rank);
        auto [it, inserted] = acc.try_emplace(key);
        if (inserted) methods_in_order.push_back(key);
        if (h.zero_demand) {
            ++it->second.zero;
        } else {
            it->second.sum += h.rate;
            ++it->second.scored;
        }
    };

    // Scores slot t+1 from the window ending at slot t.
    for (std::size_t t = cfg.window - 1; t + 1 < observed.size(); ++t) {
        const std::size_t target = t + 1;
        try {
            const DenseTensor window = window_tensor(observed, t + 1 - cfg.window, cfg.window);
            const DenseTensor& next = realized[target];
            const std::size_t num_bs = window.shape().dim(2);

            auto place_and_score = [&](const DenseTensor& source, const std::string& suffix, std::size_t rank) {
                const DemandHistory history = normalize_demands(source, cfg.axis);
                for (PredictorMode mode : cfg.predictors) {
                    PredictorConfig pc = cfg.predictor;
                    pc.mode = mode;
                    for (std::size_t b = 0; b < num_bs; ++b) {
                        const Forecast fc = fit_predict(history, pc, b);
                        record(target, b, to_string(mode) + suffix, rank,
                               hit_rate(next, mpc_place(fc.shares, cfg.capacity), b));
                    }
                }
            };

            if (cfg.oracle) {
                for (std::size_t b = 0; b < num_bs; ++b) {
                    const CachePlan best = mpc_place(file_demand(next, b, AggregationAxis::Recommended), cfg.capacity);
                    record(target, b, "oracle", 0, hit_rate(next, best, b));
                }
            }
            if (cfg.raw) place_and_score(window, "-raw", 0);
            if (cfg.completion) {
                const SparseTensor observed_entries = nonzeros(window);
                for (std::size_t rank : cfg.ranks) {
                    DenseTensor completed = window;
                    if (observed_entries.nnz() > 0) {
                        FwConfig fc = cfg.solver;
                        fc.rank_budget = rank;
                        completed = complete(observed_entries, fc).x;
                    }
                    place_and_score(completed, "-TC", rank);
                }
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("slot " + std::to_string(target + 1) + ": " + e.what());
        }
    }

    for (const auto& key : methods_in_order) {
        const Accumulator& a = acc[key];
        report.summary.push_back(MethodSummary{key.first, key.second,
                                               a.scored ? a.sum / static_cast<double>(a.scored) : 0.0, a.scored,
                                               a.zero});
    }
    return report;
}

void write_slot_csv(std::ostream& out, const OnlineRunReport& report) {
    out << "slot,bs,method,hit_rate\n" << std::setprecision(17);
    for (const SlotOutcome& o : report.outcomes) {
        out << (o.slot + 1) << ',' << (o.bs + 1) << ',' << method_label(o.method, o.rank) << ',' << o.hit.rate
            << '\n';
    }
}

void write_summary_csv(std::ostream& out, const OnlineRunReport& report) {
    out << "method,rank,avg_hit_rate\n" << std::setprecision(17);
    for (const MethodSummary& s : report.summary) out << s.method << ',' << s.rank << ',' << s.avg_hit_rate << '\n';
}

}  // namespace tcache
