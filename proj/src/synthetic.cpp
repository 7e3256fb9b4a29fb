#include "tcache/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace tcache {

SyntheticTensor synth_low_rank(const Shape& shape, const std::vector<std::size_t>& ranks, double noise_sigma,
                               double observe_fraction, std::uint64_t seed, std::size_t shift) {
    if (ranks.size() != shape.order()) throw std::invalid_argument("need one rank per mode");
    if (!(observe_fraction > 0.0) || observe_fraction > 1.0)
        throw std::invalid_argument("observe fraction must lie in (0, 1]");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be nonnegative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SyntheticTensor out{SparseTensor{}, DenseTensor(shape)};
    for (std::size_t k = 0; k < shape.order(); ++k) {
        if (ranks[k] == 0) continue;
        const UnfoldLayout layout = unfold_layout(shape, {k, shift});
        if (ranks[k] > std::min(layout.rows, layout.cols)) {
            throw std::invalid_argument("rank " + std::to_string(ranks[k]) + " infeasible for mode " +
                                        std::to_string(k + 1) + " unfolding " + std::to_string(layout.rows) + "x" +
                                        std::to_string(layout.cols));
        }
        const auto r = static_cast<Eigen::Index>(ranks[k]);
        Matrix a(static_cast<Eigen::Index>(layout.rows), r);
        Matrix b(static_cast<Eigen::Index>(layout.cols), r);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = gauss(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = gauss(rng);
        out.truth.axpy(1.0 / std::sqrt(static_cast<double>(r)), fold(a * b.transpose(), {k, shift}, shape));
    }

    const std::size_t total = shape.numel();
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(observe_fraction * static_cast<double>(total))));
    std::vector<std::size_t> cells(total);
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(count);
    std::sort(cells.begin(), cells.end());
    std::vector<double> values(count);
    for (std::size_t e = 0; e < count; ++e) {
        values[e] = out.truth[cells[e]] + (noise_sigma > 0.0 ? noise_sigma * gauss(rng) : 0.0);
    }
    out.observed = SparseTensor(shape, std::move(cells), std::move(values));
    return out;
}

namespace {

std::vector<double> zipf_weights(std::size_t files, double exponent) {
    std::vector<double> w(files);
    for (std::size_t f = 0; f < files; ++f) w[f] = 1.0 / std::pow(static_cast<double>(f + 1), exponent);
    return w;
}

}  // namespace

std::vector<DenseTensor> synth_zipf_stream(std::size_t files, std::size_t num_bs, std::size_t slots,
                                           double exponent, std::size_t requests_per_bs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> popularity(num_bs);
    for (std::size_t b = 0; b < num_bs; ++b) {
        // each base station ranks the catalogue differently
        std::vector<std::size_t> perm(files);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto w = zipf_weights(files, exponent);
        popularity[b].assign(files, 0.0);
        for (std::size_t j = 0; j < files; ++j) popularity[b][perm[j]] = w[j];
    }
    const Shape shape({files, files, num_bs});
    std::vector<DenseTensor> stream;
    stream.reserve(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        DenseTensor slot(shape);
        for (std::size_t b = 0; b < num_bs; ++b) {
            std::discrete_distribution<std::size_t> pick(popularity[b].begin(), popularity[b].end());
            for (std::size_t q = 0; q < requests_per_bs; ++q) {
                const std::size_t f = pick(rng);
                slot[f + f * files + b * files * files] += 1.0;
            }
        }
        stream.push_back(std::move(slot));
    }
    return stream;
}

SyntheticStream synth_low_rank_stream(std::size_t files, std::size_t num_bs, std::size_t slots, std::size_t rank,
                                      double mask_fraction, std::uint64_t seed) {
    if (rank < 1) throw std::invalid_argument("stream rank must be >= 1");
    if (mask_fraction < 0.0 || mask_fraction >= 1.0) throw std::invalid_argument("mask fraction must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto base = zipf_weights(files, 0.8);

    std::vector<std::vector<double>> p(rank), q(rank), w(rank);
    std::vector<double> phase(rank), period(rank);
    for (std::size_t r = 0; r < rank; ++r) {
        std::vector<std::size_t> perm(files);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        p[r].assign(files, 0.0);
        for (std::size_t j = 0; j < files; ++j) p[r][perm[j]] = base[j];
        q[r].resize(files);
        for (double& v : q[r]) v = 0.2 + unit(rng);
        w[r].resize(num_bs);
        for (double& v : w[r]) v = 0.5 + unit(rng);
        phase[r] = 2.0 * std::numbers::pi * unit(rng);
        period[r] = 20.0 + 40.0 * unit(rng);
    }

    const Shape shape({files, files, num_bs});
    SyntheticStream out;
    std::bernoulli_distribution keep(1.0 - mask_fraction);
    for (std::size_t t = 0; t < slots; ++t) {
        DenseTensor truth(shape);
        for (std::size_t r = 0; r < rank; ++r) {
            const double g = 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period[r] + phase[r]);
            for (std::size_t b = 0; b < num_bs; ++b)
                for (std::size_t i = 0; i < files; ++i)
                    for (std::size_t f = 0; f < files; ++f)
                        truth[f + i * files + b * files * files] += 100.0 * p[r][f] * q[r][i] * w[r][b] * g;
        }
        DenseTensor observed(shape);
        for (std::size_t e = 0; e < truth.size(); ++e)
            if (keep(rng)) observed[e] = truth[e];
        out.observed.push_back(std::move(observed));
        out.truth.push_back(std::move(truth));
    }
    return out;
}

}  // namespace tcache
