#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "tcache/frank_wolfe.hpp"
#include "tcache/movielens.hpp"
#include "tcache/synthetic.hpp"

using namespace tcache;

namespace {

constexpr std::int64_t kDay = 86400;

double slot_sum(const DenseTensor& t) {
    auto v = t.values();
    return std::accumulate(v.begin(), v.end(), 0.0);
}

// Two movies, enough to satisfy F = 2.
std::vector<RatingsRecord> two_movies(std::int64_t t0) {
    return {{1, 10, 4.0, t0}, {1, 20, 3.0, t0 + 3600}};
}

}  // namespace

TEST(ReadRatings, SeparatorsAndHeader) {
    std::istringstream csv("userId,movieId,rating,timestamp\n1,10,4.5,100\n2,20,3,200\n");
    auto a = read_ratings(csv);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].movie_id, 10);
    EXPECT_DOUBLE_EQ(a[0].rating, 4.5);
    EXPECT_EQ(a[1].timestamp, 200);

    std::istringstream tab("1\t10\t4\t100\n");
    EXPECT_EQ(read_ratings(tab).size(), 1u);
    std::istringstream colons("1::10::5::978300760\n");
    auto c = read_ratings(colons);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].timestamp, 978300760);
}

TEST(ReadRatings, RejectsBadLines) {
    std::istringstream bad("1,10,4,100\n1,x,4,100\n");
    EXPECT_THROW(read_ratings(bad), std::runtime_error);
    std::istringstream neg_ts("1,10,4,-5\n");
    EXPECT_THROW(read_ratings(neg_ts), std::runtime_error);
    std::istringstream neg_rating("1,10,-1,5\n");
    EXPECT_THROW(read_ratings(neg_rating), std::runtime_error);
    EXPECT_THROW(read_ratings_file("/nonexistent/ratings.csv"), std::runtime_error);
}

TEST(BuildDemand, SingleRatingSelfDiagonal) {
    std::vector<RatingsRecord> r = {{7, 42, 5.0, 1000}};
    IngestConfig cfg;
    cfg.num_files = 1;
    cfg.num_bs = 3;
    DemandStream s = build_demand_tensor(r, cfg);
    ASSERT_EQ(s.slots.size(), 1u);
    const std::size_t b = assign_bs(7, 3, 0);
    EXPECT_EQ(s.slots[0][0 + 0 + b * 1], 1.0);
    EXPECT_EQ(slot_sum(s.slots[0]), 1.0);
    EXPECT_EQ(s.movies, std::vector<std::int64_t>{42});

    cfg.weighting = Weighting::StarSum;
    EXPECT_EQ(slot_sum(build_demand_tensor(r, cfg).slots[0]), 5.0);
}

TEST(BuildDemand, CoSessionPairWithinGap) {
    IngestConfig cfg;
    cfg.num_files = 2;
    cfg.num_bs = 1;
    cfg.pairing = Pairing::CoSession;
    cfg.session_gap_hours = 6;
    DemandStream s = build_demand_tensor(two_movies(5000), cfg);
    // movie 10 -> file 0, movie 20 -> file 1 (equal counts, smaller id first)
    EXPECT_EQ(s.movies, (std::vector<std::int64_t>{10, 20}));
    EXPECT_EQ(s.slots[0][0 + 1 * 2], 1.0);
    EXPECT_EQ(slot_sum(s.slots[0]), 1.0);

    cfg.session_gap_hours = 0.5;
    EXPECT_EQ(slot_sum(build_demand_tensor(two_movies(5000), cfg).slots[0]), 0.0);
}

TEST(BuildDemand, SlotBoundaryIsHalfOpen) {
    std::vector<RatingsRecord> r = {{1, 10, 4.0, 0 + 1}, {2, 10, 4.0, 30 * kDay + 1}, {3, 10, 4.0, 30 * kDay}};
    IngestConfig cfg;
    cfg.num_files = 1;
    cfg.num_bs = 1;
    DemandStream s = build_demand_tensor(r, cfg);
    ASSERT_EQ(s.slots.size(), 2u);
    EXPECT_EQ(slot_sum(s.slots[0]), 2.0);  // t0 and t0 + 30d - 1
    EXPECT_EQ(slot_sum(s.slots[1]), 1.0);  // exactly t0 + 30d
}

TEST(BuildDemand, ConservationAndDeterminism) {
    std::mt19937_64 rng(9);
    std::vector<RatingsRecord> r;
    for (int j = 0; j < 2000; ++j) {
        r.push_back({static_cast<std::int64_t>(rng() % 50), static_cast<std::int64_t>(rng() % 30),
                     static_cast<double>(1 + rng() % 5), static_cast<std::int64_t>(1 + rng() % (200 * kDay))});
    }
    IngestConfig cfg;
    cfg.num_files = 12;
    cfg.num_bs = 3;
    cfg.seed = 4;
    DemandStream s = build_demand_tensor(r, cfg);
    double total = 0.0;
    for (const auto& t : s.slots) total += slot_sum(t);
    EXPECT_EQ(total, static_cast<double>(s.kept_ratings));

    std::size_t expected_kept = 0;
    for (const auto& rec : r)
        if (std::find(s.movies.begin(), s.movies.end(), rec.movie_id) != s.movies.end()) ++expected_kept;
    EXPECT_EQ(s.kept_ratings, expected_kept);

    DemandStream again = build_demand_tensor(r, cfg);
    ASSERT_EQ(again.slots.size(), s.slots.size());
    for (std::size_t t = 0; t < s.slots.size(); ++t)
        EXPECT_TRUE(std::equal(s.slots[t].values().begin(), s.slots[t].values().end(),
                               again.slots[t].values().begin()));

    // each user lands on exactly one base station
    for (std::int64_t u = 0; u < 50; ++u) EXPECT_LT(assign_bs(u, 3, 4), 3u);
}

TEST(BuildDemand, Errors) {
    IngestConfig cfg;
    cfg.num_files = 3;
    EXPECT_THROW(build_demand_tensor(two_movies(1), cfg), std::invalid_argument);
    EXPECT_THROW(build_demand_tensor(std::vector<RatingsRecord>{}, cfg), std::invalid_argument);
    cfg.num_files = 2;
    cfg.num_bs = 0;
    EXPECT_THROW(build_demand_tensor(two_movies(1), cfg), std::invalid_argument);
}

TEST(SynthLowRank, FullObservationCoversTruth) {
    auto s = synth_low_rank(Shape({5, 6, 4}), {2, 0, 1}, 0.0, 1.0, 3);
    ASSERT_EQ(s.observed.nnz(), s.truth.size());
    for (std::size_t e = 0; e < s.observed.nnz(); ++e)
        EXPECT_EQ(s.observed.values()[e], s.truth[s.observed.positions()[e]]);
    // mode-0 unfolding has rank 2 plus mode-2 rank 1 contribution
    EXPECT_THROW(synth_low_rank(Shape({2, 2, 2}), {5, 0, 0}, 0.0, 0.5, 1), std::invalid_argument);
}

TEST(SynthLowRank, ObservedCountIsExact) {
    auto s = synth_low_rank(Shape({10, 10, 5}), {2, 2, 0}, 0.1, 0.3, 8);
    EXPECT_EQ(s.observed.nnz(), 150u);
}

TEST(SynthLowRank, NoiseSetsTheObservedResidualOfTruth) {
    auto clean = synth_low_rank(Shape({12, 12, 6}), {2, 0, 0}, 0.0, 0.6, 21);
    EXPECT_EQ(observed_rse(clean.truth, clean.observed), 0.0);
    auto noisy = synth_low_rank(Shape({12, 12, 6}), {2, 0, 0}, 0.1, 0.6, 21);
    const double rse = observed_rse(noisy.truth, noisy.observed);
    EXPECT_GT(rse, 0.0);
    // noise norm over observed norm, computed directly
    double num = 0.0;
    for (std::size_t e = 0; e < noisy.observed.nnz(); ++e) {
        const double d = noisy.observed.values()[e] - noisy.truth[noisy.observed.positions()[e]];
        num += d * d;
    }
    EXPECT_NEAR(rse, std::sqrt(num) / noisy.observed.fro_norm(), 1e-12);
}

TEST(SynthStreams, ShapesAndNonnegativity) {
    auto z = synth_zipf_stream(8, 2, 5, 1.0, 100, 1);
    ASSERT_EQ(z.size(), 5u);
    EXPECT_EQ(z[0].shape().to_string(), "8x8x2");
    EXPECT_DOUBLE_EQ(slot_sum(z[0]), 200.0);

    auto l = synth_low_rank_stream(8, 2, 6, 2, 0.5, 2);
    ASSERT_EQ(l.observed.size(), 6u);
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t j = 0; j < l.truth[t].size(); ++j) {
            EXPECT_GE(l.truth[t][j], 0.0);
            EXPECT_TRUE(l.observed[t][j] == 0.0 || l.observed[t][j] == l.truth[t][j]);
        }
    }
}
