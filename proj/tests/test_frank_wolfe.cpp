#include <gtest/gtest.h>

#include <random>

#include "tcache/frank_wolfe.hpp"
#include "tcache/synthetic.hpp"

using namespace tcache;

namespace {

double objective(const DenseTensor& x, const SparseTensor& t) {
    double f = 0.0;
    for (std::size_t e = 0; e < t.nnz(); ++e) {
        const double r = x[t.positions()[e]] - t.values()[e];
        f += 0.5 * r * r;
    }
    return f;
}

double relative_gap(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor d = a;
    d.axpy(-1.0, b);
    const double scale = std::max(fro_norm(a), 1e-300);
    return fro_norm(d) / scale;
}

Vector dense_sigma(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues(); }

SyntheticTensor rank_two_fixture(std::uint64_t seed = 5) {
    return synth_low_rank(Shape({10, 10, 5, 5}), {2, 2, 2, 2}, 0.0, 0.3, seed);
}

}  // namespace

TEST(SelectMode, MinDimOnFullSizedShape) {
    DenseTensor grad(Shape({128, 128, 3, 10}));
    grad.fill(1.0);
    FwConfig cfg;
    cfg.mode_selection = ModeSelection::MinDim;
    EXPECT_EQ(select_mode(grad, cfg, {true, true, true, true}), 2u);
}

TEST(SelectMode, SigmaMaxPicksDominantUnfolding) {
    const Shape shape({4, 5, 3, 2});
    const UnfoldSpec mode2{1, 1};
    const UnfoldLayout layout = unfold_layout(shape, mode2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector u(static_cast<Eigen::Index>(layout.rows));
    Vector v(static_cast<Eigen::Index>(layout.cols));
    for (auto& x : u) x = g(rng);
    for (auto& x : v) x = g(rng);
    u.normalize();
    v.normalize();
    DenseTensor grad = fold(10.0 * u * v.transpose(), mode2, shape);

    // fixture check against a dense SVD
    for (std::size_t k = 0; k < 4; ++k) {
        const double s = dense_sigma(unfold(grad, {k, 1}))(0);
        if (k == 1)
            ASSERT_NEAR(s, 10.0, 1e-10);
        else
            ASSERT_LT(s, 10.0 - 1e-6);
    }
    FwConfig cfg;
    EXPECT_EQ(select_mode(grad, cfg, {true, true, true, true}), 1u);
}

TEST(SelectMode, SingletonAndEmpty) {
    DenseTensor grad(Shape({3, 4, 5, 6}));
    grad.fill(0.5);
    FwConfig cfg;
    for (auto rule : {ModeSelection::SigmaMax, ModeSelection::MinDim}) {
        cfg.mode_selection = rule;
        EXPECT_EQ(select_mode(grad, cfg, {false, false, false, true}), 3u);
        EXPECT_THROW(select_mode(grad, cfg, {false, false, false, false}), std::invalid_argument);
    }
}

namespace {

// Order-3 tensor whose mode-1 (shift 1) unfolding is the 2x2 matrix diag(3, 1).
DenseTensor diag_gradient() { return fold(Vector(Eigen::Vector2d(3, 1)).asDiagonal(), {0, 1}, Shape({2, 1, 2})); }

}  // namespace

TEST(GradientStep, MultiRankNormalization) {
    FwConfig cfg;
    auto step = gradient_step(diag_gradient(), 0, 2, 1.0, cfg);
    ASSERT_TRUE(step);
    Matrix s = unfold(step->s, {0, 1});
    Matrix expected = Vector(Eigen::Vector2d(0.75, 0.25)).asDiagonal();
    EXPECT_LE((s - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(inner(step->s, diag_gradient()), 0.0);
}

TEST(GradientStep, RankOneUsesTopPair) {
    FwConfig cfg;
    cfg.update_rule = UpdateRule::RankOne;
    auto step = gradient_step(diag_gradient(), 0, 2, 1.0, cfg);
    ASSERT_TRUE(step);
    Matrix s = unfold(step->s, {0, 1});
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 1.0;
    EXPECT_LE((s - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GradientStep, LinearInBeta) {
    FwConfig cfg;
    DenseTensor grad = synth_low_rank(Shape({4, 3, 5}), {1, 1, 1}, 0.0, 1.0, 2).truth;
    auto a = gradient_step(grad, 1, 2, 1.5, cfg);
    auto b = gradient_step(grad, 1, 2, 3.0, cfg);
    ASSERT_TRUE(a && b);
    for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_EQ(b->s[i], 2.0 * a->s[i]);
}

TEST(GradientStep, ZeroGradientAndRankRange) {
    FwConfig cfg;
    EXPECT_FALSE(gradient_step(DenseTensor(Shape({2, 2, 2})), 0, 1, 1.0, cfg));
    EXPECT_THROW(gradient_step(diag_gradient(), 0, 3, 1.0, cfg), std::out_of_range);
    EXPECT_THROW(gradient_step(diag_gradient(), 0, 0, 1.0, cfg), std::out_of_range);
}

TEST(LineSearch, ExactFitFixture) {
    const Shape shape({2, 2, 2});
    SparseTensor t(shape, {{{0, 0, 0}, 3.0}, {{1, 1, 1}, 4.0}});
    DenseTensor s(shape);
    s[shape.linear_index(std::vector<std::size_t>{0, 0, 0})] = -3.0;
    s[shape.linear_index(std::vector<std::size_t>{1, 1, 1})] = -4.0;
    DenseTensor x(shape);
    auto gamma = line_search(x, t, s);
    ASSERT_TRUE(gamma);
    EXPECT_DOUBLE_EQ(*gamma, 1.0);
    x.axpy(-*gamma, s);
    EXPECT_EQ(observed_rse(x, t), 0.0);
}

TEST(LineSearch, AnticorrelatedClampsToZeroAndZeroOverlap) {
    const Shape shape({2, 2, 2});
    SparseTensor t(shape, {{{0, 0, 0}, 3.0}});
    DenseTensor s(shape);
    s[0] = 1.0;  // residual is -3, so <r, s> < 0
    EXPECT_EQ(*line_search(DenseTensor(shape), t, s), 0.0);
    DenseTensor off(shape);
    off[7] = 1.0;  // not an observed cell
    EXPECT_FALSE(line_search(DenseTensor(shape), t, off));
}

TEST(LineSearch, MatchesGridOracle) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    const Shape shape({3, 3, 3});
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<SparseTensor::Entry> entries;
        for (std::size_t i = 0; i < 27; i += 2) entries.push_back({shape.multi_index(i), g(rng)});
        SparseTensor t(shape, entries);
        DenseTensor x(shape), s(shape);
        for (std::size_t i = 0; i < 27; ++i) {
            x[i] = g(rng);
            s[i] = g(rng);
        }
        const double gamma = *line_search(x, t, s);
        double best = 0.0, best_f = std::numeric_limits<double>::infinity();
        for (int j = 0; j <= 100000; ++j) {
            const double c = j * 1e-4;
            DenseTensor y = x;
            y.axpy(-c, s);
            const double f = objective(y, t);
            if (f < best_f) {
                best_f = f;
                best = c;
            }
        }
        EXPECT_LE(std::abs(std::min(gamma, 10.0) - best), 1e-4) << "trial " << trial;
    }
}

TEST(ApplyUpdate, ZeroStepLeavesStateUntouched) {
    const Shape shape({2, 2, 2});
    FwState state(shape, 1);
    FwConfig cfg;
    DenseTensor grad = DenseTensor(shape);
    grad[0] = 1.0;
    auto step = gradient_step(grad, 0, 1, 1.0, cfg);
    ASSERT_TRUE(step);
    apply_update(state, *step, 0.0);
    EXPECT_TRUE(state.x.all_zero());
    EXPECT_EQ(state.rank_used(), 0u);
    EXPECT_THROW(apply_update(state, *step, -1.0), std::runtime_error);
}

TEST(ApplyUpdate, AppendsNegatedLeftVectors) {
    const Shape shape({2, 1, 2});
    FwState state(shape, 1);
    FwConfig cfg;
    auto step = gradient_step(diag_gradient(), 0, 2, 2.0, cfg);
    apply_update(state, *step, 0.5);
    const ModeComponents& c = state.components[0];
    ASSERT_EQ(c.rank(), 2u);
    EXPECT_NEAR(c.sigma(0), 0.5 * 2.0 * 0.75, 1e-15);
    EXPECT_NEAR(c.sigma(1), 0.5 * 2.0 * 0.25, 1e-15);
    EXPECT_EQ(c.u.col(0), -step->factors.u.col(0));
    EXPECT_LE(relative_gap(state.x, reconstruct(state)), 1e-14);
    EXPECT_EQ(state.components[1].rank(), 0u);
}

TEST(RankBudget, FullSizedDimsAndLimits) {
    const Shape shape({128, 128, 3, 10});
    FwConfig cfg;
    cfg.rank_budget = 8;
    FwState state(shape, 1);
    RankBudget b = update_rank_budget(state, 2, cfg);
    EXPECT_EQ(b.r, 3u);
    EXPECT_EQ(b.limit, RankBudget::Limit::None);

    // saturate mode 3 (min(I, J) = 3)
    state.components[2].sigma = Vector::Ones(3);
    state.components[2].u = Matrix::Zero(3, 3);
    state.components[2].v = Matrix::Zero(163840, 3);
    b = update_rank_budget(state, 2, cfg);
    EXPECT_EQ(b.r, 0u);
    EXPECT_EQ(b.limit, RankBudget::Limit::ModeSaturated);
    EXPECT_FALSE(state.active[2]);

    cfg.rank_budget = 3;
    b = update_rank_budget(state, 0, cfg);
    EXPECT_EQ(b.limit, RankBudget::Limit::BudgetExhausted);
    EXPECT_EQ(b.r, 0u);
}

TEST(Complete, RankOneTensorFullyObserved) {
    const Shape shape({6, 4, 5});
    SyntheticTensor fx = synth_low_rank(shape, {1, 0, 0}, 0.0, 1.0, 8);
    FwConfig cfg;
    cfg.rank_budget = 3;
    FwState st = complete(fx.observed, cfg);
    EXPECT_LE(st.trace.back().rse, 1e-8);
    EXPECT_LE(st.trace.size() - 1, 2u);
}

TEST(Complete, RejectsEmptyAndBadConfig) {
    const Shape shape({2, 2, 2});
    FwConfig cfg;
    EXPECT_THROW(complete(SparseTensor(shape, std::vector<SparseTensor::Entry>{}), cfg), std::invalid_argument);
    SparseTensor t(shape, {{{0, 0, 0}, 1.0}});
    cfg.shift = 3;
    EXPECT_THROW(complete(t, cfg), std::invalid_argument);
    cfg.shift = 1;
    cfg.beta = -1.0;
    EXPECT_THROW(complete(t, cfg), std::invalid_argument);
}

TEST(Complete, TwoCellFixtureFitsInOneIteration) {
    const Shape shape({2, 2, 2});
    SparseTensor t(shape, {{{0, 0, 0}, 3.0}, {{1, 1, 1}, 4.0}});
    FwConfig cfg;
    cfg.rank_budget = 4;
    FwState st = complete(t, cfg);
    ASSERT_GE(st.trace.size(), 2u);
    EXPECT_EQ(st.trace[0].rse, 1.0);
    EXPECT_LE(st.trace[1].rse, 1e-12);
}

TEST(Complete, RankTwoSyntheticRecovery) {
    SyntheticTensor fx = rank_two_fixture();
    FwConfig cfg;
    cfg.rank_budget = 8;
    FwState st = complete(fx.observed, cfg);
    EXPECT_LE(st.trace.back().rse, 1e-6);
}

TEST(Complete, InvariantsHoldEveryIteration) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 6; ++trial) {
        const std::vector<std::size_t> dims{4 + rng() % 4, 3 + rng() % 4, 2 + rng() % 3, 3 + rng() % 3};
        const Shape shape(dims);
        SyntheticTensor fx = synth_low_rank(shape, {1, 1, 1, 0}, 0.05, 0.4, 1000 + trial);
        FwConfig cfg;
        cfg.rank_budget = 3 + trial;
        cfg.update_rule = trial % 2 ? UpdateRule::RankOne : UpdateRule::MultiRank;
        cfg.mode_selection = trial % 3 == 2 ? ModeSelection::MinDim : ModeSelection::SigmaMax;
        double last_f = objective(DenseTensor(shape), fx.observed);
        std::size_t iterations = 0;
        FwState st = complete(fx.observed, cfg, [&](const FwState& s) {
            ++iterations;
            const double f = objective(s.x, fx.observed);
            EXPECT_LE(f, last_f * (1.0 + 1e-12));
            last_f = f;
            EXPECT_LE(s.rank_used(), cfg.rank_budget);
            for (std::size_t k = 0; k < s.order(); ++k) {
                const UnfoldLayout l = unfold_layout(shape, {k, 1});
                EXPECT_LE(s.components[k].rank(), std::min(l.rows, l.cols));
                EXPECT_TRUE((s.components[k].sigma.array() > 0.0).all());
                if (!s.active[k]) EXPECT_EQ(s.components[k].rank(), std::min(l.rows, l.cols));
            }
            EXPECT_LE(relative_gap(s.x, reconstruct(s)), 1e-8);
        });
        EXPECT_LE(iterations, cfg.rank_budget);
        EXPECT_EQ(st.trace.front().rse, 1.0);
        for (std::size_t i = 1; i < st.trace.size(); ++i) EXPECT_LE(st.trace[i].rse, st.trace[i - 1].rse + 1e-15);
    }
}

TEST(Complete, MultiRankNoWorseThanRankOne) {
    SyntheticTensor fx = rank_two_fixture(12);
    FwConfig cfg;
    cfg.rank_budget = 8;
    const double multi = complete(fx.observed, cfg).trace.back().rse;
    cfg.update_rule = UpdateRule::RankOne;
    const double single = complete(fx.observed, cfg).trace.back().rse;
    EXPECT_LE(multi, single);
}

TEST(BetaInvariance, AcrossMagnitudes) {
    SyntheticTensor fx = rank_two_fixture();
    FwConfig cfg;
    cfg.rank_budget = 8;
    cfg.mode_selection = ModeSelection::MinDim;  // forces several iterations
    BetaInvarianceReport r = beta_invariance(fx.observed, cfg, {1.0, 1e5, 1e9});
    EXPECT_TRUE(r.invariant);
    EXPECT_TRUE(r.same_modes);
    EXPECT_LE(r.max_beta_gamma_deviation, 1e-8);
    EXPECT_LE(r.max_x_deviation, 1e-8);
    EXPECT_TRUE(beta_invariance_check(fx.observed, cfg, {7.0, 7.0}));
    EXPECT_THROW(beta_invariance_check(fx.observed, cfg, {1.0}), std::invalid_argument);
}

TEST(Trace, CsvHeaderAndRows) {
    std::ostringstream out;
    write_trace_csv(out, {TraceRow{0, 1.0, 0.0, -1, 0.0, 0.0}, TraceRow{1, 0.5, 0.01, 2, 0.25, 2.5}});
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "iter,rse,elapsed_s,mode,gamma,beta_gamma");
    EXPECT_NE(s.find("\n0,1,0,0,0,0\n"), std::string::npos);
    EXPECT_NE(s.find("\n1,0.5,0.01,3,0.25,2.5\n"), std::string::npos);
}
