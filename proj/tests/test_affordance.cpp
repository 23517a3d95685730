#include "hta/affordance.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hta;
using namespace hta::affordance;

namespace {

ParentConfig cfg(int m1, int m2, int o1, int o2, ActionId a) { return {m1, m2, o1, o2, a}; }

std::vector<DiscreteTrial> random_trials(std::uint64_t seed, std::size_t n, std::size_t configs = kConfigCount) {
    Rng rng(seed);
    std::vector<DiscreteTrial> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({ParentConfig::from_index(rng.below(configs)), static_cast<int>(rng.below(5)),
                       static_cast<int>(rng.below(5))});
    }
    return out;
}

void expect_row(const std::optional<CptRow>& got, const std::optional<CptRow>& want) {
    ASSERT_EQ(got.has_value(), want.has_value());
    if (!got) return;
    for (std::size_t b = 0; b < kEffectBins; ++b) EXPECT_NEAR((*got)[b], (*want)[b], 1e-15);
}

} // namespace

TEST(ParentConfigTest, IndexRoundTrip) {
    for (std::size_t i = 0; i < kConfigCount; ++i) EXPECT_EQ(ParentConfig::from_index(i).index(), i);
    EXPECT_EQ(cfg(1, 0, 1, 1, ActionId::Draw).index(), ((((1 * 2 + 0) * 2 + 1) * 2 + 1) * 4 + 2u));
    EXPECT_EQ(cfg(1, 1, 1, 1, ActionId::Push).index(), 63u);
}

TEST(Learn, SingleBinWithoutSmoothing) {
    std::vector<DiscreteTrial> t(4, {cfg(0, 1, 0, 0, ActionId::Push), 2, 4});
    const auto c = learn(t, 0.0);
    const auto idx = t[0].config.index();
    expect_row(c.x[idx], CptRow{0, 0, 1, 0, 0});
    expect_row(c.y[idx], CptRow{0, 0, 0, 0, 1});
    EXPECT_EQ(c.counts[idx], 4u);
    EXPECT_FALSE(c.x[0].has_value());
}

TEST(Learn, MixedCountsWithLaplace) {
    std::vector<DiscreteTrial> t;
    for (int i = 0; i < 2; ++i) t.push_back({cfg(0, 0, 0, 0, ActionId::Draw), 0, 2});
    for (int i = 0; i < 3; ++i) t.push_back({cfg(0, 0, 0, 0, ActionId::Draw), 2, 2});
    const auto c = learn(t, 1.0);
    const auto idx = t[0].config.index();
    expect_row(c.x[idx], CptRow{3.0 / 10, 1.0 / 10, 4.0 / 10, 1.0 / 10, 1.0 / 10});
    // Unseen rows become uniform.
    expect_row(c.x[0], CptRow{0.2, 0.2, 0.2, 0.2, 0.2});
}

TEST(Learn, MatchesEnumerationOracle) {
    for (double alpha : {0.0, 0.5, 1.0, 3.0}) {
        const auto t = random_trials(static_cast<std::uint64_t>(alpha * 10) + 1, 300, 40);
        const auto c = learn(t, alpha);
        for (std::size_t i = 0; i < kConfigCount; ++i) {
            expect_row(c.x[i], oracle::cpt_row(t, i, true, alpha));
            expect_row(c.y[i], oracle::cpt_row(t, i, false, alpha));
        }
    }
}

TEST(Learn, OrderDoesNotMatter) {
    auto t = random_trials(3, 500);
    const auto a = learn(t, 1.0);
    Rng rng(8);
    rng.shuffle(std::span(t));
    const auto b = learn(t, 1.0);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Learn, MoreEvidenceRaisesProbability) {
    std::vector<DiscreteTrial> t{{cfg(1, 1, 0, 0, ActionId::TapFromLeft), 3, 2},
                                 {cfg(1, 1, 0, 0, ActionId::TapFromLeft), 1, 2}};
    const auto idx = t[0].config.index();
    double prev = learn(t, 1.0).x[idx].value()[3];
    for (int k = 0; k < 20; ++k) {
        t.push_back({cfg(1, 1, 0, 0, ActionId::TapFromLeft), 3, 2});
        const double now = learn(t, 1.0).x[idx].value()[3];
        EXPECT_GT(now, prev);
        prev = now;
    }
}

TEST(Learn, SmoothingLeavesNoZeroCells) {
    const auto c = learn(random_trials(4, 50), 0.01);
    for (std::size_t i = 0; i < kConfigCount; ++i) {
        ASSERT_TRUE(c.x[i] && c.y[i]);
        double sx = 0, sy = 0;
        for (std::size_t b = 0; b < kEffectBins; ++b) {
            EXPECT_GT((*c.x[i])[b], 0.0);
            EXPECT_GT((*c.y[i])[b], 0.0);
            sx += (*c.x[i])[b];
            sy += (*c.y[i])[b];
        }
        EXPECT_NEAR(sx, 1.0, 1e-12);
        EXPECT_NEAR(sy, 1.0, 1e-12);
    }
}

TEST(Learn, RejectsBadInput) {
    std::vector<DiscreteTrial> t{{cfg(0, 0, 0, 0, ActionId::Draw), 5, 0}};
    EXPECT_THROW(learn(t, 1.0), Error);
    t[0].bin_x = 0;
    EXPECT_THROW(learn(t, -1.0), Error);
    EXPECT_THROW(learn(t, NAN), Error);
}

TEST(Infer, JointIsOuterProduct) {
    AffordanceModel m;
    const auto c = cfg(0, 1, 1, 0, ActionId::Draw);
    m.cpt_x[c.index()] = CptRow{0.1, 0.2, 0.3, 0.4, 0.0};
    m.cpt_y[c.index()] = CptRow{0.5, 0.5, 0.0, 0.0, 0.0};
    const auto d = infer(m, c);
    EXPECT_DOUBLE_EQ(d.p[3][1], 0.2);
    EXPECT_DOUBLE_EQ(d.p[2][2], 0.0);
    EXPECT_NEAR(d.total(), 1.0, 1e-15);
    const auto mx = marginal(d, Axis::X);
    const auto my = marginal(d, Axis::Y);
    EXPECT_NEAR(mx[3], 0.4, 1e-15);
    EXPECT_NEAR(my[0], 0.5, 1e-15);
}

TEST(Infer, UnknownRowThrows) {
    AffordanceModel m;
    try {
        infer(m, cfg(1, 0, 0, 1, ActionId::Push));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownRow);
        EXPECT_NE(std::string(e.what()).find("push"), std::string::npos);
    }
}

TEST(FitModel, EndToEndOnTwoClusters) {
    // Manipulators split on feature 0, objects on feature 1; the effect depends
    // only on the manipulator cluster.
    Rng rng(12);
    std::vector<Sample> s;
    for (int i = 0; i < 80; ++i) {
        Sample x;
        const bool long_tool = i % 2 == 0;
        for (std::size_t j = 0; j < shape::kFeatureCount; ++j) {
            x.manipulator[j] = 0.5 + 0.01 * rng.normal();
            x.object[j] = 0.5 + 0.01 * rng.normal();
        }
        x.manipulator[0] = long_tool ? 0.9 : 0.1;
        x.object[1] = i % 4 < 2 ? 0.2 : 0.8;
        x.action = ActionId::Draw;
        x.effect_y_m = long_tool ? -0.09 : 0.0;
        s.push_back(x);
    }
    const auto m = fit_model(s, 1.0);
    EXPECT_EQ(m.smoothing_alpha, 1.0);
    std::uint64_t total = 0;
    for (auto c : m.counts) total += c;
    EXPECT_EQ(total, s.size());
    for (const auto& x : s) {
        const auto d = infer(m, x.manipulator, x.object, x.action);
        const auto my = marginal(d, Axis::Y);
        const int want = reduce::effect_bin(x.effect_y_m);
        EXPECT_EQ(std::max_element(my.begin(), my.end()) - my.begin(), want);
    }
    EXPECT_FALSE(m.empty_configs().empty());
}

TEST(FitModel, RejectsEmptyTraining) {
    std::vector<Sample> none;
    EXPECT_THROW(fit_model(none, 1.0), Error);
}
