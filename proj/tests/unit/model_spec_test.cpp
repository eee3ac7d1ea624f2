#include "support.hpp"

#include <gtest/gtest.h>

namespace qbic {
namespace {

using test::ergodic_scenario;

const CandidateModel& by_id(const ScenarioSpec& s, const std::string& id) { return s.family[s.index_of(id)]; }

double x_state(double x) { return x; }

TEST(EvalDiffusion, ConstantBasisAtZeroIsOne) {
    const auto s = ergodic_scenario();
    const auto& m = by_id(s, "Diff7/Drif1");
    const double x = x_state(0.0);
    EXPECT_DOUBLE_EQ(eval_diffusion(m, State(&x, 1), Vector::Zero(1)), 1.0);
}

TEST(EvalDiffusion, CosPlusConstantAtTrueParameter) {
    const auto s = ergodic_scenario();
    const auto& m = by_id(s, "Diff3/Drif1");
    const double x = 0.0;
    EXPECT_NEAR(eval_diffusion(m, State(&x, 1), Eigen::Vector2d(-2.0, 1.0)), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(std::exp(-1.0), 0.367879, 1e-6);
}

TEST(EvalDiffusion, FullBasisAtHalfPi) {
    const auto s = ergodic_scenario();
    const auto& m = by_id(s, "Diff1/Drif1");
    const double x = std::numbers::pi / 2;
    // cos(pi/2) ~ 0, sin(pi/2) = 1: B = exp(-2 cos x + 0 sin x + 1)
    const double expect = std::exp(-2.0 * std::cos(x) + 1.0);
    EXPECT_NEAR(eval_diffusion(m, State(&x, 1), Eigen::Vector3d(-2.0, 0.0, 1.0)), expect, 1e-14);
    EXPECT_NEAR(expect, std::exp(1.0), 1e-14);
}

TEST(EvalDiffusion, DimensionMismatchIsSpecificationError) {
    const auto s = ergodic_scenario();
    const double x = 0.0;
    EXPECT_THROW((void)eval_diffusion(by_id(s, "Diff1/Drif1"), State(&x, 1), Vector::Zero(2)), SpecificationError);
}

TEST(EvalDiffusion, ExpLinearIsPositiveEverywhereInBounds) {
    const auto s = ergodic_scenario();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 3.0);
    for (const auto& m : s.family) {
        for (int k = 0; k < 200; ++k) {
            const double x = z(rng);
            const Vector t1 = test::uniform_in(m.diffusion.block.lower, m.diffusion.block.upper, rng);
            EXPECT_GT(eval_diffusion(m, State(&x, 1), t1), 0.0);
        }
    }
}

TEST(EvalDrift, LinearExamples) {
    const auto s = ergodic_scenario();
    double x = 2.0;
    EXPECT_DOUBLE_EQ(eval_drift(by_id(s, "Diff1/Drif2"), State(&x, 1), Vector::Constant(1, -1.0)), -2.0);
    x = 123.0;
    EXPECT_DOUBLE_EQ(eval_drift(by_id(s, "Diff1/Drif3"), State(&x, 1), Vector::Constant(1, 0.5)), 0.5);
    x = 1.0;
    EXPECT_NEAR(eval_drift(by_id(s, "Diff1/Drif1"), State(&x, 1), Eigen::Vector2d(-1.0, 0.3)), -0.7, 1e-15);
}

TEST(EvalDrift, AbsentDriftIsUnsupported) {
    const auto vol = make_scenario(Scenario::VolaTrig621);
    const double x[3] = {1.0, 0.0, 0.0};
    EXPECT_THROW((void)eval_drift(vol.family[0], State(x, 3), Vector::Zero(1)), UnsupportedOperation);
}

TEST(CandidateModel, KindRequirements) {
    EXPECT_EQ(test::ergodic_model("e", {"cos", "1"}, {"x"}).dim(), 3);
    auto bad = CandidateModel::volatility("v", test::exp_spec({"x"}));
    bad.kind = FamilyKind::ErgodicDiffusion;
    EXPECT_THROW(bad.validate(), SpecificationError);
    auto bad2 = test::ergodic_model("e", {"1"}, {"x"});
    bad2.kind = FamilyKind::VolatilityRegression;
    EXPECT_THROW(bad2.validate(), SpecificationError);
}

TEST(ParamBlock, InvalidBoxesRejected) {
    ParamBlock b = ParamBlock::default_box("b", 2, RateExponent::SqrtN);
    EXPECT_NO_THROW(b.validate());
    b.upper[1] = b.lower[1];
    EXPECT_THROW(b.validate(), SpecificationError);
    ParamBlock empty{"e", Vector(), Vector(), RateExponent::SqrtN};
    EXPECT_THROW(empty.validate(), SpecificationError);
}

TEST(BasisFunction, ParseRoundTrip) {
    for (const char* name : {"1", "cos", "sin", "x", "x^2", "1/(1+x^2)", "x/(1+x^2)", "x^2/(1+x^2)", "x[2]"}) {
        const auto b = BasisFunction::parse(name);
        EXPECT_EQ(BasisFunction::parse(b.name()), b) << name;
    }
    EXPECT_THROW(BasisFunction::parse("tanh"), SpecificationError);
}

bool has_relation(const std::vector<NestingRelation>& rels, std::size_t s, std::size_t l) {
    return std::any_of(rels.begin(), rels.end(), [&](const auto& r) { return r.smaller == s && r.larger == l; });
}

TEST(CheckNesting, CosConstantNestedInFullDiffusionBasis) {
    const auto s = ergodic_scenario();
    const std::vector<CandidateModel> fam = {by_id(s, "Diff3/Drif1"), by_id(s, "Diff1/Drif1")};
    const auto rels = check_nesting(fam);
    ASSERT_EQ(rels.size(), 1u);
    EXPECT_EQ(rels[0].smaller, 0u);
    EXPECT_EQ(rels[0].larger, 1u);
    const Matrix& F = rels[0].embedding;
    EXPECT_TRUE((F.transpose() * F).isApprox(Matrix::Identity(F.cols(), F.cols())));
}

TEST(CheckNesting, DisjointBasesGiveNoRelation) {
    const auto s = ergodic_scenario();
    const std::vector<CandidateModel> fam = {by_id(s, "Diff5/Drif1"), by_id(s, "Diff6/Drif1")};
    EXPECT_TRUE(check_nesting(fam).empty());
}

TEST(CheckNesting, VolatilityModel4NestedInModel1) {
    const auto v = make_scenario(Scenario::VolaTrig621);
    const std::vector<CandidateModel> fam = {v.family[v.index_of("M4")], v.family[v.index_of("M1")]};
    const auto rels = check_nesting(fam);
    ASSERT_EQ(rels.size(), 1u);
    EXPECT_EQ(rels[0].smaller, 0u);
}

TEST(CheckNesting, ClosedFormNeverNests) {
    auto closed = CandidateModel::volatility(
        "c", CoefficientSpec::closed([](State, const Vector& t) { return std::exp(t[0]); },
                                     ParamBlock::default_box("diffusion", 1, RateExponent::SqrtN)));
    const std::vector<CandidateModel> fam = {closed, CandidateModel::volatility("v", test::exp_spec({"1", "x"}))};
    EXPECT_TRUE(check_nesting(fam).empty());
}

TEST(CheckNesting, RelationSetIsTransitive) {
    for (Scenario sc : {Scenario::Ergodic61, Scenario::VolaTrig621, Scenario::Nonergodic63}) {
        const auto s = make_scenario(sc);
        const auto rels = check_nesting(s.family);
        for (const auto& a : rels) {
            for (const auto& b : rels) {
                if (a.larger != b.smaller) continue;
                EXPECT_TRUE(has_relation(rels, a.smaller, b.larger))
                    << s.family[a.smaller].id << " < " << s.family[b.larger].id;
            }
        }
    }
}

TEST(CheckNesting, EmbeddingShapesAndStrictDimension) {
    const auto s = ergodic_scenario();
    for (const auto& r : check_nesting(s.family)) {
        const auto& small = s.family[r.smaller];
        const auto& large = s.family[r.larger];
        EXPECT_LT(small.dim(), large.dim());
        EXPECT_EQ(r.embedding.rows(), large.dim());
        EXPECT_EQ(r.embedding.cols(), small.dim());
        EXPECT_EQ(r.offset.size(), large.dim());
    }
}

}  // namespace
}  // namespace qbic
