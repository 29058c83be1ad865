#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fdsgp/errors.hpp"
#include "fdsgp/fd_models.hpp"

namespace fdsgp {
namespace {

FDModel typical(const std::string& name) {
  const auto& spec = find_model(name);
  return FDModel(spec, spec.typical_params);
}

TEST(Registry, HasAllSingleRegimeFamilies) {
  const std::vector<std::string> expected{"greenshields", "greenberg",    "underwood",        "newell",
                                          "drake",        "pipes",        "drew",             "papageorgiou",
                                          "kerner_konhauser", "del_castillo", "jayakrishnan", "ardekani",
                                          "macnicholas",  "wang",         "cheng"};
  EXPECT_EQ(registry_names(), expected);
  for (const auto& spec : registry()) {
    std::set<std::string> names;
    for (const auto& p : spec.params) {
      EXPECT_TRUE(names.insert(p.name).second) << spec.name << " repeats " << p.name;
      EXPECT_LT(p.lower, p.upper);
    }
    EXPECT_TRUE(spec.within_bounds(spec.typical_params)) << spec.name;
  }
}

TEST(Registry, GreenshieldsAndChengSignatures) {
  const auto& g = find_model("greenshields");
  EXPECT_EQ(g.param_names(), (std::vector<std::string>{"v_f", "rho_j"}));
  const auto& c = find_model("Cheng");
  EXPECT_EQ(c.param_names(), (std::vector<std::string>{"v_f", "rho_critical", "m"}));
  EXPECT_DOUBLE_EQ(c.params[2].lower, 1.0);
  EXPECT_DOUBLE_EQ(c.params[2].upper, 8.53);
}

TEST(Registry, LookupAliasesAndMisses) {
  EXPECT_EQ(find_model("Kerner-Konhauser").name, "kerner_konhauser");
  EXPECT_EQ(find_model("del castillo").name, "del_castillo");
  try {
    find_model("nonexistent");
    FAIL();
  } catch (const NotFoundError& e) {
    EXPECT_NE(std::string(e.what()).find("greenshields"), std::string::npos);
  }
  EXPECT_FALSE(find_model("macnicholas").note.empty());
}

TEST(FDModel, RejectsBadParameters) {
  const auto& g = find_model("greenshields");
  EXPECT_THROW(FDModel(g, {52.0}), std::invalid_argument);
  EXPECT_THROW(FDModel(g, {-1.0, 70.0}), std::invalid_argument);
  EXPECT_THROW(FDModel(find_model("cheng"), {68.7, 20.0, 9.0}), std::invalid_argument);
  EXPECT_THROW(typical("greenshields").evaluate(-1.0), std::invalid_argument);
}

TEST(Evaluate, GreenshieldsPoints) {
  const FDModel g(find_model("greenshields"), {52.12, 76.68});
  EXPECT_DOUBLE_EQ(g.evaluate(0.0), 52.12);
  EXPECT_NEAR(g.evaluate(76.68), 0.0, 1e-12);
  EXPECT_NEAR(g.evaluate(38.34), 26.06, 1e-12);
  EXPECT_NEAR(g.evaluate_flow(38.34), 38.34 * 26.06, 1e-9);
  EXPECT_NEAR(g.evaluate_flow(38.34), 999.14, 0.01);
}

TEST(Evaluate, GreenbergAtJamDensity) {
  const FDModel g(find_model("greenberg"), {22.06, 92.49});
  EXPECT_NEAR(g.evaluate(92.49), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(g.evaluate(0.0)));
}

TEST(Evaluate, VanishesAtJamDensity) {
  for (const char* name : {"greenshields", "pipes", "drew"}) {
    const auto m = typical(name);
    EXPECT_NEAR(m.evaluate(m.param("rho_j")), 0.0, 1e-9) << name;
    EXPECT_NEAR(m.evaluate_flow(m.param("rho_j")), 0.0, 1e-9) << name;
  }
}

TEST(Evaluate, FreeFlowLimit) {
  for (const char* name : {"greenshields", "underwood", "drake", "pipes", "drew", "papageorgiou", "cheng"}) {
    const auto m = typical(name);
    const double vf = m.param("v_f");
    EXPECT_NEAR(m.evaluate(kDensityGuardFloor), vf, 0.01 * vf) << name;
  }
}

TEST(Evaluate, FiniteOnGuardedDomainAndFlowIdentity) {
  for (const auto& spec : registry()) {
    const FDModel m(spec, spec.typical_params);
    double jam = 150.0;
    if (auto i = spec.param_index("rho_j")) jam = m.params()[*i];
    for (double rho = 0.0; rho <= 3.0 * jam; rho += jam / 37.0) {
      const double v = m.evaluate(rho);
      EXPECT_TRUE(std::isfinite(v)) << spec.name << " at " << rho;
      EXPECT_EQ(m.evaluate_flow(rho), rho * v);
      EXPECT_EQ(evaluate(m, rho), v);
    }
    EXPECT_EQ(m.evaluate_flow(0.0), 0.0) << spec.name;
  }
}

TEST(Evaluate, KernerKonhauserAsPrinted) {
  const FDModel k(find_model("kerner_konhauser"), {60.0, 100.0});
  const double rho = 30.0;
  const double expected = 60.0 / (1.0 + std::exp((rho / 100.0 - 0.25) / 0.06) - 372e-8);
  EXPECT_DOUBLE_EQ(k.evaluate(rho), expected);
}

TEST(Evaluate, ChengFormula) {
  const FDModel c(find_model("cheng"), {68.70, 20.02, 2.21});
  const double rho = 40.0;
  EXPECT_NEAR(c.evaluate(rho), 68.70 / std::pow(1.0 + std::pow(rho / 20.02, 2.21), 2.0 / 2.21), 1e-12);
}

TEST(Document, RoundTripBitExact) {
  for (const auto& spec : registry()) {
    const FDModel m(spec, spec.typical_params);
    const auto doc = m.to_document("mean.");
    const auto back = FDModel::from_document(doc, "mean.");
    EXPECT_EQ(back.spec().name, spec.name);
    EXPECT_EQ(back.params(), m.params());
  }
}

TEST(MultiRegime, TableConstants) {
  const auto& edie = find_multi_regime("edie");
  EXPECT_DOUBLE_EQ(multi_regime_evaluate(edie, 0.0), 54.9);
  EXPECT_NEAR(multi_regime_evaluate(edie, 162.5), 0.0, 1e-12);
  EXPECT_NEAR(multi_regime_evaluate(find_multi_regime("three_regime"), 50.0), 35.75, 1e-12);
  EXPECT_THROW(find_multi_regime("none"), NotFoundError);
}

TEST(MultiRegime, IntervalsCoverPositiveAxis) {
  for (const auto& m : multi_regime_models()) {
    EXPECT_EQ(m.pieces.size(), m.breakpoints.size() + 1) << m.name;
    for (std::size_t i = 1; i < m.breakpoints.size(); ++i) EXPECT_LT(m.breakpoints[i - 1], m.breakpoints[i]);
    for (double rho = 0.5; rho < 150.0; rho += 0.5) EXPECT_TRUE(std::isfinite(multi_regime_evaluate(m, rho)));
  }
}

}  // namespace
}  // namespace fdsgp
