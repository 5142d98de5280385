#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace persuasion;
using namespace testing_support;

namespace {

constexpr std::size_t kBudget = 2'000'000;

struct Built {
  Scenario sc;
  StrategyProfile prof;
  TruncatedGame game;
};

Built built(Scenario sc, const std::string& which) {
  auto prof = construct(sc, which).profile;
  auto game = game_for(sc, prof, sc.options.cap, kBudget);
  return {std::move(sc), std::move(prof), std::move(game)};
}

// Lower end of the payoff bracket: the full-disclosure value minus what the truncated types could move.
void expect_in_bracket(const Built& b, const EquilibriumCertificate& cert) {
  Rational top = concave_closure(b.game.env, b.game.env.prior);
  Rational bottom = full_disclosure_payoff(b.game.env);
  EXPECT_LE(cert.ex_ante_payoff, top);
  EXPECT_GE(cert.ex_ante_payoff, bottom - cert.tail_slack);
}

TypeDistribution finite_types(std::initializer_list<std::pair<std::uint64_t, Rational>> w) {
  TypeDistribution p;
  for (const auto& [t, m] : w) p.finite[t] = m;
  return p;
}

Experiment one_sided_test(const PayoffEnvironment& env) {
  Experiment e;
  e.id = "test";
  e.outcomes = {"high", "low"};
  e.likelihood = {{frac(3, 5), frac(2, 5)}, {Rational(1), Rational(0)}};
  e.validate(env.num_states());
  return e;
}

}  // namespace

TEST(TruncatedGame, TailMassAndBenchmarks) {
  auto b = built(scenarios::e1_geometric(), "appendix-f");
  EXPECT_EQ(b.game.tail, frac(1, 24));
  EXPECT_TRUE(b.game.menu[b.game.full_index].outcomes.size() == 2);
  EXPECT_TRUE(b.game.menu[b.game.null_index].is_uninformative());
  EXPECT_FALSE(b.game.top_type.has_value());

  auto e3 = built(scenarios::e3_two_types(), "pooling");
  EXPECT_EQ(e3.game.tail, 0);
  ASSERT_TRUE(e3.game.top_type.has_value());
  EXPECT_EQ(*e3.game.top_type, 1u);
}

TEST(TruncatedGame, BudgetExceeded) {
  auto sc = scenarios::e1_geometric();
  auto prof = construct(sc, "appendix-f").profile;
  EXPECT_THROW(game_for(sc, prof, 4, 10), BudgetExceeded);
  EXPECT_THROW(game_for(sc, prof, 12, 1000), BudgetExceeded);
}

TEST(CheckPebe, CredibleProsecutorProfilePasses) {
  auto b = built(scenarios::prosecutor_geometric(), "credible");
  auto cert = check_pebe(b.game, b.prof);
  EXPECT_TRUE(cert.pass) << (cert.violations.empty() ? "" : cert.violations.front());
  EXPECT_EQ(cert.ex_ante_payoff, frac(3, 5));
  EXPECT_EQ(cert.ex_ante_payoff, commitment_solve(b.sc.env).value);
  for (const auto& m : cert.sender_margins) EXPECT_GE(m.margin, 0) << m.where;
  for (const auto& m : cert.receiver_margins) EXPECT_GE(m.margin, 0) << m.where;
  EXPECT_NE(std::string(cert.scope).find("not checked"), std::string::npos);
  expect_in_bracket(b, cert);
}

TEST(CheckPebe, PoolingOnNonCredibleOptimumFails) {
  auto b = built(scenarios::e3_two_types(), "pooling");
  auto cert = check_pebe(b.game, b.prof);
  EXPECT_FALSE(cert.pass);
  EXPECT_EQ(cert.ex_ante_payoff, 1);
  ASSERT_TRUE(cert.worst_deviation.has_value());
  EXPECT_FALSE(cert.worst_deviation->initial);
  EXPECT_EQ(cert.worst_deviation->type, 1u);
  // Type 1 does best by running the fully informative experiment and showing only theta1.
  EXPECT_EQ(cert.worst_deviation->gain, frac(1, 3));
  EXPECT_NE(cert.worst_deviation->plan.find("run full"), std::string::npos);
}

TEST(CheckPebe, FullCapacityHistoryMustUseNaiveBelief) {
  auto b = built(scenarios::e3_two_types(), "pooling");
  ASSERT_EQ(b.game.top_type.value_or(0), 1u);
  // After the optimal experiment's 1/3 outcome, disclosing one null outcome uses the top type's whole capacity.
  std::size_t third = 0;
  const auto& init = b.game.menu[b.prof.initial];
  for (std::size_t o = 0; o < init.outcomes.size(); ++o)
    if (posterior_update(b.game.env.prior, init, o) == Belief::binary(frac(1, 3))) third = o;
  History h{b.prof.initial, third, {{b.game.null_index, 0}}};
  auto prof = b.prof;
  prof.receiver.push_back({h, Belief::binary(0), {}});
  auto cert = check_pebe(b.game, prof);
  bool found = false;
  for (const auto& v : cert.violations) found |= v.find("full-capacity") != std::string::npos;
  EXPECT_TRUE(found);
  EXPECT_FALSE(cert.pass);
}

TEST(CheckPebe, GeometricExamplePassesAtCapFour) {
  auto b = built(scenarios::e1_geometric(), "appendix-f");
  auto cert = check_pebe(b.game, b.prof);
  EXPECT_TRUE(cert.pass) << (cert.violations.empty() ? "" : cert.violations.front());
  EXPECT_EQ(cert.tail_mass, frac(1, 24));
  EXPECT_EQ(cert.tail_slack, frac(1, 8));
  // Truncated Bayes beliefs sit within the tail's reach of the closed-form posteriors.
  bool saw_high = false;
  for (const auto& [h, bel] : cert.onpath_bayes) {
    Rational x = bel[1];
    bool near_high = abs(x - frac(2, 3)) <= frac(1, 24), near_low = abs(x - frac(1, 3)) <= frac(1, 24);
    EXPECT_TRUE(near_high || near_low) << x.get_str();
    saw_high |= near_high;
  }
  EXPECT_TRUE(saw_high);
  expect_in_bracket(b, cert);
}

TEST(CheckPebe, NearCommitmentCappedPivotPasses) {
  auto sc = scenarios::e2_near_commitment();
  for (Rational eps : {frac(1, 4), frac(1, 8), frac(1, 16)}) {
    auto res = construct_near_commitment_eq(sc.env, sc.types, eps);
    auto game = game_for(sc, res.profile, 3, kBudget);
    auto cert = check_pebe(game, res.profile);
    EXPECT_TRUE(cert.pass) << eps.get_str();
    EXPECT_EQ(cert.ex_ante_payoff, res.payoff);
    EXPECT_LE(res.gap, res.delta_bound);
    expect_in_bracket(Built{sc, res.profile, game}, cert);
  }
}

TEST(CheckPebe, NearCommitmentUnboundedTypesPasses) {
  auto env = scenarios::four_action(frac(3, 8));
  Rational eps = frac(1, 10);
  TypeDistribution p = finite_types({{0, eps / 4}, {3, 1 - eps / 2}});
  p.geometric = TypeDistribution::Geometric{4, eps / 8, frac(1, 2)};
  auto res = construct_near_commitment_eq(env, p, eps);
  EXPECT_EQ(res.n, 3u);
  auto game = build_truncated_game(env, p, res.profile.experiments, 5, kBudget);
  auto cert = check_pebe(game, res.profile);
  EXPECT_TRUE(cert.pass) << (cert.violations.empty() ? "" : cert.violations.front());
  EXPECT_LE(res.gap, res.delta_bound);
  EXPECT_EQ(cert.ex_ante_payoff, ex_ante_payoff(game, res.profile));
}

TEST(CheckPebe, MenuEnlargementNeverLowersBestGain) {
  auto sc = scenarios::e3_two_types();
  auto prof = construct(sc, "pooling").profile;
  auto base = check_pebe(build_truncated_game(sc.env, sc.types, prof.experiments, 1), prof);
  ASSERT_TRUE(base.worst_deviation.has_value());
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    // A garbling of the fully informative experiment: each state keeps its own label with a random probability.
    Experiment noisy;
    noisy.id = "noisy" + std::to_string(trial);
    noisy.outcomes = {"l0", "l1"};
    Rational a = random_fraction(rng, 0, 1, 13), c = random_fraction(rng, 0, 1, 13);
    noisy.likelihood = {{a, 1 - a}, {1 - c, c}};
    auto menu = prof.experiments;
    menu.push_back(noisy);
    auto cert = check_pebe(build_truncated_game(sc.env, sc.types, menu, 1), prof);
    ASSERT_TRUE(cert.worst_deviation.has_value());
    EXPECT_GE(cert.worst_deviation->gain, base.worst_deviation->gain);
  }
}

TEST(ExAntePayoff, OneSidedTestProfile) {
  auto env = scenarios::four_action(frac(3, 8));
  auto types = finite_types({{0, frac(1, 3)}, {1, frac(2, 3)}});
  auto prof = skeleton_profile(env, Experiment::uninformative(env, "initial"), "one-sided test");
  prof.experiments.push_back(one_sided_test(env));
  prof.off_path = OffPathRule::Naive;
  prof.tie = TieRule::SenderBest;
  Observation high{3, 0}, low{3, 1};
  prof.plans.push_back(plan(0, 0, 0, {}, pure(SenderChoice::stop({}))));
  prof.plans.push_back(plan(1, 1, 0, {}, pure(SenderChoice::run(3))));
  prof.plans.push_back(plan(1, 1, 0, {high}, pure(SenderChoice::stop({high}))));
  prof.plans.push_back(plan(1, 1, 0, {low}, pure(SenderChoice::stop({}))));
  // Silence pools type 0 with type 1's low outcome, so the stated belief there is the Bayes belief 1/4.
  prof.receiver.push_back({History{0, 0, {}}, Belief::binary(frac(1, 4)), {}});
  auto game = build_truncated_game(env, types, prof.experiments, 1);
  EXPECT_EQ(ex_ante_payoff(game, prof), frac(5, 2));

  // Type 1 earns 3/4 * 3 + 1/4 * 2 = 11/4; running the fully informative experiment, showing theta1 and hiding
  // theta0 earns 3/8 * 7/2 + 5/8 * 2 = 41/16, which is the margin 3/16 at the root.
  auto cert = check_pebe(game, prof);
  EXPECT_TRUE(cert.pass) << (cert.violations.empty() ? "" : cert.violations.front());
  EXPECT_EQ(cert.ex_ante_payoff, frac(5, 2));
  for (const auto& m : cert.sender_margins)
    if (m.where == "type 1 at initial:none conducted {}") {
      EXPECT_EQ(m.margin, frac(3, 16));
    }
  expect_in_bracket(Built{Scenario{}, prof, game}, cert);
}

TEST(ExAntePayoff, FullDisclosureAndNoInformation) {
  auto b = built(scenarios::e1_full_disclosure(), "full-disclosure");
  EXPECT_EQ(ex_ante_payoff(b.game, b.prof), frac(3, 2));
  auto cert = check_pebe(b.game, b.prof);
  EXPECT_TRUE(cert.pass);
  expect_in_bracket(b, cert);

  auto env = scenarios::four_action(frac(3, 8));
  auto prof = skeleton_profile(env, Experiment::uninformative(env, "initial"), "silent");
  prof.plans.push_back(plan(0, kNoTypeBound, 0, {}, pure(SenderChoice::stop({}))));
  auto game = build_truncated_game(env, TypeDistribution::degenerate(0), prof.experiments, 0);
  EXPECT_EQ(ex_ante_payoff(game, prof), 2);
}

TEST(ExAntePayoff, MonteCarloWithinThreeStandardErrors) {
  for (auto [sc, which] : {std::pair{scenarios::e1_geometric(), "appendix-f"}, std::pair{scenarios::prosecutor_geometric(), "credible"}}) {
    auto b = built(sc, which);
    auto sim = simulate(b.game, b.prof, 100000, 7, kBudget);
    ASSERT_GT(sim.std_error, 0);
    EXPECT_LE(std::abs(sim.mean - to_double(sim.exact)), 3 * sim.std_error) << sc.name;
  }
}

TEST(ImitationGain, MatchesLowerBoundOnPoolingProfile) {
  auto b = built(scenarios::e3_two_types(), "pooling");
  BeliefBall ball{{Belief::binary(frac(1, 3))}, 0};
  auto g = imitate_and_reveal_gain(b.game, b.prof, 0, 1, ball, 1);
  EXPECT_EQ(g.reach, frac(1, 6));
  EXPECT_EQ(g.bound, frac(1, 6));
  EXPECT_EQ(g.gain, frac(1, 6));
  EXPECT_GE(g.gain, g.bound);
  EXPECT_THROW(imitate_and_reveal_gain(b.game, b.prof, 1, 1, ball, 1), PreconditionViolation);
}

TEST(ImitationGain, NothingToGainWhenTargetsAreNotReached) {
  auto b = built(scenarios::e1_full_disclosure(), "full-disclosure");
  BeliefBall ball{{Belief::binary(frac(1, 3))}, frac(1, 12)};
  auto g = imitate_and_reveal_gain(b.game, b.prof, 1, 2, ball, 1);
  EXPECT_EQ(g.reach, 0);
  EXPECT_EQ(g.gain, 0);
  EXPECT_GE(g.gain, g.bound);
}

TEST(Theorem3, PlugInValues) {
  auto e1 = scenarios::three_action(frac(1, 6));
  auto t = theorem3_threshold(e1, commitment_solve(e1), 1);
  EXPECT_EQ(t.n, 37);
  EXPECT_EQ(t.gap, 1);
  EXPECT_EQ(t.top_payoff, 3);
  EXPECT_EQ(t.bottom_payoff, 0);

  // Optimum at 1/8 splits into 0 and 1/4; the gap is 7/2 - 2, so n = ceil(7 / (3/16)) + 1.
  auto e2 = scenarios::four_action(frac(1, 8));
  auto t2 = theorem3_threshold(e2, commitment_solve(e2), 1);
  EXPECT_EQ(t2.gap, frac(3, 2));
  EXPECT_EQ(t2.n, 39);
  EXPECT_EQ(t2.eta_ceiling(1, 1), frac(1, 78));
}

TEST(Theorem3, HypothesisFailsWhenStatePayoffTiesAnOptimalBelief) {
  auto env = scenarios::three_action(frac(1, 2));
  try {
    theorem3_threshold(env, commitment_solve(env), 1);
    FAIL() << "expected HypothesisFail";
  } catch (const HypothesisFail& e) {
    EXPECT_NE(std::string(e.what()).find("2/3"), std::string::npos);
  }
}

TEST(Lemma1, ThreeActionConstants) {
  auto env = scenarios::three_action(frac(1, 2));
  auto sol = commitment_solve(env);
  auto c = lemma1_constants(env, sol, Belief::binary(frac(1, 3)), frac(1, 12), 100);
  EXPECT_EQ(c.state, 1u);
  EXPECT_EQ(c.mass_in_ball, frac(1, 2));
  EXPECT_LE(c.sup_lower, c.sup_upper);
  EXPECT_LT(c.sup_upper, sol.value);
  EXPECT_LE(c.eta, frac(1, 4));
  EXPECT_EQ(c.eps, c.eta / 3);
  // With eta = 1/12: 3 * 3 / (2 * (1/36) * (1/2) * 1) + 72 = 396.
  EXPECT_EQ(c.eta, frac(1, 12));
  EXPECT_EQ(c.n_types, 397);
}

TEST(Lemma1, Preconditions) {
  auto env = scenarios::three_action(frac(1, 2));
  auto sol = commitment_solve(env);
  EXPECT_THROW(lemma1_constants(env, sol, Belief::binary(frac(1, 3)), frac(1, 2), 100), BadRadius);
  EXPECT_THROW(lemma1_constants(env, sol, Belief::binary(frac(1, 3)), 0, 100), BadRadius);
  // 1/4 is non-credible but the optimum induces nothing within 1/100 of it.
  EXPECT_THROW(lemma1_constants(env, sol, Belief::binary(frac(1, 4)), frac(1, 100), 100), PreconditionViolation);
  EXPECT_THROW(lemma1_constants(env, sol, Belief::binary(frac(2, 3)), frac(1, 100), 100), PreconditionViolation);
}

TEST(UniformNeighbourhood, Membership) {
  TypeDistribution uniform;
  for (std::uint64_t t = 0; t < 10; ++t) uniform.finite[t] = frac(1, 10);
  EXPECT_TRUE(in_uniform_neighbourhood(uniform, 10));
  EXPECT_FALSE(in_uniform_neighbourhood(uniform, 9));
  EXPECT_FALSE(in_uniform_neighbourhood(uniform, 0));

  TypeDistribution near;
  for (std::uint64_t t = 0; t < 10; ++t) near.finite[t] = t % 2 ? frac(11, 100) : frac(9, 100) - frac(1, 1000);
  near.finite[10] = frac(5, 1000);
  EXPECT_TRUE(in_uniform_neighbourhood(near, 10));

  EXPECT_FALSE(in_uniform_neighbourhood(scenarios::halving_types(), 3));
}
