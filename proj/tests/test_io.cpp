#include <gtest/gtest.h>

#include <string>

#include "helpers.hpp"

using namespace persuasion;
using namespace testing_support;

namespace {

// Runs `parse` and returns the ParseError text, or an empty string if nothing was thrown.
template <class F>
std::string parse_error(F parse) {
  try {
    parse();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

Json e2_json() { return scenario_to_json(scenarios::e2_near_commitment()); }

}  // namespace

TEST(ScenarioJson, ShippedFilesMatchBuiltins) {
  for (const auto& sc : scenarios::all()) {
    auto loaded = load_scenario(scenario_path(sc.name));
    EXPECT_EQ(scenario_to_json(loaded), scenario_to_json(sc)) << sc.name;
  }
}

TEST(ScenarioJson, RoundTripPreservesEveryField) {
  auto sc = scenarios::e1_geometric();
  Experiment noisy;
  noisy.id = "noisy";
  noisy.outcomes = {"lo", "hi"};
  noisy.likelihood = {{frac(2, 3), frac(1, 3)}, {frac(1, 4), frac(3, 4)}};
  sc.menu.push_back(noisy);
  auto back = scenario_from_json(Json::parse(scenario_to_json(sc).dump()));
  EXPECT_EQ(back.name, sc.name);
  EXPECT_EQ(back.env.prior, sc.env.prior);
  EXPECT_EQ(back.env.sender_u, sc.env.sender_u);
  EXPECT_EQ(back.env.receiver_u, sc.env.receiver_u);
  ASSERT_TRUE(back.types.geometric.has_value());
  EXPECT_EQ(back.types.tail_above(4), frac(1, 24));
  ASSERT_EQ(back.menu.size(), 1u);
  EXPECT_EQ(back.menu[0].likelihood, noisy.likelihood);
  EXPECT_EQ(back.options.bound_low, sc.options.bound_low);
  EXPECT_EQ(back.options.bound_radius, sc.options.bound_radius);
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(sc));
}

TEST(ScenarioJson, IntegersAndRationalStringsBothParse) {
  auto j = e2_json();
  j["sender_u"]["3"] = 3;
  EXPECT_EQ(scenario_from_json(j).env.sender_u[2], 3);
}

TEST(ScenarioJson, RejectsNonNormalizedInputWithFieldPath) {
  auto j = e2_json();
  j["prior"]["theta0"] = "5/9";
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("field 'prior'"), std::string::npos);

  j = e2_json();
  j["types"]["finite"]["3"] = "9/10";
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("field 'types'"), std::string::npos);

  j = e2_json();
  j["experiments"] = Json::array({Json{{"id", "bad"},
                                       {"outcomes", {"a", "b"}},
                                       {"likelihood", Json{{"theta0", Json{{"a", "1/2"}, {"b", "1/3"}}},
                                                           {"theta1", Json{{"a", "1"}, {"b", "0"}}}}}}});
  auto msg = parse_error([&] { scenario_from_json(j); });
  EXPECT_NE(msg.find("experiments[0].likelihood.theta0"), std::string::npos) << msg;
  EXPECT_NE(msg.find("5/6"), std::string::npos) << msg;
}

TEST(ScenarioJson, RejectsMalformedFields) {
  auto j = e2_json();
  j["prior"]["theta1"] = "three eighths";
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("prior.theta1"), std::string::npos);

  j = e2_json();
  j["receiver_u"]["theta0"]["bogus"] = "1";
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("receiver_u.theta0.bogus"), std::string::npos);

  j = e2_json();
  j.erase("types");
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("types"), std::string::npos);

  j = e2_json();
  j["types"]["finite"]["x"] = "1/2";
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("types.finite.x"), std::string::npos);

  j = e2_json();
  j["prior"] = Json{{"theta0", "1"}, {"theta1", "0"}};
  EXPECT_NE(parse_error([&] { scenario_from_json(j); }).find("full support"), std::string::npos);

  EXPECT_FALSE(parse_error([] { load_scenario("/nonexistent/scenario.json"); }).empty());
}

TEST(ProfileJson, RoundTripKeepsVerdictAndPayoff) {
  for (auto [sc, which] : {std::pair{scenarios::prosecutor_geometric(), "credible"}, std::pair{scenarios::e3_two_types(), "pooling"},
                           std::pair{scenarios::e2_near_commitment(), "near-commitment"}}) {
    auto prof = construct(sc, which).profile;
    auto back = profile_from_json(Json::parse(profile_to_json(prof, sc.env).dump()), sc.env);
    EXPECT_EQ(profile_to_json(back, sc.env), profile_to_json(prof, sc.env)) << sc.name;
    auto game = game_for(sc, prof, sc.options.cap, 2'000'000);
    auto a = check_pebe(game, prof), b = check_pebe(game_for(sc, back, sc.options.cap, 2'000'000), back);
    EXPECT_EQ(a.pass, b.pass) << sc.name;
    EXPECT_EQ(a.ex_ante_payoff, b.ex_ante_payoff) << sc.name;
  }
}

TEST(ProfileJson, RejectsInconsistentEntries) {
  auto sc = scenarios::e3_two_types();
  auto base = profile_to_json(construct(sc, "pooling").profile, sc.env);

  auto j = base;
  j["initial"] = "missing";
  EXPECT_NE(parse_error([&] { profile_from_json(j, sc.env); }).find("field 'initial'"), std::string::npos);

  j = base;
  j["plans"][0]["mix"][0]["prob"] = "1/2";
  EXPECT_NE(parse_error([&] { profile_from_json(j, sc.env); }).find("plans[0].mix"), std::string::npos);

  j = base;
  j["plans"][0]["mix"][0]["choice"] = Json{{"stop", Json::array({Json::array({"full", "theta1"})})}};
  EXPECT_NE(parse_error([&] { profile_from_json(j, sc.env); }).find("not conducted"), std::string::npos);

  j = base;
  j["off_path"] = "optimistic";
  EXPECT_NE(parse_error([&] { profile_from_json(j, sc.env); }).find("off_path"), std::string::npos);

  j = base;
  j["receiver"] = Json::array({Json{{"initial_outcome", j["plans"][0]["initial_outcome"]},
                                    {"disclosed", Json::array()},
                                    {"belief", Json{{"theta0", "1/2"}, {"theta1", "1/3"}}}}});
  EXPECT_NE(parse_error([&] { profile_from_json(j, sc.env); }).find("receiver[0].belief"), std::string::npos);
}

TEST(CertificateJson, CarriesDeviationAndScope) {
  auto sc = scenarios::e3_two_types();
  auto prof = construct(sc, "pooling").profile;
  auto game = game_for(sc, prof, sc.options.cap, 2'000'000);
  auto j = certificate_to_json(check_pebe(game, prof), game);
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_EQ(j["worst_deviation"]["gain"], "1/3");
  EXPECT_EQ(j["worst_deviation"]["type"], 1);
  EXPECT_NE(j["scope"].get<std::string>().find("not checked"), std::string::npos);
}
