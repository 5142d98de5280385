#pragma once

// Built-in environments.  Receiver payoffs are one concrete choice that puts the
// receiver's indifference points at the stated thresholds with increasing
// differences; only the thresholds matter for every computation here.

#include <string>
#include <vector>

#include "persuasion/io.hpp"

namespace persuasion::scenarios {

// Actions 0, 2, 3; receiver switches at 1/3 and 2/3.  Prior is the weight on theta1.
inline PayoffEnvironment three_action(const Rational& prior) {
  PayoffEnvironment env;
  env.states = {"theta0", "theta1"};
  env.actions = {"0", "2", "3"};
  env.sender_u = {0, 2, 3};
  env.receiver_u = {{0, -1, -3}, {0, 2, 3}};
  env.prior = Belief::binary(prior);
  return env;
}

// Actions 0, 2, 3, 7/2; receiver switches at 1/4, 1/2 and 3/4.
inline PayoffEnvironment four_action(const Rational& prior) {
  PayoffEnvironment env;
  env.states = {"theta0", "theta1"};
  env.actions = {"0", "2", "3", "7/2"};
  env.sender_u = {0, 2, 3, frac(7, 2)};
  env.receiver_u = {{0, -1, -2, -5}, {0, 3, 4, 5}};
  env.prior = Belief::binary(prior);
  return env;
}

// Convict exactly when guilt has probability at least 1/2.
inline PayoffEnvironment prosecutor(const Rational& prior) {
  PayoffEnvironment env;
  env.states = {"innocent", "guilty"};
  env.actions = {"acquit", "convict"};
  env.sender_u = {0, 1};
  env.receiver_u = {{0, -1}, {0, 1}};
  env.prior = Belief::binary(prior);
  return env;
}

// p(0) = 1/3 and p(t) = (1/3)(1/2)^(t-1) for t >= 1.
inline TypeDistribution halving_types() {
  TypeDistribution p;
  p.finite[0] = frac(1, 3);
  p.geometric = TypeDistribution::Geometric{1, frac(1, 3), frac(1, 2)};
  return p;
}

inline TypeDistribution two_point(std::uint64_t n, const Rational& mass_n) {
  TypeDistribution p;
  p.finite[0] = 1 - mass_n;
  p.finite[n] = mass_n;
  return p;
}

inline Scenario make(std::string name, std::string note, PayoffEnvironment env, TypeDistribution types, std::string construction,
                     std::uint64_t cap) {
  Scenario sc;
  sc.name = std::move(name);
  sc.note = std::move(note) + ". Receiver payoffs are one instantiation of the stated switching thresholds.";
  sc.env = std::move(env);
  sc.types = std::move(types);
  sc.options.construction = std::move(construction);
  sc.options.cap = cap;
  return sc;
}

inline Scenario e1_geometric() {
  auto sc = make("e1-geometric", "three-action example at prior 1/2 with halving type weights; repeated one-sided tests",
                 three_action(frac(1, 2)), halving_types(), "appendix-f", 4);
  sc.options.bound_state = "theta1";
  sc.options.bound_low = frac(1, 3);
  sc.options.bound_radius = frac(1, 12);
  return sc;
}

inline Scenario e1_full_disclosure() {
  return make("e1-full-disclosure", "three-action example at prior 1/2; unbounded types support a fully revealing equilibrium",
              three_action(frac(1, 2)), halving_types(), "full-disclosure", 4);
}

inline Scenario e1_no_information() {
  return make("e1-no-information", "three-action example at prior 3/4, where the optimum sends no information",
              three_action(frac(3, 4)), TypeDistribution::degenerate(1), "credible", 2);
}

inline Scenario e2_near_commitment() {
  auto sc = make("e2-near-commitment", "four-action example at prior 3/8; one dominant type with capacity 3",
                 four_action(frac(3, 8)), two_point(3, frac(19, 20)), "near-commitment", 3);
  sc.options.epsilon = frac(1, 10);
  return sc;
}

inline Scenario e3_two_types() {
  auto sc = make("e3-two-types", "three-action example at prior 1/6 with types 0 and 1 equally likely; the optimum is not credible",
                 three_action(frac(1, 6)), two_point(1, frac(1, 2)), "pooling", 1);
  sc.options.bound_state = "theta1";
  return sc;
}

inline Scenario prosecutor_geometric() {
  TypeDistribution p;
  p.geometric = TypeDistribution::Geometric{0, frac(1, 2), frac(1, 2)};
  return make("prosecutor", "conviction threshold 1/2 at prior 3/10; every optimal posterior is credible", prosecutor(frac(3, 10)), p,
              "credible", 3);
}

inline std::vector<Scenario> all() {
  return {e1_geometric(), e1_full_disclosure(), e1_no_information(), e2_near_commitment(), e3_two_types(), prosecutor_geometric()};
}

}  // namespace persuasion::scenarios
