#pragma once

// Explicit equilibrium constructions: pooling on a credible optimum, the
// near-commitment profile with its per-interim subgames, full disclosure with
// skeptical beliefs, and the geometric-type example.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "persuasion/concavify.hpp"
#include "persuasion/profile.hpp"

namespace persuasion {

// ---------------------------------------------------------------------------
// Disclosure rules over states sorted by full-revelation payoff

struct DisclosureRule {
  std::vector<Index> order;  // states, best first
  Vec probability;           // disclosure probability, aligned with `order`

  bool monotone() const {
    for (std::size_t j = 0; j < probability.size(); ++j)
      if (probability[j] > 0)
        for (std::size_t earlier = 0; earlier < j; ++earlier)
          if (probability[earlier] != 1) return false;
    return true;
  }

  Rational disclosure_mass(const Vec& probs) const {
    Rational q = 0;
    for (std::size_t j = 0; j < order.size(); ++j) q += probs[j] * probability[j];
    return q;
  }
};

// Reveal the first `j` states for sure and state j+1 with probability beta.
inline DisclosureRule monotone_rule(const std::vector<Index>& order, std::size_t j, const Rational& beta) {
  DisclosureRule r{order, Vec(order.size(), Rational(0))};
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (s < j) r.probability[s] = 1;
    else if (s == j) r.probability[s] = beta;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Threshold sequence for a non-credible interim belief

struct SortedInterim {
  std::vector<Index> order;  // support states by decreasing u, stable on index
  Vec probs;                 // interim probability, aligned with order
  Vec payoffs;               // full-revelation payoff u, aligned with order
};

inline SortedInterim sort_interim(const PayoffEnvironment& env, const Belief& interim) {
  SortedInterim s;
  s.order = interim.support();
  std::stable_sort(s.order.begin(), s.order.end(),
                   [&](Index a, Index b) { return state_payoff(env, a) > state_payoff(env, b); });
  for (Index st : s.order) {
    s.probs.push_back(interim[st]);
    s.payoffs.push_back(state_payoff(env, st));
  }
  return s;
}

// Entry i-1 holds the no-disclosure payoff that leaves the sender indifferent
// between u_star and revealing exactly the top i states; the last entry is infinite.
inline std::vector<Extended> u_star_sequence(const Vec& probs, const Vec& u, const Rational& u_star) {
  std::size_t k = probs.size();
  if (k == 0 || u.size() != k) throw PreconditionViolation("threshold sequence needs aligned nonempty inputs");
  if (sum(probs) != 1) throw PreconditionViolation("interim probabilities must sum to 1");
  for (std::size_t j = 0; j + 1 < k; ++j)
    if (u[j] < u[j + 1]) throw PreconditionViolation("payoffs must be sorted in decreasing order");
  if (!(u.front() > u_star) || !(u_star > u.back()))
    throw PreconditionViolation("need u_1 > u* > u_k, got u_1 = " + u.front().get_str() + ", u* = " + u_star.get_str() +
                                ", u_k = " + u.back().get_str());
  std::vector<Extended> seq;
  Rational mass = 0, value = 0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    mass += probs[i];
    value += probs[i] * u[i];
    seq.push_back(Extended{(u_star - value) / (1 - mass), false});
  }
  seq.push_back(Extended::top());
  return seq;
}

// Smallest 1-based i with u_i >= u_i* >= u_{i+1}.
inline std::size_t find_disclosure_index(const std::vector<Extended>& seq, const Vec& u) {
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    if (!seq[i].infinite && u[i] >= seq[i].value && seq[i].value >= u[i + 1]) return i + 1;
  throw InternalInvariantFailure("no disclosure index satisfies the incentive bracket");
}

// Local-minimum test at 1-based i; the value before the first entry is u_star itself.
inline bool is_local_minimum(const std::vector<Extended>& seq, const Rational& u_star, std::size_t i) {
  Extended before = i == 1 ? Extended{u_star, false} : seq[i - 2];
  Extended after = i == seq.size() ? Extended::top() : seq[i];
  return seq[i - 1] <= before && seq[i - 1] <= after;
}

inline bool satisfies_bracket(const std::vector<Extended>& seq, const Vec& u, std::size_t i) {
  if (i >= seq.size()) return false;  // the last entry is infinite
  return !seq[i - 1].infinite && u[i - 1] >= seq[i - 1].value && seq[i - 1].value >= u[i];
}

// No-disclosure payoff that keeps the sender indifferent when the top tau states are
// revealed and state tau+1 is revealed with probability beta (tau is 1-based).
inline Extended u_star_mixed(const Vec& probs, const Vec& u, const Rational& u_star, std::size_t tau, const Rational& beta) {
  if (tau < 1 || tau > probs.size()) throw PreconditionViolation("tau out of range");
  Rational num = u_star, den = 1;
  for (std::size_t j = 0; j < tau; ++j) {
    num -= probs[j] * u[j];
    den -= probs[j];
  }
  if (tau < probs.size()) {
    num -= beta * probs[tau] * u[tau];
    den -= beta * probs[tau];
  }
  if (den == 0) return Extended::top();
  return Extended{num / den, false};
}

// ---------------------------------------------------------------------------
// Subgame after a non-credible interim belief

enum class SubgameCase { Credible, RevealAll, A, B, CappedPivot };

inline std::string to_string(SubgameCase c) {
  switch (c) {
    case SubgameCase::Credible: return "credible";
    case SubgameCase::RevealAll: return "reveal-all";
    case SubgameCase::A: return "A";
    case SubgameCase::CappedPivot: return "capped-pivot";
    default: return "B";
  }
}

// Type masses seen by the no-disclosure history.
struct TypeGroups {
  std::uint64_t n = 0;
  std::optional<std::uint64_t> top;  // highest type when p is bounded and it differs from n
  Rational zero;     // type 0
  Rational low;      // types 1..n-1
  Rational pivot;    // type n plus the imitating highest type
  Rational high;     // every other type above n
};

inline TypeGroups type_groups(const TypeDistribution& p, std::uint64_t n) {
  TypeGroups g;
  g.n = n;
  g.zero = p.mass(0);
  g.low = n >= 2 ? p.mass_between(1, n - 1) : Rational(0);
  g.pivot = n == 0 ? Rational(0) : p.mass(n);
  if (auto top = p.max_type(); top && *top > n) {
    g.top = top;
    g.pivot += p.mass(*top);
  }
  g.high = 1 - g.zero - g.low - g.pivot;
  if (n == 0) g.high = 1 - g.zero;
  return g;
}

struct SubgameInputs {
  const PayoffEnvironment* env = nullptr;
  Belief interim;
  SortedInterim sorted;
  Rational u_star;
  std::vector<Extended> seq;
  std::size_t index = 0;  // 1-based, at the end of its equal-payoff block
  TypeGroups groups;
};

struct ReceiverMix {
  std::vector<std::pair<Index, Rational>> weights;
  Rational value = 0;  // sender's expected payoff
};

struct SubgameConstruction {
  Belief interim;
  SortedInterim sorted;
  Rational u_star;
  std::vector<Extended> seq;
  std::size_t index = 0;
  SubgameCase tag = SubgameCase::Credible;
  Belief pi_index;          // no-disclosure belief when only types 0..n-1 conceal
  // Case A: weight of the pivotal type on revealing the top states.
  Rational reveal_weight = 0;
  // Case B: types 1..n-1 reveal the top j states and state j+1 with probability beta.
  std::size_t j = 0;
  Rational beta = 0;
  Rational q_hat = 0, v_hat = 0;
  Extended u_star_at_hat;
  Belief silent_belief;     // equilibrium belief when nothing is disclosed
  ReceiverMix silent_action;
  DisclosureRule low_rule;  // disclosure by types 1..n-1
};

namespace detail {

// Range of sender payoffs over the receiver's mixed best replies.
inline std::pair<Rational, Rational> reply_payoff_range(const PayoffEnvironment& env, const Belief& b) {
  return {indirect_utility_min(env, b), indirect_utility_max(env, b)};
}

// Mix of at most two best replies at `b` whose sender value is exactly `target`.
inline ReceiverMix mix_for_value(const PayoffEnvironment& env, const Belief& b, const Rational& target) {
  auto br = best_responses(env, b);
  std::optional<Index> lo, hi;
  for (Index a : br) {
    const Rational& v = env.sender_u[a];
    if (v <= target && (!lo || v > env.sender_u[*lo])) lo = a;
    if (v >= target && (!hi || v < env.sender_u[*hi])) hi = a;
  }
  if (!lo || !hi) throw NoIndifferencePoint("value " + target.get_str() + " is outside the best-reply range at " + b.str());
  ReceiverMix m;
  m.value = target;
  if (env.sender_u[*lo] == target) m.weights = {{*lo, Rational(1)}};
  else if (env.sender_u[*hi] == target) m.weights = {{*hi, Rational(1)}};
  else {
    Rational w = (target - env.sender_u[*lo]) / (env.sender_u[*hi] - env.sender_u[*lo]);
    m.weights = {{*lo, Rational(1 - w)}, {*hi, w}};
    std::sort(m.weights.begin(), m.weights.end());
  }
  return m;
}

// Parameters in [0,1] where the receiver's best-reply set can change along w0 + x*w1.
inline std::vector<Rational> reply_breakpoints(const PayoffEnvironment& env, const Vec& w0, const Vec& w1) {
  std::set<Rational> pts{Rational(0), Rational(1)};
  for (Index a = 0; a < env.num_actions(); ++a)
    for (Index b = a + 1; b < env.num_actions(); ++b) {
      Rational d0 = 0, d1 = 0;
      for (Index s = 0; s < w0.size(); ++s) {
        Rational diff = env.receiver_u[s][a] - env.receiver_u[s][b];
        d0 += w0[s] * diff;
        d1 += w1[s] * diff;
      }
      if (d1 == 0) continue;
      Rational x = -d0 / d1;
      if (x > 0 && x < 1) pts.insert(x);
    }
  return {pts.begin(), pts.end()};
}

inline Vec affine(const Vec& w0, const Vec& w1, const Rational& x) {
  Vec w(w0.size());
  for (Index s = 0; s < w.size(); ++s) w[s] = w0[s] + x * w1[s];
  return w;
}

}  // namespace detail

inline SubgameInputs make_subgame_inputs(const PayoffEnvironment& env, const Belief& interim, const TypeDistribution& p,
                                         std::uint64_t n) {
  SubgameInputs in;
  in.env = &env;
  in.interim = interim;
  in.sorted = sort_interim(env, interim);
  in.u_star = indirect_utility_max(env, interim);
  in.seq = u_star_sequence(in.sorted.probs, in.sorted.payoffs, in.u_star);
  in.index = find_disclosure_index(in.seq, in.sorted.payoffs);
  // Within an equal-payoff block the bracket carries to the block's last state.
  while (in.index < in.sorted.payoffs.size() - 1 && in.sorted.payoffs[in.index - 1] == in.sorted.payoffs[in.index])
    ++in.index;
  if (!satisfies_bracket(in.seq, in.sorted.payoffs, in.index))
    throw InternalInvariantFailure("disclosure index lost its bracket when moved to the end of a tie block");
  in.groups = type_groups(p, n);
  return in;
}

// No-disclosure belief when types 1..n-1 reveal exactly the top i states and type n never conceals.
inline Belief belief_pi_index(const SubgameInputs& in) {
  const auto& s = in.sorted;
  Vec w(in.interim.size(), Rational(0));
  for (std::size_t j = 0; j < s.order.size(); ++j)
    w[s.order[j]] = in.groups.zero * s.probs[j] + (j >= in.index ? in.groups.low * s.probs[j] : Rational(0));
  if (sum(w) == 0) throw PreconditionViolation("the no-disclosure history has zero probability for types 0..n-1");
  return Belief::from_weights(w);
}

struct CaseClassification {
  SubgameCase tag;
  Belief pi_index;
};

inline CaseClassification classify_case(const SubgameInputs& in) {
  Belief bi = belief_pi_index(in);
  Rational revealed_mass = 0, revealed_value = 0;
  for (std::size_t j = 0; j < in.index; ++j) {
    revealed_mass += in.sorted.probs[j];
    revealed_value += in.sorted.probs[j] * in.sorted.payoffs[j];
  }
  // Equality counts as case A.
  for (Index a : best_responses(*in.env, bi))
    if (in.u_star <= revealed_value + (1 - revealed_mass) * in.env->sender_u[a]) return {SubgameCase::A, bi};
  return {SubgameCase::B, bi};
}

inline CaseClassification classify_case(const PayoffEnvironment& env, const Belief& interim, const TypeDistribution& p,
                                        std::uint64_t n) {
  return classify_case(make_subgame_inputs(env, interim, p, n));
}

inline SubgameConstruction base_construction(const SubgameInputs& in) {
  SubgameConstruction c;
  c.interim = in.interim;
  c.sorted = in.sorted;
  c.u_star = in.u_star;
  c.seq = in.seq;
  c.index = in.index;
  c.pi_index = belief_pi_index(in);
  return c;
}

inline SubgameConstruction solve_case_a(const SubgameInputs& in) {
  const auto& env = *in.env;
  SubgameConstruction c = base_construction(in);
  c.tag = SubgameCase::A;
  Rational target = in.seq[in.index - 1].value;
  // Silent weights: w0 without the pivotal type, w1 its contribution per unit of reveal weight.
  Vec w0(in.interim.size(), Rational(0)), w1(in.interim.size(), Rational(0));
  for (std::size_t j = 0; j < in.sorted.order.size(); ++j) {
    Index s = in.sorted.order[j];
    bool concealed = j >= in.index;
    w0[s] = in.groups.zero * in.sorted.probs[j] + (concealed ? in.groups.low * in.sorted.probs[j] : Rational(0));
    w1[s] = concealed ? in.groups.pivot * in.sorted.probs[j] : Rational(0);
  }
  for (const auto& x : detail::reply_breakpoints(env, w0, w1)) {
    Vec w = detail::affine(w0, w1, x);
    if (sum(w) == 0) continue;
    Belief b = Belief::from_weights(w);
    auto [lo, hi] = detail::reply_payoff_range(env, b);
    if (lo <= target && target <= hi) {
      c.reveal_weight = x;
      c.silent_belief = b;
      c.silent_action = detail::mix_for_value(env, b, target);
      c.low_rule = monotone_rule(in.sorted.order, in.index, Rational(0));
      return c;
    }
  }
  throw NoIndifferencePoint("no mixing weight of type " + std::to_string(in.groups.n) + " gives the receiver a reply worth " +
                            target.get_str() + " at interim " + in.interim.str());
}

inline SubgameConstruction solve_case_b(const SubgameInputs& in) {
  const auto& env = *in.env;
  SubgameConstruction c = base_construction(in);
  c.tag = SubgameCase::B;
  const auto& probs = in.sorted.probs;
  const auto& u = in.sorted.payoffs;
  std::size_t k = probs.size();
  // Silent weights when types 1..n-1 reveal the top tau states and state tau+1 with probability beta.
  auto weights = [&](std::size_t tau, const Rational& beta) {
    Vec w(in.interim.size(), Rational(0));
    for (std::size_t j = 0; j < k; ++j) {
      Rational hidden = j < tau ? Rational(0) : (j == tau ? Rational(1 - beta) : Rational(1));
      w[in.sorted.order[j]] = (in.groups.zero + in.groups.low * hidden) * probs[j];
    }
    return w;
  };
  auto finish = [&](std::size_t tau, const Rational& beta, const Belief& b, const Rational& v) {
    c.j = tau;
    c.beta = beta;
    c.q_hat = 0;
    for (std::size_t j = 0; j < tau; ++j) c.q_hat += probs[j];
    if (tau < k) c.q_hat += beta * probs[tau];
    c.v_hat = v;
    c.silent_belief = b;
    c.silent_action = detail::mix_for_value(env, b, v);
    c.low_rule = monotone_rule(in.sorted.order, tau, beta);
    c.u_star_at_hat = u_star_mixed(probs, u, in.u_star, tau, beta);
    if (Extended{v, false} <= c.u_star_at_hat) return c;
    throw SecondICFail("silent payoff " + v.get_str() + " exceeds the pivotal type's indifference level " +
                       c.u_star_at_hat.str());
  };
  for (std::size_t tau = in.index; tau <= k; ++tau) {
    // Left end of the segment: the step graph is the whole interval [u_{tau+1}, u_tau].
    Vec w = weights(tau, 0);
    if (sum(w) > 0) {
      Belief b = Belief::from_weights(w);
      auto [lo, hi] = detail::reply_payoff_range(env, b);
      Extended step_lo = tau < k ? Extended{u[tau], false} : Extended{lo, false};
      Rational low_end = std::max(lo, step_lo.value);
      Rational high_end = std::min(hi, u[tau - 1]);
      if (low_end <= high_end) return finish(tau, 0, b, low_end);
    }
    if (tau == k) break;
    // Interior of the segment: the step graph is the single value u_{tau+1}.
    Vec w1(in.interim.size(), Rational(0));
    w1[in.sorted.order[tau]] = -in.groups.low * probs[tau];
    for (const auto& beta : detail::reply_breakpoints(env, w, w1)) {
      if (beta == 0 || beta == 1) continue;
      Vec wb = detail::affine(w, w1, beta);
      if (sum(wb) == 0) continue;
      Belief b = Belief::from_weights(wb);
      auto [lo, hi] = detail::reply_payoff_range(env, b);
      if (lo <= u[tau] && u[tau] <= hi) return finish(tau, beta, b, u[tau]);
    }
  }
  throw NoIntersection("no disclosure probability at or above " + [&] {
    Rational q = 0;
    for (std::size_t j = 0; j < in.index; ++j) q += probs[j];
    return q.get_str();
  }() + " makes the silent payoff match the disclosure threshold at interim " + in.interim.str());
}

// ---------------------------------------------------------------------------
// Profiles

struct ProfileSlots {
  std::size_t initial = 0, full = 1, null = 2;
};

inline StrategyProfile skeleton_profile(const PayoffEnvironment& env, Experiment initial, std::string label) {
  StrategyProfile prof;
  prof.label = std::move(label);
  initial.id = initial.id.empty() ? "initial" : initial.id;
  prof.experiments = {std::move(initial), Experiment::fully_informative(env, "full"), Experiment::uninformative(env, "null")};
  prof.initial = 0;
  return prof;
}

inline PlanEntry plan(std::uint64_t lo, std::uint64_t hi, std::size_t s0, ObservationSet conducted,
                      std::vector<std::pair<SenderChoice, Rational>> mix) {
  return PlanEntry{lo, hi, s0, normalized(std::move(conducted)), std::move(mix)};
}

inline std::vector<std::pair<SenderChoice, Rational>> pure(SenderChoice c) { return {{std::move(c), Rational(1)}}; }

inline std::vector<Index> non_credible_beliefs(const PayoffEnvironment& env, const PosteriorDistribution& d) {
  std::vector<Index> out;
  for (Index j = 0; j < d.atoms.size(); ++j)
    if (!classify_credibility(env, d.atoms[j].belief).credible) out.push_back(j);
  return out;
}

// Credibility strong enough for non-monotone environments: no belief on a sub-support
// where every best reply beats the sender's payoff at `b`.
inline bool strongly_credible(const PayoffEnvironment& env, const Belief& b) {
  Rational here = indirect_utility_max(env, b);
  for (Index a = 0; a < env.num_actions(); ++a) {
    if (!(env.sender_u[a] > here)) continue;
    for (const auto& sub : nonempty_subsets(b.support().size())) {
      std::vector<Index> support;
      for (Index i : sub) support.push_back(b.support()[i]);
      auto sol = max_margin_belief(env, a, support);
      if (sol && sol->margin > 0) return false;
    }
  }
  return true;
}

// Optimal initial experiment, no additional experiments, naive off-path beliefs.
// An equilibrium exactly when every induced belief is credible.
inline StrategyProfile pooling_profile(const PayoffEnvironment& env, const CommitmentSolution& sol, std::string label) {
  auto prof = skeleton_profile(env, posteriors_to_experiment(env.prior, sol.experiment, "optimal", "m"), std::move(label));
  prof.off_path = OffPathRule::Naive;
  prof.tie = TieRule::SenderBest;
  for (std::size_t s0 = 0; s0 < sol.experiment.atoms.size(); ++s0) {
    prof.plans.push_back(plan(1, kNoTypeBound, s0, {}, pure(SenderChoice::stop({}))));
    prof.receiver.push_back({History{0, s0, {}}, sol.experiment.atoms[s0].belief, {}});
  }
  return prof;
}

inline StrategyProfile construct_credible_eq(const PayoffEnvironment& env, const CommitmentSolution& sol) {
  auto bad = non_credible_beliefs(env, sol.experiment);
  if (!bad.empty()) {
    std::string msg = "optimal experiment induces non-credible beliefs:";
    for (Index j : bad) msg += " " + sol.experiment.atoms[j].belief.str();
    throw PreconditionViolation(msg);
  }
  for (const auto& atom : sol.experiment.atoms)
    if (!strongly_credible(env, atom.belief))
      throw PreconditionViolation("belief " + atom.belief.str() +
                                  " is credible but a sub-support belief forces a better reply; the environment is not monotone");
  return pooling_profile(env, sol, "credible");
}

inline StrategyProfile construct_full_disclosure_eq(const PayoffEnvironment& env, const TypeDistribution& p) {
  p.validate();
  if (p.bounded()) throw PreconditionViolation("full-disclosure construction needs a type distribution with unbounded support");
  Experiment reveal = Experiment::fully_informative(env, "reveal");
  auto prof = skeleton_profile(env, reveal, "full-disclosure");
  prof.off_path = OffPathRule::Skeptical;
  for (Index s = 0; s < env.num_states(); ++s) {
    prof.plans.push_back(plan(1, kNoTypeBound, s, {}, pure(SenderChoice::stop({}))));
    prof.receiver.push_back({History{0, s, {}}, Belief::degenerate(env.num_states(), s), {}});
  }
  return prof;
}

struct NearCommitmentResult {
  StrategyProfile profile;
  PerturbationResult perturbation;
  std::vector<SubgameConstruction> subgames;  // aligned with the initial experiment's outcomes
  std::uint64_t n = 0;
  Rational payoff, gap, commitment_value;
  // A priori guarantee: payoff >= commitment_value - delta_bound whenever p(n) > 1 - eps.
  Rational delta_bound;
};

// (eps + eta) times the spread between the commitment value and the worst action;
// eta is the perturbation weight, zero when the exact optimum is used.
inline Rational near_commitment_delta(const PayoffEnvironment& env, const Rational& value, const Rational& eps,
                                      const Rational& eta) {
  return (eps + eta) * (value - min_sender_payoff(env));
}

inline std::uint64_t dominant_type(const TypeDistribution& p, const Rational& eps) {
  std::uint64_t limit = p.finite.empty() ? 0 : p.finite.rbegin()->first;
  if (p.geometric) limit = std::max(limit, p.geometric->start);
  for (std::uint64_t t = 0; t <= limit; ++t)
    if (p.mass(t) > 1 - eps) return t;
  throw PreconditionViolation("no type has probability above 1 - " + eps.get_str());
}

namespace detail {

// Run `count` null experiments from `prefix`, then apply `last` at the end.
inline void null_chain(std::vector<PlanEntry>& out, std::uint64_t lo, std::uint64_t hi, std::size_t s0,
                       const ProfileSlots& slot, std::uint64_t count, ObservationSet prefix, SenderChoice last) {
  ObservationSet c = std::move(prefix);
  for (std::uint64_t r = 0; r < count; ++r) {
    out.push_back(plan(lo, hi, s0, c, pure(SenderChoice::run(slot.null))));
    c = with_added(c, {slot.null, 0});
  }
  out.push_back(plan(lo, hi, s0, c, pure(std::move(last))));
}

inline ObservationSet nulls(const ProfileSlots& slot, std::uint64_t count) {
  return ObservationSet(count, Observation{slot.null, 0});
}

// Run one full experiment at `prefix`; disclose the prefix plus the state when `reveal(state)`.
template <class Reveal>
inline void reveal_step(std::vector<PlanEntry>& out, std::uint64_t lo, std::uint64_t hi, std::size_t s0,
                        const ProfileSlots& slot, const Belief& interim, const ObservationSet& prefix, Reveal reveal,
                        std::optional<std::pair<SenderChoice, Rational>> alternative = std::nullopt) {
  auto mix = pure(SenderChoice::run(slot.full));
  if (alternative) {
    mix.front().second = 1 - alternative->second;
    mix.push_back(*alternative);
  }
  out.push_back(plan(lo, hi, s0, prefix, mix));
  for (Index s : interim.support()) {
    ObservationSet c = with_added(prefix, {slot.full, s});
    out.push_back(plan(lo, hi, s0, c, pure(SenderChoice::stop(reveal(s) ? c : prefix))));
  }
}


// Largest floor m such that some affine function lambda on the support of
// `interim` dominates the concave closure there, touches it at `interim`
// (value u_star) and has every vertex value at least m.  Any no-disclosure
// payoff at or below m cannot be combined with belief splitting to beat u_star.
inline Rational supporting_floor(const PayoffEnvironment& env, const Belief& interim, const Rational& u_star) {
  auto supp = interim.support();
  std::size_t k = supp.size(), A = env.num_actions();
  // Columns: m+, m-, d[k] (lambda = m + d), y[a][b] for a != b.
  std::size_t ycol = 2 + k, nvars = ycol + A * A;
  LinearProgram lp(nvars);
  lp.objective[0] = 1;
  lp.objective[1] = -1;
  for (Index a = 0; a < A; ++a)
    for (std::size_t i = 0; i < k; ++i) {
      Vec row(nvars, Rational(0));
      row[0] = 1;
      row[1] = -1;
      row[2 + i] = 1;
      for (Index b = 0; b < A; ++b)
        if (b != a) row[ycol + a * A + b] = -(env.receiver_u[supp[i]][a] - env.receiver_u[supp[i]][b]);
      lp.add(row, Sense::GreaterEq, env.sender_u[a]);
    }
  Vec touch(nvars, Rational(0));
  touch[0] = 1;
  touch[1] = -1;
  for (std::size_t i = 0; i < k; ++i) touch[2 + i] = interim[supp[i]];
  lp.add(touch, Sense::Equal, u_star);
  auto res = solve_lp(lp);
  if (res.status != LpStatus::Optimal)
    throw PreconditionViolation("no supporting hyperplane of the concave closure at " + interim.str() + " with value " + u_star.get_str());
  return res.value;
}

// Silent value for the capped-pivot subgame: types 1..n-1 reveal the top j sorted
// states and state j+1 with probability beta; the receiver's value at the resulting
// silent belief must be a best-reply value, at most `floor`, and consistent with
// those disclosure incentives.
struct CappedSilent {
  std::size_t j = 0;
  Rational beta = 0;
  std::optional<Belief> belief;
  ReceiverMix action;
};

inline CappedSilent capped_silent(const PayoffEnvironment& env, const SortedInterim& sorted, const Rational& zero,
                                  const Rational& low, const Rational& floor) {
  std::size_t k = sorted.order.size();
  auto weights = [&](std::size_t tau, const Rational& beta) {
    Vec w(env.num_states(), Rational(0));
    for (std::size_t j = 0; j < k; ++j) {
      Rational keep = j < tau ? Rational(0) : (j == tau ? Rational(1 - beta) : Rational(1));
      w[sorted.order[j]] = sorted.probs[j] * (zero + low * keep);
    }
    return w;
  };
  for (std::size_t tau = 0; tau <= k; ++tau) {
    Vec w = weights(tau, 0);
    if (sum(w) == 0) {
      // Nobody stays silent; the skeptical default applies there.
      CappedSilent out;
      out.j = tau;
      return out;
    }
    Belief b = Belief::from_weights(w);
    auto [lo, hi] = reply_payoff_range(env, b);
    if (tau < k) lo = std::max(lo, sorted.payoffs[tau]);
    hi = std::min(hi, floor);
    if (tau > 0) hi = std::min(hi, sorted.payoffs[tau - 1]);
    if (lo <= hi) return CappedSilent{tau, 0, b, mix_for_value(env, b, hi)};
    if (tau == k || low == 0) continue;
    const Rational& target = sorted.payoffs[tau];
    if (target > floor) continue;
    Vec w1(env.num_states(), Rational(0));
    w1[sorted.order[tau]] = -sorted.probs[tau] * low;
    auto pts = reply_breakpoints(env, w, w1);
    std::vector<Rational> probes;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      probes.push_back(pts[i]);
      if (i + 1 < pts.size()) probes.push_back((pts[i] + pts[i + 1]) / 2);
    }
    for (const auto& beta : probes) {
      if (!(beta > 0 && beta < 1)) continue;
      Vec wb = affine(w, w1, beta);
      Belief bb = Belief::from_weights(wb);
      auto [l2, h2] = reply_payoff_range(env, bb);
      if (l2 <= target && target <= h2) return CappedSilent{tau, beta, bb, mix_for_value(env, bb, target)};
    }
  }
  throw NoIntersection("no silent payoff at or below " + floor.get_str() + " is consistent with disclosure incentives");
}
}  // namespace detail


// Variant for a bounded type distribution whose dominant type is also the highest
// type.  That type's full-capacity disclosures are read naively, so it can split any
// interim belief; a perturbed optimum would leave it room to gain.  The exact optimum
// is used instead, the dominant type discloses exactly its capacity of null outcomes,
// and the silent payoff is held at or below the supporting-hyperplane floor.
inline NearCommitmentResult construct_capped_pivot_eq(const PayoffEnvironment& env, const TypeDistribution& p,
                                                      const CommitmentSolution& sol, std::uint64_t n) {
  NearCommitmentResult res;
  res.commitment_value = sol.value;
  res.n = n;
  const auto& dist = sol.experiment;
  auto prof = skeleton_profile(env, posteriors_to_experiment(env.prior, dist, "optimal", "m"), "near-commitment");
  prof.off_path = OffPathRule::Skeptical;
  prof.tie = TieRule::SenderBest;
  ProfileSlots slot;
  Rational zero = p.mass(0), low = n >= 2 ? p.mass_between(1, n - 1) : Rational(0), pivot = p.mass(n);
  ObservationSet pivot_path = detail::nulls(slot, n);
  Rational payoff = 0;

  for (std::size_t s0 = 0; s0 < dist.atoms.size(); ++s0) {
    const Belief& interim = dist.atoms[s0].belief;
    SubgameConstruction sg;
    sg.interim = interim;
    sg.u_star = indirect_utility_max(env, interim);
    sg.tag = SubgameCase::CappedPivot;
    sg.sorted = sort_interim(env, interim);
    Index a_star = sender_preferred_reply(env, interim);
    Rational floor = detail::supporting_floor(env, interim, sg.u_star);
    auto silent = detail::capped_silent(env, sg.sorted, zero, low, floor);
    sg.j = silent.j;
    sg.beta = silent.beta;
    sg.silent_action = silent.action;
    if (silent.belief) sg.silent_belief = *silent.belief;
    sg.low_rule = monotone_rule(sg.sorted.order, silent.j, silent.beta);
    // Skeptical reading of an unreached silent history.
    Rational v = silent.belief ? silent.action.value : sg.sorted.payoffs.back();

    detail::null_chain(prof.plans, n, n, s0, slot, n, {}, SenderChoice::stop(pivot_path));
    prof.receiver.push_back({History{0, s0, pivot_path}, interim, {{a_star, Rational(1)}}});
    if (n >= 2) {
      std::size_t k = sg.sorted.order.size();
      prof.plans.push_back(plan(1, n - 1, s0, {}, pure(SenderChoice::run(slot.full))));
      for (std::size_t j = 0; j < k; ++j) {
        Index s = sg.sorted.order[j];
        ObservationSet c{{slot.full, s}};
        if (j < silent.j)
          prof.plans.push_back(plan(1, n - 1, s0, c, pure(SenderChoice::stop(c))));
        else if (j == silent.j && silent.beta > 0)
          prof.plans.push_back(plan(1, n - 1, s0, c, {{SenderChoice::stop(c), silent.beta}, {SenderChoice::stop({}), Rational(1 - silent.beta)}}));
        else
          prof.plans.push_back(plan(1, n - 1, s0, c, pure(SenderChoice::stop({}))));
        if (j < silent.j || (j == silent.j && silent.beta > 0))
          prof.receiver.push_back({History{0, s0, c}, Belief::degenerate(env.num_states(), s), {}});
      }
    }
    if (silent.belief) prof.receiver.push_back({History{0, s0, {}}, *silent.belief, silent.action.weights});

    Rational v_low = 0;
    for (std::size_t j = 0; j < sg.sorted.order.size(); ++j) v_low += sg.sorted.probs[j] * std::max(sg.sorted.payoffs[j], v);
    payoff += dist.atoms[s0].weight * (zero * v + low * v_low + pivot * sg.u_star);
    res.subgames.push_back(std::move(sg));
  }
  res.profile = std::move(prof);
  res.payoff = payoff;
  res.gap = sol.value - payoff;
  return res;
}

inline NearCommitmentResult construct_near_commitment_eq(const PayoffEnvironment& env, const TypeDistribution& p,
                                                         const Rational& eps) {
  p.validate();
  NearCommitmentResult res;
  auto sol = commitment_solve(env);
  res.commitment_value = sol.value;
  res.n = dominant_type(p, eps);
  if (res.n == 0) throw PreconditionViolation("the dominant type must have positive capacity");
  if (auto top = p.max_type(); top && *top == res.n) {
    auto capped = construct_capped_pivot_eq(env, p, sol, res.n);
    capped.delta_bound = near_commitment_delta(env, sol.value, eps, 0);
    return capped;
  }
  if (p.bounded())
    throw PreconditionViolation("bounded type support above the dominant type " + std::to_string(res.n) +
                                " is not covered: the highest type reads its full-capacity disclosures naively and can split the perturbed interim beliefs");
  res.perturbation = perturb_experiment(env, sol, eps);
  const auto& dist = res.perturbation.experiment;
  auto prof = skeleton_profile(env, posteriors_to_experiment(env.prior, dist, "perturbed", "m"), "near-commitment");
  prof.off_path = OffPathRule::Skeptical;
  prof.tie = TieRule::SenderBest;
  ProfileSlots slot;
  const std::uint64_t n = res.n;
  TypeGroups groups = type_groups(p, n);
  auto top = groups.top;
  Rational payoff = 0;

  for (std::size_t s0 = 0; s0 < dist.atoms.size(); ++s0) {
    const Belief& interim = dist.atoms[s0].belief;
    Rational u_star = indirect_utility_max(env, interim);
    Index a_star = sender_preferred_reply(env, interim);
    auto verdict = classify_credibility(env, interim);
    SubgameConstruction sg;
    Rational v_zero = u_star, v_low = u_star, v_pivot = u_star, v_high = u_star;
    auto add = [&](PlanEntry e) { prof.plans.push_back(std::move(e)); };
    auto state_rx = [&](const ObservationSet& c, Index s) {
      prof.receiver.push_back({History{0, s0, c}, Belief::degenerate(env.num_states(), s), {}});
    };

    if (verdict.credible) {
      sg.interim = interim;
      sg.u_star = u_star;
      sg.tag = SubgameCase::Credible;
      sg.silent_belief = interim;
      sg.silent_action = ReceiverMix{{{a_star, Rational(1)}}, u_star};
      add(plan(1, kNoTypeBound, s0, {}, pure(SenderChoice::stop({}))));
    } else {
      SortedInterim sorted = sort_interim(env, interim);
      if (!(u_star > sorted.payoffs.back())) {
        // Revealing every state weakly beats u_star: all types with capacity reveal.
        sg.interim = interim;
        sg.sorted = sorted;
        sg.u_star = u_star;
        sg.tag = SubgameCase::RevealAll;
        sg.silent_belief = interim;
        sg.silent_action = ReceiverMix{{{a_star, Rational(1)}}, u_star};
        detail::reveal_step(prof.plans, 1, kNoTypeBound, s0, slot, interim, {}, [](Index) { return true; });
        for (Index s : interim.support()) state_rx({{slot.full, s}}, s);
        v_low = v_pivot = v_high = full_disclosure_payoff(env, interim);
        if (groups.zero == 0) sg.silent_action = ReceiverMix{};
      } else {
        SubgameInputs in = make_subgame_inputs(env, interim, p, n);
        auto cls = classify_case(in);
        sg = cls.tag == SubgameCase::A ? solve_case_a(in) : solve_case_b(in);
        std::vector<bool> top_state(env.num_states(), false);
        std::size_t shown = sg.tag == SubgameCase::A ? sg.index : sg.j;
        for (std::size_t j = 0; j < shown; ++j) top_state[sorted.order[j]] = true;
        auto reveal_top = [&](Index s) { return top_state[s]; };
        Rational revealed_value = 0;
        for (std::size_t j = 0; j < shown; ++j) revealed_value += sorted.probs[j] * sorted.payoffs[j];
        Rational silent = sg.silent_action.value;
        v_zero = silent;
        ObservationSet pivot_path = detail::nulls(slot, n);

        auto pivot_plan = [&](std::uint64_t t) {
          if (sg.tag == SubgameCase::A && sg.reveal_weight > 0) {
            std::optional<std::pair<SenderChoice, Rational>> alt;
            if (sg.reveal_weight != 1) alt = std::make_pair(SenderChoice::run(slot.null), Rational(1 - sg.reveal_weight));
            detail::reveal_step(prof.plans, t, t, s0, slot, interim, {}, reveal_top, alt);
            if (sg.reveal_weight == 1) return;
            // The null branch continues with n-1 more nulls.
            detail::null_chain(prof.plans, t, t, s0, slot, n - 1, detail::nulls(slot, 1), SenderChoice::stop(pivot_path));
            return;
          }
          detail::null_chain(prof.plans, t, t, s0, slot, n, {}, SenderChoice::stop(pivot_path));
        };
        pivot_plan(n);
        if (top) pivot_plan(*top);

        if (n >= 2) {
          if (sg.tag == SubgameCase::A || sg.beta == 0) {
            detail::reveal_step(prof.plans, 1, n - 1, s0, slot, interim, {}, reveal_top);
          } else {
            // Mixed disclosure of state j+1 happens after observing it.
            Index edge = sorted.order[sg.j];
            add(plan(1, n - 1, s0, {}, pure(SenderChoice::run(slot.full))));
            for (Index s : interim.support()) {
              ObservationSet c{{slot.full, s}};
              if (s == edge)
                add(plan(1, n - 1, s0, c, {{SenderChoice::stop(c), sg.beta}, {SenderChoice::stop({}), Rational(1 - sg.beta)}}));
              else
                add(plan(1, n - 1, s0, c, pure(SenderChoice::stop(top_state[s] ? c : ObservationSet{}))));
            }
          }
        }
        for (Index s : interim.support())
          if (top_state[s] || (sg.tag == SubgameCase::B && sg.beta > 0 && s == sorted.order[sg.j])) state_rx({{slot.full, s}}, s);

        // Types above n (other than the imitating top type) pool with the pivot, then reveal good states.
        std::uint64_t high_lo = n + 1;
        std::uint64_t high_hi = top ? *top - 1 : kNoTypeBound;
        bool has_high = groups.high > 0 && high_lo <= high_hi;
        if (has_high) {
          detail::null_chain(prof.plans, high_lo, high_hi, s0, slot, n, {}, SenderChoice::run(slot.full));
          for (Index s : interim.support()) {
            ObservationSet c = with_added(pivot_path, {slot.full, s});
            bool good = state_payoff(env, s) > u_star;
            prof.plans.push_back(plan(high_lo, high_hi, s0, c, pure(SenderChoice::stop(good ? c : pivot_path))));
            if (good) state_rx(c, s);
          }
        }
        // Belief after the pivot's null disclosures.
        Rational pivot_share = sg.tag == SubgameCase::A ? Rational(1 - sg.reveal_weight) : Rational(1);
        Vec w(env.num_states(), Rational(0));
        for (Index s : interim.support()) {
          w[s] = groups.pivot * pivot_share * interim[s];
          if (has_high && !(state_payoff(env, s) > u_star)) w[s] += groups.high * interim[s];
        }
        if (sum(w) > 0) {
          Belief b = Belief::from_weights(w);
          auto br = best_responses(env, b);
          if (std::find(br.begin(), br.end(), a_star) == br.end())
            throw PreconditionViolation("epsilon too large: the pooled belief " + b.str() + " after the pivot's null disclosures moves the receiver off " +
                                        env.actions[a_star]);
          prof.receiver.push_back({History{0, s0, pivot_path}, b, {{a_star, Rational(1)}}});
        }
        if (sg.tag == SubgameCase::A) {
          Rational mass = 0;
          for (std::size_t j = 0; j < sg.index; ++j) mass += sorted.probs[j];
          v_low = revealed_value + (1 - mass) * silent;
        } else {
          v_low = revealed_value + (sg.j < sorted.order.size() ? sg.beta * sorted.probs[sg.j] * sorted.payoffs[sg.j] : Rational(0)) +
                  (1 - sg.q_hat) * silent;
        }
        v_pivot = u_star;
        v_high = 0;
        for (Index s : interim.support()) v_high += interim[s] * std::max(state_payoff(env, s), u_star);
      }
    }
    // Silent history: stated whenever some type reaches it.
    bool silent_reached = groups.zero > 0 || (sg.tag == SubgameCase::Credible) ||
                          (sg.tag == SubgameCase::A && (groups.low > 0 || sg.reveal_weight > 0)) ||
                          (sg.tag == SubgameCase::B && groups.low > 0);
    if (silent_reached && !sg.silent_action.weights.empty())
      prof.receiver.push_back({History{0, s0, {}}, sg.silent_belief, sg.silent_action.weights});
    payoff += dist.atoms[s0].weight *
              (groups.zero * v_zero + groups.low * v_low + groups.pivot * v_pivot + groups.high * v_high);
    res.subgames.push_back(std::move(sg));
  }
  res.profile = std::move(prof);
  res.payoff = payoff;
  res.gap = sol.value - payoff;
  res.delta_bound = near_commitment_delta(env, sol.value, eps, res.perturbation.eta);
  return res;
}

// ---------------------------------------------------------------------------
// Geometric-type example: repeated one-sided tests, disclosing the first good signal

struct AppendixFReport {
  StrategyProfile profile;
  Rational disclosure_posterior;
  Rational silent_posterior;
  struct Step {
    std::uint64_t type;
    Rational continuation;  // payoff from t-1 repetitions given the low state
    Rational on_path;
    Rational deviation;
  };
  std::vector<Step> steps;
};

inline AppendixFReport appendix_f_equilibrium(const PayoffEnvironment& env, const TypeDistribution& p,
                                              std::uint64_t depth = 12) {
  p.validate();
  if (env.num_states() != 2) throw PreconditionViolation("the geometric-type example has two states");
  if (env.prior != Belief::binary(frac(1, 2))) throw PreconditionViolation("the geometric-type example needs prior 1/2");
  Belief third = Belief::binary(frac(1, 3)), two_thirds = Belief::binary(frac(2, 3));
  if (indirect_utility_max(env, third) != 2 || indirect_utility_max(env, two_thirds) != 3 ||
      indirect_utility_min(env, third) != 0 || state_payoff(env, 0) != 0 || state_payoff(env, 1) != 3)
    throw PreconditionViolation("environment does not match the three-action example with thresholds 1/3 and 2/3");
  if (p.mass(0) != frac(1, 3) || p.bounded() || !p.geometric || p.geometric->start != 1 || p.geometric->base != frac(1, 3) ||
      p.geometric->ratio != frac(1, 2))
    throw PreconditionViolation("type distribution must be p(0) = 1/3 and p(t) = (1/3)(1/2)^(t-1)");
  AppendixFReport rep;
  Rational pi0 = env.prior[1], p0 = p.mass(0);
  Rational g = p.generating(frac(2, 3));
  rep.disclosure_posterior = pi0 * (1 - p0) / ((1 - p0) - (1 - pi0) * (g - p0));
  rep.silent_posterior = pi0 * p0 / (p0 + (1 - pi0) * (g - p0));

  Experiment test{"test", {"low", "high"}, {{frac(2, 3), frac(1, 3)}, {Rational(0), Rational(1)}}};
  auto prof = skeleton_profile(env, Experiment::uninformative(env, "silent"), "geometric-example");
  prof.experiments.push_back(test);
  const std::size_t t_idx = 3;
  prof.off_path = OffPathRule::Skeptical;
  for (std::uint64_t k = 0; k <= depth; ++k) {
    ObservationSet lows(k, Observation{t_idx, 0});
    if (k < depth) prof.plans.push_back(plan(k + 1, kNoTypeBound, 0, lows, pure(SenderChoice::run(t_idx))));
    if (k >= 1) prof.plans.push_back(plan(k, k, 0, lows, pure(SenderChoice::stop({}))));
    if (k < depth) {
      ObservationSet hit = with_added(lows, {t_idx, 1});
      prof.plans.push_back(plan(k + 1, kNoTypeBound, 0, hit, pure(SenderChoice::stop({{t_idx, 1}}))));
    }
  }
  prof.receiver.push_back({History{0, 0, {}}, Belief::binary(rep.silent_posterior), {}});
  prof.receiver.push_back({History{0, 0, {{t_idx, 1}}}, Belief::binary(rep.disclosure_posterior), {}});
  rep.profile = std::move(prof);

  Rational u_hi = indirect_utility_max(env, two_thirds), u_lo = indirect_utility_max(env, third);
  Rational u_top = state_payoff(env, 1);
  Rational miss = 1;  // (2/3)^(t-1)
  for (std::uint64_t t = 1; t <= depth; ++t) {
    Rational cont = (1 - miss) * u_hi + miss * u_lo;
    rep.steps.push_back({t, cont, frac(2, 3) * u_hi + frac(1, 3) * cont, frac(1, 2) * u_top + frac(1, 2) * cont});
    miss *= frac(2, 3);
  }
  return rep;
}

}  // namespace persuasion
