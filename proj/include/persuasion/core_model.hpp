#pragma once

// Domain types and the receiver/sender primitives everything else builds on.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "persuasion/errors.hpp"
#include "persuasion/rational.hpp"
#include "persuasion/simplex.hpp"

namespace persuasion {

using Index = std::size_t;

class Belief {
 public:
  Belief() = default;
  explicit Belief(Vec probs) : p_(std::move(probs)) {
    if (p_.empty()) throw InvalidDistribution("belief over an empty state set");
    for (std::size_t i = 0; i < p_.size(); ++i)
      if (p_[i] < 0) throw InvalidDistribution("negative probability at state index " + std::to_string(i));
    Rational s = sum(p_);
    if (s != 1) throw InvalidDistribution("belief sums to " + s.get_str() + ", expected 1");
  }

  static Belief degenerate(std::size_t n, Index i) {
    Vec v(n, Rational(0));
    v.at(i) = 1;
    return Belief(std::move(v));
  }

  // Normalises a nonnegative weight vector with positive total.
  static Belief from_weights(const Vec& w) {
    Rational s = sum(w);
    if (s <= 0) throw ZeroProbabilityOutcome("weights have zero total mass");
    Vec v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / s;
    return Belief(std::move(v));
  }

  // Two-state shorthand: probability x on the second state.
  static Belief binary(const Rational& x) { return Belief(Vec{Rational(1 - x), x}); }

  const Vec& probs() const { return p_; }
  std::size_t size() const { return p_.size(); }
  const Rational& operator[](Index i) const { return p_[i]; }

  std::vector<Index> support() const {
    std::vector<Index> s;
    for (Index i = 0; i < p_.size(); ++i)
      if (p_[i] > 0) s.push_back(i);
    return s;
  }
  bool is_degenerate() const { return support().size() == 1; }

  friend bool operator==(const Belief& a, const Belief& b) { return a.p_ == b.p_; }
  friend bool operator!=(const Belief& a, const Belief& b) { return !(a == b); }
  friend bool operator<(const Belief& a, const Belief& b) { return a.p_ < b.p_; }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < p_.size(); ++i) s += (i ? ", " : "") + p_[i].get_str();
    return s + ")";
  }

 private:
  Vec p_;
};

struct PayoffEnvironment {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Vec sender_u;                  // per action
  std::vector<Vec> receiver_u;   // [state][action]
  Belief prior;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_actions() const { return actions.size(); }

  void validate() const {
    if (states.empty() || actions.empty()) throw InvalidDistribution("environment needs states and actions");
    if (sender_u.size() != actions.size()) throw InvalidDistribution("sender_u width differs from action count");
    if (receiver_u.size() != states.size()) throw InvalidDistribution("receiver_u rows differ from state count");
    for (const auto& row : receiver_u)
      if (row.size() != actions.size()) throw InvalidDistribution("receiver_u row width differs from action count");
    if (prior.size() != states.size()) throw InvalidDistribution("prior width differs from state count");
    if (prior.support().size() != states.size()) throw InvalidDistribution("prior must have full support");
  }

  Index state_index(const std::string& name) const {
    auto it = std::find(states.begin(), states.end(), name);
    if (it == states.end()) throw InvalidDistribution("unknown state " + name);
    return static_cast<Index>(it - states.begin());
  }
  Index action_index(const std::string& name) const {
    auto it = std::find(actions.begin(), actions.end(), name);
    if (it == actions.end()) throw InvalidDistribution("unknown action " + name);
    return static_cast<Index>(it - actions.begin());
  }

  PayoffEnvironment with_prior(Belief b) const {
    PayoffEnvironment e = *this;
    e.prior = std::move(b);
    return e;
  }
};

// p over capacities 0,1,2,...; an optional geometric tail w*r^k at start+k.
struct TypeDistribution {
  struct Geometric {
    std::uint64_t start = 0;
    Rational base = 0;
    Rational ratio = 0;
  };

  std::map<std::uint64_t, Rational> finite;
  std::optional<Geometric> geometric;

  static TypeDistribution degenerate(std::uint64_t t) {
    TypeDistribution p;
    p.finite[t] = 1;
    return p;
  }

  void validate() const {
    Rational total = 0;
    for (const auto& [t, w] : finite) {
      if (w < 0) throw InvalidDistribution("negative type weight at t=" + std::to_string(t));
      total += w;
    }
    if (geometric) {
      if (geometric->base < 0) throw InvalidDistribution("negative geometric base weight");
      if (geometric->ratio <= 0 || geometric->ratio >= 1) throw InvalidDistribution("geometric ratio must lie in (0,1)");
      if (!finite.empty() && finite.rbegin()->first >= geometric->start && geometric->base > 0)
        throw InvalidDistribution("finite part overlaps the geometric tail");
      total += geometric->base / (1 - geometric->ratio);
    }
    if (total != 1) throw InvalidDistribution("type weights sum to " + total.get_str() + ", expected 1");
  }

  Rational mass(std::uint64_t t) const {
    Rational m = 0;
    if (auto it = finite.find(t); it != finite.end()) m += it->second;
    if (geometric && geometric->base > 0 && t >= geometric->start) {
      Rational w = geometric->base;
      for (std::uint64_t k = geometric->start; k < t; ++k) w *= geometric->ratio;
      m += w;
    }
    return m;
  }

  bool bounded() const { return !geometric || geometric->base == 0; }

  std::optional<std::uint64_t> max_type() const {
    if (!bounded()) return std::nullopt;
    for (auto it = finite.rbegin(); it != finite.rend(); ++it)
      if (it->second > 0) return it->first;
    return std::nullopt;
  }

  // Mass strictly above `t`.
  Rational tail_above(std::uint64_t t) const {
    Rational below = 0;
    for (std::uint64_t s = 0; s <= t; ++s) below += mass(s);
    return 1 - below;
  }

  Rational mass_between(std::uint64_t lo, std::uint64_t hi) const {
    Rational m = 0;
    for (std::uint64_t s = lo; s <= hi; ++s) m += mass(s);
    return m;
  }

  // Exact sum over t of p(t) x^t for 0 <= x <= 1.
  Rational generating(const Rational& x) const {
    Rational g = 0;
    for (const auto& [t, w] : finite) {
      Rational pw = 1;
      for (std::uint64_t k = 0; k < t; ++k) pw *= x;
      g += w * pw;
    }
    if (geometric && geometric->base > 0) {
      Rational lead = geometric->base;
      for (std::uint64_t k = 0; k < geometric->start; ++k) lead *= x;
      g += lead / (1 - geometric->ratio * x);
    }
    return g;
  }
};

struct Experiment {
  std::string id;
  std::vector<std::string> outcomes;
  std::vector<Vec> likelihood;  // [state][outcome]

  void validate(std::size_t num_states) const {
    if (likelihood.size() != num_states) throw InvalidDistribution("experiment " + id + ": wrong state count");
    for (std::size_t s = 0; s < num_states; ++s) {
      if (likelihood[s].size() != outcomes.size()) throw InvalidDistribution("experiment " + id + ": wrong outcome count");
      Rational tot = 0;
      for (const auto& l : likelihood[s]) {
        if (l < 0) throw InvalidDistribution("experiment " + id + ": negative likelihood");
        tot += l;
      }
      if (tot != 1) throw InvalidDistribution("experiment " + id + ": likelihoods for state index " + std::to_string(s) + " sum to " + tot.get_str());
    }
  }

  static Experiment fully_informative(const PayoffEnvironment& env, std::string id = "full") {
    Experiment e;
    e.id = std::move(id);
    std::size_t n = env.num_states();
    e.outcomes = env.states;
    e.likelihood.assign(n, Vec(n, Rational(0)));
    for (std::size_t s = 0; s < n; ++s) e.likelihood[s][s] = 1;
    return e;
  }

  static Experiment uninformative(const PayoffEnvironment& env, std::string id = "null") {
    Experiment e;
    e.id = std::move(id);
    e.outcomes = {"none"};
    e.likelihood.assign(env.num_states(), Vec{Rational(1)});
    return e;
  }

  bool is_uninformative() const {
    for (std::size_t o = 0; o < outcomes.size(); ++o)
      for (const auto& row : likelihood)
        if (row[o] != likelihood.front()[o]) return false;
    return true;
  }
};

struct PosteriorAtom {
  Belief belief;
  Rational weight;
};

struct PosteriorDistribution {
  std::vector<PosteriorAtom> atoms;

  Vec mean() const {
    Vec m(atoms.empty() ? 0 : atoms.front().belief.size(), Rational(0));
    for (const auto& a : atoms)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += a.weight * a.belief[i];
    return m;
  }

  Rational total_weight() const {
    Rational t = 0;
    for (const auto& a : atoms) t += a.weight;
    return t;
  }

  // Merges identical beliefs and sorts atoms by belief.
  PosteriorDistribution canonical() const {
    std::map<Belief, Rational> acc;
    for (const auto& a : atoms)
      if (a.weight > 0) acc[a.belief] += a.weight;
    PosteriorDistribution out;
    for (auto& [b, w] : acc) out.atoms.push_back({b, w});
    return out;
  }

  friend bool operator==(const PosteriorDistribution& x, const PosteriorDistribution& y) {
    auto a = x.canonical(), b = y.canonical();
    if (a.atoms.size() != b.atoms.size()) return false;
    for (std::size_t i = 0; i < a.atoms.size(); ++i)
      if (a.atoms[i].belief != b.atoms[i].belief || a.atoms[i].weight != b.atoms[i].weight) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Bayes updating

inline Rational outcome_probability(const Belief& prior, const Experiment& exp, Index outcome) {
  Rational p = 0;
  for (Index s = 0; s < prior.size(); ++s) p += prior[s] * exp.likelihood[s][outcome];
  return p;
}

inline Belief posterior_update(const Belief& prior, const Experiment& exp, Index outcome) {
  if (outcome >= exp.outcomes.size()) throw ZeroProbabilityOutcome("outcome index out of range");
  Vec w(prior.size());
  for (Index s = 0; s < prior.size(); ++s) w[s] = prior[s] * exp.likelihood[s][outcome];
  if (sum(w) == 0) throw ZeroProbabilityOutcome("outcome " + exp.outcomes[outcome] + " of " + exp.id + " is impossible under the prior");
  return Belief::from_weights(w);
}

inline Belief posterior_update(const Belief& prior, const Experiment& exp, const std::string& outcome) {
  auto it = std::find(exp.outcomes.begin(), exp.outcomes.end(), outcome);
  if (it == exp.outcomes.end()) throw ZeroProbabilityOutcome("unknown outcome " + outcome);
  return posterior_update(prior, exp, static_cast<Index>(it - exp.outcomes.begin()));
}

inline PosteriorDistribution experiment_to_posteriors(const Belief& prior, const Experiment& exp) {
  PosteriorDistribution d;
  for (Index o = 0; o < exp.outcomes.size(); ++o) {
    Rational m = outcome_probability(prior, exp, o);
    if (m > 0) d.atoms.push_back({posterior_update(prior, exp, o), m});
  }
  return d.canonical();
}

// Inverse direction: one outcome per atom, sigma(o|s) = w_o * pi_o(s) / prior(s).
inline Experiment posteriors_to_experiment(const Belief& prior, const PosteriorDistribution& dist, std::string id,
                                           const std::string& outcome_prefix = "m") {
  Experiment e;
  e.id = std::move(id);
  e.likelihood.assign(prior.size(), Vec(dist.atoms.size(), Rational(0)));
  for (std::size_t o = 0; o < dist.atoms.size(); ++o) {
    e.outcomes.push_back(outcome_prefix + std::to_string(o));
    for (Index s = 0; s < prior.size(); ++s)
      e.likelihood[s][o] = dist.atoms[o].weight * dist.atoms[o].belief[s] / prior[s];
  }
  e.validate(prior.size());
  return e;
}

// ---------------------------------------------------------------------------
// Receiver and sender primitives

inline Rational receiver_value(const PayoffEnvironment& env, const Vec& belief, Index action) {
  Rational v = 0;
  for (Index s = 0; s < env.num_states(); ++s) v += belief[s] * env.receiver_u[s][action];
  return v;
}

inline std::vector<Index> best_responses(const PayoffEnvironment& env, const Belief& belief) {
  std::vector<Index> best;
  Rational top;
  for (Index a = 0; a < env.num_actions(); ++a) {
    Rational v = receiver_value(env, belief.probs(), a);
    if (best.empty() || v > top) {
      best.assign(1, a);
      top = v;
    } else if (v == top) {
      best.push_back(a);
    }
  }
  return best;
}

// Best reply preferred (or disliked) by the sender; ties in u^s go to the lower index.
inline Index sender_preferred_reply(const PayoffEnvironment& env, const Belief& belief) {
  auto br = best_responses(env, belief);
  Index pick = br.front();
  for (Index a : br)
    if (env.sender_u[a] > env.sender_u[pick]) pick = a;
  return pick;
}

inline Index sender_worst_reply(const PayoffEnvironment& env, const Belief& belief) {
  auto br = best_responses(env, belief);
  Index pick = br.front();
  for (Index a : br)
    if (env.sender_u[a] < env.sender_u[pick]) pick = a;
  return pick;
}

inline Rational indirect_utility_max(const PayoffEnvironment& env, const Belief& belief) {
  return env.sender_u[sender_preferred_reply(env, belief)];
}

inline Rational indirect_utility_min(const PayoffEnvironment& env, const Belief& belief) {
  return env.sender_u[sender_worst_reply(env, belief)];
}

// Action taken when the state is known to be `state`; requires a unique best reply.
inline Index state_action(const PayoffEnvironment& env, Index state) {
  auto br = best_responses(env, Belief::degenerate(env.num_states(), state));
  if (br.size() != 1)
    throw AssumptionViolation("receiver is indifferent among several actions at the degenerate belief on " + env.states[state]);
  return br.front();
}

inline Rational state_payoff(const PayoffEnvironment& env, Index state) {
  return env.sender_u[state_action(env, state)];
}

inline Rational full_disclosure_payoff(const PayoffEnvironment& env, const Belief& belief) {
  Rational v = 0;
  for (Index s : belief.support()) v += belief[s] * state_payoff(env, s);
  return v;
}

inline Rational full_disclosure_payoff(const PayoffEnvironment& env) { return full_disclosure_payoff(env, env.prior); }

inline Rational max_sender_payoff(const PayoffEnvironment& env) {
  return *std::max_element(env.sender_u.begin(), env.sender_u.end());
}
inline Rational min_sender_payoff(const PayoffEnvironment& env) {
  return *std::min_element(env.sender_u.begin(), env.sender_u.end());
}

// ---------------------------------------------------------------------------
// Strict optimality regions

struct MarginSolution {
  Belief belief;
  Rational margin;  // capped at 1
};

// Belief supported inside `support` maximising the receiver's advantage of
// `action` over every alternative. Empty when `action` is never a best reply there.
inline std::optional<MarginSolution> max_margin_belief(const PayoffEnvironment& env, Index action,
                                                       const std::vector<Index>& support) {
  std::size_t k = support.size();
  LinearProgram lp(k + 1);
  lp.objective[k] = 1;
  Vec ones(k + 1, Rational(1));
  ones[k] = 0;
  lp.add(ones, Sense::Equal, 1);
  Vec cap(k + 1, Rational(0));
  cap[k] = 1;
  lp.add(cap, Sense::LessEq, 1);
  for (Index other = 0; other < env.num_actions(); ++other) {
    if (other == action) continue;
    Vec row(k + 1);
    for (std::size_t j = 0; j < k; ++j) row[j] = env.receiver_u[support[j]][action] - env.receiver_u[support[j]][other];
    row[k] = -1;
    lp.add(row, Sense::GreaterEq, 0);
  }
  auto res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) return std::nullopt;
  Vec full(env.num_states(), Rational(0));
  for (std::size_t j = 0; j < k; ++j) full[support[j]] = res.x[j];
  return MarginSolution{Belief(full), res.x[k]};
}

inline std::vector<std::vector<Index>> nonempty_subsets(std::size_t n) {
  std::vector<std::vector<Index>> out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Index> s;
    for (Index i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

struct Assumption1Report {
  bool holds = true;
  std::vector<std::pair<Index, std::vector<Index>>> witnesses;  // (action, support)
};

inline Assumption1Report check_assumption1(const PayoffEnvironment& env) {
  Assumption1Report rep;
  for (Index a = 0; a < env.num_actions(); ++a)
    for (const auto& support : nonempty_subsets(env.num_states())) {
      auto sol = max_margin_belief(env, a, support);
      if (sol && sol->margin <= 0) {
        rep.holds = false;
        rep.witnesses.emplace_back(a, support);
      }
    }
  return rep;
}

inline void require_assumption1(const PayoffEnvironment& env) {
  auto rep = check_assumption1(env);
  if (rep.holds) return;
  std::string msg = "no belief makes the action strictly optimal for:";
  for (const auto& [a, s] : rep.witnesses) {
    msg += " " + env.actions[a] + "@{";
    for (std::size_t i = 0; i < s.size(); ++i) msg += (i ? "," : "") + env.states[s[i]];
    msg += "}";
  }
  throw AssumptionViolation(msg);
}

// ---------------------------------------------------------------------------
// Monotone environments

struct MonotoneOrder {
  std::vector<Index> states;   // increasing
  std::vector<Index> actions;  // increasing
};

inline bool orders_are_monotone(const PayoffEnvironment& env, const std::vector<Index>& st, const std::vector<Index>& ac) {
  for (std::size_t i = 0; i + 1 < ac.size(); ++i)
    if (!(env.sender_u[ac[i]] < env.sender_u[ac[i + 1]])) return false;
  for (std::size_t lo = 0; lo < st.size(); ++lo)
    for (std::size_t hi = lo + 1; hi < st.size(); ++hi)
      for (std::size_t a = 0; a < ac.size(); ++a)
        for (std::size_t b = a + 1; b < ac.size(); ++b) {
          Rational high_gain = env.receiver_u[st[hi]][ac[b]] - env.receiver_u[st[hi]][ac[a]];
          Rational low_gain = env.receiver_u[st[lo]][ac[b]] - env.receiver_u[st[lo]][ac[a]];
          if (!(high_gain > low_gain)) return false;
        }
  return true;
}

inline std::optional<MonotoneOrder> is_monotone(const PayoffEnvironment& env, double cap = 1e6) {
  double combos = 1;
  for (std::size_t i = 2; i <= env.num_actions(); ++i) combos *= static_cast<double>(i);
  for (std::size_t i = 2; i <= env.num_states(); ++i) combos *= static_cast<double>(i);
  if (combos > cap) throw BudgetExceeded("order search needs " + std::to_string(combos) + " permutation pairs");
  std::vector<Index> ac(env.num_actions());
  std::iota(ac.begin(), ac.end(), Index{0});
  do {
    bool increasing = true;
    for (std::size_t i = 0; i + 1 < ac.size(); ++i)
      if (!(env.sender_u[ac[i]] < env.sender_u[ac[i + 1]])) { increasing = false; break; }
    if (!increasing) continue;
    std::vector<Index> st(env.num_states());
    std::iota(st.begin(), st.end(), Index{0});
    do {
      if (orders_are_monotone(env, st, ac)) return MonotoneOrder{st, ac};
    } while (std::next_permutation(st.begin(), st.end()));
  } while (std::next_permutation(ac.begin(), ac.end()));
  return std::nullopt;
}

}  // namespace persuasion
