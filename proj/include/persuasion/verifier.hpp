#pragma once

// Finite truncations of the disclosure game, equilibrium certificates, and the
// deviation bounds used to show when the commitment payoff is out of reach.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "persuasion/concavify.hpp"
#include "persuasion/profile.hpp"

namespace persuasion {

inline const char* kCertificateScope =
    "PEBE relative to the experiment menu and the necessary belief conditions: receiver optimality at every "
    "visited history, sender optimality against all menu continuations and disclosure subsets, Bayes consistency "
    "on path, and the support and type-cap conditions off path; full conditional-probability-system consistency "
    "is not checked";

struct TruncatedGame {
  PayoffEnvironment env;
  TypeDistribution types;
  std::vector<Experiment> menu;  // profile experiments first, then any added benchmarks
  std::uint64_t cap = 0;         // largest type represented
  Vec type_mass;                 // p(t) for t = 0..cap, not renormalised
  Rational tail = 0;             // mass above cap
  std::optional<std::uint64_t> top_type;  // highest type when the support is bounded and represented
  std::size_t full_index = 0;
  std::size_t null_index = 0;
  std::size_t node_estimate = 0;

  Rational renormalized(std::uint64_t t) const { return type_mass[t] / (1 - tail); }
};

namespace detail {

inline bool fully_informative(const Experiment& e) {
  if (e.likelihood.empty()) return false;
  for (std::size_t o = 0; o < e.outcomes.size(); ++o) {
    int positive = 0;
    for (const auto& row : e.likelihood)
      if (row[o] > 0) ++positive;
    if (positive > 1) return false;
  }
  return true;
}

inline Rational binomial(std::size_t n, std::size_t k) {
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), n, k);
  return Rational(b);
}

}  // namespace detail

inline TruncatedGame build_truncated_game(const PayoffEnvironment& env, const TypeDistribution& types,
                                          std::vector<Experiment> menu, std::uint64_t cap,
                                          std::size_t node_budget = 2'000'000) {
  env.validate();
  types.validate();
  TruncatedGame g;
  g.env = env;
  g.types = types;
  g.cap = cap;
  for (const auto& e : menu) e.validate(env.num_states());
  std::optional<std::size_t> full, null;
  for (std::size_t i = 0; i < menu.size(); ++i) {
    if (!full && detail::fully_informative(menu[i])) full = i;
    if (!null && menu[i].is_uninformative()) null = i;
  }
  if (!full) {
    menu.push_back(Experiment::fully_informative(env, "full"));
    full = menu.size() - 1;
  }
  if (!null) {
    menu.push_back(Experiment::uninformative(env, "null"));
    null = menu.size() - 1;
  }
  g.menu = std::move(menu);
  g.full_index = *full;
  g.null_index = *null;
  for (std::uint64_t t = 0; t <= cap; ++t) g.type_mass.push_back(types.mass(t));
  g.tail = types.tail_above(cap);
  if (g.tail == 1) throw PreconditionViolation("truncation keeps no type mass");
  if (auto top = types.max_type(); top && *top <= cap) g.top_type = top;
  std::size_t kinds = 0;
  for (const auto& e : g.menu) kinds += e.outcomes.size();
  Rational nodes = 0;
  for (const auto& e : g.menu)
    for (std::uint64_t k = 0; k <= cap; ++k)
      nodes += Rational(static_cast<long>(e.outcomes.size())) * detail::binomial(kinds + k - 1, k);
  if (nodes > Rational(static_cast<long>(node_budget)))
    throw BudgetExceeded("sender node count " + to_decimal(nodes, 0) + " exceeds budget " + std::to_string(node_budget) +
                         " (menu size " + std::to_string(g.menu.size()) + ", type cap " + std::to_string(cap) + ")");
  g.node_estimate = static_cast<std::size_t>(nodes.get_d());
  return g;
}

struct MarginRecord {
  std::string where;
  Rational margin;
};

struct DeviationReport {
  bool initial = false;  // a different initial experiment
  std::uint64_t type = 0;
  History node;  // initial outcome plus conducted set (for initial deviations: the new experiment)
  std::string plan;
  Rational gain = 0;
};

struct EquilibriumCertificate {
  bool pass = false;
  std::string scope = kCertificateScope;
  std::vector<MarginRecord> receiver_margins;
  std::vector<MarginRecord> sender_margins;
  std::vector<std::string> violations;
  std::optional<DeviationReport> worst_deviation;
  Rational ex_ante_payoff = 0;
  Rational tail_mass = 0;
  Rational tail_slack = 0;
  std::map<History, Belief> onpath_bayes;  // truncated-game Bayes beliefs at reached histories
  std::size_t sender_nodes = 0;
};

namespace detail {

struct ReceiverDecision {
  Belief belief;
  bool stated = false;
  std::vector<std::pair<Index, Rational>> mix;
  Rational value = 0;  // sender's expected payoff
};

struct BestChoice {
  SenderChoice choice;
  Rational value;
};

// All sub-multisets of a sorted multiset.
inline std::vector<ObservationSet> submultisets(const ObservationSet& c) {
  std::vector<std::pair<Observation, int>> groups;
  for (const auto& o : c) {
    if (!groups.empty() && groups.back().first == o) ++groups.back().second;
    else groups.push_back({o, 1});
  }
  std::vector<ObservationSet> out;
  std::vector<int> pick(groups.size(), 0);
  for (;;) {
    ObservationSet d;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (int k = 0; k < pick[g]; ++k) d.push_back(groups[g].first);
    out.push_back(std::move(d));
    std::size_t g = 0;
    while (g < groups.size() && pick[g] == groups[g].second) pick[g++] = 0;
    if (g == groups.size()) break;
    ++pick[g];
  }
  return out;
}

// Prefers fewer disclosures, then lexicographically smaller sets.
inline bool simpler(const ObservationSet& a, const ObservationSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

class Evaluator {
 public:
  Evaluator(const TruncatedGame& game, const StrategyProfile& profile, std::size_t budget)
      : g_(game), prof_(profile), budget_(budget) {
    for (std::size_t i = 0; i < prof_.experiments.size(); ++i)
      if (i >= g_.menu.size() || g_.menu[i].id != prof_.experiments[i].id)
        throw PreconditionViolation("game menu does not start with the profile's experiments");
    for (const auto& r : prof_.receiver) stated_[r.history] = &r;
    for (const auto& p : prof_.plans) plans_[{p.initial_outcome, p.conducted}].push_back(&p);
  }

  const TruncatedGame& game() const { return g_; }
  std::vector<std::string>& violations() { return violations_; }
  std::size_t nodes() const { return node_count_; }

  // Joint weights of states and the observations in `h`.
  Vec naive_weights(std::size_t e0, std::size_t s0, const ObservationSet& obs) const {
    Vec w(g_.env.num_states());
    for (Index s = 0; s < w.size(); ++s) {
      w[s] = g_.env.prior[s] * g_.menu[e0].likelihood[s][s0];
      for (const auto& o : obs) w[s] *= g_.menu[o.experiment].likelihood[s][o.outcome];
    }
    return w;
  }

  std::optional<Belief> naive(const History& h) const {
    Vec w = naive_weights(h.initial_experiment, h.initial_outcome, h.disclosed);
    if (sum(w) == 0) return std::nullopt;
    return Belief::from_weights(w);
  }

  bool at_type_cap(const History& h) const { return g_.top_type && h.disclosed.size() == *g_.top_type; }

  Belief default_belief(const History& h, const Belief& naive_b) const {
    if (prof_.off_path == OffPathRule::Naive || at_type_cap(h)) return naive_b;
    auto supp = naive_b.support();
    Index worst = supp.front();
    for (Index s : supp)
      if (state_payoff(g_.env, s) < state_payoff(g_.env, worst)) worst = s;
    return Belief::degenerate(naive_b.size(), worst);
  }

  const ReceiverDecision& receiver(const History& h) {
    if (auto it = receiver_memo_.find(h); it != receiver_memo_.end()) return it->second;
    ReceiverDecision d;
    auto nb = naive(h);
    if (auto st = stated_.find(h); st != stated_.end()) {
      d.belief = st->second->belief;
      d.stated = true;
      d.mix = st->second->action_mix;
    } else {
      if (!nb) throw InternalInvariantFailure("queried an impossible history " + describe(h, g_.menu));
      d.belief = default_belief(h, *nb);
    }
    if (d.mix.empty()) {
      Index a = prof_.tie == TieRule::SenderBest ? sender_preferred_reply(g_.env, d.belief) : sender_worst_reply(g_.env, d.belief);
      d.mix = {{a, Rational(1)}};
    }
    for (const auto& [a, w] : d.mix) d.value += w * g_.env.sender_u[a];
    return receiver_memo_.emplace(h, std::move(d)).first->second;
  }

  const std::map<History, ReceiverDecision>& visited_histories() const { return receiver_memo_; }

  // ---- per-interim sender problem -------------------------------------------------

  void set_interim(std::size_t e0, std::size_t s0) {
    e0_ = e0;
    s0_ = s0;
    weights_.clear();
    stop_.clear();
    opt_.clear();
    plan_value_.clear();
  }

  const Vec& weights(const ObservationSet& c) {
    if (auto it = weights_.find(c); it != weights_.end()) return it->second;
    return weights_.emplace(c, naive_weights(e0_, s0_, c)).first->second;
  }

  // (outcome, conditional probability) pairs with positive probability.
  std::vector<std::pair<std::size_t, Rational>> outcome_odds(const ObservationSet& c, std::size_t e) {
    const Vec& w = weights(c);
    Rational z = sum(w);
    std::vector<std::pair<std::size_t, Rational>> out;
    for (std::size_t o = 0; o < g_.menu[e].outcomes.size(); ++o) {
      Rational m = 0;
      for (Index s = 0; s < w.size(); ++s) m += w[s] * g_.menu[e].likelihood[s][o];
      if (m > 0) out.push_back({o, m / z});
    }
    return out;
  }

  Rational disclose_value(const ObservationSet& d) { return receiver(History{e0_, s0_, d}).value; }

  // Best disclosure from a conducted set.
  const BestChoice& best_stop(const ObservationSet& c) {
    if (auto it = stop_.find(c); it != stop_.end()) return it->second;
    BestChoice best{SenderChoice::stop(c), disclose_value(c)};
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i > 0 && c[i] == c[i - 1]) continue;
      ObservationSet smaller = c;
      smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(i));
      const BestChoice& sub = best_stop(smaller);
      if (sub.value > best.value || (sub.value == best.value && simpler(sub.choice.disclose, best.choice.disclose)))
        best = sub;
    }
    return stop_.emplace(c, best).first->second;
  }

  void count_node() {
    if (++node_count_ > budget_) throw BudgetExceeded("sender nodes visited exceed budget " + std::to_string(budget_));
  }

  Rational run_value_optimal(std::size_t remaining, const ObservationSet& c, std::size_t e) {
    Rational v = 0;
    for (const auto& [o, pr] : outcome_odds(c, e)) v += pr * optimal(remaining - 1, with_added(c, {e, o})).value;
    return v;
  }

  // Optimal continuation with `remaining` experiments left.
  const BestChoice& optimal(std::size_t remaining, const ObservationSet& c) {
    auto key = std::make_pair(remaining, c);
    if (auto it = opt_.find(key); it != opt_.end()) return it->second;
    count_node();
    BestChoice best = best_stop(c);
    if (remaining > 0)
      for (std::size_t e = 0; e < g_.menu.size(); ++e) {
        Rational v = run_value_optimal(remaining, c, e);
        if (v > best.value) best = BestChoice{SenderChoice::run(e), v};
      }
    return opt_.emplace(key, best).first->second;
  }

  const PlanEntry* plan_entry(std::uint64_t type, const ObservationSet& c) const {
    auto it = plans_.find({s0_, c});
    if (it == plans_.end() || e0_ != prof_.initial) return nullptr;
    for (const PlanEntry* p : it->second)
      if (p->type_lo <= type && type <= p->type_hi) return p;
    return nullptr;
  }

  bool legal(std::uint64_t type, const ObservationSet& c, const SenderChoice& ch) const {
    if (ch.kind == SenderChoice::Kind::Run) return c.size() < type && ch.experiment < g_.menu.size();
    return is_submultiset(ch.disclose, c);
  }

  // Mixed choice the profile prescribes; unspecified nodes follow the optimal continuation.
  std::vector<std::pair<SenderChoice, Rational>> prescribed(std::uint64_t type, const ObservationSet& c) {
    if (const PlanEntry* p = plan_entry(type, c)) {
      std::vector<std::pair<SenderChoice, Rational>> mix;
      Rational total = 0;
      for (const auto& [ch, pr] : p->mix) {
        if (pr < 0) continue;
        if (!legal(type, c, ch)) {
          note("illegal plan choice for type " + std::to_string(type) + " at " + node_name(c) + ": " + describe(ch, g_.menu));
          continue;
        }
        if (pr > 0) mix.push_back({ch, pr});
        total += pr;
      }
      if (total != 1) note("plan probabilities for type " + std::to_string(type) + " at " + node_name(c) + " sum to " + total.get_str());
      if (!mix.empty() && total > 0) {
        for (auto& m : mix) m.second /= total;
        return mix;
      }
    }
    return {{optimal(type - c.size(), c).choice, Rational(1)}};
  }

  Rational choice_value_profile(std::uint64_t type, const ObservationSet& c, const SenderChoice& ch) {
    if (ch.kind == SenderChoice::Kind::Stop) return disclose_value(ch.disclose);
    Rational v = 0;
    for (const auto& [o, pr] : outcome_odds(c, ch.experiment)) v += pr * profile_value(type, with_added(c, {ch.experiment, o}));
    return v;
  }

  Rational profile_value(std::uint64_t type, const ObservationSet& c) {
    auto key = std::make_pair(type, c);
    if (auto it = plan_value_.find(key); it != plan_value_.end()) return it->second;
    count_node();
    Rational v = 0;
    for (const auto& [ch, pr] : prescribed(type, c)) v += pr * choice_value_profile(type, c, ch);
    plan_value_.emplace(key, v);
    return v;
  }

  std::string node_name(const ObservationSet& c) const {
    return g_.menu[e0_].id + ":" + g_.menu[e0_].outcomes[s0_] + " conducted " + describe(c, g_.menu);
  }

  // Human-readable optimal continuation from a node.
  std::string explain_optimal(std::size_t remaining, const ObservationSet& c, int depth = 0) {
    std::string pad(static_cast<std::size_t>(2 * depth), ' ');
    const BestChoice& b = optimal(remaining, c);
    if (b.choice.kind == SenderChoice::Kind::Stop)
      return pad + "stop and disclose " + describe(b.choice.disclose, g_.menu) + " (value " + b.value.get_str() + ")\n";
    std::string out = pad + "run " + g_.menu[b.choice.experiment].id + "\n";
    for (const auto& [o, pr] : outcome_odds(c, b.choice.experiment)) {
      out += pad + "  if " + g_.menu[b.choice.experiment].outcomes[o] + " (prob " + pr.get_str() + "):\n";
      out += explain_optimal(remaining - 1, with_added(c, {b.choice.experiment, o}), depth + 2);
    }
    return out;
  }

  void note(const std::string& v) {
    if (noted_.insert(v).second) violations_.push_back(v);
  }

 private:
  const TruncatedGame& g_;
  const StrategyProfile& prof_;
  std::size_t budget_;
  std::map<History, const ReceiverEntry*> stated_;
  std::map<std::pair<std::size_t, ObservationSet>, std::vector<const PlanEntry*>> plans_;
  std::map<History, ReceiverDecision> receiver_memo_;
  std::size_t e0_ = 0, s0_ = 0;
  std::map<ObservationSet, Vec> weights_;
  std::map<ObservationSet, BestChoice> stop_;
  std::map<std::pair<std::size_t, ObservationSet>, BestChoice> opt_;
  std::map<std::pair<std::uint64_t, ObservationSet>, Rational> plan_value_;
  std::vector<std::string> violations_;
  std::set<std::string> noted_;
  std::size_t node_count_ = 0;
};

}  // namespace detail

inline std::vector<std::uint64_t> active_types(const TruncatedGame& g) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t t = 0; t <= g.cap; ++t)
    if (g.type_mass[t] > 0) out.push_back(t);
  return out;
}

inline EquilibriumCertificate check_pebe(const TruncatedGame& game, const StrategyProfile& profile,
                                         std::size_t budget = 2'000'000) {
  EquilibriumCertificate cert;
  detail::Evaluator ev(game, profile, budget);
  const auto& env = game.env;
  cert.tail_mass = game.tail;
  cert.tail_slack = game.tail * (max_sender_payoff(env) - min_sender_payoff(env));
  auto types = active_types(game);
  std::size_t e0 = profile.initial;

  auto consider = [&](DeviationReport d) {
    if (d.gain <= 0) return;
    if (!cert.worst_deviation || d.gain > cert.worst_deviation->gain) cert.worst_deviation = std::move(d);
  };

  // Sender optimality at every node where the profile states a plan, for every represented type.
  Rational ex_ante = 0;
  std::map<History, Vec> reach;
  const Experiment& init = game.menu[e0];
  for (std::size_t s0 = 0; s0 < init.outcomes.size(); ++s0) {
    Rational ps0 = outcome_probability(env.prior, init, s0);
    if (ps0 == 0) continue;
    ev.set_interim(e0, s0);
    for (std::uint64_t t : types) ex_ante += ps0 * game.renormalized(t) * ev.profile_value(t, {});
    for (const auto& entry : profile.plans) {
      if (entry.initial_outcome != s0) continue;
      std::uint64_t hi = std::min(entry.type_hi, game.cap);
      for (std::uint64_t t = entry.type_lo; t <= hi; ++t) {
        if (game.type_mass[t] == 0 || entry.conducted.size() > t) continue;
        if (sum(ev.weights(entry.conducted)) == 0) continue;  // unreachable conducted set
        const auto& c = entry.conducted;
        auto mix = ev.prescribed(t, c);
        std::set<SenderChoice> support;
        Rational lowest;
        bool first = true;
        for (const auto& [ch, pr] : mix) {
          support.insert(ch);
          Rational v = ev.choice_value_profile(t, c, ch);
          if (first || v < lowest) lowest = v;
          first = false;
        }
        std::optional<Rational> alt;
        for (const auto& d : detail::submultisets(c)) {
          auto ch = SenderChoice::stop(d);
          if (support.count(ch)) continue;
          Rational v = ev.disclose_value(d);
          if (!alt || v > *alt) alt = v;
        }
        if (c.size() < t)
          for (std::size_t e = 0; e < game.menu.size(); ++e) {
            if (support.count(SenderChoice::run(e))) continue;
            Rational v = ev.run_value_optimal(t - c.size(), c, e);
            if (!alt || v > *alt) alt = v;
          }
        Rational margin = alt ? Rational(lowest - *alt) : Rational(0);
        cert.sender_margins.push_back({"type " + std::to_string(t) + " at " + ev.node_name(c), margin});
        Rational best = ev.optimal(t - c.size(), c).value;
        if (best > lowest) {
          consider(DeviationReport{false, t, History{e0, s0, c}, ev.explain_optimal(t - c.size(), c), Rational(best - lowest)});
          if (margin >= 0)  // a better supported choice exists: mixing over unequal values
            ev.note("type " + std::to_string(t) + " mixes over choices with unequal values at " + ev.node_name(c));
        }
      }
    }

    // Forward pass: on-path reach masses per history, across types.
    for (std::uint64_t t : types) {
      std::map<ObservationSet, Vec> level;
      Vec start(env.num_states());
      for (Index s = 0; s < start.size(); ++s) start[s] = game.type_mass[t] * env.prior[s] * init.likelihood[s][s0];
      level[{}] = start;
      while (!level.empty()) {
        std::map<ObservationSet, Vec> next;
        for (const auto& [c, mass] : level) {
          for (const auto& [ch, pr] : ev.prescribed(t, c)) {
            if (ch.kind == SenderChoice::Kind::Stop) {
              auto& acc = reach[History{e0, s0, ch.disclose}];
              if (acc.empty()) acc.assign(env.num_states(), Rational(0));
              for (Index s = 0; s < acc.size(); ++s) acc[s] += pr * mass[s];
              continue;
            }
            const Experiment& ex = game.menu[ch.experiment];
            for (std::size_t o = 0; o < ex.outcomes.size(); ++o) {
              Vec m(env.num_states());
              for (Index s = 0; s < m.size(); ++s) m[s] = pr * mass[s] * ex.likelihood[s][o];
              if (sum(m) == 0) continue;
              auto& acc = next[with_added(c, {ch.experiment, o})];
              if (acc.empty()) acc.assign(env.num_states(), Rational(0));
              for (Index s = 0; s < acc.size(); ++s) acc[s] += m[s];
            }
          }
        }
        level = std::move(next);
      }
    }
  }
  cert.ex_ante_payoff = ex_ante;

  // Deviations to another initial experiment, evaluated with optimal continuation.
  for (std::size_t e = 0; e < game.menu.size(); ++e) {
    if (e == e0) continue;
    Rational value = 0;
    for (std::size_t s0 = 0; s0 < game.menu[e].outcomes.size(); ++s0) {
      Rational ps0 = outcome_probability(env.prior, game.menu[e], s0);
      if (ps0 == 0) continue;
      ev.set_interim(e, s0);
      for (std::uint64_t t : types) value += ps0 * game.renormalized(t) * ev.optimal(t, {}).value;
    }
    Rational margin = ex_ante - value;
    cert.sender_margins.push_back({"initial experiment " + game.menu[e].id + " instead of " + game.menu[e0].id, margin});
    if (margin < 0)
      consider(DeviationReport{true, 0, History{e, 0, {}}, "use initial experiment " + game.menu[e].id + ", then continue optimally", Rational(-margin)});
  }

  // Bayes consistency on path.
  for (const auto& [h, mass] : reach) {
    Rational total = sum(mass);
    if (total == 0) continue;
    Belief bayes = Belief::from_weights(mass);
    cert.onpath_bayes.emplace(h, bayes);
    const auto& dec = ev.receiver(h);
    if (game.tail == 0) {
      if (dec.belief != bayes)
        ev.note("on-path belief at " + describe(h, game.menu) + " is " + dec.belief.str() + ", Bayes gives " + bayes.str());
      continue;
    }
    // Types above the cap can add at most tail * P(theta, initial outcome) to each state's mass.
    Vec room(env.num_states());
    for (Index s = 0; s < room.size(); ++s)
      room[s] = game.tail * env.prior[s] * game.menu[h.initial_experiment].likelihood[s][h.initial_outcome];
    Rational room_total = sum(room);
    for (Index s = 0; s < room.size(); ++s) {
      Rational lo = mass[s] / (total + room_total - room[s]);
      Rational hi = (mass[s] + room[s]) / (total + room[s]);
      if (dec.belief[s] < lo || dec.belief[s] > hi)
        ev.note("on-path belief at " + describe(h, game.menu) + " puts " + dec.belief[s].get_str() + " on " + env.states[s] +
                ", outside the truncation interval [" + lo.get_str() + ", " + hi.get_str() + "]");
    }
  }

  // Stated receiver entries are checked even where no sender node reached them.
  for (const auto& r : profile.receiver)
    if (ev.naive(r.history)) ev.receiver(r.history);
    else ev.note("stated belief at impossible history " + describe(r.history, game.menu));

  // Receiver optimality and off-path belief conditions at every visited history.
  for (const auto& [h, dec] : ev.visited_histories()) {
    auto nb = ev.naive(h);
    std::set<Index> support;
    Rational lowest, alt;
    bool have_alt = false, first = true;
    for (const auto& [a, w] : dec.mix) {
      if (w < 0) ev.note("negative action weight at " + describe(h, game.menu));
      if (w <= 0) continue;
      support.insert(a);
      Rational v = receiver_value(env, dec.belief.probs(), a);
      if (first || v < lowest) lowest = v;
      first = false;
    }
    for (Index a = 0; a < env.num_actions(); ++a) {
      if (support.count(a)) continue;
      Rational v = receiver_value(env, dec.belief.probs(), a);
      if (!have_alt || v > alt) alt = v;
      have_alt = true;
    }
    Rational margin = have_alt ? Rational(lowest - alt) : Rational(0);
    std::set<Index> br;
    for (Index a : best_responses(env, dec.belief)) br.insert(a);
    bool optimal = std::includes(br.begin(), br.end(), support.begin(), support.end());
    if (optimal && margin < 0) margin = 0;  // ties among supported actions
    cert.receiver_margins.push_back({describe(h, game.menu), margin});
    if (!optimal) ev.note("receiver action at " + describe(h, game.menu) + " is not a best reply to " + dec.belief.str());
    Rational mix_total = 0;
    for (const auto& [a, w] : dec.mix) mix_total += w;
    if (mix_total != 1) ev.note("receiver mix at " + describe(h, game.menu) + " sums to " + mix_total.get_str());
    if (!nb) continue;
    for (Index s = 0; s < env.num_states(); ++s)
      if (dec.belief[s] > 0 && (*nb)[s] == 0)
        ev.note("belief at " + describe(h, game.menu) + " leaves the naive support");
    if (ev.at_type_cap(h) && dec.belief != *nb)
      ev.note("belief at full-capacity history " + describe(h, game.menu) + " differs from the naive belief");
  }

  cert.violations = ev.violations();
  cert.sender_nodes = ev.nodes();
  bool margins_ok = true;
  for (const auto& m : cert.receiver_margins) margins_ok &= m.margin >= 0;
  for (const auto& m : cert.sender_margins) margins_ok &= m.margin >= 0;
  if (cert.worst_deviation) margins_ok = false;
  cert.pass = margins_ok && cert.violations.empty();
  return cert;
}

inline Rational ex_ante_payoff(const TruncatedGame& game, const StrategyProfile& profile, std::size_t budget = 2'000'000) {
  detail::Evaluator ev(game, profile, budget);
  Rational v = 0;
  const Experiment& init = game.menu[profile.initial];
  for (std::size_t s0 = 0; s0 < init.outcomes.size(); ++s0) {
    Rational ps0 = outcome_probability(game.env.prior, init, s0);
    if (ps0 == 0) continue;
    ev.set_interim(profile.initial, s0);
    for (std::uint64_t t : active_types(game)) v += ps0 * game.renormalized(t) * ev.profile_value(t, {});
  }
  return v;
}

// ---------------------------------------------------------------------------
// Imitate-then-reveal deviation

struct BeliefBall {
  std::vector<Belief> centers;
  Rational radius = 0;  // open sup-norm ball; zero means exact membership

  bool contains(const Belief& b) const {
    for (const auto& c : centers) {
      if (radius == 0 ? b == c : linf_distance(b.probs(), c.probs()) < radius) return true;
    }
    return false;
  }
};

struct ImitationGain {
  Rational gain = 0;        // deviation payoff minus the imitated type's payoff
  Rational bound = 0;       // reach(theta, B) * (u(theta) - ubar(center))
  Rational reach = 0;       // joint probability of the target state and a history in B
  Rational base_payoff = 0;
};

inline ImitationGain imitate_and_reveal_gain(const TruncatedGame& game, const StrategyProfile& profile,
                                             std::uint64_t low_type, std::uint64_t high_type, const BeliefBall& targets,
                                             Index state, std::size_t budget = 2'000'000) {
  if (high_type <= low_type) throw PreconditionViolation("the imitating type must have larger capacity");
  if (targets.centers.empty()) throw PreconditionViolation("empty target belief set");
  detail::Evaluator ev(game, profile, budget);
  const auto& env = game.env;
  ImitationGain out;
  Rational deviation = 0;
  const Experiment& init = game.menu[profile.initial];
  for (std::size_t s0 = 0; s0 < init.outcomes.size(); ++s0) {
    Vec start(env.num_states());
    for (Index s = 0; s < start.size(); ++s) start[s] = env.prior[s] * init.likelihood[s][s0];
    if (sum(start) == 0) continue;
    ev.set_interim(profile.initial, s0);
    std::map<ObservationSet, Vec> level{{{}, start}};
    while (!level.empty()) {
      std::map<ObservationSet, Vec> next;
      for (const auto& [c, mass] : level)
        for (const auto& [ch, pr] : ev.prescribed(low_type, c)) {
          if (ch.kind == SenderChoice::Kind::Stop) {
            History h{profile.initial, s0, ch.disclose};
            const auto& dec = ev.receiver(h);
            Rational m = pr * sum(mass);
            out.base_payoff += m * dec.value;
            if (!targets.contains(dec.belief)) {
              deviation += m * dec.value;
              continue;
            }
            Rational hit = pr * mass[state];
            out.reach += hit;
            History revealed{profile.initial, s0, with_added(ch.disclose, {game.full_index, state})};
            deviation += hit * ev.receiver(revealed).value + (m - hit) * dec.value;
            continue;
          }
          const Experiment& ex = game.menu[ch.experiment];
          for (std::size_t o = 0; o < ex.outcomes.size(); ++o) {
            Vec m(env.num_states());
            for (Index s = 0; s < m.size(); ++s) m[s] = pr * mass[s] * ex.likelihood[s][o];
            if (sum(m) == 0) continue;
            auto& acc = next[with_added(c, {ch.experiment, o})];
            if (acc.empty()) acc.assign(env.num_states(), Rational(0));
            for (Index s = 0; s < acc.size(); ++s) acc[s] += m[s];
          }
        }
      level = std::move(next);
    }
  }
  out.gain = deviation - out.base_payoff;
  out.bound = out.reach * (state_payoff(env, state) - indirect_utility_max(env, targets.centers.front()));
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form thresholds

struct Theorem3Threshold {
  std::string lambda = "2*lambda0";  // lambda0 has no closed form; kept symbolic
  mpz_class n;
  Rational gap;           // u(theta) - max ubar over optimal beliefs containing theta
  Rational top_payoff;    // v-bar
  Rational bottom_payoff; // v-underbar

  // Upper limit for eta once lambda0 and the continuity radius are chosen.
  Rational eta_ceiling(const Rational& lambda0, const Rational& eps) const {
    Rational inv = 1 / (2 * lambda0 * Rational(n));
    return std::min(eps, inv);
  }
};

inline Theorem3Threshold theorem3_threshold(const PayoffEnvironment& env, const CommitmentSolution& sol, Index state) {
  Theorem3Threshold th;
  th.top_payoff = max_sender_payoff(env);
  th.bottom_payoff = min_sender_payoff(env);
  Rational u = state_payoff(env, state);
  std::optional<Rational> worst;
  std::vector<std::string> violators;
  for (const auto& atom : sol.experiment.atoms) {
    if (atom.belief[state] == 0) continue;
    Rational ub = indirect_utility_max(env, atom.belief);
    if (!worst || ub > *worst) worst = ub;
    if (!(u > ub)) violators.push_back(atom.belief.str());
  }
  if (!worst) throw HypothesisFail("no optimal posterior has " + env.states[state] + " in its support");
  if (!violators.empty()) {
    std::string msg = "u(" + env.states[state] + ") = " + u.get_str() + " is not above ubar at";
    for (const auto& v : violators) msg += " " + v;
    throw HypothesisFail(msg);
  }
  th.gap = u - *worst;
  Rational ratio = 2 * (th.top_payoff - th.bottom_payoff) / (env.prior[state] * th.gap);
  th.n = ceil_of(ratio) + 1;
  return th;
}

struct Lemma1Constants {
  Index state = 0;
  Rational mass_in_ball;       // m
  Rational sup_lower, sup_upper;  // bracket on the constrained commitment value
  Rational eta, eps;
  mpz_class n_types;           // smallest N satisfying the strict inequality
  Rational n_bound;            // right-hand side of that inequality
};

namespace detail {

// Constrained commitment value: at most `cap` of the posterior mass may fall in the open ball.
// Pieces: inside the closed ball, or in one closed half-space outside it, per action.
inline Rational constrained_commitment(const PayoffEnvironment& env, const Belief& center, const Rational& radius,
                                       const Rational& cap) {
  std::size_t S = env.num_states(), A = env.num_actions();
  std::size_t pieces = 1 + 2 * S;
  std::size_t blocks = A * pieces;
  LinearProgram lp(blocks * S);
  auto var = [&](std::size_t block, Index s) { return block * S + s; };
  for (Index a = 0; a < A; ++a)
    for (std::size_t k = 0; k < pieces; ++k)
      for (Index s = 0; s < S; ++s) lp.objective[var(a * pieces + k, s)] = env.sender_u[a];
  for (Index s = 0; s < S; ++s) {
    Vec row(blocks * S, Rational(0));
    for (std::size_t b = 0; b < blocks; ++b) row[var(b, s)] = 1;
    lp.add(row, Sense::Equal, env.prior[s]);
  }
  Vec inside(blocks * S, Rational(0));
  for (Index a = 0; a < A; ++a)
    for (Index s = 0; s < S; ++s) inside[var(a * pieces, s)] = 1;
  lp.add(inside, Sense::LessEq, cap);
  for (Index a = 0; a < A; ++a)
    for (std::size_t k = 0; k < pieces; ++k) {
      std::size_t b = a * pieces + k;
      for (Index other = 0; other < A; ++other) {
        if (other == a) continue;
        Vec row(blocks * S, Rational(0));
        for (Index s = 0; s < S; ++s) row[var(b, s)] = env.receiver_u[s][a] - env.receiver_u[s][other];
        lp.add(row, Sense::GreaterEq, 0);
      }
      // Homogeneous ball constraints: x(s) - (c(s) +- r) * mass.
      auto bound_row = [&](Index s, const Rational& level, Sense sense) {
        Vec row(blocks * S, Rational(0));
        for (Index q = 0; q < S; ++q) row[var(b, q)] = -level;
        row[var(b, s)] += 1;
        lp.add(row, sense, 0);
      };
      if (k == 0) {
        for (Index s = 0; s < S; ++s) {
          bound_row(s, center[s] + radius, Sense::LessEq);
          bound_row(s, center[s] - radius, Sense::GreaterEq);
        }
      } else {
        Index s = (k - 1) / 2;
        if ((k - 1) % 2 == 0) bound_row(s, center[s] + radius, Sense::GreaterEq);
        else bound_row(s, center[s] - radius, Sense::LessEq);
      }
    }
  auto res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) throw InternalInvariantFailure("constrained commitment LP not solvable");
  return res.value;
}

// Same bound restricted to posteriors on the grid {j / grid}, two states only.
inline Rational constrained_commitment_grid(const PayoffEnvironment& env, const Belief& center, const Rational& radius,
                                            const Rational& cap, std::size_t grid) {
  std::vector<Belief> pts;
  for (std::size_t j = 0; j <= grid; ++j) pts.push_back(Belief::binary(frac(static_cast<long>(j), static_cast<long>(grid))));
  LinearProgram lp(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) lp.objective[j] = indirect_utility_max(env, pts[j]);
  for (Index s = 0; s < 2; ++s) {
    Vec row(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) row[j] = pts[j][s];
    lp.add(row, Sense::Equal, env.prior[s]);
  }
  Vec inside(pts.size(), Rational(0));
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (linf_distance(pts[j].probs(), center.probs()) < radius) inside[j] = 1;
  lp.add(inside, Sense::LessEq, cap);
  auto res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) throw InternalInvariantFailure("grid constrained LP not solvable");
  return res.value;
}

}  // namespace detail

inline Lemma1Constants lemma1_constants(const PayoffEnvironment& env, const CommitmentSolution& sol, const Belief& low,
                                        const Rational& radius, std::size_t grid) {
  auto verdict = classify_credibility(env, low);
  if (verdict.credible) throw PreconditionViolation("belief " + low.str() + " is credible");
  Lemma1Constants out;
  out.state = *verdict.witness;
  Index th = out.state;
  if (!(radius > 0) || radius * 2 > low[th])
    throw BadRadius("radius must be positive and at most half of " + low[th].get_str() + " so the target state keeps half its weight");
  Rational ub_low = indirect_utility_max(env, low);
  Rational u_th = state_payoff(env, th);
  // Every belief in the closed ball must keep ubar below u(theta).
  for (Index a = 0; a < env.num_actions(); ++a) {
    if (env.sender_u[a] < u_th) continue;
    std::size_t S = env.num_states();
    LinearProgram lp(S);
    lp.add(Vec(S, Rational(1)), Sense::Equal, 1);
    for (Index s = 0; s < S; ++s) {
      Vec row(S, Rational(0));
      row[s] = 1;
      lp.add(row, Sense::LessEq, low[s] + radius);
      lp.add(row, Sense::GreaterEq, low[s] - radius);
    }
    for (Index other = 0; other < env.num_actions(); ++other) {
      if (other == a) continue;
      Vec row(S);
      for (Index s = 0; s < S; ++s) row[s] = env.receiver_u[s][a] - env.receiver_u[s][other];
      lp.add(row, Sense::GreaterEq, 0);
    }
    if (solve_lp(lp).status == LpStatus::Optimal)
      throw BadRadius("the ball reaches beliefs where action " + env.actions[a] + " pays at least u(" + env.states[th] + ")");
  }
  BeliefBall ball{{low}, radius};
  out.mass_in_ball = 0;
  for (const auto& atom : sol.experiment.atoms)
    if (ball.contains(atom.belief)) out.mass_in_ball += atom.weight;
  if (out.mass_in_ball == 0) throw PreconditionViolation("the optimal experiment puts no mass near " + low.str());
  Rational cap = out.mass_in_ball / 2;
  out.sup_upper = detail::constrained_commitment(env, low, radius, cap);
  out.sup_lower = env.num_states() == 2 && grid > 0 ? detail::constrained_commitment_grid(env, low, radius, cap, grid)
                                                      : out.sup_upper;
  out.eta = std::min(Rational(sol.value - out.sup_upper), cap);
  if (out.eta <= 0) throw InternalInvariantFailure("constrained value reaches the commitment value; optimum not unique");
  out.eps = low[th] / (2 * env.prior[th]) * out.eta;
  Rational spread = max_sender_payoff(env) - min_sender_payoff(env);
  out.n_bound = 3 * spread / (2 * out.eps * env.prior[th] * (u_th - ub_low)) + 2 / out.eps;
  out.n_types = floor_plus_one(out.n_bound);
  return out;
}

// Membership in the neighbourhood of the uniform distribution on {0..N-1}.
inline bool in_uniform_neighbourhood(const TypeDistribution& p, std::uint64_t n) {
  if (n == 0) return false;
  Rational inv = Rational(1) / Rational(static_cast<long>(n));
  for (std::uint64_t t = 0; t < n; ++t)
    if (!(abs(p.mass(t) - inv) < inv / 2)) return false;
  return p.tail_above(n - 1) < inv / 2;
}

}  // namespace persuasion
