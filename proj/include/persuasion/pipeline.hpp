#pragma once

// Scenario-level workflows shared by the command-line tool and the tests.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "persuasion/io.hpp"

namespace persuasion {

struct Construction {
  StrategyProfile profile;
  std::vector<std::string> notes;  // human-readable facts about the construction
};

inline const std::vector<std::string>& construction_names() {
  static const std::vector<std::string> names{"credible", "pooling", "near-commitment", "full-disclosure", "appendix-f"};
  return names;
}

inline Construction construct(const Scenario& sc, const std::string& which) {
  Construction out;
  const auto& env = sc.env;
  if (which == "credible" || which == "pooling") {
    auto sol = commitment_solve(env);
    out.profile = which == "credible" ? construct_credible_eq(env, sol) : pooling_profile(env, sol, "pooling");
    out.notes.push_back("commitment value " + sol.value.get_str());
  } else if (which == "near-commitment") {
    if (!sc.options.epsilon) throw PreconditionViolation("near-commitment construction needs options.epsilon");
    auto res = construct_near_commitment_eq(env, sc.types, *sc.options.epsilon);
    out.profile = res.profile;
    out.notes.push_back("dominant type " + std::to_string(res.n));
    out.notes.push_back("payoff " + res.payoff.get_str() + " (" + to_decimal(res.payoff) + ")");
    out.notes.push_back("gap to commitment value " + res.gap.get_str() + " (" + to_decimal(res.gap) + ")");
    out.notes.push_back("guaranteed gap bound " + res.delta_bound.get_str());
    for (const auto& sg : res.subgames)
      out.notes.push_back("interim " + sg.interim.str() + ": " + to_string(sg.tag) + ", silent payoff " + sg.silent_action.value.get_str());
  } else if (which == "full-disclosure") {
    out.profile = construct_full_disclosure_eq(env, sc.types);
    out.notes.push_back("full-disclosure payoff " + full_disclosure_payoff(env).get_str());
  } else if (which == "appendix-f") {
    auto rep = appendix_f_equilibrium(env, sc.types);
    out.profile = rep.profile;
    out.notes.push_back("posterior after a disclosed high outcome " + rep.disclosure_posterior.get_str());
    out.notes.push_back("posterior after silence " + rep.silent_posterior.get_str());
    for (const auto& st : rep.steps)
      out.notes.push_back("type " + std::to_string(st.type) + ": on-path " + st.on_path.get_str() + " vs deviation " + st.deviation.get_str());
  } else {
    throw PreconditionViolation("unknown construction '" + which + "'");
  }
  return out;
}

inline TruncatedGame game_for(const Scenario& sc, const StrategyProfile& prof, std::uint64_t cap, std::size_t budget) {
  auto menu = prof.experiments;
  for (const auto& e : sc.menu) {
    bool present = false;
    for (const auto& m : menu) present |= m.id == e.id;
    if (!present) menu.push_back(e);
  }
  return build_truncated_game(sc.env, sc.types, menu, cap, budget);
}

// ---------------------------------------------------------------------------
// Reports

inline std::string solve_report(const Scenario& sc) {
  const auto& env = sc.env;
  std::ostringstream os;
  auto a1 = check_assumption1(env);
  os << "scenario " << sc.name << "\n";
  os << "assumption on strict best replies: " << (a1.holds ? "holds" : "fails") << "\n";
  if (!a1.holds) return os.str();
  auto mono = is_monotone(env);
  os << "monotone environment: " << (mono ? "yes" : "no") << "\n";
  auto sol = commitment_solve(env);
  os << "commitment value: " << sol.value.get_str() << " (" << to_decimal(sol.value) << ")\n";
  os << "full-disclosure value: " << full_disclosure_payoff(env).get_str() << "\n";
  os << "optimal experiment (" << to_string(check_unique_optimal(env, sol)) << "):\n";
  for (std::size_t j = 0; j < sol.experiment.atoms.size(); ++j) {
    const auto& atom = sol.experiment.atoms[j];
    auto verdict = classify_credibility(env, atom.belief);
    os << "  belief " << atom.belief.str() << " weight " << atom.weight.get_str() << " action " << env.actions[sol.actions[j]]
       << (verdict.credible ? " credible" : " non-credible (reveal " + env.states[*verdict.witness] + ")") << "\n";
  }
  return os.str();
}

// Columns: belief on the second state, ubar, concave closure, credibility, each rational with a decimal twin.
inline std::string classify_csv(const Scenario& sc, std::size_t grid) {
  const auto& env = sc.env;
  std::ostringstream os;
  os << "belief,belief_decimal,ubar,ubar_decimal,cav,cav_decimal,credible,boundary\n";
  for (const auto& pt : credibility_frontier(env, grid)) {
    Rational cav = concave_closure(env, Belief::binary(pt.x));
    os << pt.x.get_str() << "," << to_decimal(pt.x) << "," << pt.verdict.ubar.get_str() << "," << to_decimal(pt.verdict.ubar) << ","
       << cav.get_str() << "," << to_decimal(cav) << "," << (pt.verdict.credible ? 1 : 0) << "," << (pt.boundary ? 1 : 0) << "\n";
  }
  return os.str();
}

inline std::string bounds_report(const Scenario& sc) {
  const auto& env = sc.env;
  std::ostringstream os;
  if (!sc.options.bound_state) throw PreconditionViolation("bounds need options.bounds.state");
  Index th = env.state_index(*sc.options.bound_state);
  auto sol = commitment_solve(env);
  os << "state " << env.states[th] << "\n";
  // A failed hypothesis for the type-count threshold is reported, not fatal: the ball constants below are independent.
  try {
    auto t3 = theorem3_threshold(env, sol, th);
    os << "payoff gap over optimal beliefs: " << t3.gap.get_str() << "\n";
    os << "type-count threshold n: " << t3.n.get_str() << " (lambda = " << t3.lambda << ")\n";
    if (t3.n <= 100000) {
      auto n = t3.n.get_ui();
      os << "types within the uniform neighbourhood of {0.." << n - 1 << "}: " << (in_uniform_neighbourhood(sc.types, n) ? "yes" : "no")
         << "\n";
    }
  } catch (const HypothesisFail& e) {
    if (!sc.options.bound_low) throw;
    os << "type-count threshold unavailable: " << e.what() << "\n";
  }
  if (sc.options.bound_low && sc.options.bound_radius) {
    Belief low = Belief::binary(*sc.options.bound_low);
    auto l1 = lemma1_constants(env, sol, low, *sc.options.bound_radius, sc.options.grid);
    os << "non-credible belief " << low.str() << " radius " << sc.options.bound_radius->get_str() << "\n";
    os << "  mass of optimal beliefs in the ball: " << l1.mass_in_ball.get_str() << "\n";
    os << "  constrained value in [" << l1.sup_lower.get_str() << ", " << l1.sup_upper.get_str() << "]\n";
    os << "  eta " << l1.eta.get_str() << ", epsilon " << l1.eps.get_str() << ", type count " << l1.n_types.get_str() << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Monte Carlo play of a profile in the truncated game

struct SimulationSummary {
  std::size_t samples = 0;
  double mean = 0, std_error = 0;
  Rational exact;
};

inline SimulationSummary simulate(const TruncatedGame& g, const StrategyProfile& prof, std::size_t samples, std::uint64_t seed,
                                  std::size_t budget) {
  if (samples == 0) throw PreconditionViolation("need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double r = unit(rng) * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (r < w[i]) return i;
      r -= w[i];
    }
    return w.size() - 1;
  };
  std::vector<std::uint64_t> types = active_types(g);
  std::vector<double> type_w;
  for (auto t : types) type_w.push_back(to_double(g.renormalized(t)));
  detail::Evaluator ev(g, prof, budget);
  const auto& env = g.env;
  double sum_v = 0, sum_sq = 0;
  for (std::size_t n = 0; n < samples; ++n) {
    std::vector<double> pw;
    for (const auto& x : env.prior.probs()) pw.push_back(to_double(x));
    Index state = draw(pw);
    std::uint64_t t = types[draw(type_w)];
    const Experiment& init = g.menu[prof.initial];
    std::vector<double> ow;
    for (const auto& x : init.likelihood[state]) ow.push_back(to_double(x));
    std::size_t s0 = draw(ow);
    ev.set_interim(prof.initial, s0);
    ObservationSet c;
    double value = 0;
    while (true) {
      auto mix = ev.prescribed(t, c);
      std::vector<double> cw;
      for (const auto& [ch, pr] : mix) cw.push_back(to_double(pr));
      const SenderChoice& ch = mix[draw(cw)].first;
      if (ch.kind == SenderChoice::Kind::Stop) {
        const auto& dec = ev.receiver(History{prof.initial, s0, ch.disclose});
        std::vector<double> aw;
        for (const auto& [a, w] : dec.mix) aw.push_back(to_double(w));
        value = to_double(env.sender_u[dec.mix[draw(aw)].first]);
        break;
      }
      const Experiment& ex = g.menu[ch.experiment];
      std::vector<double> xw;
      for (const auto& x : ex.likelihood[state]) xw.push_back(to_double(x));
      c = with_added(c, {ch.experiment, draw(xw)});
    }
    sum_v += value;
    sum_sq += value * value;
  }
  SimulationSummary s;
  s.samples = samples;
  s.mean = sum_v / static_cast<double>(samples);
  double var = sum_sq / static_cast<double>(samples) - s.mean * s.mean;
  s.std_error = samples > 1 && var > 0 ? std::sqrt(var / static_cast<double>(samples - 1)) : 0.0;
  s.exact = ex_ante_payoff(g, prof, budget);
  return s;
}

}  // namespace persuasion
