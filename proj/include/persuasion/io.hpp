#pragma once

// JSON documents for scenarios, strategy profiles and certificates.
// Rationals travel as "p/q" strings so every value round-trips exactly.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "persuasion/equilibrium.hpp"
#include "persuasion/verifier.hpp"

namespace persuasion {

using Json = nlohmann::ordered_json;

struct ScenarioOptions {
  std::optional<Rational> epsilon;
  std::uint64_t cap = 4;           // truncation cap for verification
  std::string construction;        // credible | near-commitment | full-disclosure | appendix-f
  std::size_t grid = 300;
  std::optional<std::string> bound_state;
  std::optional<Rational> bound_low, bound_radius;  // probability of the second state, sup-norm radius
};

struct Scenario {
  std::string name;
  std::string note;
  PayoffEnvironment env;
  TypeDistribution types;
  std::vector<Experiment> menu;  // extra experiments offered to deviators
  ScenarioOptions options;
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
  throw ParseError("field '" + path + "': " + what);
}

inline const Json& member(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline Rational rational_at(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(mpz_class(j.dump()));
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const ParseError& e) {
      field_error(path, e.what());
    }
  }
  field_error(path, "expected a rational written as a string such as \"3/8\" or an integer");
}

inline std::string string_at(const Json& j, const std::string& path) {
  if (!j.is_string()) field_error(path, "expected a string");
  return j.get<std::string>();
}

inline std::uint64_t count_at(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) field_error(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::vector<std::string> names_at(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a nonempty array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string s = string_at(j[i], path + "[" + std::to_string(i) + "]");
    if (std::find(out.begin(), out.end(), s) != out.end()) field_error(path, "duplicate name " + s);
    out.push_back(s);
  }
  return out;
}

// Object keyed by `names`, every key required and no extras.
inline Vec keyed_rationals(const Json& j, const std::vector<std::string>& names, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object keyed by name");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(names.begin(), names.end(), it.key()) == names.end()) field_error(join(path, it.key()), "unknown name");
  Vec out;
  for (const auto& n : names) out.push_back(rational_at(member(j, n, path), join(path, n)));
  return out;
}

inline Json rational_json(const Rational& r) { return r.get_str(); }

inline Json keyed_json(const std::vector<std::string>& names, const Vec& v) {
  Json j = Json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = rational_json(v[i]);
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Environment, types, experiments

inline Experiment experiment_from_json(const Json& j, const std::vector<std::string>& states, const std::string& path) {
  Experiment e;
  e.id = detail::string_at(detail::member(j, "id", path), detail::join(path, "id"));
  e.outcomes = detail::names_at(detail::member(j, "outcomes", path), detail::join(path, "outcomes"));
  const Json& lk = detail::member(j, "likelihood", path);
  std::string lp = detail::join(path, "likelihood");
  for (const auto& s : states) {
    std::string sp = detail::join(lp, s);
    Vec row = detail::keyed_rationals(detail::member(lk, s, lp), e.outcomes, sp);
    Rational tot = 0;
    for (const auto& x : row) {
      if (x < 0) detail::field_error(sp, "negative likelihood");
      tot += x;
    }
    if (tot != 1) detail::field_error(sp, "likelihoods sum to " + tot.get_str() + ", expected 1");
    e.likelihood.push_back(std::move(row));
  }
  return e;
}

inline Json experiment_to_json(const Experiment& e, const std::vector<std::string>& states) {
  Json lk = Json::object();
  for (std::size_t s = 0; s < states.size(); ++s) lk[states[s]] = detail::keyed_json(e.outcomes, e.likelihood[s]);
  return Json{{"id", e.id}, {"outcomes", e.outcomes}, {"likelihood", lk}};
}

inline TypeDistribution types_from_json(const Json& j, const std::string& path) {
  TypeDistribution p;
  if (!j.is_object()) detail::field_error(path, "expected an object with 'finite' and/or 'geometric'");
  if (auto it = j.find("finite"); it != j.end()) {
    std::string fp = detail::join(path, "finite");
    if (!it->is_object()) detail::field_error(fp, "expected an object keyed by type");
    for (auto kv = it->begin(); kv != it->end(); ++kv) {
      std::uint64_t t = 0;
      try {
        std::size_t used = 0;
        t = std::stoull(kv.key(), &used);
        if (used != kv.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        detail::field_error(detail::join(fp, kv.key()), "type keys must be nonnegative integers");
      }
      Rational w = detail::rational_at(kv.value(), detail::join(fp, kv.key()));
      if (w < 0) detail::field_error(detail::join(fp, kv.key()), "negative weight");
      p.finite[t] = w;
    }
  }
  if (auto it = j.find("geometric"); it != j.end()) {
    std::string gp = detail::join(path, "geometric");
    TypeDistribution::Geometric g;
    g.start = detail::count_at(detail::member(*it, "start", gp), detail::join(gp, "start"));
    g.base = detail::rational_at(detail::member(*it, "base", gp), detail::join(gp, "base"));
    g.ratio = detail::rational_at(detail::member(*it, "ratio", gp), detail::join(gp, "ratio"));
    p.geometric = g;
  }
  try {
    p.validate();
  } catch (const InvalidDistribution& e) {
    detail::field_error(path, e.what());
  }
  return p;
}

inline Json types_to_json(const TypeDistribution& p) {
  Json j = Json::object();
  Json fin = Json::object();
  for (const auto& [t, w] : p.finite) fin[std::to_string(t)] = detail::rational_json(w);
  j["finite"] = fin;
  if (p.geometric)
    j["geometric"] = Json{{"start", p.geometric->start}, {"base", detail::rational_json(p.geometric->base)},
                          {"ratio", detail::rational_json(p.geometric->ratio)}};
  return j;
}

inline PayoffEnvironment environment_from_json(const Json& j) {
  PayoffEnvironment env;
  env.states = detail::names_at(detail::member(j, "states", ""), "states");
  env.actions = detail::names_at(detail::member(j, "actions", ""), "actions");
  env.sender_u = detail::keyed_rationals(detail::member(j, "sender_u", ""), env.actions, "sender_u");
  const Json& ru = detail::member(j, "receiver_u", "");
  for (const auto& s : env.states)
    env.receiver_u.push_back(detail::keyed_rationals(detail::member(ru, s, "receiver_u"), env.actions, "receiver_u." + s));
  Vec prior = detail::keyed_rationals(detail::member(j, "prior", ""), env.states, "prior");
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior[i] < 0) detail::field_error("prior." + env.states[i], "negative probability");
    if (prior[i] == 0) detail::field_error("prior." + env.states[i], "prior must have full support");
  }
  if (sum(prior) != 1) detail::field_error("prior", "probabilities sum to " + sum(prior).get_str() + ", expected 1");
  env.prior = Belief(prior);
  return env;
}

inline Json environment_to_json(const PayoffEnvironment& env) {
  Json ru = Json::object();
  for (std::size_t s = 0; s < env.num_states(); ++s) ru[env.states[s]] = detail::keyed_json(env.actions, env.receiver_u[s]);
  return Json{{"states", env.states},
              {"actions", env.actions},
              {"sender_u", detail::keyed_json(env.actions, env.sender_u)},
              {"receiver_u", ru},
              {"prior", detail::keyed_json(env.states, env.prior.probs())}};
}

// ---------------------------------------------------------------------------
// Scenario

inline Scenario scenario_from_json(const Json& j) {
  Scenario sc;
  if (!j.is_object()) detail::field_error("", "scenario must be a JSON object");
  if (auto it = j.find("name"); it != j.end()) sc.name = detail::string_at(*it, "name");
  if (auto it = j.find("note"); it != j.end()) sc.note = detail::string_at(*it, "note");
  sc.env = environment_from_json(j);
  sc.types = types_from_json(detail::member(j, "types", ""), "types");
  if (auto it = j.find("experiments"); it != j.end()) {
    if (!it->is_array()) detail::field_error("experiments", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      sc.menu.push_back(experiment_from_json((*it)[i], sc.env.states, "experiments[" + std::to_string(i) + "]"));
  }
  if (auto it = j.find("options"); it != j.end()) {
    const Json& o = *it;
    if (auto e = o.find("epsilon"); e != o.end()) sc.options.epsilon = detail::rational_at(*e, "options.epsilon");
    if (auto e = o.find("cap"); e != o.end()) sc.options.cap = detail::count_at(*e, "options.cap");
    if (auto e = o.find("construction"); e != o.end()) sc.options.construction = detail::string_at(*e, "options.construction");
    if (auto e = o.find("grid"); e != o.end()) sc.options.grid = detail::count_at(*e, "options.grid");
    if (auto b = o.find("bounds"); b != o.end()) {
      if (auto e = b->find("state"); e != b->end()) sc.options.bound_state = detail::string_at(*e, "options.bounds.state");
      if (auto e = b->find("low"); e != b->end()) sc.options.bound_low = detail::rational_at(*e, "options.bounds.low");
      if (auto e = b->find("radius"); e != b->end()) sc.options.bound_radius = detail::rational_at(*e, "options.bounds.radius");
    }
  }
  try {
    sc.env.validate();
  } catch (const InvalidDistribution& e) {
    detail::field_error("", e.what());
  }
  return sc;
}

inline Json scenario_to_json(const Scenario& sc) {
  Json j = Json::object();
  j["name"] = sc.name;
  if (!sc.note.empty()) j["note"] = sc.note;
  Json env = environment_to_json(sc.env);
  for (auto& [k, v] : env.items()) j[k] = v;
  j["types"] = types_to_json(sc.types);
  if (!sc.menu.empty()) {
    Json m = Json::array();
    for (const auto& e : sc.menu) m.push_back(experiment_to_json(e, sc.env.states));
    j["experiments"] = m;
  }
  Json o = Json::object();
  if (sc.options.epsilon) o["epsilon"] = detail::rational_json(*sc.options.epsilon);
  o["cap"] = sc.options.cap;
  if (!sc.options.construction.empty()) o["construction"] = sc.options.construction;
  o["grid"] = sc.options.grid;
  if (sc.options.bound_state || sc.options.bound_low || sc.options.bound_radius) {
    Json b = Json::object();
    if (sc.options.bound_state) b["state"] = *sc.options.bound_state;
    if (sc.options.bound_low) b["low"] = detail::rational_json(*sc.options.bound_low);
    if (sc.options.bound_radius) b["radius"] = detail::rational_json(*sc.options.bound_radius);
    o["bounds"] = b;
  }
  j["options"] = o;
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  try {
    return scenario_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Strategy profiles

namespace detail {

inline Json observations_json(const ObservationSet& s, const std::vector<Experiment>& exps) {
  Json a = Json::array();
  for (const auto& o : s) a.push_back(Json::array({exps[o.experiment].id, exps[o.experiment].outcomes[o.outcome]}));
  return a;
}

inline std::size_t outcome_index(const Experiment& e, const std::string& label, const std::string& path) {
  for (std::size_t i = 0; i < e.outcomes.size(); ++i)
    if (e.outcomes[i] == label) return i;
  field_error(path, "experiment " + e.id + " has no outcome " + label);
}

inline ObservationSet observations_from_json(const Json& j, const StrategyProfile& prof, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of [experiment, outcome] pairs");
  ObservationSet out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string ip = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) field_error(ip, "expected [experiment, outcome]");
    std::string id = string_at(j[i][0], ip);
    std::size_t e = 0;
    try {
      e = prof.experiment_index(id);
    } catch (const InvalidDistribution&) {
      field_error(ip, "unknown experiment " + id);
    }
    out.push_back({e, outcome_index(prof.experiments[e], string_at(j[i][1], ip), ip)});
  }
  return normalized(out);
}

inline Json choice_json(const SenderChoice& c, const std::vector<Experiment>& exps) {
  if (c.kind == SenderChoice::Kind::Run) return Json{{"run", exps[c.experiment].id}};
  return Json{{"stop", observations_json(c.disclose, exps)}};
}

}  // namespace detail

inline Json profile_to_json(const StrategyProfile& prof, const PayoffEnvironment& env) {
  const auto& exps = prof.experiments;
  const Experiment& init = exps[prof.initial];
  Json j = Json::object();
  j["label"] = prof.label;
  Json e = Json::array();
  for (const auto& x : exps) e.push_back(experiment_to_json(x, env.states));
  j["experiments"] = e;
  j["initial"] = init.id;
  j["off_path"] = prof.off_path == OffPathRule::Skeptical ? "skeptical" : "naive";
  j["tie"] = prof.tie == TieRule::SenderBest ? "sender-best" : "sender-worst";
  Json plans = Json::array();
  for (const auto& p : prof.plans) {
    Json mix = Json::array();
    for (const auto& [c, w] : p.mix) mix.push_back(Json{{"choice", detail::choice_json(c, exps)}, {"prob", detail::rational_json(w)}});
    Json types = Json::array({p.type_lo});
    types.push_back(p.type_hi == kNoTypeBound ? Json(nullptr) : Json(p.type_hi));
    plans.push_back(Json{{"types", types},
                         {"initial_outcome", init.outcomes[p.initial_outcome]},
                         {"conducted", detail::observations_json(p.conducted, exps)},
                         {"mix", mix}});
  }
  j["plans"] = plans;
  Json rx = Json::array();
  for (const auto& r : prof.receiver) {
    Json entry{{"initial_outcome", exps[r.history.initial_experiment].outcomes[r.history.initial_outcome]},
               {"disclosed", detail::observations_json(r.history.disclosed, exps)},
               {"belief", detail::keyed_json(env.states, r.belief.probs())}};
    if (!r.action_mix.empty()) {
      Json am = Json::array();
      for (const auto& [a, w] : r.action_mix) am.push_back(Json{{"action", env.actions[a]}, {"prob", detail::rational_json(w)}});
      entry["action_mix"] = am;
    }
    rx.push_back(entry);
  }
  j["receiver"] = rx;
  return j;
}

inline StrategyProfile profile_from_json(const Json& j, const PayoffEnvironment& env) {
  using namespace detail;
  StrategyProfile prof;
  if (auto it = j.find("label"); it != j.end()) prof.label = string_at(*it, "label");
  const Json& ex = member(j, "experiments", "");
  if (!ex.is_array() || ex.empty()) field_error("experiments", "expected a nonempty array");
  for (std::size_t i = 0; i < ex.size(); ++i) {
    auto e = experiment_from_json(ex[i], env.states, "experiments[" + std::to_string(i) + "]");
    for (const auto& prev : prof.experiments)
      if (prev.id == e.id) field_error("experiments[" + std::to_string(i) + "]", "duplicate experiment id " + e.id);
    prof.experiments.push_back(std::move(e));
  }
  std::string init_id = string_at(member(j, "initial", ""), "initial");
  try {
    prof.initial = prof.experiment_index(init_id);
  } catch (const InvalidDistribution&) {
    field_error("initial", "unknown experiment " + init_id);
  }
  const Experiment& init = prof.experiments[prof.initial];
  std::string off = string_at(member(j, "off_path", ""), "off_path");
  if (off == "skeptical") prof.off_path = OffPathRule::Skeptical;
  else if (off == "naive") prof.off_path = OffPathRule::Naive;
  else field_error("off_path", "expected 'skeptical' or 'naive'");
  if (auto it = j.find("tie"); it != j.end()) {
    std::string t = string_at(*it, "tie");
    if (t == "sender-best") prof.tie = TieRule::SenderBest;
    else if (t == "sender-worst") prof.tie = TieRule::SenderWorst;
    else field_error("tie", "expected 'sender-best' or 'sender-worst'");
  }
  const Json& plans = member(j, "plans", "");
  if (!plans.is_array()) field_error("plans", "expected an array");
  for (std::size_t i = 0; i < plans.size(); ++i) {
    std::string pp = "plans[" + std::to_string(i) + "]";
    PlanEntry e;
    const Json& types = member(plans[i], "types", pp);
    if (!types.is_array() || types.size() != 2) field_error(pp + ".types", "expected [lo, hi] with hi null for unbounded");
    e.type_lo = count_at(types[0], pp + ".types[0]");
    e.type_hi = types[1].is_null() ? kNoTypeBound : count_at(types[1], pp + ".types[1]");
    if (e.type_hi < e.type_lo) field_error(pp + ".types", "empty type range");
    e.initial_outcome = outcome_index(init, string_at(member(plans[i], "initial_outcome", pp), pp + ".initial_outcome"), pp + ".initial_outcome");
    e.conducted = observations_from_json(member(plans[i], "conducted", pp), prof, pp + ".conducted");
    const Json& mix = member(plans[i], "mix", pp);
    if (!mix.is_array() || mix.empty()) field_error(pp + ".mix", "expected a nonempty array");
    Rational tot = 0;
    for (std::size_t m = 0; m < mix.size(); ++m) {
      std::string mp = pp + ".mix[" + std::to_string(m) + "]";
      const Json& c = member(mix[m], "choice", mp);
      SenderChoice ch;
      if (auto r = c.find("run"); r != c.end()) {
        std::string id = string_at(*r, mp + ".choice.run");
        try {
          ch = SenderChoice::run(prof.experiment_index(id));
        } catch (const InvalidDistribution&) {
          field_error(mp + ".choice.run", "unknown experiment " + id);
        }
      } else {
        ObservationSet d = observations_from_json(member(c, "stop", mp + ".choice"), prof, mp + ".choice.stop");
        if (!is_submultiset(d, e.conducted)) field_error(mp + ".choice.stop", "discloses outcomes that were not conducted");
        ch = SenderChoice::stop(d);
      }
      Rational w = rational_at(member(mix[m], "prob", mp), mp + ".prob");
      if (w < 0) field_error(mp + ".prob", "negative probability");
      tot += w;
      e.mix.emplace_back(std::move(ch), w);
    }
    if (tot != 1) field_error(pp + ".mix", "probabilities sum to " + tot.get_str() + ", expected 1");
    prof.plans.push_back(std::move(e));
  }
  const Json& rx = member(j, "receiver", "");
  if (!rx.is_array()) field_error("receiver", "expected an array");
  for (std::size_t i = 0; i < rx.size(); ++i) {
    std::string rp = "receiver[" + std::to_string(i) + "]";
    ReceiverEntry r;
    r.history.initial_experiment = prof.initial;
    r.history.initial_outcome = outcome_index(init, string_at(member(rx[i], "initial_outcome", rp), rp + ".initial_outcome"), rp + ".initial_outcome");
    r.history.disclosed = observations_from_json(member(rx[i], "disclosed", rp), prof, rp + ".disclosed");
    Vec b = keyed_rationals(member(rx[i], "belief", rp), env.states, rp + ".belief");
    try {
      r.belief = Belief(b);
    } catch (const InvalidDistribution& e) {
      field_error(rp + ".belief", e.what());
    }
    if (auto am = rx[i].find("action_mix"); am != rx[i].end()) {
      Rational tot = 0;
      for (std::size_t m = 0; m < am->size(); ++m) {
        std::string mp = rp + ".action_mix[" + std::to_string(m) + "]";
        std::string a = string_at(member((*am)[m], "action", mp), mp + ".action");
        Index ai = 0;
        try {
          ai = env.action_index(a);
        } catch (const InvalidDistribution&) {
          field_error(mp + ".action", "unknown action " + a);
        }
        Rational w = rational_at(member((*am)[m], "prob", mp), mp + ".prob");
        if (w < 0) field_error(mp + ".prob", "negative probability");
        tot += w;
        r.action_mix.emplace_back(ai, w);
      }
      if (tot != 1) field_error(rp + ".action_mix", "probabilities sum to " + tot.get_str() + ", expected 1");
    }
    prof.receiver.push_back(std::move(r));
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Certificates

inline Json certificate_to_json(const EquilibriumCertificate& c, const TruncatedGame& g) {
  Json j = Json::object();
  j["pass"] = c.pass;
  j["scope"] = c.scope;
  j["ex_ante_payoff"] = detail::rational_json(c.ex_ante_payoff);
  j["tail_mass"] = detail::rational_json(c.tail_mass);
  j["tail_slack"] = detail::rational_json(c.tail_slack);
  j["type_cap"] = g.cap;
  j["sender_nodes"] = c.sender_nodes;
  j["violations"] = c.violations;
  if (c.worst_deviation) {
    const auto& d = *c.worst_deviation;
    j["worst_deviation"] = Json{{"initial", d.initial},
                                {"type", d.type},
                                {"node", describe(d.node, g.menu)},
                                {"gain", detail::rational_json(d.gain)},
                                {"plan", d.plan}};
  } else {
    j["worst_deviation"] = nullptr;
  }
  auto margins = [](const std::vector<MarginRecord>& ms) {
    Json a = Json::array();
    for (const auto& m : ms) a.push_back(Json{{"where", m.where}, {"margin", detail::rational_json(m.margin)}});
    return a;
  };
  j["receiver_margins"] = margins(c.receiver_margins);
  j["sender_margins"] = margins(c.sender_margins);
  Json bayes = Json::array();
  for (const auto& [h, b] : c.onpath_bayes)
    bayes.push_back(Json{{"history", describe(h, g.menu)}, {"belief", detail::keyed_json(g.env.states, b.probs())}});
  j["onpath_bayes"] = bayes;
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace persuasion
