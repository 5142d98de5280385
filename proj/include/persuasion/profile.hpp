#pragma once

// Strategy profiles for the disclosure game: sender plans keyed by conducted
// multisets, receiver beliefs and actions keyed by disclosure histories.

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "persuasion/core_model.hpp"

namespace persuasion {

inline constexpr std::uint64_t kNoTypeBound = std::numeric_limits<std::uint64_t>::max();

// One (experiment, outcome) observation; experiment indexes the profile's list.
struct Observation {
  std::size_t experiment = 0;
  std::size_t outcome = 0;
  auto operator<=>(const Observation&) const = default;
};

// Order is irrelevant for beliefs, so multisets are kept sorted.
using ObservationSet = std::vector<Observation>;

inline ObservationSet normalized(ObservationSet s) {
  std::sort(s.begin(), s.end());
  return s;
}

inline ObservationSet with_added(ObservationSet s, Observation o) {
  s.insert(std::upper_bound(s.begin(), s.end(), o), o);
  return s;
}

inline bool is_submultiset(const ObservationSet& small, const ObservationSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// What the receiver sees: the initial outcome plus the disclosed additional outcomes.
struct History {
  std::size_t initial_experiment = 0;
  std::size_t initial_outcome = 0;
  ObservationSet disclosed;
  auto operator<=>(const History&) const = default;
};

struct SenderChoice {
  enum class Kind { Stop, Run };
  Kind kind = Kind::Stop;
  std::size_t experiment = 0;  // for Run
  ObservationSet disclose;     // for Stop; must be a sub-multiset of the conducted set

  static SenderChoice stop(ObservationSet d) { return {Kind::Stop, 0, normalized(std::move(d))}; }
  static SenderChoice run(std::size_t e) { return {Kind::Run, e, {}}; }
  auto operator<=>(const SenderChoice&) const = default;
};

struct PlanEntry {
  std::uint64_t type_lo = 0;
  std::uint64_t type_hi = kNoTypeBound;  // inclusive
  std::size_t initial_outcome = 0;       // plans live under the profile's initial experiment
  ObservationSet conducted;
  std::vector<std::pair<SenderChoice, Rational>> mix;
};

struct ReceiverEntry {
  History history;
  Belief belief;
  std::vector<std::pair<Index, Rational>> action_mix;  // empty: use the tie rule at `belief`
};

enum class OffPathRule { Skeptical, Naive };
enum class TieRule { SenderBest, SenderWorst };

struct StrategyProfile {
  std::string label;
  std::vector<Experiment> experiments;
  std::size_t initial = 0;
  std::vector<PlanEntry> plans;
  std::vector<ReceiverEntry> receiver;
  OffPathRule off_path = OffPathRule::Skeptical;
  TieRule tie = TieRule::SenderBest;

  std::size_t experiment_index(const std::string& id) const {
    for (std::size_t i = 0; i < experiments.size(); ++i)
      if (experiments[i].id == id) return i;
    throw InvalidDistribution("profile has no experiment " + id);
  }
};

inline std::string describe(const ObservationSet& s, const std::vector<Experiment>& exps) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? ", " : "") + exps[s[i].experiment].id + ":" + exps[s[i].experiment].outcomes[s[i].outcome];
  return out + "}";
}

inline std::string describe(const History& h, const std::vector<Experiment>& exps) {
  return exps[h.initial_experiment].id + ":" + exps[h.initial_experiment].outcomes[h.initial_outcome] + " + " +
         describe(h.disclosed, exps);
}

inline std::string describe(const SenderChoice& c, const std::vector<Experiment>& exps) {
  if (c.kind == SenderChoice::Kind::Run) return "run " + exps[c.experiment].id;
  return "stop, disclose " + describe(c.disclose, exps);
}

}  // namespace persuasion
