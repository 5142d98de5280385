// Command-line front end: persuade <solve|classify|construct|verify|bounds|simulate> --scenario FILE ...
//
// Exit codes: 0 ok, 1 verification failed, 2 precondition or assumption failed, 3 budget exceeded.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "persuasion/pipeline.hpp"

namespace fs = std::filesystem;
using namespace persuasion;

namespace {

constexpr int kOk = 0, kVerifyFail = 1, kPrecondition = 2, kBudget = 3;

struct Options {
  std::string scenario, out, profile, which, state, low, radius, epsilon;
  std::uint64_t seed = 1;
  std::size_t budget = 2'000'000;
  std::size_t grid = 0;
  std::size_t samples = 20000;
  std::int64_t cap = -1;
  bool explain = false;
};

void emit(const Options& o, const std::string& file, const std::string& text) {
  if (o.out.empty()) return;
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / file);
  if (!f) throw ParseError("cannot write " + (fs::path(o.out) / file).string());
  f << text;
}

Scenario load(const Options& o) {
  auto sc = load_scenario(o.scenario);
  if (o.grid) sc.options.grid = o.grid;
  if (o.cap >= 0) sc.options.cap = static_cast<std::uint64_t>(o.cap);
  if (!o.epsilon.empty()) sc.options.epsilon = parse_rational(o.epsilon);
  if (!o.state.empty()) sc.options.bound_state = o.state;
  if (!o.low.empty()) sc.options.bound_low = parse_rational(o.low);
  if (!o.radius.empty()) sc.options.bound_radius = parse_rational(o.radius);
  return sc;
}

void print_certificate(const EquilibriumCertificate& c, const TruncatedGame& g, bool explain) {
  std::cout << "verdict: " << (c.pass ? "PASS" : "FAIL") << "\n";
  std::cout << "ex-ante payoff: " << c.ex_ante_payoff.get_str() << " (" << to_decimal(c.ex_ante_payoff) << ")\n";
  std::cout << "type cap " << g.cap << ", tail mass " << c.tail_mass.get_str() << ", tail slack " << c.tail_slack.get_str() << "\n";
  std::cout << "sender nodes: " << c.sender_nodes << "\n";
  for (const auto& v : c.violations) std::cout << "violation: " << v << "\n";
  if (c.worst_deviation) {
    const auto& d = *c.worst_deviation;
    std::cout << "worst deviation: type " << d.type << (d.initial ? " (initial experiment)" : "") << " at " << describe(d.node, g.menu)
              << ", gain " << d.gain.get_str() << " (" << to_decimal(d.gain) << ")\n";
    if (explain) std::cout << d.plan;
  }
  if (!explain) return;
  std::cout << "scope: " << c.scope << "\n";
  auto show = [](const char* what, const std::vector<MarginRecord>& ms) {
    std::optional<MarginRecord> low;
    for (const auto& m : ms)
      if (!low || m.margin < low->margin) low = m;
    if (low) std::cout << "smallest " << what << " margin " << low->margin.get_str() << " at " << low->where << "\n";
    for (const auto& m : ms)
      if (m.margin < 0) std::cout << "  negative " << what << " margin " << m.margin.get_str() << " at " << m.where << "\n";
  };
  show("receiver", c.receiver_margins);
  show("sender", c.sender_margins);
  for (const auto& [h, b] : c.onpath_bayes) std::cout << "on-path belief at " << describe(h, g.menu) << ": " << b.str() << "\n";
}

int run_verification(const Options& o, const Scenario& sc, const StrategyProfile& prof) {
  auto g = game_for(sc, prof, sc.options.cap, o.budget);
  auto cert = check_pebe(g, prof, o.budget);
  print_certificate(cert, g, o.explain);
  emit(o, "certificate.json", certificate_to_json(cert, g).dump(2) + "\n");
  return cert.pass ? kOk : kVerifyFail;
}

int cmd_solve(const Options& o) {
  auto sc = load(o);
  auto text = solve_report(sc);
  std::cout << text;
  emit(o, "solve.txt", text);
  if (!check_assumption1(sc.env).holds) return kPrecondition;
  return kOk;
}

int cmd_classify(const Options& o) {
  auto sc = load(o);
  auto csv = classify_csv(sc, sc.options.grid);
  if (o.out.empty()) std::cout << csv;
  else {
    emit(o, "classify.csv", csv);
    std::cout << "wrote " << (fs::path(o.out) / "classify.csv").string() << "\n";
  }
  return kOk;
}

std::string which_of(const Options& o, const Scenario& sc) {
  std::string w = o.which.empty() ? sc.options.construction : o.which;
  if (w.empty()) throw PreconditionViolation("no construction named; pass --which or set options.construction");
  return w;
}

int cmd_construct(const Options& o) {
  auto sc = load(o);
  auto built = construct(sc, which_of(o, sc));
  std::cout << "construction: " << built.profile.label << "\n";
  for (const auto& n : built.notes) std::cout << "  " << n << "\n";
  emit(o, "profile.json", profile_to_json(built.profile, sc.env).dump(2) + "\n");
  return run_verification(o, sc, built.profile);
}

int cmd_verify(const Options& o) {
  auto sc = load(o);
  StrategyProfile prof;
  if (!o.profile.empty()) {
    try {
      prof = profile_from_json(read_json_file(o.profile), sc.env);
    } catch (const ParseError& e) {
      throw ParseError(o.profile + ": " + e.what());
    }
  } else {
    prof = construct(sc, which_of(o, sc)).profile;
  }
  return run_verification(o, sc, prof);
}

int cmd_bounds(const Options& o) {
  auto sc = load(o);
  auto text = bounds_report(sc);
  std::cout << text;
  emit(o, "bounds.txt", text);
  return kOk;
}

int cmd_simulate(const Options& o) {
  auto sc = load(o);
  StrategyProfile prof = o.profile.empty() ? construct(sc, which_of(o, sc)).profile
                                           : profile_from_json(read_json_file(o.profile), sc.env);
  auto g = game_for(sc, prof, sc.options.cap, o.budget);
  auto s = simulate(g, prof, o.samples, o.seed, o.budget);
  std::ostringstream os;
  os << "samples " << s.samples << " seed " << o.seed << "\n";
  os << "simulated mean payoff " << to_decimal(Rational(s.mean)) << " (standard error " << to_decimal(Rational(s.std_error)) << ")\n";
  os << "exact ex-ante payoff " << s.exact.get_str() << " (" << to_decimal(s.exact) << ")\n";
  std::cout << os.str();
  emit(o, "simulate.txt", os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable disclosure with private experiment capacity: solve, construct and verify equilibria"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "directory for report files");
  app.add_option("--seed", o.seed, "random seed for simulate");
  app.add_option("--budget", o.budget, "node budget for game-tree work");
  app.add_option("--grid", o.grid, "grid size for classify and bounds");
  app.add_option("--cap", o.cap, "truncation cap on types for verification");
  app.add_option("--epsilon", o.epsilon, "dominant-type tolerance for the near-commitment construction");

  auto* solve = app.add_subcommand("solve", "commitment value, optimal experiment, assumption checks");
  auto* classify = app.add_subcommand("classify", "credibility and concave-closure CSV over a belief grid");
  auto* cons = app.add_subcommand("construct", "build an equilibrium profile and verify it");
  cons->add_option("--which", o.which, "credible | pooling | near-commitment | full-disclosure | appendix-f");
  cons->add_flag("--explain", o.explain, "print the full deviation plan and margins");
  auto* verify = app.add_subcommand("verify", "check a profile against the equilibrium conditions");
  verify->add_option("--profile", o.profile, "profile JSON file")->check(CLI::ExistingFile);
  verify->add_option("--which", o.which, "construction to verify when no profile file is given");
  verify->add_flag("--explain", o.explain, "print the full deviation plan, margins and on-path beliefs");
  auto* bounds = app.add_subcommand("bounds", "closed-form thresholds for a state and a non-credible belief");
  bounds->add_option("--state", o.state, "state whose disclosure drives the bound");
  bounds->add_option("--low", o.low, "non-credible belief (probability of the second state)");
  bounds->add_option("--radius", o.radius, "radius of the ball around that belief");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo play of a profile");
  sim->add_option("--profile", o.profile, "profile JSON file")->check(CLI::ExistingFile);
  sim->add_option("--which", o.which, "construction to simulate when no profile file is given");
  sim->add_option("--samples", o.samples, "number of plays");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kPrecondition;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*classify) return cmd_classify(o);
    if (*cons) return cmd_construct(o);
    if (*verify) return cmd_verify(o);
    if (*bounds) return cmd_bounds(o);
    if (*sim) return cmd_simulate(o);
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kPrecondition;
  }
  return kPrecondition;
}
