#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "chorc/assertions/asserted.hpp"
#include "chorc/assertions/asserted_projection.hpp"
#include "chorc/assertions/solver.hpp"
#include "chorc/core/bisimulation.hpp"
#include "chorc/globaltypes/scribble.hpp"
#include "chorc/globaltypes/translate.hpp"
#include "chorc/io/machine_io.hpp"
#include "chorc/io/skeleton.hpp"
#include "chorc/systems/semantics.hpp"

namespace fs = std::filesystem;
using namespace chorc;

namespace {

enum Exit { kPass = 0, kFail = 1, kToolError = 2 };

struct Config {
  std::string command;
  std::string file;
  std::optional<std::string> role;
  std::optional<std::string> server;
  bool pass = false;
  std::size_t k = 12;
  std::size_t unfold = 1;
  std::size_t cap = kDefaultStateCap;
  std::string solver = "builtin";
  double timeout = 5.0;
  std::string out = ".";
  bool force = false;
  bool json = false;
  std::string templ = "ts";
};

struct Input {
  std::string protocol;
  std::vector<Participant> roles;
  std::optional<ProtocolDecl> decl;
  CAutomaton plain;
  std::optional<AssertedCA> asserted;
};

// Collects what a command reports, printed either as text or as one JSON document.
struct Report {
  Json doc = Json::object();
  std::vector<std::string> lines;
  bool pass = true;

  void say(const std::string& s) { lines.push_back(s); }
  void diag(Json d, const std::string& text) {
    if (d.value("severity", "error") == "error") pass = false;
    doc["diagnostics"].push_back(std::move(d));
    lines.push_back(text);
  }
};

template <class L>
std::string label_text(const L& l) {
  if constexpr (std::is_same_v<L, AssertedLabel>)
    return l.key();
  else
    return l.to_string();
}

template <class L>
Json witness_json(const Fsa<L>& a, const Witness& w) {
  Json j{{"severity", "error"}, {"check", w.check}, {"clause", w.clause}, {"message", w.message}};
  if (w.state) j["state"] = a.name(*w.state);
  if (w.participant) j["participant"] = w.participant->name;
  if (w.partner) j["partner"] = w.partner->name;
  if (w.variable) j["variable"] = *w.variable;
  Json ts = Json::array();
  for (auto t : w.transitions) ts.push_back(label_text(*a.transition(t).label));
  if (!ts.empty()) j["transitions"] = ts;
  Json runs = Json::array();
  for (const auto& r : w.runs) {
    Json run = Json::array();
    for (auto t : r) {
      const auto& l = a.transition(t).label;
      run.push_back(l ? label_text(*l) : "eps");
    }
    runs.push_back(run);
  }
  if (!runs.empty()) j["runs"] = runs;
  return j;
}

std::string trace_text(const std::vector<Interaction>& t) {
  if (t.empty()) return "(empty)";
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " . " : "") + t[i].to_string();
  return s;
}

Json trace_json(const std::vector<Interaction>& t) {
  Json j = Json::array();
  for (const auto& i : t) j.push_back(i.to_string());
  return j;
}

Input load_input(const Config& cfg) {
  fs::path path(cfg.file);
  auto text = read_file(path);
  Input in;
  if (path.extension() == ".json") {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw IoError(cfg.file + ": " + e.what());
    }
    in.protocol = j.value("protocol", path.stem().string());
    if (has_assertions(j)) {
      in.asserted = load_asserted_ca(j);
      in.plain = strip(*in.asserted);
    } else {
      in.plain = contract(load_c_automaton(j));
    }
    for (const auto& p : in.plain.participants) in.roles.push_back(p);
    return in;
  }
  try {
    in.decl = parse_protocol(text);
  } catch (const ProtocolParseError& e) {
    throw IoError(cfg.file + ":" + e.what());
  }
  in.protocol = in.decl->name;
  in.roles = in.decl->roles;
  ParticipantSet declared(in.roles.begin(), in.roles.end());
  in.plain = contract(cfg.pass ? translate_with_pass(in.decl->body, cfg.cap) : translate(in.decl->body));
  in.plain.participants = declared;
  if (in.decl->refinements) {
    in.asserted = translate_asserted(in.decl->body);
    in.asserted->participants = declared;
  }
  return in;
}

std::unique_ptr<SolverPort> solver_for(const Config& cfg) {
  std::string spec = cfg.solver;
  if (const char* env = std::getenv("CHORC_SOLVER"); env && *env) spec = env;
  return make_solver(spec, cfg.timeout);
}

void run_checks(const Input& in, const Config& cfg, SolverPort& solver, Report& rep) {
  WfReport wf;
  if (in.asserted) {
    wf = consistent(*in.asserted, cfg.unfold, solver);
    for (const auto& w : wf.witnesses) rep.diag(witness_json(in.asserted->fsa, w), "FAIL " + describe(*in.asserted, w));
  } else {
    wf = well_formed(in.plain);
    for (const auto& w : wf.witnesses) rep.diag(witness_json(in.plain.fsa, w), "FAIL " + describe(in.plain, w));
  }
  rep.doc["wellFormed"] = wf.pass;
  if (in.asserted) rep.doc["consistent"] = wf.pass;
  std::string what = in.asserted ? "consistent" : "well-formed";
  rep.say(in.protocol + ": " + (wf.pass ? what : "not " + what) + " (" + std::to_string(in.plain.fsa.size()) +
          " states, " + std::to_string(in.plain.fsa.transitions().size()) + " transitions)");
}

Participant known_role(const Input& in, const std::string& r) {
  for (const auto& p : in.roles)
    if (p.name == r) return p;
  throw IoError("unknown role " + r);
}

std::vector<Participant> selected_roles(const Input& in, const Config& cfg) {
  if (cfg.role) return {known_role(in, *cfg.role)};
  return in.roles;
}

fs::path out_dir(const Config& cfg) {
  fs::path d(cfg.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (!fs::is_directory(d)) throw IoError("cannot create output directory " + d.string());
  return d;
}

void emit(Report& rep, const fs::path& p, const std::string& content) {
  write_atomic(p, content);
  rep.doc["files"].push_back(p.string());
  rep.say("wrote " + p.string());
}

// Runs the checks; false when the caller must stop because they failed.
bool gate(const Input& in, const Config& cfg, SolverPort& solver, Report& rep, bool& unverified) {
  run_checks(in, cfg, solver, rep);
  if (rep.pass) return true;
  if (!cfg.force) {
    rep.say("no files written; use --force to emit unverified output");
    return false;
  }
  unverified = true;
  rep.pass = true;
  rep.doc["unverified"] = true;
  rep.say("checks failed; outputs are tagged UNVERIFIED");
  return true;
}

int cmd_check(const Input& in, const Config& cfg, SolverPort& solver, Report& rep) {
  run_checks(in, cfg, solver, rep);
  return rep.pass ? kPass : kFail;
}

int cmd_translate(const Input& in, const Config& cfg, Report& rep) {
  auto dir = out_dir(cfg);
  EmitMeta meta{in.protocol};
  if (in.asserted) {
    emit(rep, dir / (in.protocol + ".dot"), to_dot(*in.asserted, meta));
    emit(rep, dir / (in.protocol + ".json"), dump(to_json(*in.asserted, meta)));
  } else {
    emit(rep, dir / (in.protocol + ".dot"), to_dot(in.plain, meta));
    emit(rep, dir / (in.protocol + ".json"), dump(to_json(in.plain, meta)));
  }
  rep.doc["states"] = in.plain.fsa.size();
  rep.doc["transitions"] = in.plain.fsa.transitions().size();
  rep.say(in.protocol + ": " + std::to_string(in.plain.fsa.size()) + " states, " +
          std::to_string(in.plain.fsa.transitions().size()) + " transitions");
  return kPass;
}

int cmd_project(const Input& in, const Config& cfg, SolverPort& solver, Report& rep) {
  bool unverified = false;
  auto roles = selected_roles(in, cfg);
  if (!gate(in, cfg, solver, rep, unverified)) return kFail;
  auto dir = out_dir(cfg);
  for (const auto& r : roles) {
    EmitMeta meta{in.protocol, r.name, unverified};
    auto base = dir / (in.protocol + "_" + r.name);
    if (in.asserted) {
      auto m = project_asserted(*in.asserted, r, solver);
      emit(rep, fs::path(base) += ".dot", to_dot(m, meta));
      emit(rep, fs::path(base) += ".json", dump(to_json(m, meta)));
    } else {
      auto m = project_participant(in.plain, r);
      emit(rep, fs::path(base) += ".dot", to_dot(m, meta));
      emit(rep, fs::path(base) += ".json", dump(to_json(m, meta)));
    }
  }
  return kPass;
}

int cmd_codegen(const Input& in, const Config& cfg, SolverPort& solver, Report& rep) {
  if (!cfg.role) throw IoError("codegen needs --role");
  auto role = known_role(in, *cfg.role);
  auto ext = skeleton_extension(cfg.templ);
  bool unverified = false;
  if (!gate(in, cfg, solver, rep, unverified)) return kFail;
  auto dir = out_dir(cfg);
  EmitMeta meta{in.protocol, role.name, unverified};
  SkeletonOptions opt{in.protocol, cfg.server, cfg.templ, unverified};
  auto base = dir / (in.protocol + "_" + role.name);
  if (in.asserted) {
    auto m = project_asserted(*in.asserted, role, solver);
    emit(rep, fs::path(base) += ".json", dump(to_json(m, meta)));
    emit(rep, fs::path(base) += "." + ext, skeleton(m, opt));
  } else {
    auto m = project_participant(in.plain, role);
    PayloadLookup lookup;
    if (in.decl)
      lookup = [&](const Action& a) {
        for (const auto& sig : in.decl->messages)
          if (sig.inter == a.interaction()) return sig.payload;
        return Payload{};
      };
    emit(rep, fs::path(base) += ".json", dump(to_json(m, meta)));
    emit(rep, fs::path(base) += "." + ext, skeleton(m, opt, lookup));
  }
  if (cfg.server) rep.doc["server"] = *cfg.server;
  return kPass;
}

std::string config_text(const Configuration& c, const AssertedSystem& s) {
  std::string n = "(";
  bool first = true;
  for (const auto& [p, st] : c) {
    n += (first ? "" : ", ") + p.name + "=" + s.machines.at(p).fsa.name(st);
    first = false;
  }
  return n + ")";
}

Json config_json(const Configuration& c, const std::function<std::string(const Participant&, StateIndex)>& name) {
  Json j = Json::object();
  for (const auto& [p, st] : c) j[p.name] = name(p, st);
  return j;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

int cmd_verify(const Input& in, const Config& cfg, SolverPort& solver, Report& rep) {
  auto sys = project(in.plain);
  auto prod = sync_semantics(sys);
  auto pr = compare_with_product(in.plain, prod, cfg.k);
  auto state_name = [&](const Participant& p, StateIndex s) { return sys.machines.at(p).fsa.name(s); };
  rep.doc["configurations"] = pr.configurations;
  rep.doc["bisimilar"] = pr.bisimilar;
  rep.doc["k"] = cfg.k;
  rep.doc["traceEqual"] = pr.bounded_trace_equal;
  rep.say(in.protocol + ": " + std::to_string(pr.configurations) + " reachable configurations");
  rep.say("bisimilar to the product: " + yes(pr.bisimilar));
  rep.say("trace-equal up to k=" + std::to_string(cfg.k) + ": " + yes(pr.bounded_trace_equal));
  if (!pr.bisimilar || !pr.bounded_trace_equal) {
    Json d{{"severity", "error"}, {"check", "projection"}, {"clause", "faithful"},
           {"message", "source and product differ"}};
    std::string text = "FAIL projection is not faithful";
    if (pr.witness) {
      d["trace"] = trace_json(*pr.witness);
      d["onlyIn"] = pr.witness_in_product ? "product" : "source";
      text += ": trace " + trace_text(*pr.witness) + " only in the " + (pr.witness_in_product ? "product" : "source");
    }
    rep.diag(d, text);
  }
  auto dl = deadlocks(sys, prod);
  rep.doc["deadlocks"] = Json::array();
  for (const auto& c : dl) rep.doc["deadlocks"].push_back(config_json(c, state_name));
  rep.say("deadlock-free: " + yes(dl.empty()));
  for (const auto& c : dl)
    rep.diag({{"severity", "error"}, {"check", "deadlock"}, {"clause", "configuration"},
              {"configuration", config_json(c, state_name)}, {"message", "no transition and not final"}},
             "FAIL deadlock " + to_string(c, sys));
  rep.doc["locks"] = Json::object();
  for (const auto& [p, _] : sys.machines) {
    auto lk = locks(sys, prod, p);
    rep.doc["locks"][p.name] = Json::array();
    for (const auto& c : lk) rep.doc["locks"][p.name].push_back(config_json(c, state_name));
    rep.say("lock-free for " + p.name + ": " + yes(lk.empty()));
    for (const auto& c : lk)
      rep.diag({{"severity", "error"}, {"check", "lock"}, {"clause", "configuration"}, {"participant", p.name},
                {"configuration", config_json(c, state_name)}, {"message", p.name + " never gets to act"}},
               "FAIL lock for " + p.name + " " + to_string(c, sys));
  }
  if (in.asserted) {
    auto asys = project_asserted_all(*in.asserted, solver);
    auto aprod = asserted_sync_semantics(asys, solver, cfg.unfold);
    bool weak = weak_bisimilar(strip_with_epsilon(*in.asserted), aprod.interactions()).bisimilar;
    auto adl = asserted_deadlocks(asys, aprod);
    auto aname = [&](const Participant& p, StateIndex s) { return asys.machines.at(p).fsa.name(s); };
    rep.doc["asserted"] = {{"configurations", aprod.automaton.size()}, {"weakBisimilar", weak}, {"deadlocks", Json::array()}};
    for (const auto& c : adl) rep.doc["asserted"]["deadlocks"].push_back(config_json(c, aname));
    rep.say("asserted product: " + std::to_string(aprod.automaton.size()) + " configurations");
    rep.say("asserted source weakly bisimilar to the asserted product: " + yes(weak));
    rep.say("asserted deadlock-free: " + yes(adl.empty()));
    if (!weak)
      rep.diag({{"severity", "error"}, {"check", "asserted-projection"}, {"clause", "weak-bisimilarity"},
                {"message", "asserted source and product are not weakly bisimilar"}},
               "FAIL asserted source and product are not weakly bisimilar");
    for (const auto& c : adl)
      rep.diag({{"severity", "error"}, {"check", "asserted-deadlock"}, {"clause", "configuration"},
                {"configuration", config_json(c, aname)}, {"message", "no transition and not final"}},
               "FAIL asserted deadlock " + config_text(c, asys));
  }
  return rep.pass ? kPass : kFail;
}

void print(const Report& rep, const Config& cfg, int code) {
  if (cfg.json) {
    Json j = rep.doc;
    j["verdict"] = code == kPass ? "pass" : code == kFail ? "fail" : "error";
    std::cout << j.dump(2) << "\n";
    return;
  }
  for (const auto& l : rep.lines) std::cout << l << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"chorc: choreography automata compiler and verifier"};
  app.add_option("command", cfg.command, "check | translate | project | verify | codegen")
      ->required()
      ->check(CLI::IsMember({"check", "translate", "project", "verify", "codegen"}));
  app.add_option("file", cfg.file, "protocol (.scr) or c-automaton (.json)")->required();
  app.add_option("--role", cfg.role, "role to project or generate code for");
  app.add_option("--server", cfg.server, "server role, recorded in generated code");
  app.add_flag("--pass", cfg.pass, "translate with the commuting interleavings");
  app.add_option("--k", cfg.k, "trace bound for verify")->check(CLI::PositiveNumber);
  app.add_option("--unfold", cfg.unfold, "loop unfolding bound for assertions")->check(CLI::PositiveNumber);
  app.add_option("--cap", cfg.cap, "state cap for --pass")->check(CLI::PositiveNumber);
  app.add_option("--solver", cfg.solver, "builtin or smt:<path>");
  app.add_option("--timeout", cfg.timeout, "solver timeout in seconds")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "output directory");
  app.add_flag("--force", cfg.force, "emit outputs even when checks fail, tagged UNVERIFIED");
  app.add_flag("--json", cfg.json, "print the report as JSON");
  app.add_option("--template", cfg.templ, "skeleton template")->check(CLI::IsMember(skeleton_templates()));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kToolError;
  }

  Report rep;
  rep.doc["command"] = cfg.command;
  rep.doc["diagnostics"] = Json::array();
  int code = kToolError;
  try {
    auto in = load_input(cfg);
    rep.doc["protocol"] = in.protocol;
    auto solver = solver_for(cfg);
    rep.doc["solver"] = solver->backend();
    if (cfg.command == "check")
      code = cmd_check(in, cfg, *solver, rep);
    else if (cfg.command == "translate")
      code = cmd_translate(in, cfg, rep);
    else if (cfg.command == "project")
      code = cmd_project(in, cfg, *solver, rep);
    else if (cfg.command == "verify")
      code = cmd_verify(in, cfg, *solver, rep);
    else
      code = cmd_codegen(in, cfg, *solver, rep);
  } catch (const StateCapExceeded& e) {
    rep.doc["diagnostics"].push_back({{"severity", "error"}, {"check", "translation"}, {"clause", "state-cap"},
                                      {"message", e.what()}, {"family", e.family}, {"cap", e.cap}});
    rep.lines.push_back(std::string("error: ") + e.what());
    code = kToolError;
  } catch (const std::exception& e) {
    rep.doc["diagnostics"].push_back({{"severity", "error"}, {"check", "tool"}, {"message", e.what()}});
    rep.lines.push_back(std::string("error: ") + e.what());
    code = kToolError;
  }
  if (code == kToolError && !cfg.json) {
    for (const auto& l : rep.lines) (l.rfind("error: ", 0) == 0 ? std::cerr : std::cout) << l << "\n";
    return code;
  }
  print(rep, cfg, code);
  return code;
}
