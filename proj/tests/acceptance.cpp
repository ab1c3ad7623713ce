// One line per acceptance criterion; exits nonzero if any criterion fails.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "chorc/assertions/asserted_projection.hpp"
#include "chorc/core/bisimulation.hpp"
#include "chorc/globaltypes/scribble.hpp"
#include "chorc/globaltypes/translate.hpp"
#include "chorc/io/machine_io.hpp"
#include "chorc/systems/semantics.hpp"
#include "fixtures.hpp"
#include "suites.hpp"

using namespace chorc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failed expectation and keeps a short summary.
struct Expect {
  Outcome o;
  void operator()(bool cond, const std::string& what) {
    if (!cond && o.ok) {
      o.ok = false;
      o.detail = "failed: " + what;
    }
  }
  void note(const std::string& s) {
    if (o.ok) o.detail += (o.detail.empty() ? "" : "; ") + s;
  }
};

ProtocolDecl load(const std::string& f) { return parse_protocol(fixtures::read_file(fixtures::protocol_path(f))); }

CAutomaton plain(const ProtocolDecl& d) {
  auto a = contract(translate(d.body));
  a.participants = ParticipantSet(d.roles.begin(), d.roles.end());
  return a;
}

int run(const std::string& args) {
  std::string cmd = std::string(CHORC_BINARY) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

bool has(const WfReport& r, const std::string& clause) {
  for (const auto& w : r.witnesses)
    if (w.clause == clause) return true;
  return false;
}

std::string first_label(const CAutomaton& a, const std::vector<TransitionIndex>& run) {
  return run.empty() ? "" : a.fsa.transition(run.front()).label->to_string();
}

// Labels leaving the state a participant is in.
std::set<std::string> offers(const System& s, const Configuration& c, const Participant& p) {
  std::set<std::string> out;
  const auto& m = s.machines.at(p).fsa;
  for (auto t : m.outgoing(c.at(p))) out.insert(m.transition(t).label->to_string());
  return out;
}

Outcome c1() {
  Expect e;
  auto a = fixtures::olw();
  e(well_formed(a).pass, "fixture well-formed");
  e(run("check " + fixtures::protocol_path("OnlineWallet.scr")) == 0, "chorc check OnlineWallet.scr exits 0");
  auto v = project_participant(a, "V");
  e(v.fsa.size() == 4, "Vendor has 4 states");
  std::set<std::vector<Action>> expected{
      {},
      {{ActionKind::Receive, "W", "V", "loginOK"}},
      {{ActionKind::Receive, "W", "V", "loginOK"}, {ActionKind::Send, "V", "C", "request"}},
      {{ActionKind::Receive, "W", "V", "loginOK"}, {ActionKind::Send, "V", "C", "request"},
       {ActionKind::Receive, "C", "V", "pay"}},
      {{ActionKind::Receive, "W", "V", "loginOK"}, {ActionKind::Send, "V", "C", "request"},
       {ActionKind::Receive, "C", "V", "reject"}}};
  e(traces_up_to(v.fsa, 6) == expected, "Vendor action sequence WV?loginOK VC!request CV?pay|CV?reject");
  auto sys = project(a);
  auto prod = sync_semantics(sys);
  auto pr = compare_with_product(a, prod, 12);
  e(pr.bisimilar, "product strongly bisimilar");
  e(pr.bounded_trace_equal, "trace-equal up to k=12");
  e(deadlocks(sys, prod).empty(), "no deadlocks");
  for (const auto& [p, _] : sys.machines) e(locks(sys, prod, p).empty(), "no locks for " + p.name);
  e.note("Vendor 4 states, " + std::to_string(pr.configurations) + " configurations, no deadlocks or locks");
  return e.o;
}

Outcome c2() {
  Expect e;
  auto a = fixtures::diamond_counterexample();
  auto wf = well_formed(a);
  e(!wf.pass && has(wf, "b-guard"), "well-sequencedness b-guard failure");
  e(run("check " + fixtures::protocol_path("diamond.json")) == 1, "chorc check diamond.json exits 1");
  auto pr = validate_projection(a, 2);
  e(!pr.bounded_trace_equal, "traces differ at k=2");
  e(pr.witness && !pr.witness->empty() && pr.witness->front() == Interaction("C", "B", "r") && pr.witness_in_product,
    "witness starts C->B:r and is only in the product");
  if (pr.witness) {
    std::string t;
    for (const auto& i : *pr.witness) t += (t.empty() ? "" : " . ") + i.to_string();
    e.note("product-only trace " + t);
  }
  return e.o;
}

Outcome c3() {
  Expect e;
  auto a = fixtures::ex38();
  auto wb = well_branched(a);
  bool span = false;
  for (const auto& w : wb.witnesses)
    if (w.participant == Participant("C") && w.runs.size() == 2) {
      std::set<std::string> firsts{first_label(a, w.runs[0]), first_label(a, w.runs[1])};
      if (firsts == std::set<std::string>{"A->B:l", "A->B:r"}) span = true;
    }
  e(!wb.pass && span, "participant C on the A->B:l / A->B:r span");
  auto s = fixtures::selective_counterexample();
  auto sb = well_branched(s);
  bool bd = false;
  for (const auto& w : sb.witnesses)
    if (w.clause == "2" && w.participant == Participant("B") && w.partner == Participant("D")) bd = true;
  e(!sb.pass && bd, "selective participation fails clause (2) at B/D");
  auto prod = sync_semantics(project(a));
  std::vector<Interaction> rogue{{"A", "B", "l"}, {"B", "C", "n"}, {"C", "D", "r"}};
  e(traces_up_to(prod.automaton.fsa, 3).count(rogue) == 1, "rogue trace in the product");
  e(traces_up_to(a.fsa, 3).count(rogue) == 0, "rogue trace not in the source");
  e.note("C not aware of l/r span; B/D clause 2; rogue A->B:l . B->C:n . C->D:r in product");
  return e.o;
}

Outcome c4() {
  Expect e;
  auto a = fixtures::ex311(false);
  auto sys = project(a);
  auto dl = deadlocks(sys);
  // C offers r to A while A only accepts l; the mirror with l and r swapped is the other one.
  auto blocked = [&](const Configuration& c, const std::string& sent, const std::string& wanted) {
    return offers(sys, c, "C").count("CA!" + sent) && offers(sys, c, "A") == std::set<std::string>{"CA?" + wanted};
  };
  bool described = false;
  bool others_mirror = true;
  for (const auto& c : dl) {
    if (blocked(c, "r", "l"))
      described = true;
    else if (!blocked(c, "l", "r"))
      others_mirror = false;
  }
  e(described, "deadlock where C offers r to A and A waits for l");
  e(others_mirror, "every other deadlock is the l/r mirror");
  auto d = fixtures::ex311(true);
  auto dsys = project(d);
  auto dprod = sync_semantics(dsys);
  e(deadlocks(dsys, dprod).empty(), "no deadlocks with the self-loops");
  auto la = locks(dsys, dprod, "A");
  e(!la.empty(), "locks for A with the self-loops");
  e.note(std::to_string(dl.size()) + " deadlocks (C!r vs A?l and its mirror); with loops 0 deadlocks, " +
         std::to_string(la.size()) + " locks for A");
  return e.o;
}

Outcome c5() {
  Expect e;
  BuiltinSolver s;
  auto a = translate_asserted(load("OnlineWalletAsserted.scr").body);
  e(history_sensitive(a, s).pass, "history-sensitive");
  e(temporally_satisfiable(a, 1, s).pass, "temporally satisfiable at K=1");
  e(consistent(a, 1, s).pass, "consistent");
  e.note("asserted OLW history-sensitive, temporally satisfiable (K=1), consistent");
  auto t = translate_asserted(load("OnlineWalletAssertedTry.scr").body);
  auto ts = temporally_satisfiable(t, 1, s);
  bool at_pin = false;
  for (const auto& w : ts.witnesses)
    if (w.state) {
      // the state reached by the pin message
      for (auto i : t.fsa.incoming(*w.state)) {
        const auto& l = t.fsa.transition(i).label;
        if (l && !l->is_iteration() && l->inter().message == "pin") at_pin = true;
      }
    }
  e(!ts.pass && at_pin, "try > 3 edit fails temporal satisfiability after pin");
  return e.o;
}

Outcome c6() {
  Expect e;
  auto r = is_asserted_ca(fixtures::confusion());
  bool found = false;
  for (const auto& w : r.witnesses)
    if (w.clause == "sort" && w.variable == std::optional<std::string>("x") &&
        w.message.find("bool") != std::string::npos && w.message.find("int") != std::string::npos)
      found = true;
  e(!r.pass && found, "condition (1) names x with sorts bool and int");
  e.note("x: bool vs int");
  return e.o;
}

Outcome c7() {
  Expect e;
  BuiltinSolver s;
  std::map<std::string, Sort> env{{"x", Sort::Int}};
  auto A = parse_predicate("x > 0", env);
  auto B = parse_predicate("x < 5", env);
  Fsa<LocalLabel> m;
  auto q0 = m.add_state("q0");
  auto q1 = m.add_state("q1");
  auto q2 = m.add_state("q2");
  auto q3 = m.add_state("q3");
  auto q4 = m.add_state("q4");
  m.set_initial(q0);
  Action l{ActionKind::Receive, "A", "B", "l"};
  Action a1{ActionKind::Send, "B", "C", "a"};
  Action b1{ActionKind::Send, "B", "C", "b"};
  m.add_transition(q0, LocalLabel::action(l, {{"x", Sort::Int}}, A), q1);
  m.add_transition(q0, LocalLabel::action(l, {{"x", Sort::Int}}, B), q2);
  m.add_transition(q1, LocalLabel::action(a1), q3);
  m.add_transition(q2, LocalLabel::action(b1), q4);
  auto d = asserted_determinize(m, s);
  auto out = d.outgoing(d.initial());
  e(out.size() == 3, "three transitions from the initial state");
  std::vector<Pred> expected{conj(A, neg(B)), conj(A, B), conj(neg(A), B)};
  std::vector<std::set<std::string>> successors{{"BC!a"}, {"BC!a", "BC!b"}, {"BC!b"}};
  std::set<std::size_t> matched;
  for (auto t : out) {
    const auto& tr = d.transition(t);
    std::set<std::string> next;
    for (auto u : d.outgoing(tr.target)) next.insert(d.transition(u).label->act().to_string());
    for (std::size_t i = 0; i < 3; ++i)
      if (s.equivalent(tr.label->assertion(), expected[i]) == Tri::Yes && next == successors[i]) matched.insert(i);
  }
  e(matched.size() == 3, "guards A&!B, A&B, !A&B with the expected successors");
  e.note("guards A&!B, A&B, !A&B; merged state offers BC!a and BC!b");
  return e.o;
}

Outcome c8() {
  Expect e;
  auto st = suites::translation(11);
  e(st.pass_free == 200 && st.pass_free_equal == 200, "200 pass-free types equal at k=8");
  e(st.interleaved == 50 && st.interleaved_equal == 50, "50 interleaved types equal at k=6");
  e(st.failures.empty(), st.failures.empty() ? "" : st.failures.front());
  bool capped = false;
  try {
    translate_with_pass(load("Infinite.scr").body, 100);
  } catch (const StateCapExceeded& ex) {
    capped = ex.cap == 100;
  }
  e(capped, "G_inf hits the cap at 100");
  e.note(std::to_string(st.pass_free_equal) + "/200 pass-free, " + std::to_string(st.interleaved_equal) +
         "/50 interleaved (" + std::to_string(st.generated) + " generated), G_inf capped");
  return e.o;
}

Outcome c9() {
  Expect e;
  auto st = suites::projection(5);
  e(st.well_formed == 100 && st.faithful == 100, "100 well-formed automata are faithful");
  e(st.failures.empty(), st.failures.empty() ? "" : st.failures.front());
  char rate[64];
  std::snprintf(rate, sizeof rate, "%.1f%%", 100.0 * st.well_formed / std::max<std::size_t>(st.generated, 1));
  e.note(std::to_string(st.faithful) + "/100 faithful; well-formed rate " + std::to_string(st.well_formed) + "/" +
         std::to_string(st.generated) + " = " + rate);
  return e.o;
}

Outcome c10() {
  Expect e;
  auto base = fs::temp_directory_path() / ("chorc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  std::vector<std::string> corpus;
  for (const auto& f : fs::directory_iterator(fixtures::protocol_path("")))
    if (f.path().extension() == ".scr" || f.path().extension() == ".json") corpus.push_back(f.path().string());
  std::sort(corpus.begin(), corpus.end());
  std::size_t machines = 0;
  BuiltinSolver s;
  for (const auto& file : corpus) {
    for (const char* round : {"1", "2"})
      e(run("project " + file + " --force --out " + (base / round).string()) == 0, "project " + file);
  }
  for (const auto& f : fs::directory_iterator(base / "1")) {
    auto other = base / "2" / f.path().filename();
    e(fs::exists(other) && read_file(f.path()) == read_file(other), "byte-identical " + f.path().filename().string());
  }
  for (const auto& file : corpus) {
    fs::path p(file);
    CAutomaton a;
    std::optional<AssertedCA> asserted;
    std::string name;
    if (p.extension() == ".json") {
      auto j = Json::parse(read_file(p));
      a = contract(load_c_automaton(j));
      name = j.at("protocol");
    } else {
      auto d = parse_protocol(read_file(p));
      a = plain(d);
      name = d.name;
      if (d.refinements) {
        asserted = translate_asserted(d.body);
        asserted->participants = a.participants;
      }
    }
    for (const auto& r : a.participants) {
      auto j = Json::parse(read_file(base / "1" / (name + "_" + r.name + ".json")));
      if (asserted)
        e(isomorphic(load_asserted_cfsm(j).fsa, project_asserted(*asserted, r, s).fsa), "round trip " + name + " " + r.name);
      else
        e(isomorphic(load_cfsm(j).fsa, project_participant(a, r).fsa), "round trip " + name + " " + r.name);
      ++machines;
    }
  }
  fs::remove_all(base);
  e.note(std::to_string(corpus.size()) + " corpus files, " + std::to_string(machines) +
         " machines byte-identical across runs and isomorphic after loading");
  return e.o;
}

Outcome c11() {
  Expect e;
  BuiltinSolver s;
  auto a = translate_asserted(load("OnlineWalletAsserted.scr").body);
  auto sys = project_asserted_all(a, s);
  auto prod = asserted_sync_semantics(sys, s);
  e(weak_bisimilar(strip_with_epsilon(a), prod.interactions()).bisimilar, "weakly bisimilar");
  e.note(std::to_string(prod.automaton.size()) + " asserted configurations, weakly bisimilar");
  return e.o;
}

struct Criterion {
  int id;
  std::string name;
  double limit;
  std::function<Outcome()> fn;
};

}  // namespace

int main() {
  std::vector<Criterion> cs{
      {1, "online wallet end to end", 1, c1},
      {2, "well-sequencedness counterexample", 1, c2},
      {3, "well-branchedness counterexamples", 1, c3},
      {4, "deadlocks and locks", 1, c4},
      {5, "assertions on the online wallet", 5, c5},
      {6, "sort confusion", 1, c6},
      {7, "asserted determinization", 1, c7},
      {8, "translation property suite", 30, c8},
      {9, "projection property suite", 60, c9},
      {10, "determinism and round trip", 5, c10},
      {11, "asserted weak bisimilarity", 10, c11},
  };
  int failed = 0;
  for (const auto& c : cs) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs > c.limit) o = {false, "took longer than " + std::to_string(static_cast<int>(c.limit)) + " s"};
    if (!o.ok) ++failed;
    std::printf("%s %2d %-36s %8.3f s  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria pass\n", static_cast<int>(cs.size()) - failed, cs.size());
  return failed ? 1 : 0;
}
