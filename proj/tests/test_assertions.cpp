#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chorc/assertions/asserted_projection.hpp"
#include "chorc/core/bisimulation.hpp"
#include "fixtures.hpp"

using namespace chorc;

namespace {

const std::map<std::string, Sort> env{{"x", Sort::Int}, {"y", Sort::Int}, {"try", Sort::Int}, {"msg", Sort::String}};
Pred P(const std::string& s) { return parse_predicate(s, env); }

TransitionIndex find_transition(const AssertedCA& a, const std::string& from, const std::string& what) {
  for (TransitionIndex t = 0; t < a.fsa.transitions().size(); ++t) {
    const auto& tr = a.fsa.transition(t);
    if (a.fsa.name(tr.source) == from && tr.label->key().find(what) != std::string::npos) return t;
  }
  throw std::runtime_error("no transition " + what + " from " + from);
}

Run path(const AssertedCA& a, const std::vector<std::pair<std::string, std::string>>& steps) {
  Run r{a.fsa.initial(), {}};
  for (const auto& [from, what] : steps) r.steps.push_back(find_transition(a, from, what));
  return r;
}

bool has_witness(const WfReport& r, const std::string& check, const std::string& clause) {
  for (const auto& w : r.witnesses)
    if (w.check == check && w.clause == clause) return true;
  return false;
}

}  // namespace

TEST_CASE("free variables and substitution") {
  auto p = P("y = x % 2");
  CHECK(fv(p) == std::set<std::string>{"x", "y"});
  CHECK(is_true(substitute(top(), Subst{{"x", int_lit(1)}})));
  auto q = substitute(P("exists x:int. x = y"), Subst{{"y", int_lit(3)}});
  CHECK(to_string(q) == "exists x:int. x = 3");
  // capture is avoided by renaming the binder
  auto c = substitute(P("exists x:int. x = y"), Subst{{"y", var("x", Sort::Int)}});
  CHECK(fv(c) == std::set<std::string>{"x"});
  CHECK(bv(c).count("x") == 0);
  CHECK_THROWS_AS(substitute(P("x = y"), Subst{{"x", str_lit("a")}}), SortError);
}

TEST_CASE("prenex composition") {
  BuiltinSolver s;
  auto b = P("x > 2 && y < x");
  CHECK(s.equivalent(prenex_compose(top(), b), b) == Tri::Yes);
  CHECK(s.equivalent(prenex_compose(b, top()), b) == Tri::Yes);
  CHECK(to_string(prenex_compose(P("x > 0"), P("y > x"))) == "x > 0 && y > x");
  // the literal reading: y > x ends up under the binder of x
  CHECK(to_string(prenex_compose(P("exists x:int. x > 0"), P("y > x"))) == "exists x:int. x > 0 && y > x");
}

TEST_CASE("path assertions") {
  auto a = fixtures::asserted_olw();
  auto login = path(a, {{"q0'", "<r"}, {"q0", "login"}, {"q1", "pin"}});
  CHECK(to_string(path_assertion(a, login).phi) == "0 <= 0 && 0 <= 3");
  CHECK(is_true(path_assertion(a, Run{a.fsa.initial(), {}}).phi));
  auto twice = path(a, {{"q0'", "<r"},
                        {"q0", "login"},
                        {"q1", "pin"},
                        {"q2", "retry"},
                        {"q2'", "<r"},
                        {"q0", "login"},
                        {"q1", "pin"}});
  auto pa = path_assertion(a, twice);
  CHECK(to_string(pa.phi) ==
        "0 <= 0 && 0 <= 3 && 0 <= 0 && 0 < 3 && msg = \"fail\" && 0 <= 0 + 1 && 0 + 1 <= 3");
  CHECK(to_string(pa.iota.at("try")) == "0 + 1");
}

TEST_CASE("respecting the recursion context") {
  CHECK(respects_context(fixtures::asserted_olw()).pass);
  auto loop = fixtures::AssertedBuilder{};
  loop.inter("a", "A", "B", "m", {}, "", "b");
  loop.inter("b", "B", "A", "n", {}, "", "a");
  auto r = respects_context(loop.a);
  CHECK_FALSE(r.pass);
  CHECK(has_witness(r, "respects-context", "cycle"));

  fixtures::AssertedBuilder self;
  self.inter("a", "A", "B", "m", {}, "", "b");
  self.rec("r", {{"n", Sort::Int}}, "", "b");
  self.iter("b", "r", {{"n", "0"}}, "b");
  auto s = respects_context(self.a);
  CHECK_FALSE(s.pass);
  CHECK(has_witness(s, "respects-context", "a"));

  fixtures::AssertedBuilder unguarded;
  unguarded.inter("a", "A", "B", "m", {}, "", "c");
  unguarded.inter("a", "A", "B", "k", {}, "", "b");
  unguarded.inter("c", "A", "B", "m", {}, "", "b");
  unguarded.rec("r", {{"n", Sort::Int}}, "", "a");
  unguarded.iter("b", "r", {{"n", "0"}}, "a");
  auto u = respects_context(unguarded.a);
  CHECK_FALSE(u.pass);
  CHECK(has_witness(u, "respects-context", "b"));
}

TEST_CASE("fixing variables") {
  auto c = fixtures::confusion();
  auto t1 = find_transition(c, "q0", "p->r");
  auto t2 = find_transition(c, "q0", "q->r");
  CHECK(fixes_variable(c, t1, "x"));
  CHECK(fixes_variable(c, t2, "x"));
  CHECK_FALSE(fixes_variable(c, find_transition(c, "q3", "r->s"), "x"));
  CHECK(fixes_variable(c, find_transition(c, "q3", "r->s"), "y"));

  fixtures::AssertedBuilder b;
  b.inter("a", "A", "B", "m", {{"x", Sort::Int}}, "", "b");
  b.inter("b", "B", "C", "m", {{"x", Sort::Int}}, "", "c");
  CHECK(fixes_variable(b.a, 0, "x"));
  CHECK_FALSE(fixes_variable(b.a, 1, "x"));

  auto a = fixtures::asserted_olw();
  CHECK(fixes_variable(a, find_transition(a, "q0'", "<r"), "try"));
  CHECK_FALSE(fixes_variable(a, find_transition(a, "q2'", "<r"), "try"));
  CHECK(fixes_variable(a, find_transition(a, "q2", "retry"), "msg"));
}

TEST_CASE("asserted c-automata") {
  auto r = is_asserted_ca(fixtures::confusion());
  CHECK_FALSE(r.pass);
  REQUIRE(has_witness(r, "asserted", "sort"));
  for (const auto& w : r.witnesses)
    if (w.clause == "sort") {
      CHECK(w.variable == std::optional<std::string>("x"));
      CHECK(w.message.find("bool") != std::string::npos);
      CHECK(w.message.find("int") != std::string::npos);
    }
  CHECK(is_asserted_ca(fixtures::asserted_olw()).pass);

  fixtures::AssertedBuilder nd;
  nd.inter("a", "A", "B", "m", {}, "", "b");
  nd.inter("a", "A", "B", "m", {}, "", "c");
  auto n = is_asserted_ca(nd.a);
  CHECK_FALSE(n.pass);
  CHECK(has_witness(n, "asserted", "deterministic"));
}

TEST_CASE("knowledge") {
  BuiltinSolver s;
  auto p = fixtures::olw_payloads();
  Knowledge kp(p, s);
  auto req = find_transition(p, "q5", "request");
  CHECK(kp.knows("V", "bill", req));
  CHECK(kp.knows("C", "bill", req));
  CHECK_FALSE(kp.knows("W", "bill", req));
  // bill reaches the payment through the customer
  auto pay = find_transition(p, "q7", "pay");
  CHECK(kp.kn("C", pay) == std::set<std::string>{"bill", "payment"});

  auto a = fixtures::asserted_olw();
  Knowledge k(a, s);
  auto back = find_transition(a, "q2'", "<r");
  auto retry = find_transition(a, "q2", "retry");
  CHECK(k.knows("C", "try", back));
  CHECK(k.knows("W", "try", back));
  CHECK(k.knows("W", "try", retry));
  CHECK(k.knows("W", "msg", retry));
  CHECK_FALSE(k.knows("V", "msg", retry));
}

TEST_CASE("history sensitivity") {
  BuiltinSolver s;
  CHECK(history_sensitive(fixtures::asserted_olw(), s).pass);

  // the wallet cannot guarantee something about w
  fixtures::AssertedBuilder b;
  b.inter("a", "A", "B", "m", {{"w", Sort::Int}}, "", "b");
  b.inter("b", "W", "C", "n", {{"v", Sort::Int}}, "v > w", "c");
  auto r = history_sensitive(b.a, s);
  CHECK_FALSE(r.pass);
  REQUIRE(r.witnesses.size() == 1);
  CHECK(r.witnesses[0].participant == std::optional<Participant>("W"));
  CHECK(r.witnesses[0].variable == std::optional<std::string>("w"));
  CHECK(r.witnesses[0].transitions == std::vector<TransitionIndex>{1});

  // B never sees w and learns nothing about it
  fixtures::AssertedBuilder e;
  e.inter("a", "A", "W", "m", {{"w", Sort::Int}}, "", "b");
  e.inter("b", "A", "B", "m", {{"z", Sort::Int}}, "z > w", "c");
  e.inter("c", "B", "C", "n", {{"v", Sort::Int}}, "v > w", "d");
  CHECK_FALSE(history_sensitive(e.a, s).pass);
  // an equality learnt on the way is enough
  fixtures::AssertedBuilder e2;
  e2.inter("a", "A", "W", "m", {{"w", Sort::Int}}, "", "b");
  e2.inter("b", "A", "B", "m", {{"z", Sort::Int}}, "z = w", "c");
  e2.inter("c", "B", "C", "n", {{"v", Sort::Int}}, "v > w", "d");
  CHECK(history_sensitive(e2.a, s).pass);

  // a loop invariant that does not mention the parameter leaves it unknown
  fixtures::AssertedBuilder l;
  l.state("s");
  l.rec("r", {{"n", Sort::Int}}, "", "a");
  l.iter("s", "r", {{"n", "0"}}, "a");
  l.inter("a", "A", "B", "m", {}, "", "b");
  l.iter("b", "r", {{"n", "n + 1"}}, "a");
  auto lr = history_sensitive(l.a, s);
  CHECK_FALSE(lr.pass);
  CHECK(has_witness(lr, "history-sensitive", "loop"));
  ParticipantSet on_cycle;
  for (const auto& w : lr.witnesses) on_cycle.insert(*w.participant);
  CHECK(on_cycle == ParticipantSet{"A", "B"});
  CHECK(cycle_participants(l.a, l.a.fsa.state("a")) == ParticipantSet{"A", "B"});
}

TEST_CASE("preconditions") {
  BuiltinSolver s;
  auto a = fixtures::asserted_olw();
  auto q2 = a.fsa.state("q2");
  auto pre = preconditions(a, q2, 1, s);
  std::set<std::string> texts;
  for (const auto& p : pre) texts.insert(to_string(p.phi));
  CHECK(texts.count("0 <= 0 && 0 <= 3"));
  // one more round of the loop with try = 1
  CHECK(pre.size() == 2);
  auto init = preconditions(a, a.fsa.initial(), 1, s);
  REQUIRE(init.size() == 1);
  CHECK(is_true(init[0].phi));

  fixtures::AssertedBuilder b;
  b.inter("a", "A", "B", "m", {{"x", Sort::Int}}, "x > 0", "b");
  b.inter("b", "A", "B", "n", {}, "x < 0", "c");
  CHECK(preconditions(b.a, b.a.fsa.state("c"), 1, s).empty());
  CHECK(preconditions(b.a, b.a.fsa.state("b"), 1, s).size() == 1);
}

TEST_CASE("temporal satisfiability") {
  BuiltinSolver s;
  CHECK(temporally_satisfiable(fixtures::asserted_olw(), 1, s).pass);
  CHECK(temporally_satisfiable(fixtures::asserted_olw(), 2, s).pass);
  // loginOk stays enabled on every precondition, so the edit alone is harmless
  CHECK(temporally_satisfiable(fixtures::asserted_olw("try > 3 && msg = \"fail\""), 1, s).pass);
  // without loginOk the gap at try = 3 shows up after the pin, on the fourth round
  auto r = temporally_satisfiable(fixtures::asserted_olw("try > 3 && msg = \"fail\"", false), 3, s);
  CHECK_FALSE(r.pass);
  REQUIRE(!r.witnesses.empty());
  CHECK(r.witnesses[0].state == fixtures::asserted_olw().fsa.state("q2"));
  CHECK(temporally_satisfiable(fixtures::asserted_olw("try >= 3 && msg = \"fail\"", false), 3, s).pass);

  fixtures::AssertedBuilder b;
  b.inter("a", "A", "B", "m", {}, "false", "b");
  auto f = temporally_satisfiable(b.a, 1, s);
  CHECK_FALSE(f.pass);
  CHECK(f.witnesses[0].state == b.a.fsa.initial());
}

TEST_CASE("consistency") {
  BuiltinSolver s;
  auto r = consistent(fixtures::asserted_olw(), 1, s);
  for (const auto& w : r.witnesses) MESSAGE(describe(fixtures::asserted_olw(), w));
  CHECK(r.pass);
  auto c = consistent(fixtures::confusion(), 1, s);
  CHECK_FALSE(c.pass);
  CHECK(has_witness(c, "asserted", "sort"));
}

TEST_CASE("asserted epsilon closure") {
  BuiltinSolver s;
  Fsa<LocalLabel> m;
  auto q0 = m.add_state("q0");
  auto q1 = m.add_state("q1");
  auto q2 = m.add_state("q2");
  m.set_initial(q0);
  Action send{ActionKind::Send, "A", "B", "l"};
  m.add_transition(q0, LocalLabel::action(send), q1);
  auto c = asserted_eps_closure(m, q0, s);
  REQUIRE(c.size() == 1);
  CHECK(c[0].state == q0);
  CHECK(is_true(c[0].assertion));
  m.add_transition(q1, LocalLabel::epsilon(P("x > 0")), q2);
  auto d = asserted_eps_closure(m, q1, s);
  REQUIRE(d.size() == 2);
  CHECK(d[1].state == q2);
  CHECK(to_string(d[1].assertion) == "x > 0");
  // an epsilon cycle that only strengthens is cut by subsumption
  m.add_transition(q2, LocalLabel::epsilon(P("x > 1")), q1);
  auto e = asserted_eps_closure(m, q1, s);
  CHECK(e.size() == 2);
  // one that keeps producing incomparable assertions hits the cap
  Fsa<LocalLabel> g;
  auto a = g.add_state("a");
  g.set_initial(a);
  g.add_transition(a, LocalLabel::epsilon(P("exists y:int. x = y + 1")), a);
  CHECK_NOTHROW(asserted_eps_closure(g, a, s, 4));
}

TEST_CASE("asserted determinization: two guards") {
  BuiltinSolver s;
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
  auto A = P("x > 0");
  auto B = P("x < 5");
  m.add_transition(q0, LocalLabel::action(l, {{"x", Sort::Int}}, A), q1);
  m.add_transition(q0, LocalLabel::action(l, {{"x", Sort::Int}}, B), q2);
  m.add_transition(q1, LocalLabel::action(a1), q3);
  m.add_transition(q2, LocalLabel::action(b1), q4);
  auto d = asserted_determinize(m, s);
  auto out = d.outgoing(d.initial());
  REQUIRE(out.size() == 3);
  std::vector<Pred> expected{conj(A, neg(B)), conj(A, B), conj(neg(A), B)};
  std::vector<int> matched(3, 0);
  for (auto t : out) {
    const auto& tr = d.transition(t);
    for (std::size_t i = 0; i < 3; ++i)
      if (s.equivalent(tr.label->assertion(), expected[i]) == Tri::Yes) {
        ++matched[i];
        std::set<std::string> acts;
        for (auto u : d.outgoing(tr.target)) acts.insert(d.transition(u).label->act().message);
        if (i == 0) CHECK(acts == std::set<std::string>{"a"});
        if (i == 1) CHECK(acts == std::set<std::string>{"a", "b"});
        if (i == 2) CHECK(acts == std::set<std::string>{"b"});
      }
  }
  CHECK(matched == std::vector<int>{1, 1, 1});
  // guards from one state on one label are pairwise exclusive
  for (auto t : out)
    for (auto u : out)
      if (t < u)
        CHECK(s.sat(conj(d.transition(t).label->assertion(), d.transition(u).label->assertion())) == Tri::No);

  // deterministic input comes back unchanged
  Fsa<LocalLabel> det;
  det.add_state("p0");
  det.add_state("p1");
  det.set_initial(0);
  det.add_transition(0, LocalLabel::action(l, {{"x", Sort::Int}}, A), 1);
  auto dd = asserted_determinize(det, s);
  CHECK(isomorphic(dd, det));
}

TEST_CASE("asserted determinization: three guards") {
  BuiltinSolver s;
  Fsa<LocalLabel> m;
  auto q0 = m.add_state("q0");
  m.set_initial(q0);
  Action l{ActionKind::Receive, "A", "B", "l"};
  std::vector<std::string> guards{"x > 0", "x > 5", "x > 10"};
  for (std::size_t i = 0; i < guards.size(); ++i) {
    auto q = m.add_state("t" + std::to_string(i));
    m.add_transition(q0, LocalLabel::action(l, {{"x", Sort::Int}}, P(guards[i])), q);
  }
  auto d = asserted_determinize(m, s);
  // of the seven subsets only the chains {0}, {0,1}, {0,1,2} are satisfiable
  CHECK(d.outgoing(d.initial()).size() == 3);

  // renamed payloads are grouped together
  Fsa<LocalLabel> r;
  r.add_state("r0");
  r.add_state("r1");
  r.add_state("r2");
  r.set_initial(0);
  r.add_transition(0, LocalLabel::action(l, {{"x", Sort::Int}}, P("x > 0")), 1);
  r.add_transition(0, LocalLabel::action(l, {{"y", Sort::Int}}, P("y > 0")), 2);
  auto rd = asserted_determinize(r, s);
  CHECK(rd.outgoing(rd.initial()).size() == 1);
}

TEST_CASE("label equivalence") {
  BuiltinSolver s;
  Action l{ActionKind::Send, "A", "B", "l"};
  auto a = LocalLabel::action(l, {{"x", Sort::Int}}, P("x < 3"));
  auto b = LocalLabel::action(l, {{"y", Sort::Int}}, parse_predicate("y <= 2", {{"y", Sort::Int}}));
  auto c = LocalLabel::action(l, {{"y", Sort::Int}}, parse_predicate("y <= 3", {{"y", Sort::Int}}));
  auto d = LocalLabel::action(l, {{"y", Sort::String}}, top());
  CHECK(label_equivalent(a, b, s));
  CHECK_FALSE(label_equivalent(a, c, s));
  CHECK_FALSE(label_equivalent(a, d, s));
  CHECK(label_equivalent(LocalLabel::epsilon(P("x > 0")), LocalLabel::epsilon(P("x >= 1")), s));
}

TEST_CASE("asserted projection of the wallet loop") {
  BuiltinSolver s;
  auto a = fixtures::asserted_olw();
  auto sys = project_asserted_all(a, s);
  REQUIRE(sys.machines.size() == 2);
  // assertions dropped, the machines accept what the plain projections accept
  auto plain = project(strip(a));
  for (const auto& [p, m] : sys.machines) {
    auto st = minimize(determinize(strip(m)));
    CHECK(traces_up_to(st, 10) == traces_up_to(plain.machines.at(p).fsa, 10));
  }
  const auto& w = sys.machines.at("W");
  bool retry_guard = false;
  for (const auto& t : w.fsa.transitions())
    if (t.label->act().message == "retry") {
      CHECK(t.label->act().kind == ActionKind::Send);
      CHECK(fv(t.label->assertion()).count("try"));
      retry_guard = true;
    }
  CHECK(retry_guard);

  auto prod = asserted_sync_semantics(sys, s);
  CHECK(asserted_deadlocks(sys, prod).empty());
  CHECK(weak_bisimilar(strip_with_epsilon(a), prod.interactions()).bisimilar);
}

TEST_CASE("projection onto an absent participant") {
  BuiltinSolver s;
  auto a = fixtures::asserted_olw();
  auto m = project_asserted(a, "Z", s);
  CHECK(m.fsa.size() == 1);
  CHECK(m.fsa.transitions().empty());
  CHECK(m.is_final(0));
}

TEST_CASE("iteration transitions project to closed invariants") {
  auto a = fixtures::asserted_olw();
  auto m = intermediate_asserted_cfsm(a, "V");
  std::set<std::string> eps;
  for (const auto& t : m.transitions())
    if (t.label->is_epsilon()) eps.insert(to_string(t.label->assertion()));
  CHECK(eps.count("0 <= 0 && 0 <= 3"));
  CHECK(eps.count("0 <= try + 1 && try + 1 <= 3"));
  CHECK(eps.count("exists msg:string. 0 <= try && try < 3 && msg = \"fail\""));
}

TEST_CASE("asserted synchronous steps") {
  BuiltinSolver s;
  auto build = [&](const std::string& guarantee, const std::string& rely) {
    fixtures::AssertedBuilder b;
    b.inter("a", "A", "B", "m", {{"x", Sort::Int}}, guarantee, "b");
    AssertedSystem sys;
    sys.machines["A"] = project_asserted(b.a, "A", s);
    sys.machines["B"] = project_asserted(b.a, "B", s);
    // B's copy relies on the given assertion instead
    auto& fb = sys.machines["B"].fsa;
    Fsa<LocalLabel> nb;
    for (StateIndex q = 0; q < fb.size(); ++q) nb.add_state(fb.name(q), fb.origin(q));
    nb.set_initial(fb.initial());
    for (const auto& t : fb.transitions())
      nb.add_transition(t.source, t.label->with_assertion(b.pred(rely)), t.target);
    fb = nb;
    return sys;
  };
  auto steps = [&](const AssertedSystem& sys) { return asserted_sync_semantics(sys, s).automaton.transitions().size(); };
  CHECK(steps(build("x > 5", "x > 0")) == 1);
  CHECK(steps(build("x > 0", "x > 5")) == 0);
  CHECK(steps(build("false", "true")) == 0);
  auto blocked = build("false", "true");
  CHECK(asserted_deadlocks(blocked, asserted_sync_semantics(blocked, s)).size() == 1);
}
