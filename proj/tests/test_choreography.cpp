#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "chorc/choreography/c_automaton.hpp"
#include "chorc/choreography/projection.hpp"
#include "fixtures.hpp"

using namespace chorc;

namespace {

Run run_of(const CAutomaton& a, const std::vector<std::string>& states) {
  Run r{a.fsa.state(states.front()), {}};
  for (std::size_t i = 1; i < states.size(); ++i) {
    StateIndex from = a.fsa.state(states[i - 1]), to = a.fsa.state(states[i]);
    bool found = false;
    for (auto t : a.fsa.outgoing(from))
      if (a.fsa.transition(t).target == to) {
        r.steps.push_back(t);
        found = true;
        break;
      }
    REQUIRE(found);
  }
  return r;
}

std::string show(const CAutomaton& a, const Run& r) { return run_to_string(a.fsa, r); }

// Naive pre-candidate test: every pair of cycle segments is compared up to
// rotation by brute force.
bool naive_pre_candidate(const Fsa<Interaction>& f, const Run& r) {
  auto st = run_states(f, r);
  std::vector<std::vector<TransitionIndex>> cycles;
  for (std::size_t i = 0; i < st.size(); ++i)
    for (std::size_t j = i + 1; j < st.size(); ++j)
      if (st[i] == st[j]) cycles.emplace_back(r.steps.begin() + i, r.steps.begin() + j);
  auto rot_eq = [](const std::vector<TransitionIndex>& x, const std::vector<TransitionIndex>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      bool eq = true;
      for (std::size_t m = 0; m < x.size(); ++m)
        if (x[(m + k) % x.size()] != y[m]) eq = false;
      if (eq) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < cycles.size(); ++i)
    for (std::size_t j = i + 1; j < cycles.size(); ++j)
      if (rot_eq(cycles[i], cycles[j])) return false;
  return true;
}

std::set<Run> naive_candidates(const Fsa<Interaction>& f, StateIndex q) {
  std::set<Run> pre;
  std::vector<Run> frontier{Run{q, {}}};
  while (!frontier.empty()) {
    std::vector<Run> next;
    for (auto& r : frontier) {
      if (!naive_pre_candidate(f, r)) continue;
      pre.insert(r);
      for (auto t : f.outgoing(run_end(f, r))) {
        Run e = r;
        e.steps.push_back(t);
        next.push_back(e);
      }
    }
    frontier = next;
  }
  std::set<Run> out;
  for (const auto& r : pre) {
    bool maximal = true;
    for (auto t : f.outgoing(run_end(f, r))) {
      Run e = r;
      e.steps.push_back(t);
      if (pre.count(e)) maximal = false;
    }
    if (maximal) out.insert(r);
  }
  return out;
}

}  // namespace

TEST_CASE("participants and independence") {
  Interaction login{"C", "W", "login"};
  CHECK(participants_of(login) == ParticipantSet{"C", "W"});
  CHECK(participants_of(fixtures::olw()) == ParticipantSet{"C", "V", "W"});
  CHECK(participants_of(fixtures::olw().fsa, Run{0, {}}).empty());
  CHECK(independent({"A", "B", "m"}, {"C", "D", "n"}));
  CHECK_FALSE(independent({"A", "B", "m"}, {"B", "C", "n"}));
  CHECK_FALSE(independent(login, login));
  CHECK(independent({"C", "D", "n"}, {"A", "B", "m"}));
  CHECK_THROWS(Interaction("A", "A", "m"));
}

TEST_CASE("concurrent") {
  auto d = fixtures::diamond_counterexample();
  auto r = run_of(d, {"q0", "q1", "q3"});
  CHECK(concurrent(d, r.steps[0], r.steps[1]));
  auto o = fixtures::olw();
  auto r2 = run_of(o, {"q0", "q1", "q2"});
  CHECK_FALSE(concurrent(o, r2.steps[0], r2.steps[1]));
  CHECK_THROWS_AS(concurrent(o, r2.steps[1], r2.steps[0]), AutomatonError);
  // Brute-force quadruple search on random automata.
  std::mt19937 rng(17);
  for (int i = 0; i < 40; ++i) {
    auto a = fixtures::random_c_automaton(rng, 6);
    const auto& f = a.fsa;
    for (TransitionIndex t1 = 0; t1 < f.transitions().size(); ++t1)
      for (auto t2 : f.outgoing(f.transition(t1).target)) {
        bool expect = false;
        for (const auto& b : f.transitions())
          for (const auto& c : f.transitions())
            if (b.source == f.transition(t1).source && b.label == f.transition(t2).label && c.source == b.target &&
                c.label == f.transition(t1).label && c.target == f.transition(t2).target)
              expect = true;
        CHECK(concurrent(a, t1, t2) == expect);
      }
  }
}

TEST_CASE("well_sequenced") {
  CHECK(well_sequenced(fixtures::olw()).pass);
  auto d = fixtures::diamond_counterexample();
  auto rep = well_sequenced(d);
  CHECK_FALSE(rep.pass);
  bool found = false;
  auto r = run_of(d, {"q0", "q1", "q3"});
  for (const auto& w : rep.witnesses) {
    CHECK(w.clause == "b-guard");
    REQUIRE(w.transitions.size() == 3);
    CHECK(d.fsa.transition(w.transitions[2]).label->to_string() == "C->B:r");
    if (w.transitions[0] == r.steps[0] && w.transitions[1] == r.steps[1]) {
      found = true;
      CHECK(d.fsa.name(*w.state) == "q2");
    }
  }
  CHECK(found);
  CHECK(rep.witnesses.size() == 2);
  CHECK(well_sequenced(make_c_automaton({{"q0", "A", "B", "m", "q1"}})).pass);
  // Without the C->B:r exits the diamond is fine.
  auto clean = make_c_automaton({{"q0", "A", "B", "m", "q1"},
                                 {"q0", "C", "D", "n", "q2"},
                                 {"q1", "C", "D", "n", "q3"},
                                 {"q2", "A", "B", "m", "q3"}});
  CHECK(well_sequenced(clean).pass);
  // Independent pair with no diamond.
  auto nodiamond = make_c_automaton({{"q0", "A", "B", "m", "q1"}, {"q1", "C", "D", "n", "q2"}});
  auto r2 = well_sequenced(nodiamond);
  CHECK_FALSE(r2.pass);
  CHECK(r2.witnesses.at(0).clause == "b-diamond");
}

TEST_CASE("candidate branches of the online wallet") {
  auto a = fixtures::olw();
  auto c = candidate_branches(a.fsa, a.fsa.state("q2"));
  std::set<std::string> got;
  for (const auto& r : c) got.insert(show(a, r));
  CHECK(got == std::set<std::string>{
                   "q2·q3",
                   "q2·q4·q5·q6·q7·q3",
                   "q2·q4·q5·q6·q8·q3",
                   "q2·q0·q1·q2·q3",
                   "q2·q0·q1·q2·q4·q5·q6·q7·q3",
                   "q2·q0·q1·q2·q4·q5·q6·q8·q3",
               });
  auto sink = candidate_branches(a.fsa, a.fsa.state("q3"));
  REQUIRE(sink.size() == 1);
  CHECK(sink.front().empty());
  CHECK_FALSE(is_pre_candidate(a.fsa, run_of(a, {"q2", "q0", "q1", "q2", "q0"})));
  CHECK(is_pre_candidate(a.fsa, run_of(a, {"q2", "q0", "q1", "q2"})));
  CHECK_THROWS_AS(candidate_branches(a.fsa, a.fsa.state("q2"), 2), CapExceeded);
}

TEST_CASE("candidate branches against the brute-force oracle") {
  std::mt19937 rng(23);
  for (int i = 0; i < 60; ++i) {
    auto a = fixtures::random_c_automaton(rng, 6);
    for (StateIndex q = 0; q < a.fsa.size(); ++q) {
      auto c = candidate_branches(a.fsa, q);
      CHECK(std::set<Run>(c.begin(), c.end()) == naive_candidates(a.fsa, q));
    }
  }
}

TEST_CASE("q_spans") {
  auto a = fixtures::olw();
  auto s6 = q_spans(a.fsa, a.fsa.state("q6"));
  REQUIRE(s6.size() == 1);
  CHECK(s6[0].kind == SpanKind::Cofinal);
  std::set<std::string> pair{show(a, s6[0].first), show(a, s6[0].second)};
  CHECK(pair == std::set<std::string>{"q6·q7·q3", "q6·q8·q3"});

  auto s2 = q_spans(a.fsa, a.fsa.state("q2"));
  std::set<std::pair<std::set<std::string>, int>> got;
  for (const auto& s : s2) got.insert({{show(a, s.first), show(a, s.second)}, static_cast<int>(s.kind)});
  // Branches that come back to q2 before ending do not form spans.
  const std::string C1 = "q2·q3", C2 = "q2·q4·q5·q6·q7·q3", C3 = "q2·q4·q5·q6·q8·q3", L = "q2·q0·q1·q2";
  std::set<std::pair<std::set<std::string>, int>> expect{
      {{C1, C2}, 1}, {{C1, C3}, 1}, {{C1, L}, 3}, {{C2, L}, 3}, {{C3, L}, 3},
  };
  CHECK(got == expect);
  CHECK(q_spans(a.fsa, a.fsa.state("q3")).empty());
  CHECK(q_spans(a.fsa, a.fsa.state("q0")).empty());
}

TEST_CASE("fully_aware") {
  auto a = fixtures::olw();
  auto p1 = run_of(a, {"q2", "q4", "q5", "q6", "q7", "q3"});
  auto p2 = run_of(a, {"q2", "q3"});
  CHECK(fully_aware(a, "W", p1, p2));
  CHECK(fully_aware(a, "C", p1, p2));
  CHECK_FALSE(fully_aware(a, "V", p1, p2));
  auto p3 = run_of(a, {"q6", "q8", "q3"});
  auto p4 = run_of(a, {"q6", "q7", "q3"});
  CHECK(fully_aware(a, "V", p3, p4));
  CHECK(fully_aware(a, "C", p3, p4));
  auto e = fixtures::ex38();
  auto l = run_of(e, {"q0", "q1", "q2", "q3"});
  auto r = run_of(e, {"q0", "q4", "q5", "q6"});
  CHECK(fully_aware(e, "A", l, r));
  CHECK(fully_aware(e, "B", l, r));
  CHECK_FALSE(fully_aware(e, "C", l, r));
  CHECK_FALSE(fully_aware(e, "D", l, r));
  // Monotone under extension: awareness on prefixes survives.
  auto l2 = run_of(e, {"q0", "q1", "q2"});
  auto r2 = run_of(e, {"q0", "q4", "q5"});
  CHECK(fully_aware(e, "B", l2, r2));
}

TEST_CASE("transition_partition") {
  auto a = fixtures::olw();
  auto p = transition_partition(a, a.fsa.state("q2"));
  CHECK(p.ok);
  REQUIRE(p.classes.size() == 1);
  CHECK(p.classes[0].size() == 3);
  auto d = fixtures::diamond_counterexample();
  auto pd = transition_partition(d, d.fsa.state("q0"));
  CHECK(pd.ok);
  REQUIRE(pd.classes.size() == 2);
  CHECK(d.fsa.transition(pd.classes[0][0]).label->to_string() == "A->B:m");
  CHECK(d.fsa.transition(pd.classes[1][0]).label->to_string() == "C->D:n");
  auto pe = transition_partition(a, a.fsa.state("q3"));
  CHECK(pe.classes.empty());
  CHECK(pe.ok);
  // Disjoint participants without a diamond: one class, no common participant.
  auto nd = make_c_automaton({{"q0", "A", "B", "m", "q1"}, {"q0", "C", "D", "n", "q2"}});
  auto pn = transition_partition(nd, 0);
  CHECK_FALSE(pn.ok);
  CHECK(pn.classes.size() == 1);
}

TEST_CASE("well_branched and well_formed") {
  CHECK(well_branched(fixtures::olw()).pass);
  CHECK(well_formed(fixtures::olw()).pass);
  CHECK(well_formed(fixtures::fig2()).pass);

  auto e = fixtures::ex38();
  auto rep = well_branched(e);
  CHECK_FALSE(rep.pass);
  bool c_found = false;
  for (const auto& w : rep.witnesses)
    if (w.participant == Participant("C") && w.clause == "not-aware") {
      c_found = true;
      REQUIRE(w.runs.size() == 2);
      std::set<std::string> firsts{e.fsa.transition(w.runs[0][0]).label->to_string(),
                                   e.fsa.transition(w.runs[1][0]).label->to_string()};
      CHECK(firsts == std::set<std::string>{"A->B:l", "A->B:r"});
    }
  CHECK(c_found);
  CHECK_FALSE(well_formed(e).pass);

  auto s = fixtures::selective_counterexample();
  auto rs = well_branched(s);
  CHECK_FALSE(rs.pass);
  bool bd = false;
  for (const auto& w : rs.witnesses)
    if (w.participant == Participant("B") && w.clause == "2" && w.partner == Participant("D")) bd = true;
  CHECK(bd);

  auto nd = make_c_automaton({{"q0", "A", "B", "m", "q1"}, {"q0", "A", "B", "m", "q2"}});
  auto rn = well_branched(nd);
  CHECK_FALSE(rn.pass);
  CHECK(rn.witnesses.at(0).clause == "duplicate-label");
  CHECK(well_branched(make_c_automaton({{"q0", "A", "B", "m", "q1"}})).pass);
}

TEST_CASE("projection of the online wallet") {
  auto a = fixtures::olw();
  auto v = project_participant(a, "V");
  REQUIRE(v.fsa.size() == 4);
  CHECK(v.is_local());
  std::vector<std::vector<StateIndex>> prov;
  for (StateIndex s = 0; s < 4; ++s) prov.push_back(v.fsa.origin(s));
  auto ids = [&](std::vector<std::string> ns) {
    std::vector<StateIndex> r;
    for (auto& n : ns) r.push_back(a.fsa.state(n));
    std::sort(r.begin(), r.end());
    return r;
  };
  CHECK(prov[0] == ids({"q0", "q1", "q2", "q3", "q4"}));
  CHECK(prov[1] == ids({"q5"}));
  CHECK(prov[2] == ids({"q6", "q7", "q8"}));
  CHECK(prov[3] == ids({"q3"}));
  std::vector<std::string> labels;
  for (const auto& t : v.fsa.transitions())
    labels.push_back(v.fsa.name(t.source) + " " + t.label->to_string() + " " + v.fsa.name(t.target));
  CHECK(labels == std::vector<std::string>{"Q0 WV?loginOK Q1", "Q1 VC!request Q2", "Q2 CV?pay Q3", "Q2 CV?reject Q3"});
  CHECK(final_states(a, "V", v) == std::set<StateIndex>{0, 3});
  CHECK(v.final == std::vector<bool>{true, false, false, true});

  auto sys = project(a);
  CHECK(sys.machines.size() == 3);
  for (const auto& [p, m] : sys.machines) {
    CHECK(m.is_local());
    CHECK(is_deterministic(m.fsa));
    auto inter = intermediate_cfsm(a, p);
    for (std::size_t k = 0; k <= 10; ++k) CHECK(traces_up_to(inter, k) == traces_up_to(m.fsa, k));
  }
  auto c = sys.machines.at("C");
  CHECK(c.fsa.size() == 8);

  auto lone = make_c_automaton({{"q0", "A", "B", "m", "q1"}});
  lone.participants.insert("C");
  auto pc = project_participant(lone, "C");
  CHECK(pc.fsa.size() == 1);
  CHECK(pc.fsa.transitions().empty());
  CHECK(pc.final == std::vector<bool>{true});
  CHECK_THROWS_AS(project_participant(lone, "Z"), AutomatonError);
  CHECK_THROWS_AS(project(CAutomaton()), AutomatonError);
  Cfsm bare;
  bare.owner = "A";
  bare.fsa.add_state("x");
  CHECK_THROWS_AS(final_states(lone, "A", bare), AutomatonError);
}

TEST_CASE("final states: sinks are final, states whose branches all involve p are not") {
  auto a = make_c_automaton({{"q0", "A", "B", "m", "q1"}, {"q1", "B", "A", "n", "q2"}});
  auto pa = project_participant(a, "A");
  CHECK(pa.final == std::vector<bool>{false, false, true});
}
