#include "chorc/assertions/asserted.hpp"

#include <algorithm>
#include <sstream>

namespace chorc {

std::string to_string(const Payload& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + p[i].name + ":" + to_string(p[i].sort);
  return s + ")";
}

void check_payload(const Payload& p) {
  std::set<std::string> seen;
  for (const auto& v : p)
    if (!seen.insert(v.name).second) throw std::invalid_argument("repeated payload variable " + v.name);
}

AssertedLabel AssertedLabel::interaction(Interaction i, Payload payload, Pred assertion) {
  check_payload(payload);
  AssertedLabel l;
  l.kind_ = Kind::Interaction;
  l.inter_ = std::move(i);
  l.payload_ = std::move(payload);
  l.assertion_ = std::move(assertion);
  l.finish();
  return l;
}

AssertedLabel AssertedLabel::iteration(std::string rec, Subst iota, Pred assertion) {
  if (rec.empty()) throw std::invalid_argument("iteration without recursion variable");
  AssertedLabel l;
  l.kind_ = Kind::Iteration;
  l.rec_ = std::move(rec);
  l.iota_ = std::move(iota);
  l.assertion_ = std::move(assertion);
  l.finish();
  return l;
}

std::string AssertedLabel::action_key() const {
  if (kind_ == Kind::Interaction) return inter_.to_string() + to_string(payload_);
  std::string s = "<" + rec_;
  bool first = true;
  for (const auto& [x, e] : iota_) {
    s += (first ? "; " : ", ") + x + ":=" + chorc::to_string(e);
    first = false;
  }
  return s + ">";
}

void AssertedLabel::finish() {
  key_ = action_key();
  if (!is_true(assertion_)) key_ += " [" + chorc::to_string(assertion_) + "]";
}

const RecEntry& AssertedCA::rec(const std::string& r) const {
  auto it = rho.find(r);
  if (it == rho.end()) throw AutomatonError("unknown recursion variable " + r);
  return it->second;
}

ParticipantSet participants_of(const AssertedLabel& l) {
  if (l.is_iteration()) return {};
  return participants_of(l.inter());
}

ParticipantSet participants_of(const AssertedCA& a, const Run& r) {
  ParticipantSet s;
  for (auto t : r.steps) {
    auto p = participants_of(*a.fsa.transition(t).label);
    s.insert(p.begin(), p.end());
  }
  return s;
}

Payload fixed_candidates(const AssertedCA& a, TransitionIndex t) {
  const auto& l = *a.fsa.transition(t).label;
  if (!l.is_iteration()) return l.payload();
  auto it = a.rho.find(l.rec());
  return it == a.rho.end() ? Payload{} : it->second.params;
}

namespace {

std::optional<Sort> sort_in(const AssertedCA& a, TransitionIndex t, const std::string& x) {
  for (const auto& v : fixed_candidates(a, t))
    if (v.name == x) return v.sort;
  try {
    auto m = fv_sorted(a.fsa.transition(t).label->assertion());
    auto it = m.find(x);
    if (it != m.end()) return it->second;
  } catch (const SortError&) {
  }
  return std::nullopt;
}

std::set<std::string> mentioned(const AssertedCA& a, TransitionIndex t) {
  std::set<std::string> s = fv(a.fsa.transition(t).label->assertion());
  for (const auto& v : fixed_candidates(a, t)) s.insert(v.name);
  return s;
}

std::vector<bool> reachable_from(const AssertedCA& a, StateIndex q, bool forward) {
  std::vector<bool> seen(a.fsa.size(), false);
  std::vector<StateIndex> st{q};
  seen[q] = true;
  while (!st.empty()) {
    auto s = st.back();
    st.pop_back();
    for (auto t : forward ? a.fsa.outgoing(s) : a.fsa.incoming(s)) {
      auto n = forward ? a.fsa.transition(t).target : a.fsa.transition(t).source;
      if (!seen[n]) seen[n] = true, st.push_back(n);
    }
  }
  return seen;
}

Witness make_witness(std::string check, std::string clause, std::string message) {
  Witness w;
  w.check = std::move(check);
  w.clause = std::move(clause);
  w.message = std::move(message);
  return w;
}

}  // namespace

Fsa<Interaction> strip_with_epsilon(const AssertedCA& a) {
  Fsa<Interaction> f;
  for (StateIndex s = 0; s < a.fsa.size(); ++s) f.add_state(a.fsa.name(s), a.fsa.origin(s));
  if (!a.fsa.empty()) f.set_initial(a.fsa.initial());
  for (const auto& t : a.fsa.transitions()) {
    std::optional<Interaction> l;
    if (t.label && !t.label->is_iteration()) l = t.label->inter();
    f.add_transition(t.source, l, t.target);
  }
  return f;
}

CAutomaton strip(const AssertedCA& a) {
  auto f = remove_epsilon(strip_with_epsilon(a));
  if (a.participants.empty()) return CAutomaton(std::move(f));
  return CAutomaton(std::move(f), a.participants);
}

PathAssertion path_assertion(const AssertedCA& a, const Run& r) {
  PathAssertion out{top(), {}};
  std::vector<Pred> parts;
  for (auto t : r.steps) {
    const auto& l = *a.fsa.transition(t).label;
    if (l.is_iteration()) out.iota = compose_subst(out.iota, l.iota());
    parts.push_back(substitute(l.assertion(), out.iota));
  }
  out.phi = conj(std::move(parts));
  return out;
}

std::vector<Run> simple_paths_to(const AssertedCA& a, StateIndex q, std::size_t cap) {
  a.fsa.check_state(q);
  std::vector<Run> out;
  std::vector<bool> on(a.fsa.size(), false);
  auto back = reachable_from(a, q, false);
  Run cur{a.fsa.initial(), {}};
  std::size_t visits = 0;
  auto rec = [&](auto&& self, StateIndex s) -> void {
    if (++visits > cap) throw CapExceeded("simple path enumeration to " + a.fsa.name(q) + " exceeded cap");
    if (s == q) {
      out.push_back(cur);
      return;
    }
    on[s] = true;
    for (auto t : a.fsa.outgoing(s)) {
      auto n = a.fsa.transition(t).target;
      if (on[n] || !back[n]) continue;
      cur.steps.push_back(t);
      self(self, n);
      cur.steps.pop_back();
    }
    on[s] = false;
  };
  if (back[a.fsa.initial()]) rec(rec, a.fsa.initial());
  return out;
}

const std::vector<Run>& FixAnalysis::simple_paths(StateIndex q) {
  auto it = paths_.find(q);
  if (it == paths_.end()) it = paths_.emplace(q, simple_paths_to(a_, q)).first;
  return it->second;
}

bool FixAnalysis::fixes(TransitionIndex t, const std::string& x) {
  auto key = std::make_pair(t, x);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second == 1;
  bool in_fv = false;
  for (const auto& v : fixed_candidates(a_, t))
    if (v.name == x) in_fv = true;
  if (!in_fv) {
    memo_[key] = 0;
    return false;
  }
  memo_[key] = -1;
  bool r = true;
  for (const auto& p : simple_paths(a_.fsa.transition(t).source)) {
    for (auto u : p.steps)
      if (fixes(u, x)) {
        r = false;
        break;
      }
    if (!r) break;
  }
  memo_[key] = r ? 1 : 0;
  return r;
}

bool fixes_variable(const AssertedCA& a, TransitionIndex t, const std::string& x) {
  FixAnalysis f(a);
  return f.fixes(t, x);
}

WfReport respects_context(const AssertedCA& a) {
  WfReport rep;
  const auto& f = a.fsa;
  // Cycles of interaction transitions only.
  {
    std::vector<int> color(f.size(), 0);
    std::vector<TransitionIndex> stack;
    bool found = false;
    auto dfs = [&](auto&& self, StateIndex s) -> void {
      color[s] = 1;
      for (auto t : f.outgoing(s)) {
        if (found) return;
        const auto& tr = f.transition(t);
        if (tr.label->is_iteration()) continue;
        stack.push_back(t);
        if (color[tr.target] == 1) {
          std::vector<TransitionIndex> cyc;
          auto it = std::find_if(stack.begin(), stack.end(),
                                 [&](TransitionIndex u) { return f.transition(u).source == tr.target; });
          cyc.assign(it, stack.end());
          auto w = make_witness("respects-context", "cycle", "loop without an iteration transition");
          w.state = tr.target;
          w.transitions = cyc;
          w.runs.push_back(cyc);
          rep.fail(w);
          found = true;
          return;
        }
        if (color[tr.target] == 0) self(self, tr.target);
        stack.pop_back();
      }
      color[s] = 2;
    };
    for (StateIndex s = 0; s < f.size() && !found; ++s)
      if (color[s] == 0) dfs(dfs, s);
  }
  std::map<StateIndex, std::string> anchors;
  std::map<std::string, std::string> param_owner;
  for (const auto& [r, e] : a.rho) {
    auto [it, fresh] = anchors.emplace(e.anchor, r);
    if (!fresh) {
      auto w = make_witness("respects-context", "context",
                            "recursion variables " + it->second + " and " + r + " share an anchor");
      w.state = e.anchor;
      rep.fail(w);
    }
    for (const auto& p : e.params) {
      auto [jt, fresh2] = param_owner.emplace(p.name, r);
      if (!fresh2) {
        auto w = make_witness("respects-context", "context",
                              "parameter " + p.name + " shared by " + jt->second + " and " + r);
        w.variable = p.name;
        rep.fail(w);
      }
    }
  }
  for (TransitionIndex t = 0; t < f.transitions().size(); ++t) {
    const auto& tr = f.transition(t);
    const auto& l = *tr.label;
    if (!l.is_iteration()) continue;
    auto fail = [&](const std::string& clause, const std::string& msg) {
      auto w = make_witness("respects-context", clause, msg);
      w.state = tr.source;
      w.transitions = {t};
      rep.fail(w);
    };
    auto it = a.rho.find(l.rec());
    if (it == a.rho.end()) {
      fail("context", "recursion variable " + l.rec() + " not in context");
      continue;
    }
    const auto& e = it->second;
    if (tr.target != e.anchor) fail("context", "iteration on " + l.rec() + " does not enter its anchor");
    std::set<std::string> dom, params;
    for (const auto& [x, _] : l.iota()) dom.insert(x);
    for (const auto& p : e.params) params.insert(p.name);
    if (dom != params) fail("context", "iteration on " + l.rec() + " does not assign exactly its parameters");
    if (f.outgoing(tr.source).size() != 1) fail("a", "iteration is not the only outgoing transition");
    if (tr.source == tr.target) fail("a", "iteration is a self-loop");
    if (tr.source != f.initial()) {
      const auto& in = f.incoming(tr.source);
      if (in.size() != 1 || f.transition(in.front()).label->is_iteration())
        fail("b", "iteration source is not uniquely entered by an interaction");
    }
  }
  return rep;
}

WfReport is_asserted_ca(const AssertedCA& a, std::size_t cap) {
  WfReport rep;
  const auto& f = a.fsa;
  FixAnalysis fix(a);
  std::set<std::tuple<TransitionIndex, TransitionIndex, std::string>> reported;
  for (StateIndex q = 0; q < f.size(); ++q) {
    for (const auto& sp : q_spans(f, q, cap)) {
      if (sp.kind != SpanKind::Cofinal) continue;
      for (auto t : sp.first.steps)
        for (auto u : sp.second.steps)
          for (const auto& x : fixed_candidates(a, t))
            for (const auto& y : fixed_candidates(a, u)) {
              if (x.name != y.name || x.sort == y.sort) continue;
              if (!fix.fixes(t, x.name) || !fix.fixes(u, x.name)) continue;
              auto key = std::make_tuple(std::min(t, u), std::max(t, u), x.name);
              if (!reported.insert(key).second) continue;
              auto w = make_witness("asserted", "sort",
                                    "variable " + x.name + " fixed as " + to_string(x.sort) + " and as " +
                                        to_string(y.sort) + " on a cofinal span");
              w.state = q;
              w.transitions = {t, u};
              w.variable = x.name;
              w.runs = {sp.first.steps, sp.second.steps};
              rep.fail(w);
            }
    }
  }
  rep.merge(respects_context(a));
  for (StateIndex q = 0; q < f.size(); ++q) {
    std::map<std::string, TransitionIndex> seen;
    for (auto t : f.outgoing(q)) {
      auto k = f.transition(t).label->action_key();
      auto [it, fresh] = seen.emplace(k, t);
      if (!fresh) {
        auto w = make_witness("asserted", "deterministic", "two transitions labelled " + k);
        w.state = q;
        w.transitions = {it->second, t};
        rep.fail(w);
      }
    }
  }
  return rep;
}

bool Knowledge::knows(const Participant& p, const std::string& x, TransitionIndex t) {
  auto key = std::make_tuple(p, x, t);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second == 1;
  memo_[key] = -1;
  const auto& tr = a_.fsa.transition(t);
  const auto& l = *tr.label;
  bool r = false;
  if (fix_.fixes(t, x)) r = l.is_iteration() || participants_of(l).count(p) > 0;
  if (!r && fv(l.assertion()).count(x)) {
    auto xs = sort_in(a_, t, x);
    const auto& paths = fix_.simple_paths(tr.source);
    r = true;
    for (const auto& pi : paths) {
      bool found = false;
      for (auto u : pi.steps) {
        if (knows(p, x, u)) {
          found = true;
          break;
        }
      }
      if (!found && xs) {
        auto phi = path_assertion(a_, pi).phi;
        for (auto u : pi.steps) {
          for (const auto& y : mentioned(a_, u)) {
            if (y == x || sort_in(a_, u, y) != xs || !knows(p, y, u)) continue;
            if (solver_.entails(phi, cmp(CmpOp::Eq, var(x, *xs), var(y, *xs))) == Tri::Yes) {
              found = true;
              break;
            }
          }
          if (found) break;
        }
      }
      if (!found) {
        r = false;
        break;
      }
    }
    if (paths.empty()) r = false;
  }
  memo_[key] = r ? 1 : 0;
  return r;
}

std::set<std::string> Knowledge::kn(const Participant& p, TransitionIndex t) {
  std::set<std::string> out;
  for (const auto& x : mentioned(a_, t))
    if (knows(p, x, t)) out.insert(x);
  return out;
}

ParticipantSet cycle_participants(const AssertedCA& a, StateIndex q) {
  auto fwd = reachable_from(a, q, true);
  auto bwd = reachable_from(a, q, false);
  ParticipantSet out;
  for (const auto& t : a.fsa.transitions())
    if (fwd[t.source] && bwd[t.target]) {
      auto p = participants_of(*t.label);
      out.insert(p.begin(), p.end());
    }
  return out;
}

WfReport history_sensitive(const AssertedCA& a, SolverPort& solver) {
  WfReport rep;
  Knowledge k(a, solver);
  for (TransitionIndex t = 0; t < a.fsa.transitions().size(); ++t) {
    const auto& tr = a.fsa.transition(t);
    const auto& l = *tr.label;
    if (!l.is_iteration()) {
      for (const auto& x : fv(l.assertion()))
        if (!k.knows(l.inter().sender, x, t)) {
          auto w = make_witness("history-sensitive", "guarantee",
                                l.inter().sender.name + " does not know " + x + " when sending " + l.inter().message);
          w.state = tr.source;
          w.transitions = {t};
          w.participant = l.inter().sender;
          w.variable = x;
          rep.fail(w);
        }
      continue;
    }
    for (const auto& p : cycle_participants(a, tr.target))
      for (const auto& x : fixed_candidates(a, t))
        if (!k.knows(p, x.name, t)) {
          auto w = make_witness("history-sensitive", "loop",
                                p.name + " takes part in loop " + l.rec() + " but does not know " + x.name);
          w.state = tr.source;
          w.transitions = {t};
          w.participant = p;
          w.variable = x.name;
          rep.fail(w);
        }
  }
  return rep;
}

std::map<StateIndex, std::vector<Precondition>> all_preconditions(const AssertedCA& a, std::size_t k,
                                                                   SolverPort& solver, std::size_t cap) {
  std::map<StateIndex, std::vector<Precondition>> out;
  const auto& f = a.fsa;
  std::vector<std::size_t> visits(f.size(), 0);
  std::size_t count = 0;
  Run cur{f.initial(), {}};
  auto rec = [&](auto&& self, StateIndex s, const Pred& phi, const Subst& iota) -> void {
    if (++count > cap) throw CapExceeded("precondition enumeration exceeded cap " + std::to_string(cap));
    out[s].push_back({phi, iota, cur});
    ++visits[s];
    for (auto t : f.outgoing(s)) {
      const auto& tr = f.transition(t);
      if (visits[tr.target] > k) continue;
      Subst io = iota;
      if (tr.label->is_iteration()) io = compose_subst(iota, tr.label->iota());
      auto phi2 = conj(phi, substitute(tr.label->assertion(), io));
      if (solver.sat(phi2) == Tri::No) continue;
      cur.steps.push_back(t);
      self(self, tr.target, phi2, io);
      cur.steps.pop_back();
    }
    --visits[s];
  };
  rec(rec, f.initial(), top(), Subst{});
  return out;
}

std::vector<Precondition> preconditions(const AssertedCA& a, StateIndex q, std::size_t k, SolverPort& solver) {
  auto all = all_preconditions(a, k, solver);
  auto it = all.find(q);
  return it == all.end() ? std::vector<Precondition>{} : it->second;
}

WfReport temporally_satisfiable(const AssertedCA& a, std::size_t k, SolverPort& solver) {
  WfReport rep;
  const auto& f = a.fsa;
  auto pre = all_preconditions(a, k, solver);
  for (const auto& [q, ps] : pre) {
    if (f.outgoing(q).empty()) continue;
    std::vector<std::pair<Pred, std::vector<std::pair<std::string, Sort>>>> enabling;
    for (auto t : f.outgoing(q)) {
      std::vector<std::pair<std::string, Sort>> xs;
      for (const auto& v : fixed_candidates(a, t)) xs.push_back({v.name, v.sort});
      enabling.push_back({f.transition(t).label->assertion(), xs});
    }
    for (const auto& b : ps) {
      std::vector<Pred> alts;
      for (const auto& [as, xs] : enabling) alts.push_back(substitute(exists(xs, as), b.iota));
      auto cond = implies(b.phi, disj(alts));
      auto v = solver.valid(cond);
      if (v == Tri::Yes) continue;
      auto w = make_witness("temporal-satisfiability", "enabling",
                            v == Tri::No ? "precondition " + to_string(b.phi) + " does not enable any transition"
                                         : "solver could not decide enabling condition under " + to_string(b.phi));
      w.state = q;
      w.runs = {b.run.steps};
      w.transitions = b.run.steps;
      rep.fail(w);
      break;
    }
  }
  return rep;
}

WfReport consistent(const AssertedCA& a, std::size_t k, SolverPort& solver) {
  auto rep = is_asserted_ca(a);
  if (!rep.pass) return rep;
  rep.merge(history_sensitive(a, solver));
  rep.merge(temporally_satisfiable(a, k, solver));
  rep.merge(well_formed(strip(a)));
  return rep;
}

std::string describe(const AssertedCA& a, const Witness& w) {
  std::ostringstream os;
  os << w.check << " [" << w.clause << "]";
  if (w.state) os << " at " << a.fsa.name(*w.state);
  if (w.participant) os << ", participant " << w.participant->name;
  if (w.variable) os << ", variable " << *w.variable;
  os << ": " << w.message;
  for (const auto& r : w.runs) {
    if (r.empty()) continue;
    os << "\n    run " << run_to_string(a.fsa, Run{a.fsa.transition(r.front()).source, r});
  }
  return os.str();
}

}  // namespace chorc
