#include "chorc/assertions/asserted_projection.hpp"

#include <algorithm>

namespace chorc {

LocalLabel LocalLabel::epsilon(Pred assertion) {
  LocalLabel l;
  l.eps_ = true;
  l.assertion_ = std::move(assertion);
  l.finish();
  return l;
}

LocalLabel LocalLabel::action(Action a, Payload payload, Pred assertion) {
  check_payload(payload);
  LocalLabel l;
  l.eps_ = false;
  l.act_ = std::move(a);
  l.payload_ = std::move(payload);
  l.assertion_ = std::move(assertion);
  l.finish();
  return l;
}

std::string LocalLabel::shape() const {
  if (eps_) return "eps";
  std::string s = act_.to_string() + "(";
  for (std::size_t i = 0; i < payload_.size(); ++i) s += (i ? "," : "") + to_string(payload_[i].sort);
  return s + ")";
}

LocalLabel LocalLabel::with_assertion(Pred a) const {
  LocalLabel l = *this;
  l.assertion_ = std::move(a);
  l.finish();
  return l;
}

void LocalLabel::finish() {
  key_ = eps_ ? "eps" : act_.to_string() + to_string(payload_);
  if (!is_true(assertion_)) key_ += " [" + to_string(assertion_) + "]";
}

bool AssertedCfsm::is_final(StateIndex s) const {
  if (final.empty()) throw AutomatonError("final states of " + owner.name + " not computed");
  return final.at(s);
}

Pred rename_payload(const Pred& p, const Payload& from, const Payload& to) {
  Subst s;
  for (std::size_t i = 0; i < from.size() && i < to.size(); ++i)
    if (from[i].name != to[i].name) s[from[i].name] = var(to[i].name, to[i].sort);
  return s.empty() ? p : substitute(p, s);
}

bool label_equivalent(const LocalLabel& a, const LocalLabel& b, SolverPort& solver) {
  if (a == b) return true;
  if (a.shape() != b.shape()) return false;
  auto bb = rename_payload(b.assertion(), b.payload(), a.payload());
  if (same(a.assertion(), bb)) return true;
  return solver.equivalent(a.assertion(), bb) == Tri::Yes;
}

std::vector<ClosureEntry> asserted_eps_closure(const Fsa<LocalLabel>& m, StateIndex q, SolverPort& solver,
                                               std::size_t revisit_cap) {
  m.check_state(q);
  std::vector<ClosureEntry> out{{q, top()}};
  std::map<StateIndex, std::size_t> visits;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto [s, a] = out[i];
    for (auto t : m.outgoing(s)) {
      const auto& tr = m.transition(t);
      if (!tr.label->is_epsilon()) continue;
      auto p = prenex_compose(a, tr.label->assertion());
      bool subsumed = false;
      for (const auto& e : out)
        if (e.state == tr.target && (same(e.assertion, p) || solver.entails(p, e.assertion) == Tri::Yes)) {
          subsumed = true;
          break;
        }
      if (subsumed) continue;
      if (++visits[tr.target] > revisit_cap)
        throw CapExceeded("epsilon closure revisited " + m.name(tr.target) + " more than " +
                          std::to_string(revisit_cap) + " times");
      out.push_back({tr.target, p});
    }
  }
  return out;
}

Fsa<LocalLabel> asserted_remove_epsilon(const Fsa<LocalLabel>& m, SolverPort& solver, std::size_t revisit_cap) {
  Fsa<LocalLabel> r;
  for (StateIndex s = 0; s < m.size(); ++s) r.add_state(m.name(s), m.origin(s));
  r.set_initial(m.initial());
  for (StateIndex s = 0; s < m.size(); ++s) {
    std::set<LocalLabel> seen_labels;
    std::set<std::pair<std::string, StateIndex>> added;
    for (const auto& [c, a1] : asserted_eps_closure(m, s, solver, revisit_cap))
      for (auto t : m.outgoing(c)) {
        const auto& tr = m.transition(t);
        if (tr.label->is_epsilon()) continue;
        auto l = tr.label->with_assertion(prenex_compose(a1, tr.label->assertion()));
        if (added.insert({l.key(), tr.target}).second) r.add_transition(s, l, tr.target);
      }
  }
  return trim(r);
}

namespace {

struct Entry {
  Pred guard;
  std::set<StateIndex> targets;
};

}  // namespace

Fsa<LocalLabel> asserted_determinize(const Fsa<LocalLabel>& m, SolverPort& solver, std::size_t derivative_cap) {
  Fsa<LocalLabel> d;
  std::map<std::set<StateIndex>, StateIndex> ids;
  std::vector<std::set<StateIndex>> work;
  auto intern = [&](const std::set<StateIndex>& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    StateIndex n = d.add_state(set_name(m, s), union_origin(m, s));
    ids.emplace(s, n);
    work.push_back(s);
    return n;
  };
  d.set_initial(intern({m.initial()}));
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto cur = work[i];
    StateIndex from = ids.at(cur);
    // group by shape; the first label of a group gives payload names
    std::map<std::string, std::pair<LocalLabel, std::vector<Entry>>> groups;
    for (auto s : cur)
      for (auto t : m.outgoing(s)) {
        const auto& tr = m.transition(t);
        if (tr.label->is_epsilon()) throw AutomatonError("asserted determinization requires an epsilon-free machine");
        auto sh = tr.label->shape();
        auto it = groups.find(sh);
        if (it == groups.end()) it = groups.emplace(sh, std::make_pair(*tr.label, std::vector<Entry>{})).first;
        auto g = rename_payload(tr.label->assertion(), tr.label->payload(), it->second.first.payload());
        it->second.second.push_back({g, {tr.target}});
      }
    for (auto& [sh, grp] : groups) {
      auto& [rep, raw] = grp;
      std::vector<Entry> es;
      for (auto& e : raw) {
        bool merged = false;
        for (auto& f : es)
          if (same(f.guard, e.guard) || solver.equivalent(f.guard, e.guard) == Tri::Yes) {
            f.targets.insert(e.targets.begin(), e.targets.end());
            merged = true;
            break;
          }
        if (!merged) es.push_back(e);
      }
      std::vector<Entry> by_target;
      for (auto& e : es) {
        bool merged = false;
        for (auto& f : by_target)
          if (f.targets == e.targets) {
            f.guard = disj(f.guard, e.guard);
            merged = true;
            break;
          }
        if (!merged) by_target.push_back(e);
      }
      if (by_target.size() == 1) {
        d.add_transition(from, rep.with_assertion(by_target[0].guard), intern(by_target[0].targets));
        continue;
      }
      if (by_target.size() > derivative_cap)
        throw CapExceeded("derivative of " + d.name(from) + " on " + sh + " has " + std::to_string(by_target.size()) +
                          " entries (cap " + std::to_string(derivative_cap) + ")");
      std::size_t n = by_target.size();
      for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<Pred> parts;
        std::set<StateIndex> targets;
        for (std::size_t j = 0; j < n; ++j) {
          if (mask & (std::size_t{1} << j)) {
            parts.push_back(by_target[j].guard);
            targets.insert(by_target[j].targets.begin(), by_target[j].targets.end());
          } else {
            parts.push_back(neg(by_target[j].guard));
          }
        }
        auto g = conj(parts);
        if (solver.sat(g) == Tri::No) continue;
        d.add_transition(from, rep.with_assertion(g), intern(targets));
      }
    }
  }
  return d;
}

Fsa<LocalLabel> asserted_minimize(const Fsa<LocalLabel>& m, SolverPort& solver) {
  // Labels up to equivalence become class ids; the first label seen stands for its class.
  std::vector<LocalLabel> reps;
  std::map<std::string, std::size_t> cls;
  for (const auto& t : m.transitions()) {
    const auto& l = *t.label;
    if (cls.count(l.key())) continue;
    std::size_t c = reps.size();
    for (std::size_t i = 0; i < reps.size(); ++i)
      if (label_equivalent(reps[i], l, solver)) {
        c = i;
        break;
      }
    if (c == reps.size()) reps.push_back(l);
    cls[l.key()] = c;
  }
  Fsa<std::size_t> ids;
  for (StateIndex s = 0; s < m.size(); ++s) ids.add_state(m.name(s), m.origin(s));
  ids.set_initial(m.initial());
  for (const auto& t : m.transitions()) ids.add_transition(t.source, cls.at(t.label->key()), t.target);
  if (!is_deterministic(ids)) return trim(m);
  auto mid = minimize(ids);
  Fsa<LocalLabel> r;
  for (StateIndex s = 0; s < mid.size(); ++s) r.add_state(mid.name(s), mid.origin(s));
  r.set_initial(mid.initial());
  for (const auto& t : mid.transitions()) r.add_transition(t.source, reps.at(*t.label), t.target);
  return r;
}

Fsa<LocalLabel> intermediate_asserted_cfsm(const AssertedCA& a, const Participant& p) {
  Fsa<LocalLabel> m;
  FixAnalysis fix(a);
  for (StateIndex s = 0; s < a.fsa.size(); ++s) m.add_state(a.fsa.name(s));
  m.set_initial(a.fsa.initial());
  for (TransitionIndex ti = 0; ti < a.fsa.transitions().size(); ++ti) {
    const auto& t = a.fsa.transition(ti);
    const auto& l = *t.label;
    if (!l.is_iteration() && l.inter().sender == p) {
      Action act{ActionKind::Send, l.inter().sender, l.inter().receiver, l.inter().message};
      m.add_transition(t.source, LocalLabel::action(act, l.payload(), l.assertion()), t.target);
      continue;
    }
    if (!l.is_iteration() && l.inter().receiver == p) {
      Action act{ActionKind::Receive, l.inter().sender, l.inter().receiver, l.inter().message};
      m.add_transition(t.source, LocalLabel::action(act, l.payload(), l.assertion()), t.target);
      continue;
    }
    std::vector<std::pair<std::string, Sort>> xs;
    auto free = fv(l.assertion());
    for (const auto& v : fixed_candidates(a, ti))
      if (free.count(v.name) && fix.fixes(ti, v.name)) xs.push_back({v.name, v.sort});
    Pred g = l.is_iteration() ? substitute(l.assertion(), l.iota()) : l.assertion();
    m.add_transition(t.source, LocalLabel::epsilon(exists(xs, g)), t.target);
  }
  return m;
}

namespace {

std::set<StateIndex> asserted_final_states(const AssertedCA& a, const Participant& p, const Fsa<LocalLabel>& m,
                                           std::size_t cap) {
  auto f = strip_with_epsilon(a);
  std::map<StateIndex, bool> memo;
  auto free_of_p = [&](StateIndex q) {
    auto it = memo.find(q);
    if (it != memo.end()) return it->second;
    bool r = false;
    for (const auto& c : candidate_branches(f, q, cap))
      if (!participants_of(f, c).count(p)) {
        r = true;
        break;
      }
    memo[q] = r;
    return r;
  };
  std::set<StateIndex> out;
  for (StateIndex s = 0; s < m.size(); ++s)
    for (auto q : m.origin(s))
      if (free_of_p(q)) {
        out.insert(s);
        break;
      }
  return out;
}

Fsa<LocalLabel> simplify_guards(const Fsa<LocalLabel>& m, SolverPort& solver) {
  Fsa<LocalLabel> r;
  for (StateIndex s = 0; s < m.size(); ++s) r.add_state(m.name(s), m.origin(s));
  r.set_initial(m.initial());
  for (const auto& t : m.transitions()) {
    auto l = *t.label;
    if (!is_true(l.assertion()) && solver.valid(l.assertion()) == Tri::Yes) l = l.with_assertion(top());
    r.add_transition(t.source, l, t.target);
  }
  return r;
}

}  // namespace

AssertedCfsm project_asserted(const AssertedCA& a, const Participant& p, SolverPort& solver, std::size_t cap) {
  AssertedCfsm m;
  m.owner = p;
  auto inter = intermediate_asserted_cfsm(a, p);
  auto noeps = asserted_remove_epsilon(inter, solver);
  auto det = asserted_determinize(noeps, solver);
  auto min = asserted_minimize(det, solver);
  m.fsa = canonical_order(simplify_guards(min, solver));
  auto fin = asserted_final_states(a, p, m.fsa, cap);
  m.final.assign(m.fsa.size(), false);
  for (auto s : fin) m.final[s] = true;
  return m;
}

AssertedSystem project_asserted_all(const AssertedCA& a, SolverPort& solver, std::size_t cap) {
  ParticipantSet ps = a.participants;
  if (ps.empty())
    for (const auto& t : a.fsa.transitions()) {
      auto q = participants_of(*t.label);
      ps.insert(q.begin(), q.end());
    }
  if (ps.empty()) throw AutomatonError("asserted c-automaton has no participants");
  AssertedSystem s;
  for (const auto& p : ps) s.machines.emplace(p, project_asserted(a, p, solver, cap));
  return s;
}

Fsa<Action> strip(const AssertedCfsm& m) {
  Fsa<Action> r;
  for (StateIndex s = 0; s < m.fsa.size(); ++s) r.add_state(m.fsa.name(s), m.fsa.origin(s));
  r.set_initial(m.fsa.initial());
  for (const auto& t : m.fsa.transitions()) {
    std::optional<Action> l;
    if (!t.label->is_epsilon()) l = t.label->act();
    r.add_transition(t.source, l, t.target);
  }
  return r;
}

std::map<StateIndex, std::vector<Pred>> local_preconditions(const Fsa<LocalLabel>& m, std::size_t k,
                                                            SolverPort& solver, std::size_t cap) {
  std::map<StateIndex, std::vector<Pred>> out;
  std::map<StateIndex, std::set<std::string>> seen;
  std::vector<std::size_t> visits(m.size(), 0);
  std::vector<Pred> guards;
  std::size_t count = 0;
  auto rec = [&](auto&& self, StateIndex s) -> void {
    if (++count > cap) throw CapExceeded("precondition enumeration exceeded cap " + std::to_string(cap));
    Pred phi = top();
    for (auto it = guards.rbegin(); it != guards.rend(); ++it) phi = prenex_compose(*it, phi);
    if (solver.sat(phi) == Tri::No) return;
    if (seen[s].insert(to_string(phi)).second) out[s].push_back(phi);
    ++visits[s];
    for (auto t : m.outgoing(s)) {
      const auto& tr = m.transition(t);
      if (visits[tr.target] > k) continue;
      guards.push_back(tr.label->assertion());
      self(self, tr.target);
      guards.pop_back();
    }
    --visits[s];
  };
  rec(rec, m.initial());
  return out;
}

Configuration AssertedProduct::configuration(StateIndex s) const {
  Configuration c;
  for (std::size_t i = 0; i < order.size(); ++i) c[order[i]] = configs.at(s)[i];
  return c;
}

Fsa<Interaction> AssertedProduct::interactions() const {
  Fsa<Interaction> f;
  for (StateIndex s = 0; s < automaton.size(); ++s) f.add_state(automaton.name(s), automaton.origin(s));
  if (!automaton.empty()) f.set_initial(automaton.initial());
  for (const auto& t : automaton.transitions()) {
    std::optional<Interaction> l;
    if (t.label && !t.label->is_iteration()) l = t.label->inter();
    f.add_transition(t.source, l, t.target);
  }
  return f;
}

AssertedProduct asserted_sync_semantics(const AssertedSystem& s, SolverPort& solver, std::size_t k,
                                        std::size_t cap) {
  AssertedProduct prod;
  std::vector<const AssertedCfsm*> ms;
  std::vector<std::map<StateIndex, std::vector<Pred>>> pre;
  for (const auto& [p, m] : s.machines) {
    if (m.owner != p) throw AutomatonError("machine registered under " + p.name + " is owned by " + m.owner.name);
    prod.order.push_back(p);
    ms.push_back(&m);
    pre.push_back(local_preconditions(m.fsa, k, solver));
  }
  std::map<Participant, std::size_t> pos;
  for (std::size_t i = 0; i < prod.order.size(); ++i) pos[prod.order[i]] = i;
  auto pre_of = [&](std::size_t i, StateIndex st) -> const std::vector<Pred>& {
    static const std::vector<Pred> none;
    auto it = pre[i].find(st);
    return it == pre[i].end() ? none : it->second;
  };
  auto guard_ok = [&](std::size_t i, StateIndex st, const Pred& a) {
    for (const auto& p : pre_of(i, st))
      if (solver.sat(conj(p, a)) == Tri::Yes) return true;
    return false;
  };
  auto& f = prod.automaton;
  std::map<std::vector<StateIndex>, StateIndex> ids;
  auto name = [&](const std::vector<StateIndex>& c) {
    std::string n = "(";
    for (std::size_t i = 0; i < c.size(); ++i) n += (i ? "," : "") + ms[i]->fsa.name(c[i]);
    return n + ")";
  };
  auto intern = [&](const std::vector<StateIndex>& c) {
    auto it = ids.find(c);
    if (it != ids.end()) return it->second;
    if (prod.configs.size() >= cap) throw CapExceeded("configuration count exceeded cap " + std::to_string(cap));
    StateIndex n = f.add_state(name(c));
    ids.emplace(c, n);
    prod.configs.push_back(c);
    return n;
  };
  std::vector<StateIndex> init;
  for (auto* m : ms) init.push_back(m->fsa.initial());
  f.set_initial(intern(init));
  for (std::size_t i = 0; i < prod.configs.size(); ++i) {
    auto c = prod.configs[i];
    std::vector<std::pair<std::optional<AssertedLabel>, std::vector<StateIndex>>> moves;
    for (std::size_t kk = 0; kk < ms.size(); ++kk) {
      const auto& fk = ms[kk]->fsa;
      for (auto t : fk.outgoing(c[kk])) {
        const auto& tr = fk.transition(t);
        const auto& l = *tr.label;
        if (l.is_epsilon()) {
          if (!guard_ok(kk, c[kk], l.assertion())) continue;
          auto d = c;
          d[kk] = tr.target;
          moves.push_back({std::nullopt, d});
          continue;
        }
        if (l.act().kind != ActionKind::Send) continue;
        auto rit = pos.find(l.act().receiver);
        if (rit == pos.end()) continue;
        std::size_t r = rit->second;
        const auto& fr = ms[r]->fsa;
        for (auto u : fr.outgoing(c[r])) {
          const auto& ul = *fr.transition(u).label;
          if (ul.is_epsilon() || ul.act().kind != ActionKind::Receive || ul.act().interaction() != l.act().interaction())
            continue;
          if (ul.shape().substr(ul.shape().find('(')) != l.shape().substr(l.shape().find('('))) continue;
          const Pred& a = l.assertion();
          Pred b = rename_payload(ul.assertion(), ul.payload(), l.payload());
          std::set<std::string> sent;
          for (const auto& v : l.payload()) sent.insert(v.name);
          // Payload stays universal; other variables the premise leaves open are closed.
          auto rely_for = [&](const Pred& lhs) {
            auto open = fv(lhs);
            std::vector<std::pair<std::string, Sort>> xs;
            for (const auto& [x, srt] : fv_sorted(b))
              if (!sent.count(x) && !open.count(x)) xs.push_back({x, srt});
            return exists(xs, b);
          };
          bool ok = false;
          for (const auto& ap : pre_of(kk, c[kk])) {
            if (solver.sat(conj(ap, a)) != Tri::Yes) continue;
            for (const auto& bp : pre_of(r, c[r])) {
              if (solver.sat(conj(bp, b)) != Tri::Yes) continue;
              auto lhs = prenex_compose(prenex_compose(ap, bp), a);
              if (solver.valid(implies(lhs, rely_for(lhs))) == Tri::Yes) {
                ok = true;
                break;
              }
            }
            if (ok) break;
          }
          if (!ok) continue;
          auto d = c;
          d[kk] = tr.target;
          d[r] = fr.transition(u).target;
          moves.push_back({AssertedLabel::interaction(l.act().interaction(), l.payload(), a), d});
        }
      }
    }
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
    for (auto& [l, d] : moves) {
      StateIndex to = intern(d);
      f.add_transition(static_cast<StateIndex>(i), l, to);
    }
  }
  return prod;
}

std::vector<Configuration> asserted_deadlocks(const AssertedSystem& s, const AssertedProduct& prod) {
  std::vector<Configuration> out;
  const auto& f = prod.automaton;
  for (StateIndex st = 0; st < f.size(); ++st) {
    if (!f.outgoing(st).empty()) continue;
    bool all = true;
    for (std::size_t i = 0; i < prod.order.size(); ++i)
      if (!s.machines.at(prod.order[i]).is_final(prod.configs[st][i])) all = false;
    if (!all) out.push_back(prod.configuration(st));
  }
  return out;
}

}  // namespace chorc
