#include "chorc/choreography/c_automaton.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace chorc {

CAutomaton::CAutomaton(Fsa<Interaction> a, std::optional<ParticipantSet> declared) : fsa(std::move(a)) {
  for (const auto& t : fsa.transitions())
    if (t.label) {
      participants.insert(t.label->sender);
      participants.insert(t.label->receiver);
    }
  if (declared) {
    for (const auto& p : participants)
      if (!declared->count(p)) throw AutomatonError("participant " + p.name + " not declared");
    participants = *declared;
  }
}

ParticipantSet participants_of(const Fsa<Interaction>& a, TransitionIndex t) {
  const auto& tr = a.transition(t);
  if (!tr.label) return {};
  return participants_of(*tr.label);
}

ParticipantSet participants_of(const Fsa<Interaction>& a, const Run& r) {
  ParticipantSet s;
  for (auto t : r.steps) {
    auto p = participants_of(a, t);
    s.insert(p.begin(), p.end());
  }
  return s;
}

ParticipantSet participants_of(const CAutomaton& a) { return a.participants; }

CAutomaton make_c_automaton(const std::vector<Edge>& edges, const std::string& initial,
                            const std::vector<std::string>& extra_states) {
  Fsa<Interaction> f;
  auto get = [&](const std::string& n) {
    if (auto s = f.find_state(n)) return *s;
    return f.add_state(n);
  };
  if (!initial.empty()) get(initial);
  for (const auto& e : edges) {
    StateIndex a = get(e.from);
    StateIndex b = get(e.to);
    f.add_transition(a, Interaction{e.sender, e.receiver, e.message}, b);
  }
  for (const auto& s : extra_states) get(s);
  if (f.empty()) f.add_state(initial.empty() ? "q0" : initial);
  f.set_initial(initial.empty() ? 0 : f.state(initial));
  return CAutomaton(std::move(f));
}

bool concurrent(const CAutomaton& a, TransitionIndex t1, TransitionIndex t2) {
  const auto& x = a.fsa.transition(t1);
  const auto& y = a.fsa.transition(t2);
  if (x.target != y.source) throw AutomatonError("transitions are not consecutive");
  if (!x.label || !y.label) return false;
  for (auto u : a.fsa.outgoing(x.source)) {
    const auto& b = a.fsa.transition(u);
    if (b.label != y.label) continue;
    for (auto v : a.fsa.outgoing(b.target)) {
      const auto& c = a.fsa.transition(v);
      if (c.label == x.label && c.target == y.target) return true;
    }
  }
  return false;
}

WfReport well_sequenced(const CAutomaton& a) {
  WfReport rep;
  const auto& f = a.fsa;
  for (TransitionIndex t1 = 0; t1 < f.transitions().size(); ++t1) {
    const auto& x = f.transition(t1);
    if (!x.label) continue;
    for (auto t2 : f.outgoing(x.target)) {
      const auto& y = f.transition(t2);
      if (!y.label || !independent(*x.label, *y.label)) continue;
      // Clause (b): a diamond through some q''' whose other exits commute with both.
      bool ok = false;
      std::optional<Witness> guard_fail;
      for (auto u : f.outgoing(x.source)) {
        const auto& b = f.transition(u);
        if (b.label != y.label) continue;
        StateIndex q3 = b.target;
        std::optional<TransitionIndex> closing;
        for (auto v : f.outgoing(q3)) {
          const auto& c = f.transition(v);
          if (c.label == x.label && c.target == y.target) closing = v;
        }
        if (!closing) continue;
        std::optional<TransitionIndex> bad;
        for (auto v : f.outgoing(q3)) {
          if (v == *closing) continue;
          const auto& g = f.transition(v);
          if (!g.label || !independent(*g.label, *x.label) || !independent(*g.label, *y.label)) {
            bad = v;
            break;
          }
        }
        if (!bad) {
          ok = true;
          break;
        }
        if (!guard_fail) {
          Witness w;
          w.check = "well-sequenced";
          w.clause = "b-guard";
          w.state = q3;
          w.transitions = {t1, t2, *bad};
          w.message = "transition " + f.transition(*bad).label->to_string() + " leaving " + f.name(q3) +
                      " is not independent of " + x.label->to_string() + " and " + y.label->to_string();
          guard_fail = w;
        }
      }
      if (ok) continue;
      if (guard_fail) {
        rep.fail(*guard_fail);
      } else {
        Witness w;
        w.check = "well-sequenced";
        w.clause = "b-diamond";
        w.state = x.source;
        w.transitions = {t1, t2};
        w.message = "independent " + x.label->to_string() + " then " + y.label->to_string() +
                    " without a commuting diamond";
        rep.fail(w);
      }
    }
  }
  return rep;
}

std::vector<Action> project_trace(const Fsa<Interaction>& a, const std::vector<TransitionIndex>& steps,
                                  const Participant& p) {
  std::vector<Action> out;
  for (auto t : steps) {
    const auto& l = a.transition(t).label;
    if (!l) continue;
    if (l->sender == p) out.push_back({ActionKind::Send, l->sender, l->receiver, l->message});
    if (l->receiver == p) out.push_back({ActionKind::Receive, l->sender, l->receiver, l->message});
  }
  return out;
}

namespace {

struct AwarenessSolver {
  const Fsa<Interaction>& a;
  std::vector<Interaction> l1, l2;
  std::map<std::tuple<Participant, std::size_t, std::size_t>, bool> memo;

  AwarenessSolver(const Fsa<Interaction>& f, const Run& r1, const Run& r2) : a(f) {
    for (auto t : r1.steps)
      if (f.transition(t).label) l1.push_back(*f.transition(t).label);
    for (auto t : r2.steps)
      if (f.transition(t).label) l2.push_back(*f.transition(t).label);
  }

  static bool involves(const Interaction& i, const Participant& p) { return i.sender == p || i.receiver == p; }
  static const Participant& partner(const Interaction& i, const Participant& p) {
    return i.sender == p ? i.receiver : i.sender;
  }
  static bool occurs(const std::vector<Interaction>& v, std::size_t n, const Participant& p) {
    for (std::size_t k = 0; k < n; ++k)
      if (involves(v[k], p)) return true;
    return false;
  }
  static std::vector<Action> proj(const std::vector<Interaction>& v, std::size_t n, const Participant& p) {
    std::vector<Action> out;
    for (std::size_t k = 0; k < n; ++k) {
      if (v[k].sender == p) out.push_back({ActionKind::Send, v[k].sender, v[k].receiver, v[k].message});
      if (v[k].receiver == p) out.push_back({ActionKind::Receive, v[k].sender, v[k].receiver, v[k].message});
    }
    return out;
  }

  bool aware(const Participant& p, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(p, i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    memo[key] = false;
    bool r = compute(p, i, j);
    memo[key] = r;
    return r;
  }

  bool compute(const Participant& p, std::size_t i, std::size_t j) {
    if (!occurs(l1, i, p) || !occurs(l2, j, p)) return false;
    if (i >= 1 && j >= 1 && l1[0] != l2[0] && involves(l1[0], p) && involves(l2[0], p)) return true;
    for (std::size_t a1 = 0; a1 < i; ++a1) {
      if (!involves(l1[a1], p)) continue;
      if (std::find(l2.begin(), l2.begin() + j, l1[a1]) != l2.begin() + j) continue;
      for (std::size_t a2 = 0; a2 < j; ++a2) {
        if (!involves(l2[a2], p) || l1[a1] == l2[a2]) continue;
        if (std::find(l1.begin(), l1.begin() + i, l2[a2]) != l1.begin() + i) continue;
        if (proj(l1, a1, p) != proj(l2, a2, p)) continue;
        if (aware(partner(l1[a1], p), a1, a2) && aware(partner(l2[a2], p), a1, a2)) return true;
      }
    }
    return false;
  }
};

}  // namespace

bool fully_aware(const CAutomaton& a, const Participant& p, const Run& r1, const Run& r2) {
  AwarenessSolver s(a.fsa, r1, r2);
  return s.aware(p, s.l1.size(), s.l2.size());
}

Partition transition_partition(const CAutomaton& a, StateIndex q) {
  const auto& f = a.fsa;
  const auto& out = f.outgoing(q);
  std::size_t n = out.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  auto diamond = [&](TransitionIndex t1, TransitionIndex t2) {
    const auto& x = f.transition(t1);
    const auto& y = f.transition(t2);
    for (auto u : f.outgoing(x.target)) {
      const auto& b = f.transition(u);
      if (b.label != y.label) continue;
      for (auto v : f.outgoing(y.target)) {
        const auto& c = f.transition(v);
        if (c.label == x.label && c.target == b.target) return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& x = f.transition(out[i]);
      const auto& y = f.transition(out[j]);
      bool linked = !x.label || !y.label || !independent(*x.label, *y.label) || !diamond(out[i], out[j]);
      if (linked) parent[find(i)] = find(j);
    }
  std::map<std::size_t, std::vector<TransitionIndex>> comps;
  for (std::size_t i = 0; i < n; ++i) comps[find(i)].push_back(out[i]);
  Partition p;
  for (auto& [root, c] : comps) p.classes.push_back(c);
  std::sort(p.classes.begin(), p.classes.end());
  for (std::size_t k = 0; k < p.classes.size(); ++k) {
    std::optional<ParticipantSet> common;
    for (auto t : p.classes[k]) {
      auto ps = participants_of(f, t);
      if (!common) {
        common = ps;
      } else {
        ParticipantSet r;
        std::set_intersection(common->begin(), common->end(), ps.begin(), ps.end(), std::inserter(r, r.end()));
        common = r;
      }
    }
    if (!common || common->empty()) {
      p.ok = false;
      p.bad_classes.push_back(k);
    }
  }
  return p;
}

WfReport deterministic_check(const CAutomaton& a) {
  WfReport rep;
  for (StateIndex s = 0; s < a.fsa.size(); ++s) {
    std::map<Interaction, TransitionIndex> seen;
    for (auto t : a.fsa.outgoing(s)) {
      const auto& l = a.fsa.transition(t).label;
      if (!l) {
        Witness w;
        w.check = "deterministic";
        w.clause = "epsilon";
        w.message = "epsilon transition leaving " + a.fsa.name(s);
        w.state = s;
        w.transitions = {t};
        rep.fail(w);
        continue;
      }
      auto [it, fresh] = seen.emplace(*l, t);
      if (!fresh) {
        Witness w;
        w.check = "deterministic";
        w.clause = "duplicate-label";
        w.message = "two transitions labelled " + l->to_string() + " leave " + a.fsa.name(s);
        w.state = s;
        w.transitions = {it->second, t};
        rep.fail(w);
      }
    }
  }
  return rep;
}

WfReport well_branched(const CAutomaton& a, const WbOptions& opt) {
  WfReport rep = deterministic_check(a);
  const auto& f = a.fsa;
  for (StateIndex q = 0; q < f.size(); ++q) {
    if (f.outgoing(q).size() < 2) continue;
    auto part = transition_partition(a, q);
    for (auto k : part.bad_classes) {
      Witness w;
      w.check = "well-branched";
      w.clause = "partition";
      w.state = q;
      w.transitions = part.classes[k];
      w.message = "no participant common to all transitions of a class at " + f.name(q);
      rep.fail(w);
    }
    auto bs = enumerate_branches(f, q, opt.cap);
    auto spans = q_spans(f, q, bs);
    for (const auto& cls : part.classes) {
      std::set<TransitionIndex> cset(cls.begin(), cls.end());
      ParticipantSet common = participants_of(f, cls.front());
      for (auto t : cls) {
        auto ps = participants_of(f, t);
        ParticipantSet r;
        std::set_intersection(common.begin(), common.end(), ps.begin(), ps.end(), std::inserter(r, r.end()));
        common = r;
      }
      for (const auto& sp : spans) {
        if (!cset.count(sp.first.steps.front()) || !cset.count(sp.second.steps.front())) continue;
        const Run* runs[2] = {&sp.first, &sp.second};
        for (const auto& p : a.participants) {
          if (common.count(p)) continue;
          if (project_trace(f, sp.first.steps, p) == project_trace(f, sp.second.steps, p)) continue;
          AwarenessSolver aw(f, sp.first, sp.second);
          auto fa = [&](const Participant& r) { return aw.aware(r, aw.l1.size(), aw.l2.size()); };
          bool in[2] = {participants_of(f, sp.first).count(p) > 0, participants_of(f, sp.second).count(p) > 0};
          if (in[0] && in[1]) {
            if (fa(p)) continue;
            Witness w;
            w.check = "well-branched";
            w.clause = "not-aware";
            w.state = q;
            w.participant = p;
            w.runs = {sp.first.steps, sp.second.steps};
            w.message = p.name + " takes part in both branches of a span at " + f.name(q) +
                        " but is not fully aware";
            rep.fail(w);
            continue;
          }
          std::optional<Witness> failure;
          bool ok = false;
          for (int i = 0; i < 2 && !ok; ++i) {
            if (in[i]) continue;
            const Run& other = *runs[1 - i];
            std::optional<Participant> first_partner;
            for (auto t : other.steps) {
              const auto& l = *f.transition(t).label;
              if (l.sender == p || l.receiver == p) {
                first_partner = l.sender == p ? l.receiver : l.sender;
                break;
              }
            }
            if (!first_partner || !fa(*first_partner)) {
              Witness w;
              w.check = "well-branched";
              w.clause = "1";
              w.state = q;
              w.participant = p;
              w.partner = first_partner;
              w.runs = {sp.first.steps, sp.second.steps};
              w.message = p.name + " first interacts with " + (first_partner ? first_partner->name : "nobody") +
                          ", which is not fully aware of the span at " + f.name(q);
              if (!failure) failure = w;
              continue;
            }
            bool cont_ok = true;
            for (const auto& c : bs.candidates) {
              if (!is_prefix(*runs[i], c)) continue;
              for (std::size_t k = runs[i]->steps.size(); k < c.steps.size(); ++k) {
                const auto& l = *f.transition(c.steps[k]).label;
                if (l.sender == p || l.receiver == p) {
                  Participant r = l.sender == p ? l.receiver : l.sender;
                  if (!fa(r)) {
                    cont_ok = false;
                    Witness w;
                    w.check = "well-branched";
                    w.clause = "2";
                    w.state = q;
                    w.participant = p;
                    w.partner = r;
                    w.transitions = {c.steps[k]};
                    w.runs = {sp.first.steps, sp.second.steps};
                    w.message = "on a continuation " + p.name + " first interacts with " + r.name +
                                ", which is not fully aware of the span at " + f.name(q);
                    if (!failure || failure->clause == "1") failure = w;
                  }
                  break;
                }
              }
              if (!cont_ok) break;
            }
            if (cont_ok) ok = true;
          }
          if (!ok && failure) rep.fail(*failure);
        }
      }
    }
  }
  return rep;
}

WfReport well_formed(const CAutomaton& a, const WbOptions& opt) {
  WfReport r = well_sequenced(a);
  r.merge(well_branched(a, opt));
  return r;
}

std::string describe(const CAutomaton& a, const Witness& w) {
  std::ostringstream os;
  os << w.check << " [" << w.clause << "]";
  if (w.state) os << " at " << a.fsa.name(*w.state);
  if (w.participant) os << ", participant " << w.participant->name;
  if (w.partner) os << ", partner " << w.partner->name;
  os << ": " << w.message;
  for (const auto& r : w.runs) {
    if (r.empty()) continue;
    os << "\n    run " << run_to_string(a.fsa, Run{a.fsa.transition(r.front()).source, r});
  }
  return os.str();
}

}  // namespace chorc
