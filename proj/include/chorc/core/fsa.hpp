#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chorc {

using StateIndex = std::size_t;
using TransitionIndex = std::size_t;

class AutomatonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finite LTS over labels L; an absent label is epsilon.
// Every state carries an origin set (seed ids) that determinize and minimize
// propagate by union; a fresh state's origin is its own index.
template <class L>
class Fsa {
 public:
  using Label = L;

  struct Transition {
    StateIndex source;
    std::optional<L> label;
    StateIndex target;
    bool is_epsilon() const { return !label.has_value(); }
  };

  StateIndex add_state(std::string name) {
    StateIndex s = names_.size();
    names_.push_back(std::move(name));
    origins_.push_back({s});
    out_.emplace_back();
    in_.emplace_back();
    return s;
  }

  StateIndex add_state(std::string name, std::vector<StateIndex> origin) {
    StateIndex s = add_state(std::move(name));
    std::sort(origin.begin(), origin.end());
    origin.erase(std::unique(origin.begin(), origin.end()), origin.end());
    origins_[s] = std::move(origin);
    return s;
  }

  TransitionIndex add_transition(StateIndex from, std::optional<L> label, StateIndex to) {
    check_state(from);
    check_state(to);
    TransitionIndex t = transitions_.size();
    transitions_.push_back({from, std::move(label), to});
    out_[from].push_back(t);
    in_[to].push_back(t);
    return t;
  }

  void set_initial(StateIndex s) {
    check_state(s);
    initial_ = s;
  }

  StateIndex initial() const {
    if (names_.empty()) throw AutomatonError("automaton has no states");
    return initial_;
  }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(StateIndex s) const { return names_.at(s); }
  void rename(StateIndex s, std::string n) { names_.at(s) = std::move(n); }
  const std::vector<StateIndex>& origin(StateIndex s) const { return origins_.at(s); }
  void set_origin(StateIndex s, std::vector<StateIndex> o) { origins_.at(s) = std::move(o); }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const Transition& transition(TransitionIndex t) const { return transitions_.at(t); }
  const std::vector<TransitionIndex>& outgoing(StateIndex s) const { return out_.at(s); }
  const std::vector<TransitionIndex>& incoming(StateIndex s) const { return in_.at(s); }

  std::optional<StateIndex> find_state(const std::string& n) const {
    for (StateIndex s = 0; s < names_.size(); ++s)
      if (names_[s] == n) return s;
    return std::nullopt;
  }

  StateIndex state(const std::string& n) const {
    auto s = find_state(n);
    if (!s) throw AutomatonError("unknown state '" + n + "'");
    return *s;
  }

  void check_state(StateIndex s) const {
    if (s >= names_.size()) throw AutomatonError("unknown state id " + std::to_string(s));
  }

  std::set<L> alphabet() const {
    std::set<L> a;
    for (const auto& t : transitions_)
      if (t.label) a.insert(*t.label);
    return a;
  }

  bool has_epsilon() const {
    for (const auto& t : transitions_)
      if (!t.label) return true;
    return false;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<StateIndex>> origins_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<TransitionIndex>> out_;
  std::vector<std::vector<TransitionIndex>> in_;
  StateIndex initial_ = 0;
};

struct Run {
  StateIndex start = 0;
  std::vector<TransitionIndex> steps;

  bool empty() const { return steps.empty(); }
  std::size_t length() const { return steps.size(); }
  auto operator<=>(const Run&) const = default;
};

template <class L>
StateIndex run_end(const Fsa<L>& a, const Run& r) {
  return r.steps.empty() ? r.start : a.transition(r.steps.back()).target;
}

// States visited by a run, in order, including start.
template <class L>
std::vector<StateIndex> run_states(const Fsa<L>& a, const Run& r) {
  std::vector<StateIndex> v{r.start};
  for (auto t : r.steps) v.push_back(a.transition(t).target);
  return v;
}

template <class L>
std::vector<L> run_trace(const Fsa<L>& a, const Run& r) {
  std::vector<L> w;
  for (auto t : r.steps)
    if (a.transition(t).label) w.push_back(*a.transition(t).label);
  return w;
}

template <class L>
std::set<Run> runs_up_to(const Fsa<L>& a, StateIndex from, std::size_t k) {
  a.check_state(from);
  std::set<Run> out;
  std::vector<Run> frontier{Run{from, {}}};
  out.insert(frontier.front());
  for (std::size_t len = 0; len < k; ++len) {
    std::vector<Run> next;
    for (const auto& r : frontier)
      for (auto t : a.outgoing(run_end(a, r))) {
        Run e = r;
        e.steps.push_back(t);
        out.insert(e);
        next.push_back(std::move(e));
      }
    frontier = std::move(next);
  }
  return out;
}

template <class L>
std::set<StateIndex> eps_closure(const Fsa<L>& a, const std::set<StateIndex>& from) {
  std::set<StateIndex> seen;
  std::vector<StateIndex> stack;
  for (auto s : from) {
    a.check_state(s);
    if (seen.insert(s).second) stack.push_back(s);
  }
  while (!stack.empty()) {
    auto s = stack.back();
    stack.pop_back();
    for (auto t : a.outgoing(s)) {
      const auto& tr = a.transition(t);
      if (!tr.label && seen.insert(tr.target).second) stack.push_back(tr.target);
    }
  }
  return seen;
}

template <class L>
std::set<StateIndex> eps_closure(const Fsa<L>& a, StateIndex q) {
  return eps_closure(a, std::set<StateIndex>{q});
}

template <class L>
std::set<StateIndex> step_set(const Fsa<L>& a, const std::set<StateIndex>& from, const L& l) {
  std::set<StateIndex> r;
  for (auto s : from)
    for (auto t : a.outgoing(s)) {
      const auto& tr = a.transition(t);
      if (tr.label && *tr.label == l) r.insert(tr.target);
    }
  return r;
}

// Traces (epsilon elided) of length at most k from the initial state.
template <class L>
std::set<std::vector<L>> traces_up_to(const Fsa<L>& a, std::size_t k) {
  std::set<std::vector<L>> out;
  std::map<std::vector<L>, std::set<StateIndex>> frontier;
  frontier[{}] = eps_closure(a, a.initial());
  out.insert(std::vector<L>{});
  for (std::size_t len = 0; len < k; ++len) {
    std::map<std::vector<L>, std::set<StateIndex>> next;
    for (const auto& [w, states] : frontier) {
      std::set<L> labels;
      for (auto s : states)
        for (auto t : a.outgoing(s))
          if (a.transition(t).label) labels.insert(*a.transition(t).label);
      for (const auto& l : labels) {
        auto w2 = w;
        w2.push_back(l);
        next[w2] = eps_closure(a, step_set(a, states, l));
        out.insert(w2);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

template <class L>
bool is_deterministic(const Fsa<L>& a) {
  for (StateIndex s = 0; s < a.size(); ++s) {
    std::set<L> seen;
    for (auto t : a.outgoing(s)) {
      const auto& tr = a.transition(t);
      if (!tr.label || !seen.insert(*tr.label).second) return false;
    }
  }
  return true;
}

template <class L>
std::string set_name(const Fsa<L>& a, const std::set<StateIndex>& s) {
  std::vector<std::string> names;
  for (auto x : s) names.push_back(a.name(x));
  std::sort(names.begin(), names.end());
  std::string n = "{";
  for (std::size_t i = 0; i < names.size(); ++i) n += (i ? "," : "") + names[i];
  return n + "}";
}

template <class L>
std::vector<StateIndex> union_origin(const Fsa<L>& a, const std::set<StateIndex>& s) {
  std::vector<StateIndex> o;
  for (auto x : s) o.insert(o.end(), a.origin(x).begin(), a.origin(x).end());
  return o;
}

// Subset construction over epsilon-closed sets, reachable part only.
template <class L>
Fsa<L> determinize(const Fsa<L>& a) {
  Fsa<L> d;
  std::map<std::set<StateIndex>, StateIndex> ids;
  std::vector<std::set<StateIndex>> work;
  auto intern = [&](const std::set<StateIndex>& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    StateIndex n = d.add_state(set_name(a, s), union_origin(a, s));
    ids.emplace(s, n);
    work.push_back(s);
    return n;
  };
  d.set_initial(intern(eps_closure(a, a.initial())));
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto cur = work[i];
    StateIndex from = ids.at(cur);
    std::set<L> labels;
    for (auto s : cur)
      for (auto t : a.outgoing(s))
        if (a.transition(t).label) labels.insert(*a.transition(t).label);
    for (const auto& l : labels) {
      StateIndex to = intern(eps_closure(a, step_set(a, cur, l)));
      d.add_transition(from, l, to);
    }
  }
  return d;
}

// Moore partition refinement from one all-accepting block. Reachable part of
// the input only; merged states get the union of origins.
template <class L>
Fsa<L> minimize(const Fsa<L>& a) {
  if (!is_deterministic(a)) throw AutomatonError("minimize requires a deterministic epsilon-free automaton");
  std::vector<StateIndex> reach;
  {
    std::vector<bool> seen(a.size(), false);
    std::vector<StateIndex> st{a.initial()};
    seen[a.initial()] = true;
    while (!st.empty()) {
      auto s = st.back();
      st.pop_back();
      reach.push_back(s);
      for (auto t : a.outgoing(s)) {
        auto to = a.transition(t).target;
        if (!seen[to]) seen[to] = true, st.push_back(to);
      }
    }
    std::sort(reach.begin(), reach.end());
  }
  std::vector<std::size_t> block(a.size(), 0);
  std::size_t nblocks = 1;
  for (;;) {
    std::map<std::pair<std::size_t, std::set<std::pair<L, std::size_t>>>, std::size_t> sig;
    std::vector<std::size_t> nb(a.size(), 0);
    for (auto s : reach) {
      std::set<std::pair<L, std::size_t>> out;
      for (auto t : a.outgoing(s)) out.insert({*a.transition(t).label, block[a.transition(t).target]});
      auto key = std::make_pair(block[s], std::move(out));
      auto it = sig.find(key);
      if (it == sig.end()) it = sig.emplace(std::move(key), sig.size()).first;
      nb[s] = it->second;
    }
    bool stable = sig.size() == nblocks;
    block = std::move(nb);
    nblocks = sig.size();
    if (stable) break;
  }
  // Number blocks by first member in index order for stable output.
  std::map<std::size_t, std::vector<StateIndex>> members;
  for (auto s : reach) members[block[s]].push_back(s);
  std::vector<std::pair<StateIndex, std::size_t>> order;
  for (auto& [b, m] : members) order.push_back({m.front(), b});
  std::sort(order.begin(), order.end());
  Fsa<L> m;
  std::map<std::size_t, StateIndex> newid;
  for (auto& [first, b] : order) {
    const auto& mem = members[b];
    std::string n;
    if (mem.size() == 1) {
      n = a.name(mem.front());
    } else {
      std::vector<std::string> ns;
      for (auto s : mem) ns.push_back(a.name(s));
      std::sort(ns.begin(), ns.end());
      for (std::size_t i = 0; i < ns.size(); ++i) n += (i ? "|" : "") + ns[i];
    }
    newid[b] = m.add_state(n, union_origin(a, std::set<StateIndex>(mem.begin(), mem.end())));
  }
  m.set_initial(newid.at(block[a.initial()]));
  for (auto& [first, b] : order) {
    for (auto t : a.outgoing(first)) {
      const auto& tr = a.transition(t);
      m.add_transition(newid.at(b), tr.label, newid.at(block[tr.target]));
    }
  }
  return m;
}

// Keep only states reachable from the initial one.
template <class L>
Fsa<L> trim(const Fsa<L>& a) {
  std::vector<long> map(a.size(), -1);
  std::vector<StateIndex> order{a.initial()};
  map[a.initial()] = 0;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (auto t : a.outgoing(order[i])) {
      auto to = a.transition(t).target;
      if (map[to] < 0) map[to] = static_cast<long>(order.size()), order.push_back(to);
    }
  Fsa<L> r;
  for (auto s : order) r.add_state(a.name(s), a.origin(s));
  r.set_initial(0);
  for (auto s : order)
    for (auto t : a.outgoing(s)) {
      const auto& tr = a.transition(t);
      r.add_transition(static_cast<StateIndex>(map[s]), tr.label, static_cast<StateIndex>(map[tr.target]));
    }
  return r;
}

// Removes epsilon transitions. When every epsilon is the sole outgoing
// transition of its source, the source is bypassed (edges into it are
// redirected to the end of its epsilon chain) so the remaining states keep
// their identity. Otherwise the standard closure-based removal is used.
template <class L>
Fsa<L> remove_epsilon(const Fsa<L>& a) {
  bool simple = true;
  for (StateIndex s = 0; s < a.size(); ++s)
    for (auto t : a.outgoing(s))
      if (!a.transition(t).label && a.outgoing(s).size() != 1) simple = false;
  if (simple) {
    std::vector<StateIndex> dest(a.size());
    for (StateIndex s = 0; s < a.size(); ++s) {
      StateIndex cur = s;
      std::set<StateIndex> seen{cur};
      while (a.outgoing(cur).size() == 1 && !a.transition(a.outgoing(cur).front()).label) {
        cur = a.transition(a.outgoing(cur).front()).target;
        if (!seen.insert(cur).second) break;
      }
      if (a.outgoing(cur).size() == 1 && !a.transition(a.outgoing(cur).front()).label) {
        simple = false;  // pure epsilon cycle
        break;
      }
      dest[s] = cur;
    }
    if (simple) {
      Fsa<L> r;
      for (StateIndex s = 0; s < a.size(); ++s) r.add_state(a.name(s), a.origin(s));
      r.set_initial(dest[a.initial()]);
      for (const auto& t : a.transitions())
        if (t.label) r.add_transition(t.source, t.label, dest[t.target]);
      return trim(r);
    }
  }
  Fsa<L> r;
  for (StateIndex s = 0; s < a.size(); ++s) r.add_state(a.name(s), a.origin(s));
  r.set_initial(a.initial());
  for (StateIndex s = 0; s < a.size(); ++s) {
    std::set<std::pair<L, StateIndex>> added;
    for (auto c : eps_closure(a, s))
      for (auto t : a.outgoing(c)) {
        const auto& tr = a.transition(t);
        if (tr.label && added.insert({*tr.label, tr.target}).second) r.add_transition(s, tr.label, tr.target);
      }
  }
  return trim(r);
}

// Structural isomorphism for deterministic automata (labels must match).
template <class L>
bool isomorphic(const Fsa<L>& a, const Fsa<L>& b) {
  if (a.size() != b.size() || a.transitions().size() != b.transitions().size()) return false;
  std::map<StateIndex, StateIndex> f, g;
  std::vector<std::pair<StateIndex, StateIndex>> work{{a.initial(), b.initial()}};
  f[a.initial()] = b.initial();
  g[b.initial()] = a.initial();
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto [x, y] = work[i];
    std::multiset<std::optional<L>> la, lb;
    for (auto t : a.outgoing(x)) la.insert(a.transition(t).label);
    for (auto t : b.outgoing(y)) lb.insert(b.transition(t).label);
    if (la != lb) return false;
    for (auto t : a.outgoing(x)) {
      const auto& ta = a.transition(t);
      std::optional<StateIndex> match;
      std::size_t count = 0;
      for (auto u : b.outgoing(y))
        if (b.transition(u).label == ta.label) match = b.transition(u).target, ++count;
      if (count != 1) return false;
      auto it = f.find(ta.target);
      auto jt = g.find(*match);
      if (it == f.end() && jt == g.end()) {
        f[ta.target] = *match;
        g[*match] = ta.target;
        work.push_back({ta.target, *match});
      } else if (it == f.end() || jt == g.end() || it->second != *match) {
        return false;
      }
    }
  }
  return f.size() == a.size();
}

}  // namespace chorc
