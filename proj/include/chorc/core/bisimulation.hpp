#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "chorc/core/fsa.hpp"

namespace chorc {

template <class L>
struct BisimResult {
  bool bisimilar = false;
  // Pairs (a-state, b-state); the relation is its symmetric closure.
  std::set<std::pair<StateIndex, StateIndex>> relation;
  // On failure: a pair and an optional label (absent = epsilon challenge)
  // one side can do but the other cannot match.
  std::optional<std::pair<StateIndex, StateIndex>> failing_pair;
  std::optional<L> failing_label;
  bool failing_from_a = true;
};

namespace detail {

// Moves of a state, as (label, target); for weak mode labels are weak steps
// and the epsilon move includes the reflexive step.
template <class L>
using Moves = std::map<std::optional<L>, std::set<StateIndex>>;

template <class L>
std::vector<Moves<L>> strong_moves(const Fsa<L>& a) {
  std::vector<Moves<L>> m(a.size());
  for (const auto& t : a.transitions()) m[t.source][t.label].insert(t.target);
  return m;
}

template <class L>
std::vector<Moves<L>> weak_moves(const Fsa<L>& a) {
  std::vector<std::set<StateIndex>> clo(a.size());
  for (StateIndex s = 0; s < a.size(); ++s) clo[s] = eps_closure(a, s);
  std::vector<Moves<L>> m(a.size());
  for (StateIndex s = 0; s < a.size(); ++s) {
    m[s][std::nullopt] = clo[s];
    for (auto c : clo[s])
      for (auto t : a.outgoing(c)) {
        const auto& tr = a.transition(t);
        if (!tr.label) continue;
        auto& dst = m[s][tr.label];
        dst.insert(clo[tr.target].begin(), clo[tr.target].end());
      }
  }
  return m;
}

// Challenge moves: strong moves for strong bisimulation; in weak mode the
// challenger uses its single steps (the standard weak clauses), the defender
// answers with weak steps.
template <class L>
BisimResult<L> greatest_bisimulation(const Fsa<L>& a, const Fsa<L>& b, const std::vector<Moves<L>>& cha,
                                     const std::vector<Moves<L>>& chb, const std::vector<Moves<L>>& dfa,
                                     const std::vector<Moves<L>>& dfb) {
  using P = std::pair<StateIndex, StateIndex>;
  std::set<P> cand;
  std::vector<P> work{{a.initial(), b.initial()}};
  cand.insert(work.front());
  // Pairs reachable by challenge/defence moves with equal labels.
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto [x, y] = work[i];
    auto add = [&](StateIndex p, StateIndex q) {
      if (cand.insert({p, q}).second) work.push_back({p, q});
    };
    for (const auto& [l, ts] : cha[x]) {
      auto it = dfb[y].find(l);
      if (it == dfb[y].end()) continue;
      for (auto p : ts)
        for (auto q : it->second) add(p, q);
    }
    for (const auto& [l, ts] : chb[y]) {
      auto it = dfa[x].find(l);
      if (it == dfa[x].end()) continue;
      for (auto q : ts)
        for (auto p : it->second) add(p, q);
    }
  }
  struct Fail {
    std::optional<L> label;
    bool from_a;
  };
  auto check = [&](const P& pr) -> std::optional<Fail> {
    auto [x, y] = pr;
    for (const auto& [l, ts] : cha[x]) {
      auto it = dfb[y].find(l);
      for (auto p : ts) {
        bool ok = false;
        if (it != dfb[y].end())
          for (auto q : it->second)
            if (cand.count({p, q})) {
              ok = true;
              break;
            }
        if (!ok) return Fail{l, true};
      }
    }
    for (const auto& [l, ts] : chb[y]) {
      auto it = dfa[x].find(l);
      for (auto q : ts) {
        bool ok = false;
        if (it != dfa[x].end())
          for (auto p : it->second)
            if (cand.count({p, q})) {
              ok = true;
              break;
            }
        if (!ok) return Fail{l, false};
      }
    }
    return std::nullopt;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = cand.begin(); it != cand.end();) {
      if (check(*it)) {
        it = cand.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  BisimResult<L> r;
  P init{a.initial(), b.initial()};
  if (cand.count(init)) {
    r.bisimilar = true;
    r.relation = std::move(cand);
    return r;
  }
  r.failing_pair = init;
  // Re-run the check against the final relation to name the label.
  auto f = check(init);
  if (f) {
    r.failing_label = f->label;
    r.failing_from_a = f->from_a;
  }
  return r;
}

}  // namespace detail

template <class L>
BisimResult<L> strong_bisimilar(const Fsa<L>& a, const Fsa<L>& b) {
  auto ma = detail::strong_moves(a);
  auto mb = detail::strong_moves(b);
  return detail::greatest_bisimulation(a, b, ma, mb, ma, mb);
}

template <class L>
BisimResult<L> weak_bisimilar(const Fsa<L>& a, const Fsa<L>& b) {
  auto sa = detail::strong_moves(a);
  auto sb = detail::strong_moves(b);
  auto wa = detail::weak_moves(a);
  auto wb = detail::weak_moves(b);
  return detail::greatest_bisimulation(a, b, sa, sb, wa, wb);
}

}  // namespace chorc
