#pragma once

#include <map>
#include <set>
#include <vector>

#include "chorc/choreography/c_automaton.hpp"

namespace chorc {

struct Cfsm {
  Participant owner;
  Fsa<Action> fsa;
  // The Fsa origin sets are source c-automaton states when true.
  bool has_provenance = false;
  // Per-state finality; empty when not computed.
  std::vector<bool> final;

  bool is_final(StateIndex s) const;
  bool is_local() const;
};

struct System {
  std::map<Participant, Cfsm> machines;
};

// Renames states to Q0..Qn in breadth-first order following sorted labels.
template <class L>
Fsa<L> canonical_order(const Fsa<L>& a, const std::string& prefix = "Q") {
  std::vector<long> idx(a.size(), -1);
  std::vector<StateIndex> order{a.initial()};
  idx[a.initial()] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto out = a.outgoing(order[i]);
    std::stable_sort(out.begin(), out.end(), [&](TransitionIndex x, TransitionIndex y) {
      return a.transition(x).label < a.transition(y).label;
    });
    for (auto t : out) {
      auto to = a.transition(t).target;
      if (idx[to] < 0) idx[to] = static_cast<long>(order.size()), order.push_back(to);
    }
  }
  Fsa<L> r;
  for (std::size_t i = 0; i < order.size(); ++i) r.add_state(prefix + std::to_string(i), a.origin(order[i]));
  r.set_initial(0);
  for (auto s : order) {
    auto out = a.outgoing(s);
    std::stable_sort(out.begin(), out.end(), [&](TransitionIndex x, TransitionIndex y) {
      const auto& tx = a.transition(x);
      const auto& ty = a.transition(y);
      if (tx.label != ty.label) return tx.label < ty.label;
      return idx[tx.target] < idx[ty.target];
    });
    for (auto t : out) {
      const auto& tr = a.transition(t);
      r.add_transition(static_cast<StateIndex>(idx[s]), tr.label, static_cast<StateIndex>(idx[tr.target]));
    }
  }
  return r;
}

// Homomorphic label projection, no determinization.
Fsa<Action> intermediate_cfsm(const CAutomaton& a, const Participant& p);

Cfsm project_participant(const CAutomaton& a, const Participant& p, std::size_t cap = kDefaultBranchCap);
System project(const CAutomaton& a, std::size_t cap = kDefaultBranchCap);

// Final states of a projected machine carrying provenance.
std::set<StateIndex> final_states(const CAutomaton& a, const Participant& p, const Cfsm& m,
                                  std::size_t cap = kDefaultBranchCap);

}  // namespace chorc
