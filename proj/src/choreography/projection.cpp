#include "chorc/choreography/projection.hpp"

namespace chorc {

bool Cfsm::is_final(StateIndex s) const {
  if (final.empty()) throw AutomatonError("final states of " + owner.name + " not computed (missing provenance)");
  return final.at(s);
}

bool Cfsm::is_local() const {
  for (const auto& t : fsa.transitions())
    if (t.label && t.label->subject() != owner) return false;
  return true;
}

Fsa<Action> intermediate_cfsm(const CAutomaton& a, const Participant& p) {
  Fsa<Action> m;
  for (StateIndex s = 0; s < a.fsa.size(); ++s) m.add_state(a.fsa.name(s));
  m.set_initial(a.fsa.initial());
  for (const auto& t : a.fsa.transitions()) {
    std::optional<Action> l;
    if (t.label && t.label->sender == p) l = Action{ActionKind::Send, t.label->sender, t.label->receiver, t.label->message};
    if (t.label && t.label->receiver == p)
      l = Action{ActionKind::Receive, t.label->sender, t.label->receiver, t.label->message};
    m.add_transition(t.source, l, t.target);
  }
  return m;
}

std::set<StateIndex> final_states(const CAutomaton& a, const Participant& p, const Cfsm& m, std::size_t cap) {
  if (!m.has_provenance) throw AutomatonError("machine for " + p.name + " has no provenance");
  std::map<StateIndex, bool> memo;
  auto free_of_p = [&](StateIndex q) {
    auto it = memo.find(q);
    if (it != memo.end()) return it->second;
    bool r = false;
    for (const auto& c : candidate_branches(a.fsa, q, cap))
      if (!participants_of(a.fsa, c).count(p)) {
        r = true;
        break;
      }
    memo[q] = r;
    return r;
  };
  std::set<StateIndex> out;
  for (StateIndex s = 0; s < m.fsa.size(); ++s)
    for (auto q : m.fsa.origin(s))
      if (free_of_p(q)) {
        out.insert(s);
        break;
      }
  return out;
}

Cfsm project_participant(const CAutomaton& a, const Participant& p, std::size_t cap) {
  if (!a.participants.count(p)) throw AutomatonError("unknown participant " + p.name);
  Cfsm m;
  m.owner = p;
  m.fsa = canonical_order(minimize(determinize(intermediate_cfsm(a, p))));
  m.has_provenance = true;
  auto fin = final_states(a, p, m, cap);
  m.final.assign(m.fsa.size(), false);
  for (auto s : fin) m.final[s] = true;
  return m;
}

System project(const CAutomaton& a, std::size_t cap) {
  if (a.participants.empty()) throw AutomatonError("c-automaton has no participants");
  System s;
  for (const auto& p : a.participants) s.machines.emplace(p, project_participant(a, p, cap));
  return s;
}

}  // namespace chorc
