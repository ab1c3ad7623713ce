#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chorc/choreography/branches.hpp"
#include "chorc/choreography/interaction.hpp"
#include "chorc/choreography/report.hpp"
#include "chorc/core/fsa.hpp"

namespace chorc {

struct CAutomaton {
  Fsa<Interaction> fsa;
  ParticipantSet participants;

  CAutomaton() = default;
  // Participants default to those occurring in transitions.
  explicit CAutomaton(Fsa<Interaction> a, std::optional<ParticipantSet> declared = std::nullopt);
};

ParticipantSet participants_of(const Fsa<Interaction>& a, TransitionIndex t);
ParticipantSet participants_of(const Fsa<Interaction>& a, const Run& r);
ParticipantSet participants_of(const CAutomaton& a);

// Builds a c-automaton from "src sender receiver message dst" rows, creating
// states by name in order of first appearance; the first row's source is
// initial unless `initial` is given.
struct Edge {
  std::string from;
  std::string sender;
  std::string receiver;
  std::string message;
  std::string to;
};
CAutomaton make_c_automaton(const std::vector<Edge>& edges, const std::string& initial = "",
                            const std::vector<std::string>& extra_states = {});

// t1 then t2 with disjoint participants, and t2 then t1 also possible.
bool concurrent(const CAutomaton& a, TransitionIndex t1, TransitionIndex t2);

WfReport well_sequenced(const CAutomaton& a);

// Projection of a run's trace onto a participant, as actions.
std::vector<Action> project_trace(const Fsa<Interaction>& a, const std::vector<TransitionIndex>& steps,
                                  const Participant& p);

// Runs are q-runs from a common state.
bool fully_aware(const CAutomaton& a, const Participant& p, const Run& r1, const Run& r2);

struct Partition {
  std::vector<std::vector<TransitionIndex>> classes;
  bool ok = true;  // every class has a common participant
  std::vector<std::size_t> bad_classes;
};

Partition transition_partition(const CAutomaton& a, StateIndex q);

struct WbOptions {
  std::size_t cap = kDefaultBranchCap;
};

WfReport deterministic_check(const CAutomaton& a);
WfReport well_branched(const CAutomaton& a, const WbOptions& opt = {});
WfReport well_formed(const CAutomaton& a, const WbOptions& opt = {});

std::string describe(const CAutomaton& a, const Witness& w);

}  // namespace chorc
