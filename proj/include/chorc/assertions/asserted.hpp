#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chorc/assertions/predicate.hpp"
#include "chorc/assertions/solver.hpp"
#include "chorc/choreography/c_automaton.hpp"

namespace chorc {

struct TypedVar {
  std::string name;
  Sort sort = Sort::Int;
  auto operator<=>(const TypedVar&) const = default;
};

using Payload = std::vector<TypedVar>;

std::string to_string(const Payload& p);
// Throws std::invalid_argument on repeated names.
void check_payload(const Payload& p);

// An interaction p->q:m(payload) or an iteration <r, iota>, with its assertion.
// Comparison goes through a printed key computed at construction.
class AssertedLabel {
 public:
  enum class Kind { Interaction, Iteration };

  AssertedLabel() = default;
  static AssertedLabel interaction(Interaction i, Payload payload = {}, Pred assertion = top());
  static AssertedLabel iteration(std::string rec, Subst iota, Pred assertion = top());

  Kind kind() const { return kind_; }
  bool is_iteration() const { return kind_ == Kind::Iteration; }
  const Interaction& inter() const { return inter_; }
  const Payload& payload() const { return payload_; }
  const std::string& rec() const { return rec_; }
  const Subst& iota() const { return iota_; }
  const Pred& assertion() const { return assertion_; }
  const std::string& key() const { return key_; }
  // The label without its assertion.
  std::string action_key() const;

  bool operator==(const AssertedLabel& o) const { return key_ == o.key_; }
  bool operator<(const AssertedLabel& o) const { return key_ < o.key_; }

 private:
  void finish();
  Kind kind_ = Kind::Interaction;
  Interaction inter_;
  Payload payload_;
  std::string rec_;
  Subst iota_;
  Pred assertion_ = top();
  std::string key_;
};

struct RecEntry {
  Payload params;
  Pred invariant = top();
  StateIndex anchor = 0;
};

struct AssertedCA {
  Fsa<AssertedLabel> fsa;
  std::map<std::string, RecEntry> rho;
  ParticipantSet participants;

  const RecEntry& rec(const std::string& r) const;
};

ParticipantSet participants_of(const AssertedLabel& l);
ParticipantSet participants_of(const AssertedCA& a, const Run& r);

// fv(t): payload variables of an interaction, parameters of an iteration.
Payload fixed_candidates(const AssertedCA& a, TransitionIndex t);

// Interactions only; iteration transitions become epsilon. States are kept.
Fsa<Interaction> strip_with_epsilon(const AssertedCA& a);
// As above with the epsilon transitions removed.
CAutomaton strip(const AssertedCA& a);

struct PathAssertion {
  Pred phi;
  Subst iota;
};
PathAssertion path_assertion(const AssertedCA& a, const Run& r);

std::vector<Run> simple_paths_to(const AssertedCA& a, StateIndex q, std::size_t cap = 100000);

// Memoized "t fixes x" over simple paths from the initial state.
class FixAnalysis {
 public:
  explicit FixAnalysis(const AssertedCA& a) : a_(a) {}
  bool fixes(TransitionIndex t, const std::string& x);
  const std::vector<Run>& simple_paths(StateIndex q);

 private:
  const AssertedCA& a_;
  std::map<StateIndex, std::vector<Run>> paths_;
  std::map<std::pair<TransitionIndex, std::string>, int> memo_;  // -1 while in progress
};

bool fixes_variable(const AssertedCA& a, TransitionIndex t, const std::string& x);

WfReport respects_context(const AssertedCA& a);
WfReport is_asserted_ca(const AssertedCA& a, std::size_t cap = kDefaultBranchCap);

// Lookups are memoized per instance; a lookup that is still in progress
// counts as not known.
class Knowledge {
 public:
  Knowledge(const AssertedCA& a, SolverPort& solver) : a_(a), solver_(solver), fix_(a) {}
  bool knows(const Participant& p, const std::string& x, TransitionIndex t);
  std::set<std::string> kn(const Participant& p, TransitionIndex t);

 private:
  const AssertedCA& a_;
  SolverPort& solver_;
  FixAnalysis fix_;
  std::map<std::tuple<Participant, std::string, TransitionIndex>, int> memo_;  // -1 in progress
};

// Participants of the transitions on some cycle through q.
ParticipantSet cycle_participants(const AssertedCA& a, StateIndex q);

WfReport history_sensitive(const AssertedCA& a, SolverPort& solver);

struct Precondition {
  Pred phi;
  Subst iota;
  Run run;
};

inline constexpr std::size_t kDefaultUnfold = 1;

// Runs from the initial state visiting each state at most k+1 times, with
// satisfiable path assertion, grouped by their last state.
std::map<StateIndex, std::vector<Precondition>> all_preconditions(const AssertedCA& a, std::size_t k,
                                                                   SolverPort& solver, std::size_t cap = 200000);
std::vector<Precondition> preconditions(const AssertedCA& a, StateIndex q, std::size_t k, SolverPort& solver);

WfReport temporally_satisfiable(const AssertedCA& a, std::size_t k, SolverPort& solver);
WfReport consistent(const AssertedCA& a, std::size_t k, SolverPort& solver);

std::string describe(const AssertedCA& a, const Witness& w);

}  // namespace chorc
