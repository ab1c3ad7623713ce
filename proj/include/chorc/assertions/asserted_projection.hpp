#pragma once

#include <map>
#include <string>
#include <vector>

#include "chorc/assertions/asserted.hpp"
#include "chorc/systems/semantics.hpp"

namespace chorc {

// A local action (or epsilon) with payload and assertion.
class LocalLabel {
 public:
  LocalLabel() = default;
  static LocalLabel epsilon(Pred assertion = top());
  static LocalLabel action(Action a, Payload payload = {}, Pred assertion = top());

  bool is_epsilon() const { return eps_; }
  const Action& act() const { return act_; }
  const Payload& payload() const { return payload_; }
  const Pred& assertion() const { return assertion_; }
  const std::string& key() const { return key_; }
  // Action and payload sorts; labels equal up to renaming share it.
  std::string shape() const;
  LocalLabel with_assertion(Pred a) const;

  bool operator==(const LocalLabel& o) const { return key_ == o.key_; }
  bool operator<(const LocalLabel& o) const { return key_ < o.key_; }

 private:
  void finish();
  bool eps_ = true;
  Action act_;
  Payload payload_;
  Pred assertion_ = top();
  std::string key_;
};

struct AssertedCfsm {
  Participant owner;
  Fsa<LocalLabel> fsa;
  std::vector<bool> final;

  bool is_final(StateIndex s) const;
};

struct AssertedSystem {
  std::map<Participant, AssertedCfsm> machines;
};

// Rename b's payload variables to a's, positionally.
Pred rename_payload(const Pred& p, const Payload& from, const Payload& to);

bool label_equivalent(const LocalLabel& a, const LocalLabel& b, SolverPort& solver);

struct ClosureEntry {
  StateIndex state;
  Pred assertion;
};

inline constexpr std::size_t kDefaultRevisitCap = 64;
inline constexpr std::size_t kDefaultDerivativeCap = 12;

std::vector<ClosureEntry> asserted_eps_closure(const Fsa<LocalLabel>& m, StateIndex q, SolverPort& solver,
                                               std::size_t revisit_cap = kDefaultRevisitCap);
Fsa<LocalLabel> asserted_remove_epsilon(const Fsa<LocalLabel>& m, SolverPort& solver,
                                        std::size_t revisit_cap = kDefaultRevisitCap);
Fsa<LocalLabel> asserted_determinize(const Fsa<LocalLabel>& m, SolverPort& solver,
                                     std::size_t derivative_cap = kDefaultDerivativeCap);
Fsa<LocalLabel> asserted_minimize(const Fsa<LocalLabel>& m, SolverPort& solver);

Fsa<LocalLabel> intermediate_asserted_cfsm(const AssertedCA& a, const Participant& p);
AssertedCfsm project_asserted(const AssertedCA& a, const Participant& p, SolverPort& solver,
                              std::size_t cap = kDefaultBranchCap);
AssertedSystem project_asserted_all(const AssertedCA& a, SolverPort& solver, std::size_t cap = kDefaultBranchCap);

// The machine with assertions dropped (epsilon kept as epsilon).
Fsa<Action> strip(const AssertedCfsm& m);

// Assertions of bounded runs of a machine, composed with o.
std::map<StateIndex, std::vector<Pred>> local_preconditions(const Fsa<LocalLabel>& m, std::size_t k,
                                                            SolverPort& solver, std::size_t cap = 200000);

struct AssertedProduct {
  Fsa<AssertedLabel> automaton;
  std::vector<Participant> order;
  std::vector<std::vector<StateIndex>> configs;

  Configuration configuration(StateIndex s) const;
  Fsa<Interaction> interactions() const;
};

AssertedProduct asserted_sync_semantics(const AssertedSystem& s, SolverPort& solver, std::size_t k = kDefaultUnfold,
                                        std::size_t cap = kDefaultConfigCap);
std::vector<Configuration> asserted_deadlocks(const AssertedSystem& s, const AssertedProduct& prod);

}  // namespace chorc
