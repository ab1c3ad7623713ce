#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorc/assertions/asserted.hpp"
#include "chorc/choreography/c_automaton.hpp"
#include "chorc/globaltypes/global_type.hpp"

namespace chorc {

class StateCapExceeded : public CapExceeded {
 public:
  StateCapExceeded(const std::string& msg, std::size_t cap, std::string family)
      : CapExceeded(msg), cap(cap), family(std::move(family)) {}
  std::size_t cap;
  std::string family;
};

inline constexpr std::size_t kDefaultStateCap = 10000;

// States are subterms, recursion goes through epsilon edges.
CAutomaton translate(const GlobalType& g);
// Also adds the commuting transitions of independent interactions.
CAutomaton translate_with_pass(const GlobalType& g, std::size_t cap = kDefaultStateCap);
// Rec headers and continue statements become iteration transitions.
AssertedCA translate_asserted(const GlobalType& g);

// Printed subterm of each state, by state index.
std::vector<std::string> state_terms(const GlobalType& g, bool pass = false, std::size_t cap = kDefaultStateCap);

// Collapses epsilon transitions so well-formedness checks apply.
CAutomaton contract(const CAutomaton& a);

struct TranslationReport {
  bool equal = true;
  std::size_t k = 0;
  std::size_t traces = 0;
  std::optional<std::vector<Interaction>> only_automaton;
  std::optional<std::vector<Interaction>> only_semantics;
};

TranslationReport validate_translation(const GlobalType& g, std::size_t k, bool pass = false,
                                       std::size_t cap = kDefaultStateCap);

}  // namespace chorc
