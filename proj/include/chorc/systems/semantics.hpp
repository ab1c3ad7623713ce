#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chorc/choreography/projection.hpp"

namespace chorc {

inline constexpr std::size_t kDefaultConfigCap = 1000000;

using Configuration = std::map<Participant, StateIndex>;

struct Product {
  CAutomaton automaton;
  std::vector<Participant> order;  // sorted participant names
  std::vector<std::vector<StateIndex>> configs;

  Configuration configuration(StateIndex s) const;
};

Product sync_semantics(const System& s, std::size_t cap = kDefaultConfigCap);

std::vector<Configuration> deadlocks(const System& s, const Product& prod);
std::vector<Configuration> deadlocks(const System& s);

std::vector<Configuration> locks(const System& s, const Product& prod, const Participant& p,
                                 std::size_t branch_cap = kDefaultBranchCap);
std::vector<Configuration> locks(const System& s, const Participant& p);

struct ProjectionReport {
  bool bisimilar = false;
  bool bounded_trace_equal = false;
  std::size_t k = 0;
  std::size_t configurations = 0;
  // Shortest trace in exactly one of the two languages, and which side has it.
  std::optional<std::vector<Interaction>> witness;
  bool witness_in_product = false;
};

ProjectionReport validate_projection(const CAutomaton& a, std::size_t k = 12);
ProjectionReport compare_with_product(const CAutomaton& a, const Product& prod, std::size_t k);

std::string to_string(const Configuration& c, const System& s);

}  // namespace chorc
