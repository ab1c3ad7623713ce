#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chorc/choreography/interaction.hpp"
#include "chorc/core/fsa.hpp"

namespace chorc {

struct Witness {
  std::string check;   // e.g. "well-sequenced"
  std::string clause;  // e.g. "b-guard"
  std::string message;
  std::optional<StateIndex> state;
  std::vector<TransitionIndex> transitions;
  std::optional<Participant> participant;
  std::optional<Participant> partner;
  std::vector<std::vector<TransitionIndex>> runs;
  std::optional<std::string> variable;
};

struct WfReport {
  bool pass = true;
  std::vector<Witness> witnesses;

  void fail(Witness w) {
    pass = false;
    witnesses.push_back(std::move(w));
  }
  void merge(const WfReport& o) {
    pass = pass && o.pass;
    witnesses.insert(witnesses.end(), o.witnesses.begin(), o.witnesses.end());
  }
};

}  // namespace chorc
