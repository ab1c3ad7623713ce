#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chorc/assertions/asserted_projection.hpp"
#include "chorc/choreography/projection.hpp"

namespace chorc {

struct SkeletonOptions {
  std::string protocol;
  std::optional<std::string> server;
  std::string template_name = "ts";
  bool unverified = false;
};

// Payload of a message when the machine itself carries none.
using PayloadLookup = std::function<Payload(const Action&)>;

// One interface per state: emit functions for sends, handlers for receives,
// and a completion hook on final or terminal states.
std::string skeleton(const Cfsm& m, const SkeletonOptions& opt, const PayloadLookup& payload = {});
std::string skeleton(const AssertedCfsm& m, const SkeletonOptions& opt);

std::vector<std::string> skeleton_templates();
// File extension for a template, without the dot. Throws on unknown names.
std::string skeleton_extension(const std::string& template_name);

}  // namespace chorc
