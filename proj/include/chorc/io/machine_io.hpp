#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "chorc/assertions/asserted.hpp"
#include "chorc/assertions/asserted_projection.hpp"
#include "chorc/choreography/c_automaton.hpp"
#include "chorc/choreography/projection.hpp"

namespace chorc {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmitMeta {
  std::string protocol;
  std::optional<std::string> role;
  bool unverified = false;
};

// { schemaVersion, protocol, role?, states:[{id, final}], initial,
//   transitions:[{from, to, label}] }. Keys come out sorted.
// Global automata mark states without outgoing transitions as final.
Json to_json(const CAutomaton& a, const EmitMeta& meta);
Json to_json(const AssertedCA& a, const EmitMeta& meta);
Json to_json(const Cfsm& m, const EmitMeta& meta);
Json to_json(const AssertedCfsm& m, const EmitMeta& meta);

std::string dump(const Json& j);

CAutomaton load_c_automaton(const Json& j);
AssertedCA load_asserted_ca(const Json& j);
Cfsm load_cfsm(const Json& j);
AssertedCfsm load_asserted_cfsm(const Json& j);
// True when some label carries an assertion, a payload or an iteration.
bool has_assertions(const Json& j);

std::string to_dot(const CAutomaton& a, const EmitMeta& meta);
std::string to_dot(const AssertedCA& a, const EmitMeta& meta);
std::string to_dot(const Cfsm& m, const EmitMeta& meta);
std::string to_dot(const AssertedCfsm& m, const EmitMeta& meta);

std::string read_file(const std::filesystem::path& p);
// Writes to a temporary file in the same directory, then renames.
void write_atomic(const std::filesystem::path& p, const std::string& content);

}  // namespace chorc
