#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chorc/globaltypes/global_type.hpp"

namespace chorc {

struct SourcePos {
  std::size_t line = 1;
  std::size_t col = 1;
};

class ProtocolParseError : public std::runtime_error {
 public:
  ProtocolParseError(const std::string& msg, SourcePos pos)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + msg), pos(pos) {}
  SourcePos pos;
};

struct MessageSignature {
  Interaction inter;
  Payload payload;
  std::string refinement;  // source text, empty when absent
};

struct ProtocolDecl {
  std::string name;
  std::vector<Participant> roles;
  GlobalType body;
  std::vector<std::string> pragmas;
  bool refinements = false;  // RefinementTypes pragma present
  std::vector<MessageSignature> messages;
};

// global protocol Name(role A, role B, ...) { statements }
//   m(x: int{x > 0}, y: string) from A to B;
//   choice at A { ... } or { ... }
//   rec L [x<A, B>: int{inv} = e] { ... }   continue L [e];
// Statements after a choice or rec block continue every branch that ends
// without continue. Refinements and rec parameters need the RefinementTypes
// pragma.
ProtocolDecl parse_protocol(const std::string& text);

}  // namespace chorc
