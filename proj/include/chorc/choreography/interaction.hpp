#pragma once

#include <compare>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

namespace chorc {

struct Participant {
  std::string name;

  Participant() = default;
  Participant(std::string n) : name(std::move(n)) {}
  Participant(const char* n) : name(n) {}
  auto operator<=>(const Participant&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Participant& p) { return os << p.name; }

using ParticipantSet = std::set<Participant>;

// p -> q : m
struct Interaction {
  Participant sender;
  Participant receiver;
  std::string message;

  Interaction() = default;
  Interaction(Participant s, Participant r, std::string m)
      : sender(std::move(s)), receiver(std::move(r)), message(std::move(m)) {
    if (sender.name.empty() || receiver.name.empty()) throw std::invalid_argument("empty participant name");
    if (sender == receiver) throw std::invalid_argument("interaction with sender == receiver: " + sender.name);
  }
  auto operator<=>(const Interaction&) const = default;

  std::string to_string() const { return sender.name + "->" + receiver.name + ":" + message; }
};

inline std::ostream& operator<<(std::ostream& os, const Interaction& i) { return os << i.to_string(); }

inline ParticipantSet participants_of(const Interaction& i) { return {i.sender, i.receiver}; }

inline bool independent(const Interaction& a, const Interaction& b) {
  return a.sender != b.sender && a.sender != b.receiver && a.receiver != b.sender && a.receiver != b.receiver;
}

enum class ActionKind { Send, Receive };

// pq!m (subject p) or pq?m (subject q)
struct Action {
  ActionKind kind = ActionKind::Send;
  Participant sender;
  Participant receiver;
  std::string message;

  auto operator<=>(const Action&) const = default;

  const Participant& subject() const { return kind == ActionKind::Send ? sender : receiver; }
  Interaction interaction() const { return {sender, receiver, message}; }
  std::string to_string() const {
    return sender.name + receiver.name + (kind == ActionKind::Send ? "!" : "?") + message;
  }
};

inline std::ostream& operator<<(std::ostream& os, const Action& a) { return os << a.to_string(); }

}  // namespace chorc
