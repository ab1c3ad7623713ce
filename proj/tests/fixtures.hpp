#pragma once

#include <random>
#include <string>

#include "chorc/assertions/asserted.hpp"
#include "chorc/choreography/c_automaton.hpp"

namespace fixtures {

// Online wallet (running example).
chorc::CAutomaton olw();
// Consecutive independent interactions entangled with a choice at q1/q2.
chorc::CAutomaton diamond_counterexample();
// A->B l/r, B->C n, C->D l/r.
chorc::CAutomaton ex38();
chorc::CAutomaton selective_counterexample();
// ex38 plus C->A l/r; optionally the C->D self-loops at q3 and q7.
chorc::CAutomaton ex311(bool dashed);
// premium / basic / upgrade.
chorc::CAutomaton fig2();

// Random c-automaton biased towards well-formed shapes.
chorc::CAutomaton random_c_automaton(std::mt19937& rng, std::size_t max_states = 6);

// Builds asserted c-automata; states are created on first mention, the first
// one is initial. Predicates are parsed against every variable declared so far.
struct AssertedBuilder {
  chorc::AssertedCA a;
  std::map<std::string, chorc::Sort> env;

  chorc::StateIndex state(const std::string& n);
  AssertedBuilder& inter(const std::string& from, const std::string& s, const std::string& r, const std::string& m,
                         const chorc::Payload& payload, const std::string& pred, const std::string& to);
  AssertedBuilder& rec(const std::string& name, const chorc::Payload& params, const std::string& inv,
                       const std::string& anchor);
  AssertedBuilder& iter(const std::string& from, const std::string& rec,
                        const std::map<std::string, std::string>& iota, const std::string& to);
  chorc::Pred pred(const std::string& text) const;
};

// The authentication loop with iteration transitions; the loginDenied guard
// can be replaced.
chorc::AssertedCA asserted_olw(const std::string& denied = "try >= 3 && msg = \"fail\"", bool with_ok = true);
// x fixed as bool on one branch and as int on the other.
chorc::AssertedCA confusion();
// The payload-annotated wallet without iterations.
chorc::AssertedCA olw_payloads();

std::string protocol_path(const std::string& file);
std::string read_file(const std::string& path);

}  // namespace fixtures
