#pragma once

#include <map>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chorc/assertions/asserted.hpp"
#include "chorc/choreography/interaction.hpp"

namespace chorc {

class GlobalTypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GNode;
using GlobalType = std::shared_ptr<const GNode>;

struct GBranch {
  Interaction inter;
  Payload payload;
  Pred assertion = top();
  GlobalType cont;
};

struct GNode {
  enum class Kind { End, Rec, Var, Choice };
  Kind kind = Kind::End;
  std::string name;  // Rec, Var
  GlobalType body;   // Rec
  // Asserted recursion: parameters with their invariant and initial values,
  // and the participants declared to know them.
  Payload params;
  Pred invariant = top();
  Subst init;
  std::map<std::string, std::vector<Participant>> knowers;
  Subst update;                   // Var
  std::vector<GBranch> branches;  // Choice; common sender

  const Participant& chooser() const { return branches.front().inter.sender; }

  mutable std::size_t id_cache = 0;  // 1 + interned id, 0 until first use
};

GlobalType g_end();
GlobalType g_var(std::string r, Subst update = {});
GlobalType g_rec(std::string r, GlobalType body);
GlobalType g_rec(std::string r, GlobalType body, Payload params, Pred invariant, Subst init,
                 std::map<std::string, std::vector<Participant>> knowers = {});
// Throws GlobalTypeError on an empty choice or differing senders.
GlobalType g_choice(std::vector<GBranch> branches);
GlobalType g_msg(Interaction i, GlobalType cont, Payload payload = {}, Pred assertion = top());

std::string to_string(const GlobalType& g);
// Equal for terms that are syntactically equal up to the order of branches.
// Recursion variables are compared by name.
std::string canonical_key(const GlobalType& g);

ParticipantSet participants_of(const GlobalType& g);
std::set<std::string> free_vars(const GlobalType& g);
std::size_t node_count(const GlobalType& g);

// Closed, every variable guarded, and no name bound twice to different terms.
void check_global_type(const GlobalType& g);
bool guarded(const GlobalType& g);

GlobalType alpha_rename(const GlobalType& g, const std::map<std::string, std::string>& names);
// g[by/r]
GlobalType substitute(const GlobalType& g, const std::string& r, const GlobalType& by);
// Replaces every end with k.
GlobalType then(const GlobalType& g, const GlobalType& k);

// One-step derivatives of a closed type. Recursion unfolds by substitution;
// with pass=false only choice and unfolding apply.
std::vector<std::pair<Interaction, GlobalType>> gt_step(const GlobalType& g, bool pass = true);
using RecEnv = std::map<std::string, GlobalType>;
// Binders of g by name.
RecEnv rec_env(const GlobalType& g);
// As gt_step on open terms: a variable stands for its binder in env and a
// rec steps as its body.
std::vector<std::pair<Interaction, GlobalType>> steps_in(const GlobalType& g, const RecEnv& env, bool pass = true);
// Traces of length at most k of the rule-based semantics.
std::set<std::vector<Interaction>> gt_traces(const GlobalType& g, std::size_t k, bool pass = true);

// No interaction is immediately followed by one independent of it.
bool pass_free(const GlobalType& g);

struct GenOptions {
  std::size_t max_nodes = 12;
  std::vector<Participant> participants{"A", "B", "C", "D"};
  std::vector<std::string> messages{"m", "n", "l", "r"};
  // Probability of picking an interaction independent of the previous one.
  double independence = 0.0;
};

GlobalType random_global_type(std::mt19937& rng, const GenOptions& opt = {});

}  // namespace chorc
