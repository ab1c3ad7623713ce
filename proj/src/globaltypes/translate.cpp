#include "chorc/globaltypes/translate.hpp"

#include <algorithm>
#include <deque>

namespace chorc {

namespace {

enum class Mode { Plain, Pass, Asserted };

struct Builder {
  Mode mode;
  std::size_t cap;
  RecEnv env;
  std::map<std::string, StateIndex> ids;
  std::vector<GlobalType> terms;
  std::deque<StateIndex> work;
  Fsa<Interaction> plain;
  AssertedCA asserted;

  StateIndex intern(const GlobalType& g) {
    auto k = canonical_key(g);
    auto it = ids.find(k);
    if (it != ids.end()) return it->second;
    if (terms.size() >= cap) overflow();
    StateIndex s = terms.size();
    std::string name = "q" + std::to_string(s);
    if (mode == Mode::Asserted)
      asserted.fsa.add_state(name);
    else
      plain.add_state(name);
    ids.emplace(k, s);
    terms.push_back(g);
    work.push_back(s);
    return s;
  }

  [[noreturn]] void overflow() {
    // The longest recent term shows which family keeps growing.
    GlobalType big = terms.back();
    for (std::size_t i = terms.size() > 20 ? terms.size() - 20 : 0; i < terms.size(); ++i)
      if (node_count(terms[i]) > node_count(big)) big = terms[i];
    std::string family;
    GlobalType t = big;
    std::size_t n = 0;
    std::optional<Interaction> head;
    while (t->kind == GNode::Kind::Choice && t->branches.size() == 1 &&
           (!head || t->branches[0].inter == *head)) {
      head = t->branches[0].inter;
      ++n;
      t = t->branches[0].cont;
    }
    if (head && n > 1)
      family = "(" + head->to_string() + ")^n; " + to_string(t) + ", n = " + std::to_string(n) + " so far";
    else
      family = to_string(big);
    throw StateCapExceeded("state cap " + std::to_string(cap) + " exceeded; growing family " + family, cap, family);
  }

  void edge(StateIndex from, std::optional<Interaction> l, StateIndex to) { plain.add_transition(from, l, to); }

  void expand(StateIndex s) {
    GlobalType g = terms[s];
    switch (g->kind) {
      case GNode::Kind::End:
        return;
      case GNode::Kind::Var: {
        auto it = env.find(g->name);
        if (it == env.end()) throw GlobalTypeError("unbound recursion variable " + g->name);
        if (mode == Mode::Asserted) {
          auto to = intern(it->second->body);
          asserted.fsa.add_transition(s, AssertedLabel::iteration(g->name, g->update, it->second->invariant), to);
        } else {
          edge(s, std::nullopt, intern(it->second));
        }
        return;
      }
      case GNode::Kind::Rec: {
        auto to = intern(g->body);
        if (mode == Mode::Asserted) {
          asserted.fsa.add_transition(s, AssertedLabel::iteration(g->name, g->init, g->invariant), to);
          asserted.rho[g->name] = RecEntry{g->params, g->invariant, to};
        } else {
          edge(s, std::nullopt, to);
        }
        return;
      }
      case GNode::Kind::Choice:
        break;
    }
    for (const auto& b : g->branches) {
      auto to = intern(b.cont);
      if (mode == Mode::Asserted)
        asserted.fsa.add_transition(s, AssertedLabel::interaction(b.inter, b.payload, b.assertion), to);
      else
        edge(s, b.inter, to);
    }
    if (mode != Mode::Pass) return;
    ParticipantSet heads{g->chooser()};
    for (const auto& b : g->branches) heads.insert(b.inter.receiver);
    for (const auto& [a, h] : steps_in(g, env, true))
      if (!heads.count(a.sender) && !heads.count(a.receiver)) edge(s, a, intern(h));
  }

  void run(const GlobalType& g) {
    check_global_type(g);
    env = rec_env(g);
    intern(g);
    if (mode == Mode::Asserted)
      asserted.fsa.set_initial(0);
    else
      plain.set_initial(0);
    while (!work.empty()) {
      auto s = work.front();
      work.pop_front();
      expand(s);
    }
  }
};

}  // namespace

CAutomaton translate(const GlobalType& g) {
  Builder b{Mode::Plain, SIZE_MAX};
  b.run(g);
  return CAutomaton(b.plain, participants_of(g));
}

CAutomaton translate_with_pass(const GlobalType& g, std::size_t cap) {
  if (cap < 1) throw std::invalid_argument("state cap must be at least 1");
  Builder b{Mode::Pass, cap};
  b.run(g);
  return CAutomaton(b.plain, participants_of(g));
}

AssertedCA translate_asserted(const GlobalType& g) {
  Builder b{Mode::Asserted, SIZE_MAX};
  b.run(g);
  b.asserted.participants = participants_of(g);
  return b.asserted;
}

std::vector<std::string> state_terms(const GlobalType& g, bool pass, std::size_t cap) {
  Builder b{pass ? Mode::Pass : Mode::Plain, cap};
  b.run(g);
  std::vector<std::string> out;
  for (const auto& t : b.terms) out.push_back(to_string(t));
  return out;
}

CAutomaton contract(const CAutomaton& a) {
  if (!a.fsa.has_epsilon()) return a;
  return CAutomaton(trim(remove_epsilon(a.fsa)), a.participants);
}

TranslationReport validate_translation(const GlobalType& g, std::size_t k, bool pass, std::size_t cap) {
  auto a = pass ? translate_with_pass(g, cap) : translate(g);
  auto ta = traces_up_to(a.fsa, k);
  auto ts = gt_traces(g, k, pass);
  TranslationReport r;
  r.k = k;
  r.traces = ta.size();
  for (const auto& t : ta)
    if (!ts.count(t)) {
      r.equal = false;
      r.only_automaton = t;
      break;
    }
  for (const auto& t : ts)
    if (!ta.count(t)) {
      r.equal = false;
      r.only_semantics = t;
      break;
    }
  return r;
}

}  // namespace chorc
