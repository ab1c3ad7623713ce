#include "chorc/systems/semantics.hpp"

#include <algorithm>

#include "chorc/core/bisimulation.hpp"

namespace chorc {

Configuration Product::configuration(StateIndex s) const {
  Configuration c;
  for (std::size_t i = 0; i < order.size(); ++i) c[order[i]] = configs.at(s)[i];
  return c;
}

Product sync_semantics(const System& s, std::size_t cap) {
  Product prod;
  std::vector<const Cfsm*> ms;
  for (const auto& [p, m] : s.machines) {
    if (m.owner != p) throw AutomatonError("machine registered under " + p.name + " is owned by " + m.owner.name);
    prod.order.push_back(p);
    ms.push_back(&m);
  }
  std::map<Participant, std::size_t> pos;
  for (std::size_t i = 0; i < prod.order.size(); ++i) pos[prod.order[i]] = i;
  Fsa<Interaction> f;
  std::map<std::vector<StateIndex>, StateIndex> ids;
  auto name = [&](const std::vector<StateIndex>& c) {
    std::string n = "(";
    for (std::size_t i = 0; i < c.size(); ++i) n += (i ? "," : "") + ms[i]->fsa.name(c[i]);
    return n + ")";
  };
  auto intern = [&](const std::vector<StateIndex>& c) {
    auto it = ids.find(c);
    if (it != ids.end()) return it->second;
    if (prod.configs.size() >= cap)
      throw CapExceeded("configuration count exceeded cap " + std::to_string(cap));
    StateIndex n = f.add_state(name(c));
    ids.emplace(c, n);
    prod.configs.push_back(c);
    return n;
  };
  std::vector<StateIndex> init;
  for (auto* m : ms) init.push_back(m->fsa.initial());
  f.set_initial(intern(init));
  for (std::size_t i = 0; i < prod.configs.size(); ++i) {
    auto c = prod.configs[i];
    std::vector<std::pair<std::optional<Interaction>, std::vector<StateIndex>>> moves;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const auto& fk = ms[k]->fsa;
      for (auto t : fk.outgoing(c[k])) {
        const auto& tr = fk.transition(t);
        if (!tr.label) {
          auto d = c;
          d[k] = tr.target;
          moves.push_back({std::nullopt, d});
          continue;
        }
        if (tr.label->kind != ActionKind::Send) continue;
        auto rit = pos.find(tr.label->receiver);
        if (rit == pos.end()) continue;
        std::size_t r = rit->second;
        const auto& fr = ms[r]->fsa;
        for (auto u : fr.outgoing(c[r])) {
          const auto& ur = fr.transition(u);
          if (!ur.label || ur.label->kind != ActionKind::Receive || ur.label->sender != tr.label->sender ||
              ur.label->receiver != tr.label->receiver || ur.label->message != tr.label->message)
            continue;
          auto d = c;
          d[k] = tr.target;
          d[r] = ur.target;
          moves.push_back({tr.label->interaction(), d});
        }
      }
    }
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
    for (auto& [l, d] : moves) {
      StateIndex to = intern(d);
      f.add_transition(static_cast<StateIndex>(i), l, to);
    }
  }
  prod.automaton = CAutomaton(std::move(f), ParticipantSet(prod.order.begin(), prod.order.end()));
  return prod;
}

namespace {

bool all_final(const System& s, const Product& prod, StateIndex st, std::optional<Participant>* culprit = nullptr) {
  for (std::size_t i = 0; i < prod.order.size(); ++i) {
    const auto& m = s.machines.at(prod.order[i]);
    if (!m.is_final(prod.configs[st][i])) {
      if (culprit) *culprit = prod.order[i];
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Configuration> deadlocks(const System& s, const Product& prod) {
  std::vector<Configuration> out;
  const auto& f = prod.automaton.fsa;
  for (StateIndex st = 0; st < f.size(); ++st)
    if (f.outgoing(st).empty() && !all_final(s, prod, st)) out.push_back(prod.configuration(st));
  return out;
}

std::vector<Configuration> deadlocks(const System& s) { return deadlocks(s, sync_semantics(s)); }

std::vector<Configuration> locks(const System& s, const Product& prod, const Participant& p, std::size_t branch_cap) {
  std::vector<Configuration> out;
  const auto& f = prod.automaton.fsa;
  auto it = std::find(prod.order.begin(), prod.order.end(), p);
  if (it == prod.order.end()) throw AutomatonError("unknown participant " + p.name);
  std::size_t k = static_cast<std::size_t>(it - prod.order.begin());
  const auto& m = s.machines.at(p);
  for (StateIndex st = 0; st < f.size(); ++st) {
    if (m.is_final(prod.configs[st][k])) continue;
    bool lock = f.outgoing(st).empty();
    if (!lock)
      for (const auto& c : candidate_branches(f, st, branch_cap))
        if (!participants_of(f, c).count(p)) {
          lock = true;
          break;
        }
    if (lock) out.push_back(prod.configuration(st));
  }
  return out;
}

std::vector<Configuration> locks(const System& s, const Participant& p) { return locks(s, sync_semantics(s), p); }

ProjectionReport compare_with_product(const CAutomaton& a, const Product& prod, std::size_t k) {
  ProjectionReport r;
  r.k = k;
  r.configurations = prod.configs.size();
  r.bisimilar = strong_bisimilar(a.fsa, prod.automaton.fsa).bisimilar;
  auto ta = traces_up_to(a.fsa, k);
  auto tb = traces_up_to(prod.automaton.fsa, k);
  r.bounded_trace_equal = ta == tb;
  if (!r.bounded_trace_equal) {
    std::optional<std::vector<Interaction>> best;
    bool in_prod = false;
    auto consider = [&](const std::set<std::vector<Interaction>>& x, const std::set<std::vector<Interaction>>& y,
                        bool prod_side) {
      for (const auto& w : x)
        if (!y.count(w) && (!best || w.size() < best->size() || (w.size() == best->size() && w < *best))) {
          best = w;
          in_prod = prod_side;
        }
    };
    consider(tb, ta, true);
    consider(ta, tb, false);
    r.witness = best;
    r.witness_in_product = in_prod;
  }
  return r;
}

ProjectionReport validate_projection(const CAutomaton& a, std::size_t k) {
  auto sys = project(a);
  auto prod = sync_semantics(sys);
  return compare_with_product(a, prod, k);
}

std::string to_string(const Configuration& c, const System& s) {
  std::string n = "(";
  bool first = true;
  for (const auto& [p, st] : c) {
    n += (first ? "" : ", ") + p.name + "=" + s.machines.at(p).fsa.name(st);
    first = false;
  }
  return n + ")";
}

}  // namespace chorc
