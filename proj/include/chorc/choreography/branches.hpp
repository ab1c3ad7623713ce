#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chorc/core/fsa.hpp"

namespace chorc {

class CapExceeded : public AutomatonError {
 public:
  using AutomatonError::AutomatonError;
};

inline constexpr std::size_t kDefaultBranchCap = 10000;

namespace detail {

inline std::vector<TransitionIndex> min_rotation(std::vector<TransitionIndex> c) {
  auto best = c;
  for (std::size_t i = 1; i < c.size(); ++i) {
    std::rotate(c.begin(), c.begin() + 1, c.end());
    if (c < best) best = c;
  }
  return best;
}

// Incremental state for pre-candidate enumeration: the canonical rotations of
// every cycle segment of the current run.
struct CycleTracker {
  std::vector<StateIndex> states;
  std::vector<TransitionIndex> steps;
  std::vector<std::vector<std::vector<TransitionIndex>>> added;  // per step
  std::multiset<std::vector<TransitionIndex>> cycles;

  // Returns false (and leaves the tracker unchanged) if extending by t would
  // repeat a cycle.
  template <class L>
  bool push(const Fsa<L>& a, TransitionIndex t) {
    StateIndex v = a.transition(t).target;
    std::vector<std::vector<TransitionIndex>> fresh;
    std::vector<TransitionIndex> tail{t};
    for (std::size_t i = states.size(); i-- > 0;) {
      if (states[i] == v) {
        auto c = min_rotation(tail);
        if (cycles.count(c)) return false;
        for (const auto& f : fresh)
          if (f == c) return false;
        fresh.push_back(std::move(c));
      }
      if (i > 0) tail.insert(tail.begin(), steps[i - 1]);
    }
    states.push_back(v);
    steps.push_back(t);
    for (const auto& f : fresh) cycles.insert(f);
    added.push_back(std::move(fresh));
    return true;
  }

  void pop() {
    for (const auto& f : added.back()) cycles.erase(cycles.find(f));
    added.pop_back();
    steps.pop_back();
    states.pop_back();
  }
};

}  // namespace detail

// A run is a pre-candidate branch when no cycle (up to rotation) occurs in it
// more than once.
template <class L>
bool is_pre_candidate(const Fsa<L>& a, const Run& r) {
  detail::CycleTracker ct;
  ct.states.push_back(r.start);
  for (auto t : r.steps)
    if (!ct.push(a, t)) return false;
  return true;
}

struct BranchSet {
  std::vector<Run> pre_candidates;  // all, including the empty run
  std::vector<Run> candidates;      // maximal ones
};

template <class L>
BranchSet enumerate_branches(const Fsa<L>& a, StateIndex q, std::size_t cap = kDefaultBranchCap) {
  a.check_state(q);
  BranchSet out;
  detail::CycleTracker ct;
  ct.states.push_back(q);
  const std::size_t pre_cap = cap * 100;
  auto rec = [&](auto&& self) -> void {
    out.pre_candidates.push_back(Run{q, ct.steps});
    if (out.pre_candidates.size() > pre_cap)
      throw CapExceeded("pre-candidate branch enumeration from state " + a.name(q) + " exceeded cap " +
                        std::to_string(pre_cap));
    bool extended = false;
    for (auto t : a.outgoing(ct.states.back())) {
      if (!ct.push(a, t)) continue;
      extended = true;
      self(self);
      ct.pop();
    }
    if (!extended) {
      out.candidates.push_back(Run{q, ct.steps});
      if (out.candidates.size() > cap)
        throw CapExceeded("candidate branch enumeration from state " + a.name(q) + " exceeded cap " +
                          std::to_string(cap));
    }
  };
  rec(rec);
  std::sort(out.pre_candidates.begin(), out.pre_candidates.end());
  std::sort(out.candidates.begin(), out.candidates.end());
  return out;
}

template <class L>
std::vector<Run> candidate_branches(const Fsa<L>& a, StateIndex q, std::size_t cap = kDefaultBranchCap) {
  return enumerate_branches(a, q, cap).candidates;
}

enum class SpanKind { Cofinal = 1, Candidates = 2, CandidateLoop = 3 };

struct Span {
  Run first;
  Run second;
  SpanKind kind;
  auto operator<=>(const Span&) const = default;
};

inline bool is_prefix(const Run& p, const Run& r) {
  return p.start == r.start && p.steps.size() <= r.steps.size() &&
         std::equal(p.steps.begin(), p.steps.end(), r.steps.begin());
}

// q-spans (unordered; first < second). Runs are non-empty.
template <class L>
std::vector<Span> q_spans(const Fsa<L>& a, StateIndex q, const BranchSet& bs) {
  std::set<Span> out;
  auto nodes = [&](const Run& r) {
    auto v = run_states(a, r);
    return std::set<StateIndex>(v.begin(), v.end());
  };
  // A run that comes back to q before its end shares q with the other run
  // beyond the common start.
  auto revisits = [&](const Run& r) {
    auto v = run_states(a, r);
    return std::find(v.begin() + 1, v.end() - 1, q) != v.end() - 1;
  };
  auto only_common = [&](const Run& x, const Run& y, const std::set<StateIndex>& allowed) {
    if (revisits(x) || revisits(y)) return false;
    auto nx = nodes(x), ny = nodes(y);
    for (auto s : nx)
      if (ny.count(s) && !allowed.count(s)) return false;
    return true;
  };
  auto add = [&](const Run& x, const Run& y, SpanKind k) {
    if (x == y) return;
    Span s = x < y ? Span{x, y, k} : Span{y, x, k};
    // A pair matching several clauses is recorded once, with the lowest clause.
    for (auto kk : {SpanKind::Cofinal, SpanKind::Candidates, SpanKind::CandidateLoop}) {
      Span t = s;
      t.kind = kk;
      if (out.count(t)) return;
    }
    out.insert(s);
  };
  std::vector<const Run*> pre;
  for (const auto& r : bs.pre_candidates)
    if (!r.empty()) pre.push_back(&r);
  for (std::size_t i = 0; i < pre.size(); ++i)
    for (std::size_t j = i + 1; j < pre.size(); ++j) {
      StateIndex e1 = run_end(a, *pre[i]), e2 = run_end(a, *pre[j]);
      if (e1 == e2 && only_common(*pre[i], *pre[j], {q, e1})) add(*pre[i], *pre[j], SpanKind::Cofinal);
    }
  std::vector<const Run*> cands;
  for (const auto& r : bs.candidates)
    if (!r.empty()) cands.push_back(&r);
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = i + 1; j < cands.size(); ++j)
      if (only_common(*cands[i], *cands[j], {q})) add(*cands[i], *cands[j], SpanKind::Candidates);
  for (const auto* c : cands)
    for (const auto* l : pre)
      if (run_end(a, *l) == q && only_common(*c, *l, {q})) add(*c, *l, SpanKind::CandidateLoop);
  std::vector<Span> v(out.begin(), out.end());
  // Order by clause first, then by runs.
  std::stable_sort(v.begin(), v.end(), [](const Span& x, const Span& y) { return x.kind < y.kind; });
  return v;
}

template <class L>
std::vector<Span> q_spans(const Fsa<L>& a, StateIndex q, std::size_t cap = kDefaultBranchCap) {
  return q_spans(a, q, enumerate_branches(a, q, cap));
}

template <class L>
std::string run_to_string(const Fsa<L>& a, const Run& r) {
  std::string s;
  for (auto st : run_states(a, r)) s += (s.empty() ? "" : "·") + a.name(st);
  return s;
}

}  // namespace chorc
