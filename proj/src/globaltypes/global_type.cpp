#include "chorc/globaltypes/global_type.hpp"

#include <algorithm>
#include <functional>

namespace chorc {

namespace {

std::shared_ptr<GNode> node(GNode::Kind k) {
  auto n = std::make_shared<GNode>();
  n->kind = k;
  return n;
}

std::string subst_string(const Subst& s) {
  std::string out;
  for (const auto& [x, e] : s) out += (out.empty() ? "" : ", ") + x + " := " + to_string(e);
  return out;
}

std::string branch_head(const GBranch& b) {
  std::string s = b.inter.to_string();
  if (!b.payload.empty()) s += "(" + to_string(b.payload) + ")";
  if (!is_true(b.assertion)) s += "{" + to_string(b.assertion) + "}";
  return s;
}

std::string rec_head(const GNode& n) {
  std::string s;
  if (!n.params.empty()) s += "[" + to_string(n.params) + "]";
  if (!is_true(n.invariant)) s += "{" + to_string(n.invariant) + "}";
  if (!n.init.empty()) s += "[" + subst_string(n.init) + "]";
  return s;
}

// Hash-consing table shared by every term; ids are stable for the process.
std::map<std::string, std::size_t>& intern_table() {
  static std::map<std::string, std::size_t> table;
  return table;
}

std::size_t node_id(const GlobalType& g) {
  if (g->id_cache) return g->id_cache - 1;
  std::string k;
  switch (g->kind) {
    case GNode::Kind::End:
      k = "E";
      break;
    case GNode::Kind::Var:
      k = "V" + g->name + "[" + subst_string(g->update) + "]";
      break;
    case GNode::Kind::Rec:
      k = "R" + g->name + rec_head(*g) + "." + std::to_string(node_id(g->body));
      break;
    case GNode::Kind::Choice: {
      std::vector<std::string> parts;
      for (const auto& b : g->branches) parts.push_back(branch_head(b) + ";" + std::to_string(node_id(b.cont)));
      std::sort(parts.begin(), parts.end());
      k = "C";
      for (const auto& p : parts) k += "|" + p;
    }
  }
  auto& t = intern_table();
  auto it = t.emplace(k, t.size()).first;
  g->id_cache = it->second + 1;
  return it->second;
}

void walk(const GlobalType& g, const std::function<void(const GlobalType&)>& f) {
  f(g);
  if (g->kind == GNode::Kind::Rec) walk(g->body, f);
  if (g->kind == GNode::Kind::Choice)
    for (const auto& b : g->branches) walk(b.cont, f);
}

void free_vars_into(const GlobalType& g, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (g->kind) {
    case GNode::Kind::End:
      return;
    case GNode::Kind::Var:
      if (!bound.count(g->name)) out.insert(g->name);
      return;
    case GNode::Kind::Rec: {
      bool fresh = bound.insert(g->name).second;
      free_vars_into(g->body, bound, out);
      if (fresh) bound.erase(g->name);
      return;
    }
    case GNode::Kind::Choice:
      for (const auto& b : g->branches) free_vars_into(b.cont, bound, out);
  }
}

bool guarded_in(const GlobalType& g, std::set<std::string> unguarded) {
  switch (g->kind) {
    case GNode::Kind::End:
      return true;
    case GNode::Kind::Var:
      return !unguarded.count(g->name);
    case GNode::Kind::Rec:
      unguarded.insert(g->name);
      return guarded_in(g->body, unguarded);
    case GNode::Kind::Choice:
      for (const auto& b : g->branches)
        if (!guarded_in(b.cont, {})) return false;
      return true;
  }
  return true;
}

std::shared_ptr<GNode> copy(const GlobalType& g) {
  auto n = std::make_shared<GNode>(*g);
  n->id_cache = 0;
  return n;
}

GlobalType with_conts(const GlobalType& g, const std::vector<GlobalType>& conts) {
  auto n = copy(g);
  for (std::size_t i = 0; i < conts.size(); ++i) n->branches[i].cont = conts[i];
  return n;
}

using Steps = std::vector<std::pair<Interaction, GlobalType>>;

void dedupe(Steps& s) {
  std::map<std::pair<Interaction, std::string>, GlobalType> m;
  for (auto& [i, g] : s) m.emplace(std::make_pair(i, canonical_key(g)), g);
  s.clear();
  for (auto& [k, g] : m) s.push_back({k.first, g});
}

}  // namespace

GlobalType g_end() { return node(GNode::Kind::End); }

GlobalType g_var(std::string r, Subst update) {
  auto n = node(GNode::Kind::Var);
  n->name = std::move(r);
  n->update = std::move(update);
  return n;
}

GlobalType g_rec(std::string r, GlobalType body) { return g_rec(std::move(r), std::move(body), {}, top(), {}); }

GlobalType g_rec(std::string r, GlobalType body, Payload params, Pred invariant, Subst init,
                 std::map<std::string, std::vector<Participant>> knowers) {
  if (!body) throw GlobalTypeError("rec " + r + " without body");
  check_payload(params);
  auto n = node(GNode::Kind::Rec);
  n->name = std::move(r);
  n->body = std::move(body);
  n->params = std::move(params);
  n->invariant = std::move(invariant);
  n->init = std::move(init);
  n->knowers = std::move(knowers);
  return n;
}

GlobalType g_choice(std::vector<GBranch> branches) {
  if (branches.empty()) throw GlobalTypeError("empty choice");
  for (const auto& b : branches) {
    if (!b.cont) throw GlobalTypeError("branch " + b.inter.to_string() + " without continuation");
    if (b.inter.sender != branches.front().inter.sender)
      throw GlobalTypeError("choice with senders " + branches.front().inter.sender.name + " and " + b.inter.sender.name);
    check_payload(b.payload);
  }
  auto n = node(GNode::Kind::Choice);
  n->branches = std::move(branches);
  return n;
}

GlobalType g_msg(Interaction i, GlobalType cont, Payload payload, Pred assertion) {
  return g_choice({GBranch{std::move(i), std::move(payload), std::move(assertion), std::move(cont)}});
}

std::string to_string(const GlobalType& g) {
  switch (g->kind) {
    case GNode::Kind::End:
      return "end";
    case GNode::Kind::Var:
      return g->update.empty() ? g->name : g->name + "[" + subst_string(g->update) + "]";
    case GNode::Kind::Rec:
      return "rec " + g->name + rec_head(*g) + ". " + to_string(g->body);
    case GNode::Kind::Choice: {
      if (g->branches.size() == 1) return branch_head(g->branches[0]) + "; " + to_string(g->branches[0].cont);
      std::string s = "(";
      for (std::size_t i = 0; i < g->branches.size(); ++i)
        s += (i ? " + " : "") + branch_head(g->branches[i]) + "; " + to_string(g->branches[i].cont);
      return s + ")";
    }
  }
  return "";
}

std::string canonical_key(const GlobalType& g) { return "#" + std::to_string(node_id(g)); }

ParticipantSet participants_of(const GlobalType& g) {
  ParticipantSet out;
  walk(g, [&](const GlobalType& n) {
    if (n->kind == GNode::Kind::Choice)
      for (const auto& b : n->branches) {
        out.insert(b.inter.sender);
        out.insert(b.inter.receiver);
      }
  });
  return out;
}

std::set<std::string> free_vars(const GlobalType& g) {
  std::set<std::string> bound, out;
  free_vars_into(g, bound, out);
  return out;
}

std::size_t node_count(const GlobalType& g) {
  std::size_t n = 0;
  walk(g, [&](const GlobalType&) { ++n; });
  return n;
}

bool guarded(const GlobalType& g) { return guarded_in(g, {}); }

void check_global_type(const GlobalType& g) {
  auto fvs = free_vars(g);
  if (!fvs.empty()) throw GlobalTypeError("unbound recursion variable " + *fvs.begin());
  if (!guarded(g)) throw GlobalTypeError("unguarded recursion variable");
  std::map<std::string, std::string> binders;
  walk(g, [&](const GlobalType& n) {
    if (n->kind != GNode::Kind::Rec) return;
    auto k = canonical_key(n);
    auto [it, fresh] = binders.emplace(n->name, k);
    if (!fresh && it->second != k) throw GlobalTypeError("recursion variable " + n->name + " bound twice");
  });
}

GlobalType alpha_rename(const GlobalType& g, const std::map<std::string, std::string>& names) {
  auto rn = [&](const std::string& r) {
    auto it = names.find(r);
    return it == names.end() ? r : it->second;
  };
  switch (g->kind) {
    case GNode::Kind::End:
      return g;
    case GNode::Kind::Var: {
      auto n = copy(g);
      n->name = rn(g->name);
      return n;
    }
    case GNode::Kind::Rec: {
      auto n = copy(g);
      n->name = rn(g->name);
      n->body = alpha_rename(g->body, names);
      return n;
    }
    case GNode::Kind::Choice: {
      std::vector<GlobalType> conts;
      for (const auto& b : g->branches) conts.push_back(alpha_rename(b.cont, names));
      return with_conts(g, conts);
    }
  }
  return g;
}

GlobalType substitute(const GlobalType& g, const std::string& r, const GlobalType& by) {
  switch (g->kind) {
    case GNode::Kind::End:
      return g;
    case GNode::Kind::Var:
      return g->name == r ? by : g;
    case GNode::Kind::Rec: {
      if (g->name == r) return g;
      auto n = copy(g);
      n->body = substitute(g->body, r, by);
      return n;
    }
    case GNode::Kind::Choice: {
      std::vector<GlobalType> conts;
      for (const auto& b : g->branches) conts.push_back(substitute(b.cont, r, by));
      return with_conts(g, conts);
    }
  }
  return g;
}

GlobalType then(const GlobalType& g, const GlobalType& k) {
  switch (g->kind) {
    case GNode::Kind::End:
      return k;
    case GNode::Kind::Var:
      return g;
    case GNode::Kind::Rec: {
      auto n = copy(g);
      n->body = then(g->body, k);
      return n;
    }
    case GNode::Kind::Choice: {
      std::vector<GlobalType> conts;
      for (const auto& b : g->branches) conts.push_back(then(b.cont, k));
      return with_conts(g, conts);
    }
  }
  return g;
}

namespace {

// Shared by both step relations: `unfold` gives the term a Rec or Var stands
// for, or null when it is stuck. Terms already on the derivation spine are
// cut, a derivation repeating a term has no finite proof.
Steps steps_core(const GlobalType& g, bool pass, const std::function<GlobalType(const GlobalType&)>& unfold,
                 std::set<std::string>& active) {
  Steps out;
  if (g->kind == GNode::Kind::End) return out;
  auto k = canonical_key(g);
  if (active.count(k)) return out;
  if (g->kind != GNode::Kind::Choice) {
    auto u = unfold(g);
    if (!u) return out;
    active.insert(k);
    out = steps_core(u, pass, unfold, active);
    active.erase(k);
    return out;
  }
  for (const auto& b : g->branches) out.push_back({b.inter, b.cont});
  if (pass) {
    active.insert(k);
    ParticipantSet heads{g->chooser()};
    for (const auto& b : g->branches) heads.insert(b.inter.receiver);
    std::vector<Steps> inner;
    for (const auto& b : g->branches) inner.push_back(steps_core(b.cont, true, unfold, active));
    active.erase(k);
    std::set<Interaction> candidates;
    for (const auto& [a, _] : inner[0])
      if (!heads.count(a.sender) && !heads.count(a.receiver)) candidates.insert(a);
    for (const auto& a : candidates) {
      std::vector<std::vector<GlobalType>> combos{{}};
      for (const auto& steps : inner) {
        std::vector<std::vector<GlobalType>> next;
        for (const auto& c : combos)
          for (const auto& [x, h] : steps)
            if (x == a) {
              next.push_back(c);
              next.back().push_back(h);
            }
        combos = std::move(next);
      }
      for (const auto& c : combos) out.push_back({a, with_conts(g, c)});
    }
  }
  dedupe(out);
  return out;
}

}  // namespace

std::vector<std::pair<Interaction, GlobalType>> gt_step(const GlobalType& g, bool pass) {
  std::set<std::string> active;
  return steps_core(
      g, pass,
      [](const GlobalType& t) -> GlobalType {
        if (t->kind == GNode::Kind::Rec) return substitute(t->body, t->name, t);
        return nullptr;
      },
      active);
}

std::vector<std::pair<Interaction, GlobalType>> steps_in(const GlobalType& g, const RecEnv& env, bool pass) {
  std::set<std::string> active;
  return steps_core(
      g, pass,
      [&](const GlobalType& t) -> GlobalType {
        if (t->kind == GNode::Kind::Rec) return t->body;
        auto it = env.find(t->name);
        return it == env.end() ? nullptr : it->second;
      },
      active);
}

RecEnv rec_env(const GlobalType& g) {
  RecEnv env;
  walk(g, [&](const GlobalType& n) {
    if (n->kind == GNode::Kind::Rec) env.emplace(n->name, n);
  });
  return env;
}

std::set<std::vector<Interaction>> gt_traces(const GlobalType& g, std::size_t k, bool pass) {
  std::set<std::vector<Interaction>> out{{}};
  std::map<std::vector<Interaction>, std::map<std::string, GlobalType>> frontier;
  frontier[{}][canonical_key(g)] = g;
  for (std::size_t len = 0; len < k && !frontier.empty(); ++len) {
    std::map<std::vector<Interaction>, std::map<std::string, GlobalType>> next;
    for (const auto& [trace, terms] : frontier)
      for (const auto& [_, t] : terms)
        for (const auto& [a, h] : gt_step(t, pass)) {
          auto tr = trace;
          tr.push_back(a);
          out.insert(tr);
          next[tr].emplace(canonical_key(h), h);
        }
    frontier = std::move(next);
  }
  return out;
}

bool pass_free(const GlobalType& g) {
  auto env = rec_env(g);
  std::function<void(const GlobalType&, std::set<std::string>&, std::set<Interaction>&)> firsts =
      [&](const GlobalType& t, std::set<std::string>& seen, std::set<Interaction>& out) {
        switch (t->kind) {
          case GNode::Kind::End:
            return;
          case GNode::Kind::Var:
            if (env.count(t->name) && seen.insert(t->name).second) firsts(env.at(t->name), seen, out);
            return;
          case GNode::Kind::Rec:
            seen.insert(t->name);
            firsts(t->body, seen, out);
            return;
          case GNode::Kind::Choice:
            for (const auto& b : t->branches) out.insert(b.inter);
        }
      };
  bool ok = true;
  walk(g, [&](const GlobalType& n) {
    if (n->kind != GNode::Kind::Choice) return;
    for (const auto& b : n->branches) {
      std::set<std::string> seen;
      std::set<Interaction> next;
      firsts(b.cont, seen, next);
      for (const auto& x : next)
        if (independent(b.inter, x)) ok = false;
    }
  });
  return ok;
}

namespace {

struct Generator {
  std::mt19937& rng;
  const GenOptions& opt;
  std::size_t recs = 0;

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

  Participant sender_after(const std::optional<Interaction>& prev) {
    const auto& ps = opt.participants;
    if (!prev || coin(opt.independence)) {
      if (prev) {
        std::vector<Participant> far;
        for (const auto& p : ps)
          if (p != prev->sender && p != prev->receiver) far.push_back(p);
        if (far.size() >= 2) return far[pick(far.size())];
      }
      return ps[pick(ps.size())];
    }
    return coin(0.5) ? prev->sender : prev->receiver;
  }

  GlobalType gen(std::size_t budget, std::vector<std::string>& scope, std::optional<Interaction> prev,
                 bool may_loop) {
    if (budget <= 1) {
      if (may_loop && !scope.empty() && coin(0.6)) return g_var(scope[pick(scope.size())]);
      return g_end();
    }
    if (budget >= 3 && recs < 3 && coin(0.2)) {
      std::string r = "r" + std::to_string(recs++);
      scope.push_back(r);
      auto body = gen(budget - 1, scope, prev, false);
      scope.pop_back();
      return g_rec(r, body);
    }
    auto s = sender_after(prev);
    bool independent_next = prev && s != prev->sender && s != prev->receiver;
    std::vector<std::pair<Participant, std::string>> labels;
    for (const auto& q : opt.participants)
      if (q != s)
        for (const auto& m : opt.messages) labels.push_back({q, m});
    std::shuffle(labels.begin(), labels.end(), rng);
    std::size_t width = 1 + (coin(0.45) ? 1 + pick(2) : 0);
    width = std::min({width, labels.size(), budget - 1});
    std::size_t rest = budget - 1;
    std::vector<GBranch> branches;
    for (std::size_t i = 0; i < width; ++i) {
      std::size_t share = i + 1 == width ? rest : 1 + pick(std::max<std::size_t>(1, rest - (width - 1 - i)));
      share = std::min(share, rest - (width - 1 - i));
      rest -= share;
      Interaction inter{s, labels[i].first, labels[i].second};
      // a receiver keeps the chain connected unless independence was chosen
      if (!independent_next && prev && i == 0 && !coin(opt.independence)) {
        auto q = prev->sender == s ? prev->receiver : prev->sender;
        if (q != s) inter = Interaction{s, q, labels[i].second};
      }
      bool dup = false;
      for (const auto& b : branches)
        if (b.inter == inter) dup = true;
      if (dup) continue;
      branches.push_back(GBranch{inter, {}, top(), gen(share, scope, inter, true)});
    }
    return g_choice(branches);
  }
};

}  // namespace

GlobalType random_global_type(std::mt19937& rng, const GenOptions& opt) {
  Generator gen{rng, opt};
  std::vector<std::string> scope;
  std::size_t size = 2 + gen.pick(std::max<std::size_t>(1, opt.max_nodes - 1));
  return gen.gen(std::min(size, opt.max_nodes), scope, std::nullopt, false);
}

}  // namespace chorc
