#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <numeric>

#include "chorc/assertions/solver.hpp"

namespace chorc {

namespace {

struct ResourceLimit {};

struct Lin {
  std::map<std::string, long long> c;
  long long k = 0;

  long long coef(const std::string& x) const {
    auto it = c.find(x);
    return it == c.end() ? 0 : it->second;
  }
  void add(const Lin& o, long long f) {
    for (const auto& [x, v] : o.c) {
      auto& d = c[x];
      d += f * v;
      if (d == 0) c.erase(x);
    }
    k += f * o.k;
  }
  bool operator==(const Lin&) const = default;
};

struct StrTerm {
  bool lit = false;
  std::string s;
  bool operator==(const StrTerm&) const = default;
  auto operator<=>(const StrTerm&) const = default;
};

struct Lit {
  enum Kind { Le, Eq, SEq, BVar } kind = Le;
  Lin lin;        // Le: lin <= 0, Eq: lin = 0
  StrTerm a, b;   // SEq
  std::string name;  // BVar
  bool pos = true;   // SEq, BVar
};

using Conj = std::vector<Lit>;
using Dnf = std::vector<Conj>;

Lin linearize(const Expr& e) {
  Lin l;
  switch (e->kind) {
    case ExprNode::Kind::IntLit: l.k = e->ival; return l;
    case ExprNode::Kind::Var: l.c[e->text] = 1; return l;
    case ExprNode::Kind::Add:
      l = linearize(e->args[0]);
      l.add(linearize(e->args[1]), 1);
      return l;
    case ExprNode::Kind::Sub:
      l = linearize(e->args[0]);
      l.add(linearize(e->args[1]), -1);
      return l;
    case ExprNode::Kind::Neg: l.add(linearize(e->args[0]), -1); return l;
    case ExprNode::Kind::Mul: {
      auto a = linearize(e->args[0]);
      auto b = linearize(e->args[1]);
      if (a.c.empty()) std::swap(a, b);
      if (!b.c.empty()) throw OutOfFragment("non-linear product: " + to_string(e));
      l.add(a, b.k);
      return l;
    }
    default: throw OutOfFragment("unsupported integer term: " + to_string(e));
  }
}

StrTerm str_term(const Expr& e) {
  if (e->kind == ExprNode::Kind::StrLit) return {true, e->text};
  if (e->kind == ExprNode::Kind::Var) return {false, e->text};
  throw OutOfFragment("unsupported string term: " + to_string(e));
}

long long gcd_of(const Lin& l) {
  long long g = 0;
  for (const auto& [x, v] : l.c) g = std::gcd(g, v < 0 ? -v : v);
  return g;
}

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// 0: false, 1: true, 2: keep (possibly rewritten).
int normalize(Lit& l) {
  switch (l.kind) {
    case Lit::Le: {
      if (l.lin.c.empty()) return l.lin.k <= 0 ? 1 : 0;
      long long g = gcd_of(l.lin);
      if (g > 1) {
        for (auto& [x, v] : l.lin.c) v /= g;
        l.lin.k = -floor_div(-l.lin.k, g);
      }
      return 2;
    }
    case Lit::Eq: {
      if (l.lin.c.empty()) return l.lin.k == 0 ? 1 : 0;
      long long g = gcd_of(l.lin);
      if (g > 1) {
        if (l.lin.k % g != 0) return 0;
        for (auto& [x, v] : l.lin.c) v /= g;
        l.lin.k /= g;
      }
      return 2;
    }
    case Lit::SEq:
      if (l.a == l.b) return l.pos ? 1 : 0;
      if (l.a.lit && l.b.lit) return l.pos ? 0 : 1;
      return 2;
    case Lit::BVar: return 2;
  }
  return 2;
}

// Appends l to c; false if c became trivially unsatisfiable.
bool push(Conj& c, Lit l) {
  int n = normalize(l);
  if (n == 0) return false;
  if (n == 1) return true;
  if (l.kind == Lit::BVar)
    for (const auto& o : c)
      if (o.kind == Lit::BVar && o.name == l.name) return o.pos == l.pos;
  c.push_back(std::move(l));
  return true;
}

Lit le(Lin l) {
  Lit r;
  r.kind = Lit::Le;
  r.lin = std::move(l);
  return r;
}

std::vector<Conj> negate_lit(const Lit& l) {
  switch (l.kind) {
    case Lit::Le: {
      Lin n;
      n.add(l.lin, -1);
      n.k += 1;
      return {{le(n)}};
    }
    case Lit::Eq: {
      Lin a = l.lin, b;
      a.k += 1;
      b.add(l.lin, -1);
      b.k += 1;
      return {{le(a)}, {le(b)}};
    }
    default: {
      Lit r = l;
      r.pos = !l.pos;
      return {{r}};
    }
  }
}

class Engine {
 public:
  explicit Engine(std::size_t cap) : cap_(cap) {}

  bool satisfiable(const Pred& p) {
    for (auto& c : dnf(p, true))
      if (conj_sat(c)) return true;
    return false;
  }

 private:
  std::size_t cap_;

  void budget(std::size_t n) {
    if (n > cap_) throw ResourceLimit{};
  }

  Dnf cross(const Dnf& a, const Dnf& b) {
    Dnf out;
    budget(a.size() * b.size());
    for (const auto& x : a)
      for (const auto& y : b) {
        Conj c = x;
        bool ok = true;
        for (const auto& l : y)
          if (!(ok = push(c, l))) break;
        if (ok) out.push_back(std::move(c));
      }
    return out;
  }

  Dnf atom(const Pred& p, bool pos) {
    if (p->kind == PredNode::Kind::Holds) {
      const auto& e = p->lhs;
      if (e->kind != ExprNode::Kind::Var) throw OutOfFragment("unsupported boolean term: " + to_string(e));
      Lit l;
      l.kind = Lit::BVar;
      l.name = e->text;
      l.pos = pos;
      return {{l}};
    }
    CmpOp op = p->op;
    if (!pos) {
      switch (op) {
        case CmpOp::Eq: op = CmpOp::Ne; break;
        case CmpOp::Ne: op = CmpOp::Eq; break;
        case CmpOp::Lt: op = CmpOp::Ge; break;
        case CmpOp::Le: op = CmpOp::Gt; break;
        case CmpOp::Gt: op = CmpOp::Le; break;
        case CmpOp::Ge: op = CmpOp::Lt; break;
      }
    }
    Sort s = p->lhs->sort;
    if (s == Sort::String) {
      Lit l;
      l.kind = Lit::SEq;
      l.a = str_term(p->lhs);
      l.b = str_term(p->rhs);
      l.pos = op == CmpOp::Eq;
      Conj c;
      if (!push(c, l)) return {};
      return {c};
    }
    if (s == Sort::Bool) {
      auto a = holds(p->lhs), b = holds(p->rhs);
      auto same_value = disj(conj(a, b), conj(neg(a), neg(b)));
      return dnf(same_value, op == CmpOp::Eq);
    }
    Lin d = linearize(p->lhs);
    d.add(linearize(p->rhs), -1);
    auto one = [](Lit l) -> Dnf {
      Conj c;
      if (!push(c, std::move(l))) return {};
      return {c};
    };
    Lin nd;
    nd.add(d, -1);
    switch (op) {
      case CmpOp::Le: return one(le(d));
      case CmpOp::Lt: d.k += 1; return one(le(d));
      case CmpOp::Ge: return one(le(nd));
      case CmpOp::Gt: nd.k += 1; return one(le(nd));
      case CmpOp::Eq: {
        Lit l;
        l.kind = Lit::Eq;
        l.lin = d;
        return one(l);
      }
      case CmpOp::Ne: {
        Dnf out;
        d.k += 1;
        nd.k += 1;
        auto a = one(le(d)), b = one(le(nd));
        out.insert(out.end(), a.begin(), a.end());
        out.insert(out.end(), b.begin(), b.end());
        return out;
      }
    }
    return {};
  }

  Dnf negate(const Dnf& d) {
    Dnf acc{{}};
    for (const auto& c : d) {
      if (c.empty()) return {};
      Dnf alts;
      for (const auto& l : c) {
        auto n = negate_lit(l);
        alts.insert(alts.end(), n.begin(), n.end());
      }
      acc = cross(acc, alts);
      if (acc.size() > 32) {
        Dnf kept;
        for (auto& x : acc)
          if (conj_sat(x)) kept.push_back(std::move(x));
        acc = std::move(kept);
      }
      if (acc.empty()) return {};
    }
    return acc;
  }

  Dnf dnf(const Pred& p, bool pos) {
    switch (p->kind) {
      case PredNode::Kind::True: return pos ? Dnf{{}} : Dnf{};
      case PredNode::Kind::False: return pos ? Dnf{} : Dnf{{}};
      case PredNode::Kind::Cmp:
      case PredNode::Kind::Holds: return atom(p, pos);
      case PredNode::Kind::Not: return dnf(p->args[0], !pos);
      case PredNode::Kind::And:
      case PredNode::Kind::Or: {
        bool product = (p->kind == PredNode::Kind::And) == pos;
        if (product) {
          Dnf acc{{}};
          for (const auto& a : p->args) {
            acc = cross(acc, dnf(a, pos));
            if (acc.empty()) break;
          }
          return acc;
        }
        Dnf out;
        for (const auto& a : p->args) {
          auto d = dnf(a, pos);
          out.insert(out.end(), d.begin(), d.end());
          budget(out.size());
        }
        return out;
      }
      case PredNode::Kind::Implies: {
        if (pos) {
          auto a = dnf(p->args[0], false);
          auto b = dnf(p->args[1], true);
          a.insert(a.end(), b.begin(), b.end());
          return a;
        }
        return cross(dnf(p->args[0], true), dnf(p->args[1], false));
      }
      case PredNode::Kind::Exists: {
        if (!pos) return negate(dnf(p, true));
        Dnf out;
        for (auto& c : dnf(p->args[0], true)) {
          auto e = eliminate(std::move(c), p->var, p->var_sort);
          if (e) out.push_back(std::move(*e));
        }
        return out;
      }
      case PredNode::Kind::Forall: return dnf(exists(p->var, p->var_sort, neg(p->args[0])), !pos);
    }
    return {};
  }

  static bool mentions(const Lit& l, const std::string& x, Sort s) {
    switch (l.kind) {
      case Lit::Le:
      case Lit::Eq: return s == Sort::Int && l.lin.c.count(x);
      case Lit::SEq: return s == Sort::String && ((!l.a.lit && l.a.s == x) || (!l.b.lit && l.b.s == x));
      case Lit::BVar: return s == Sort::Bool && l.name == x;
    }
    return false;
  }

  std::optional<Conj> eliminate(Conj c, const std::string& x, Sort s) {
    Conj keep, with;
    for (auto& l : c) (mentions(l, x, s) ? with : keep).push_back(std::move(l));
    if (with.empty()) return keep;
    if (s == Sort::Bool) {
      for (std::size_t i = 0; i < with.size(); ++i)
        for (std::size_t j = i + 1; j < with.size(); ++j)
          if (with[i].pos != with[j].pos) return std::nullopt;
      return keep;
    }
    if (s == Sort::String) {
      std::optional<StrTerm> val;
      for (const auto& l : with)
        if (l.pos) {
          StrTerm o = (!l.a.lit && l.a.s == x) ? l.b : l.a;
          if (o.lit || o.s != x) {
            val = o;
            break;
          }
        }
      if (!val) {
        for (const auto& l : with)
          if (!l.pos && l.a == l.b) return std::nullopt;
        return keep;
      }
      for (auto l : with) {
        if (!l.a.lit && l.a.s == x) l.a = *val;
        if (!l.b.lit && l.b.s == x) l.b = *val;
        if (!push(keep, l)) return std::nullopt;
      }
      return keep;
    }
    // integers
    for (std::size_t i = 0; i < with.size(); ++i) {
      if (with[i].kind != Lit::Eq) continue;
      long long a = with[i].lin.coef(x);
      if (a != 1 && a != -1) continue;
      // x = -(rest)/a
      Lin val = with[i].lin;
      val.c.erase(x);
      Lin v;
      v.add(val, -a);
      for (std::size_t j = 0; j < with.size(); ++j) {
        if (j == i) continue;
        Lit l = with[j];
        long long b = l.lin.coef(x);
        l.lin.c.erase(x);
        l.lin.add(v, b);
        if (!push(keep, l)) return std::nullopt;
      }
      return keep;
    }
    // a*x >= lo and b*x <= up project exactly when a or b is 1
    std::vector<std::pair<Lin, long long>> lower, upper;
    for (const auto& l : with) {
      long long a = l.lin.coef(x);
      if (l.kind == Lit::Eq) throw OutOfFragment("equality with coefficient " + std::to_string(a) + " on " + x);
      (a > 0 ? upper : lower).push_back({l.lin, a > 0 ? a : -a});
    }
    budget(keep.size() + lower.size() * upper.size());
    for (const auto& [lo, a] : lower)
      for (const auto& [up, b] : upper) {
        if (a != 1 && b != 1)
          throw OutOfFragment("coefficients " + std::to_string(a) + " and " + std::to_string(b) + " on " + x);
        Lin sum;
        sum.add(lo, b);
        sum.add(up, a);
        if (!push(keep, le(sum))) return std::nullopt;
      }
    return keep;
  }

  // Real and dark shadow of an inexact elimination; together they settle
  // satisfiability unless the integer gap between them matters.
  std::optional<bool> shadows(const Conj& ints, const std::string& x) {
    Conj keep, real, dark;
    std::vector<std::pair<Lin, long long>> lower, upper;
    for (const auto& l : ints) {
      long long a = l.lin.coef(x);
      if (a == 0) {
        keep.push_back(l);
        continue;
      }
      if (l.kind == Lit::Eq) {
        Lin n;
        n.add(l.lin, -1);
        (a > 0 ? upper : lower).push_back({l.lin, a > 0 ? a : -a});
        (a > 0 ? lower : upper).push_back({n, a > 0 ? a : -a});
        continue;
      }
      (a > 0 ? upper : lower).push_back({l.lin, a > 0 ? a : -a});
    }
    budget(keep.size() + lower.size() * upper.size());
    real = keep;
    dark = keep;
    bool real_ok = true, dark_ok = true;
    for (const auto& [lo, a] : lower)
      for (const auto& [up, b] : upper) {
        Lin sum;
        sum.add(lo, b);
        sum.add(up, a);
        real_ok = real_ok && push(real, le(sum));
        sum.k += (a - 1) * (b - 1);
        dark_ok = dark_ok && push(dark, le(sum));
      }
    if (!real_ok || !conj_sat(real)) return false;
    if (dark_ok && conj_sat(dark)) return true;
    return std::nullopt;
  }

  bool conj_sat(Conj c) {
    // booleans are checked on insertion; strings by union-find
    std::map<StrTerm, StrTerm> parent;
    std::function<StrTerm(const StrTerm&)> find = [&](const StrTerm& t) -> StrTerm {
      auto it = parent.find(t);
      if (it == parent.end() || it->second == t) return t;
      auto r = find(it->second);
      parent[t] = r;
      return r;
    };
    for (const auto& l : c)
      if (l.kind == Lit::SEq && l.pos) {
        auto a = find(l.a), b = find(l.b);
        if (a == b) continue;
        if (a.lit && b.lit) return false;
        if (a.lit) parent[b] = a;
        else parent[a] = b;
      }
    for (const auto& l : c)
      if (l.kind == Lit::SEq && !l.pos && find(l.a) == find(l.b)) return false;

    Conj ints;
    for (auto& l : c)
      if (l.kind == Lit::Le || l.kind == Lit::Eq) ints.push_back(std::move(l));
    while (true) {
      std::map<std::string, std::size_t> cost;
      std::set<std::string> unit_eq;
      std::map<std::string, std::pair<std::size_t, std::size_t>> bounds;
      for (const auto& l : ints)
        for (const auto& [x, a] : l.lin.c) {
          if (l.kind == Lit::Eq) {
            if (a == 1 || a == -1) unit_eq.insert(x);
          } else {
            (a > 0 ? bounds[x].second : bounds[x].first)++;
          }
          cost[x];
        }
      if (cost.empty()) return true;
      std::vector<std::string> order;
      for (const auto& x : unit_eq) order.push_back(x);
      std::vector<std::pair<std::size_t, std::string>> rest;
      for (const auto& [x, _] : cost)
        if (!unit_eq.count(x)) rest.push_back({bounds[x].first * bounds[x].second, x});
      std::sort(rest.begin(), rest.end());
      for (const auto& [_, x] : rest) order.push_back(x);
      std::optional<OutOfFragment> last;
      bool progressed = false;
      for (const auto& x : order) {
        try {
          auto r = eliminate(ints, x, Sort::Int);
          if (!r) return false;
          ints = std::move(*r);
          progressed = true;
          break;
        } catch (const OutOfFragment& e) {
          last = e;
        }
      }
      if (!progressed) {
        for (const auto& [_, x] : rest) {
          if (auto r = shadows(ints, x)) return *r;
        }
        throw *last;
      }
    }
  }
};

}  // namespace

SatResult BuiltinSolver::do_check(const Pred& p) {
  try {
    fv_sorted(p);
    Engine e(literal_cap_);
    return e.satisfiable(p) ? SatResult::Sat : SatResult::Unsat;
  } catch (const ResourceLimit&) {
    return SatResult::Unknown;
  } catch (const SortError& e) {
    throw SolverError(e.what());
  }
}

}  // namespace chorc
