#include "chorc/assertions/predicate.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace chorc {

std::string to_string(Sort s) {
  switch (s) {
    case Sort::Int: return "int";
    case Sort::Bool: return "bool";
    case Sort::String: return "string";
  }
  return "?";
}

std::optional<Sort> parse_sort(const std::string& s) {
  if (s == "int" || s == "Int" || s == "number") return Sort::Int;
  if (s == "bool" || s == "Bool" || s == "boolean") return Sort::Bool;
  if (s == "string" || s == "String" || s == "str") return Sort::String;
  return std::nullopt;
}

namespace {

Expr make_expr(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }
Pred make_pred(PredNode n) { return std::make_shared<const PredNode>(std::move(n)); }

void need_int(const Expr& e, const char* op) {
  if (e->sort != Sort::Int) throw SortError(std::string("operand of ") + op + " is not an int: " + to_string(e));
}

Expr arith(ExprNode::Kind k, Expr a, Expr b, const char* op) {
  need_int(a, op);
  need_int(b, op);
  ExprNode n{k, Sort::Int};
  n.args = {std::move(a), std::move(b)};
  return make_expr(std::move(n));
}

}  // namespace

Expr int_lit(long long v) {
  ExprNode n{ExprNode::Kind::IntLit, Sort::Int};
  n.ival = v;
  return make_expr(std::move(n));
}

Expr bool_lit(bool v) {
  ExprNode n{ExprNode::Kind::BoolLit, Sort::Bool};
  n.bval = v;
  return make_expr(std::move(n));
}

Expr str_lit(std::string v) {
  ExprNode n{ExprNode::Kind::StrLit, Sort::String};
  n.text = std::move(v);
  return make_expr(std::move(n));
}

Expr var(std::string name, Sort s) {
  if (name.empty()) throw SortError("empty variable name");
  ExprNode n{ExprNode::Kind::Var, s};
  n.text = std::move(name);
  return make_expr(std::move(n));
}

Expr add(Expr a, Expr b) { return arith(ExprNode::Kind::Add, std::move(a), std::move(b), "+"); }
Expr sub(Expr a, Expr b) { return arith(ExprNode::Kind::Sub, std::move(a), std::move(b), "-"); }
Expr mul(Expr a, Expr b) { return arith(ExprNode::Kind::Mul, std::move(a), std::move(b), "*"); }
Expr mod(Expr a, Expr b) { return arith(ExprNode::Kind::Mod, std::move(a), std::move(b), "%"); }

Expr negate(Expr a) {
  need_int(a, "unary -");
  if (a->kind == ExprNode::Kind::IntLit) return int_lit(-a->ival);
  ExprNode n{ExprNode::Kind::Neg, Sort::Int};
  n.args = {std::move(a)};
  return make_expr(std::move(n));
}

Pred top() {
  static const Pred t = make_pred(PredNode{PredNode::Kind::True});
  return t;
}

Pred bottom() {
  static const Pred f = make_pred(PredNode{PredNode::Kind::False});
  return f;
}

Pred cmp(CmpOp op, Expr a, Expr b) {
  if (a->sort != b->sort) throw SortError("comparison between " + to_string(a) + " and " + to_string(b) + " mixes sorts");
  if (op != CmpOp::Eq && op != CmpOp::Ne && a->sort != Sort::Int)
    throw SortError("ordering on non-int operands: " + to_string(a));
  PredNode n{PredNode::Kind::Cmp};
  n.op = op;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make_pred(std::move(n));
}

Pred holds(Expr b) {
  if (b->sort != Sort::Bool) throw SortError("not a boolean: " + to_string(b));
  if (b->kind == ExprNode::Kind::BoolLit) return b->bval ? top() : bottom();
  PredNode n{PredNode::Kind::Holds};
  n.lhs = std::move(b);
  return make_pred(std::move(n));
}

bool is_true(const Pred& p) { return p->kind == PredNode::Kind::True; }
bool is_false(const Pred& p) { return p->kind == PredNode::Kind::False; }

Pred neg(Pred p) {
  if (is_true(p)) return bottom();
  if (is_false(p)) return top();
  PredNode n{PredNode::Kind::Not};
  n.args = {std::move(p)};
  return make_pred(std::move(n));
}

Pred conj(std::vector<Pred> ps) {
  std::vector<Pred> keep;
  for (auto& p : ps) {
    if (is_false(p)) return bottom();
    if (is_true(p)) continue;
    if (p->kind == PredNode::Kind::And)
      keep.insert(keep.end(), p->args.begin(), p->args.end());
    else
      keep.push_back(std::move(p));
  }
  if (keep.empty()) return top();
  if (keep.size() == 1) return keep.front();
  PredNode n{PredNode::Kind::And};
  n.args = std::move(keep);
  return make_pred(std::move(n));
}

Pred conj(Pred a, Pred b) { return conj(std::vector<Pred>{std::move(a), std::move(b)}); }

Pred disj(std::vector<Pred> ps) {
  std::vector<Pred> keep;
  for (auto& p : ps) {
    if (is_true(p)) return top();
    if (is_false(p)) continue;
    if (p->kind == PredNode::Kind::Or)
      keep.insert(keep.end(), p->args.begin(), p->args.end());
    else
      keep.push_back(std::move(p));
  }
  if (keep.empty()) return bottom();
  if (keep.size() == 1) return keep.front();
  PredNode n{PredNode::Kind::Or};
  n.args = std::move(keep);
  return make_pred(std::move(n));
}

Pred disj(Pred a, Pred b) { return disj(std::vector<Pred>{std::move(a), std::move(b)}); }

Pred implies(Pred a, Pred b) {
  if (is_true(a)) return b;
  if (is_false(a) || is_true(b)) return top();
  PredNode n{PredNode::Kind::Implies};
  n.args = {std::move(a), std::move(b)};
  return make_pred(std::move(n));
}

static Pred quant(PredNode::Kind k, std::string x, Sort s, Pred body) {
  if (!fv(body).count(x)) return body;
  PredNode n{k};
  n.var = std::move(x);
  n.var_sort = s;
  n.args = {std::move(body)};
  return make_pred(std::move(n));
}

Pred exists(std::string x, Sort s, Pred body) {
  return quant(PredNode::Kind::Exists, std::move(x), s, std::move(body));
}

Pred exists(const std::vector<std::pair<std::string, Sort>>& xs, Pred body) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = exists(it->first, it->second, std::move(body));
  return body;
}

Pred forall(std::string x, Sort s, Pred body) {
  return quant(PredNode::Kind::Forall, std::move(x), s, std::move(body));
}

// ---- variables -------------------------------------------------------------

namespace {

void collect_fv(const Expr& e, std::map<std::string, Sort>& out, bool check) {
  if (e->kind == ExprNode::Kind::Var) {
    auto [it, fresh] = out.emplace(e->text, e->sort);
    if (!fresh && check && it->second != e->sort)
      throw SortError("variable " + e->text + " used as " + to_string(it->second) + " and " + to_string(e->sort));
    return;
  }
  for (const auto& a : e->args) collect_fv(a, out, check);
}

void collect_fv(const Pred& p, std::map<std::string, Sort>& out, std::set<std::string>& bound, bool check) {
  switch (p->kind) {
    case PredNode::Kind::True:
    case PredNode::Kind::False: return;
    case PredNode::Kind::Cmp:
    case PredNode::Kind::Holds: {
      std::map<std::string, Sort> local;
      collect_fv(p->lhs, local, check);
      if (p->rhs) collect_fv(p->rhs, local, check);
      for (auto& [n, s] : local) {
        if (bound.count(n)) continue;
        auto [it, fresh] = out.emplace(n, s);
        if (!fresh && check && it->second != s)
          throw SortError("variable " + n + " used as " + to_string(it->second) + " and " + to_string(s));
      }
      return;
    }
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall: {
      bool was = bound.count(p->var) > 0;
      bound.insert(p->var);
      collect_fv(p->args[0], out, bound, check);
      if (!was) bound.erase(p->var);
      return;
    }
    default:
      for (const auto& a : p->args) collect_fv(a, out, bound, check);
  }
}

void collect_bv(const Pred& p, std::set<std::string>& out) {
  if (p->kind == PredNode::Kind::Exists || p->kind == PredNode::Kind::Forall) out.insert(p->var);
  for (const auto& a : p->args) collect_bv(a, out);
}

}  // namespace

std::set<std::string> fv(const Expr& e) {
  std::map<std::string, Sort> m;
  collect_fv(e, m, false);
  std::set<std::string> r;
  for (auto& [n, s] : m) r.insert(n);
  return r;
}

std::set<std::string> fv(const Pred& p) {
  std::map<std::string, Sort> m;
  std::set<std::string> b;
  collect_fv(p, m, b, false);
  std::set<std::string> r;
  for (auto& [n, s] : m) r.insert(n);
  return r;
}

std::map<std::string, Sort> fv_sorted(const Pred& p) {
  std::map<std::string, Sort> m;
  std::set<std::string> b;
  collect_fv(p, m, b, true);
  return m;
}

std::set<std::string> bv(const Pred& p) {
  std::set<std::string> r;
  collect_bv(p, r);
  return r;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string n = base + "_" + std::to_string(i);
    if (!avoid.count(n)) return n;
  }
}

Expr substitute(const Expr& e, const Subst& s) {
  switch (e->kind) {
    case ExprNode::Kind::Var: {
      auto it = s.find(e->text);
      if (it == s.end()) return e;
      if (it->second->sort != e->sort)
        throw SortError("substituting " + to_string(it->second) + " for " + e->text + ":" + to_string(e->sort));
      return it->second;
    }
    case ExprNode::Kind::IntLit:
    case ExprNode::Kind::BoolLit:
    case ExprNode::Kind::StrLit: return e;
    default: {
      ExprNode n = *e;
      bool changed = false;
      for (auto& a : n.args) {
        auto b = substitute(a, s);
        changed = changed || b != a;
        a = b;
      }
      return changed ? make_expr(std::move(n)) : e;
    }
  }
}

Pred substitute(const Pred& p, const Subst& s) {
  if (s.empty()) return p;
  switch (p->kind) {
    case PredNode::Kind::True:
    case PredNode::Kind::False: return p;
    case PredNode::Kind::Cmp: return cmp(p->op, substitute(p->lhs, s), substitute(p->rhs, s));
    case PredNode::Kind::Holds: return holds(substitute(p->lhs, s));
    case PredNode::Kind::Not: return neg(substitute(p->args[0], s));
    case PredNode::Kind::And:
    case PredNode::Kind::Or: {
      std::vector<Pred> as;
      for (const auto& a : p->args) as.push_back(substitute(a, s));
      return p->kind == PredNode::Kind::And ? conj(std::move(as)) : disj(std::move(as));
    }
    case PredNode::Kind::Implies: return implies(substitute(p->args[0], s), substitute(p->args[1], s));
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall: {
      Subst inner = s;
      inner.erase(p->var);
      const auto& body = p->args[0];
      auto body_fv = fv(body);
      std::set<std::string> range_fv;
      for (const auto& [x, e] : inner)
        if (body_fv.count(x)) {
          auto f = fv(e);
          range_fv.insert(f.begin(), f.end());
        }
      std::string x = p->var;
      Pred nb = body;
      if (range_fv.count(x)) {
        std::set<std::string> avoid = body_fv;
        avoid.insert(range_fv.begin(), range_fv.end());
        for (const auto& [y, e] : inner) avoid.insert(y);
        x = fresh_name(p->var, avoid);
        nb = substitute(body, Subst{{p->var, var(x, p->var_sort)}});
      }
      nb = substitute(nb, inner);
      return p->kind == PredNode::Kind::Exists ? exists(x, p->var_sort, nb) : forall(x, p->var_sort, nb);
    }
  }
  return p;
}

Subst compose_subst(const Subst& iota, const Subst& upd) {
  Subst r = iota;
  for (const auto& [x, e] : upd) r[x] = substitute(e, iota);
  return r;
}

// ---- prenex ----------------------------------------------------------------

namespace {

Prenex rename_prefix(Prenex p, const std::set<std::string>& avoid) {
  std::set<std::string> taken = avoid;
  auto mfv = fv(p.matrix);
  taken.insert(mfv.begin(), mfv.end());
  for (auto& q : p.prefix) taken.insert(q.var);
  for (auto& q : p.prefix) {
    if (!avoid.count(q.var)) continue;
    std::string n = fresh_name(q.var, taken);
    taken.insert(n);
    p.matrix = substitute(p.matrix, Subst{{q.var, var(n, q.sort)}});
    q.var = n;
  }
  return p;
}

}  // namespace

Prenex prenex(const Pred& p) {
  switch (p->kind) {
    case PredNode::Kind::Not: {
      auto r = prenex(p->args[0]);
      for (auto& q : r.prefix) q.existential = !q.existential;
      r.matrix = neg(r.matrix);
      return r;
    }
    case PredNode::Kind::Implies: return prenex(disj(neg(p->args[0]), p->args[1]));
    case PredNode::Kind::And:
    case PredNode::Kind::Or: {
      std::vector<Prenex> parts;
      for (const auto& a : p->args) parts.push_back(prenex(a));
      Prenex out;
      std::vector<Pred> ms;
      std::set<std::string> used;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        std::set<std::string> avoid = used;
        for (std::size_t j = 0; j < parts.size(); ++j)
          if (j != i) {
            auto f = fv(requantify(parts[j].prefix, parts[j].matrix));
            avoid.insert(f.begin(), f.end());
          }
        auto r = rename_prefix(parts[i], avoid);
        for (auto& q : r.prefix) {
          used.insert(q.var);
          out.prefix.push_back(q);
        }
        ms.push_back(r.matrix);
      }
      out.matrix = p->kind == PredNode::Kind::And ? conj(std::move(ms)) : disj(std::move(ms));
      return out;
    }
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall: {
      auto r = prenex(p->args[0]);
      r.prefix.insert(r.prefix.begin(), Quantifier{p->kind == PredNode::Kind::Exists, p->var, p->var_sort});
      return r;
    }
    default: return Prenex{{}, p};
  }
}

Pred requantify(const std::vector<Quantifier>& prefix, Pred matrix) {
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it)
    matrix = it->existential ? exists(it->var, it->sort, matrix) : forall(it->var, it->sort, matrix);
  return matrix;
}

Pred prenex_compose(const Pred& a, const Pred& b) {
  auto pa = prenex(a);
  return requantify(pa.prefix, conj(pa.matrix, b));
}

// ---- printing --------------------------------------------------------------

namespace {

std::string quote(const std::string& s, bool smt) {
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += smt ? "\"\"" : "\\\"";
    else if (c == '\\' && !smt) r += "\\\\";
    else r += c;
  }
  return r + "\"";
}

int expr_prec(const Expr& e) {
  switch (e->kind) {
    case ExprNode::Kind::Add:
    case ExprNode::Kind::Sub: return 1;
    case ExprNode::Kind::Mul:
    case ExprNode::Kind::Mod: return 2;
    case ExprNode::Kind::Neg: return 3;
    case ExprNode::Kind::IntLit: return e->ival < 0 ? 3 : 4;
    default: return 4;
  }
}

std::string expr_str(const Expr& e, int ctx) {
  std::string s;
  switch (e->kind) {
    case ExprNode::Kind::IntLit: s = std::to_string(e->ival); break;
    case ExprNode::Kind::BoolLit: s = e->bval ? "true" : "false"; break;
    case ExprNode::Kind::StrLit: s = quote(e->text, false); break;
    case ExprNode::Kind::Var: s = e->text; break;
    case ExprNode::Kind::Add: s = expr_str(e->args[0], 1) + " + " + expr_str(e->args[1], 2); break;
    case ExprNode::Kind::Sub: s = expr_str(e->args[0], 1) + " - " + expr_str(e->args[1], 2); break;
    case ExprNode::Kind::Mul: s = expr_str(e->args[0], 2) + " * " + expr_str(e->args[1], 3); break;
    case ExprNode::Kind::Mod: s = expr_str(e->args[0], 2) + " % " + expr_str(e->args[1], 3); break;
    case ExprNode::Kind::Neg: s = "-" + expr_str(e->args[0], 3); break;
  }
  return expr_prec(e) < ctx ? "(" + s + ")" : s;
}

const char* op_str(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

int pred_prec(const Pred& p) {
  switch (p->kind) {
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall: return 0;
    case PredNode::Kind::Implies: return 1;
    case PredNode::Kind::Or: return 2;
    case PredNode::Kind::And: return 3;
    default: return 4;
  }
}

std::string pred_str(const Pred& p, int ctx) {
  std::string s;
  switch (p->kind) {
    case PredNode::Kind::True: s = "true"; break;
    case PredNode::Kind::False: s = "false"; break;
    case PredNode::Kind::Cmp: s = expr_str(p->lhs, 1) + " " + op_str(p->op) + " " + expr_str(p->rhs, 1); break;
    case PredNode::Kind::Holds: s = expr_str(p->lhs, 4); break;
    case PredNode::Kind::Not: s = "!" + pred_str(p->args[0], 5); break;
    case PredNode::Kind::And:
    case PredNode::Kind::Or: {
      const char* sep = p->kind == PredNode::Kind::And ? " && " : " || ";
      int cp = p->kind == PredNode::Kind::And ? 4 : 3;
      for (std::size_t i = 0; i < p->args.size(); ++i) s += (i ? sep : "") + pred_str(p->args[i], cp);
      break;
    }
    case PredNode::Kind::Implies: s = pred_str(p->args[0], 2) + " => " + pred_str(p->args[1], 1); break;
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall:
      s = std::string(p->kind == PredNode::Kind::Exists ? "exists " : "forall ") + p->var + ":" +
          to_string(p->var_sort) + ". " + pred_str(p->args[0], 0);
      break;
  }
  return pred_prec(p) < ctx ? "(" + s + ")" : s;
}

std::string smt_sort(Sort s) {
  switch (s) {
    case Sort::Int: return "Int";
    case Sort::Bool: return "Bool";
    case Sort::String: return "String";
  }
  return "?";
}

}  // namespace

std::string to_string(const Expr& e) { return expr_str(e, 0); }
std::string to_string(const Pred& p) { return pred_str(p, 0); }
bool same(const Pred& a, const Pred& b) { return a == b || to_string(a) == to_string(b); }

std::string to_smtlib(const Expr& e) {
  switch (e->kind) {
    case ExprNode::Kind::IntLit:
      return e->ival < 0 ? "(- " + std::to_string(-e->ival) + ")" : std::to_string(e->ival);
    case ExprNode::Kind::BoolLit: return e->bval ? "true" : "false";
    case ExprNode::Kind::StrLit: return quote(e->text, true);
    case ExprNode::Kind::Var: return "|" + e->text + "|";
    case ExprNode::Kind::Add: return "(+ " + to_smtlib(e->args[0]) + " " + to_smtlib(e->args[1]) + ")";
    case ExprNode::Kind::Sub: return "(- " + to_smtlib(e->args[0]) + " " + to_smtlib(e->args[1]) + ")";
    case ExprNode::Kind::Mul: return "(* " + to_smtlib(e->args[0]) + " " + to_smtlib(e->args[1]) + ")";
    case ExprNode::Kind::Mod: return "(mod " + to_smtlib(e->args[0]) + " " + to_smtlib(e->args[1]) + ")";
    case ExprNode::Kind::Neg: return "(- " + to_smtlib(e->args[0]) + ")";
  }
  return "";
}

std::string to_smtlib(const Pred& p) {
  auto nary = [&](const char* op) {
    std::string s = std::string("(") + op;
    for (const auto& a : p->args) s += " " + to_smtlib(a);
    return s + ")";
  };
  switch (p->kind) {
    case PredNode::Kind::True: return "true";
    case PredNode::Kind::False: return "false";
    case PredNode::Kind::Cmp: {
      auto l = to_smtlib(p->lhs), r = to_smtlib(p->rhs);
      switch (p->op) {
        case CmpOp::Eq: return "(= " + l + " " + r + ")";
        case CmpOp::Ne: return "(not (= " + l + " " + r + "))";
        case CmpOp::Lt: return "(< " + l + " " + r + ")";
        case CmpOp::Le: return "(<= " + l + " " + r + ")";
        case CmpOp::Gt: return "(> " + l + " " + r + ")";
        case CmpOp::Ge: return "(>= " + l + " " + r + ")";
      }
      return "";
    }
    case PredNode::Kind::Holds: return to_smtlib(p->lhs);
    case PredNode::Kind::Not: return "(not " + to_smtlib(p->args[0]) + ")";
    case PredNode::Kind::And: return nary("and");
    case PredNode::Kind::Or: return nary("or");
    case PredNode::Kind::Implies: return nary("=>");
    case PredNode::Kind::Exists:
    case PredNode::Kind::Forall:
      return std::string("(") + (p->kind == PredNode::Kind::Exists ? "exists" : "forall") + " ((|" + p->var + "| " +
             smt_sort(p->var_sort) + ")) " + to_smtlib(p->args[0]) + ")";
  }
  return "";
}

// ---- parsing ---------------------------------------------------------------

namespace {

struct Tok {
  enum Kind { Ident, Int, Str, Op, End } kind;
  std::string text;
  long long ival = 0;
  std::size_t pos = 0;
};

std::vector<Tok> lex(const std::string& s) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, s.substr(start, i - start), 0, start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      Tok t{Tok::Int, s.substr(start, i - start), 0, start};
      try {
        t.ival = std::stoll(t.text);
      } catch (const std::exception&) {
        throw PredicateParseError("integer literal out of range", start);
      }
      out.push_back(t);
    } else if (c == '"') {
      std::string v;
      ++i;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        v += s[i++];
      }
      if (i >= s.size()) throw PredicateParseError("unterminated string literal", start);
      ++i;
      out.push_back({Tok::Str, v, 0, start});
    } else {
      static const char* ops[] = {"&&", "||", "=>", "==", "!=", "<=", ">=", "<", ">", "=", "!",
                                  "+",  "-",  "*",  "%",  "(",  ")",  ":",  ".", ",", "&", "|"};
      bool found = false;
      for (const char* op : ops) {
        std::string o(op);
        if (s.compare(i, o.size(), o) == 0) {
          std::string t = o == "&" ? "&&" : o == "|" ? "||" : o == "==" ? "=" : o;
          out.push_back({Tok::Op, t, 0, start});
          i += o.size();
          found = true;
          break;
        }
      }
      if (!found) throw PredicateParseError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Tok::End, "", 0, s.size()});
  return out;
}

struct Val {
  Pred p;
  Expr e;
  bool is_pred() const { return p != nullptr; }
};

class Parser {
 public:
  Parser(const std::string& text, std::map<std::string, Sort> env) : toks_(lex(text)), env_(std::move(env)) {}

  Val parse_all() {
    auto v = impl();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return v;
  }

  Pred as_pred(const Val& v, std::size_t pos) {
    if (v.is_pred()) return v.p;
    if (v.e->sort == Sort::Bool) return holds(v.e);
    throw PredicateParseError("expected a boolean condition, got " + to_string(v.e), pos);
  }

  Expr as_expr(const Val& v, std::size_t pos) {
    if (!v.is_pred()) return v.e;
    throw PredicateParseError("expected an expression, got a condition", pos);
  }

 private:
  const Tok& peek() const { return toks_[i_]; }
  bool accept(const std::string& op) {
    if ((peek().kind == Tok::Op || peek().kind == Tok::Ident) && peek().text == op) {
      ++i_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) { throw PredicateParseError(msg, peek().pos); }
  void expect(const std::string& op) {
    if (!accept(op)) fail("expected '" + op + "'");
  }

  Val impl() {
    std::size_t pos = peek().pos;
    auto l = disjunction();
    if (accept("=>")) {
      std::size_t rpos = peek().pos;
      auto r = impl();
      return {implies(as_pred(l, pos), as_pred(r, rpos)), nullptr};
    }
    return l;
  }

  Val disjunction() {
    std::size_t pos = peek().pos;
    auto l = conjunction();
    if (peek().kind != Tok::Op || peek().text != "||") return l;
    std::vector<Pred> ps{as_pred(l, pos)};
    while (accept("||")) {
      std::size_t p2 = peek().pos;
      ps.push_back(as_pred(conjunction(), p2));
    }
    return {disj(std::move(ps)), nullptr};
  }

  Val conjunction() {
    std::size_t pos = peek().pos;
    auto l = unary_pred();
    if (peek().kind != Tok::Op || peek().text != "&&") return l;
    std::vector<Pred> ps{as_pred(l, pos)};
    while (accept("&&")) {
      std::size_t p2 = peek().pos;
      ps.push_back(as_pred(unary_pred(), p2));
    }
    return {conj(std::move(ps)), nullptr};
  }

  Val unary_pred() {
    std::size_t pos = peek().pos;
    if (accept("!")) return {neg(as_pred(unary_pred(), pos)), nullptr};
    if (peek().kind == Tok::Ident && (peek().text == "exists" || peek().text == "forall")) {
      bool ex = peek().text == "exists";
      ++i_;
      if (peek().kind != Tok::Ident) fail("expected a variable name");
      std::string x = peek().text;
      ++i_;
      expect(":");
      if (peek().kind != Tok::Ident) fail("expected a sort");
      auto s = parse_sort(peek().text);
      if (!s) fail("unknown sort '" + peek().text + "'");
      ++i_;
      expect(".");
      auto saved = env_;
      env_[x] = *s;
      std::size_t bpos = peek().pos;
      auto body = as_pred(impl(), bpos);
      env_ = saved;
      return {ex ? exists(x, *s, body) : forall(x, *s, body), nullptr};
    }
    return comparison();
  }

  std::optional<CmpOp> cmp_op() {
    if (peek().kind != Tok::Op) return std::nullopt;
    const auto& t = peek().text;
    if (t == "=") return CmpOp::Eq;
    if (t == "!=") return CmpOp::Ne;
    if (t == "<") return CmpOp::Lt;
    if (t == "<=") return CmpOp::Le;
    if (t == ">") return CmpOp::Gt;
    if (t == ">=") return CmpOp::Ge;
    return std::nullopt;
  }

  Val comparison() {
    std::size_t pos = peek().pos;
    auto l = sum();
    auto op = cmp_op();
    if (!op) return l;
    std::vector<Pred> chain;
    Expr left = as_expr(l, pos);
    while (op) {
      std::size_t opos = peek().pos;
      ++i_;
      std::size_t rpos = peek().pos;
      Expr right = as_expr(sum(), rpos);
      try {
        chain.push_back(cmp(*op, left, right));
      } catch (const SortError& e) {
        throw PredicateParseError(e.what(), opos);
      }
      left = right;
      op = cmp_op();
    }
    return {conj(std::move(chain)), nullptr};
  }

  Val sum() {
    std::size_t pos = peek().pos;
    auto l = product();
    while (peek().kind == Tok::Op && (peek().text == "+" || peek().text == "-")) {
      bool plus = peek().text == "+";
      std::size_t opos = peek().pos;
      ++i_;
      std::size_t rpos = peek().pos;
      auto r = product();
      try {
        l = {nullptr, plus ? add(as_expr(l, pos), as_expr(r, rpos)) : sub(as_expr(l, pos), as_expr(r, rpos))};
      } catch (const SortError& e) {
        throw PredicateParseError(e.what(), opos);
      }
    }
    return l;
  }

  Val product() {
    std::size_t pos = peek().pos;
    auto l = unary_expr();
    while ((peek().kind == Tok::Op && (peek().text == "*" || peek().text == "%")) ||
           (peek().kind == Tok::Ident && peek().text == "mod")) {
      bool times = peek().text == "*";
      std::size_t opos = peek().pos;
      ++i_;
      std::size_t rpos = peek().pos;
      auto r = unary_expr();
      try {
        l = {nullptr, times ? mul(as_expr(l, pos), as_expr(r, rpos)) : mod(as_expr(l, pos), as_expr(r, rpos))};
      } catch (const SortError& e) {
        throw PredicateParseError(e.what(), opos);
      }
    }
    return l;
  }

  Val unary_expr() {
    std::size_t pos = peek().pos;
    if (accept("-")) {
      try {
        return {nullptr, negate(as_expr(unary_expr(), pos))};
      } catch (const SortError& e) {
        throw PredicateParseError(e.what(), pos);
      }
    }
    return atom();
  }

  Val atom() {
    const Tok t = peek();
    switch (t.kind) {
      case Tok::Int: ++i_; return {nullptr, int_lit(t.ival)};
      case Tok::Str: ++i_; return {nullptr, str_lit(t.text)};
      case Tok::Ident: {
        ++i_;
        if (t.text == "true") return {nullptr, bool_lit(true)};
        if (t.text == "false") return {nullptr, bool_lit(false)};
        auto it = env_.find(t.text);
        if (it == env_.end()) throw PredicateParseError("unknown variable '" + t.text + "'", t.pos);
        return {nullptr, var(t.text, it->second)};
      }
      case Tok::Op:
        if (t.text == "(") {
          ++i_;
          auto v = impl();
          expect(")");
          return v;
        }
        fail("unexpected '" + t.text + "'");
      case Tok::End: fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  std::vector<Tok> toks_;
  std::size_t i_ = 0;
  std::map<std::string, Sort> env_;
};

}  // namespace

Pred parse_predicate(const std::string& text, const std::map<std::string, Sort>& env) {
  Parser p(text, env);
  auto v = p.parse_all();
  return p.as_pred(v, 0);
}

Expr parse_expr(const std::string& text, const std::map<std::string, Sort>& env) {
  Parser p(text, env);
  return p.as_expr(p.parse_all(), 0);
}

}  // namespace chorc
