#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chorc {

enum class Sort { Int, Bool, String };

std::string to_string(Sort s);
std::optional<Sort> parse_sort(const std::string& s);

class SortError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PredicateParseError : public std::runtime_error {
 public:
  PredicateParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg), offset(offset) {}
  std::size_t offset;
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { IntLit, BoolLit, StrLit, Var, Add, Sub, Mul, Neg, Mod };
  Kind kind;
  Sort sort;
  long long ival = 0;
  bool bval = false;
  std::string text;  // string literal or variable name
  std::vector<Expr> args;
};

Expr int_lit(long long v);
Expr bool_lit(bool v);
Expr str_lit(std::string v);
Expr var(std::string name, Sort s);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr negate(Expr a);
Expr mod(Expr a, Expr b);

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct PredNode;
using Pred = std::shared_ptr<const PredNode>;

struct PredNode {
  enum class Kind { True, False, Cmp, Holds, Not, And, Or, Implies, Exists, Forall };
  Kind kind;
  CmpOp op = CmpOp::Eq;
  Expr lhs, rhs;  // Cmp; Holds uses lhs (a boolean expression)
  std::vector<Pred> args;
  std::string var;  // quantified variable
  Sort var_sort = Sort::Int;
};

Pred top();
Pred bottom();
Pred cmp(CmpOp op, Expr a, Expr b);
Pred holds(Expr b);
Pred neg(Pred p);
Pred conj(std::vector<Pred> ps);
Pred conj(Pred a, Pred b);
Pred disj(std::vector<Pred> ps);
Pred disj(Pred a, Pred b);
Pred implies(Pred a, Pred b);
Pred exists(std::string x, Sort s, Pred body);
Pred exists(const std::vector<std::pair<std::string, Sort>>& xs, Pred body);
Pred forall(std::string x, Sort s, Pred body);

bool is_true(const Pred& p);
bool is_false(const Pred& p);

using Subst = std::map<std::string, Expr>;

std::set<std::string> fv(const Expr& e);
std::set<std::string> fv(const Pred& p);
std::set<std::string> bv(const Pred& p);
// Free variables with their sorts; throws SortError if a name is used at two sorts.
std::map<std::string, Sort> fv_sorted(const Pred& p);

// Capture-avoiding, sort-preserving substitution of free variables.
Expr substitute(const Expr& e, const Subst& s);
Pred substitute(const Pred& p, const Subst& s);
// iota' = iota[upd]: each updated expression is read under iota.
Subst compose_subst(const Subst& iota, const Subst& upd);

struct Quantifier {
  bool existential;
  std::string var;
  Sort sort;
};

struct Prenex {
  std::vector<Quantifier> prefix;
  Pred matrix;
};

Prenex prenex(const Pred& p);
Pred requantify(const std::vector<Quantifier>& prefix, Pred matrix);
// A o B: B conjoined to the matrix of A's prenex form under A's prefix.
// Free variables of B that share a name with the prefix are captured.
Pred prenex_compose(const Pred& a, const Pred& b);

std::string to_string(const Expr& e);
std::string to_string(const Pred& p);
std::string to_smtlib(const Expr& e);
std::string to_smtlib(const Pred& p);
bool same(const Pred& a, const Pred& b);

// Parses the refinement syntax (&&, ||, !, =>, =, !=, <, <=, >, >=, +, -, *, %,
// exists x:int. P). Variables are resolved against env.
Pred parse_predicate(const std::string& text, const std::map<std::string, Sort>& env);
Expr parse_expr(const std::string& text, const std::map<std::string, Sort>& env);

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

}  // namespace chorc
