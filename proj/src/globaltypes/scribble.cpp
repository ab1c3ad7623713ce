#include "chorc/globaltypes/scribble.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace chorc {

namespace {

struct Raw {
  std::string text;
  SourcePos pos;
};

struct Field {
  std::string name;
  Sort sort = Sort::Int;
  std::optional<Raw> refinement;
  SourcePos pos;
};

struct Param {
  Field field;
  std::vector<Participant> knowers;
  Raw init;
};

struct Stmt {
  enum class Kind { Msg, Choice, Rec, Continue };
  Kind kind;
  SourcePos pos;
  std::string name;  // message or rec label
  std::vector<Field> payload;
  std::string from, to;
  SourcePos from_pos, to_pos;
  std::string role;  // choice at
  std::vector<std::pair<SourcePos, std::vector<Stmt>>> blocks;
  std::vector<Param> params;
  std::vector<Stmt> body;
  std::vector<Raw> args;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ProtocolDecl parse() {
    ProtocolDecl d;
    skip();
    while (peek("(*#")) {
      auto start = i_;
      advance(3);
      auto end = s_.find("#*)", i_);
      if (end == std::string::npos) fail("unterminated pragma", pos_at(start));
      std::string body = s_.substr(i_, end - i_);
      advance(end + 3 - i_);
      std::string cur;
      for (char c : body + ",") {
        if (c == ',') {
          auto t = trim(cur);
          if (!t.empty()) d.pragmas.push_back(t);
          cur.clear();
        } else {
          cur += c;
        }
      }
      skip();
    }
    d.refinements = std::find(d.pragmas.begin(), d.pragmas.end(), "RefinementTypes") != d.pragmas.end();
    refinements_ = d.refinements;
    keyword("global");
    keyword("protocol");
    d.name = ident("protocol name");
    expect('(');
    if (!peek(")")) {
      do {
        keyword("role");
        skip();
        auto p = pos();
        auto r = ident("role name");
        if (roles_.count(r)) fail("duplicate role " + r, p);
        roles_.insert(r);
        d.roles.push_back(r);
      } while (accept(','));
    }
    expect(')');
    expect('{');
    auto stmts = block();
    expect('}');
    skip();
    if (i_ < s_.size()) fail("unexpected text after protocol", pos());
    std::map<std::string, Sort> env;
    std::vector<const Stmt*> scope;
    d.body = build(stmts, 0, env, scope, d);
    try {
      check_global_type(d.body);
    } catch (const GlobalTypeError& e) {
      fail(e.what(), {1, 1});
    }
    return d;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;
  std::size_t line_ = 1, col_ = 1;
  bool refinements_ = false;
  std::set<std::string> roles_;
  std::set<std::string> rec_labels_;

  [[noreturn]] static void fail(const std::string& msg, SourcePos p) { throw ProtocolParseError(msg, p); }

  static std::string trim(const std::string& x) {
    auto b = x.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return x.substr(b, x.find_last_not_of(" \t\r\n") - b + 1);
  }

  SourcePos pos() const { return {line_, col_}; }
  SourcePos pos_at(std::size_t j) const {
    SourcePos p;
    for (std::size_t k = 0; k < j && k < s_.size(); ++k) {
      if (s_[k] == '\n') {
        ++p.line;
        p.col = 1;
      } else {
        ++p.col;
      }
    }
    return p;
  }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n && i_ < s_.size(); ++k, ++i_) {
      if (s_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  bool peek(const std::string& t) const { return s_.compare(i_, t.size(), t) == 0; }

  void skip() {
    for (;;) {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance(1);
      if (peek("//")) {
        while (i_ < s_.size() && s_[i_] != '\n') advance(1);
      } else if (peek("/*")) {
        auto p = pos();
        auto end = s_.find("*/", i_ + 2);
        if (end == std::string::npos) fail("unterminated comment", p);
        advance(end + 2 - i_);
      } else {
        return;
      }
    }
  }

  bool accept(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      advance(1);
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip();
    if (!accept(c)) fail(std::string("expected '") + c + "'" + found(), pos());
  }

  std::string found() {
    if (i_ >= s_.size()) return " at end of input";
    return std::string(" before '") + s_[i_] + "'";
  }

  bool at_word(const std::string& w) {
    skip();
    if (!peek(w)) return false;
    auto j = i_ + w.size();
    return j >= s_.size() || !(std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_');
  }

  void keyword(const std::string& w) {
    if (!at_word(w)) fail("expected '" + w + "'" + found(), pos());
    advance(w.size());
  }

  std::string ident(const std::string& what) {
    skip();
    auto start = i_;
    if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) advance(1);
      return s_.substr(start, i_ - start);
    }
    fail("expected " + what + found(), pos());
  }

  // Text up to (not including) one of the stop characters at bracket depth 0.
  Raw raw_until(const std::string& stops, const std::string& what) {
    skip();
    Raw r{"", pos()};
    int depth = 0;
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (depth == 0 && stops.find(c) != std::string::npos) break;
      if (c == '(' || c == '[') ++depth;
      if (c == ')' || c == ']') --depth;
      r.text += c;
      advance(1);
    }
    if (i_ >= s_.size()) fail("unterminated " + what, r.pos);
    r.text = trim(r.text);
    if (r.text.empty()) fail("empty " + what, r.pos);
    return r;
  }

  Sort sort_name() {
    skip();
    auto p = pos();
    auto n = ident("sort");
    auto s = parse_sort(n);
    if (!s) fail("unknown sort " + n, p);
    return *s;
  }

  std::optional<Raw> refinement() {
    skip();
    if (!peek("{")) return std::nullopt;
    auto p = pos();
    if (!refinements_) fail("refinements need the RefinementTypes pragma", p);
    advance(1);
    auto r = raw_until("}", "refinement");
    expect('}');
    return r;
  }

  Field field(std::size_t index) {
    skip();
    Field f;
    f.pos = pos();
    auto n = ident("payload field");
    if (accept(':')) {
      f.name = n;
      f.sort = sort_name();
    } else if (auto s = parse_sort(n)) {
      f.name = "_" + std::to_string(index);
      f.sort = *s;
    } else {
      fail("expected ':' after payload field " + n, pos());
    }
    f.refinement = refinement();
    return f;
  }

  std::string role(SourcePos& p) {
    skip();
    p = pos();
    auto r = ident("role");
    if (!roles_.count(r)) fail("undeclared role " + r, p);
    return r;
  }

  std::vector<Stmt> block() {
    std::vector<Stmt> out;
    for (;;) {
      skip();
      if (i_ >= s_.size() || peek("}")) return out;
      out.push_back(statement());
    }
  }

  std::vector<Stmt> braced() {
    expect('{');
    auto b = block();
    expect('}');
    return b;
  }

  Stmt statement() {
    skip();
    Stmt st;
    st.pos = pos();
    if (at_word("choice")) {
      keyword("choice");
      keyword("at");
      SourcePos p;
      st.kind = Stmt::Kind::Choice;
      st.role = role(p);
      do {
        skip();
        auto bp = pos();
        st.blocks.push_back({bp, braced()});
      } while (at_word("or") && (keyword("or"), true));
      return st;
    }
    if (at_word("rec")) {
      keyword("rec");
      st.kind = Stmt::Kind::Rec;
      skip();
      auto p = pos();
      st.name = ident("rec label");
      if (!rec_labels_.insert(st.name).second) fail("duplicate rec label " + st.name, p);
      if (accept('[')) {
        if (!refinements_) fail("rec parameters need the RefinementTypes pragma", p);
        do {
          Param prm;
          skip();
          prm.field.pos = pos();
          prm.field.name = ident("parameter");
          if (accept('<')) {
            do {
              SourcePos rp;
              prm.knowers.push_back(role(rp));
            } while (accept(','));
            expect('>');
          }
          expect(':');
          prm.field.sort = sort_name();
          prm.field.refinement = refinement();
          expect('=');
          prm.init = raw_until(",]", "initial value");
          st.params.push_back(prm);
        } while (accept(','));
        expect(']');
      }
      st.body = braced();
      return st;
    }
    if (at_word("continue")) {
      keyword("continue");
      st.kind = Stmt::Kind::Continue;
      st.name = ident("rec label");
      if (accept('[')) {
        if (!refinements_) fail("continue arguments need the RefinementTypes pragma", st.pos);
        do st.args.push_back(raw_until(",]", "argument"));
        while (accept(','));
        expect(']');
      }
      expect(';');
      return st;
    }
    st.kind = Stmt::Kind::Msg;
    st.name = ident("message, choice, rec or continue");
    expect('(');
    skip();
    if (!peek(")")) {
      do st.payload.push_back(field(st.payload.size()));
      while (accept(','));
    }
    expect(')');
    keyword("from");
    st.from = role(st.from_pos);
    keyword("to");
    st.to = role(st.to_pos);
    if (st.from == st.to) fail("message " + st.name + " from " + st.from + " to itself", st.to_pos);
    expect(';');
    return st;
  }

  Pred pred(const Raw& r, const std::map<std::string, Sort>& env) {
    try {
      return parse_predicate(r.text, env);
    } catch (const PredicateParseError& e) {
      fail(e.what(), shift(r, e.offset));
    } catch (const SortError& e) {
      fail(e.what(), r.pos);
    }
  }

  Expr expr(const Raw& r, const std::map<std::string, Sort>& env) {
    try {
      return parse_expr(r.text, env);
    } catch (const PredicateParseError& e) {
      fail(e.what(), shift(r, e.offset));
    } catch (const SortError& e) {
      fail(e.what(), r.pos);
    }
  }

  static SourcePos shift(const Raw& r, std::size_t offset) {
    SourcePos p = r.pos;
    for (std::size_t k = 0; k < offset && k < r.text.size(); ++k) {
      if (r.text[k] == '\n') {
        ++p.line;
        p.col = 1;
      } else {
        ++p.col;
      }
    }
    return p;
  }

  void declare(std::map<std::string, Sort>& env, const Field& f) {
    auto it = env.find(f.name);
    if (it != env.end() && it->second != f.sort)
      fail("variable " + f.name + " redeclared as " + to_string(f.sort) + ", was " + to_string(it->second), f.pos);
    env[f.name] = f.sort;
  }

  GlobalType build(const std::vector<Stmt>& stmts, std::size_t i, std::map<std::string, Sort> env,
                   std::vector<const Stmt*>& scope, ProtocolDecl& d) {
    if (i == stmts.size()) return g_end();
    const auto& st = stmts[i];
    switch (st.kind) {
      case Stmt::Kind::Msg: {
        Payload payload;
        std::set<std::string> names;
        for (const auto& f : st.payload) {
          if (!names.insert(f.name).second) fail("repeated payload field " + f.name, f.pos);
          declare(env, f);
          payload.push_back({f.name, f.sort});
        }
        std::vector<Pred> parts;
        std::string text;
        for (const auto& f : st.payload)
          if (f.refinement) {
            parts.push_back(pred(*f.refinement, env));
            text += (text.empty() ? "" : " && ") + f.refinement->text;
          }
        Interaction inter{st.from, st.to, st.name};
        d.messages.push_back({inter, payload, text});
        auto cont = build(stmts, i + 1, env, scope, d);
        return g_msg(inter, cont, payload, parts.empty() ? top() : conj(parts));
      }
      case Stmt::Kind::Continue: {
        if (i + 1 != stmts.size()) fail("statements after continue " + st.name, stmts[i + 1].pos);
        const Stmt* rec = nullptr;
        for (auto* r : scope)
          if (r->name == st.name) rec = r;
        if (!rec) fail("continue to unknown rec label " + st.name, st.pos);
        Subst update;
        if (!st.args.empty()) {
          if (st.args.size() != rec->params.size())
            fail("continue " + st.name + " with " + std::to_string(st.args.size()) + " arguments, expected " +
                     std::to_string(rec->params.size()),
                 st.pos);
          for (std::size_t k = 0; k < st.args.size(); ++k) {
            auto e = expr(st.args[k], env);
            if (e->sort != rec->params[k].field.sort)
              fail("argument " + std::to_string(k + 1) + " of continue " + st.name + " has sort " + to_string(e->sort),
                   st.args[k].pos);
            update[rec->params[k].field.name] = e;
          }
        }
        return g_var(st.name, update);
      }
      case Stmt::Kind::Choice: {
        std::vector<GBranch> branches;
        for (const auto& [bp, blk] : st.blocks) {
          if (blk.empty()) fail("empty branch in choice at " + st.role, bp);
          auto g = build(blk, 0, env, scope, d);
          if (g->kind != GNode::Kind::Choice || g->chooser().name != st.role)
            fail("branch of choice at " + st.role + " must start with a message from " + st.role, blk.front().pos);
          for (const auto& b : g->branches) branches.push_back(b);
        }
        auto rest = build(stmts, i + 1, env, scope, d);
        if (rest->kind != GNode::Kind::End)
          for (auto& b : branches) b.cont = then(b.cont, rest);
        try {
          return g_choice(branches);
        } catch (const std::exception& e) {
          fail(e.what(), st.pos);
        }
      }
      case Stmt::Kind::Rec: {
        auto inner = env;
        Payload params;
        Subst init;
        std::vector<Pred> inv;
        std::map<std::string, std::vector<Participant>> knowers;
        for (const auto& prm : st.params) {
          auto e = expr(prm.init, env);
          if (e->sort != prm.field.sort)
            fail("initial value of " + prm.field.name + " has sort " + to_string(e->sort), prm.init.pos);
          init[prm.field.name] = e;
          declare(inner, prm.field);
          params.push_back({prm.field.name, prm.field.sort});
          if (!prm.knowers.empty()) knowers[prm.field.name] = prm.knowers;
        }
        for (const auto& prm : st.params)
          if (prm.field.refinement) inv.push_back(pred(*prm.field.refinement, inner));
        scope.push_back(&st);
        auto body = build(st.body, 0, inner, scope, d);
        scope.pop_back();
        auto rest = build(stmts, i + 1, env, scope, d);
        auto g = g_rec(st.name, body, params, inv.empty() ? top() : conj(inv), init, knowers);
        if (!guarded(g)) fail("continue " + st.name + " is not preceded by a message", st.pos);
        return rest->kind == GNode::Kind::End ? g : then(g, rest);
      }
    }
    return g_end();
  }
};

}  // namespace

ProtocolDecl parse_protocol(const std::string& text) { return Parser(text).parse(); }

}  // namespace chorc
