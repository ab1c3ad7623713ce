#include "chorc/io/skeleton.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chorc {

namespace {

struct Method {
  Action act;
  Payload payload;
  Pred assertion = top();
  std::string next;
};

struct StateModel {
  std::string name;
  bool complete = false;
  std::vector<Method> sends;
  std::vector<Method> receives;
};

struct Model {
  std::string role;
  std::vector<StateModel> states;
  std::string initial;
};

std::string camel(const std::string& s) {
  std::string r;
  bool up = true;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      up = true;
      continue;
    }
    r += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return r;
}

std::string ts_type(Sort s) {
  switch (s) {
    case Sort::Int:
      return "number";
    case Sort::Bool:
      return "boolean";
    case Sort::String:
      return "string";
  }
  return "unknown";
}

std::string params(const Payload& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + p[i].name + ": " + ts_type(p[i].sort);
  return s;
}

void doc(std::ostream& os, const std::string& head, const Method& m, const char* tag) {
  os << "  /**\n   * " << head << "\n";
  if (!is_true(m.assertion)) os << "   * " << tag << " " << to_string(m.assertion) << "\n";
  os << "   */\n";
}

std::string render_ts(const Model& m, const SkeletonOptions& opt) {
  std::ostringstream os;
  if (opt.unverified) os << "// UNVERIFIED: the protocol did not pass the well-formedness checks.\n";
  os << "// " << opt.protocol << " API skeleton for role " << m.role << ".\n";
  if (opt.server) os << "// Server role: " << *opt.server << ".\n";
  os << "// Generated by chorc. Not compiled or type-checked.\n\n";
  auto type = [&](const std::string& s) { return m.role + "_" + s; };
  os << "export type " << m.role << "_Initial = " << type(m.initial) << ";\n";
  for (const auto& s : m.states) {
    os << "\n// State " << s.name << "\n";
    os << "export interface " << type(s.name) << " {\n";
    for (const auto& x : s.sends) {
      doc(os, "Sends " + x.act.message + " to " + x.act.receiver.name + ", then " + x.next + ".", x, "@pre");
      os << "  send" << camel(x.act.message) << "To" << camel(x.act.receiver.name) << "(" << params(x.payload)
         << "): " << type(x.next) << ";\n";
    }
    for (const auto& x : s.receives) {
      doc(os, "Handles " + x.act.message + " from " + x.act.sender.name + ", then " + x.next + ".", x, "@post");
      os << "  on" << camel(x.act.message) << "From" << camel(x.act.sender.name) << "(" << params(x.payload)
         << "): void;\n";
    }
    if (s.complete) os << "  /** The session has ended for " << m.role << ". */\n  onComplete(): void;\n";
    os << "}\n";
  }
  return os.str();
}

using Renderer = std::string (*)(const Model&, const SkeletonOptions&);

const std::map<std::string, std::pair<std::string, Renderer>>& templates() {
  static const std::map<std::string, std::pair<std::string, Renderer>> t{{"ts", {"ts", render_ts}}};
  return t;
}

std::string render(const Model& m, const SkeletonOptions& opt) {
  auto it = templates().find(opt.template_name);
  if (it == templates().end()) throw std::invalid_argument("unknown skeleton template " + opt.template_name);
  return it->second.second(m, opt);
}

template <class L, class F>
Model build(const Participant& owner, const Fsa<L>& a, const std::vector<bool>& final, F method) {
  Model m;
  m.role = owner.name;
  m.initial = a.empty() ? "" : a.name(a.initial());
  for (StateIndex s = 0; s < a.size(); ++s) {
    StateModel st;
    st.name = a.name(s);
    st.complete = a.outgoing(s).empty() || (!final.empty() && final[s]);
    for (auto t : a.outgoing(s)) {
      const auto& tr = a.transition(t);
      if (!tr.label) continue;
      auto x = method(*tr.label);
      if (!x) continue;
      x->next = a.name(tr.target);
      (x->act.kind == ActionKind::Send ? st.sends : st.receives).push_back(*x);
    }
    m.states.push_back(std::move(st));
  }
  return m;
}

}  // namespace

std::string skeleton(const Cfsm& m, const SkeletonOptions& opt, const PayloadLookup& payload) {
  auto model = build(m.owner, m.fsa, m.final, [&](const Action& a) {
    return std::optional<Method>(Method{a, payload ? payload(a) : Payload{}});
  });
  return render(model, opt);
}

std::string skeleton(const AssertedCfsm& m, const SkeletonOptions& opt) {
  auto model = build(m.owner, m.fsa, m.final, [](const LocalLabel& l) -> std::optional<Method> {
    if (l.is_epsilon()) return std::nullopt;
    return Method{l.act(), l.payload(), l.assertion()};
  });
  return render(model, opt);
}

std::vector<std::string> skeleton_templates() {
  std::vector<std::string> names;
  for (const auto& [n, _] : templates()) names.push_back(n);
  return names;
}

std::string skeleton_extension(const std::string& template_name) {
  auto it = templates().find(template_name);
  if (it == templates().end()) throw std::invalid_argument("unknown skeleton template " + template_name);
  return it->second.first;
}

}  // namespace chorc
