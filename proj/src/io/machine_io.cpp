#include "chorc/io/machine_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace chorc {

namespace {

using Sorts = std::map<std::string, Sort>;

Json payload_json(const Payload& p) {
  Json arr = Json::array();
  for (const auto& v : p) arr.push_back({{"name", v.name}, {"sort", to_string(v.sort)}});
  return arr;
}

void note_sorts(Sorts& env, const Pred& p) {
  for (const auto& [x, s] : fv_sorted(p)) env[x] = s;
}

void note_sorts(Sorts& env, const Payload& p) {
  for (const auto& v : p) env[v.name] = v.sort;
}

void note_sorts(Sorts& env, const Subst& iota) {
  for (const auto& [x, e] : iota) note_sorts(env, cmp(CmpOp::Eq, var(x, e->sort), e));
}

Json sorts_json(const Sorts& env) {
  Json j = Json::object();
  for (const auto& [x, s] : env) j[x] = to_string(s);
  return j;
}

Json interaction_json(const Interaction& i) {
  return {{"kind", "interaction"},
          {"sender", i.sender.name},
          {"receiver", i.receiver.name},
          {"message", i.message},
          {"payload", Json::array()}};
}

Json action_json(const Action& a) {
  return {{"kind", a.kind == ActionKind::Send ? "send" : "receive"},
          {"sender", a.sender.name},
          {"receiver", a.receiver.name},
          {"message", a.message},
          {"payload", Json::array()}};
}

const Json epsilon_json = {{"kind", "epsilon"}};

void add_assertion(Json& label, const Pred& p) {
  if (!is_true(p)) label["assertion"] = to_string(p);
}

template <class L, class F>
Json machine_json(const Fsa<L>& a, const EmitMeta& meta, F label, std::function<bool(StateIndex)> final) {
  Json j;
  j["schemaVersion"] = kSchemaVersion;
  j["protocol"] = meta.protocol;
  if (meta.role) j["role"] = *meta.role;
  if (meta.unverified) j["unverified"] = true;
  Json states = Json::array();
  for (StateIndex s = 0; s < a.size(); ++s) states.push_back({{"id", a.name(s)}, {"final", final(s)}});
  j["states"] = states;
  j["initial"] = a.empty() ? Json() : Json(a.name(a.initial()));
  Json ts = Json::array();
  for (const auto& t : a.transitions())
    ts.push_back({{"from", a.name(t.source)}, {"to", a.name(t.target)}, {"label", t.label ? label(*t.label) : epsilon_json}});
  j["transitions"] = ts;
  return j;
}

template <class L>
std::function<bool(StateIndex)> terminal(const Fsa<L>& a) {
  return [&a](StateIndex s) { return a.outgoing(s).empty(); };
}

const Json& field(const Json& j, const char* k) {
  if (!j.is_object() || !j.contains(k)) throw IoError(std::string("missing field '") + k + "'");
  return j.at(k);
}

std::string text(const Json& j, const char* k) {
  const auto& v = field(j, k);
  if (!v.is_string()) throw IoError(std::string("field '") + k + "' is not a string");
  return v.get<std::string>();
}

Sorts load_sorts(const Json& j) {
  Sorts env;
  if (!j.contains("variables")) return env;
  for (const auto& [x, s] : j.at("variables").items()) {
    auto sort = parse_sort(s.get<std::string>());
    if (!sort) throw IoError("unknown sort " + s.dump() + " for " + x);
    env[x] = *sort;
  }
  return env;
}

Payload load_payload(const Json& label) {
  Payload p;
  if (!label.contains("payload")) return p;
  for (const auto& v : label.at("payload")) {
    auto sort = parse_sort(text(v, "sort"));
    if (!sort) throw IoError("unknown sort " + text(v, "sort"));
    p.push_back({text(v, "name"), *sort});
  }
  return p;
}

Pred load_assertion(const Json& label, Sorts env, const Payload& p) {
  if (!label.contains("assertion")) return top();
  for (const auto& v : p) env[v.name] = v.sort;
  try {
    return parse_predicate(label.at("assertion").get<std::string>(), env);
  } catch (const std::exception& e) {
    throw IoError("bad assertion: " + std::string(e.what()));
  }
}

std::string kind_of(const Json& label) { return text(label, "kind"); }

// Builds states and returns the final flags; calls add(from, label json, to) per transition.
template <class L, class F>
std::vector<bool> load_shape(const Json& j, Fsa<L>& a, F add) {
  if (field(j, "schemaVersion") != kSchemaVersion) throw IoError("unsupported schemaVersion " + j.at("schemaVersion").dump());
  std::vector<bool> final;
  for (const auto& s : field(j, "states")) {
    auto id = text(s, "id");
    if (a.find_state(id)) throw IoError("duplicate state " + id);
    a.add_state(id);
    final.push_back(s.contains("final") && s.at("final").get<bool>());
  }
  if (a.empty()) throw IoError("machine has no states");
  auto state = [&](const std::string& n) {
    auto s = a.find_state(n);
    if (!s) throw IoError("unknown state " + n);
    return *s;
  };
  a.set_initial(state(text(j, "initial")));
  for (const auto& t : field(j, "transitions")) add(state(text(t, "from")), field(t, "label"), state(text(t, "to")));
  return final;
}

Action load_action(const Json& l) {
  auto k = kind_of(l);
  if (k != "send" && k != "receive") throw IoError("expected a send or receive label, got " + k);
  return Action{k == "send" ? ActionKind::Send : ActionKind::Receive, text(l, "sender"), text(l, "receiver"),
                text(l, "message")};
}

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '"' || c == '\\') r += '\\';
    r += c;
  }
  return r;
}

template <class L, class F>
std::string dot(const Fsa<L>& a, const EmitMeta& meta, F label, std::function<bool(StateIndex)> final) {
  std::ostringstream os;
  std::string title = meta.protocol + (meta.role ? "_" + *meta.role : "");
  if (meta.unverified) os << "// UNVERIFIED\n";
  os << "digraph \"" << escape(title) << "\" {\n";
  os << "  rankdir=LR;\n";
  if (meta.unverified) os << "  label=\"UNVERIFIED\";\n";
  os << "  node [shape=circle];\n";
  os << "  __start [shape=point, label=\"\"];\n";
  for (StateIndex s = 0; s < a.size(); ++s)
    os << "  \"" << escape(a.name(s)) << "\"" << (final(s) ? " [shape=doublecircle]" : "") << ";\n";
  if (!a.empty()) os << "  __start -> \"" << escape(a.name(a.initial())) << "\";\n";
  for (const auto& t : a.transitions())
    os << "  \"" << escape(a.name(t.source)) << "\" -> \"" << escape(a.name(t.target)) << "\" [label=\""
       << escape(t.label ? label(*t.label) : std::string("eps")) << "\"];\n";
  os << "}\n";
  return os.str();
}

std::string bracket(const Pred& p) { return is_true(p) ? "" : " [" + to_string(p) + "]"; }

std::string asserted_dot_label(const AssertedLabel& l) {
  if (l.is_iteration()) return l.action_key() + bracket(l.assertion());
  return l.inter().to_string() + bracket(l.assertion());
}

std::string local_dot_label(const LocalLabel& l) {
  return (l.is_epsilon() ? std::string("eps") : l.act().to_string()) + bracket(l.assertion());
}

}  // namespace

Json to_json(const CAutomaton& a, const EmitMeta& meta) {
  return machine_json(a.fsa, meta, interaction_json, terminal(a.fsa));
}

Json to_json(const AssertedCA& a, const EmitMeta& meta) {
  Sorts env;
  auto label = [&](const AssertedLabel& l) {
    Json j;
    if (l.is_iteration()) {
      j = {{"kind", "iteration"}, {"rec", l.rec()}, {"update", Json::object()}};
      for (const auto& [x, e] : l.iota()) j["update"][x] = to_string(e);
      note_sorts(env, l.iota());
    } else {
      j = interaction_json(l.inter());
      j["payload"] = payload_json(l.payload());
      note_sorts(env, l.payload());
    }
    add_assertion(j, l.assertion());
    note_sorts(env, l.assertion());
    return j;
  };
  auto j = machine_json(a.fsa, meta, label, terminal(a.fsa));
  Json recs = Json::object();
  for (const auto& [r, e] : a.rho) {
    recs[r] = {{"params", payload_json(e.params)}, {"anchor", a.fsa.name(e.anchor)}};
    if (!is_true(e.invariant)) recs[r]["invariant"] = to_string(e.invariant);
    note_sorts(env, e.params);
    note_sorts(env, e.invariant);
  }
  j["recursions"] = recs;
  j["variables"] = sorts_json(env);
  return j;
}

Json to_json(const Cfsm& m, const EmitMeta& meta) {
  auto final = [&m](StateIndex s) { return !m.final.empty() && m.final[s]; };
  return machine_json(m.fsa, meta, action_json, final);
}

Json to_json(const AssertedCfsm& m, const EmitMeta& meta) {
  Sorts env;
  auto label = [&](const LocalLabel& l) {
    if (l.is_epsilon()) {
      Json j = epsilon_json;
      add_assertion(j, l.assertion());
      note_sorts(env, l.assertion());
      return j;
    }
    auto j = action_json(l.act());
    j["payload"] = payload_json(l.payload());
    add_assertion(j, l.assertion());
    note_sorts(env, l.payload());
    note_sorts(env, l.assertion());
    return j;
  };
  auto final = [&m](StateIndex s) { return !m.final.empty() && m.final[s]; };
  auto j = machine_json(m.fsa, meta, label, final);
  j["variables"] = sorts_json(env);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

bool has_assertions(const Json& j) {
  if (!j.contains("transitions")) return false;
  for (const auto& t : j.at("transitions")) {
    if (!t.contains("label")) continue;
    const auto& l = t.at("label");
    if (l.contains("assertion") || (l.contains("payload") && !l.at("payload").empty())) return true;
    if (l.contains("kind") && l.at("kind") == "iteration") return true;
  }
  return false;
}

CAutomaton load_c_automaton(const Json& j) {
  Fsa<Interaction> f;
  load_shape(j, f, [&](StateIndex from, const Json& l, StateIndex to) {
    auto k = kind_of(l);
    if (k == "epsilon") return void(f.add_transition(from, std::nullopt, to));
    if (k != "interaction") throw IoError("expected an interaction label, got " + k);
    try {
      f.add_transition(from, Interaction(text(l, "sender"), text(l, "receiver"), text(l, "message")), to);
    } catch (const std::invalid_argument& e) {
      throw IoError(e.what());
    }
  });
  if (j.contains("participants")) {
    ParticipantSet ps;
    for (const auto& p : j.at("participants")) ps.insert(p.get<std::string>());
    return CAutomaton(std::move(f), ps);
  }
  return CAutomaton(std::move(f));
}

AssertedCA load_asserted_ca(const Json& j) {
  auto env = load_sorts(j);
  AssertedCA a;
  load_shape(j, a.fsa, [&](StateIndex from, const Json& l, StateIndex to) {
    auto k = kind_of(l);
    if (k == "epsilon") return void(a.fsa.add_transition(from, std::nullopt, to));
    if (k == "iteration") {
      Subst iota;
      if (l.contains("update"))
        for (const auto& [x, e] : l.at("update").items()) iota[x] = parse_expr(e.get<std::string>(), env);
      return void(a.fsa.add_transition(from, AssertedLabel::iteration(text(l, "rec"), iota, load_assertion(l, env, {})), to));
    }
    if (k != "interaction") throw IoError("expected an interaction or iteration label, got " + k);
    auto p = load_payload(l);
    Interaction i(text(l, "sender"), text(l, "receiver"), text(l, "message"));
    a.fsa.add_transition(from, AssertedLabel::interaction(i, p, load_assertion(l, env, p)), to);
  });
  if (j.contains("recursions"))
    for (const auto& [r, e] : j.at("recursions").items()) {
      RecEntry entry;
      entry.params = load_payload(e);
      entry.invariant = load_assertion({{"assertion", e.value("invariant", "true")}}, env, entry.params);
      auto anchor = a.fsa.find_state(text(e, "anchor"));
      if (!anchor) throw IoError("unknown anchor for " + r);
      entry.anchor = *anchor;
      a.rho[r] = entry;
    }
  for (const auto& t : a.fsa.transitions())
    if (t.label) {
      auto ps = participants_of(*t.label);
      a.participants.insert(ps.begin(), ps.end());
    }
  return a;
}

Cfsm load_cfsm(const Json& j) {
  Cfsm m;
  m.owner = text(j, "role");
  m.final = load_shape(j, m.fsa, [&](StateIndex from, const Json& l, StateIndex to) {
    if (kind_of(l) == "epsilon") return void(m.fsa.add_transition(from, std::nullopt, to));
    m.fsa.add_transition(from, load_action(l), to);
  });
  return m;
}

AssertedCfsm load_asserted_cfsm(const Json& j) {
  auto env = load_sorts(j);
  AssertedCfsm m;
  m.owner = text(j, "role");
  m.final = load_shape(j, m.fsa, [&](StateIndex from, const Json& l, StateIndex to) {
    if (kind_of(l) == "epsilon") return void(m.fsa.add_transition(from, LocalLabel::epsilon(load_assertion(l, env, {})), to));
    auto p = load_payload(l);
    m.fsa.add_transition(from, LocalLabel::action(load_action(l), p, load_assertion(l, env, p)), to);
  });
  return m;
}

std::string to_dot(const CAutomaton& a, const EmitMeta& meta) {
  return dot(a.fsa, meta, [](const Interaction& i) { return i.to_string(); }, terminal(a.fsa));
}

std::string to_dot(const AssertedCA& a, const EmitMeta& meta) {
  return dot(a.fsa, meta, asserted_dot_label, terminal(a.fsa));
}

std::string to_dot(const Cfsm& m, const EmitMeta& meta) {
  auto final = [&m](StateIndex s) { return !m.final.empty() && m.final[s]; };
  return dot(m.fsa, meta, [](const Action& a) { return a.to_string(); }, final);
}

std::string to_dot(const AssertedCfsm& m, const EmitMeta& meta) {
  auto final = [&m](StateIndex s) { return !m.final.empty() && m.final[s]; };
  return dot(m.fsa, meta, local_dot_label, final);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_atomic(const std::filesystem::path& p, const std::string& content) {
  namespace fs = std::filesystem;
  std::random_device rd;
  auto tmp = p;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + p.string());
  }
}

}  // namespace chorc
