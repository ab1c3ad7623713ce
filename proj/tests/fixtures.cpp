#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace chorc;

namespace fixtures {

CAutomaton olw() {
  return make_c_automaton({
      {"q0", "C", "W", "login", "q1"},
      {"q1", "C", "W", "pin", "q2"},
      {"q2", "W", "C", "retry", "q0"},
      {"q2", "W", "C", "loginDenied", "q3"},
      {"q2", "W", "C", "loginOK", "q4"},
      {"q4", "W", "V", "loginOK", "q5"},
      {"q5", "V", "C", "request", "q6"},
      {"q6", "C", "W", "authorise", "q7"},
      {"q6", "C", "W", "reject", "q8"},
      {"q7", "C", "V", "pay", "q3"},
      {"q8", "C", "V", "reject", "q3"},
  });
}

CAutomaton diamond_counterexample() {
  return make_c_automaton({
      {"q0", "A", "B", "m", "q1"},
      {"q0", "C", "D", "n", "q2"},
      {"q1", "C", "D", "n", "q3"},
      {"q1", "C", "B", "r", "q4"},
      {"q2", "A", "B", "m", "q3"},
      {"q2", "C", "B", "r", "q5"},
      {"q3", "C", "B", "r", "q6"},
      {"q4", "C", "D", "n", "q6"},
      {"q5", "A", "B", "m", "q6"},
  });
}

CAutomaton ex38() {
  return make_c_automaton({
      {"q0", "A", "B", "l", "q1"},
      {"q1", "B", "C", "n", "q2"},
      {"q2", "C", "D", "l", "q3"},
      {"q0", "A", "B", "r", "q4"},
      {"q4", "B", "C", "n", "q5"},
      {"q5", "C", "D", "r", "q6"},
  });
}

CAutomaton selective_counterexample() {
  return make_c_automaton({
      {"q0", "A", "C", "n", "q2"},
      {"q0", "A", "B", "n", "q1"},
      {"q1", "B", "C", "n", "q2"},
      {"q2", "B", "D", "n", "q3"},
  });
}

CAutomaton ex311(bool dashed) {
  std::vector<Edge> e{
      {"q0", "A", "B", "l", "q1"}, {"q1", "B", "C", "n", "q2"}, {"q2", "C", "D", "l", "q3"},
      {"q3", "C", "A", "l", "q4"}, {"q0", "A", "B", "r", "q5"}, {"q5", "B", "C", "n", "q6"},
      {"q6", "C", "D", "r", "q7"}, {"q7", "C", "A", "r", "q8"},
  };
  if (dashed) {
    e.push_back({"q3", "C", "D", "l", "q3"});
    e.push_back({"q7", "C", "D", "r", "q7"});
  }
  return make_c_automaton(e);
}

CAutomaton fig2() {
  return make_c_automaton({
      {"q0", "client", "Service", "premium", "q1"},
      {"q0", "client", "Service", "basic", "q2"},
      {"q2", "client", "Service", "upgrade", "q1"},
      {"q2", "client", "Service", "confirm", "q5"},
      {"q1", "client", "bank", "payPremium", "q3"},
      {"q3", "bank", "Service", "transferPremium", "q5"},
  });
}

CAutomaton random_c_automaton(std::mt19937& rng, std::size_t max_states) {
  const std::vector<std::string> ps{"A", "B", "C", "D"};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  std::vector<Edge> edges;
  std::vector<std::vector<std::string>> incoming_ptp{{}};
  std::size_t next = 1;
  std::vector<std::size_t> work{0};
  auto sname = [](std::size_t i) { return "q" + std::to_string(i); };
  while (!work.empty()) {
    std::size_t s = work.front();
    work.erase(work.begin());
    if (s != 0 && chance(0.2)) continue;
    std::string sender;
    const auto& inc = incoming_ptp[s];
    if (!inc.empty() && chance(0.85))
      sender = inc[pick(inc.size())];
    else
      sender = ps[pick(ps.size())];
    std::size_t branches = chance(0.45) ? 2 : 1;
    std::set<std::string> used;
    for (std::size_t b = 0; b < branches; ++b) {
      std::string recv;
      do recv = ps[pick(ps.size())];
      while (recv == sender);
      std::string msg = "m" + std::to_string(pick(3));
      if (!used.insert(recv + msg).second) continue;
      std::size_t target;
      if (next < max_states && chance(0.75)) {
        target = next++;
        incoming_ptp.push_back({sender, recv});
        work.push_back(target);
      } else {
        target = pick(next);
      }
      edges.push_back({sname(s), sender, recv, msg, sname(target)});
    }
  }
  std::vector<std::string> extra;
  for (std::size_t i = 0; i < next; ++i) extra.push_back(sname(i));
  return make_c_automaton(edges, "q0", extra);
}

StateIndex AssertedBuilder::state(const std::string& n) {
  if (auto s = a.fsa.find_state(n)) return *s;
  auto s = a.fsa.add_state(n);
  if (s == 0) a.fsa.set_initial(0);
  return s;
}

Pred AssertedBuilder::pred(const std::string& text) const { return text.empty() ? top() : parse_predicate(text, env); }

AssertedBuilder& AssertedBuilder::inter(const std::string& from, const std::string& s, const std::string& r,
                                        const std::string& m, const Payload& payload, const std::string& p,
                                        const std::string& to) {
  for (const auto& v : payload) env[v.name] = v.sort;
  auto f = state(from);
  auto t = state(to);
  a.fsa.add_transition(f, AssertedLabel::interaction(Interaction(s, r, m), payload, pred(p)), t);
  a.participants.insert(s);
  a.participants.insert(r);
  return *this;
}

AssertedBuilder& AssertedBuilder::rec(const std::string& name, const Payload& params, const std::string& inv,
                                      const std::string& anchor) {
  for (const auto& v : params) env[v.name] = v.sort;
  a.rho[name] = RecEntry{params, pred(inv), state(anchor)};
  return *this;
}

AssertedBuilder& AssertedBuilder::iter(const std::string& from, const std::string& r,
                                       const std::map<std::string, std::string>& iota, const std::string& to) {
  Subst s;
  for (const auto& [x, e] : iota) s[x] = parse_expr(e, env);
  auto f = state(from);
  auto t = state(to);
  a.fsa.add_transition(f, AssertedLabel::iteration(r, s, a.rho.at(r).invariant), t);
  return *this;
}

AssertedCA asserted_olw(const std::string& denied, bool with_ok) {
  AssertedBuilder b;
  b.state("q0'");
  b.rec("r", {{"try", Sort::Int}}, "0 <= try && try <= 3", "q0");
  b.iter("q0'", "r", {{"try", "0"}}, "q0");
  b.inter("q0", "C", "W", "login", {{"account", Sort::Int}}, "", "q1");
  b.inter("q1", "C", "W", "pin", {{"pin", Sort::Int}}, "", "q2");
  b.inter("q2", "W", "C", "retry", {{"msg", Sort::String}}, "0 <= try && try < 3 && msg = \"fail\"", "q2'");
  b.iter("q2'", "r", {{"try", "try + 1"}}, "q0");
  b.inter("q2", "W", "C", "loginDenied", {{"msg", Sort::String}}, denied, "q3");
  if (with_ok) b.inter("q2", "W", "C", "loginOk", {}, "0 <= try && try <= 3", "q4");
  return b.a;
}

AssertedCA confusion() {
  AssertedBuilder b;
  b.inter("q0", "p", "r", "m", {{"x", Sort::Bool}}, "", "q1");
  b.inter("q1", "q", "r", "m", {{"w", Sort::Int}}, "", "q3");
  b.inter("q0", "q", "r", "m", {{"x", Sort::Int}}, "", "q2");
  b.inter("q2", "p", "r", "m", {{"u", Sort::Bool}}, "", "q3");
  b.env["x"] = Sort::Int;
  b.inter("q3", "r", "s", "m", {{"y", Sort::Int}}, "y = x % 2", "q'");
  return b.a;
}

AssertedCA olw_payloads() {
  AssertedBuilder b;
  b.inter("q0", "C", "W", "login", {{"account", Sort::Int}}, "", "q1");
  b.inter("q1", "C", "W", "pin", {{"pin", Sort::Int}}, "", "q2");
  b.inter("q2", "W", "C", "retry", {{"msg", Sort::String}}, "", "q0");
  b.inter("q2", "W", "C", "loginDenied", {{"msg", Sort::String}}, "", "q3");
  b.inter("q2", "W", "C", "loginOK", {}, "", "q4");
  b.inter("q4", "W", "V", "loginOK", {}, "", "q5");
  b.inter("q5", "V", "C", "request", {{"bill", Sort::Int}}, "bill > 0", "q6");
  b.inter("q6", "C", "W", "authorise", {}, "", "q7");
  b.inter("q6", "C", "W", "reject", {}, "", "q8");
  b.inter("q7", "C", "V", "pay", {{"payment", Sort::Int}}, "payment = bill", "q3");
  b.inter("q8", "C", "V", "reject", {}, "", "q3");
  return b.a;
}

std::string protocol_path(const std::string& file) { return std::string(CHORC_PROTOCOLS) + "/" + file; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
