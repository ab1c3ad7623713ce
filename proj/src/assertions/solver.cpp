#include "chorc/assertions/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace chorc {

std::string to_string(SatResult r) {
  switch (r) {
    case SatResult::Sat: return "sat";
    case SatResult::Unsat: return "unsat";
    case SatResult::Unknown: return "unknown";
  }
  return "?";
}

std::string to_string(Tri t) {
  switch (t) {
    case Tri::Yes: return "yes";
    case Tri::No: return "no";
    case Tri::Unknown: return "unknown";
  }
  return "?";
}

SatResult SolverPort::check(const Pred& p) {
  if (is_true(p)) return SatResult::Sat;
  if (is_false(p)) return SatResult::Unsat;
  std::lock_guard<std::mutex> lock(mu_);
  auto key = to_string(p);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ++queries_;
  auto r = do_check(p);
  cache_.emplace(std::move(key), r);
  return r;
}

Tri SolverPort::sat(const Pred& p) {
  switch (check(p)) {
    case SatResult::Sat: return Tri::Yes;
    case SatResult::Unsat: return Tri::No;
    default: return Tri::Unknown;
  }
}

Tri SolverPort::valid(const Pred& p) {
  switch (check(neg(p))) {
    case SatResult::Sat: return Tri::No;
    case SatResult::Unsat: return Tri::Yes;
    default: return Tri::Unknown;
  }
}

Tri SolverPort::entails(const Pred& a, const Pred& b) { return valid(implies(a, b)); }

Tri SolverPort::equivalent(const Pred& a, const Pred& b) {
  if (same(a, b)) return Tri::Yes;
  auto x = entails(a, b);
  if (x == Tri::No) return Tri::No;
  auto y = entails(b, a);
  if (y == Tri::No) return Tri::No;
  return x == Tri::Yes && y == Tri::Yes ? Tri::Yes : Tri::Unknown;
}

std::unique_ptr<SolverPort> make_solver(const std::string& spec, double timeout_seconds) {
  if (spec.empty() || spec == "builtin") return std::make_unique<BuiltinSolver>();
  if (spec.rfind("smt:", 0) == 0 && spec.size() > 4) return std::make_unique<SmtSolver>(spec.substr(4), timeout_seconds);
  throw SolverError("unknown solver '" + spec + "' (expected builtin or smt:<path>)");
}

// ---- external backend ------------------------------------------------------

SmtSolver::SmtSolver(std::string path, double timeout_seconds) : path_(std::move(path)), timeout_(timeout_seconds) {}

std::string SmtSolver::script(const Pred& p) {
  std::string s = "(set-logic ALL)\n";
  for (const auto& [x, sort] : fv_sorted(p)) {
    const char* n = sort == Sort::Int ? "Int" : sort == Sort::Bool ? "Bool" : "String";
    s += "(declare-const |" + x + "| " + n + ")\n";
  }
  s += "(assert " + to_smtlib(p) + ")\n(check-sat)\n(exit)\n";
  return s;
}

namespace {

std::vector<std::string> solver_args(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  if (base.rfind("z3", 0) == 0) return {path, "-in", "-smt2"};
  if (base.rfind("cvc", 0) == 0) return {path, "--lang=smt2", "--strings-exp"};
  return {path};
}

}  // namespace

SatResult SmtSolver::do_check(const Pred& p) {
  std::string input = script(p);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw SolverError("pipe failed");
  auto args = solver_args(path_);
  pid_t pid = fork();
  if (pid < 0) throw SolverError("fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, 2);
    close(in_pipe[1]);
    close(out_pipe[0]);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  signal(SIGPIPE, SIG_IGN);
  std::size_t off = 0;
  while (off < input.size()) {
    auto n = write(in_pipe[1], input.data() + off, input.size() - off);
    if (n <= 0) break;
    off += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);

  std::string out;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_);
  bool timed_out = false;
  char buf[4096];
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{out_pipe[0], POLLIN, 0};
    int r = poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (r == 0) {
      timed_out = true;
      break;
    }
    auto n = read(out_pipe[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  if (timed_out) return SatResult::Unknown;
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
    throw SolverError("cannot run solver '" + path_ + "'");
  auto first = out.substr(0, out.find('\n'));
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
  if (first == "sat") return SatResult::Sat;
  if (first == "unsat") return SatResult::Unsat;
  if (first == "unknown" || first == "timeout") return SatResult::Unknown;
  throw SolverError("solver '" + path_ + "' answered: " + (out.empty() ? "(nothing)" : out.substr(0, 200)));
}

}  // namespace chorc
