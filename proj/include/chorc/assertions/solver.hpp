#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "chorc/assertions/predicate.hpp"

namespace chorc {

enum class SatResult { Sat, Unsat, Unknown };
enum class Tri { Yes, No, Unknown };

std::string to_string(SatResult r);
std::string to_string(Tri t);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the builtin backend on input outside its decidable fragment.
class OutOfFragment : public SolverError {
 public:
  using SolverError::SolverError;
};

// Queries on one port are serialized; results are cached by predicate text.
class SolverPort {
 public:
  virtual ~SolverPort() = default;

  SatResult check(const Pred& p);
  Tri sat(const Pred& p);
  Tri valid(const Pred& p);
  Tri entails(const Pred& a, const Pred& b);
  Tri equivalent(const Pred& a, const Pred& b);

  virtual std::string backend() const = 0;
  std::size_t queries() const { return queries_; }

 protected:
  virtual SatResult do_check(const Pred& p) = 0;

 private:
  std::mutex mu_;
  std::map<std::string, SatResult> cache_;
  std::size_t queries_ = 0;
};

// Linear integer arithmetic with unit coefficients, booleans, and string
// equality; quantifiers are eliminated by Fourier-Motzkin.
class BuiltinSolver : public SolverPort {
 public:
  explicit BuiltinSolver(std::size_t literal_cap = 20000) : literal_cap_(literal_cap) {}
  std::string backend() const override { return "builtin"; }

 protected:
  SatResult do_check(const Pred& p) override;

 private:
  std::size_t literal_cap_;
};

// Spawns an SMT-LIB 2 solver per query and talks to it over stdin/stdout.
class SmtSolver : public SolverPort {
 public:
  explicit SmtSolver(std::string path, double timeout_seconds = 5.0);
  std::string backend() const override { return "smt:" + path_; }
  static std::string script(const Pred& p);

 protected:
  SatResult do_check(const Pred& p) override;

 private:
  std::string path_;
  double timeout_;
};

// "builtin" or "smt:<path>".
std::unique_ptr<SolverPort> make_solver(const std::string& spec, double timeout_seconds = 5.0);

}  // namespace chorc
