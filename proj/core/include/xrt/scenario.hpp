#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xrt/error.hpp"
#include "xrt/handles.hpp"

namespace xrt {

class Runtime;

// Parse or runtime failure in a scenario; the message names the line.
class ScenarioError : public Error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace scenario {

// A value operand: literal or a binding reference with an attribute path.
struct Operand {
  enum class Kind { Int, Float, Str, None, True, False, Ref } kind = Kind::None;
  std::int64_t i = 0;
  double f = 0;
  std::string text;               // Str literal or binding name
  std::vector<std::string> path;  // attribute chain after a Ref
};

struct Command {
  std::size_t line = 0;
  std::string source;  // the command text, for diagnostics
  std::string op;
  std::vector<std::string> words;  // op-specific fixed words
  std::vector<Operand> operands;
  std::string bind;  // "-> name", empty when absent
  // threads: workers, repetitions and the command each worker runs
  std::size_t workers = 0;
  std::size_t repeat = 0;
  std::shared_ptr<Command> body;
};

// Parses the whole script. Names must be bound before they are used.
std::vector<Command> parse(std::string_view text);

}  // namespace scenario

struct ScenarioOptions {
  std::uint64_t seed = 0;
  // Golden mode leaves scheduling-dependent counters out of emitted stats.
  bool golden = false;
  // Extra descriptor texts registered by runScenario before the script runs.
  std::vector<std::string> descriptors;
};

struct ScenarioReport {
  std::vector<std::string> lines;
  // Net change of every runtime counter over the script, so an empty
  // script reports all zeros.
  std::map<std::string, std::int64_t> stats;
};

// Executes commands against a runtime. Bindings stay rooted until deleted,
// rebound or the runner is destroyed.
class ScenarioRunner {
 public:
  ScenarioRunner(Runtime& rt, ScenarioOptions options = {});
  ~ScenarioRunner();
  ScenarioRunner(const ScenarioRunner&) = delete;
  ScenarioRunner& operator=(const ScenarioRunner&) = delete;

  // Appends output lines; throws ScenarioError or InvariantViolation.
  void run(std::string_view text);
  void execute(const std::vector<scenario::Command>& commands);

  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::map<std::string, ManagedHandle> bindings() const { return bindings_; }
  // Drops every binding root.
  void clearBindings();

 private:
  struct Impl;
  Runtime& rt_;
  ScenarioOptions options_;
  std::map<std::string, ManagedHandle> bindings_;
  std::vector<std::string> lines_;
  std::unique_ptr<Impl> impl_;
};

// Runs a script on a fresh runtime with the demo extension loaded.
ScenarioReport runScenario(std::string_view text, const ScenarioOptions& options = {});

// key=value lines in key order.
std::string emitStats(const ScenarioReport& report, bool golden);

}  // namespace xrt
