#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "xrt/runtime.hpp"
#include "xrt/scenario.hpp"

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xrt::Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Scenario-level checks run by `xrt selftest`. Each returns an empty string
// on success or a description of the mismatch.
struct Check {
  const char* name;
  std::string (*run)(std::uint64_t iterations);
};

std::string expectLines(const xrt::ScenarioReport& r, const std::vector<std::string>& want) {
  if (r.lines == want) return {};
  std::string got;
  for (const auto& l : r.lines) got += "[" + l + "]";
  return "unexpected output " + got;
}

const Check kChecks[] = {
    {"add_ints",
     [](std::uint64_t) {
       return expectLines(xrt::runScenario("import demo\ncall demo add_ints 3 4 -> r\nprint r\n"), {"7"});
     }},
    {"doc string",
     [](std::uint64_t) {
       xrt::Runtime rt;
       const std::string doc = rt.extensions.definition("demo")->doc;
       return expectLines(xrt::runScenario("import demo\nprint demo.__doc__\n"), {doc});
     }},
    {"empty scenario stats",
     [](std::uint64_t) -> std::string {
       for (const auto& [k, v] : xrt::runScenario("").stats) {
         if (v != 0) return k + "=" + std::to_string(v);
       }
       return {};
     }},
    {"cycle reclaimed",
     [](std::uint64_t) -> std::string {
       const auto r = xrt::runScenario(
           "import demo\nnew list -> l\ncall demo.wrap l -> t\nlist-append l t\ndel l\ndel t\n"
           "gc-refresh\ngc-collect\ngc-drain\n");
       if (r.stats.at("gc_managed_reclaimed") != 2 || r.stats.at("gc_native_reclaimed") != 2) {
         return "reclaimed " + std::to_string(r.stats.at("gc_managed_reclaimed")) + " managed, " +
                std::to_string(r.stats.at("gc_native_reclaimed")) + " native";
       }
       return {};
     }},
    {"mirror fuzz",
     [](std::uint64_t iterations) -> std::string {
       xrt::ScenarioOptions opts;
       opts.seed = iterations;
       xrt::runScenario("new random-list 16 -> l\nfuzz-list l " + std::to_string(iterations) + "\n", opts);
       return {};
     }},
    {"threads",
     [](std::uint64_t iterations) -> std::string {
       const auto r = xrt::runScenario("import demo\nthreads 4 " + std::to_string(iterations) +
                                       " call demo.spin_allow 2\n");
       if (r.stats.at("lock_allow_windows") != static_cast<std::int64_t>(4 * iterations)) return "allow windows miscounted";
       return {};
     }},
};

int selftest(std::uint64_t iterations) {
  int failures = 0;
  for (const auto& check : kChecks) {
    std::string problem;
    try {
      problem = check.run(iterations);
    } catch (const std::exception& e) {
      problem = e.what();
    }
    std::cout << (problem.empty() ? "PASS " : "FAIL ") << check.name;
    if (!problem.empty()) std::cout << ": " << problem;
    std::cout << '\n';
    failures += problem.empty() ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

void listExtensions(const std::vector<std::string>& descriptorFiles) {
  xrt::Runtime rt;
  for (const auto& path : descriptorFiles) {
    auto guard = rt.lock.enterNative();
    for (auto& def : xrt::parseDescriptors(readFile(path))) rt.extensions.registerExtension(std::move(def));
  }
  for (const auto& name : rt.extensions.names()) {
    const auto* def = rt.extensions.definition(name);
    std::cout << name;
    if (!def->doc.empty()) std::cout << "  " << def->doc;
    std::cout << '\n';
    for (const auto& fn : def->functions) {
      std::cout << "  fn " << fn.name << " (" << (fn.format.empty() ? "-" : fn.format) << ") -> " << fn.behavior << '\n';
    }
    for (const auto& t : def->types) {
      std::cout << "  type " << t.name << (t.isHeapType ? " heap" : " static");
      if (t.dictOffset) std::cout << " dict";
      for (const auto& m : t.members) std::cout << " member:" << m.name << "@" << m.offset;
      for (const auto& g : t.getsets) std::cout << " getset:" << g.name;
      for (const auto& m : t.methods) std::cout << " method:" << m.name;
      std::cout << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridged refcounted/traced runtime driver"};
  app.require_subcommand(1);

  std::string file;
  std::uint64_t seed = 0;
  bool golden = false;
  bool stats = false;
  std::vector<std::string> extFiles;
  auto* run = app.add_subcommand("run", "Run a scenario script");
  run->add_option("file", file, "Scenario file")->required();
  run->add_option("--seed", seed, "Seed for randomized commands");
  run->add_flag("--golden", golden, "Leave scheduling-dependent counters out of the stats");
  run->add_flag("--stats", stats, "Print key=value counters after the output");
  run->add_option("--ext", extFiles, "Extension descriptor file (repeatable)");

  std::uint64_t iterations = 200;
  auto* self = app.add_subcommand("selftest", "Run built-in scenario checks");
  self->add_option("--iterations", iterations, "Iterations for randomized checks")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-extensions", "List registered extension modules");
  list->add_option("--ext", extFiles, "Extension descriptor file (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*self) return selftest(iterations);
    if (*list) {
      listExtensions(extFiles);
      return 0;
    }
    xrt::ScenarioOptions options;
    options.seed = seed;
    options.golden = golden;
    for (const auto& path : extFiles) options.descriptors.push_back(readFile(path));
    const auto report = xrt::runScenario(readFile(file), options);
    for (const auto& line : report.lines) std::cout << line << '\n';
    if (stats) std::cout << xrt::emitStats(report, golden);
    return 0;
  } catch (const xrt::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
