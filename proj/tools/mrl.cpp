// mrl command-line front end: run a program, an interactive session, or the
// corpus test runner.

#include <unistd.h>

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "mrl/corpus.hpp"
#include "mrl/interpreter.hpp"

namespace {

enum Exit { kOk = 0, kUncaught = 1, kLoad = 2, kInternal = 3 };

void print_uncaught(const mrl::Thrown& t) {
  std::cerr << "uncaught: " << mrl::render(t.value()) << "\n";
  if (t.where()) std::cerr << "  at " << t.where()->str() << "\n";
}

void print_uncaught(const mrl::Error& e) {
  auto v = mrl::Value::node("RuntimeException", std::string(e.name()),
                            {mrl::Value::string(e.detail())});
  std::cerr << "uncaught: " << mrl::render(v) << "\n";
  if (e.where()) std::cerr << "  at " << e.where()->str() << "\n";
}

int run(const mrl::Options& options, const std::string& file, const std::string& entry) {
  mrl::Interpreter in(options);
  try {
    in.load_file(file);
  } catch (const mrl::Error& e) {
    std::cerr << e.what() << "\n";
    return kLoad;
  } catch (const mrl::Thrown& t) {
    print_uncaught(t);
    return kUncaught;
  }
  try {
    mrl::Value v = in.call(entry, {});
    if (v.is(mrl::Kind::Str)) std::cout << v.as_str() << "\n";
    else if (v != mrl::Value::unit()) std::cout << mrl::render(v) << "\n";
    return kOk;
  } catch (const mrl::Thrown& t) {
    std::cout.flush();
    print_uncaught(t);
    return kUncaught;
  } catch (const mrl::Error& e) {
    std::cout.flush();
    print_uncaught(e);
    return kUncaught;
  }
}

bool incomplete(const mrl::Error& e) {
  return e.kind() == mrl::ErrorKind::SyntaxError &&
         e.detail().find("end of input") != std::string::npos;
}

int repl(const mrl::Options& options) {
  mrl::Interpreter in(options);
  const bool interactive = isatty(0);
  std::string pending;
  std::string line;
  std::size_t n = 0;
  while (true) {
    if (interactive) std::cout << (pending.empty() ? "mrl> " : "...> ") << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (pending.empty()) {
      if (line == ":quit" || line == ":q") break;
      if (line.rfind(":type ", 0) == 0) {
        try {
          std::cout << mrl::render_type(in.type_of_expression(line.substr(6))) << "\n";
        } catch (const mrl::Error& e) {
          std::cerr << e.what() << "\n";
        } catch (const mrl::Thrown& t) {
          std::cerr << t.what() << "\n";
        }
        continue;
      }
      if (line.rfind(":load ", 0) == 0) {
        try {
          in.load_file(line.substr(6));
          std::cout << "loaded " << line.substr(6) << "\n";
        } catch (const mrl::Error& e) {
          std::cerr << e.what() << "\n";
        } catch (const mrl::Thrown& t) {
          std::cerr << t.what() << "\n";
        }
        continue;
      }
    }
    pending += line;
    pending += "\n";
    try {
      auto v = in.execute(pending, "repl" + std::to_string(++n));
      if (v && *v != mrl::Value::unit()) std::cout << mrl::render(*v) << "\n";
      pending.clear();
    } catch (const mrl::Error& e) {
      if (incomplete(e)) continue;
      std::cerr << e.what() << "\n";
      pending.clear();
    } catch (const mrl::Thrown& t) {
      std::cerr << t.what() << "\n";
      pending.clear();
    }
  }
  return kOk;
}

int test(mrl::Options options, const std::string& manifest) {
  // Program output would interleave with the report, so it is dropped.
  std::ostream discard(nullptr);
  options.out = &discard;
  std::vector<mrl::CaseResult> results;
  try {
    results = mrl::run_manifest(manifest, options);
  } catch (const mrl::Error& e) {
    std::cerr << e.what() << "\n";
    return kLoad;
  }
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name;
    if (!r.passed) {
      ++failed;
      std::cout << "\n      " << r.detail;
    }
    std::cout << "\n";
  }
  std::cout << results.size() - failed << " passed, " << failed << " failed\n";
  return failed == 0 ? kOk : kUncaught;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrl: interpreter for the mrl meta-programming language"};
  app.require_subcommand(1);

  std::string ambiguity = "error";
  std::uint64_t solve_budget = 10000;
  std::uint64_t visit_budget = 10000;
  std::vector<std::string> paths;
  app.add_option("--ambiguity", ambiguity, "Policy for ambiguous parses")
      ->check(CLI::IsMember({"error", "first"}));
  app.add_option("--solve-budget", solve_budget, "Iteration bound for solve")
      ->check(CLI::PositiveNumber);
  app.add_option("--visit-budget", visit_budget, "Pass bound for innermost/outermost visits")
      ->check(CLI::PositiveNumber);
  app.add_option("--path", paths, "Extra directory searched for imports")
      ->allow_extra_args(false);

  std::string file;
  std::string entry = "main";
  auto* run_cmd = app.add_subcommand("run", "Load FILE and call its entry function");
  run_cmd->add_option("FILE", file, "Module file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--entry", entry, "Function to call");
  run_cmd->add_option("--path", paths, "Extra directory searched for imports")
      ->allow_extra_args(false);

  auto* repl_cmd = app.add_subcommand("repl", "Interactive session");
  repl_cmd->add_option("--path", paths, "Extra directory searched for imports")
      ->allow_extra_args(false);

  std::string manifest;
  auto* test_cmd = app.add_subcommand("test", "Run a corpus manifest");
  test_cmd->add_option("MANIFEST", manifest, "Manifest file")->required();
  test_cmd->add_option("--path", paths, "Extra directory searched for imports")
      ->allow_extra_args(false);

  for (auto* sub : {run_cmd, repl_cmd, test_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kLoad;
  }

  mrl::Options options;
  options.ambiguity = ambiguity == "first" ? mrl::AmbiguityPolicy::First : mrl::AmbiguityPolicy::Error;
  options.solve_budget = solve_budget;
  options.visit_budget = visit_budget;
  for (const auto& p : paths) options.search_paths.emplace_back(p);
  options.warn = &std::cerr;

  try {
    if (*run_cmd) return run(options, file, entry);
    if (*repl_cmd) return repl(options);
    return test(options, manifest);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
