#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrl/error.hpp"
#include "mrl/grammar.hpp"
#include "mrl/types.hpp"
#include "mrl/value.hpp"

namespace mrl {

struct Options {
  AmbiguityPolicy ambiguity = AmbiguityPolicy::Error;
  std::uint64_t solve_budget = 10000;
  std::uint64_t visit_budget = 10000;
  std::size_t max_call_depth = 2000;
  std::vector<std::filesystem::path> search_paths;
  std::ostream* out = nullptr;   // defaults to std::cout
  std::ostream* warn = nullptr;  // warnings are also kept in warnings()
};

/// A value thrown by `throw` (or a runtime error turned into one) that no
/// `try` caught.
class Thrown : public std::exception {
 public:
  explicit Thrown(Value v, std::optional<SourceSpan> where = std::nullopt);
  const Value& value() const { return value_; }
  const std::optional<SourceSpan>& where() const { return where_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  Value value_;
  std::optional<SourceSpan> where_;
  std::string message_;
};

namespace detail {
class Machine;
}

/// One interpreter instance: loaded modules, declarations, functions and
/// globals. Not thread-safe; use one instance per thread.
class Interpreter {
 public:
  explicit Interpreter(Options options = {});
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  Options& options();

  /// Loads a module file and, transitively, its imports. The directory that
  /// roots the file's module name joins the import search path.
  void load_file(const std::filesystem::path& file);
  /// Loads module text as if read from `uri`.
  void load_source(std::string_view source, const std::string& uri);

  /// Calls a function by name with pattern-directed dispatch.
  Value call(const std::string& name, std::vector<Value> args);
  bool has_function(const std::string& name, std::size_t arity) const;
  /// Names of zero-argument functions, in declaration order.
  std::vector<std::string> nullary_functions() const;

  /// Executes REPL input; returns the value of a final expression statement.
  std::optional<Value> execute(std::string_view input, const std::string& uri = "repl");
  /// Static-free type of an expression: the type of its value.
  TypeExpr type_of_expression(std::string_view expr);

  const Declarations& declarations() const;
  /// Union of all syntax declarations loaded so far.
  const Grammar& grammar();
  /// Parses a value literal, resolving constructors against loaded data types.
  Value read_value(std::string_view text) const;

  /// Warnings emitted while loading (non-exclusive alternatives, shadowing).
  const std::vector<std::string>& warnings() const;

 private:
  std::unique_ptr<detail::Machine> m_;
};

}  // namespace mrl
