#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrl/generator.hpp"
#include "mrl/types.hpp"
#include "mrl/value.hpp"

namespace mrl {

/// A match expression. `children` holds constructor arguments, list/set/tuple
/// items, or the single operand of Deep and Neg. Inside List and Set patterns
/// a `Multi` child stands for `*name` (a sublist, or the rest of a set);
/// an empty name is anonymous.
struct Pattern {
  enum class Kind { Literal, Var, Wildcard, Ctor, List, Set, Tuple, Deep, Neg, Multi };

  Kind kind = Kind::Wildcard;
  Value literal;
  std::string name;
  std::optional<std::string> adt;
  std::optional<TypeExpr> type;
  std::vector<Pattern> children;

  static Pattern lit(Value v);
  static Pattern var(std::string name, std::optional<TypeExpr> type = std::nullopt);
  static Pattern wildcard();
  static Pattern ctor(std::string name, std::vector<Pattern> args,
                      std::optional<std::string> adt = std::nullopt);
  static Pattern list(std::vector<Pattern> items);
  static Pattern set(std::vector<Pattern> items);
  static Pattern tuple(std::vector<Pattern> elems);
  static Pattern deep(Pattern inner);
  static Pattern neg(Pattern inner);
  static Pattern multi(std::string name = {});
};

/// Name lookup for variables bound outside the pattern being matched.
class Scope {
 public:
  virtual ~Scope() = default;
  virtual const Value* lookup(std::string_view name) const = 0;
};

/// Variables bound by one successful match, layered over an outer scope.
/// A name already bound (here or outside) acts as an equality constraint;
/// a typed variable always introduces a fresh binding.
class Bindings {
 public:
  explicit Bindings(const Scope* outer = nullptr) : outer_(outer) {}

  const Value* find(std::string_view name) const;
  const Value* find_local(std::string_view name) const;
  void bind(std::string name, Value v);

  std::span<const std::pair<std::string, Value>> entries() const { return entries_; }
  const Scope* outer() const { return outer_; }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const Bindings& a, const Bindings& b) { return a.entries_ == b.entries_; }

 private:
  const Scope* outer_;
  std::vector<std::pair<std::string, Value>> entries_;
};

/// Every binding under which `p` matches `v`, lazily and in a fixed order:
/// list splits leftmost-first and shortest-first, set elements in canonical
/// order, deep matches in preorder. `p` and `decls` must outlive the sequence.
Generator<Bindings> match_all(const Pattern& p, Value v, Bindings outer, const Declarations& decls);

/// Preorder enumeration of `v` and everything nested inside it.
Generator<Value> subterms(Value v);

/// Conservative check: true only when no value can match both patterns.
bool matches_non_overlapping(const Pattern& a, const Pattern& b);

/// Load-time validation: undeclared constructors, unknown type names, and
/// set patterns with more than one rest variable.
void check_pattern(const Pattern& p, const Declarations& decls);

/// Names of the variables a successful match of `p` may bind.
std::vector<std::string> pattern_variables(const Pattern& p);

std::string render_pattern(const Pattern& p);

}  // namespace mrl
