#pragma once

#include <deque>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mrl/error.hpp"
#include "mrl/value.hpp"

namespace mrl {

/// Static description of a set of values. `rel[...]` is not a separate kind:
/// it is normalized to a set of tuples on construction.
struct TypeExpr {
  enum class Kind { Value, Node, Void, Bool, Int, Str, Loc, List, Set, Map, Tuple, Adt, NonTerminal };

  Kind kind = Kind::Value;
  std::vector<TypeExpr> params;
  std::string name;

  static TypeExpr top() { return {Kind::Value, {}, {}}; }
  static TypeExpr node() { return {Kind::Node, {}, {}}; }
  static TypeExpr bottom() { return {Kind::Void, {}, {}}; }
  static TypeExpr boolean() { return {Kind::Bool, {}, {}}; }
  static TypeExpr integer() { return {Kind::Int, {}, {}}; }
  static TypeExpr str() { return {Kind::Str, {}, {}}; }
  static TypeExpr loc() { return {Kind::Loc, {}, {}}; }
  static TypeExpr list(TypeExpr elem) { return {Kind::List, {std::move(elem)}, {}}; }
  static TypeExpr set(TypeExpr elem) { return {Kind::Set, {std::move(elem)}, {}}; }
  static TypeExpr map(TypeExpr key, TypeExpr val) {
    return {Kind::Map, {std::move(key), std::move(val)}, {}};
  }
  static TypeExpr tuple(std::vector<TypeExpr> elems) { return {Kind::Tuple, std::move(elems), {}}; }
  static TypeExpr rel(std::vector<TypeExpr> elems) { return set(tuple(std::move(elems))); }
  static TypeExpr adt(std::string name) { return {Kind::Adt, {}, std::move(name)}; }
  static TypeExpr nonterminal(std::string name) { return {Kind::NonTerminal, {}, std::move(name)}; }

  friend bool operator==(const TypeExpr&, const TypeExpr&) = default;
};

/// `list[int]`, `map[str,int]`, `rel[int,int]`, ...
std::string render_type(const TypeExpr& t);

struct ConstructorDecl {
  std::string adt;
  std::string name;
  std::vector<TypeExpr> field_types;
  std::vector<std::string> field_names;

  std::size_t arity() const { return field_types.size(); }
  /// Index of a named field, or -1.
  int field_index(std::string_view field) const;
};

/// The table of data types, constructors and grammar nonterminals that are
/// in scope. A fresh table already knows the built-in types `Tree`,
/// `Production`, `Symbol` and `RuntimeException`.
class Declarations {
 public:
  Declarations();

  void declare_adt(const std::string& name);
  /// Throws DuplicateDeclaration if (adt, name, arity) already exists.
  const ConstructorDecl& declare_constructor(ConstructorDecl decl);
  void declare_nonterminal(const std::string& name);

  bool is_adt(std::string_view name) const { return adts_.count(std::string(name)) != 0; }
  bool is_nonterminal(std::string_view name) const {
    return nonterminals_.count(std::string(name)) != 0;
  }

  /// All constructors with this name and arity, in declaration order.
  std::vector<const ConstructorDecl*> constructors(std::string_view name, std::size_t arity) const;
  bool has_constructor(std::string_view name, std::size_t arity) const;
  const ConstructorDecl* find_constructor(std::string_view adt, std::string_view name,
                                          std::size_t arity) const;
  /// Picks the first declared constructor whose field types accept `args`.
  const ConstructorDecl* select_constructor(std::string_view name, std::span<const Value> args) const;
  /// Data type name for a constructor application, or "" when undeclared.
  std::string adt_for_constructor(std::string_view name, std::span<const Value> args) const;

  /// Resolves a user type name; data types win over nonterminals of the same name.
  TypeExpr resolve_type_name(std::string_view name) const;
  /// Rewrites `Adt(n)` to `NonTerminal(n)` wherever n names only a nonterminal.
  TypeExpr resolve(const TypeExpr& t) const;
  /// Throws UnknownTypeName if `t` mentions an undeclared name.
  void check(const TypeExpr& t) const;

  std::span<const ConstructorDecl> all_constructors() const;

 private:
  std::set<std::string> adts_;
  std::set<std::string> nonterminals_;
  std::vector<ConstructorDecl> ctors_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_name_;
};

/// The least type describing `v`.
TypeExpr type_of(const Value& v, const Declarations& decls);

bool subtype_of(const TypeExpr& a, const TypeExpr& b, const Declarations& decls);

TypeExpr lub(const TypeExpr& a, const TypeExpr& b);

/// Equivalent to subtype_of(type_of(v), t) without building type_of(v).
bool conforms(const Value& v, const TypeExpr& t, const Declarations& decls);

/// Sort name of a parse tree node (`appl(prod(sort, ...), ...)`), or "".
std::string_view parse_tree_sort(const Value& v);

}  // namespace mrl
