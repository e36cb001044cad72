#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mrl {

using BigInt = boost::multiprecision::cpp_int;

class Declarations;

// Declaration order is the canonical kind order used to sort sets and maps.
enum class Kind : std::uint8_t { Bool, Int, Str, Loc, Tuple, List, Set, Map, Node };

struct Location {
  std::string uri;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  friend auto operator<=>(const Location&, const Location&) = default;
  friend bool operator==(const Location&, const Location&) = default;
};

class Value;
using MapEntry = std::pair<Value, Value>;

/// An immutable runtime datum. Copies share structure; nothing is ever
/// modified after construction, so values can be handed across threads.
class Value {
 public:
  /// `false`; exists so that values can live in standard containers.
  Value();

  static Value boolean(bool b);
  static Value integer(BigInt i);
  static Value integer(long long i);
  static Value string(std::string s);
  static Value location(Location loc);
  static Value tuple(std::vector<Value> elems);
  static Value list(std::vector<Value> elems);
  /// Sorts into canonical order and drops structural duplicates.
  static Value set(std::vector<Value> elems);
  /// Sorts by key; for duplicate keys the last entry wins.
  static Value map(std::vector<MapEntry> entries);
  /// `adt` may be empty for an untyped node whose constructor is not declared.
  static Value node(std::string adt, std::string ctor, std::vector<Value> args);

  /// The unit value returned by procedures without a result: `<>`.
  static Value unit() { return tuple({}); }

  Kind kind() const;
  bool is(Kind k) const { return kind() == k; }

  bool as_bool() const;
  const BigInt& as_int() const;
  const std::string& as_str() const;
  const Location& as_loc() const;
  /// Elements of a tuple, list or set (sets in canonical order).
  std::span<const Value> elements() const;
  /// Map entries in canonical key order.
  std::span<const MapEntry> entries() const;
  const std::string& adt() const;
  const std::string& ctor() const;
  std::span<const Value> args() const;

  /// Number of elements, entries, or arguments; 0 for atoms.
  std::size_t arity() const;

  bool same_object(const Value& other) const { return rep_ == other.rep_; }

  friend std::strong_ordering operator<=>(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b);

  struct Rep;

 private:
  explicit Value(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

/// Canonical text; identical to the language's expression syntax.
std::string render(const Value& v);

/// Inverse of render. With `decls`, constructor names are resolved to
/// their declared data type; otherwise (or when undeclared) nodes are untyped.
Value parse_value(std::string_view text, const Declarations* decls = nullptr);

std::string escape_string(std::string_view s);

// Set algebra under structural equality.
Value set_union(const Value& a, const Value& b);
Value set_intersect(const Value& a, const Value& b);
Value set_diff(const Value& a, const Value& b);
Value set_insert(const Value& set, const Value& elem);
bool set_contains(const Value& set, const Value& elem);

std::optional<Value> map_lookup(const Value& map, const Value& key);
Value map_put(const Value& map, const Value& key, const Value& val);

// Binary relations: sets whose elements are all 2-tuples.
Value compose(const Value& r, const Value& s);
Value transitive_closure(const Value& r);
Value reflexive_transitive_closure(const Value& r);
/// `r[key]`: the set of y with <key,y> in r.
Value rel_image(const Value& r, const Value& key);
/// Every value appearing in some tuple of r.
Value carrier(const Value& r);

}  // namespace mrl
