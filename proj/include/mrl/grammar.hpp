#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrl/error.hpp"
#include "mrl/types.hpp"
#include "mrl/value.hpp"

namespace mrl {

struct CharRange {
  char32_t lo;
  char32_t hi;
  friend bool operator==(const CharRange&, const CharRange&) = default;
};

/// A grammar symbol: literal, character class, nonterminal reference, or a
/// regular `S*`, `S+`, `S?` over one inner symbol. `label` is the optional
/// field name written after the symbol; it does not affect recognition.
struct Symbol {
  enum class Kind { Lit, Class, NT, Star, Plus, Opt };

  Kind kind = Kind::Lit;
  std::u32string text;
  std::vector<CharRange> ranges;
  std::string name;
  std::vector<Symbol> inner;
  std::string label;

  static Symbol lit(std::string_view utf8);
  static Symbol cls(std::vector<CharRange> ranges);
  static Symbol nt(std::string name);
  static Symbol star(Symbol s);
  static Symbol plus(Symbol s);
  static Symbol opt(Symbol s);

  /// Structural equality ignoring labels.
  bool same_as(const Symbol& other) const;
};

std::string render_symbol(const Symbol& s);

enum class ProductionKind { Syntax, Lexical, Layout };

struct Production {
  std::string lhs;
  std::string label;
  std::vector<Symbol> body;
  ProductionKind kind = ProductionKind::Syntax;

  bool lexical() const { return kind != ProductionKind::Syntax; }
  bool same_as(const Production& other) const;
};

/// One `syntax`/`lexical`/`layout` declaration with its alternatives.
struct SyntaxDecl {
  ProductionKind kind = ProductionKind::Syntax;
  bool start = false;
  std::string name;
  struct Alternative {
    std::string label;
    std::vector<Symbol> body;
  };
  std::vector<Alternative> alternatives;
  std::optional<SourceSpan> where;
};

enum class AmbiguityPolicy { Error, First };

/// Raised when an input has more than one derivation under policy Error.
class AmbiguityError : public Error {
 public:
  AmbiguityError(std::uint64_t count, std::string first, std::string second, SourceSpan where);
  std::uint64_t count() const { return count_; }
  const std::string& first() const { return first_; }
  const std::string& second() const { return second_; }

 private:
  std::uint64_t count_;
  std::string first_;
  std::string second_;
};

namespace detail {
struct CompiledGrammar;
}

/// A compiled, immutable grammar. Recognition is a character-level Earley
/// parse; layout (when declared) is accepted after every literal, character
/// class, and lexical nonterminal occurring in a context-free production,
/// and before the start symbol.
class Grammar {
 public:
  Grammar();
  ~Grammar();
  Grammar(const Grammar&);
  Grammar& operator=(const Grammar&);

  const std::vector<Production>& productions() const;
  const std::set<std::string>& nonterminals() const;
  const std::optional<std::string>& layout() const;
  const std::set<std::string>& start_symbols() const;
  bool empty() const;

  /// Parses `input` from nonterminal `start` and returns the parse tree as a
  /// `Tree` value. Throws ParseError, or AmbiguityError under policy Error.
  Value parse(std::string_view start, std::string_view input,
              AmbiguityPolicy policy = AmbiguityPolicy::Error,
              const std::string& uri = "input") const;

  /// Number of distinct derivations (saturating); derivations that revisit
  /// the same nonterminal over the same span below itself are not counted.
  std::uint64_t count_derivations(std::string_view start, std::string_view input) const;

  friend Grammar compile_grammar(std::span<const SyntaxDecl> decls);

 private:
  std::shared_ptr<const detail::CompiledGrammar> compiled_;
};

/// Unions all declarations (identical productions collapse) and validates them.
Grammar compile_grammar(std::span<const SyntaxDecl> decls);

/// Maps a parse tree to abstract syntax: labeled productions become
/// constructor applications, lists become list values, lexicals become
/// strings (or ints in `int` slots), layout and literals are dropped.
Value implode(const Value& tree, const Declarations& decls);

/// Concatenation of all token texts; equals the parsed input.
std::string unparse(const Value& tree);

}  // namespace mrl
