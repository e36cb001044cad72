#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mrl/error.hpp"
#include "mrl/grammar.hpp"
#include "mrl/value.hpp"

namespace mrl {

/// A literal run or an interpolation hole inside a string literal. Margins
/// and escapes are already applied to `text`; holes keep the byte range of
/// their source so the parser can read them as expressions.
struct StringPiece {
  bool hole = false;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Token {
  enum class Kind { Ident, Int, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t offset = 0;
  std::size_t length = 0;
  bool space_before = false;
  bool escaped = false;  // identifier written as \name
  std::vector<StringPiece> pieces;

  bool is(std::string_view punct) const { return kind == Kind::Punct && text == punct; }
  bool is_word(std::string_view w) const { return kind == Kind::Ident && !escaped && text == w; }
};

/// On-demand tokenizer over a byte range of one source file. Character
/// classes and location literals are context dependent, so the parser asks
/// for them explicitly at a given offset.
class Lexer {
 public:
  Lexer(std::string_view source, std::string uri, std::size_t begin = 0,
        std::size_t end = std::string_view::npos);

  Token next();
  std::size_t pos() const { return pos_; }
  void reset(std::size_t pos) { pos_ = pos; }
  std::size_t end() const { return end_; }
  const std::string& uri() const { return uri_; }
  std::string_view source() const { return src_; }

  /// Reads `[...]` starting at `at`; leaves the position after `]`.
  std::vector<CharRange> char_class(std::size_t at);
  /// Reads `|uri|` or `|uri|(offset,length)` starting at `at`.
  Value location(std::size_t at);

  SourceSpan span(std::size_t offset, std::size_t length) const {
    return SourceSpan{uri_, offset, length};
  }
  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const;

 private:
  void skip_space();
  Token string_literal(std::size_t start);
  std::size_t hole_end(std::size_t at) const;
  std::size_t skip_nested_string(std::size_t at) const;
  char32_t escape(std::size_t& i) const;

  std::string_view src_;
  std::string uri_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace mrl
