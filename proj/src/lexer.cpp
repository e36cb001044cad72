#include "mrl/lexer.hpp"

#include <array>
#include <cctype>

#include "mrl/utf8.hpp"

namespace mrl {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

constexpr std::array<std::string_view, 19> kMultiPunct = {
    "<==>", "==>", "!:=", ":=", "<-", "::", "..", "==", "!=", "<=", ">=",
    "&&",   "||",  "+=",  "-=", "*=", "/=", "=>", "?=",
};

}  // namespace

Lexer::Lexer(std::string_view source, std::string uri, std::size_t begin, std::size_t end)
    : src_(source), uri_(std::move(uri)), pos_(begin), end_(std::min(end, source.size())) {}

void Lexer::fail(std::size_t offset, const std::string& msg) const {
  throw Error(ErrorKind::SyntaxError, msg, span(offset, 1));
}

void Lexer::skip_space() {
  while (pos_ < end_) {
    char c = src_[pos_];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++pos_;
    } else if (c == '/' && pos_ + 1 < end_ && src_[pos_ + 1] == '/') {
      while (pos_ < end_ && src_[pos_] != '\n') ++pos_;
    } else if (c == '/' && pos_ + 1 < end_ && src_[pos_ + 1] == '*') {
      auto close = src_.find("*/", pos_ + 2);
      if (close == std::string_view::npos || close >= end_) fail(pos_, "unterminated comment");
      pos_ = close + 2;
    } else {
      break;
    }
  }
}

Token Lexer::next() {
  const std::size_t before = pos_;
  skip_space();
  Token t;
  t.space_before = pos_ != before;
  t.offset = pos_;
  if (pos_ >= end_) {
    t.kind = Token::Kind::End;
    return t;
  }
  const char c = src_[pos_];
  if (c == '\\' && pos_ + 1 < end_ && ident_start(src_[pos_ + 1])) {
    ++pos_;
    std::size_t s = pos_;
    while (pos_ < end_ && ident_char(src_[pos_])) ++pos_;
    t.kind = Token::Kind::Ident;
    t.escaped = true;
    t.text = std::string(src_.substr(s, pos_ - s));
  } else if (ident_start(c)) {
    std::size_t s = pos_;
    while (pos_ < end_ && ident_char(src_[pos_])) ++pos_;
    t.kind = Token::Kind::Ident;
    t.text = std::string(src_.substr(s, pos_ - s));
    // Strategy names are written with a dash.
    for (std::string_view dashed : {"top-down", "bottom-up"}) {
      auto head = dashed.substr(0, dashed.find('-'));
      if (t.text == head && src_.substr(s, dashed.size()) == dashed &&
          (s + dashed.size() >= end_ || !ident_char(src_[s + dashed.size()]))) {
        t.text = std::string(dashed);
        pos_ = s + dashed.size();
      }
    }
  } else if (std::isdigit(static_cast<unsigned char>(c))) {
    std::size_t s = pos_;
    while (pos_ < end_ && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    t.kind = Token::Kind::Int;
    t.text = std::string(src_.substr(s, pos_ - s));
  } else if (c == '"') {
    Token s = string_literal(pos_);
    s.space_before = t.space_before;
    return s;
  } else {
    t.kind = Token::Kind::Punct;
    for (auto p : kMultiPunct) {
      if (src_.substr(pos_, p.size()) == p && pos_ + p.size() <= end_) {
        t.text = std::string(p);
        break;
      }
    }
    if (t.text.empty()) t.text = std::string(1, c);
    pos_ += t.text.size();
  }
  t.length = pos_ - t.offset;
  return t;
}

char32_t Lexer::escape(std::size_t& i) const {
  // i points at the backslash.
  if (i + 1 >= end_) fail(i, "unterminated escape");
  char e = src_[i + 1];
  i += 2;
  switch (e) {
    case 'n': return '\n';
    case 't': return '\t';
    case 'r': return '\r';
    case '"': return '"';
    case '\\': return '\\';
    case '<': return '<';
    case '>': return '>';
    case '\'': return '\'';
    default: fail(i - 2, std::string("unknown escape \\") + e);
  }
}

std::size_t Lexer::skip_nested_string(std::size_t at) const {
  std::size_t i = at + 1;
  while (i < end_) {
    char c = src_[i];
    if (c == '\\') {
      i += 2;
    } else if (c == '"') {
      return i + 1;
    } else if (c == '<') {
      i = hole_end(i + 1) + 1;
    } else {
      ++i;
    }
  }
  fail(at, "unterminated string");
}

// Position of the `>` closing a hole whose contents start at `at`. Round and
// square brackets nest; comparisons with `>` inside a hole need parentheses.
std::size_t Lexer::hole_end(std::size_t at) const {
  int depth = 0;
  std::size_t i = at;
  while (i < end_) {
    char c = src_[i];
    if (c == '"') {
      i = skip_nested_string(i);
      continue;
    }
    if (c == '(' || c == '[') ++depth;
    if ((c == ')' || c == ']') && depth > 0) --depth;
    if (c == '>' && depth == 0) return i;
    ++i;
  }
  throw Error(ErrorKind::UnbalancedTemplate, "unclosed '<' in string template", span(at - 1, 1));
}

Token Lexer::string_literal(std::size_t start) {
  Token t;
  t.kind = Token::Kind::String;
  t.offset = start;
  std::size_t i = start + 1;
  StringPiece cur;
  auto flush = [&] {
    if (!cur.text.empty()) t.pieces.push_back(std::move(cur));
    cur = StringPiece{};
  };
  while (true) {
    if (i >= end_) fail(start, "unterminated string");
    char c = src_[i];
    if (c == '"') {
      ++i;
      break;
    }
    if (c == '\\') {
      utf8::append(cur.text, escape(i));
      continue;
    }
    if (c == '<') {
      flush();
      std::size_t close = hole_end(i + 1);
      StringPiece hole;
      hole.hole = true;
      hole.begin = i + 1;
      hole.end = close;
      t.pieces.push_back(std::move(hole));
      i = close + 1;
      continue;
    }
    if (c == '\n') {
      cur.text += '\n';
      ++i;
      std::size_t j = i;
      while (j < end_ && (src_[j] == ' ' || src_[j] == '\t')) ++j;
      if (j < end_ && src_[j] == '\'') i = j + 1;
      continue;
    }
    cur.text += c;
    ++i;
  }
  flush();
  pos_ = i;
  t.length = i - start;
  return t;
}

std::vector<CharRange> Lexer::char_class(std::size_t at) {
  if (at >= end_ || src_[at] != '[') fail(at, "expected character class");
  std::size_t i = at + 1;
  std::vector<CharRange> out;
  auto read_char = [&]() -> char32_t {
    if (i >= end_) fail(at, "unterminated character class");
    if (src_[i] == '\\') {
      if (i + 1 >= end_) fail(i, "unterminated escape");
      char e = src_[i + 1];
      i += 2;
      switch (e) {
        case 'n': return '\n';
        case 't': return '\t';
        case 'r': return '\r';
        default: return static_cast<unsigned char>(e);
      }
    }
    // Decode one UTF-8 scalar.
    std::size_t len = 1;
    auto b = static_cast<unsigned char>(src_[i]);
    if (b >= 0xF0) len = 4;
    else if (b >= 0xE0) len = 3;
    else if (b >= 0xC0) len = 2;
    auto decoded = utf8::decode(src_.substr(i, len));
    i += len;
    return decoded.empty() ? U'\uFFFD' : decoded[0];
  };
  while (true) {
    if (i >= end_) fail(at, "unterminated character class");
    if (src_[i] == ']') {
      ++i;
      break;
    }
    char32_t lo = read_char();
    char32_t hi = lo;
    if (i + 1 < end_ && src_[i] == '-' && src_[i + 1] != ']') {
      ++i;
      hi = read_char();
    }
    if (hi < lo) fail(at, "empty character range");
    out.push_back(CharRange{lo, hi});
  }
  pos_ = i;
  return out;
}

Value Lexer::location(std::size_t at) {
  auto close = src_.find('|', at + 1);
  if (close == std::string_view::npos || close >= end_) fail(at, "unterminated location");
  std::string v(src_.substr(at, close + 1 - at));
  std::size_t i = close + 1;
  if (i < end_ && src_[i] == '(') {
    auto rp = src_.find(')', i);
    if (rp == std::string_view::npos || rp >= end_) fail(i, "unterminated location");
    v += std::string(src_.substr(i, rp + 1 - i));
    i = rp + 1;
  } else {
    v += "(0,0)";
  }
  pos_ = i;
  try {
    return parse_value(v);
  } catch (const Error& e) {
    fail(at, "malformed location: " + e.detail());
  }
}

}  // namespace mrl
