#include "mrl/value.hpp"

#include <algorithm>
#include <cctype>
#include <variant>

#include "mrl/error.hpp"
#include "mrl/types.hpp"

namespace mrl {

namespace {

struct Seq {
  std::vector<Value> elems;
};
struct Entries {
  std::vector<MapEntry> entries;
};
struct NodeData {
  std::string adt;
  std::string ctor;
  std::vector<Value> args;
};

}  // namespace

struct Value::Rep {
  Kind kind;
  std::variant<bool, BigInt, std::string, Location, Seq, Entries, NodeData> data;
};

namespace {

const std::string kEmptyString;

std::shared_ptr<const Value::Rep> false_rep() {
  static const auto rep = std::make_shared<const Value::Rep>(Value::Rep{Kind::Bool, false});
  return rep;
}

bool value_less(const Value& a, const Value& b) { return (a <=> b) < 0; }
bool key_less(const MapEntry& a, const MapEntry& b) { return (a.first <=> b.first) < 0; }

template <class Range>
std::strong_ordering compare_ranges(const Range& a, const Range& b) {
  auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<typename Range::value_type, MapEntry>) {
      if (auto c = a[i].first <=> b[i].first; c != 0) return c;
      if (auto c = a[i].second <=> b[i].second; c != 0) return c;
    } else {
      if (auto c = a[i] <=> b[i]; c != 0) return c;
    }
  }
  return a.size() <=> b.size();
}

}  // namespace

Value::Value() : rep_(false_rep()) {}

Value Value::boolean(bool b) {
  if (!b) return Value();
  static const auto rep = std::make_shared<const Rep>(Rep{Kind::Bool, true});
  return Value(rep);
}

Value Value::integer(BigInt i) {
  return Value(std::make_shared<const Rep>(Rep{Kind::Int, std::move(i)}));
}

Value Value::integer(long long i) { return integer(BigInt(i)); }

Value Value::string(std::string s) {
  return Value(std::make_shared<const Rep>(Rep{Kind::Str, std::move(s)}));
}

Value Value::location(Location loc) {
  return Value(std::make_shared<const Rep>(Rep{Kind::Loc, std::move(loc)}));
}

Value Value::tuple(std::vector<Value> elems) {
  return Value(std::make_shared<const Rep>(Rep{Kind::Tuple, Seq{std::move(elems)}}));
}

Value Value::list(std::vector<Value> elems) {
  return Value(std::make_shared<const Rep>(Rep{Kind::List, Seq{std::move(elems)}}));
}

Value Value::set(std::vector<Value> elems) {
  std::sort(elems.begin(), elems.end(), value_less);
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  return Value(std::make_shared<const Rep>(Rep{Kind::Set, Seq{std::move(elems)}}));
}

Value Value::map(std::vector<MapEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(), key_less);
  std::vector<MapEntry> out;
  out.reserve(entries.size());
  for (auto& e : entries) {
    if (!out.empty() && out.back().first == e.first) {
      out.back().second = std::move(e.second);
    } else {
      out.push_back(std::move(e));
    }
  }
  return Value(std::make_shared<const Rep>(Rep{Kind::Map, Entries{std::move(out)}}));
}

Value Value::node(std::string adt, std::string ctor, std::vector<Value> args) {
  return Value(std::make_shared<const Rep>(
      Rep{Kind::Node, NodeData{std::move(adt), std::move(ctor), std::move(args)}}));
}

Kind Value::kind() const { return rep_->kind; }

bool Value::as_bool() const { return std::get<bool>(rep_->data); }
const BigInt& Value::as_int() const { return std::get<BigInt>(rep_->data); }
const std::string& Value::as_str() const { return std::get<std::string>(rep_->data); }
const Location& Value::as_loc() const { return std::get<Location>(rep_->data); }

std::span<const Value> Value::elements() const {
  if (auto* s = std::get_if<Seq>(&rep_->data)) return s->elems;
  return {};
}

std::span<const MapEntry> Value::entries() const {
  if (auto* e = std::get_if<Entries>(&rep_->data)) return e->entries;
  return {};
}

const std::string& Value::adt() const {
  if (auto* n = std::get_if<NodeData>(&rep_->data)) return n->adt;
  return kEmptyString;
}

const std::string& Value::ctor() const {
  if (auto* n = std::get_if<NodeData>(&rep_->data)) return n->ctor;
  return kEmptyString;
}

std::span<const Value> Value::args() const {
  if (auto* n = std::get_if<NodeData>(&rep_->data)) return n->args;
  return {};
}

std::size_t Value::arity() const {
  switch (kind()) {
    case Kind::Tuple:
    case Kind::List:
    case Kind::Set: return elements().size();
    case Kind::Map: return entries().size();
    case Kind::Node: return args().size();
    default: return 0;
  }
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.rep_ == b.rep_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  switch (a.kind()) {
    case Kind::Bool: return a.as_bool() <=> b.as_bool();
    case Kind::Int: {
      int c = a.as_int().compare(b.as_int());
      return c < 0 ? std::strong_ordering::less
                   : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }
    case Kind::Str: return a.as_str().compare(b.as_str()) <=> 0;
    case Kind::Loc: {
      const auto& x = a.as_loc();
      const auto& y = b.as_loc();
      if (auto c = x.uri.compare(y.uri) <=> 0; c != 0) return c;
      if (auto c = x.offset <=> y.offset; c != 0) return c;
      return x.length <=> y.length;
    }
    case Kind::Tuple:
    case Kind::List:
    case Kind::Set: return compare_ranges(a.elements(), b.elements());
    case Kind::Map: return compare_ranges(a.entries(), b.entries());
    case Kind::Node: {
      if (auto c = a.adt().compare(b.adt()) <=> 0; c != 0) return c;
      if (auto c = a.ctor().compare(b.ctor()) <=> 0; c != 0) return c;
      return compare_ranges(a.args(), b.args());
    }
  }
  return std::strong_ordering::equal;
}

bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }

// ---------------------------------------------------------------------------
// Rendering

std::string escape_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '<': out += "\\<"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

namespace {

void render_into(const Value& v, std::string& out);

void render_seq(std::span<const Value> elems, char open, char close, std::string& out) {
  out += open;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i) out += ',';
    render_into(elems[i], out);
  }
  out += close;
}

void render_into(const Value& v, std::string& out) {
  switch (v.kind()) {
    case Kind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case Kind::Int: out += v.as_int().str(); break;
    case Kind::Str: out += escape_string(v.as_str()); break;
    case Kind::Loc: {
      const auto& l = v.as_loc();
      out += '|';
      out += l.uri;
      out += "|(" + std::to_string(l.offset) + "," + std::to_string(l.length) + ")";
      break;
    }
    case Kind::Tuple: render_seq(v.elements(), '<', '>', out); break;
    case Kind::List: render_seq(v.elements(), '[', ']', out); break;
    case Kind::Set: render_seq(v.elements(), '{', '}', out); break;
    case Kind::Map: {
      out += '(';
      bool first = true;
      for (const auto& [k, val] : v.entries()) {
        if (!first) out += ',';
        first = false;
        render_into(k, out);
        out += ':';
        render_into(val, out);
      }
      out += ')';
      break;
    }
    case Kind::Node: {
      out += v.ctor();
      render_seq(v.args(), '(', ')', out);
      break;
    }
  }
}

}  // namespace

std::string render(const Value& v) {
  std::string out;
  render_into(v, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ValueReader {
 public:
  ValueReader(std::string_view text, const Declarations* decls) : text_(text), decls_(decls) {}

  Value read_all() {
    Value v = read();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ValueSyntaxError,
                what + " at offset " + std::to_string(pos_),
                SourceSpan{"value", pos_, 0});
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  std::vector<Value> read_items(char close) {
    std::vector<Value> items;
    if (eat(close)) return items;
    do {
      items.push_back(read());
    } while (eat(','));
    expect(close);
    return items;
  }

  Value read() {
    char c = peek();
    if (c == '\0') fail("unexpected end of input");
    if (c == '[') {
      ++pos_;
      return Value::list(read_items(']'));
    }
    if (c == '{') {
      ++pos_;
      return Value::set(read_items('}'));
    }
    if (c == '<') {
      ++pos_;
      return Value::tuple(read_items('>'));
    }
    if (c == '(') {
      ++pos_;
      std::vector<MapEntry> entries;
      if (eat(')')) return Value::map({});
      do {
        Value k = read();
        expect(':');
        Value v = read();
        entries.emplace_back(std::move(k), std::move(v));
      } while (eat(','));
      expect(')');
      return Value::map(std::move(entries));
    }
    if (c == '"') return read_string();
    if (c == '|') return read_location();
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return read_int();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\') {
      std::string name = read_ident();
      if (peek() == '(') {
        ++pos_;
        auto args = read_items(')');
        std::string adt;
        if (decls_) adt = decls_->adt_for_constructor(name, args);
        return Value::node(std::move(adt), std::move(name), std::move(args));
      }
      if (name == "true") return Value::boolean(true);
      if (name == "false") return Value::boolean(false);
      fail("unexpected identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string read_ident() {
    if (text_[pos_] == '\\') ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  Value read_int() {
    std::size_t start = pos_;
    if (text_[pos_] == '-') ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (digits == pos_) fail("expected digits");
    return Value::integer(BigInt(std::string(text_.substr(start, pos_ - start))));
  }

  std::uint64_t read_nat() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a non-negative integer");
    return std::stoull(std::string(text_.substr(start, pos_ - start)));
  }

  Value read_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"':
          case '\\':
          case '<':
          case '>':
          case '\'': out += e; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else if (c == '<') {
        fail("unescaped '<' in string literal");
      } else {
        out += c;
      }
    }
    return Value::string(std::move(out));
  }

  Value read_location() {
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '|') ++pos_;
    if (pos_ >= text_.size()) fail("unterminated location");
    Location loc;
    loc.uri = std::string(text_.substr(start, pos_ - start));
    ++pos_;
    expect('(');
    loc.offset = read_nat();
    expect(',');
    loc.length = read_nat();
    expect(')');
    return Value::location(std::move(loc));
  }

  std::string_view text_;
  const Declarations* decls_;
  std::size_t pos_ = 0;
};

}  // namespace

Value parse_value(std::string_view text, const Declarations* decls) {
  return ValueReader(text, decls).read_all();
}

// ---------------------------------------------------------------------------
// Sets and relations

namespace {

void require_set(const Value& v, const char* op) {
  if (!v.is(Kind::Set)) {
    throw Error(ErrorKind::TypeError, std::string(op) + " expects a set, got " + render(v));
  }
}

void require_binary(const Value& r, const char* op) {
  require_set(r, op);
  for (const auto& t : r.elements()) {
    if (!t.is(Kind::Tuple) || t.elements().size() != 2) {
      throw Error(ErrorKind::ArityError,
                  std::string(op) + " expects a binary relation, found element " + render(t));
    }
  }
}

// Tuples in a canonical set are sorted by first component, so the tuples with
// a given first component form one contiguous run.
std::span<const Value> tuples_from(const Value& r, const Value& key) {
  auto elems = r.elements();
  auto lo = std::partition_point(elems.begin(), elems.end(),
                                 [&](const Value& t) { return (t.elements()[0] <=> key) < 0; });
  auto hi = std::partition_point(lo, elems.end(),
                                 [&](const Value& t) { return (t.elements()[0] <=> key) == 0; });
  return {lo, hi};
}

}  // namespace

Value set_union(const Value& a, const Value& b) {
  require_set(a, "union");
  require_set(b, "union");
  std::vector<Value> out;
  out.reserve(a.arity() + b.arity());
  std::set_union(a.elements().begin(), a.elements().end(), b.elements().begin(),
                 b.elements().end(), std::back_inserter(out), value_less);
  return Value::set(std::move(out));
}

Value set_intersect(const Value& a, const Value& b) {
  require_set(a, "intersection");
  require_set(b, "intersection");
  std::vector<Value> out;
  std::set_intersection(a.elements().begin(), a.elements().end(), b.elements().begin(),
                        b.elements().end(), std::back_inserter(out), value_less);
  return Value::set(std::move(out));
}

Value set_diff(const Value& a, const Value& b) {
  require_set(a, "difference");
  require_set(b, "difference");
  std::vector<Value> out;
  std::set_difference(a.elements().begin(), a.elements().end(), b.elements().begin(),
                      b.elements().end(), std::back_inserter(out), value_less);
  return Value::set(std::move(out));
}

Value set_insert(const Value& set, const Value& elem) {
  require_set(set, "insert");
  std::vector<Value> out(set.elements().begin(), set.elements().end());
  out.push_back(elem);
  return Value::set(std::move(out));
}

bool set_contains(const Value& set, const Value& elem) {
  auto elems = set.elements();
  return std::binary_search(elems.begin(), elems.end(), elem, value_less);
}

std::optional<Value> map_lookup(const Value& map, const Value& key) {
  auto entries = map.entries();
  auto it = std::partition_point(entries.begin(), entries.end(),
                                 [&](const MapEntry& e) { return (e.first <=> key) < 0; });
  if (it != entries.end() && it->first == key) return it->second;
  return std::nullopt;
}

Value map_put(const Value& map, const Value& key, const Value& val) {
  std::vector<MapEntry> entries(map.entries().begin(), map.entries().end());
  entries.emplace_back(key, val);
  return Value::map(std::move(entries));
}

Value compose(const Value& r, const Value& s) {
  require_binary(r, "compose");
  require_binary(s, "compose");
  std::vector<Value> out;
  for (const auto& left : r.elements()) {
    for (const auto& right : tuples_from(s, left.elements()[1])) {
      out.push_back(Value::tuple({left.elements()[0], right.elements()[1]}));
    }
  }
  return Value::set(std::move(out));
}

Value transitive_closure(const Value& r) {
  require_binary(r, "transitive closure");
  Value result = r;
  Value delta = r;
  while (delta.arity() != 0) {
    Value fresh = set_diff(compose(delta, r), result);
    result = set_union(result, fresh);
    delta = fresh;
  }
  return result;
}

Value reflexive_transitive_closure(const Value& r) {
  Value closure = transitive_closure(r);
  std::vector<Value> ident;
  const Value nodes = carrier(r);
  for (const auto& x : nodes.elements()) ident.push_back(Value::tuple({x, x}));
  return set_union(closure, Value::set(std::move(ident)));
}

Value rel_image(const Value& r, const Value& key) {
  require_binary(r, "relation image");
  std::vector<Value> out;
  for (const auto& t : tuples_from(r, key)) out.push_back(t.elements()[1]);
  return Value::set(std::move(out));
}

Value carrier(const Value& r) {
  require_set(r, "carrier");
  std::vector<Value> out;
  for (const auto& t : r.elements()) {
    if (!t.is(Kind::Tuple)) {
      throw Error(ErrorKind::ArityError, "carrier expects a relation, found " + render(t));
    }
    out.insert(out.end(), t.elements().begin(), t.elements().end());
  }
  return Value::set(std::move(out));
}

}  // namespace mrl
