#include "mrl/pattern.hpp"

#include <algorithm>
#include <set>

namespace mrl {

Pattern Pattern::lit(Value v) {
  Pattern p;
  p.kind = Kind::Literal;
  p.literal = std::move(v);
  return p;
}

Pattern Pattern::var(std::string name, std::optional<TypeExpr> type) {
  Pattern p;
  p.kind = Kind::Var;
  p.name = std::move(name);
  p.type = std::move(type);
  return p;
}

Pattern Pattern::wildcard() { return Pattern{}; }

Pattern Pattern::ctor(std::string name, std::vector<Pattern> args, std::optional<std::string> adt) {
  Pattern p;
  p.kind = Kind::Ctor;
  p.name = std::move(name);
  p.children = std::move(args);
  p.adt = std::move(adt);
  return p;
}

Pattern Pattern::list(std::vector<Pattern> items) {
  Pattern p;
  p.kind = Kind::List;
  p.children = std::move(items);
  return p;
}

Pattern Pattern::set(std::vector<Pattern> items) {
  Pattern p;
  p.kind = Kind::Set;
  p.children = std::move(items);
  return p;
}

Pattern Pattern::tuple(std::vector<Pattern> elems) {
  Pattern p;
  p.kind = Kind::Tuple;
  p.children = std::move(elems);
  return p;
}

Pattern Pattern::deep(Pattern inner) {
  Pattern p;
  p.kind = Kind::Deep;
  p.children.push_back(std::move(inner));
  return p;
}

Pattern Pattern::neg(Pattern inner) {
  Pattern p;
  p.kind = Kind::Neg;
  p.children.push_back(std::move(inner));
  return p;
}

Pattern Pattern::multi(std::string name) {
  Pattern p;
  p.kind = Kind::Multi;
  p.name = std::move(name);
  return p;
}

// ---------------------------------------------------------------------------

const Value* Bindings::find_local(std::string_view name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return &v;
  }
  return nullptr;
}

const Value* Bindings::find(std::string_view name) const {
  if (auto* v = find_local(name)) return v;
  return outer_ ? outer_->lookup(name) : nullptr;
}

void Bindings::bind(std::string name, Value v) {
  for (auto& [n, old] : entries_) {
    if (n == name) {
      old = std::move(v);
      return;
    }
  }
  entries_.emplace_back(std::move(name), std::move(v));
}

// ---------------------------------------------------------------------------

namespace {

bool is_anonymous(const std::string& name) { return name.empty() || name == "_"; }

// Cheap rejection before attempting a full match of a set element.
bool may_match(const Pattern& p, const Value& v) {
  switch (p.kind) {
    case Pattern::Kind::Literal: return p.literal.kind() == v.kind();
    case Pattern::Kind::Ctor:
      return v.is(Kind::Node) && v.ctor() == p.name && v.arity() == p.children.size();
    case Pattern::Kind::List: return v.is(Kind::List);
    case Pattern::Kind::Set: return v.is(Kind::Set);
    case Pattern::Kind::Tuple: return v.is(Kind::Tuple) && v.arity() == p.children.size();
    default: return true;
  }
}

Generator<Bindings> match_seq(std::span<const Pattern> ps, std::span<const Value> vs, Bindings b,
                              const Declarations& decls) {
  if (ps.empty()) {
    co_yield b;
    co_return;
  }
  for (const auto& b1 : match_all(ps[0], vs[0], b, decls)) {
    for (const auto& b2 : match_seq(ps.subspan(1), vs.subspan(1), b1, decls)) co_yield b2;
  }
}

Generator<Bindings> match_list(std::span<const Pattern> items, std::span<const Value> elems,
                               Bindings b, const Declarations& decls) {
  if (items.empty()) {
    if (elems.empty()) co_yield b;
    co_return;
  }
  const Pattern& item = items[0];
  if (item.kind != Pattern::Kind::Multi) {
    if (elems.empty()) co_return;
    for (const auto& b1 : match_all(item, elems[0], b, decls)) {
      for (const auto& b2 : match_list(items.subspan(1), elems.subspan(1), b1, decls)) co_yield b2;
    }
    co_return;
  }

  std::size_t singles_after = std::count_if(items.begin() + 1, items.end(), [](const Pattern& p) {
    return p.kind != Pattern::Kind::Multi;
  });
  if (elems.size() < singles_after) co_return;
  const std::size_t max_len = elems.size() - singles_after;

  if (!is_anonymous(item.name)) {
    if (const Value* prev = b.find(item.name)) {
      if (!prev->is(Kind::List) || prev->arity() > max_len) co_return;
      auto want = prev->elements();
      if (!std::equal(want.begin(), want.end(), elems.begin())) co_return;
      for (const auto& b2 : match_list(items.subspan(1), elems.subspan(want.size()), b, decls)) {
        co_yield b2;
      }
      co_return;
    }
  }

  const bool last = items.size() == 1;
  for (std::size_t len = last ? max_len : 0; len <= max_len; ++len) {
    Bindings b1 = b;
    if (!is_anonymous(item.name)) {
      b1.bind(item.name, Value::list(std::vector<Value>(elems.begin(), elems.begin() + len)));
    }
    for (const auto& b2 : match_list(items.subspan(1), elems.subspan(len), b1, decls)) co_yield b2;
  }
}

Generator<Bindings> match_set(std::span<const Pattern> singles, const Pattern* rest,
                              std::vector<Value> remaining, Bindings b, const Declarations& decls) {
  if (singles.empty()) {
    if (!rest) {
      if (remaining.empty()) co_yield b;
      co_return;
    }
    if (is_anonymous(rest->name)) {
      co_yield b;
      co_return;
    }
    Value leftover = Value::set(std::move(remaining));
    if (const Value* prev = b.find(rest->name)) {
      if (*prev == leftover) co_yield b;
      co_return;
    }
    b.bind(rest->name, std::move(leftover));
    co_yield b;
    co_return;
  }
  if (remaining.size() < singles.size()) co_return;
  const Pattern& single = singles[0];
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    if (!may_match(single, remaining[i])) continue;
    for (const auto& b1 : match_all(single, remaining[i], b, decls)) {
      std::vector<Value> others;
      others.reserve(remaining.size() - 1);
      for (std::size_t j = 0; j < remaining.size(); ++j) {
        if (j != i) others.push_back(remaining[j]);
      }
      for (const auto& b2 : match_set(singles.subspan(1), rest, std::move(others), b1, decls)) {
        co_yield b2;
      }
    }
  }
}

Generator<Bindings> match_set_distinct(const Pattern& p, Value v, Bindings b,
                                       const Declarations& decls) {
  std::vector<Pattern> singles;
  const Pattern* rest = nullptr;
  for (const auto& item : p.children) {
    if (item.kind == Pattern::Kind::Multi) {
      rest = &item;
    } else {
      singles.push_back(item);
    }
  }
  std::vector<Value> elems(v.elements().begin(), v.elements().end());
  std::set<std::vector<std::pair<std::string, Value>>> seen;
  for (const auto& r : match_set(singles, rest, std::move(elems), b, decls)) {
    std::vector<std::pair<std::string, Value>> key(r.entries().begin(), r.entries().end());
    if (!seen.insert(std::move(key)).second) continue;
    co_yield r;
  }
}

}  // namespace

Generator<Bindings> match_all(const Pattern& p, Value v, Bindings b, const Declarations& decls) {
  switch (p.kind) {
    case Pattern::Kind::Literal:
      if (p.literal == v) co_yield b;
      co_return;

    case Pattern::Kind::Wildcard:
      co_yield b;
      co_return;

    case Pattern::Kind::Multi:
      throw Error(ErrorKind::TypeError, "*" + p.name + " is only allowed inside list or set patterns");

    case Pattern::Kind::Var: {
      if (p.type) {
        try {
          decls.check(*p.type);
        } catch (const Error& e) {
          throw Error(ErrorKind::TypeAnnotationError, "unknown type in pattern: " + e.detail());
        }
        if (!conforms(v, *p.type, decls)) co_return;
        if (is_anonymous(p.name)) {
          co_yield b;
          co_return;
        }
        if (const Value* prev = b.find_local(p.name)) {
          if (*prev == v) co_yield b;
          co_return;
        }
      } else if (is_anonymous(p.name)) {
        co_yield b;
        co_return;
      } else if (const Value* prev = b.find(p.name)) {
        if (*prev == v) co_yield b;
        co_return;
      }
      b.bind(p.name, v);
      co_yield b;
      co_return;
    }

    case Pattern::Kind::Ctor: {
      if (!decls.has_constructor(p.name, p.children.size())) {
        throw Error(ErrorKind::UndeclaredConstructor,
                    p.name + "/" + std::to_string(p.children.size()));
      }
      if (!v.is(Kind::Node) || v.ctor() != p.name || v.arity() != p.children.size()) co_return;
      if (p.adt && v.adt() != *p.adt) co_return;
      for (const auto& r : match_seq(p.children, v.args(), b, decls)) co_yield r;
      co_return;
    }

    case Pattern::Kind::Tuple:
      if (!v.is(Kind::Tuple) || v.arity() != p.children.size()) co_return;
      for (const auto& r : match_seq(p.children, v.elements(), b, decls)) co_yield r;
      co_return;

    case Pattern::Kind::List:
      if (!v.is(Kind::List)) co_return;
      for (const auto& r : match_list(p.children, v.elements(), b, decls)) co_yield r;
      co_return;

    case Pattern::Kind::Set:
      if (!v.is(Kind::Set)) co_return;
      for (const auto& r : match_set_distinct(p, v, b, decls)) co_yield r;
      co_return;

    case Pattern::Kind::Deep:
      for (const auto& sub : subterms(v)) {
        for (const auto& r : match_all(p.children[0], sub, b, decls)) co_yield r;
      }
      co_return;

    case Pattern::Kind::Neg: {
      auto inner = match_all(p.children[0], v, b, decls);
      if (inner.next()) co_return;
      co_yield b;
      co_return;
    }
  }
}

Generator<Value> subterms(Value v) {
  co_yield v;
  switch (v.kind()) {
    case Kind::Node:
      for (const auto& a : v.args()) {
        for (const auto& s : subterms(a)) co_yield s;
      }
      break;
    case Kind::List:
    case Kind::Set:
    case Kind::Tuple:
      for (const auto& e : v.elements()) {
        for (const auto& s : subterms(e)) co_yield s;
      }
      break;
    case Kind::Map:
      for (const auto& [k, val] : v.entries()) {
        for (const auto& s : subterms(k)) co_yield s;
        for (const auto& s : subterms(val)) co_yield s;
      }
      break;
    default: break;
  }
}

// ---------------------------------------------------------------------------

namespace {

std::optional<Kind> head_kind(const Pattern& p) {
  using PK = Pattern::Kind;
  switch (p.kind) {
    case PK::Literal: return p.literal.kind();
    case PK::Ctor: return Kind::Node;
    case PK::List: return Kind::List;
    case PK::Set: return Kind::Set;
    case PK::Tuple: return Kind::Tuple;
    case PK::Var:
      if (!p.type) return std::nullopt;
      switch (p.type->kind) {
        case TypeExpr::Kind::Bool: return Kind::Bool;
        case TypeExpr::Kind::Int: return Kind::Int;
        case TypeExpr::Kind::Str: return Kind::Str;
        case TypeExpr::Kind::Loc: return Kind::Loc;
        case TypeExpr::Kind::List: return Kind::List;
        case TypeExpr::Kind::Set: return Kind::Set;
        case TypeExpr::Kind::Map: return Kind::Map;
        case TypeExpr::Kind::Tuple: return Kind::Tuple;
        case TypeExpr::Kind::Adt:
        case TypeExpr::Kind::NonTerminal:
        case TypeExpr::Kind::Node: return Kind::Node;
        default: return std::nullopt;
      }
    default: return std::nullopt;
  }
}

bool has_multi(const Pattern& p) {
  return std::any_of(p.children.begin(), p.children.end(),
                     [](const Pattern& c) { return c.kind == Pattern::Kind::Multi; });
}

bool pairwise_disjoint(const std::vector<Pattern>& a, const std::vector<Pattern>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (matches_non_overlapping(a[i], b[i])) return true;
  }
  return false;
}

}  // namespace

bool matches_non_overlapping(const Pattern& a, const Pattern& b) {
  using PK = Pattern::Kind;
  auto ka = head_kind(a);
  auto kb = head_kind(b);
  if (!ka || !kb) return false;
  if (*ka != *kb) return true;

  if (a.kind == PK::Literal && b.kind == PK::Literal) return a.literal != b.literal;
  if (a.kind == PK::Ctor && b.kind == PK::Ctor) {
    if (a.name != b.name || a.children.size() != b.children.size()) return true;
    if (a.adt && b.adt && *a.adt != *b.adt) return true;
    return pairwise_disjoint(a.children, b.children);
  }
  if (a.kind == PK::Ctor && b.kind == PK::Literal) return matches_non_overlapping(b, a);
  if (a.kind == PK::Literal && b.kind == PK::Ctor) {
    const Value& v = a.literal;
    return v.ctor() != b.name || v.arity() != b.children.size();
  }
  if (a.kind == PK::Tuple && b.kind == PK::Tuple) {
    if (a.children.size() != b.children.size()) return true;
    return pairwise_disjoint(a.children, b.children);
  }
  if (a.kind == PK::List && b.kind == PK::List && !has_multi(a) && !has_multi(b)) {
    if (a.children.size() != b.children.size()) return true;
    return pairwise_disjoint(a.children, b.children);
  }
  return false;
}

void check_pattern(const Pattern& p, const Declarations& decls) {
  using PK = Pattern::Kind;
  switch (p.kind) {
    case PK::Ctor:
      if (!decls.has_constructor(p.name, p.children.size())) {
        throw Error(ErrorKind::UndeclaredConstructor,
                    p.name + "/" + std::to_string(p.children.size()));
      }
      break;
    case PK::Var:
      if (p.type) {
        try {
          decls.check(*p.type);
        } catch (const Error& e) {
          throw Error(ErrorKind::TypeAnnotationError, "unknown type in pattern: " + e.detail());
        }
      }
      break;
    case PK::Set:
      if (std::count_if(p.children.begin(), p.children.end(),
                        [](const Pattern& c) { return c.kind == PK::Multi; }) > 1) {
        throw Error(ErrorKind::TypeError, "a set pattern may contain at most one rest variable");
      }
      break;
    default: break;
  }
  for (const auto& c : p.children) check_pattern(c, decls);
}

std::vector<std::string> pattern_variables(const Pattern& p) {
  std::vector<std::string> out;
  auto visit = [&](auto& self, const Pattern& q) -> void {
    using PK = Pattern::Kind;
    if ((q.kind == PK::Var || q.kind == PK::Multi) && !is_anonymous(q.name)) {
      if (std::find(out.begin(), out.end(), q.name) == out.end()) out.push_back(q.name);
    }
    if (q.kind == PK::Neg) return;
    for (const auto& c : q.children) self(self, c);
  };
  visit(visit, p);
  return out;
}

std::string render_pattern(const Pattern& p) {
  using PK = Pattern::Kind;
  auto join = [](const std::vector<Pattern>& ps) {
    std::string out;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) out += ",";
      out += render_pattern(ps[i]);
    }
    return out;
  };
  switch (p.kind) {
    case PK::Literal: return render(p.literal);
    case PK::Var: return p.type ? render_type(*p.type) + " " + p.name : p.name;
    case PK::Wildcard: return "_";
    case PK::Ctor: return p.name + "(" + join(p.children) + ")";
    case PK::List: return "[" + join(p.children) + "]";
    case PK::Set: return "{" + join(p.children) + "}";
    case PK::Tuple: return "<" + join(p.children) + ">";
    case PK::Deep: return "/" + render_pattern(p.children[0]);
    case PK::Neg: return "!" + render_pattern(p.children[0]);
    case PK::Multi: return "*" + (p.name.empty() ? std::string("_") : p.name);
  }
  return "?";
}

}  // namespace mrl
