#include "mrl/types.hpp"

#include <algorithm>

namespace mrl {

std::string render_type(const TypeExpr& t) {
  using K = TypeExpr::Kind;
  auto join = [](const std::vector<TypeExpr>& ps) {
    std::string out;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) out += ",";
      out += render_type(ps[i]);
    }
    return out;
  };
  switch (t.kind) {
    case K::Value: return "value";
    case K::Node: return "node";
    case K::Void: return "void";
    case K::Bool: return "bool";
    case K::Int: return "int";
    case K::Str: return "str";
    case K::Loc: return "loc";
    case K::List: return "list[" + render_type(t.params[0]) + "]";
    case K::Set:
      if (t.params[0].kind == K::Tuple && !t.params[0].params.empty()) {
        return "rel[" + join(t.params[0].params) + "]";
      }
      return "set[" + render_type(t.params[0]) + "]";
    case K::Map: return "map[" + join(t.params) + "]";
    case K::Tuple: return "tuple[" + join(t.params) + "]";
    case K::Adt:
    case K::NonTerminal: return t.name;
  }
  return "value";
}

int ConstructorDecl::field_index(std::string_view field) const {
  for (std::size_t i = 0; i < field_names.size(); ++i) {
    if (field_names[i] == field) return static_cast<int>(i);
  }
  return -1;
}

// ---------------------------------------------------------------------------

Declarations::Declarations() {
  auto ctor = [this](const char* adt, const char* name,
                     std::vector<std::pair<TypeExpr, std::string>> fields) {
    ConstructorDecl d{adt, name, {}, {}};
    for (auto& [t, n] : fields) {
      d.field_types.push_back(t);
      d.field_names.push_back(n);
    }
    declare_constructor(std::move(d));
  };
  const auto tree = TypeExpr::adt("Tree");
  const auto symbol = TypeExpr::adt("Symbol");
  for (const char* adt : {"Tree", "Production", "Symbol", "RuntimeException"}) declare_adt(adt);

  ctor("Tree", "appl",
       {{TypeExpr::adt("Production"), "prod"}, {TypeExpr::list(tree), "args"}, {TypeExpr::loc(), "src"}});
  ctor("Tree", "token", {{TypeExpr::str(), "text"}, {TypeExpr::loc(), "src"}});
  ctor("Production", "prod",
       {{TypeExpr::str(), "sort"},
        {TypeExpr::str(), "label"},
        {TypeExpr::list(symbol), "symbols"},
        {TypeExpr::str(), "kind"}});
  ctor("Symbol", "lit", {{TypeExpr::str(), "text"}});
  ctor("Symbol", "sort", {{TypeExpr::str(), "name"}});
  ctor("Symbol", "cc", {{TypeExpr::str(), "ranges"}});
  ctor("Symbol", "star", {{symbol, "symbol"}});
  ctor("Symbol", "plus", {{symbol, "symbol"}});
  ctor("Symbol", "opt", {{symbol, "symbol"}});
  ctor("Symbol", "layouts", {{TypeExpr::str(), "name"}});

  ctor("RuntimeException", "divByZero", {});
  ctor("RuntimeException", "noSuchKey", {{TypeExpr::top(), "key"}});
  for (int k = static_cast<int>(ErrorKind::ValueSyntaxError);
       k <= static_cast<int>(ErrorKind::StackOverflow); ++k) {
    ctor("RuntimeException", std::string(error_name(static_cast<ErrorKind>(k))).c_str(),
         {{TypeExpr::str(), "message"}});
  }
}

void Declarations::declare_adt(const std::string& name) { adts_.insert(name); }

const ConstructorDecl& Declarations::declare_constructor(ConstructorDecl decl) {
  if (find_constructor(decl.adt, decl.name, decl.arity())) {
    throw Error(ErrorKind::DuplicateDeclaration, "constructor " + decl.adt + "::" + decl.name +
                                                     "/" + std::to_string(decl.arity()));
  }
  adts_.insert(decl.adt);
  by_name_[decl.name].push_back(ctors_.size());
  ctors_.push_back(std::move(decl));
  return ctors_.back();
}

void Declarations::declare_nonterminal(const std::string& name) { nonterminals_.insert(name); }

std::vector<const ConstructorDecl*> Declarations::constructors(std::string_view name,
                                                               std::size_t arity) const {
  std::vector<const ConstructorDecl*> out;
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return out;
  for (auto idx : it->second) {
    if (ctors_[idx].arity() == arity) out.push_back(&ctors_[idx]);
  }
  return out;
}

bool Declarations::has_constructor(std::string_view name, std::size_t arity) const {
  return !constructors(name, arity).empty();
}

const ConstructorDecl* Declarations::find_constructor(std::string_view adt, std::string_view name,
                                                      std::size_t arity) const {
  for (auto* c : constructors(name, arity)) {
    if (c->adt == adt) return c;
  }
  return nullptr;
}

const ConstructorDecl* Declarations::select_constructor(std::string_view name,
                                                        std::span<const Value> args) const {
  for (auto* c : constructors(name, args.size())) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < args.size(); ++i) {
      ok = conforms(args[i], c->field_types[i], *this);
    }
    if (ok) return c;
  }
  return nullptr;
}

std::string Declarations::adt_for_constructor(std::string_view name,
                                              std::span<const Value> args) const {
  if (auto* c = select_constructor(name, args)) return c->adt;
  auto cands = constructors(name, args.size());
  if (!cands.empty()) return cands.front()->adt;
  return "";
}

TypeExpr Declarations::resolve_type_name(std::string_view name) const {
  if (is_adt(name)) return TypeExpr::adt(std::string(name));
  if (is_nonterminal(name)) return TypeExpr::nonterminal(std::string(name));
  throw Error(ErrorKind::UnknownTypeName, std::string(name));
}

TypeExpr Declarations::resolve(const TypeExpr& t) const {
  TypeExpr out = t;
  if (out.kind == TypeExpr::Kind::Adt && !is_adt(out.name) && is_nonterminal(out.name)) {
    out.kind = TypeExpr::Kind::NonTerminal;
  }
  for (auto& p : out.params) p = resolve(p);
  return out;
}

void Declarations::check(const TypeExpr& t) const {
  if (t.kind == TypeExpr::Kind::Adt && !is_adt(t.name) && !is_nonterminal(t.name)) {
    throw Error(ErrorKind::UnknownTypeName, t.name);
  }
  if (t.kind == TypeExpr::Kind::NonTerminal && !is_nonterminal(t.name)) {
    throw Error(ErrorKind::UnknownTypeName, t.name);
  }
  for (const auto& p : t.params) check(p);
}

std::span<const ConstructorDecl> Declarations::all_constructors() const { return ctors_; }

// ---------------------------------------------------------------------------

std::string_view parse_tree_sort(const Value& v) {
  if (!v.is(Kind::Node) || v.adt() != "Tree" || v.ctor() != "appl" || v.arity() != 3) return {};
  const Value& prod = v.args()[0];
  if (!prod.is(Kind::Node) || prod.ctor() != "prod" || prod.arity() != 4) return {};
  const Value& sort = prod.args()[0];
  return sort.is(Kind::Str) ? std::string_view(sort.as_str()) : std::string_view{};
}

namespace {

TypeExpr lub_of(std::span<const Value> vs, const Declarations& decls) {
  TypeExpr t = TypeExpr::bottom();
  for (const auto& v : vs) t = lub(t, type_of(v, decls));
  return t;
}

}  // namespace

TypeExpr type_of(const Value& v, const Declarations& decls) {
  switch (v.kind()) {
    case Kind::Bool: return TypeExpr::boolean();
    case Kind::Int: return TypeExpr::integer();
    case Kind::Str: return TypeExpr::str();
    case Kind::Loc: return TypeExpr::loc();
    case Kind::List: return TypeExpr::list(lub_of(v.elements(), decls));
    case Kind::Set: return TypeExpr::set(lub_of(v.elements(), decls));
    case Kind::Map: {
      TypeExpr k = TypeExpr::bottom();
      TypeExpr val = TypeExpr::bottom();
      for (const auto& [key, value] : v.entries()) {
        k = lub(k, type_of(key, decls));
        val = lub(val, type_of(value, decls));
      }
      return TypeExpr::map(std::move(k), std::move(val));
    }
    case Kind::Tuple: {
      std::vector<TypeExpr> ts;
      for (const auto& e : v.elements()) ts.push_back(type_of(e, decls));
      return TypeExpr::tuple(std::move(ts));
    }
    case Kind::Node: {
      if (v.adt().empty()) return TypeExpr::node();
      if (auto sort = parse_tree_sort(v); !sort.empty() && decls.is_nonterminal(sort)) {
        return TypeExpr::nonterminal(std::string(sort));
      }
      return TypeExpr::adt(v.adt());
    }
  }
  return TypeExpr::top();
}

namespace {

bool subtype(const TypeExpr& a, const TypeExpr& b) {
  using K = TypeExpr::Kind;
  if (a == b) return true;
  if (a.kind == K::Void || b.kind == K::Value) return true;
  switch (a.kind) {
    case K::Adt: return b.kind == K::Node;
    case K::NonTerminal:
      return b.kind == K::Node || (b.kind == K::Adt && b.name == "Tree");
    case K::List:
    case K::Set:
      return b.kind == a.kind && subtype(a.params[0], b.params[0]);
    case K::Map:
      return b.kind == K::Map && subtype(a.params[0], b.params[0]) &&
             subtype(a.params[1], b.params[1]);
    case K::Tuple:
      if (b.kind != K::Tuple || a.params.size() != b.params.size()) return false;
      for (std::size_t i = 0; i < a.params.size(); ++i) {
        if (!subtype(a.params[i], b.params[i])) return false;
      }
      return true;
    default: return false;
  }
}

}  // namespace

bool subtype_of(const TypeExpr& a, const TypeExpr& b, const Declarations& decls) {
  decls.check(a);
  decls.check(b);
  return subtype(decls.resolve(a), decls.resolve(b));
}

TypeExpr lub(const TypeExpr& a, const TypeExpr& b) {
  using K = TypeExpr::Kind;
  if (subtype(a, b)) return b;
  if (subtype(b, a)) return a;
  if (a.kind == b.kind) {
    switch (a.kind) {
      case K::List: return TypeExpr::list(lub(a.params[0], b.params[0]));
      case K::Set: return TypeExpr::set(lub(a.params[0], b.params[0]));
      case K::Map: return TypeExpr::map(lub(a.params[0], b.params[0]), lub(a.params[1], b.params[1]));
      case K::Tuple:
        if (a.params.size() == b.params.size()) {
          std::vector<TypeExpr> ts;
          for (std::size_t i = 0; i < a.params.size(); ++i) ts.push_back(lub(a.params[i], b.params[i]));
          return TypeExpr::tuple(std::move(ts));
        }
        return TypeExpr::top();
      case K::NonTerminal: return TypeExpr::adt("Tree");
      case K::Adt: return TypeExpr::node();
      default: break;
    }
  }
  auto nodeish = [](const TypeExpr& t) {
    return t.kind == K::Adt || t.kind == K::NonTerminal || t.kind == K::Node;
  };
  if (nodeish(a) && nodeish(b)) {
    auto treeish = [](const TypeExpr& t) {
      return t.kind == K::NonTerminal || (t.kind == K::Adt && t.name == "Tree");
    };
    if (treeish(a) && treeish(b)) return TypeExpr::adt("Tree");
    return TypeExpr::node();
  }
  return TypeExpr::top();
}

bool conforms(const Value& v, const TypeExpr& t, const Declarations& decls) {
  using K = TypeExpr::Kind;
  switch (t.kind) {
    case K::Value: return true;
    case K::Void: return false;
    case K::Bool: return v.is(Kind::Bool);
    case K::Int: return v.is(Kind::Int);
    case K::Str: return v.is(Kind::Str);
    case K::Loc: return v.is(Kind::Loc);
    case K::Node: return v.is(Kind::Node);
    case K::List:
    case K::Set: {
      if (!v.is(t.kind == K::List ? Kind::List : Kind::Set)) return false;
      return std::all_of(v.elements().begin(), v.elements().end(),
                         [&](const Value& e) { return conforms(e, t.params[0], decls); });
    }
    case K::Map: {
      if (!v.is(Kind::Map)) return false;
      for (const auto& [k, val] : v.entries()) {
        if (!conforms(k, t.params[0], decls) || !conforms(val, t.params[1], decls)) return false;
      }
      return true;
    }
    case K::Tuple: {
      if (!v.is(Kind::Tuple) || v.arity() != t.params.size()) return false;
      for (std::size_t i = 0; i < t.params.size(); ++i) {
        if (!conforms(v.elements()[i], t.params[i], decls)) return false;
      }
      return true;
    }
    case K::Adt: {
      if (!v.is(Kind::Node)) return false;
      if (v.adt() == t.name) return true;
      if (decls.is_adt(t.name) || !decls.is_nonterminal(t.name)) return false;
      return parse_tree_sort(v) == t.name;
    }
    case K::NonTerminal: {
      auto sort = parse_tree_sort(v);
      return !sort.empty() && sort == t.name && decls.is_nonterminal(sort);
    }
  }
  return false;
}

}  // namespace mrl
