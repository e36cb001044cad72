// Statements, expressions, conditions with backtracking, visit and solve.

#include <algorithm>

#include "machine.hpp"
#include "mrl/utf8.hpp"

namespace mrl::detail {

using EK = ast::Expr::Kind;
using SK = ast::Stmt::Kind;

namespace {

[[noreturn]] void type_error(const std::string& msg, const SourceSpan& where) {
  throw Error(ErrorKind::TypeError, msg, where);
}

Value truth(bool b) { return Value::boolean(b); }

// Marks a region where `fail` has somewhere to go back to.
struct FailScope {
  int& depth;
  explicit FailScope(int& d) : depth(d) { ++depth; }
  ~FailScope() { --depth; }
};

bool is_relation(const Value& v) {
  if (!v.is(Kind::Set)) return false;
  for (const auto& e : v.elements()) {
    if (!e.is(Kind::Tuple) || e.arity() != 2) return false;
  }
  return true;
}

std::size_t index_of(const Value& key, std::size_t size, const SourceSpan& where) {
  if (!key.is(Kind::Int)) type_error("index must be an int, got " + render(key), where);
  BigInt i = key.as_int();
  BigInt n = static_cast<long long>(size);
  if (i < 0) i += n;
  if (i < 0 || i >= n) {
    throw Error(ErrorKind::IndexOutOfBounds,
                "index " + render(key) + " out of bounds for size " + std::to_string(size), where);
  }
  return static_cast<std::size_t>(i);
}

void append_spliced(std::vector<Value>& out, const Value& v) {
  if (v.is(Kind::List) || v.is(Kind::Set)) {
    out.insert(out.end(), v.elements().begin(), v.elements().end());
  } else {
    out.push_back(v);
  }
}

}  // namespace

bool binds(const ast::Expr& e) {
  switch (e.kind) {
    case EK::Match:
    case EK::Enumerate: return true;
    case EK::And:
    case EK::Or: return binds(*e.kids[0]) || binds(*e.kids[1]);
    default: return false;
  }
}

bool binds_any(const std::vector<ast::ExprPtr>& conds) {
  return std::any_of(conds.begin(), conds.end(), [](const auto& c) { return binds(*c); });
}

Value Machine::error_value(const Error& e) const {
  return Value::node("RuntimeException", std::string(e.name()), {Value::string(e.detail())});
}

// -- conditions ---------------------------------------------------------------

Generator<Unit> Machine::solve_conds(const std::vector<ast::ExprPtr>& conds, std::size_t i,
                                     Env& env) {
  if (i == conds.size()) {
    co_yield Unit{};
    co_return;
  }
  for (const auto& _ : solve_one(*conds[i], env)) {
    (void)_;
    for (const auto& __ : solve_conds(conds, i + 1, env)) {
      (void)__;
      co_yield Unit{};
    }
  }
}

Generator<Unit> Machine::solve_one(const ast::Expr& e, Env& env) {
  switch (e.kind) {
    case EK::And:
      for (const auto& _ : solve_one(*e.kids[0], env)) {
        (void)_;
        for (const auto& __ : solve_one(*e.kids[1], env)) {
          (void)__;
          co_yield Unit{};
        }
      }
      co_return;
    case EK::Or:
      for (const auto& _ : solve_one(*e.kids[0], env)) {
        (void)_;
        co_yield Unit{};
      }
      for (const auto& _ : solve_one(*e.kids[1], env)) {
        (void)_;
        co_yield Unit{};
      }
      co_return;
    case EK::Unary:
      if (e.op == "!" && binds(*e.kids[0])) {
        bool any = false;
        {
          auto g = solve_one(*e.kids[0], env);
          any = g.next();
        }
        if (!any) co_yield Unit{};
        co_return;
      }
      break;
    case EK::Match: {
      Value v = eval(*e.kids[0], env);
      warn_bound_pattern_vars(*e.pattern, env, e.where);
      for (const auto& b : match_all(*e.pattern, v, Bindings(&env), decls)) {
        Installed inst(env, b);
        co_yield Unit{};
      }
      co_return;
    }
    case EK::NoMatch: {
      Value v = eval(*e.kids[0], env);
      warn_bound_pattern_vars(*e.pattern, env, e.where);
      bool any = false;
      {
        auto g = match_all(*e.pattern, v, Bindings(&env), decls);
        any = g.next();
      }
      if (!any) co_yield Unit{};
      co_return;
    }
    case EK::Enumerate: {
      Value v = eval(*e.kids[0], env);
      std::vector<Value> items;
      if (e.pattern->kind == Pattern::Kind::Deep) {
        items.push_back(v);
      } else if (v.is(Kind::List) || v.is(Kind::Set)) {
        items.assign(v.elements().begin(), v.elements().end());
      } else if (v.is(Kind::Map)) {
        for (const auto& [k, _] : v.entries()) items.push_back(k);
      } else {
        for (const auto& s : subterms(v)) items.push_back(s);
      }
      warn_bound_pattern_vars(*e.pattern, env, e.where);
      for (const auto& item : items) {
        for (const auto& b : match_all(*e.pattern, item, Bindings(&env), decls)) {
          Installed inst(env, b);
          co_yield Unit{};
        }
      }
      co_return;
    }
    default: break;
  }
  Value v = eval(e, env);
  if (!v.is(Kind::Bool)) {
    throw Error(ErrorKind::ConditionTypeError, "condition must be bool, got " + render(v), e.where);
  }
  if (v.as_bool()) co_yield Unit{};
}

Value Machine::eval_condition_expr(const ast::Expr& e, Env& env) {
  FrameGuard scope(env);
  auto g = solve_one(e, env);
  return truth(g.next());
}

bool Machine::eval_bool(const ast::Expr& e, Env& env) {
  Value v = eval(e, env);
  if (!v.is(Kind::Bool)) {
    throw Error(ErrorKind::ConditionTypeError, "expected bool, got " + render(v), e.where);
  }
  return v.as_bool();
}

// -- statements ---------------------------------------------------------------

Ctl Machine::exec(const ast::Stmt& s, Env& env) {
  try {
    switch (s.kind) {
      case SK::Empty: return Ctl::Normal;
      case SK::Expr: eval(*s.expr, env); return Ctl::Normal;
      case SK::Block: {
        FrameGuard scope(env);
        for (const auto& st : s.body) {
          Ctl c = exec(*st, env);
          if (c != Ctl::Normal) return c;
        }
        return Ctl::Normal;
      }
      case SK::Assign: {
        Value rhs = eval(*s.expr, env);
        assign(*s.target, s.op, rhs, env);
        return Ctl::Normal;
      }
      case SK::Decl: {
        decls.check(*s.type);
        std::optional<Value> v;
        if (s.expr) {
          v = eval(*s.expr, env);
          if (!conforms(*v, *s.type, decls)) {
            type_error(s.name + " is declared " + render_type(*s.type) + " but assigned " +
                           render_type(type_of(*v, decls)),
                       s.where);
          }
        }
        env.declare(s.name, std::move(v), s.type);
        return Ctl::Normal;
      }
      case SK::If: return exec_if(s, env);
      case SK::While:
      case SK::DoWhile: return exec_loop(s, env);
      case SK::For: return exec_for(s, env);
      case SK::Switch: return exec_switch(s, env);
      case SK::Visit:
        try {
          eval_visit(*s.visit, env);
        } catch (const EscapingControl& esc) {
          result = esc.value;
          return esc.ctl;
        }
        return Ctl::Normal;
      case SK::Solve: return exec_solve(s, env);
      case SK::Return:
        result = s.expr ? eval(*s.expr, env) : Value::unit();
        return Ctl::Return;
      case SK::Fail:
        if (fail_depth == 0) {
          throw Error(ErrorKind::FailOutsideBacktrackingScope,
                      "fail used outside a backtracking scope", s.where);
        }
        return Ctl::Fail;
      case SK::Break: return Ctl::Break;
      case SK::Continue: return Ctl::Continue;
      case SK::Throw: throw Thrown(eval(*s.expr, env), s.where);
      case SK::Try: return exec_try(s, env);
      case SK::Insert:
        result = eval(*s.expr, env);
        return Ctl::Insert;
      case SK::Assert:
        if (!eval_bool(*s.expr, env)) {
          std::string msg = "assertion failed";
          if (s.message) {
            Value m = eval(*s.message, env);
            msg = m.is(Kind::Str) ? m.as_str() : render(m);
          }
          throw Error(ErrorKind::AssertionFailed, msg, s.where);
        }
        return Ctl::Normal;
    }
  } catch (Error& e) {
    e.at(s.where);
    throw;
  }
  return Ctl::Normal;
}

Ctl Machine::exec_if(const ast::Stmt& s, Env& env) {
  const bool backtracking = binds_any(s.conditions);
  {
    FrameGuard scope(env);
    auto gen = solve_conds(s.conditions, 0, env);
    while (gen.next()) {
      Snapshot snap = env.snapshot();
      Ctl c;
      if (backtracking) {
        FailScope fs(fail_depth);
        c = exec(*s.body[0], env);
      } else {
        c = exec(*s.body[0], env);
      }
      if (c == Ctl::Fail && backtracking) {
        env.restore(snap);
        continue;
      }
      return c;
    }
  }
  if (s.body.size() > 1) return exec(*s.body[1], env);
  return Ctl::Normal;
}

Ctl Machine::exec_loop(const ast::Stmt& s, Env& env) {
  const bool backtracking = binds_any(s.conditions);
  if (s.kind == SK::DoWhile) {
    Ctl c = exec(*s.body[0], env);
    if (c == Ctl::Break) return Ctl::Normal;
    if (c != Ctl::Normal && c != Ctl::Continue) return c;
  }
  while (true) {
    FrameGuard scope(env);
    auto gen = solve_conds(s.conditions, 0, env);
    bool ran = false;
    while (gen.next()) {
      Snapshot snap = env.snapshot();
      Ctl c;
      if (backtracking) {
        FailScope fs(fail_depth);
        c = exec(*s.body[0], env);
      } else {
        c = exec(*s.body[0], env);
      }
      if (c == Ctl::Fail && backtracking) {
        env.restore(snap);
        continue;
      }
      ran = true;
      if (c == Ctl::Break) return Ctl::Normal;
      if (c != Ctl::Normal && c != Ctl::Continue) return c;
      break;
    }
    if (!ran) return Ctl::Normal;
  }
}

Ctl Machine::exec_for(const ast::Stmt& s, Env& env) {
  FrameGuard scope(env);
  auto gen = solve_conds(s.conditions, 0, env);
  FailScope fs(fail_depth);
  while (gen.next()) {
    Snapshot snap = env.snapshot();
    Ctl c = exec(*s.body[0], env);
    switch (c) {
      case Ctl::Fail: env.restore(snap); break;
      case Ctl::Break: return Ctl::Normal;
      case Ctl::Normal:
      case Ctl::Continue: break;
      case Ctl::Return:
      case Ctl::Insert: return c;
    }
  }
  return Ctl::Normal;
}

std::optional<Value> Machine::apply_cases(const std::vector<ast::Case>& cases,
                                          const Value& subject, Env& env, bool& matched,
                                          bool in_visit) {
  matched = false;
  // Returns true when the case is finished with this subject.
  auto settle = [&](Ctl c, std::optional<Value>& out) -> bool {
    switch (c) {
      case Ctl::Fail: return false;
      case Ctl::Normal: matched = true; return true;
      case Ctl::Insert:
        if (in_visit) {
          matched = true;
          out = result;
          return true;
        }
        throw EscapingControl{c, result};
      default: throw EscapingControl{c, result};
    }
  };
  for (const auto& cs : cases) {
    std::optional<Value> out;
    if (!cs.pattern) {
      FrameGuard scope(env);
      Snapshot snap = env.snapshot();
      FailScope fs(fail_depth);
      Ctl c = exec(*cs.body, env);
      if (c == Ctl::Fail) {
        env.restore(snap);
        continue;
      }
      if (settle(c, out)) return out;
      continue;
    }
    warn_bound_pattern_vars(*cs.pattern, env, cs.where);
    for (const auto& b : match_all(*cs.pattern, subject, Bindings(&env), decls)) {
      FrameGuard scope(env);
      for (const auto& [n, v] : b.entries()) env.declare(n, v, std::nullopt);
      if (cs.replacement) {
        matched = true;
        return eval(*cs.replacement, env);
      }
      Snapshot snap = env.snapshot();
      FailScope fs(fail_depth);
      Ctl c = exec(*cs.body, env);
      if (c == Ctl::Fail) {
        env.restore(snap);
        continue;
      }
      if (settle(c, out)) return out;
    }
  }
  return std::nullopt;
}

Ctl Machine::exec_switch(const ast::Stmt& s, Env& env) {
  Value subject = eval(*s.expr, env);
  bool matched = false;
  try {
    apply_cases(s.cases, subject, env, matched, false);
  } catch (const EscapingControl& esc) {
    result = esc.value;
    return esc.ctl;
  }
  return Ctl::Normal;
}

Ctl Machine::exec_solve(const ast::Stmt& s, Env& env) {
  for (const auto& n : s.names) {
    if (!env.lookup(n)) {
      throw Error(ErrorKind::UndefinedName, "solve variable " + n + " is not bound", s.where);
    }
  }
  std::uint64_t bound = options.solve_budget;
  if (s.expr) {
    Value b = eval(*s.expr, env);
    if (!b.is(Kind::Int) || b.as_int() < 1) type_error("solve bound must be a positive int", s.where);
    bound = b.as_int() > BigInt(UINT64_MAX) ? UINT64_MAX : static_cast<std::uint64_t>(b.as_int());
  }
  auto current = [&] {
    std::vector<Value> vs;
    for (const auto& n : s.names) {
      const Value* v = env.lookup(n);
      vs.push_back(v ? *v : Value::unit());
    }
    return vs;
  };
  std::uint64_t iterations = 0;
  while (true) {
    auto before = current();
    Ctl c = exec(*s.body[0], env);
    if (c == Ctl::Break) return Ctl::Normal;
    if (c != Ctl::Normal && c != Ctl::Continue) return c;
    ++iterations;
    if (current() == before) return Ctl::Normal;
    if (iterations >= bound) {
      throw Error(ErrorKind::FixpointBudgetExceeded,
                  "solve did not reach a fixed point within " + std::to_string(bound) + " iterations",
                  s.where);
    }
  }
}

Ctl Machine::exec_try(const ast::Stmt& s, Env& env) {
  const bool has_finally = s.body.size() > 1;
  Ctl ctl = Ctl::Normal;
  auto handle = [&](const Value& v) -> bool {
    for (const auto& c : s.catches) {
      if (!c.pattern) {
        FrameGuard scope(env);
        ctl = exec(*c.body, env);
        return true;
      }
      warn_bound_pattern_vars(*c.pattern, env, s.where);
      auto g = match_all(*c.pattern, v, Bindings(&env), decls);
      if (!g.next()) continue;
      FrameGuard scope(env);
      for (const auto& [n, x] : g.value().entries()) env.declare(n, x, std::nullopt);
      ctl = exec(*c.body, env);
      return true;
    }
    return false;
  };
  std::exception_ptr pending;
  try {
    try {
      ctl = exec(*s.body[0], env);
    } catch (const Thrown& t) {
      if (!handle(t.value())) throw;
    } catch (const Error& e) {
      if (!handle(error_value(e))) throw;
    }
  } catch (...) {
    if (!has_finally) throw;
    pending = std::current_exception();
  }
  if (has_finally) {
    Ctl f = exec(*s.body[1], env);
    if (f != Ctl::Normal) return f;
  }
  if (pending) std::rethrow_exception(pending);
  return ctl;
}

// -- assignment ---------------------------------------------------------------

void Machine::assign(const ast::Expr& target, const std::string& op, const Value& rhs, Env& env) {
  if (target.kind == EK::Tuple) {
    if (!op.empty()) type_error("compound assignment to a tuple pattern", target.where);
    if (!rhs.is(Kind::Tuple) || rhs.arity() != target.kids.size()) {
      type_error("cannot destructure " + render(rhs) + " into " +
                     std::to_string(target.kids.size()) + " variables",
                 target.where);
    }
    for (std::size_t i = 0; i < target.kids.size(); ++i) {
      assign(*target.kids[i], "", rhs.elements()[i], env);
    }
    return;
  }
  update_path(target, env, [&](const std::optional<Value>& old) -> Value {
    if (op.empty()) return rhs;
    if (op == "?") return old ? *old : rhs;
    if (!old) throw Error(ErrorKind::UndefinedName, "no current value to update", target.where);
    return eval_binary(op, *old, rhs, target.where);
  });
}

void Machine::update_path(const ast::Expr& target, Env& env,
                          const std::function<Value(const std::optional<Value>&)>& f) {
  // Whether a missing element is an error depends on whether a default
  // expression wraps the path, so Default is handled by threading a flag.
  std::function<void(const ast::Expr&, const std::function<Value(const std::optional<Value>&)>&, bool)>
      go = [&](const ast::Expr& t, const std::function<Value(const std::optional<Value>&)>& fn,
               bool strict) {
        switch (t.kind) {
          case EK::Var: {
            Slot* slot = env.find_mut(t.name);
            std::optional<Value> old;
            if (slot && slot->value) old = slot->value;
            Value nv = fn(old);
            slot = env.find_mut(t.name);
            if (slot) {
              if (slot->type && !conforms(nv, *slot->type, decls)) {
                type_error(t.name + " is declared " + render_type(*slot->type) + " but assigned " +
                               render_type(type_of(nv, decls)),
                           t.where);
              }
              slot->value = std::move(nv);
            } else {
              env.declare(t.name, std::move(nv), std::nullopt);
            }
            return;
          }
          case EK::Subscript: {
            Value key = eval(*t.kids[1], env);
            go(*t.kids[0],
               [&](const std::optional<Value>& oc) -> Value {
                 if (!oc) {
                   throw Error(ErrorKind::UndefinedName, "subscripted variable is undefined", t.where);
                 }
                 const Value& c = *oc;
                 switch (c.kind()) {
                   case Kind::Map: {
                     if (c.arity() > 0) {
                       TypeExpr mt = type_of(c, decls);
                       if (!subtype_of(type_of(key, decls), mt.params[0], decls)) {
                         throw Error(ErrorKind::KeyTypeError,
                                     "key " + render(key) + " does not fit " + render_type(mt),
                                     t.where);
                       }
                     }
                     auto old = map_lookup(c, key);
                     if (!old && strict) {
                       throw Thrown(Value::node("RuntimeException", "noSuchKey", {key}), t.where);
                     }
                     return map_put(c, key, fn(old));
                   }
                   case Kind::List:
                   case Kind::Tuple: {
                     std::size_t i = index_of(key, c.arity(), t.where);
                     std::vector<Value> elems(c.elements().begin(), c.elements().end());
                     elems[i] = fn(elems[i]);
                     return c.is(Kind::List) ? Value::list(std::move(elems))
                                             : Value::tuple(std::move(elems));
                   }
                   case Kind::Node: {
                     std::size_t i = index_of(key, c.arity(), t.where);
                     std::vector<Value> args(c.args().begin(), c.args().end());
                     args[i] = fn(args[i]);
                     return Value::node(c.adt(), c.ctor(), std::move(args));
                   }
                   default: type_error("cannot update an element of " + render(c), t.where);
                 }
               },
               true);
            return;
          }
          case EK::Field: {
            go(*t.kids[0],
               [&](const std::optional<Value>& oc) -> Value {
                 if (!oc) throw Error(ErrorKind::UndefinedName, "variable is undefined", t.where);
                 const Value& c = *oc;
                 if (!c.is(Kind::Node)) type_error("no field " + t.name + " on " + render(c), t.where);
                 const ConstructorDecl* d = decls.find_constructor(c.adt(), c.ctor(), c.arity());
                 int idx = d ? d->field_index(t.name) : -1;
                 if (idx < 0) type_error("no field " + t.name + " on " + c.ctor(), t.where);
                 std::vector<Value> args(c.args().begin(), c.args().end());
                 Value nv = fn(args[idx]);
                 if (!conforms(nv, d->field_types[idx], decls)) {
                   type_error("field " + t.name + " is " + render_type(d->field_types[idx]) +
                                  ", cannot hold " + render(nv),
                              t.where);
                 }
                 args[idx] = std::move(nv);
                 return Value::node(c.adt(), c.ctor(), std::move(args));
               },
               true);
            return;
          }
          case EK::Default:
            go(*t.kids[0],
               [&](const std::optional<Value>& old) -> Value {
                 return fn(old ? *old : eval(*t.kids[1], env));
               },
               false);
            return;
          default: type_error("cannot assign to this expression", t.where);
        }
      };
  (void)go;
  go(target, f, true);
}

// -- expressions --------------------------------------------------------------

Value Machine::eval_field(const Value& v, const std::string& field, const SourceSpan& where) {
  if (v.is(Kind::Node)) {
    if (const ConstructorDecl* d = decls.find_constructor(v.adt(), v.ctor(), v.arity())) {
      int idx = d->field_index(field);
      if (idx >= 0) return v.args()[idx];
    }
    for (const auto* d : decls.constructors(v.ctor(), v.arity())) {
      int idx = d->field_index(field);
      if (idx >= 0) return v.args()[idx];
    }
    type_error("constructor " + v.ctor() + " has no field " + field, where);
  }
  if (v.is(Kind::Loc)) {
    const auto& l = v.as_loc();
    if (field == "uri") return Value::string(l.uri);
    if (field == "offset") return Value::integer(BigInt(l.offset));
    if (field == "length") return Value::integer(BigInt(l.length));
  }
  type_error("no field " + field + " on " + render(v), where);
}

Value Machine::eval_subscript(const Value& c, const Value& key, const SourceSpan& where) {
  switch (c.kind()) {
    case Kind::List:
    case Kind::Tuple: return c.elements()[index_of(key, c.arity(), where)];
    case Kind::Node: return c.args()[index_of(key, c.arity(), where)];
    case Kind::Str: {
      auto text = utf8::decode(c.as_str());
      std::size_t i = index_of(key, text.size(), where);
      return Value::string(utf8::encode(text.substr(i, 1)));
    }
    case Kind::Map: {
      if (c.arity() > 0) {
        TypeExpr mt = type_of(c, decls);
        if (!subtype_of(type_of(key, decls), mt.params[0], decls)) {
          throw Error(ErrorKind::KeyTypeError,
                      "key " + render(key) + " does not fit " + render_type(mt), where);
        }
      }
      if (auto v = map_lookup(c, key)) return *v;
      throw Thrown(Value::node("RuntimeException", "noSuchKey", {key}), where);
    }
    case Kind::Set:
      if (is_relation(c)) return rel_image(c, key);
      throw Error(ErrorKind::ArityError, "subscript needs a binary relation", where);
    default: type_error("cannot subscript " + render(c), where);
  }
}

Value Machine::eval_binary(const std::string& op, const Value& a, const Value& b,
                           const SourceSpan& where) {
  const Kind ka = a.kind();
  const Kind kb = b.kind();
  auto ints = ka == Kind::Int && kb == Kind::Int;
  auto mismatch = [&]() -> Value {
    type_error("operator " + op + " does not apply to " + render_type(type_of(a, decls)) + " and " +
                   render_type(type_of(b, decls)),
               where);
  };
  if (op == "==") return truth(a == b);
  if (op == "!=") return truth(a != b);
  if (op == "+") {
    if (ints) return Value::integer(BigInt(a.as_int() + b.as_int()));
    if (ka == Kind::Str && kb == Kind::Str) return Value::string(a.as_str() + b.as_str());
    if (ka == Kind::List) {
      std::vector<Value> out(a.elements().begin(), a.elements().end());
      if (kb == Kind::List) out.insert(out.end(), b.elements().begin(), b.elements().end());
      else out.push_back(b);
      return Value::list(std::move(out));
    }
    if (kb == Kind::List) {
      std::vector<Value> out{a};
      out.insert(out.end(), b.elements().begin(), b.elements().end());
      return Value::list(std::move(out));
    }
    if (ka == Kind::Set) return kb == Kind::Set ? set_union(a, b) : set_insert(a, b);
    if (kb == Kind::Set) return set_insert(b, a);
    if (ka == Kind::Map && kb == Kind::Map) {
      Value out = a;
      for (const auto& [k, v] : b.entries()) out = map_put(out, k, v);
      return out;
    }
    if (ka == Kind::Tuple && kb == Kind::Tuple) {
      std::vector<Value> out(a.elements().begin(), a.elements().end());
      out.insert(out.end(), b.elements().begin(), b.elements().end());
      return Value::tuple(std::move(out));
    }
    return mismatch();
  }
  if (op == "-") {
    if (ints) return Value::integer(BigInt(a.as_int() - b.as_int()));
    if (ka == Kind::Set) {
      return kb == Kind::Set ? set_diff(a, b) : set_diff(a, Value::set({b}));
    }
    if (ka == Kind::List) {
      std::vector<Value> out(a.elements().begin(), a.elements().end());
      auto remove_one = [&](const Value& x) {
        auto it = std::find(out.begin(), out.end(), x);
        if (it != out.end()) out.erase(it);
      };
      if (kb == Kind::List) {
        for (const auto& x : b.elements()) remove_one(x);
      } else {
        remove_one(b);
      }
      return Value::list(std::move(out));
    }
    if (ka == Kind::Map && kb == Kind::Map) {
      std::vector<MapEntry> out;
      for (const auto& e : a.entries()) {
        if (!map_lookup(b, e.first)) out.push_back(e);
      }
      return Value::map(std::move(out));
    }
    return mismatch();
  }
  if (op == "*") {
    if (ints) return Value::integer(BigInt(a.as_int() * b.as_int()));
    if ((ka == Kind::Set && kb == Kind::Set) || (ka == Kind::List && kb == Kind::List)) {
      std::vector<Value> out;
      for (const auto& x : a.elements()) {
        for (const auto& y : b.elements()) out.push_back(Value::tuple({x, y}));
      }
      return ka == Kind::Set ? Value::set(std::move(out)) : Value::list(std::move(out));
    }
    return mismatch();
  }
  if (op == "/" || op == "%") {
    if (!ints) return mismatch();
    if (b.as_int() == 0) throw Thrown(Value::node("RuntimeException", "divByZero", {}), where);
    return Value::integer(op == "/" ? BigInt(a.as_int() / b.as_int()) : BigInt(a.as_int() % b.as_int()));
  }
  if (op == "&") {
    if (ka == Kind::Set && kb == Kind::Set) return set_intersect(a, b);
    if (ka == Kind::List && kb == Kind::List) {
      std::vector<Value> out;
      for (const auto& x : a.elements()) {
        if (std::find(b.elements().begin(), b.elements().end(), x) != b.elements().end()) {
          out.push_back(x);
        }
      }
      return Value::list(std::move(out));
    }
    if (ka == Kind::Map && kb == Kind::Map) {
      std::vector<MapEntry> out;
      for (const auto& e : a.entries()) {
        auto v = map_lookup(b, e.first);
        if (v && *v == e.second) out.push_back(e);
      }
      return Value::map(std::move(out));
    }
    return mismatch();
  }
  if (op == "o") {
    if (ka == Kind::Set && kb == Kind::Set) return compose(a, b);
    return mismatch();
  }
  if (op == "in" || op == "notin") {
    bool found;
    if (kb == Kind::List) {
      found = std::find(b.elements().begin(), b.elements().end(), a) != b.elements().end();
    } else if (kb == Kind::Set) {
      found = set_contains(b, a);
    } else if (kb == Kind::Map) {
      found = map_lookup(b, a).has_value();
    } else {
      return mismatch();
    }
    return truth(op == "in" ? found : !found);
  }
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    // Sets and maps are ordered by inclusion; everything else canonically.
    if ((ka == Kind::Set && kb == Kind::Set) || (ka == Kind::Map && kb == Kind::Map)) {
      auto subset = [&](const Value& x, const Value& y) {
        if (x.is(Kind::Set)) return set_diff(x, y).arity() == 0;
        for (const auto& e : x.entries()) {
          auto v = map_lookup(y, e.first);
          if (!v || *v != e.second) return false;
        }
        return true;
      };
      bool le = subset(a, b);
      bool ge = subset(b, a);
      if (op == "<=") return truth(le);
      if (op == ">=") return truth(ge);
      if (op == "<") return truth(le && a != b);
      return truth(ge && a != b);
    }
    if (ka != kb) return mismatch();
    auto c = a <=> b;
    if (op == "<") return truth(c < 0);
    if (op == "<=") return truth(c <= 0);
    if (op == ">") return truth(c > 0);
    return truth(c >= 0);
  }
  type_error("unknown operator " + op, where);
}

Value Machine::eval_comprehension(const ast::Expr& e, Env& env) {
  FrameGuard scope(env);
  std::vector<Value> elems;
  std::vector<MapEntry> entries;
  auto gen = solve_conds(e.conditions, 0, env);
  while (gen.next()) {
    if (e.kind == EK::MapComp) {
      Value k = eval(*e.kids[0], env);
      entries.emplace_back(std::move(k), eval(*e.kids[1], env));
    } else if (e.kids[0]->kind == EK::Splice) {
      append_spliced(elems, eval(*e.kids[0]->kids[0], env));
    } else {
      elems.push_back(eval(*e.kids[0], env));
    }
  }
  if (e.kind == EK::MapComp) return Value::map(std::move(entries));
  if (e.kind == EK::SetComp) return Value::set(std::move(elems));
  return Value::list(std::move(elems));
}

Value Machine::eval_call(const ast::Expr& e, Env& env) {
  std::vector<Value> args;
  args.reserve(e.kids.size());
  for (const auto& k : e.kids) args.push_back(eval(*k, env));
  return call(e.name, std::move(args), e.where);
}

Value Machine::eval(const ast::Expr& e, Env& env) {
  switch (e.kind) {
    case EK::Literal: return e.value;
    case EK::Var: {
      if (const Value* v = env.lookup(e.name)) return *v;
      if (env.declared(e.name)) {
        throw Error(ErrorKind::UndefinedName, "variable " + e.name + " has no value", e.where);
      }
      throw Error(ErrorKind::UndefinedName, "undefined name " + e.name, e.where);
    }
    case EK::TypedVar:
    case EK::Wildcard:
    case EK::Deep: type_error("a pattern cannot be evaluated as an expression", e.where);
    case EK::Splice: type_error("'*' splices only inside list and set literals", e.where);
    case EK::List:
    case EK::Set:
    case EK::Tuple: {
      std::vector<Value> elems;
      for (const auto& k : e.kids) {
        if (k->kind == EK::Splice && e.kind != EK::Tuple) {
          append_spliced(elems, eval(*k->kids[0], env));
        } else {
          elems.push_back(eval(*k, env));
        }
      }
      if (e.kind == EK::List) return Value::list(std::move(elems));
      if (e.kind == EK::Set) return Value::set(std::move(elems));
      return Value::tuple(std::move(elems));
    }
    case EK::Map: {
      std::vector<MapEntry> entries;
      for (std::size_t i = 0; i + 1 < e.kids.size(); i += 2) {
        Value k = eval(*e.kids[i], env);
        entries.emplace_back(std::move(k), eval(*e.kids[i + 1], env));
      }
      return Value::map(std::move(entries));
    }
    case EK::Range: {
      Value lo = eval(*e.kids[0], env);
      Value hi = eval(*e.kids[1], env);
      if (!lo.is(Kind::Int) || !hi.is(Kind::Int)) type_error("range bounds must be ints", e.where);
      std::vector<Value> out;
      if (lo.as_int() <= hi.as_int()) {
        for (BigInt i = lo.as_int(); i < hi.as_int(); ++i) out.push_back(Value::integer(i));
      } else {
        for (BigInt i = lo.as_int(); i > hi.as_int(); --i) out.push_back(Value::integer(i));
      }
      return Value::list(std::move(out));
    }
    case EK::Call: return eval_call(e, env);
    case EK::Field: return eval_field(eval(*e.kids[0], env), e.name, e.where);
    case EK::Subscript: {
      Value c = eval(*e.kids[0], env);
      return eval_subscript(c, eval(*e.kids[1], env), e.where);
    }
    case EK::Closure:
    case EK::ReflClosure: {
      Value r = eval(*e.kids[0], env);
      if (!is_relation(r)) throw Error(ErrorKind::ArityError, "closure needs a binary relation", e.where);
      return e.kind == EK::Closure ? transitive_closure(r) : reflexive_transitive_closure(r);
    }
    case EK::Unary: {
      if (e.op == "!") {
        if (binds(*e.kids[0])) return truth(!eval_condition_expr(*e.kids[0], env).as_bool());
        return truth(!eval_bool(*e.kids[0], env));
      }
      Value v = eval(*e.kids[0], env);
      if (!v.is(Kind::Int)) type_error("unary - needs an int, got " + render(v), e.where);
      return Value::integer(BigInt(-v.as_int()));
    }
    case EK::Binary: {
      Value a = eval(*e.kids[0], env);
      return eval_binary(e.op, a, eval(*e.kids[1], env), e.where);
    }
    case EK::And:
      if (binds(e)) return eval_condition_expr(e, env);
      return truth(eval_bool(*e.kids[0], env) && eval_bool(*e.kids[1], env));
    case EK::Or:
      if (binds(e)) return eval_condition_expr(e, env);
      return truth(eval_bool(*e.kids[0], env) || eval_bool(*e.kids[1], env));
    case EK::Implies: {
      bool a = eval_bool(*e.kids[0], env);
      if (e.op == "==>") return truth(!a || eval_bool(*e.kids[1], env));
      return truth(a == eval_bool(*e.kids[1], env));
    }
    case EK::Match:
    case EK::NoMatch:
    case EK::Enumerate: return eval_condition_expr(e, env);
    case EK::Cond: {
      FrameGuard scope(env);
      auto g = solve_one(*e.kids[0], env);
      if (g.next()) return eval(*e.kids[1], env);
      return eval(*e.kids[2], env);
    }
    case EK::Default:
      try {
        return eval(*e.kids[0], env);
      } catch (const Thrown& t) {
        const Value& v = t.value();
        if (!(v.is(Kind::Node) && v.ctor() == "noSuchKey")) throw;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::UndefinedName && err.kind() != ErrorKind::IndexOutOfBounds) throw;
      }
      return eval(*e.kids[1], env);
    case EK::ListComp:
    case EK::SetComp:
    case EK::MapComp: return eval_comprehension(e, env);
    case EK::Template: {
      std::string out;
      render_parts(e.parts, env, out);
      return Value::string(std::move(out));
    }
    case EK::Visit: return eval_visit(*e.visit, env);
    case EK::Is: {
      Value v = eval(*e.kids[0], env);
      if (!v.is(Kind::Node)) return truth(false);
      if (v.ctor() == e.name) return truth(true);
      if (v.adt() == "Tree" && v.ctor() == "appl") {
        return truth(v.args()[0].args()[1] == Value::string(e.name));
      }
      return truth(false);
    }
    case EK::Has: {
      Value v = eval(*e.kids[0], env);
      if (!v.is(Kind::Node)) return truth(false);
      for (const auto* d : decls.constructors(v.ctor(), v.arity())) {
        if (d->field_index(e.name) >= 0) return truth(true);
      }
      return truth(false);
    }
  }
  type_error("cannot evaluate expression", e.where);
}

// -- visit --------------------------------------------------------------------

Value Machine::traverse(const ast::Visit& v, const Value& subject, Env& env, bool top_down) {
  auto visit_here = [&](const Value& x) -> std::optional<Value> {
    bool matched = false;
    return apply_cases(v.cases, x, env, matched, true);
  };
  auto rebuild = [&](const Value& x) -> Value {
    bool changed = false;
    auto kids = [&](std::span<const Value> in) {
      std::vector<Value> out;
      out.reserve(in.size());
      for (const auto& k : in) {
        out.push_back(traverse(v, k, env, top_down));
        changed = changed || !out.back().same_object(k);
      }
      return out;
    };
    switch (x.kind()) {
      case Kind::Node: {
        auto args = kids(x.args());
        if (!changed) return x;
        if (const ConstructorDecl* d = decls.find_constructor(x.adt(), x.ctor(), x.arity())) {
          for (std::size_t i = 0; i < args.size(); ++i) {
            if (!args[i].same_object(x.args()[i]) && !conforms(args[i], d->field_types[i], decls)) {
              throw Error(ErrorKind::ReplacementTypeError,
                          "replacement " + render(args[i]) + " does not fit field " +
                              d->field_names[i] + " of type " + render_type(d->field_types[i]) +
                              " in " + d->name);
            }
          }
        }
        return Value::node(x.adt(), x.ctor(), std::move(args));
      }
      case Kind::List: {
        auto elems = kids(x.elements());
        return changed ? Value::list(std::move(elems)) : x;
      }
      case Kind::Set: {
        auto elems = kids(x.elements());
        return changed ? Value::set(std::move(elems)) : x;
      }
      case Kind::Tuple: {
        auto elems = kids(x.elements());
        return changed ? Value::tuple(std::move(elems)) : x;
      }
      case Kind::Map: {
        std::vector<MapEntry> entries;
        for (const auto& [k, val] : x.entries()) {
          Value nk = traverse(v, k, env, top_down);
          Value nv = traverse(v, val, env, top_down);
          changed = changed || !nk.same_object(k) || !nv.same_object(val);
          entries.emplace_back(std::move(nk), std::move(nv));
        }
        return changed ? Value::map(std::move(entries)) : x;
      }
      default: return x;
    }
  };
  if (top_down) {
    if (auto r = visit_here(subject)) return *r;
    return rebuild(subject);
  }
  Value y = rebuild(subject);
  if (auto r = visit_here(y)) return *r;
  return y;
}

Value Machine::eval_visit(const ast::Visit& v, Env& env) {
  Value subject = eval(*v.subject, env);
  if (v.cases.empty()) return subject;
  switch (v.strategy) {
    case ast::Strategy::BottomUp: return traverse(v, subject, env, false);
    case ast::Strategy::TopDown: return traverse(v, subject, env, true);
    case ast::Strategy::Innermost:
    case ast::Strategy::Outermost: {
      const bool top_down = v.strategy == ast::Strategy::Outermost;
      Value cur = subject;
      for (std::uint64_t pass = 1;; ++pass) {
        Value next = traverse(v, cur, env, top_down);
        if (next == cur) return next;
        if (pass >= options.visit_budget) {
          throw Error(ErrorKind::FixpointBudgetExceeded,
                      "visit did not stabilize within " + std::to_string(options.visit_budget) +
                          " passes",
                      v.subject->where);
        }
        cur = std::move(next);
      }
    }
  }
  return subject;
}

}  // namespace mrl::detail
