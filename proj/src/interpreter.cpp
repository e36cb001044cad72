#include "mrl/interpreter.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "machine.hpp"
#include "mrl/parser.hpp"

namespace mrl {

Thrown::Thrown(Value v, std::optional<SourceSpan> where)
    : value_(std::move(v)), where_(std::move(where)) {
  message_ = "uncaught: " + render(value_);
  if (where_) message_ += " at " + where_->str();
}

namespace detail {

// -- Env ---------------------------------------------------------------------

namespace {

Slot* find_in(Frame& f, std::string_view name) {
  for (auto& s : f) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Slot* find_in(const Frame& f, std::string_view name) {
  for (const auto& s : f) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

}  // namespace

const Value* Env::lookup(std::string_view name) const {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    if (const Slot* s = find_in(**it, name)) return s->value ? &*s->value : nullptr;
  }
  if (const Slot* s = find_in(**globals_, name)) return s->value ? &*s->value : nullptr;
  return nullptr;
}

bool Env::declared(std::string_view name) const {
  for (const auto& f : frames_) {
    if (find_in(*f, name)) return true;
  }
  return find_in(**globals_, name) != nullptr;
}

Frame& Env::own(FramePtr& f) {
  if (f.use_count() > 1) f = std::make_shared<Frame>(*f);
  return *f;
}

Slot* Env::find_mut(std::string_view name) {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    if (find_in(static_cast<const Frame&>(**it), name)) return find_in(own(*it), name);
  }
  if (find_in(static_cast<const Frame&>(**globals_), name)) return find_in(own(*globals_), name);
  return nullptr;
}

Frame& Env::top() {
  if (frames_.empty()) return own(*globals_);
  return own(frames_.back());
}

Frame& Env::frame(std::size_t index) { return own(frames_[index]); }

void Env::declare(const std::string& name, std::optional<Value> v, std::optional<TypeExpr> t) {
  Frame& f = top();
  if (Slot* s = find_in(f, name)) {
    s->value = std::move(v);
    s->type = std::move(t);
    return;
  }
  f.push_back(Slot{name, std::move(v), std::move(t)});
}

Installed::Installed(Env& env, const Bindings& b) : env_(env), frame_(env.depth() - 1) {
  Frame& f = env.top();
  for (const auto& [name, v] : b.entries()) {
    std::optional<Slot> old;
    for (auto& s : f) {
      if (s.name == name) old = s;
    }
    saved_.emplace_back(name, old);
    env.declare(name, v, std::nullopt);
  }
}

Installed::~Installed() {
  if (env_.depth() <= frame_) return;
  Frame& f = env_.frame(frame_);
  for (auto it = saved_.rbegin(); it != saved_.rend(); ++it) {
    auto& [name, old] = *it;
    for (auto s = f.begin(); s != f.end(); ++s) {
      if (s->name != name) continue;
      if (old) *s = *old;
      else f.erase(s);
      break;
    }
  }
}

// -- loading -----------------------------------------------------------------

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::ModuleNotFound, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_qualified(const std::string& name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = name.find("::", start);
    parts.push_back(name.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 2;
  }
  return parts;
}

// Keeps nested loads from finishing the grammar and globals until the
// outermost load returns.
class LoadScope {
 public:
  LoadScope(int& depth, std::function<void()> finish) : depth_(depth), finish_(std::move(finish)) {
    ++depth_;
  }
  void done() {
    if (depth_ == 1) finish_();
  }
  ~LoadScope() { --depth_; }

 private:
  int& depth_;
  std::function<void()> finish_;
};

}  // namespace

Machine::Machine(Options opts) : options(std::move(opts)) {
  install_builtins();
  repl_env_ = std::make_unique<Env>(&globals_);
  repl_env_->push();
  for (const auto& p : options.search_paths) roots_.push_back(p);
}

std::ostream& Machine::out() const { return options.out ? *options.out : std::cout; }

void Machine::load_file(const std::filesystem::path& file) {
  std::string text = read_text(file);
  std::string uri = file.string();
  ast::Module m = parse_module(text, uri);
  // The file's module name says how many directories up the import root is.
  auto root = std::filesystem::absolute(file).parent_path();
  if (!m.name.empty()) {
    auto parts = split_qualified(m.name);
    for (std::size_t i = 1; i < parts.size(); ++i) root = root.parent_path();
  }
  roots_.push_back(root);
  LoadScope scope(load_depth_, [this] { finish_loading(); });
  if (!m.name.empty()) {
    if (loaded_.count(m.name)) {
      scope.done();
      return;
    }
    loading_.push_back(m.name);
  }
  register_module(m);
  if (!m.name.empty()) {
    loading_.pop_back();
    loaded_.insert(m.name);
  }
  modules_.push_back(std::move(m));
  scope.done();
}

void Machine::load_source(std::string_view source, const std::string& uri) {
  ast::Module m = parse_module(source, uri);
  LoadScope scope(load_depth_, [this] { finish_loading(); });
  if (!m.name.empty()) loading_.push_back(m.name);
  register_module(m);
  if (!m.name.empty()) {
    loading_.pop_back();
    loaded_.insert(m.name);
  }
  modules_.push_back(std::move(m));
  scope.done();
}

void Machine::load_module(const std::string& name, const SourceSpan& where) {
  for (const auto& l : loading_) {
    if (l == name) throw Error(ErrorKind::CyclicImport, "module " + name + " imports itself", where);
  }
  if (loaded_.count(name)) return;
  auto parts = split_qualified(name);
  std::filesystem::path rel;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    rel /= i + 1 == parts.size() ? parts[i] + ".mrl" : parts[i];
  }
  for (auto it = roots_.rbegin(); it != roots_.rend(); ++it) {
    auto candidate = *it / rel;
    if (!std::filesystem::exists(candidate)) continue;
    std::string text = read_text(candidate);
    ast::Module m = parse_module(text, candidate.string());
    if (m.name != name) {
      throw Error(ErrorKind::SyntaxError,
                  "file declares module '" + m.name + "' but was imported as '" + name + "'",
                  SourceSpan{candidate.string(), 0, 0});
    }
    LoadScope scope(load_depth_, [this] { finish_loading(); });
    loading_.push_back(name);
    register_module(m);
    loading_.pop_back();
    loaded_.insert(name);
    modules_.push_back(std::move(m));
    scope.done();
    return;
  }
  throw Error(ErrorKind::ModuleNotFound, "cannot find module " + name, where);
}

void Machine::register_module(const ast::Module& m) {
  for (const auto& imp : m.imports) load_module(imp.module, imp.where);
  for (const auto& d : m.data) register_data(d);
  for (const auto& s : m.syntax) register_syntax(s);
  for (const auto& f : m.functions) register_function(f);
  for (const auto& g : m.globals) pending_globals_.push_back(g);
}

void Machine::register_data(const ast::DataDecl& d) {
  decls.declare_adt(d.name);
  for (const auto& c : d.constructors) {
    try {
      decls.declare_constructor(c);
    } catch (Error& e) {
      e.at(d.where);
      throw;
    }
  }
}

void Machine::register_syntax(const SyntaxDecl& d) {
  decls.declare_nonterminal(d.name);
  syntax_.push_back(d);
  grammar_dirty_ = true;
}

void Machine::register_function(std::shared_ptr<const ast::Function> f) {
  auto& alts = functions_[f->name];
  if (alts.all.empty()) function_order_.push_back(f->name);
  alts.all.push_back(f);
  pending_checks_.push_back(std::move(f));
}

const Grammar& Machine::grammar() {
  if (grammar_dirty_) {
    grammar_ = compile_grammar(syntax_);
    grammar_dirty_ = false;
  }
  return grammar_;
}

void Machine::check_function(const ast::Function& f) {
  try {
    for (const auto& p : f.params) check_pattern(p, decls);
    if (f.return_type) decls.check(*f.return_type);
  } catch (Error& e) {
    e.at(f.where);
    throw;
  }
}

void Machine::warn_overlaps() {
  for (const auto& f : pending_checks_) {
    if (f->is_default) continue;
    for (const auto& g : functions_[f->name].all) {
      if (g == f) break;
      if (g->is_default || g->params.size() != f->params.size()) continue;
      bool exclusive = false;
      for (std::size_t i = 0; i < f->params.size() && !exclusive; ++i) {
        exclusive = matches_non_overlapping(f->params[i], g->params[i]);
      }
      if (!exclusive) {
        std::string msg = "warning: alternatives of " + f->name + "/" +
                          std::to_string(f->params.size()) + " at " + g->where.str() + " and " +
                          f->where.str() + " may overlap; trying them in declaration order";
        warnings.push_back(msg);
        if (options.warn) *options.warn << msg << "\n";
      }
    }
  }
}

void Machine::warn_bound_pattern_vars(const Pattern& p, const Env& env, const SourceSpan& where) {
  const bool compares = (p.kind == Pattern::Kind::Var && !p.type) || p.kind == Pattern::Kind::Multi;
  if (compares && !p.name.empty() && p.name != "_" && env.lookup(p.name)) {
    std::string key = where.str() + " " + p.name;
    if (bound_var_warnings_.insert(key).second) {
      std::string msg = "warning: " + p.name + " is already bound at " + where.str() +
                        "; the pattern compares against its value";
      warnings.push_back(msg);
      if (options.warn) *options.warn << msg << "\n";
    }
  }
  for (const auto& c : p.children) warn_bound_pattern_vars(c, env, where);
}

void Machine::init_globals() {
  auto pending = std::move(pending_globals_);
  pending_globals_.clear();
  Env env(&globals_);
  for (const auto& g : pending) {
    try {
      if (g.type) decls.check(*g.type);
      std::optional<Value> v;
      if (g.init) {
        v = eval(*g.init, env);
        if (g.type && !conforms(*v, *g.type, decls)) {
          throw Error(ErrorKind::TypeError, "global " + g.name + " declared " +
                                                render_type(*g.type) + " but initialized with " +
                                                render_type(type_of(*v, decls)));
        }
      }
      env.declare(g.name, std::move(v), g.type);
    } catch (Error& e) {
      e.at(g.where);
      throw;
    }
  }
}

void Machine::finish_loading() {
  if (grammar_dirty_) grammar();
  auto checks = pending_checks_;
  for (const auto& f : checks) check_function(*f);
  warn_overlaps();
  pending_checks_.clear();
  init_globals();
}

// -- dispatch ----------------------------------------------------------------

const Pattern& Machine::params_pattern(const ast::Function& f) {
  auto it = param_patterns_.find(&f);
  if (it != param_patterns_.end()) return it->second;
  return param_patterns_.emplace(&f, Pattern::tuple(f.params)).first->second;
}

bool Machine::has_function(const std::string& name, std::size_t arity) const {
  auto it = functions_.find(name);
  if (it == functions_.end()) return false;
  for (const auto& f : it->second.all) {
    if (f->params.size() == arity) return true;
  }
  return false;
}

std::vector<std::string> Machine::nullary_functions() const {
  std::vector<std::string> out;
  for (const auto& n : function_order_) {
    if (has_function(n, 0)) out.push_back(n);
  }
  return out;
}

namespace {

std::string last_segment(const std::string& name) {
  auto pos = name.rfind("::");
  return pos == std::string::npos ? name : name.substr(pos + 2);
}

}  // namespace

Value Machine::invoke(const ast::Function& f, const Pattern& params, const std::vector<Value>& args,
                      bool& failed) {
  failed = false;
  Env env(&globals_);
  for (const auto& b : match_all(params, Value::tuple(args), Bindings(nullptr), decls)) {
    env.truncate(0);
    env.push();
    for (const auto& [n, v] : b.entries()) env.declare(n, v, std::nullopt);
    Snapshot snap = env.snapshot();
    int saved_fail = fail_depth;
    fail_depth = 1;
    Ctl ctl;
    Value ret = Value::unit();
    try {
      if (f.expr_body) {
        ret = eval(*f.expr_body, env);
        ctl = Ctl::Return;
      } else {
        ctl = exec(*f.body, env);
        ret = result;
      }
    } catch (const EscapingControl& esc) {
      ctl = esc.ctl;
      ret = esc.value;
    } catch (...) {
      fail_depth = saved_fail;
      throw;
    }
    fail_depth = saved_fail;
    switch (ctl) {
      case Ctl::Fail:
        env.restore(snap);
        continue;
      case Ctl::Normal:
        if (f.return_type) {
          throw Error(ErrorKind::MissingReturn, f.name + " ended without returning a value", f.where);
        }
        return Value::unit();
      case Ctl::Return:
        if (!f.return_type) {
          if (ret != Value::unit()) {
            throw Error(ErrorKind::ReturnTypeError, f.name + " is void but returned " + render(ret),
                        f.where);
          }
          return ret;
        }
        if (!conforms(ret, *f.return_type, decls)) {
          throw Error(ErrorKind::ReturnTypeError,
                      f.name + " declared " + render_type(*f.return_type) + " but returned " +
                          render_type(type_of(ret, decls)) + " " + render(ret),
                      f.where);
        }
        return ret;
      case Ctl::Break:
      case Ctl::Continue:
        throw Error(ErrorKind::TypeError, "break or continue outside a loop", f.where);
      case Ctl::Insert:
        throw Error(ErrorKind::TypeError, "insert outside a visit", f.where);
    }
  }
  failed = true;
  return Value::unit();
}

Value Machine::call(const std::string& qualified, std::vector<Value> args, const SourceSpan& where) {
  const std::string name = last_segment(qualified);
  auto it = functions_.find(name);
  bool any_alt = false;
  if (it != functions_.end()) {
    for (const auto& f : it->second.all) any_alt = any_alt || f->params.size() == args.size();
  }
  if (any_alt) {
    if (call_depth_ >= options.max_call_depth) {
      throw Error(ErrorKind::StackOverflow,
                  "call depth exceeded " + std::to_string(options.max_call_depth) + " in " + name,
                  where);
    }
    struct Depth {
      std::size_t& d;
      explicit Depth(std::size_t& x) : d(x) { ++d; }
      ~Depth() { --d; }
    } depth(call_depth_);
    // Copy: a body may declare more alternatives via the REPL.
    auto alts = it->second.all;
    for (bool defaults : {false, true}) {
      for (const auto& f : alts) {
        if (f->is_default != defaults || f->params.size() != args.size()) continue;
        bool failed = false;
        Value v = invoke(*f, params_pattern(*f), args, failed);
        if (!failed) return v;
      }
    }
    std::string rendered;
    for (std::size_t i = 0; i < args.size(); ++i) rendered += (i ? ", " : "") + render(args[i]);
    throw Error(ErrorKind::NoApplicableAlternative,
                "no alternative of " + name + " applies to (" + rendered + ")", where);
  }
  if (auto b = builtins_.find(name); b != builtins_.end()) return b->second(args, where);
  if (decls.has_constructor(name, args.size())) {
    if (const ConstructorDecl* c = decls.select_constructor(name, args)) {
      return Value::node(c->adt, c->name, std::move(args));
    }
    std::string rendered;
    for (std::size_t i = 0; i < args.size(); ++i) rendered += (i ? ", " : "") + render(args[i]);
    throw Error(ErrorKind::TypeError,
                "arguments (" + rendered + ") do not fit any constructor " + name + "/" +
                    std::to_string(args.size()),
                where);
  }
  throw Error(ErrorKind::UndefinedName,
              "no function or constructor " + name + "/" + std::to_string(args.size()), where);
}

// -- REPL --------------------------------------------------------------------

std::optional<Value> Machine::execute(std::string_view input, const std::string& uri) {
  auto items = std::make_shared<std::vector<ast::ReplItem>>(parse_repl(input, uri));
  repl_inputs_.push_back(items);
  std::optional<Value> last;
  for (const auto& item : *items) {
    last.reset();
    switch (item.kind) {
      case ast::ReplItem::Kind::Import: {
        LoadScope scope(load_depth_, [this] { finish_loading(); });
        load_module(item.import.module, item.import.where);
        scope.done();
        break;
      }
      case ast::ReplItem::Kind::Data: register_data(item.data); break;
      case ast::ReplItem::Kind::Syntax:
        register_syntax(item.syntax);
        grammar();
        break;
      case ast::ReplItem::Kind::Function:
        register_function(item.function);
        check_function(*item.function);
        warn_overlaps();
        pending_checks_.clear();
        break;
      case ast::ReplItem::Kind::Global:
        pending_globals_.push_back(item.global);
        init_globals();
        break;
      case ast::ReplItem::Kind::Statement: {
        const ast::Stmt& s = *item.stmt;
        fail_depth = 0;
        if (s.kind == ast::Stmt::Kind::Expr) {
          try {
            last = eval(*s.expr, *repl_env_);
          } catch (Error& e) {
            e.at(s.where);
            throw;
          }
          break;
        }
        Ctl ctl;
        try {
          ctl = exec(s, *repl_env_);
        } catch (const EscapingControl& esc) {
          ctl = esc.ctl;
        }
        if (ctl == Ctl::Return) last = result;
        else if (ctl != Ctl::Normal) {
          throw Error(ErrorKind::TypeError, "control statement outside a function", s.where);
        }
        break;
      }
    }
  }
  return last;
}

TypeExpr Machine::type_of_expression(std::string_view expr) {
  auto e = parse_expression(expr, "type");
  return type_of(eval(*e, *repl_env_), decls);
}

}  // namespace detail

// -- public facade -----------------------------------------------------------

Interpreter::Interpreter(Options options) : m_(std::make_unique<detail::Machine>(std::move(options))) {}
Interpreter::~Interpreter() = default;

Options& Interpreter::options() { return m_->options; }
void Interpreter::load_file(const std::filesystem::path& file) { m_->load_file(file); }
void Interpreter::load_source(std::string_view source, const std::string& uri) {
  m_->load_source(source, uri);
}
Value Interpreter::call(const std::string& name, std::vector<Value> args) {
  return m_->call(name, std::move(args), SourceSpan{"call", 0, 0});
}
bool Interpreter::has_function(const std::string& name, std::size_t arity) const {
  return m_->has_function(name, arity);
}
std::vector<std::string> Interpreter::nullary_functions() const { return m_->nullary_functions(); }
std::optional<Value> Interpreter::execute(std::string_view input, const std::string& uri) {
  return m_->execute(input, uri);
}
TypeExpr Interpreter::type_of_expression(std::string_view expr) {
  return m_->type_of_expression(expr);
}
const Declarations& Interpreter::declarations() const { return m_->decls; }
const Grammar& Interpreter::grammar() { return m_->grammar(); }
Value Interpreter::read_value(std::string_view text) const { return parse_value(text, &m_->decls); }
const std::vector<std::string>& Interpreter::warnings() const { return m_->warnings; }

}  // namespace mrl
