#pragma once

// Internal state of one interpreter instance, shared by interpreter.cpp
// (loading and dispatch), eval.cpp (statements and expressions),
// template.cpp and builtins.cpp.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrl/ast.hpp"
#include "mrl/generator.hpp"
#include "mrl/interpreter.hpp"
#include "mrl/pattern.hpp"

namespace mrl::detail {

struct Slot {
  std::string name;
  std::optional<Value> value;
  std::optional<TypeExpr> type;
};

using Frame = std::vector<Slot>;
using FramePtr = std::shared_ptr<Frame>;

/// Frames are copy-on-write so a snapshot is a vector of pointer copies.
struct Snapshot {
  std::vector<FramePtr> locals;
  FramePtr globals;
};

/// Lexical frames of one activation, innermost last, over the shared globals.
class Env final : public Scope {
 public:
  explicit Env(FramePtr* globals) : globals_(globals) {}

  const Value* lookup(std::string_view name) const override;
  /// The slot for `name`, unshared so it may be written; null when undeclared.
  Slot* find_mut(std::string_view name);
  bool declared(std::string_view name) const;

  void push() { frames_.push_back(std::make_shared<Frame>()); }
  std::size_t depth() const { return frames_.size(); }
  void truncate(std::size_t d) {
    if (frames_.size() > d) frames_.resize(d);
  }
  /// Declares (or redeclares) `name` in the innermost frame.
  void declare(const std::string& name, std::optional<Value> v, std::optional<TypeExpr> t);
  Frame& top();
  Frame& frame(std::size_t index);

  Snapshot snapshot() const { return Snapshot{frames_, *globals_}; }
  void restore(const Snapshot& s) {
    frames_ = s.locals;
    *globals_ = s.globals;
  }

 private:
  Frame& own(FramePtr& f);

  std::vector<FramePtr> frames_;
  FramePtr* globals_;
};

/// Pops every frame pushed after construction.
class FrameGuard {
 public:
  explicit FrameGuard(Env& env, bool push = true) : env_(env), depth_(env.depth()) {
    if (push) env_.push();
  }
  ~FrameGuard() { env_.truncate(depth_); }
  FrameGuard(const FrameGuard&) = delete;
  FrameGuard& operator=(const FrameGuard&) = delete;

 private:
  Env& env_;
  std::size_t depth_;
};

enum class Ctl { Normal, Return, Fail, Break, Continue, Insert };

/// Carries return/break/continue out of a visit evaluated as an expression.
struct EscapingControl {
  Ctl ctl;
  Value value;
};

struct Unit {};

using Builtin = std::function<Value(std::span<const Value> args, const SourceSpan& where)>;

class Machine {
 public:
  explicit Machine(Options options);

  Options options;
  Declarations decls;
  std::vector<std::string> warnings;

  // -- loading (interpreter.cpp) ------------------------------------------
  void load_file(const std::filesystem::path& file);
  void load_source(std::string_view source, const std::string& uri);
  void load_module(const std::string& name, const SourceSpan& where);
  void register_module(const ast::Module& m);
  void register_data(const ast::DataDecl& d);
  void register_syntax(const SyntaxDecl& d);
  void register_function(std::shared_ptr<const ast::Function> f);
  /// Compiles the grammar, validates patterns, runs global initializers.
  void finish_loading();
  const Grammar& grammar();

  // -- dispatch -----------------------------------------------------------
  Value call(const std::string& name, std::vector<Value> args, const SourceSpan& where);
  bool has_function(const std::string& name, std::size_t arity) const;
  std::vector<std::string> nullary_functions() const;

  std::optional<Value> execute(std::string_view input, const std::string& uri);
  TypeExpr type_of_expression(std::string_view expr);

  // -- evaluation (eval.cpp) ----------------------------------------------
  Ctl exec(const ast::Stmt& s, Env& env);
  Value eval(const ast::Expr& e, Env& env);
  bool eval_bool(const ast::Expr& e, Env& env);
  Generator<Unit> solve_conds(const std::vector<ast::ExprPtr>& conds, std::size_t i, Env& env);
  Generator<Unit> solve_one(const ast::Expr& e, Env& env);
  Value eval_visit(const ast::Visit& v, Env& env);
  /// Value bound to a `catch` for a runtime error.
  Value error_value(const Error& e) const;

  // -- templates (template.cpp) -------------------------------------------
  void render_parts(const std::vector<ast::TemplatePart>& parts, Env& env, std::string& out);

  // -- builtins (builtins.cpp) --------------------------------------------
  void install_builtins();
  std::ostream& out() const;

  Value result;  // payload of Return and Insert
  int fail_depth = 0;

 private:
  struct Alternatives {
    std::vector<std::shared_ptr<const ast::Function>> all;
  };

  Value invoke(const ast::Function& f, const Pattern& params, const std::vector<Value>& args,
               bool& failed);
  void check_function(const ast::Function& f);
  void warn_overlaps();
  // An untyped pattern variable that is already bound compares instead of
  // binding; each such site is reported once.
  void warn_bound_pattern_vars(const Pattern& p, const Env& env, const SourceSpan& where);
  std::set<std::string> bound_var_warnings_;
  void init_globals();

  Ctl exec_if(const ast::Stmt& s, Env& env);
  Ctl exec_loop(const ast::Stmt& s, Env& env);
  Ctl exec_for(const ast::Stmt& s, Env& env);
  Ctl exec_switch(const ast::Stmt& s, Env& env);
  Ctl exec_solve(const ast::Stmt& s, Env& env);
  Ctl exec_try(const ast::Stmt& s, Env& env);
  void assign(const ast::Expr& target, const std::string& op, const Value& rhs, Env& env);
  void update_path(const ast::Expr& target, Env& env,
                   const std::function<Value(const std::optional<Value>&)>& f);

  Value eval_call(const ast::Expr& e, Env& env);
  Value eval_field(const Value& v, const std::string& field, const SourceSpan& where);
  Value eval_subscript(const Value& c, const Value& key, const SourceSpan& where);
  Value eval_binary(const std::string& op, const Value& a, const Value& b, const SourceSpan& where);
  Value eval_comprehension(const ast::Expr& e, Env& env);
  Value eval_condition_expr(const ast::Expr& e, Env& env);

  /// Tries visit/switch cases on one subject. Returns the replacement if a
  /// case replaced it; `matched` tells whether any case completed.
  std::optional<Value> apply_cases(const std::vector<ast::Case>& cases, const Value& subject,
                                   Env& env, bool& matched, bool in_visit);
  Value traverse(const ast::Visit& v, const Value& subject, Env& env, bool top_down);

  const Pattern& params_pattern(const ast::Function& f);

  FramePtr globals_ = std::make_shared<Frame>();
  std::unique_ptr<Env> repl_env_;
  std::map<std::string, Alternatives> functions_;
  std::vector<std::string> function_order_;
  std::unordered_map<const ast::Function*, Pattern> param_patterns_;
  std::unordered_map<std::string, Builtin> builtins_;

  std::vector<SyntaxDecl> syntax_;
  Grammar grammar_;
  bool grammar_dirty_ = false;

  std::vector<std::filesystem::path> roots_;
  std::set<std::string> loaded_;
  std::vector<std::string> loading_;
  std::vector<ast::Module> modules_;  // keeps ASTs alive
  std::vector<ast::GlobalVar> pending_globals_;
  std::vector<std::shared_ptr<const ast::Function>> pending_checks_;
  std::vector<std::shared_ptr<std::vector<ast::ReplItem>>> repl_inputs_;
  std::size_t call_depth_ = 0;
  int load_depth_ = 0;
};

/// Whether evaluating `e` as a condition can bind variables.
bool binds(const ast::Expr& e);
bool binds_any(const std::vector<ast::ExprPtr>& conds);

/// Installs a match's bindings into the innermost frame; undone on destruction.
class Installed {
 public:
  Installed(Env& env, const Bindings& b);
  ~Installed();
  Installed(const Installed&) = delete;
  Installed& operator=(const Installed&) = delete;

 private:
  Env& env_;
  std::size_t frame_;
  std::vector<std::pair<std::string, std::optional<Slot>>> saved_;
};

}  // namespace mrl::detail
