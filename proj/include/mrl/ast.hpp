#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mrl/error.hpp"
#include "mrl/grammar.hpp"
#include "mrl/pattern.hpp"
#include "mrl/types.hpp"
#include "mrl/value.hpp"

namespace mrl::ast {

struct Expr;
struct Stmt;
using ExprPtr = std::shared_ptr<Expr>;
using StmtPtr = std::shared_ptr<Stmt>;

/// One piece of a string template after margins have been stripped.
struct TemplatePart {
  enum class Kind { Text, Interp, For, If };
  Kind kind = Kind::Text;
  std::string text;
  ExprPtr expr;                     // Interp
  std::vector<ExprPtr> conditions;  // For / If
  std::vector<TemplatePart> body;
  std::vector<TemplatePart> else_body;
};

enum class Strategy { BottomUp, TopDown, Innermost, Outermost };

struct Case {
  std::shared_ptr<Pattern> pattern;  // null for `default:`
  ExprPtr replacement;               // `case p => e`
  StmtPtr body;
  SourceSpan where;
};

struct Visit {
  Strategy strategy = Strategy::BottomUp;
  ExprPtr subject;
  std::vector<Case> cases;
};

struct Expr {
  enum class Kind {
    Literal,      // value
    Var,          // name
    TypedVar,     // type name
    Wildcard,
    List,         // kids (may contain Splice)
    Set,
    Map,          // kids alternate key, value
    Tuple,
    Splice,       // *kids[0]; name set when the operand is a bare variable
    Range,        // [kids[0] .. kids[1]]
    Call,         // name(kids...)
    Field,        // kids[0].name
    Subscript,    // kids[0][kids[1]]
    Closure,      // kids[0]+
    ReflClosure,  // kids[0]*
    Unary,        // op kids[0]
    Binary,       // kids[0] op kids[1]
    And,
    Or,
    Implies,
    Match,        // pattern := kids[0]
    NoMatch,      // pattern !:= kids[0]
    Enumerate,    // pattern <- kids[0]
    Cond,         // kids[0] ? kids[1] : kids[2]
    Default,      // kids[0] ? kids[1]
    ListComp,     // [kids[0] | conditions]
    SetComp,
    MapComp,      // (kids[0] : kids[1] | conditions)
    Template,
    Visit,
    Deep,         // /kids[0], only meaningful as a pattern
    Is,           // kids[0] is name
    Has,          // kids[0] has name
  };

  Kind kind = Kind::Literal;
  SourceSpan where;
  Value value;
  std::string name;
  std::string op;
  std::optional<TypeExpr> type;
  std::vector<ExprPtr> kids;
  std::vector<ExprPtr> conditions;
  std::shared_ptr<Pattern> pattern;
  std::vector<TemplatePart> parts;
  std::shared_ptr<ast::Visit> visit;
};

struct Catch {
  std::shared_ptr<Pattern> pattern;  // null catches everything
  StmtPtr body;
};

struct Stmt {
  enum class Kind {
    Expr,      // expr
    Assign,    // target op= expr   (op is "" for plain =)
    Decl,      // type name [= expr]
    Block,     // body
    If,        // conditions, body[0], body[1] optional else
    While,     // conditions, body[0]
    DoWhile,   // body[0], conditions
    For,       // conditions, body[0]
    Switch,    // expr, cases
    Visit,     // visit
    Solve,     // names, expr (bound, optional), body[0]
    Return,    // expr optional
    Fail,
    Break,
    Continue,
    Throw,     // expr
    Try,       // body[0], catches, body[1] optional finally
    Insert,    // expr
    Assert,    // expr, message optional
    Empty,
  };

  Kind kind = Kind::Empty;
  SourceSpan where;
  ExprPtr expr;
  ExprPtr target;
  ExprPtr message;
  std::string op;
  std::string name;
  std::optional<TypeExpr> type;
  std::vector<ExprPtr> conditions;
  std::vector<StmtPtr> body;
  std::vector<Case> cases;
  std::vector<Catch> catches;
  std::vector<std::string> names;
  std::shared_ptr<ast::Visit> visit;
};

struct DataDecl {
  std::string name;
  std::vector<ConstructorDecl> constructors;
  SourceSpan where;
};

struct Function {
  std::string name;
  std::optional<TypeExpr> return_type;  // nullopt means void
  std::vector<Pattern> params;
  bool is_default = false;
  bool is_public = true;
  ExprPtr expr_body;  // `= expr;`
  StmtPtr body;       // `{ ... }`
  SourceSpan where;
};

struct GlobalVar {
  std::optional<TypeExpr> type;
  std::string name;
  ExprPtr init;
  SourceSpan where;
};

struct Import {
  std::string module;
  SourceSpan where;
};

struct Module {
  std::string name;
  std::string uri;
  std::vector<Import> imports;
  std::vector<DataDecl> data;
  std::vector<SyntaxDecl> syntax;
  std::vector<std::shared_ptr<const Function>> functions;
  std::vector<GlobalVar> globals;
};

/// One REPL input: a declaration, a statement, or an import.
struct ReplItem {
  enum class Kind { Data, Syntax, Function, Global, Import, Statement };
  Kind kind = Kind::Statement;
  DataDecl data;
  SyntaxDecl syntax;
  std::shared_ptr<const Function> function;
  GlobalVar global;
  Import import;
  StmtPtr stmt;
};

}  // namespace mrl::ast
