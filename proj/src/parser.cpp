#include "mrl/parser.hpp"

#include <cctype>
#include <deque>
#include <set>

#include "mrl/lexer.hpp"

namespace mrl {

using ast::Expr;
using ast::ExprPtr;
using ast::Stmt;
using ast::StmtPtr;
using EK = ast::Expr::Kind;
using SK = ast::Stmt::Kind;

namespace {

const std::set<std::string, std::less<>> kReserved = {
    "module", "import", "data",   "syntax", "lexical", "layout", "public",  "private",
    "default", "if",    "else",   "while",  "do",      "for",    "switch",  "case",
    "visit",  "solve",  "return", "fail",   "break",   "continue", "throw", "try",
    "catch",  "finally", "insert", "assert", "true",   "false",  "in",      "notin",
    "is",     "has",    "int",    "str",    "bool",    "loc",    "value",   "node",
    "void",   "list",   "set",    "map",    "tuple",   "rel",    "top-down", "bottom-up",
    "innermost", "outermost",
};

const std::set<std::string, std::less<>> kTypeWords = {
    "int", "str", "bool", "loc", "value", "node", "void", "list", "set", "map", "tuple", "rel",
};

// Identifiers that act as infix operators and so never start a typed variable.
const std::set<std::string, std::less<>> kWordOps = {"o", "in", "notin", "is", "has"};

ExprPtr make(EK k, SourceSpan where) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->where = std::move(where);
  return e;
}

class Parser {
 public:
  Parser(std::string_view src, std::string uri, std::size_t begin = 0,
         std::size_t end = std::string_view::npos)
      : lex_(src, std::move(uri), begin, end) {}

  // -- token plumbing ------------------------------------------------------

  const Token& peek(std::size_t n = 0) {
    while (la_.size() <= n) la_.push_back(lex_.next());
    return la_[n];
  }

  Token take() {
    Token t = peek();
    la_.pop_front();
    last_end_ = t.offset + t.length;
    return t;
  }

  bool at(std::string_view punct) { return peek().is(punct); }
  bool at_word(std::string_view w) { return peek().is_word(w); }
  bool at_end() { return peek().kind == Token::Kind::End; }

  bool accept(std::string_view punct) {
    if (!at(punct)) return false;
    take();
    return true;
  }

  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    take();
    return true;
  }

  [[noreturn]] void error(const Token& t, const std::string& msg) {
    std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    if (t.kind == Token::Kind::String) found = "string literal";
    throw Error(ErrorKind::SyntaxError, msg + ", found " + found,
                lex_.span(t.offset, std::max<std::size_t>(t.length, 1)));
  }

  Token expect(std::string_view punct) {
    if (!at(punct)) error(peek(), "expected '" + std::string(punct) + "'");
    return take();
  }

  void expect_word(std::string_view w) {
    if (!at_word(w)) error(peek(), "expected '" + std::string(w) + "'");
    take();
  }

  static bool is_name(const Token& t) {
    return t.kind == Token::Kind::Ident && (t.escaped || !kReserved.count(t.text));
  }

  std::string name(const char* what = "identifier") {
    if (!is_name(peek())) error(peek(), std::string("expected ") + what);
    return take().text;
  }

  std::string qualified_name() {
    // Keywords are fine as path segments, as in lang::entities::syntax::Layout.
    auto segment = [this] {
      if (peek().kind != Token::Kind::Ident) error(peek(), "expected module name");
      return take().text;
    };
    std::string n = segment();
    while (accept("::")) n += "::" + segment();
    return n;
  }

  SourceSpan span_from(std::size_t start) const {
    return lex_.span(start, last_end_ > start ? last_end_ - start : 0);
  }

  struct Mark {
    std::size_t pos;
    std::deque<Token> la;
    std::size_t last_end;
  };
  Mark mark() const { return Mark{lex_.pos(), la_, last_end_}; }
  void restore(const Mark& m) {
    lex_.reset(m.pos);
    la_ = m.la;
    last_end_ = m.last_end;
  }

  // Runs `f` with `>` available as a comparison again (inside brackets).
  template <class F>
  auto with_gt(F f) {
    bool saved = no_gt_;
    no_gt_ = false;
    auto r = f();
    no_gt_ = saved;
    return r;
  }

  // Hands the raw input at the current token to a context-specific scanner.
  std::size_t raw_start() {
    std::size_t at = peek().offset;
    la_.clear();
    return at;
  }

  // -- types ---------------------------------------------------------------

  bool at_type_word() { return peek().kind == Token::Kind::Ident && !peek().escaped && kTypeWords.count(peek().text); }

  TypeExpr type() {
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident) error(t, "expected a type");
    if (t.escaped || !kTypeWords.count(t.text)) {
      if (!is_name(t)) error(t, "expected a type");
      return TypeExpr::adt(take().text);
    }
    std::string w = take().text;
    if (w == "int") return TypeExpr::integer();
    if (w == "str") return TypeExpr::str();
    if (w == "bool") return TypeExpr::boolean();
    if (w == "loc") return TypeExpr::loc();
    if (w == "value") return TypeExpr::top();
    if (w == "node") return TypeExpr::node();
    if (w == "void") return TypeExpr::bottom();
    expect("[");
    std::vector<TypeExpr> params;
    if (!at("]")) {
      do {
        params.push_back(type());
        if ((w == "tuple" || w == "rel") && is_name(peek())) take();  // optional field name
      } while (accept(","));
    }
    const Token& close = expect("]");
    auto arity = [&](std::size_t n) {
      if (params.size() != n) error(close, w + " takes " + std::to_string(n) + " type parameter(s)");
    };
    if (w == "list") {
      arity(1);
      return TypeExpr::list(params[0]);
    }
    if (w == "set") {
      arity(1);
      return TypeExpr::set(params[0]);
    }
    if (w == "map") {
      arity(2);
      return TypeExpr::map(params[0], params[1]);
    }
    if (w == "tuple") return TypeExpr::tuple(std::move(params));
    return TypeExpr::rel(std::move(params));
  }

  // -- module level -------------------------------------------------------

  ast::Module module() {
    ast::Module m;
    m.uri = lex_.uri();
    if (accept_word("module")) {
      m.name = qualified_name();
      expect(";");
    }
    while (at_word("import")) m.imports.push_back(import_decl());
    while (!at_end()) {
      if (at_word("import")) error(peek(), "imports must precede declarations");
      declaration(m);
    }
    return m;
  }

  ast::Import import_decl() {
    std::size_t start = peek().offset;
    expect_word("import");
    ast::Import imp;
    imp.module = qualified_name();
    expect(";");
    imp.where = span_from(start);
    return imp;
  }

  void declaration(ast::Module& m) {
    if (at_word("data")) {
      m.data.push_back(data_decl());
      return;
    }
    if (at_syntax_decl()) {
      m.syntax.push_back(syntax_decl());
      return;
    }
    std::size_t start = peek().offset;
    bool is_public = true;
    bool is_default = false;
    while (true) {
      if (accept_word("public")) continue;
      if (accept_word("private")) {
        is_public = false;
        continue;
      }
      if (accept_word("default")) {
        is_default = true;
        continue;
      }
      break;
    }
    TypeExpr t = type();
    std::string n = name("declaration name");
    if (at("(")) {
      m.functions.push_back(function_rest(std::move(t), std::move(n), is_default, is_public, start));
      return;
    }
    if (is_default) error(peek(), "expected '(' after default function name");
    ast::GlobalVar g;
    g.type = t;
    g.name = n;
    if (accept("=")) g.init = expression();
    expect(";");
    g.where = span_from(start);
    m.globals.push_back(std::move(g));
  }

  std::shared_ptr<const ast::Function> function_rest(TypeExpr ret, std::string n, bool is_default,
                                                     bool is_public, std::size_t start) {
    auto f = std::make_shared<ast::Function>();
    f->name = std::move(n);
    if (ret.kind != TypeExpr::Kind::Void) f->return_type = std::move(ret);
    f->is_default = is_default;
    f->is_public = is_public;
    expect("(");
    if (!at(")")) {
      do {
        auto e = expression();
        f->params.push_back(pattern_of(*e));
      } while (accept(","));
    }
    expect(")");
    if (accept("=")) {
      f->expr_body = expression();
      expect(";");
    } else {
      f->body = block();
    }
    f->where = span_from(start);
    return f;
  }

  ast::DataDecl data_decl() {
    std::size_t start = peek().offset;
    expect_word("data");
    ast::DataDecl d;
    d.name = name("data type name");
    expect("=");
    do {
      ConstructorDecl c;
      c.adt = d.name;
      c.name = name("constructor name");
      expect("(");
      if (!at(")")) {
        do {
          c.field_types.push_back(type());
          c.field_names.push_back(name("field name"));
        } while (accept(","));
      }
      expect(")");
      d.constructors.push_back(std::move(c));
    } while (accept("|"));
    expect(";");
    d.where = span_from(start);
    return d;
  }

  bool at_syntax_decl() {
    if (at_word("syntax") || at_word("lexical") || at_word("layout")) return true;
    return peek().is_word("start") && (peek(1).is_word("syntax"));
  }

  SyntaxDecl syntax_decl() {
    std::size_t start = peek().offset;
    SyntaxDecl d;
    if (peek().is_word("start")) {
      take();
      d.start = true;
    }
    if (accept_word("syntax")) d.kind = ProductionKind::Syntax;
    else if (accept_word("lexical")) d.kind = ProductionKind::Lexical;
    else if (accept_word("layout")) d.kind = ProductionKind::Layout;
    else error(peek(), "expected syntax, lexical or layout");
    d.name = name("nonterminal name");
    expect("=");
    do {
      SyntaxDecl::Alternative alt;
      if (is_name(peek()) && peek(1).is(":")) {
        alt.label = take().text;
        take();
      }
      while (!at("|") && !at(";")) alt.body.push_back(symbol());
      d.alternatives.push_back(std::move(alt));
    } while (accept("|"));
    expect(";");
    d.where = span_from(start);
    return d;
  }

  Symbol symbol() {
    Symbol s;
    const Token& t = peek();
    if (t.kind == Token::Kind::String) {
      Token lit = take();
      if (lit.pieces.size() > 1 || (lit.pieces.size() == 1 && lit.pieces[0].hole)) {
        error(lit, "a grammar literal cannot contain interpolation");
      }
      s = Symbol::lit(lit.pieces.empty() ? "" : lit.pieces[0].text);
    } else if (t.is("[")) {
      std::size_t at = raw_start();
      s = Symbol::cls(lex_.char_class(at));
      last_end_ = lex_.pos();
    } else if (is_name(t)) {
      s = Symbol::nt(take().text);
    } else {
      error(t, "expected a grammar symbol");
    }
    while (true) {
      if (!peek().space_before && accept("*")) s = Symbol::star(std::move(s));
      else if (!peek().space_before && accept("+")) s = Symbol::plus(std::move(s));
      else if (!peek().space_before && accept("?")) s = Symbol::opt(std::move(s));
      else break;
    }
    // A lower-case identifier after a symbol names the field.
    if (is_name(peek()) && std::islower(static_cast<unsigned char>(peek().text[0])) &&
        !peek(1).is(":")) {
      s.label = take().text;
    }
    return s;
  }

  // -- statements ----------------------------------------------------------

  StmtPtr make_stmt(SK k, std::size_t start) {
    auto s = std::make_shared<Stmt>();
    s->kind = k;
    s->where = span_from(start);
    return s;
  }

  StmtPtr block() {
    std::size_t start = peek().offset;
    expect("{");
    std::vector<StmtPtr> body;
    while (!at("}")) {
      if (at_end()) error(peek(), "expected '}'");
      body.push_back(statement());
    }
    take();
    auto s = make_stmt(SK::Block, start);
    s->body = std::move(body);
    return s;
  }

  std::vector<ExprPtr> conditions() {
    std::vector<ExprPtr> out;
    do {
      out.push_back(expression());
    } while (accept(","));
    return out;
  }

  std::vector<ExprPtr> paren_conditions() {
    expect("(");
    auto c = conditions();
    expect(")");
    return c;
  }

  bool at_strategy() {
    const Token& t = peek();
    return t.kind == Token::Kind::Ident && !t.escaped &&
           (t.text == "top-down" || t.text == "bottom-up" || t.text == "innermost" ||
            t.text == "outermost");
  }

  StmtPtr statement(bool allow_bare_end = false) {
    const std::size_t start = peek().offset;
    const Token& t = peek();
    if (t.is("{")) {
      // A brace may also start a set expression such as `{1,2} - {2};`.
      Mark m = mark();
      try {
        return block();
      } catch (const Error& block_error) {
        restore(m);
        try {
          return simple_statement(start, allow_bare_end);
        } catch (const Error&) {
          throw block_error;
        }
      }
    }
    if (t.is(";")) {
      take();
      return make_stmt(SK::Empty, start);
    }
    if (t.kind == Token::Kind::Ident && !t.escaped) {
      const std::string w = t.text;
      if (w == "if") {
        take();
        auto conds = paren_conditions();
        auto then = statement();
        StmtPtr els;
        if (accept_word("else")) els = statement();
        auto s = make_stmt(SK::If, start);
        s->conditions = std::move(conds);
        s->body.push_back(then);
        if (els) s->body.push_back(els);
        return s;
      }
      if (w == "while") {
        take();
        auto conds = paren_conditions();
        auto body = statement();
        auto s = make_stmt(SK::While, start);
        s->conditions = std::move(conds);
        s->body.push_back(body);
        return s;
      }
      if (w == "do") {
        take();
        auto body = statement();
        expect_word("while");
        auto conds = paren_conditions();
        expect(";");
        auto s = make_stmt(SK::DoWhile, start);
        s->conditions = std::move(conds);
        s->body.push_back(body);
        return s;
      }
      if (w == "for") {
        take();
        auto conds = paren_conditions();
        auto body = statement();
        auto s = make_stmt(SK::For, start);
        s->conditions = std::move(conds);
        s->body.push_back(body);
        return s;
      }
      if (w == "switch") {
        take();
        expect("(");
        auto subject = expression();
        expect(")");
        auto cases = case_block(false);
        auto s = make_stmt(SK::Switch, start);
        s->expr = subject;
        s->cases = std::move(cases);
        return s;
      }
      if (w == "solve") {
        take();
        expect("(");
        std::vector<std::string> names;
        do {
          names.push_back(name("variable name"));
        } while (accept(","));
        ExprPtr bound;
        if (accept(";")) bound = expression();
        expect(")");
        auto body = statement();
        auto s = make_stmt(SK::Solve, start);
        s->names = std::move(names);
        s->expr = bound;
        s->body.push_back(body);
        return s;
      }
      if (w == "return") {
        take();
        auto s = make_stmt(SK::Return, start);
        if (!at(";")) s->expr = expression();
        expect(";");
        s->where = span_from(start);
        return s;
      }
      if (w == "fail" || w == "break" || w == "continue") {
        take();
        expect(";");
        return make_stmt(w == "fail" ? SK::Fail : w == "break" ? SK::Break : SK::Continue, start);
      }
      if (w == "throw" || w == "insert") {
        take();
        auto e = expression();
        expect(";");
        auto s = make_stmt(w == "throw" ? SK::Throw : SK::Insert, start);
        s->expr = e;
        return s;
      }
      if (w == "assert") {
        take();
        auto e = expression();
        ExprPtr msg;
        if (accept(":")) msg = expression();
        expect(";");
        auto s = make_stmt(SK::Assert, start);
        s->expr = e;
        s->message = msg;
        return s;
      }
      if (w == "try") {
        take();
        auto body = statement();
        auto s = make_stmt(SK::Try, start);
        s->body.push_back(body);
        while (accept_word("catch")) {
          ast::Catch c;
          if (!at(":")) c.pattern = std::make_shared<Pattern>(pattern_of(*expression()));
          expect(":");
          c.body = statement();
          s->catches.push_back(std::move(c));
        }
        if (accept_word("finally")) s->body.push_back(statement());
        if (s->catches.empty() && s->body.size() == 1) error(peek(), "expected catch or finally");
        s->where = span_from(start);
        return s;
      }
      if (w == "visit" || at_strategy()) {
        auto v = visit_expr();
        accept(";");
        auto s = make_stmt(SK::Visit, start);
        s->visit = v->visit;
        return s;
      }
    }
    return simple_statement(start, allow_bare_end);
  }

  StmtPtr simple_statement(std::size_t start, bool allow_bare_end) {
    auto lhs = expression();
    static const std::set<std::string, std::less<>> kAssignOps = {"=", "+=", "-=", "*=", "/=", "?="};
    if (peek().kind == Token::Kind::Punct && kAssignOps.count(peek().text)) {
      std::string op = take().text;
      auto rhs = expression();
      end_statement(allow_bare_end);
      if (lhs->kind == EK::TypedVar) {
        if (op != "=") error(peek(), "a declaration takes '='");
        auto s = make_stmt(SK::Decl, start);
        s->type = lhs->type;
        s->name = lhs->name;
        s->expr = rhs;
        return s;
      }
      check_assignable(*lhs);
      auto s = make_stmt(SK::Assign, start);
      s->target = lhs;
      s->op = op == "=" ? "" : op.substr(0, 1);
      s->expr = rhs;
      return s;
    }
    end_statement(allow_bare_end);
    if (lhs->kind == EK::TypedVar) {
      auto s = make_stmt(SK::Decl, start);
      s->type = lhs->type;
      s->name = lhs->name;
      return s;
    }
    auto s = make_stmt(SK::Expr, start);
    s->expr = lhs;
    return s;
  }

  void end_statement(bool allow_bare_end) {
    if (allow_bare_end && at_end()) return;
    expect(";");
  }

  void check_assignable(const Expr& e) {
    switch (e.kind) {
      case EK::Var: return;
      case EK::Subscript:
      case EK::Field: check_assignable(*e.kids[0]); return;
      case EK::Default: check_assignable(*e.kids[0]); return;
      case EK::Tuple:
        for (const auto& k : e.kids) check_assignable(*k);
        return;
      default:
        throw Error(ErrorKind::SyntaxError, "cannot assign to this expression", e.where);
    }
  }

  std::vector<ast::Case> case_block(bool in_visit) {
    expect("{");
    std::vector<ast::Case> cases;
    while (!accept("}")) {
      std::size_t start = peek().offset;
      ast::Case c;
      if (accept_word("default")) {
        expect(":");
      } else {
        expect_word("case");
        c.pattern = std::make_shared<Pattern>(pattern_of(*expression()));
        if (accept("=>")) {
          if (!in_visit) error(peek(), "'=>' replacements are only allowed in visit");
          c.replacement = expression();
          accept(";");
          c.where = span_from(start);
          cases.push_back(std::move(c));
          continue;
        }
        expect(":");
      }
      auto body = std::make_shared<Stmt>();
      body->kind = SK::Block;
      std::size_t body_start = peek().offset;
      while (!at_word("case") && !at_word("default") && !at("}")) {
        if (at_end()) error(peek(), "expected '}'");
        body->body.push_back(statement());
      }
      body->where = span_from(body_start);
      c.body = body;
      c.where = span_from(start);
      cases.push_back(std::move(c));
    }
    return cases;
  }

  ExprPtr visit_expr() {
    std::size_t start = peek().offset;
    auto v = std::make_shared<ast::Visit>();
    if (at_strategy()) {
      std::string s = take().text;
      v->strategy = s == "top-down"    ? ast::Strategy::TopDown
                    : s == "innermost" ? ast::Strategy::Innermost
                    : s == "outermost" ? ast::Strategy::Outermost
                                       : ast::Strategy::BottomUp;
    }
    expect_word("visit");
    expect("(");
    v->subject = expression();
    expect(")");
    v->cases = case_block(true);
    auto e = make(EK::Visit, span_from(start));
    e->visit = v;
    return e;
  }

  // -- expressions ---------------------------------------------------------

  ExprPtr expression() { return cond(); }

  ExprPtr cond() {
    std::size_t start = peek().offset;
    auto c = implies();
    if (at("?") ) {
      take();
      auto a = expression();
      if (accept(":")) {
        auto b = expression();
        auto e = make(EK::Cond, span_from(start));
        e->kids = {c, a, b};
        return e;
      }
      auto e = make(EK::Default, span_from(start));
      e->kids = {c, a};
      return e;
    }
    return c;
  }

  ExprPtr implies() {
    std::size_t start = peek().offset;
    auto l = or_expr();
    while (at("==>") || at("<==>")) {
      std::string op = take().text;
      auto r = or_expr();
      auto e = make(EK::Implies, span_from(start));
      e->op = op;
      e->kids = {l, r};
      l = e;
    }
    return l;
  }

  ExprPtr or_expr() {
    std::size_t start = peek().offset;
    auto l = and_expr();
    while (accept("||")) {
      auto r = and_expr();
      auto e = make(EK::Or, span_from(start));
      e->kids = {l, r};
      l = e;
    }
    return l;
  }

  ExprPtr and_expr() {
    std::size_t start = peek().offset;
    auto l = match_expr();
    while (accept("&&")) {
      auto r = match_expr();
      auto e = make(EK::And, span_from(start));
      e->kids = {l, r};
      l = e;
    }
    return l;
  }

  ExprPtr match_expr() {
    std::size_t start = peek().offset;
    auto l = comparison();
    if (at(":=") || at("!:=") || at("<-")) {
      std::string op = take().text;
      auto r = comparison();
      auto e = make(op == ":=" ? EK::Match : op == "!:=" ? EK::NoMatch : EK::Enumerate, span_from(start));
      e->pattern = std::make_shared<Pattern>(pattern_of(*l));
      e->kids = {r};
      return e;
    }
    return l;
  }

  ExprPtr comparison() {
    std::size_t start = peek().offset;
    auto l = membership();
    static const std::set<std::string, std::less<>> kOps = {"==", "!=", "<", "<=", ">", ">="};
    if (peek().kind == Token::Kind::Punct && kOps.count(peek().text) && !(no_gt_ && at(">"))) {
      std::string op = take().text;
      auto r = membership();
      auto e = make(EK::Binary, span_from(start));
      e->op = op;
      e->kids = {l, r};
      return e;
    }
    return l;
  }

  ExprPtr membership() {
    std::size_t start = peek().offset;
    auto l = additive();
    if (at_word("in") || at_word("notin")) {
      std::string op = take().text;
      auto r = additive();
      auto e = make(EK::Binary, span_from(start));
      e->op = op;
      e->kids = {l, r};
      return e;
    }
    return l;
  }

  ExprPtr additive() {
    std::size_t start = peek().offset;
    auto l = multiplicative();
    while (at("+") || at("-")) {
      std::string op = take().text;
      auto r = multiplicative();
      auto e = make(EK::Binary, span_from(start));
      e->op = op;
      e->kids = {l, r};
      l = e;
    }
    return l;
  }

  ExprPtr multiplicative() {
    std::size_t start = peek().offset;
    auto l = unary();
    while (at("*") || at("/") || at("%") || at("&") || at_word("o")) {
      std::string op = take().text;
      auto r = unary();
      auto e = make(EK::Binary, span_from(start));
      e->op = op;
      e->kids = {l, r};
      l = e;
    }
    return l;
  }

  ExprPtr unary() {
    std::size_t start = peek().offset;
    if (at("-")) {
      take();
      auto operand = unary();
      if (operand->kind == EK::Literal && operand->value.is(Kind::Int)) {
        auto e = make(EK::Literal, span_from(start));
        e->value = Value::integer(BigInt(-operand->value.as_int()));
        return e;
      }
      auto e = make(EK::Unary, span_from(start));
      e->op = "-";
      e->kids = {operand};
      return e;
    }
    if (at("!")) {
      take();
      auto operand = unary();
      auto e = make(EK::Unary, span_from(start));
      e->op = "!";
      e->kids = {operand};
      return e;
    }
    if (at("/")) {
      take();
      auto operand = unary();
      auto e = make(EK::Deep, span_from(start));
      e->kids = {operand};
      return e;
    }
    if (at("*")) {
      take();
      auto operand = unary();
      auto e = make(EK::Splice, span_from(start));
      e->kids = {operand};
      return e;
    }
    return postfix();
  }

  // Whether `t` can begin an expression; used to tell postfix closure from
  // the binary operators `+` and `*`.
  static bool starts_expression(const Token& t) {
    switch (t.kind) {
      case Token::Kind::Ident:
        return t.escaped || !kWordOps.count(t.text);
      case Token::Kind::Int:
      case Token::Kind::String: return true;
      case Token::Kind::Punct:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "<" || t.text == "|" ||
               t.text == "-" || t.text == "!" || t.text == "/" || t.text == "*";
      case Token::Kind::End: return false;
    }
    return false;
  }

  ExprPtr postfix() {
    std::size_t start = peek().offset;
    auto e = primary();
    while (true) {
      if (at(".") ) {
        take();
        auto f = make(EK::Field, {});
        f->name = name("field name");
        f->kids = {e};
        f->where = span_from(start);
        e = f;
      } else if (at("[") ) {
        take();
        auto idx = with_gt([&] { return expression(); });
        expect("]");
        auto s = make(EK::Subscript, span_from(start));
        s->kids = {e, idx};
        e = s;
      } else if ((at("+") || at("*")) && !peek().space_before &&
                 (peek(1).is("[") || !starts_expression(peek(1)))) {
        std::string op = take().text;
        auto c = make(op == "+" ? EK::Closure : EK::ReflClosure, span_from(start));
        c->kids = {e};
        e = c;
      } else if (at_word("is") || at_word("has")) {
        std::string op = take().text;
        auto c = make(op == "is" ? EK::Is : EK::Has, {});
        c->name = name(op == "is" ? "constructor name" : "field name");
        c->kids = {e};
        c->where = span_from(start);
        e = c;
      } else {
        return e;
      }
    }
  }

  std::vector<ExprPtr> expression_list(std::string_view close) {
    std::vector<ExprPtr> out;
    if (at(close)) return out;
    do {
      out.push_back(expression());
    } while (accept(","));
    return out;
  }

  ExprPtr primary() {
    const std::size_t start = peek().offset;
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::End: error(t, "expected an expression");
      case Token::Kind::Int: {
        auto e = make(EK::Literal, {});
        e->value = Value::integer(BigInt(take().text));
        e->where = span_from(start);
        return e;
      }
      case Token::Kind::String: return string_expr(take());
      case Token::Kind::Punct: break;
      case Token::Kind::Ident: {
        if (t.escaped) return name_expr();
        const std::string w = t.text;
        if (w == "true" || w == "false") {
          auto e = make(EK::Literal, {});
          e->value = Value::boolean(take().text == "true");
          e->where = span_from(start);
          return e;
        }
        if (w == "visit" || at_strategy()) return visit_expr();
        if (w == "_") {
          take();
          return make(EK::Wildcard, span_from(start));
        }
        if (kTypeWords.count(w)) {
          auto ty = type();
          auto e = make(EK::TypedVar, {});
          e->type = std::move(ty);
          e->name = name("variable name");
          e->where = span_from(start);
          return e;
        }
        return name_expr();
      }
    }
    // Punctuation-led primaries.
    if (t.is("(")) {
      take();
      if (accept(")")) {
        auto e = make(EK::Literal, span_from(start));
        e->value = Value::map({});
        return e;
      }
      return with_gt([&] {
        auto first = expression();
        if (accept(":")) {
          auto val = expression();
          if (accept("|")) {
            auto e = make(EK::MapComp, {});
            e->kids = {first, val};
            e->conditions = conditions();
            expect(")");
            e->where = span_from(start);
            return e;
          }
          auto e = make(EK::Map, {});
          e->kids = {first, val};
          while (accept(",")) {
            e->kids.push_back(expression());
            expect(":");
            e->kids.push_back(expression());
          }
          expect(")");
          e->where = span_from(start);
          return e;
        }
        expect(")");
        return first;
      });
    }
    if (t.is("[")) {
      take();
      return with_gt([&] {
        if (accept("]")) return make(EK::List, span_from(start));
        auto first = expression();
        if (accept("..")) {
          auto hi = expression();
          expect("]");
          auto e = make(EK::Range, span_from(start));
          e->kids = {first, hi};
          return e;
        }
        if (accept("|")) {
          auto e = make(EK::ListComp, {});
          e->kids = {first};
          e->conditions = conditions();
          expect("]");
          e->where = span_from(start);
          return e;
        }
        auto e = make(EK::List, {});
        e->kids = {first};
        while (accept(",")) e->kids.push_back(expression());
        expect("]");
        e->where = span_from(start);
        return e;
      });
    }
    if (t.is("{")) {
      take();
      return with_gt([&] {
        if (accept("}")) return make(EK::Set, span_from(start));
        auto first = expression();
        if (accept("|")) {
          auto e = make(EK::SetComp, {});
          e->kids = {first};
          e->conditions = conditions();
          expect("}");
          e->where = span_from(start);
          return e;
        }
        auto e = make(EK::Set, {});
        e->kids = {first};
        while (accept(",")) e->kids.push_back(expression());
        expect("}");
        e->where = span_from(start);
        return e;
      });
    }
    if (t.is("<")) {
      take();
      bool saved = no_gt_;
      no_gt_ = true;
      auto e = make(EK::Tuple, {});
      if (!at(">")) {
        do {
          e->kids.push_back(expression());
        } while (accept(","));
      }
      no_gt_ = saved;
      expect(">");
      e->where = span_from(start);
      return e;
    }
    if (t.is("|")) {
      std::size_t at = raw_start();
      auto e = make(EK::Literal, {});
      e->value = lex_.location(at);
      last_end_ = lex_.pos();
      e->where = span_from(start);
      return e;
    }
    error(t, "expected an expression");
  }

  ExprPtr name_expr() {
    const std::size_t start = peek().offset;
    std::string n = take().text;
    while (at("::") && is_name(peek(1))) {
      take();
      n += "::" + take().text;
    }
    // `Type name` declares a typed variable.
    const Token& nx = peek();
    if (nx.kind == Token::Kind::Ident && is_name(nx) && (nx.escaped || !kWordOps.count(nx.text))) {
      auto e = make(EK::TypedVar, {});
      e->type = TypeExpr::adt(n);
      e->name = take().text;
      e->where = span_from(start);
      return e;
    }
    if (at("(")) {
      take();
      auto e = make(EK::Call, {});
      e->name = n;
      e->kids = with_gt([&] { return expression_list(")"); });
      expect(")");
      e->where = span_from(start);
      return e;
    }
    auto e = make(EK::Var, span_from(start));
    e->name = n;
    return e;
  }

  // -- string templates ----------------------------------------------------

  ExprPtr string_expr(const Token& t) {
    const std::size_t start = t.offset;
    bool has_hole = false;
    for (const auto& p : t.pieces) has_hole = has_hole || p.hole;
    if (!has_hole) {
      auto e = make(EK::Literal, lex_.span(start, t.length));
      e->value = Value::string(t.pieces.empty() ? "" : t.pieces[0].text);
      return e;
    }
    // Holes may open and close for/if blocks; a stack of part lists tracks nesting.
    std::vector<std::vector<ast::TemplatePart>*> stack;
    std::vector<ast::TemplatePart> top;
    stack.push_back(&top);
    std::vector<std::pair<ast::TemplatePart*, bool>> open;  // block part, in else branch
    auto unbalanced = [&](const StringPiece& p, const std::string& msg) {
      throw Error(ErrorKind::UnbalancedTemplate, msg, lex_.span(p.begin - 1, p.end - p.begin + 2));
    };
    for (const auto& p : t.pieces) {
      if (!p.hole) {
        ast::TemplatePart part;
        part.text = p.text;
        stack.back()->push_back(std::move(part));
        continue;
      }
      Parser sub(lex_.source(), lex_.uri(), p.begin, p.end);
      const Token& first = sub.peek();
      if (first.is("}")) {
        sub.take();
        if (open.empty()) unbalanced(p, "'<}>' without an open block");
        if (sub.accept_word("else")) {
          sub.expect("{");
          if (!sub.at_end()) sub.error(sub.peek(), "expected '>'");
          auto& [block, in_else] = open.back();
          if (in_else || block->kind != ast::TemplatePart::Kind::If) unbalanced(p, "misplaced else");
          in_else = true;
          stack.back() = &block->else_body;
          continue;
        }
        if (!sub.at_end()) sub.error(sub.peek(), "expected '>'");
        open.pop_back();
        stack.pop_back();
        continue;
      }
      if (first.is_word("for") || first.is_word("if")) {
        bool is_for = first.is_word("for");
        sub.take();
        ast::TemplatePart part;
        part.kind = is_for ? ast::TemplatePart::Kind::For : ast::TemplatePart::Kind::If;
        part.conditions = sub.paren_conditions();
        if (!sub.at("{")) unbalanced(p, "template block must end with '{'");
        sub.take();
        if (!sub.at_end()) sub.error(sub.peek(), "expected '>'");
        stack.back()->push_back(std::move(part));
        ast::TemplatePart* block = &stack.back()->back();
        open.emplace_back(block, false);
        stack.push_back(&block->body);
        continue;
      }
      ast::TemplatePart part;
      part.kind = ast::TemplatePart::Kind::Interp;
      part.expr = sub.expression();
      if (!sub.at_end()) sub.error(sub.peek(), "expected '>' to close the interpolation");
      stack.back()->push_back(std::move(part));
    }
    if (!open.empty()) {
      throw Error(ErrorKind::UnbalancedTemplate, "template block is not closed with '<}>'",
                  lex_.span(start, t.length));
    }
    auto e = make(EK::Template, lex_.span(start, t.length));
    e->parts = std::move(top);
    return e;
  }

  Pattern pattern_of(const Expr& e) { return to_pattern(e); }

  // -- REPL ----------------------------------------------------------------

  std::vector<ast::ReplItem> repl_items() {
    std::vector<ast::ReplItem> out;
    while (!at_end()) {
      ast::ReplItem item;
      if (at_word("import")) {
        item.kind = ast::ReplItem::Kind::Import;
        item.import = import_decl();
      } else if (at_word("data")) {
        item.kind = ast::ReplItem::Kind::Data;
        item.data = data_decl();
      } else if (at_syntax_decl()) {
        item.kind = ast::ReplItem::Kind::Syntax;
        item.syntax = syntax_decl();
      } else if (auto f = try_function()) {
        item.kind = ast::ReplItem::Kind::Function;
        item.function = f;
      } else {
        item.kind = ast::ReplItem::Kind::Statement;
        item.stmt = statement(true);
      }
      out.push_back(std::move(item));
    }
    return out;
  }

  std::shared_ptr<const ast::Function> try_function() {
    Mark m = mark();
    std::size_t start = peek().offset;
    bool is_public = true;
    bool is_default = false;
    bool modifiers = false;
    while (true) {
      if (accept_word("public")) {
        modifiers = true;
        continue;
      }
      if (accept_word("private")) {
        modifiers = true;
        is_public = false;
        continue;
      }
      if (accept_word("default")) {
        modifiers = true;
        is_default = true;
        continue;
      }
      break;
    }
    TypeExpr t;
    try {
      if (!(at_type_word() || is_name(peek()))) throw 0;
      t = type();
      if (!is_name(peek()) || !peek(1).is("(")) throw 0;
    } catch (int) {
      if (modifiers) error(peek(), "expected a function declaration");
      restore(m);
      return nullptr;
    } catch (const Error&) {
      if (modifiers) throw;
      restore(m);
      return nullptr;
    }
    std::string n = take().text;
    return function_rest(std::move(t), std::move(n), is_default, is_public, start);
  }

  void expect_end() {
    if (!at_end()) error(peek(), "unexpected input");
  }

 private:
  Lexer lex_;
  std::deque<Token> la_;
  std::size_t last_end_ = 0;
  bool no_gt_ = false;
};

[[noreturn]] void not_a_pattern(const Expr& e, const std::string& what) {
  throw Error(ErrorKind::SyntaxError, what + " cannot be used as a pattern", e.where);
}

std::vector<Pattern> collection_items(const Expr& e) {
  std::vector<Pattern> out;
  for (const auto& k : e.kids) {
    if (k->kind == EK::Splice) {
      const Expr& inner = *k->kids[0];
      if (inner.kind == EK::Var) out.push_back(Pattern::multi(inner.name));
      else if (inner.kind == EK::Wildcard) out.push_back(Pattern::multi());
      else not_a_pattern(inner, "a spliced expression");
    } else {
      out.push_back(to_pattern(*k));
    }
  }
  return out;
}

}  // namespace

Pattern to_pattern(const Expr& e) {
  switch (e.kind) {
    case EK::Literal: return Pattern::lit(e.value);
    case EK::Var:
      if (e.name.find("::") != std::string::npos) not_a_pattern(e, "a qualified name");
      return Pattern::var(e.name);
    case EK::TypedVar: return Pattern::var(e.name, e.type);
    case EK::Wildcard: return Pattern::wildcard();
    case EK::Call: {
      std::vector<Pattern> args;
      for (const auto& k : e.kids) args.push_back(to_pattern(*k));
      return Pattern::ctor(e.name, std::move(args));
    }
    case EK::List: return Pattern::list(collection_items(e));
    case EK::Set: return Pattern::set(collection_items(e));
    case EK::Tuple: {
      std::vector<Pattern> elems;
      for (const auto& k : e.kids) elems.push_back(to_pattern(*k));
      return Pattern::tuple(std::move(elems));
    }
    case EK::Deep: return Pattern::deep(to_pattern(*e.kids[0]));
    case EK::Unary:
      if (e.op == "!") return Pattern::neg(to_pattern(*e.kids[0]));
      not_a_pattern(e, "a negation");
    case EK::Splice: not_a_pattern(e, "a splice outside a list or set");
    default: not_a_pattern(e, "this expression");
  }
}

ast::Module parse_module(std::string_view source, const std::string& uri) {
  Parser p(source, uri);
  return p.module();
}

std::vector<ast::ReplItem> parse_repl(std::string_view source, const std::string& uri) {
  Parser p(source, uri);
  return p.repl_items();
}

ast::ExprPtr parse_expression(std::string_view source, const std::string& uri) {
  Parser p(source, uri);
  auto e = p.expression();
  p.expect_end();
  return e;
}

TypeExpr parse_type(std::string_view source) {
  Parser p(source, "type");
  auto t = p.type();
  p.expect_end();
  return t;
}

}  // namespace mrl
