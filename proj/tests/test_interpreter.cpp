#include <doctest.h>

#include <sstream>

#include "mrl/utf8.hpp"
#include "support.hpp"

using namespace mrl;

namespace {

// Evaluates one REPL expression in a fresh interpreter, after `decls`.
Value eval(const std::string& expr, const std::string& decls = "") {
  Interpreter in;
  if (!decls.empty()) in.load_source("module m;\n" + decls, "m.mrl");
  auto v = in.execute(expr + ";");
  REQUIRE(v.has_value());
  return *v;
}

Value call(const std::string& module_body, const std::string& fn, std::vector<Value> args = {},
           Options options = {}) {
  Interpreter in(options);
  in.load_source("module m;\n" + module_body, "m.mrl");
  return in.call(fn, std::move(args));
}

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::SyntaxError;
}

Value v(std::string_view text) { return parse_value(text); }
Value i(long long n) { return Value::integer(n); }

const char* kPeano = R"(
data NAT = z() | succ(NAT pred);
NAT add1(NAT x, NAT y) {
  switch (y) {
    case z(): return x;
    case succ(NAT y): return succ(add1(x, y));
  }
}
NAT add2(NAT x, z()) = x;
NAT add2(NAT x, succ(NAT y)) = succ(add2(x, y));
)";

const char* kTree = R"(
data ColoredTree = leaf(int n) | composite(str color, ColoredTree left, ColoredTree right);
map[str, int] colorDistribution(ColoredTree t) {
  counts = ();
  visit (t) {
    case composite(str color, _, _): counts[color] ? 0 += 1;
  }
  return counts;
}
ColoredTree sample() = composite("red", leaf(1), composite("blue", leaf(2), leaf(3)));
)";

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("mrl-test-" + std::to_string(::getpid()) + "-" +
                                                      std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  void write(const std::string& rel, const std::string& text) const {
    auto p = path / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << text;
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

}  // namespace

TEST_SUITE("interpreter") {
  TEST_CASE("loading registers function alternatives") {
    Interpreter in;
    in.load_source("module m;\n" + std::string(kPeano), "m.mrl");
    CHECK(in.has_function("add2", 2));
    CHECK_FALSE(in.has_function("add2", 1));
    CHECK(in.call("add2", {test::nat(2), test::nat(1)}) == test::nat(3));
    CHECK(in.call("add2", {test::nat(0), test::nat(0)}) == test::nat(0));
  }

  TEST_CASE("module loading errors") {
    TempDir dir;
    dir.write("self.mrl", "module self;\nimport self;\n");
    dir.write("a.mrl", "module a;\nimport b;\n");
    dir.write("b.mrl", "module b;\nimport a;\n");
    dir.write("lost.mrl", "module lost;\nimport nowhere::to::be;\n");
    dir.write("dup.mrl", "module dup;\ndata T = leaf(int n);\ndata T = leaf(int m);\n");
    dir.write("bad.mrl", "module bad;\nint f( = 1;\n");
    auto kind = [&](const char* file) {
      return error_of([&] {
        Interpreter in;
        in.load_file(dir.path / file);
      });
    };
    CHECK(kind("self.mrl") == ErrorKind::CyclicImport);
    CHECK(kind("a.mrl") == ErrorKind::CyclicImport);
    CHECK(kind("lost.mrl") == ErrorKind::ModuleNotFound);
    CHECK(kind("dup.mrl") == ErrorKind::DuplicateDeclaration);
    CHECK(kind("bad.mrl") == ErrorKind::SyntaxError);
  }

  TEST_CASE("imports resolve against the module root and search paths") {
    TempDir dir;
    dir.write("app/main.mrl", "module app::main;\nimport app::util;\nimport shared;\nint main() = twice(base());\n");
    dir.write("app/util.mrl", "module app::util;\nint twice(int x) = 2 * x;\n");
    dir.write("lib/shared.mrl", "module shared;\nint base() = 21;\n");
    Options options;
    options.search_paths.push_back(dir.path / "lib");
    Interpreter in(options);
    in.load_file(dir.path / "app/main.mrl");
    CHECK(in.call("main", {}) == i(42));
  }

  TEST_CASE("syntax errors point at the source") {
    try {
      Interpreter in;
      in.load_source("module m;\nint f() = 1 +;\n", "peano.mrl");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).rfind("|peano.mrl|(", 0) == 0);
    }
  }

  TEST_CASE("dispatch tries non-defaults in order, then defaults") {
    const char* src = R"(
int calls = 0;
str f(int x) { if (x > 5) fail; return "small"; }
str f(0) = "zero";
default str f(int x) { calls += 1; return "default"; }
str g(int x) = "only";
int count() = calls;
)";
    Interpreter in;
    in.load_source(std::string("module m;\n") + src, "m.mrl");
    CHECK(in.call("f", {i(0)}) == Value::string("small"));
    CHECK(in.call("f", {i(3)}) == Value::string("small"));
    CHECK(in.call("count", {}) == i(0));
    CHECK(in.call("f", {i(9)}) == Value::string("default"));
    CHECK(in.call("count", {}) == i(1));
    CHECK(error_of([&] { in.call("g", {Value::string("s")}); }) == ErrorKind::NoApplicableAlternative);
    // The two overlapping non-default alternatives are reported.
    bool warned = false;
    for (const auto& w : in.warnings()) warned = warned || w.find("f") != std::string::npos;
    CHECK(warned);
  }

  TEST_CASE("bound variables in patterns compare and are reported") {
    const char* src = R"(
bool same(int x, list[int] xs) {
  if ([*_, x, *_] := xs) return true;
  return false;
}
)";
    Interpreter in;
    in.load_source(std::string("module m;\n") + src, "m.mrl");
    CHECK(in.call("same", {i(2), v("[1,2,3]")}) == Value::boolean(true));
    CHECK(in.call("same", {i(9), v("[1,2,3]")}) == Value::boolean(false));
    std::size_t reported = 0;
    for (const auto& w : in.warnings()) reported += w.find("x is already bound") != std::string::npos;
    CHECK(reported == 1);
  }

  TEST_CASE("add1 and add2 agree with integer addition") {
    Interpreter in;
    in.load_source("module m;\n" + std::string(kPeano), "m.mrl");
    for (int n = 0; n <= 8; ++n) {
      for (int m = 0; m <= 8; ++m) {
        CHECK(in.call("add1", {test::nat(n), test::nat(m)}) == test::nat(n + m));
        CHECK(in.call("add2", {test::nat(n), test::nat(m)}) == test::nat(n + m));
      }
    }
  }

  TEST_CASE("return types are checked") {
    CHECK(error_of([] { call("int f() = \"s\";", "f"); }) == ErrorKind::ReturnTypeError);
    CHECK(error_of([] { call("int f() { if (false) return 1; }", "f"); }) == ErrorKind::MissingReturn);
    CHECK(call("void f() { x = 1; }", "f") == Value::unit());
    CHECK(error_of([] { call("int f(int n) = f(n + 1);", "f", {i(0)}); }) == ErrorKind::StackOverflow);
  }

  TEST_CASE("switch") {
    const char* src = R"(
str s(int x) {
  switch (x) {
    case 1: return "one";
    case int y: { if (y < 10) fail; return "big"; }
    case int y: return "other";
  }
}
int none(int x) {
  r = 0;
  switch (x) { case 1: r = 1; }
  return r;
}
str d(value x) {
  switch (x) {
    case 1: return "one";
    default: return "default";
  }
}
)";
    CHECK(call(src, "s", {i(1)}) == Value::string("one"));
    CHECK(call(src, "s", {i(20)}) == Value::string("big"));
    CHECK(call(src, "s", {i(5)}) == Value::string("other"));
    CHECK(call(src, "none", {i(2)}) == i(0));
    CHECK(call(src, "d", {Value::string("x")}) == Value::string("default"));
  }

  TEST_CASE("visit") {
    CHECK(call(kTree, "colorDistribution", {call(kTree, "sample")}) == v("(\"red\":1,\"blue\":1)"));
    const char* src = R"(
data NAT = z() | succ(NAT pred) | add(NAT l, NAT r);
NAT nf(NAT t) = innermost visit (t) {
  case add(x, z()) => x
  case add(x, succ(y)) => succ(add(x, y))
};
value same(value t) = visit (t) { };
list[int] order(value t) {
  list[int] seen = [];
  top-down visit (t) { case int n: seen += [n]; }
  return seen;
}
list[int] postorder(value t) {
  list[int] seen = [];
  visit (t) { case int n: seen += [n]; }
  return seen;
}
value bump(value t) = visit (t) { case int n => n + 1 };
value ins(value t) = visit (t) { case int n: insert n * 10; };
value bad(NAT t) = visit (t) { case z() => 3 };
bool pure() {
  t = [1, [2, 3]];
  u = bump(t);
  return t == [1, [2, 3]] && u == [2, [3, 4]];
}
NAT loop(NAT t) = innermost visit (t) { case succ(x) => succ(succ(x)) };
)";
    Interpreter in;
    in.load_source(std::string("module m;\n") + src, "m.mrl");
    CHECK(in.call("nf", {in.read_value("add(succ(z()),succ(z()))")}) == in.read_value("succ(succ(z()))"));
    CHECK(in.call("same", {v("[1,{2},(3:4)]")}) == v("[1,{2},(3:4)]"));
    CHECK(in.call("order", {v("[1,[2,3],4]")}) == v("[1,2,3,4]"));
    CHECK(in.call("postorder", {v("<1,<2,3>>")}) == v("[1,2,3]"));
    CHECK(in.call("bump", {v("(1:[2])")}) == v("(2:[3])"));
    CHECK(in.call("ins", {v("[1,2]")}) == v("[10,20]"));
    CHECK(in.call("pure", {}) == Value::boolean(true));
    CHECK(error_of([&] { in.call("bad", {in.read_value("succ(z())")}); }) == ErrorKind::ReplacementTypeError);

    Options tight;
    tight.visit_budget = 5;
    Interpreter limited(tight);
    limited.load_source(std::string("module m;\n") + src, "m.mrl");
    CHECK(error_of([&] { limited.call("loop", {limited.read_value("succ(z())")}); }) ==
          ErrorKind::FixpointBudgetExceeded);
  }

  TEST_CASE("solve") {
    const char* src = R"(
rel[int,int] closure(rel[int,int] edges) {
  reach = edges;
  solve (reach) reach = reach + compose(reach, edges);
  return reach;
}
int once() {
  n = 0;
  x = 1;
  solve (x) { n += 1; }
  return n;
}
bool flip() {
  b = true;
  solve (b) b = !b;
  return b;
}
int unbound() {
  solve (nope) { x = 1; }
  return 0;
}
)";
    CHECK(call(src, "closure", {v("{<1,2>,<2,3>}")}) == v("{<1,2>,<2,3>,<1,3>}"));
    CHECK(call(src, "once") == i(1));
    Options options;
    options.solve_budget = 50;
    CHECK(error_of([&] { call(src, "flip", {}, options); }) == ErrorKind::FixpointBudgetExceeded);
    CHECK(error_of([&] { call(src, "unbound"); }) == ErrorKind::UndefinedName);
  }

  TEST_CASE("comprehensions") {
    CHECK(eval("[ x * x | x <- [1,2,3] ]") == v("[1,4,9]"));
    CHECK(eval("{ c | /composite(str c, _, _) <- sample() }", kTree) == v("{\"red\",\"blue\"}"));
    CHECK(eval("( k : 0 | k <- {\"a\",\"b\"} )") == v("(\"a\":0,\"b\":0)"));
    CHECK(eval("[ <x, y> | x <- [1,2], y <- [x..3] ]") == v("[<1,1>,<1,2>,<2,2>]"));
    CHECK(eval("[ x | x <- [1,2,3,4], x % 2 == 0 ]") == v("[2,4]"));
    CHECK(eval("[ k | k <- (\"b\":1, \"a\":2) ]") == v("[\"a\",\"b\"]"));
    CHECK(error_of([] { eval("[ x | x <- [1,2], 1 ]"); }) == ErrorKind::ConditionTypeError);
  }

  TEST_CASE("templates") {
    CHECK(eval("\"plain text\"") == Value::string("plain text"));
    const char* src = R"(
str indentAt4(str s) = "    <s>";
str margins() = "a
  '  b
  'c";
str loop(list[int] xs) = "<for (x <- xs) {><x>,<}>";
str cond(bool b) = "<if (b) {>yes<} else {>no<}>";
str nonstr() = "<[1, 2]> and <("k": 1)>";
)";
    CHECK(call(src, "indentAt4", {Value::string("x\ny")}) == Value::string("    x\n    y"));
    CHECK(call(src, "margins") == Value::string("a\n  b\nc"));
    CHECK(call(src, "loop", {v("[1,2,3]")}) == Value::string("1,2,3,"));
    CHECK(call(src, "cond", {Value::boolean(false)}) == Value::string("no"));
    CHECK(call(src, "nonstr") == Value::string("[1,2] and (\"k\":1)"));
    CHECK(error_of([] { call("str f() = \"<for (x <- [1]) {>open\";", "f"); }) == ErrorKind::UnbalancedTemplate);
  }

  TEST_CASE("auto-indent matches a column count") {
    Interpreter in;
    in.load_source("module m;\nstr at(str prefix, str s) = \"<prefix><s>\";\n", "m.mrl");
    for (std::string prefix : {"", " ", "ab  ", "é日 x"}) {
      Value out = in.call("at", {Value::string(prefix), Value::string("l1\nl2\n\nl3")});
      std::size_t col = utf8::length(prefix);
      std::string pad(col, ' ');
      CHECK(out.as_str() == prefix + "l1\n" + pad + "l2\n\n" + pad + "l3");
    }
  }

  TEST_CASE("default subscripts") {
    CHECK(eval("()[\"red\"] ? 0") == i(0));
    CHECK(eval("(\"red\":2)[\"red\"] ? 0") == i(2));
    const char* src = R"(
map[str,int] twice() {
  counts = ();
  counts["red"] ? 0 += 1;
  counts["red"] ? 0 += 1;
  return counts;
}
int missing() {
  m = ("a": 1);
  return m["b"];
}
int badKey() {
  map[str,int] m = ("a": 1);
  m[3] = 4;
  return 0;
}
)";
    CHECK(call(src, "twice") == v("(\"red\":2)"));
    try {
      call(src, "missing");
      FAIL("no exception");
    } catch (const Thrown& t) {
      CHECK(render(t.value()) == "noSuchKey(\"b\")");
    }
    CHECK(error_of([&] { call(src, "badKey"); }) == ErrorKind::KeyTypeError);
  }

  TEST_CASE("fail restores the environment") {
    const char* src = R"(
list[int] split() {
  if ([*a, *b] := [1, 2]) {
    if (size(a) == 0) fail;
    return a;
  }
  return [-1];
}
int restored() {
  x = 0;
  if ([*a, *b] := [1, 2, 3]) {
    if (x != 0) return -1;
    x = 1;
    if (size(b) > 0) fail;
    return x;
  }
  return -2;
}
int only(int x) { fail; }
int top() { fail; }
)";
    CHECK(call(src, "split") == v("[1]"));
    CHECK(call(src, "restored") == i(1));
    CHECK(error_of([&] { call(src, "only", {i(1)}); }) == ErrorKind::NoApplicableAlternative);
    CHECK(error_of([] {
            Interpreter in;
            in.execute("fail;");
          }) == ErrorKind::FailOutsideBacktrackingScope);
  }

  TEST_CASE("exceptions") {
    const char* src = R"(
int safeDiv(int a, int b) {
  try return a / b;
  catch divByZero(): return 0;
}
str caught() {
  try throw "boom";
  catch str s: return "caught <s>";
}
str runtime() {
  try {
    x = [1][5];
  } catch IndexOutOfBounds(str msg): return "index";
  return "none";
}
int uncaught() { throw 42; }
)";
    CHECK(call(src, "safeDiv", {i(7), i(0)}) == i(0));
    CHECK(call(src, "safeDiv", {i(7), i(2)}) == i(3));
    CHECK(call(src, "caught") == Value::string("caught boom"));
    CHECK(call(src, "runtime") == Value::string("index"));
    try {
      call(src, "uncaught");
      FAIL("no exception");
    } catch (const Thrown& t) {
      CHECK(t.value() == i(42));
      CHECK(std::string(t.what()).rfind("uncaught: 42", 0) == 0);
    }
  }

  TEST_CASE("builtins") {
    CHECK(eval("capitalize(\"name\")") == Value::string("Name"));
    CHECK(eval("capitalize(\"été\")") == Value::string("été"));
    CHECK(eval("size([])") == i(0));
    CHECK(eval("size(\"日本\")") == i(2));
    CHECK(eval("toInt(\"42\")") == i(42));
    CHECK(eval("toStr(42)") == Value::string("42"));
    CHECK(eval("typeOf([1,2])") == Value::string("list[int]"));
    CHECK(error_of([] { eval("readFile(\"/nonexistent/file.txt\")"); }) == ErrorKind::IoError);

    TempDir dir;
    auto file = (dir.path / "out.txt").string();
    CHECK(eval("writeFile(\"" + file + "\", \"héllo\")") == Value::unit());
    CHECK(eval("readFile(\"" + file + "\")") == Value::string("héllo"));

    std::ostringstream out;
    Options options;
    options.out = &out;
    Interpreter in(options);
    in.execute("println(\"a\", 1); print([2]);");
    CHECK(out.str() == "a1\n[2]");
  }

  TEST_CASE("assignment and locals") {
    CHECK(eval("x", "int x = 5;\n") == i(5));
    CHECK(eval("y + 1", "int y = 2;\nint f() { y = 7; return y; }\n") == i(3));
  }

  TEST_CASE("REPL sessions keep declarations") {
    Interpreter in;
    CHECK(*in.execute("1 + 2;") == i(3));
    CHECK_FALSE(in.execute("data N = z() | succ(N n);").has_value());
    CHECK(render(*in.execute("succ(z());")) == "succ(z())");
    CHECK(render_type(in.type_of_expression("[1,2]")) == "list[int]");
    in.execute("int twice(int x) = 2 * x;");
    in.execute("y = twice(4);");
    CHECK(*in.execute("y + 1;") == i(9));
  }

  TEST_CASE("operators") {
    CHECK(eval("[1,2] + [3]") == v("[1,2,3]"));
    CHECK(eval("{1,2} - {2}") == v("{1}"));
    CHECK(eval("{1,2} & {2,3}") == v("{2}"));
    CHECK(eval("{<1,2>,<2,3>}+") == v("{<1,2>,<2,3>,<1,3>}"));
    CHECK(eval("{<1,2>,<1,3>}[1]") == v("{2,3}"));
    CHECK(eval("(\"a\":1) + (\"b\":2)") == v("(\"a\":1,\"b\":2)"));
    CHECK(eval("2 in {1,2}") == Value::boolean(true));
    CHECK(eval("\"ab\" + \"cd\"") == Value::string("abcd"));
    CHECK(eval("-7 / 2") == i(-3));
    CHECK(eval("100000000000000000000 * 100000000000000000000") == v("10000000000000000000000000000000000000000"));
    CHECK(eval("[0..3]") == v("[0,1,2]"));
    CHECK(eval("[3..0]") == v("[3,2,1]"));
    CHECK(eval("<1,2> < <1,3>") == Value::boolean(true));
    CHECK(eval("succ(z()).pred", kPeano) == eval("z()", kPeano));
    CHECK(eval("x.color", std::string(kTree) + "ColoredTree x = composite(\"g\", leaf(1), leaf(2));\n") ==
          Value::string("g"));
    CHECK(eval("true ? 1 : 2") == i(1));
    CHECK(eval("(1 == 1) && !(2 < 1) || false") == Value::boolean(true));
  }

  TEST_CASE("no down-casts are needed: narrowing goes through patterns") {
    const char* src = R"(
int sum(list[value] xs) {
  int s = 0;
  for (int n <- xs) s += n;
  return s;
}
)";
    CHECK(call(src, "sum", {v("[1,\"a\",2,<3>]")}) == i(3));
  }

  TEST_CASE("types are checked on declared locals and parameters") {
    CHECK(error_of([] { call("int f() { int x = \"s\"; return x; }", "f"); }) == ErrorKind::TypeError);
    CHECK(error_of([] { call("int f(int x) = x;", "f", {Value::string("s")}); }) ==
          ErrorKind::NoApplicableAlternative);
    CHECK(error_of([] { eval("nope"); }) == ErrorKind::UndefinedName);
    CHECK(error_of([] { eval("if (1) 2;"); }) == ErrorKind::ConditionTypeError);
  }
}
