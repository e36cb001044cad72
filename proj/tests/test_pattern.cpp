#include <doctest.h>

#include "mrl/pattern.hpp"
#include "support.hpp"

using namespace mrl;

namespace {

Declarations decls() {
  Declarations d;
  d.declare_adt("NAT");
  d.declare_constructor({"NAT", "z", {}, {}});
  d.declare_constructor({"NAT", "succ", {TypeExpr::adt("NAT")}, {"pred"}});
  d.declare_adt("ColoredTree");
  d.declare_constructor({"ColoredTree", "leaf", {TypeExpr::integer()}, {"n"}});
  d.declare_constructor({"ColoredTree", "composite",
                         {TypeExpr::str(), TypeExpr::adt("ColoredTree"), TypeExpr::adt("ColoredTree")},
                         {"color", "left", "right"}});
  d.declare_adt("Pair");
  d.declare_constructor({"Pair", "pair", {TypeExpr::top(), TypeExpr::top()}, {"a", "b"}});
  return d;
}

const Declarations& D() {
  static const Declarations d = decls();
  return d;
}

std::vector<Bindings> matches(const Pattern& p, const Value& v, Bindings outer = Bindings{}) {
  std::vector<Bindings> out;
  for (auto& b : match_all(p, v, outer, D())) out.push_back(b);
  return out;
}

Value v(std::string_view text) { return parse_value(text, &D()); }
Value i(long long n) { return Value::integer(n); }

Pattern ctor(std::string name, std::vector<Pattern> args) { return Pattern::ctor(std::move(name), std::move(args)); }

struct MapScope : Scope {
  std::map<std::string, Value, std::less<>> vars;
  const Value* lookup(std::string_view name) const override {
    auto it = vars.find(name);
    return it == vars.end() ? nullptr : &it->second;
  }
};

}  // namespace

TEST_SUITE("pattern") {
  TEST_CASE("variable binds the whole value") {
    auto r = matches(Pattern::var("x"), i(42));
    REQUIRE(r.size() == 1);
    CHECK(*r[0].find("x") == i(42));
  }

  TEST_CASE("list splits enumerate shortest first") {
    auto r = matches(Pattern::list({Pattern::multi("a"), Pattern::multi("b")}), v("[1,2]"));
    REQUIRE(r.size() == 3);
    CHECK(*r[0].find("a") == v("[]"));
    CHECK(*r[0].find("b") == v("[1,2]"));
    CHECK(*r[1].find("a") == v("[1]"));
    CHECK(*r[1].find("b") == v("[2]"));
    CHECK(*r[2].find("a") == v("[1,2]"));
    CHECK(*r[2].find("b") == v("[]"));
  }

  TEST_CASE("constructor mismatch yields nothing") {
    CHECK(matches(ctor("succ", {Pattern::var("x")}), v("z()")).empty());
    auto r = matches(ctor("succ", {Pattern::var("x")}), v("succ(z())"));
    REQUIRE(r.size() == 1);
    CHECK(*r[0].find("x") == v("z()"));
  }

  TEST_CASE("deep match visits subterms in preorder") {
    auto r = matches(Pattern::deep(ctor("leaf", {Pattern::var("n")})), v("composite(\"red\", leaf(1), leaf(2))"));
    REQUIRE(r.size() == 2);
    CHECK(*r[0].find("n") == i(1));
    CHECK(*r[1].find("n") == i(2));
  }

  TEST_CASE("negative match") {
    CHECK(matches(Pattern::neg(Pattern::lit(i(0))), i(0)).empty());
    auto r = matches(Pattern::neg(Pattern::lit(i(0))), i(1));
    REQUIRE(r.size() == 1);
    CHECK(r[0].empty());
    auto inner = matches(Pattern::neg(ctor("succ", {Pattern::var("x")})), v("z()"));
    REQUIRE(inner.size() == 1);
    CHECK(inner[0].find("x") == nullptr);
  }

  TEST_CASE("subterms") {
    auto collect = [](Value x) {
      std::vector<Value> out;
      for (auto& s : subterms(x)) out.push_back(s);
      return out;
    };
    CHECK(collect(i(1)) == std::vector<Value>{i(1)});
    CHECK(collect(v("succ(z())")) == std::vector<Value>{v("succ(z())"), v("z()")});
    // The node, "red", leaf(1), 1, leaf(2), 2.
    auto all = collect(v("composite(\"red\", leaf(1), leaf(2))"));
    CHECK(all.size() == 6);
    CHECK(all[1] == Value::string("red"));
    // Map entries contribute keys then values.
    CHECK(collect(v("(1:\"a\")")) == std::vector<Value>{v("(1:\"a\")"), i(1), Value::string("a")});
  }

  TEST_CASE("non-overlap is advisory and conservative") {
    CHECK(matches_non_overlapping(ctor("z", {}), ctor("succ", {Pattern::wildcard()})));
    CHECK_FALSE(matches_non_overlapping(Pattern::var("x"), ctor("z", {})));
    CHECK(matches_non_overlapping(Pattern::lit(i(1)), Pattern::lit(i(2))));
    CHECK_FALSE(matches_non_overlapping(Pattern::lit(i(1)), Pattern::lit(i(1))));
  }

  TEST_CASE("list completeness against brute force") {
    for (std::size_t n = 0; n <= 12; ++n) {
      std::vector<Value> elems;
      for (std::size_t k = 0; k < n; ++k) elems.push_back(i(static_cast<long long>(k)));
      auto r = matches(Pattern::list({Pattern::multi("xs"), Pattern::var("x"), Pattern::multi("ys")}),
                       Value::list(elems));
      REQUIRE(r.size() == n);
      for (std::size_t k = 0; k < n; ++k) CHECK(*r[k].find("x") == elems[k]);
    }
  }

  TEST_CASE("set completeness") {
    for (int n = 0; n <= 6; ++n) {
      std::vector<Value> elems;
      for (int k = 0; k < n; ++k) elems.push_back(i(k * 10));
      Value s = Value::set(elems);
      auto r = matches(Pattern::set({Pattern::var("x"), Pattern::multi("r")}), s);
      REQUIRE(r.size() == static_cast<std::size_t>(n));
      std::vector<Value> seen;
      for (const auto& b : r) {
        seen.push_back(*b.find("x"));
        CHECK(set_insert(*b.find("r"), *b.find("x")) == s);
      }
      CHECK(Value::set(seen) == s);
    }
  }

  TEST_CASE("non-linear patterns check equality") {
    Pattern p = ctor("pair", {Pattern::var("x"), Pattern::var("x")});
    test::ValueGen gen(5);
    for (int n = 0; n < 200; ++n) {
      Value a = gen.any(2);
      Value b = gen.pick(3) == 0 ? a : gen.any(2);
      CHECK(matches(p, Value::node("Pair", "pair", {a, b})).size() == (a == b ? 1u : 0u));
    }
  }

  TEST_CASE("bound outer variables act as constraints") {
    MapScope scope;
    scope.vars.emplace("x", i(2));
    CHECK(matches(Pattern::var("x"), i(2), Bindings(&scope)).size() == 1);
    CHECK(matches(Pattern::var("x"), i(3), Bindings(&scope)).empty());
  }

  TEST_CASE("typed variables only accept subtypes") {
    Pattern p = Pattern::var("n", TypeExpr::adt("NAT"));
    CHECK(matches(p, v("z()")).size() == 1);
    CHECK(matches(p, v("leaf(1)")).empty());
    CHECK(matches(Pattern::var("s", TypeExpr::str()), i(1)).empty());
  }

  TEST_CASE("tuple and literal patterns") {
    auto r = matches(Pattern::tuple({Pattern::lit(i(1)), Pattern::var("y")}), v("<1,\"b\">"));
    REQUIRE(r.size() == 1);
    CHECK(*r[0].find("y") == Value::string("b"));
    CHECK(matches(Pattern::tuple({Pattern::lit(i(2)), Pattern::wildcard()}), v("<1,2>")).empty());
  }

  TEST_CASE("check_pattern rejects unknown names") {
    CHECK_THROWS_AS(check_pattern(ctor("nope", {}), D()), Error);
    CHECK_THROWS_AS(check_pattern(Pattern::var("x", TypeExpr::adt("Missing")), D()), Error);
    CHECK_NOTHROW(check_pattern(ctor("succ", {Pattern::wildcard()}), D()));
  }

  TEST_CASE("two runs give identical binding sequences") {
    Pattern p = Pattern::list({Pattern::multi("a"), Pattern::var("x"), Pattern::multi("b")});
    Value subject = v("[3,1,4,1,5]");
    auto first = matches(p, subject);
    auto second = matches(p, subject);
    CHECK(first == second);
  }

  TEST_CASE("pattern variables and rendering") {
    Pattern p = ctor("composite", {Pattern::var("c", TypeExpr::str()), Pattern::wildcard(), Pattern::var("r")});
    CHECK(pattern_variables(p) == std::vector<std::string>{"c", "r"});
    CHECK(render_pattern(p) == "composite(str c,_,r)");
  }
}
