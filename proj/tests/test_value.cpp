#include <doctest.h>

#include <algorithm>

#include "mrl/types.hpp"
#include "mrl/value.hpp"
#include "support.hpp"

using namespace mrl;

namespace {

Value i(long long n) { return Value::integer(n); }
Value pair(long long a, long long b) { return Value::tuple({i(a), i(b)}); }
Value v(std::string_view text) { return parse_value(text); }

Declarations tree_decls() {
  Declarations d;
  d.declare_adt("ColoredTree");
  d.declare_constructor({"ColoredTree", "leaf", {TypeExpr::integer()}, {"n"}});
  d.declare_constructor({"ColoredTree", "composite",
                         {TypeExpr::str(), TypeExpr::adt("ColoredTree"), TypeExpr::adt("ColoredTree")},
                         {"color", "left", "right"}});
  d.declare_adt("NAT");
  d.declare_constructor({"NAT", "z", {}, {}});
  d.declare_constructor({"NAT", "succ", {TypeExpr::adt("NAT")}, {"pred"}});
  d.declare_adt("Statement");
  return d;
}

TypeExpr random_type(std::mt19937& rng, int depth) {
  static const TypeExpr atoms[] = {TypeExpr::top(),     TypeExpr::node(),    TypeExpr::bottom(),
                                   TypeExpr::boolean(), TypeExpr::integer(), TypeExpr::str(),
                                   TypeExpr::loc(),     TypeExpr::adt("NAT"), TypeExpr::adt("ColoredTree")};
  int choice = depth <= 0 ? 0 : static_cast<int>(rng() % 5);
  switch (choice) {
    case 0: return atoms[rng() % 9];
    case 1: return TypeExpr::list(random_type(rng, depth - 1));
    case 2: return TypeExpr::set(random_type(rng, depth - 1));
    case 3: return TypeExpr::map(random_type(rng, depth - 1), random_type(rng, depth - 1));
    default: return TypeExpr::tuple({random_type(rng, depth - 1), random_type(rng, depth - 1)});
  }
}

}  // namespace

TEST_SUITE("value") {
  TEST_CASE("typeOf") {
    auto d = tree_decls();
    CHECK(type_of(i(3), d) == TypeExpr::integer());
    CHECK(type_of(Value::set({}), d) == TypeExpr::set(TypeExpr::bottom()));
    CHECK(type_of(Value::node("ColoredTree", "leaf", {i(1)}), d) == TypeExpr::adt("ColoredTree"));
    CHECK(type_of(v("[1,\"a\"]"), d) == TypeExpr::list(TypeExpr::top()));
    CHECK(render_type(type_of(v("(\"a\":1)"), d)) == "map[str,int]");
  }

  TEST_CASE("subtypeOf") {
    auto d = tree_decls();
    CHECK(subtype_of(TypeExpr::bottom(), TypeExpr::adt("Statement"), d));
    CHECK(subtype_of(TypeExpr::adt("Tree"), TypeExpr::node(), d));
    CHECK(subtype_of(TypeExpr::list(TypeExpr::integer()), TypeExpr::list(TypeExpr::top()), d));
    CHECK_FALSE(subtype_of(TypeExpr::list(TypeExpr::top()), TypeExpr::list(TypeExpr::integer()), d));
    CHECK_FALSE(subtype_of(TypeExpr::str(), TypeExpr::integer(), d));
    CHECK_THROWS_AS(d.check(TypeExpr::adt("Nope")), Error);
  }

  TEST_CASE("subtype lattice laws on random types") {
    auto d = tree_decls();
    std::mt19937 rng(7);
    for (int n = 0; n < 1000; ++n) {
      TypeExpr a = random_type(rng, 3);
      TypeExpr b = random_type(rng, 3);
      TypeExpr c = random_type(rng, 3);
      CHECK(subtype_of(a, a, d));
      CHECK(subtype_of(TypeExpr::bottom(), a, d));
      CHECK(subtype_of(a, TypeExpr::top(), d));
      if (subtype_of(a, b, d) && subtype_of(b, c, d)) CHECK(subtype_of(a, c, d));
      TypeExpr l = lub(a, b);
      CHECK(subtype_of(a, l, d));
      CHECK(subtype_of(b, l, d));
    }
  }

  TEST_CASE("render") {
    CHECK(render(Value::list({i(1), i(2)})) == "[1,2]");
    CHECK(render(Value::node("NAT", "succ", {Value::node("NAT", "z", {})})) == "succ(z())");
    CHECK(render(Value::set({pair(2, 3), pair(1, 2)})) == "{<1,2>,<2,3>}");
    CHECK(render(Value::string("a\"b\\c\n")) == "\"a\\\"b\\\\c\\n\"");
    CHECK(render(Value::map({{Value::string("b"), i(2)}, {Value::string("a"), i(1)}})) == "(\"a\":1,\"b\":2)");
    CHECK(render(Value::unit()) == "<>");
  }

  TEST_CASE("parseValue") {
    CHECK(v("[1,2]") == Value::list({i(1), i(2)}));
    CHECK(v("{<1,2>}") == Value::set({pair(1, 2)}));
    auto d = tree_decls();
    CHECK(parse_value("succ(z())", &d) ==
          Value::node("NAT", "succ", {Value::node("NAT", "z", {})}));
    CHECK(v("123456789012345678901234567890").as_int() == BigInt("123456789012345678901234567890"));
    CHECK(v("-5") == i(-5));
    CHECK(v("()") == Value::map({}));
    CHECK(v(" [ true , false ] ") == Value::list({Value::boolean(true), Value::boolean(false)}));
  }

  TEST_CASE("parseValue reports the offset of malformed input") {
    try {
      parse_value("[1,,2]");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ValueSyntaxError);
      REQUIRE(e.where().has_value());
      CHECK(e.where()->offset == 3);
    }
    CHECK_THROWS_AS(parse_value("[1,2"), Error);
    CHECK_THROWS_AS(parse_value("\"open"), Error);
    CHECK_THROWS_AS(parse_value("1 2"), Error);
  }

  TEST_CASE("set algebra") {
    CHECK(set_union(v("{1}"), v("{2}")) == v("{1,2}"));
    CHECK(set_intersect(v("{1,2}"), v("{2,3}")) == v("{2}"));
    CHECK(set_diff(v("{1,2}"), v("{2}")) == v("{1}"));
    CHECK(set_insert(v("{1}"), i(1)) == v("{1}"));
    CHECK(set_contains(v("{1,2}"), i(2)));
    CHECK(v("{1,1,2}").arity() == 2);
  }

  TEST_CASE("map operations") {
    Value m = v("(\"a\":1)");
    CHECK(map_lookup(m, Value::string("a")) == i(1));
    CHECK_FALSE(map_lookup(m, Value::string("b")).has_value());
    Value m2 = map_put(m, Value::string("a"), i(5));
    CHECK(render(m2) == "(\"a\":5)");
    CHECK(render(m) == "(\"a\":1)");
  }

  TEST_CASE("relations") {
    CHECK(compose(v("{<1,2>}"), v("{<2,3>}")) == v("{<1,3>}"));
    CHECK(compose(v("{}"), v("{<1,2>}")) == v("{}"));
    CHECK(compose(v("{<1,2>,<2,3>}"), v("{<2,3>,<3,4>}")) == v("{<1,3>,<2,4>}"));
    CHECK_THROWS_AS(compose(v("{<1,2,3>}"), v("{<1,2>}")), Error);
    CHECK(transitive_closure(v("{<1,2>,<2,3>}")) == v("{<1,2>,<2,3>,<1,3>}"));
    CHECK(transitive_closure(v("{}")) == v("{}"));
    CHECK(transitive_closure(v("{<1,1>}")) == v("{<1,1>}"));
    CHECK(rel_image(v("{<1,2>,<1,3>}"), i(1)) == v("{2,3}"));
    CHECK(rel_image(v("{<1,2>}"), i(9)) == v("{}"));
    CHECK(rel_image(v("{<\"a\",\"b\">}"), Value::string("a")) == v("{\"b\"}"));
    CHECK(carrier(v("{<1,2>,<2,3>}")) == v("{1,2,3}"));
    CHECK(reflexive_transitive_closure(v("{<1,2>}")) == v("{<1,1>,<1,2>,<2,2>}"));
  }

  TEST_CASE("closure idempotence and agreement with naive iteration") {
    std::mt19937 rng(11);
    for (int n = 0; n < 50; ++n) {
      auto r = test::random_relation(rng, 50, 10);
      Value c = transitive_closure(test::relation_value(r));
      CHECK(c == test::relation_value(test::naive_closure(r)));
      CHECK(transitive_closure(c) == c);
    }
  }

  TEST_CASE("set canonicalization is independent of insertion order") {
    std::vector<Value> elems = {i(3), Value::string("x"), v("[1]"), Value::boolean(true), pair(1, 2)};
    Value first = Value::set(elems);
    std::sort(elems.begin(), elems.end());
    do {
      Value s = Value::set(elems);
      CHECK(s == first);
      CHECK(render(s) == render(first));
    } while (std::next_permutation(elems.begin(), elems.end()));
  }

  TEST_CASE("kind order") {
    std::vector<Value> by_kind = {Value::boolean(true), i(0), Value::string(""),
                                  Value::location({"x", 0, 0}), Value::unit(), Value::list({}),
                                  Value::set({}), Value::map({}), Value::node("", "a", {})};
    CHECK(std::is_sorted(by_kind.begin(), by_kind.end()));
  }

  TEST_CASE("round trip on random values") {
    test::ValueGen gen(3);
    for (int n = 0; n < 300; ++n) {
      Value x = gen.any(5);
      CHECK(parse_value(render(x)) == x);
    }
  }
}
