#include <doctest.h>

#include <algorithm>

#include "mrl/grammar.hpp"
#include "support.hpp"

using namespace mrl;

namespace {

Grammar grammar_of(const std::string& body) {
  Interpreter in;
  in.load_source("module g;\n" + body, "g.mrl");
  return in.grammar();
}

// Parse-tree helpers.
const Value& prod_of(const Value& t) { return t.args()[0]; }
std::string label_of(const Value& t) { return prod_of(t).args()[1].as_str(); }
std::string kind_of(const Value& t) { return prod_of(t).args()[3].as_str(); }
std::span<const Value> kids(const Value& t) { return t.args()[1].elements(); }

// Drops the layout wrapper that a start symbol gets when layout is declared.
const Value& unwrap(const Value& t) { return kind_of(t) == "start" ? kids(t)[1] : t; }

// Brute-force derivation count for tiny grammars given as
// nonterminal -> alternatives, where an alternative is a list of symbols
// and a symbol is either a nonterminal name or a quoted literal.
using Alt = std::vector<std::string>;
using Rules = std::map<std::string, std::vector<Alt>>;

struct BruteCounter {
  const Rules& rules;
  const std::string& s;
  std::set<std::tuple<std::string, std::size_t, std::size_t>> path;

  std::uint64_t nt(const std::string& n, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(n, i, j);
    if (path.count(key)) return 0;
    path.insert(key);
    std::uint64_t total = 0;
    for (const auto& alt : rules.at(n)) total += seq(alt, 0, i, j);
    path.erase(key);
    return total;
  }

  std::uint64_t seq(const Alt& alt, std::size_t m, std::size_t k, std::size_t j) {
    if (m == alt.size()) return k == j ? 1 : 0;
    const std::string& sym = alt[m];
    if (sym[0] == '"') {
      std::string lit = sym.substr(1, sym.size() - 2);
      if (s.compare(k, lit.size(), lit) != 0 || k + lit.size() > j) return 0;
      return seq(alt, m + 1, k + lit.size(), j);
    }
    std::uint64_t total = 0;
    for (std::size_t l = k; l <= j; ++l) {
      std::uint64_t here = nt(sym, k, l);
      if (here) total += here * seq(alt, m + 1, l, j);
    }
    return total;
  }
};

std::string rules_source(const Rules& rules) {
  std::string out;
  for (const auto& [n, alts] : rules) {
    out += "syntax " + n + " =";
    for (std::size_t a = 0; a < alts.size(); ++a) {
      out += a ? " |" : "";
      for (const auto& sym : alts[a]) out += " " + sym;
    }
    out += ";\n";
  }
  return out;
}

}  // namespace

TEST_SUITE("grammar") {
  TEST_CASE("the Entities grammar unions its imported modules") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    const Grammar& g = in.grammar();
    std::set<std::string> labels;
    for (const auto& p : g.productions()) labels.insert(p.label);
    for (const char* l : {"entities", "entity", "field", "primitive", "reference", "name", "string", "currency"}) {
      CHECK(labels.count(l) == 1);
    }
    CHECK(g.layout() == std::optional<std::string>("Whitespace"));
    CHECK(g.start_symbols() == std::set<std::string>{"Entities"});
    CHECK(g.nonterminals().count("Ident") == 1);
  }

  TEST_CASE("an empty grammar has no productions") {
    try {
      Grammar g = compile_grammar({});
      g.parse("S", "");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoProductions);
    }
  }

  TEST_CASE("identical rules from two sources collapse") {
    SyntaxDecl d;
    d.name = "S";
    d.alternatives.push_back({"s", {Symbol::lit("a")}});
    SyntaxDecl other = d;
    other.alternatives.push_back({"t", {Symbol::lit("b")}});
    for (auto decls : {std::vector<SyntaxDecl>{d, other}, std::vector<SyntaxDecl>{other, d}}) {
      Grammar g = compile_grammar(decls);
      CHECK(g.productions().size() == 2);
      CHECK(unparse(g.parse("S", "a")) == "a");
    }
  }

  TEST_CASE("grammar validation errors") {
    auto kind_for = [](const std::string& src) {
      try {
        Grammar g = grammar_of(src);
        g.parse("S", "a");
      } catch (const Error& e) {
        return e.kind();
      }
      return ErrorKind::SyntaxError;
    };
    CHECK(kind_for("syntax S = T;") == ErrorKind::UnknownSymbol);
    CHECK(kind_for("syntax S = x: \"a\" | x: \"b\";") == ErrorKind::DuplicateLabel);
    CHECK(kind_for("syntax S = \"a\";\nlayout L = [\\ ]*;\nlayout M = [\\t]*;") == ErrorKind::MultipleLayoutDecls);
  }

  TEST_CASE("right recursion gives a right-nested chain") {
    Grammar g = grammar_of("syntax S = more: \"a\" S | one: \"a\";");
    Value t = g.parse("S", "aaa");
    int depth = 0;
    const Value* cur = &t;
    while (true) {
      ++depth;
      if (label_of(*cur) == "one") break;
      CHECK(label_of(*cur) == "more");
      cur = &kids(*cur)[1];
    }
    CHECK(depth == 3);
    CHECK(g.count_derivations("S", "aaa") == 1);
  }

  TEST_CASE("ambiguous sums report two derivations") {
    Grammar g = grammar_of("syntax E = E \"+\" E | \"a\";");
    try {
      g.parse("E", "a+a+a");
      FAIL("no AmbiguityError");
    } catch (const AmbiguityError& e) {
      CHECK(e.count() == 2);
      CHECK(e.first() != e.second());
      CHECK(std::string(e.what()).find("AmbiguityError") != std::string::npos);
    }
    Value first = g.parse("E", "a+a+a", AmbiguityPolicy::First);
    CHECK(unparse(first) == "a+a+a");
    // Deterministic: the same tree every time.
    CHECK(g.parse("E", "a+a+a", AmbiguityPolicy::First) == first);
  }

  TEST_CASE("parse errors carry the failing offset") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    try {
      in.grammar().parse("Entities", "entity Person { string name");
      FAIL("no ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      REQUIRE(e.where().has_value());
      CHECK(e.where()->offset == 27);
    }
    CHECK_THROWS_AS(in.grammar().parse("Entities", "entity person {}"), Error);
  }

  TEST_CASE("Entity parses to a tree labeled entity") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    Value t = unwrap(in.grammar().parse("Entity", "entity Person { string name }"));
    CHECK(label_of(t) == "entity");
    CHECK(parse_tree_sort(t) == "Entity");
  }

  TEST_CASE("implode maps labeled productions to constructors") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    Value tree = in.grammar().parse("Entities", "entity Person { string name }");
    Value ast = implode(tree, in.declarations());
    CHECK(ast == in.read_value("entities([entity(name(\"Person\"), [field(primitive(string()),\"name\")])])"));
    CHECK(ast.adt() == "Entities");
  }

  TEST_CASE("implode turns digit tokens into integers under int slots") {
    Interpreter in;
    in.load_source(R"(module nums;
syntax Num = num: Digits digits;
lexical Digits = [0-9]+;
syntax Opt = opt: Digits? mark "!";
data Num = num(int digits);
data Opt = opt(list[int] mark);
)",
                   "nums.mrl");
    CHECK(implode(in.grammar().parse("Num", "42"), in.declarations()) == in.read_value("num(42)"));
    CHECK(implode(in.grammar().parse("Opt", "7!"), in.declarations()) == in.read_value("opt([7])"));
    CHECK(implode(in.grammar().parse("Opt", "!"), in.declarations()) == in.read_value("opt([])"));
  }

  TEST_CASE("implode without a matching constructor fails") {
    Interpreter in;
    in.load_source("module q;\nsyntax Q = q: \"q\";\n", "q.mrl");
    try {
      implode(in.grammar().parse("Q", "q"), in.declarations());
      FAIL("no ImplodeError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ImplodeError);
      CHECK(e.detail().find("q") != std::string::npos);
    }
  }

  TEST_CASE("yield and locations are preserved") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    for (std::string src : {"entity A{}", " entity A { integer x boolean y }\n", "entity Car {\n  Person owner\n}"}) {
      Value t = in.grammar().parse("Entities", src);
      CHECK(unparse(t) == src);
      const Location& l = t.args()[2].as_loc();
      CHECK(l.offset == 0);
      CHECK(l.length == src.size());
      CHECK(in.grammar().parse("Entities", unparse(t)) == t);
    }
  }

  TEST_CASE("layout between tokens does not change the AST") {
    Interpreter in;
    in.load_file(test::corpus_dir() / "entities.mrl");
    Value a = in.call("load", {Value::string("entity   Person{string name}")});
    Value b = in.call("load", {Value::string("entity Person { string name }")});
    CHECK(a == b);
  }

  TEST_CASE("the grammar S = S S | a | empty is handled") {
    Rules rules = {{"S", {{"S", "S"}, {"\"a\""}, {}}}};
    Grammar g = grammar_of(rules_source(rules));
    for (std::size_t n = 0; n <= 10; ++n) {
      std::string input(n, 'a');
      BruteCounter brute{rules, input, {}};
      std::uint64_t want = brute.nt("S", 0, n);
      CHECK(g.count_derivations("S", input) == want);
      Value t = g.parse("S", input, AmbiguityPolicy::First);
      CHECK(unparse(t) == input);
    }
  }

  TEST_CASE("ambiguity is reported exactly when there are several derivations") {
    std::mt19937 rng(99);
    const std::vector<std::string> symbols = {"A", "B", "\"a\"", "\"b\""};
    int ambiguous = 0;
    int unique = 0;
    for (int gi = 0; gi < 50; ++gi) {
      Rules rules;
      for (const char* n : {"A", "B"}) {
        std::size_t alts = 1 + rng() % 3;
        for (std::size_t a = 0; a < alts; ++a) {
          Alt alt;
          for (std::size_t len = rng() % 4; len > 0; --len) alt.push_back(symbols[rng() % 4]);
          // Identical alternatives are one production.
          auto& existing = rules[n];
          if (std::find(existing.begin(), existing.end(), alt) == existing.end()) existing.push_back(alt);
        }
      }
      Grammar g = grammar_of(rules_source(rules));
      for (int k = 0; k < 6; ++k) {
        std::string input;
        for (std::size_t len = rng() % 5; len > 0; --len) input += (rng() % 2) ? 'a' : 'b';
        BruteCounter brute{rules, input, {}};
        std::uint64_t want = brute.nt("A", 0, input.size());
        INFO(rules_source(rules), "input: ", input);
        try {
          Value t = g.parse("A", input);
          CHECK(want == 1);
          CHECK(unparse(t) == input);
          ++unique;
        } catch (const AmbiguityError& e) {
          CHECK(want > 1);
          CHECK(e.count() == want);
          ++ambiguous;
        } catch (const Error& e) {
          CHECK(e.kind() == ErrorKind::ParseError);
          CHECK(want == 0);
        }
      }
    }
    // The sample exercises both outcomes.
    CHECK(ambiguous > 0);
    CHECK(unique > 0);
  }

  TEST_CASE("character classes cover Unicode scalars") {
    Grammar g = grammar_of("lexical W = [α-ω]+;");
    Value t = g.parse("W", "αβγ");
    CHECK(unparse(t) == "αβγ");
    CHECK(t.args()[2].as_loc().length == 3);
    CHECK_THROWS_AS(g.parse("W", "abc"), Error);
  }
}
