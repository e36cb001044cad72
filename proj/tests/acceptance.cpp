// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <functional>
#include <iostream>

#include "mrl/grammar.hpp"
#include "mrl/pattern.hpp"
#include "support.hpp"

using namespace mrl;
using namespace mrl::test;

namespace {

// Pinned limits.
constexpr double kPeanoSeconds = 5.0;
constexpr int kPeanoMax = 20;
constexpr int kRandomTrees = 100;
constexpr int kTreeDepth = 8;
constexpr int kRelations = 50;
constexpr std::size_t kMaxTuples = 50;
constexpr int kRelationDomain = 12;
constexpr std::size_t kMaxListLength = 12;
constexpr int kRoundTripValues = 1000;
constexpr int kValueDepth = 6;
constexpr int kRewriteTerms = 100;
constexpr int kTermDepth = 8;
constexpr unsigned kSeed = 20240611;

struct Failure {
  std::string why;
};

void require(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

std::unique_ptr<Interpreter> load(const std::string& file, Options options = {}) {
  auto in = std::make_unique<Interpreter>(std::move(options));
  in->load_file(corpus_dir() / file);
  return in;
}

void peano_agreement() {
  auto in = load("peano.mrl");
  auto start = std::chrono::steady_clock::now();
  for (int n = 0; n <= kPeanoMax; ++n) {
    for (int m = 0; m <= kPeanoMax; ++m) {
      Value want = nat(n + m);
      for (const char* f : {"add1", "add2"}) {
        Value got = in->call(f, {nat(n), nat(m)});
        require(got == want, std::string(f) + "(" + std::to_string(n) + ", " + std::to_string(m) +
                                 ") = " + render(got));
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(secs < kPeanoSeconds, "took " + std::to_string(secs) + " s");
}

void colored_tree_distribution() {
  auto in = load("colored_tree.mrl");
  std::mt19937 rng(kSeed);
  for (int i = 0; i < kRandomTrees; ++i) {
    Value t = random_colored_tree(rng, kTreeDepth);
    std::map<std::string, long long> counts;
    count_colors(t, counts);
    Value got = in->call("colorDistribution", {t});
    require(got == color_map(counts), render(t) + " gave " + render(got));
  }
}

void entities_end_to_end() {
  auto in = load("entities.mrl");
  Value out = in->call("personJava", {});
  require(out.is(Kind::Str), "personJava did not return a string");
  const std::string& text = out.as_str();
  require(text.find("public class Person {") != std::string::npos, "missing class header");
  require(text.find("private String name;") != std::string::npos, "missing private field");
  require(text.find("public String getName() {") != std::string::npos, "missing getter");
  require(text.find("public void setName(String name) {") != std::string::npos, "missing setter");
  require(text == read_file(corpus_dir() / "person.java.golden"), "differs from golden file:\n" + text);

  // Every field of a larger model gets a matched getter and setter.
  Value model = in->call("modelJava", {Value::string("entity Car { date built integer doors Person owner }")});
  for (std::string f : {"Built", "Doors", "Owner"}) {
    require(model.as_str().find(" get" + f + "()") != std::string::npos, "no getter for " + f);
    require(model.as_str().find(" set" + f + "(") != std::string::npos, "no setter for " + f);
  }
}

void closure_correctness() {
  auto in = load("closure.mrl");
  std::mt19937 rng(kSeed);
  for (int i = 0; i < kRelations; ++i) {
    Pairs r = random_relation(rng, kMaxTuples, kRelationDomain);
    Value want = relation_value(naive_closure(r));
    Value rel = relation_value(r);
    require(transitive_closure(rel) == want, "transitive_closure of " + render(rel));
    require(in->call("closure", {rel}) == want, "solve closure of " + render(rel));
  }
}

std::vector<Bindings> all_matches(const Pattern& p, const Value& v) {
  Declarations decls;
  std::vector<Bindings> out;
  for (auto& b : match_all(p, v, Bindings{}, decls)) out.push_back(b);
  return out;
}

void list_match_completeness() {
  for (std::size_t n = 0; n <= kMaxListLength; ++n) {
    std::vector<Value> elems;
    for (std::size_t i = 0; i < n; ++i) elems.push_back(Value::integer(static_cast<long long>(i)));
    Value subject = Value::list(elems);

    auto splits = all_matches(Pattern::list({Pattern::multi("a"), Pattern::multi("b")}), subject);
    require(splits.size() == n + 1, "[*a, *b] over length " + std::to_string(n) + " gave " +
                                        std::to_string(splits.size()));
    for (std::size_t k = 0; k < splits.size(); ++k) {
      const Value* a = splits[k].find("a");
      const Value* b = splits[k].find("b");
      require(a && b && a->arity() == k && b->arity() == n - k, "split order at length " + std::to_string(n));
    }

    auto picks = all_matches(Pattern::list({Pattern::multi("a"), Pattern::var("x"), Pattern::multi("b")}), subject);
    require(picks.size() == n, "[*a, x, *b] over length " + std::to_string(n) + " gave " +
                                   std::to_string(picks.size()));
    for (std::size_t k = 0; k < picks.size(); ++k) {
      require(*picks[k].find("x") == elems[k], "x order at length " + std::to_string(n));
    }
  }
}

void ambiguity_detection() {
  Interpreter in;
  in.load_source("module sums;\nsyntax E = E \"+\" E | \"a\";\n", "sums.mrl");
  const Grammar& g = in.grammar();
  const std::string input = "a+a+a";
  std::uint64_t brute = count_sum_derivations(input, 0, input.size());
  require(brute == 2, "brute-force counter gave " + std::to_string(brute));
  require(g.count_derivations("E", input) == brute, "count_derivations disagrees");
  try {
    g.parse("E", input, AmbiguityPolicy::Error);
    require(false, "no AmbiguityError");
  } catch (const AmbiguityError& e) {
    require(e.count() == 2, "reported " + std::to_string(e.count()) + " derivations");
  }
  Value tree = g.parse("E", input, AmbiguityPolicy::First);
  require(unparse(tree) == input, "first-policy yield is " + unparse(tree));
}

void round_trips() {
  ValueGen gen(kSeed);
  for (int i = 0; i < kRoundTripValues; ++i) {
    Value v = gen.any(kValueDepth);
    std::string text = render(v);
    require(parse_value(text) == v, "value did not survive: " + text);
  }
  auto in = load("entities.mrl");
  const Grammar& g = in->grammar();
  for (std::string src : {"entity Person { string name }", "entity   Person{string name}",
                          "entity Car {\n  date built\n  Person owner\n}\n\nentity Person { currency salary }",
                          "", "  entity E{}  "}) {
    Value t = g.parse("Entities", src);
    std::string back = unparse(t);
    require(back == src, "unparse changed the text of: " + src);
    require(g.parse("Entities", back) == t, "re-parse differs for: " + src);
  }
}

void backtracking() {
  Interpreter in;
  in.load_source(R"(module bt;
int defaultRuns = 0;
int kind(int x) { if (x < 0) fail; return 1; }
int kind(0) { return 0; }
default int kind(int x) { defaultRuns += 1; return 2; }
int runs() = defaultRuns;

list[value] restore() {
  x = 0;
  list[value] seen = [];
  if ([*a, *b] := [1, 2, 3]) {
    seen += [<x, y ? "unbound", size(seen)>];
    x = size(a);
    y = "bound";
    if (size(a) < 2) fail;
    return seen + [x];
  }
  return [];
}
)",
                 "bt.mrl");
  Value r = in.call("restore", {});
  Value want = parse_value(R"([<0,"unbound",0>,2])");
  require(r == want, "restore() gave " + render(r));

  for (int x = 1; x <= 20; ++x) {
    require(in.call("kind", {Value::integer(x)}) == Value::integer(1), "kind(" + std::to_string(x) + ")");
  }
  require(in.call("runs", {}) == Value::integer(0), "default ran although a non-default matched");
  require(in.call("kind", {Value::integer(-4)}) == Value::integer(2), "kind(-4) did not fall back");
  require(in.call("runs", {}) == Value::integer(1), "default did not run exactly once");
}

void rewriting_equivalence() {
  auto in = load("rewrite.mrl");
  std::mt19937 rng(kSeed);
  for (int i = 0; i < kRewriteTerms; ++i) {
    Value t = random_add_term(rng, kTermDepth);
    Value want = innermost_normal_form(t);
    Value got = in->call("normalize", {t});
    require(got == want, "innermost normal form of " + render(t) + " was " + render(got));
    require(in->call("normalizeBottomUp", {t}) == want, "bottom-up normal form of " + render(t));
  }
}

void budgets() {
  for (std::uint64_t bound : {1ULL, 2ULL, 7ULL, 100ULL, 2500ULL}) {
    Options options;
    options.solve_budget = bound;
    auto in = load("closure.mrl", options);
    require(in->call("iterationsUntilBudget", {}) == Value::integer(static_cast<long long>(bound)),
            "body runs differ from bound " + std::to_string(bound));
    try {
      in->call("diverge", {});
      require(false, "diverge() returned");
    } catch (const Error& e) {
      require(e.kind() == ErrorKind::FixpointBudgetExceeded, std::string("raised ") + e.what());
      require(e.detail().find(" " + std::to_string(bound) + " ") != std::string::npos,
              "message does not name the bound: " + e.detail());
    }
    try {
      in->call("divergeWithin", {Value::integer(static_cast<long long>(bound))});
      require(false, "divergeWithin() returned");
    } catch (const Error& e) {
      require(e.kind() == ErrorKind::FixpointBudgetExceeded, std::string("raised ") + e.what());
    }
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"peano-agreement", peano_agreement},
      {"colored-tree-distribution", colored_tree_distribution},
      {"entities-end-to-end", entities_end_to_end},
      {"closure-correctness", closure_correctness},
      {"list-match-completeness", list_match_completeness},
      {"ambiguity-detection", ambiguity_detection},
      {"round-trips", round_trips},
      {"backtracking", backtracking},
      {"rewriting-equivalence", rewriting_equivalence},
      {"budgets", budgets},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    std::string why;
    try {
      check();
    } catch (const Failure& f) {
      why = f.why;
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::cout << "PASS " << name << "\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << why << "\n";
    }
  }
  return failed == 0 ? 0 : 1;
}
