#pragma once

// Oracles and random generators shared by the unit and acceptance tests.
// Nothing here calls into the interpreter's own algorithms: each oracle is
// written out directly so that it can be compared against the library.

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mrl/interpreter.hpp"
#include "mrl/value.hpp"

namespace mrl::test {

inline std::filesystem::path corpus_dir() { return MRL_CORPUS_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Peano numerals of the corpus data type NAT.
inline Value nat(int n) {
  Value v = Value::node("NAT", "z", {});
  for (int i = 0; i < n; ++i) v = Value::node("NAT", "succ", {v});
  return v;
}

// Random closure-free values of bounded depth.
class ValueGen {
 public:
  explicit ValueGen(unsigned seed) : rng_(seed) {}

  Value any(int depth) {
    int top = depth <= 0 ? 4 : 9;
    switch (pick(top)) {
      case 0: return Value::boolean(pick(2) == 1);
      case 1: return integer();
      case 2: return Value::string(text());
      case 3: return Value::location(Location{"file:///" + word(), static_cast<std::uint64_t>(pick(100)),
                                              static_cast<std::uint64_t>(pick(20))});
      case 4: return Value::tuple(children(depth, 1));
      case 5: return Value::list(children(depth, 0));
      case 6: return Value::set(children(depth, 0));
      case 7: {
        std::vector<MapEntry> entries;
        for (auto& k : children(depth, 0)) entries.emplace_back(k, any(depth - 1));
        return Value::map(std::move(entries));
      }
      default: return Value::node("", word(), children(depth, 0));
    }
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::mt19937& rng() { return rng_; }

 private:
  Value integer() {
    if (pick(5) == 0) {
      // Beyond 64 bits.
      BigInt b = 1;
      for (int i = 0; i < 3; ++i) b *= BigInt(1000000007LL);
      return Value::integer(pick(2) ? b : BigInt(-b));
    }
    return Value::integer(static_cast<long long>(pick(2001)) - 1000);
  }

  std::string word() {
    static const char* words[] = {"a", "leaf", "node", "pair", "x1", "fooBar", "z"};
    return words[pick(7)];
  }

  std::string text() {
    static const char* parts[] = {"", "abc", " ", "\"", "\\", "\n", "\t", "<", ">", "é", "日本", "'", "$"};
    std::string s;
    for (int i = pick(4); i > 0; --i) s += parts[pick(13)];
    return s;
  }

  std::vector<Value> children(int depth, int min) {
    std::vector<Value> out;
    for (int i = min + pick(4 - min); i > 0; --i) out.push_back(any(depth - 1));
    return out;
  }

  std::mt19937 rng_;
};

// ColoredTree values and a direct count of composite nodes per colour.
inline Value random_colored_tree(std::mt19937& rng, int depth) {
  static const char* colors[] = {"red", "blue", "green", "black"};
  std::uniform_int_distribution<int> coin(0, 2);
  if (depth <= 0 || coin(rng) == 0) {
    return Value::node("ColoredTree", "leaf", {Value::integer(static_cast<long long>(rng() % 100))});
  }
  std::string c = colors[rng() % 4];
  Value l = random_colored_tree(rng, depth - 1);
  Value r = random_colored_tree(rng, depth - 1);
  return Value::node("ColoredTree", "composite", {Value::string(c), l, r});
}

inline void count_colors(const Value& t, std::map<std::string, long long>& out) {
  if (t.ctor() != "composite") return;
  out[t.args()[0].as_str()] += 1;
  count_colors(t.args()[1], out);
  count_colors(t.args()[2], out);
}

inline Value color_map(const std::map<std::string, long long>& counts) {
  std::vector<MapEntry> entries;
  for (const auto& [k, n] : counts) entries.emplace_back(Value::string(k), Value::integer(n));
  return Value::map(std::move(entries));
}

// Binary relations over small integers and the naive closure by iteration.
using Pairs = std::set<std::pair<int, int>>;

inline Pairs random_relation(std::mt19937& rng, std::size_t max_tuples, int domain) {
  Pairs r;
  std::size_t n = rng() % (max_tuples + 1);
  for (std::size_t i = 0; i < n; ++i) {
    r.emplace(static_cast<int>(rng() % domain), static_cast<int>(rng() % domain));
  }
  return r;
}

inline Pairs naive_closure(Pairs r) {
  while (true) {
    Pairs next = r;
    for (const auto& [a, b] : r) {
      for (const auto& [c, d] : r) {
        if (b == c) next.emplace(a, d);
      }
    }
    if (next == r) return r;
    r = std::move(next);
  }
}

inline Value relation_value(const Pairs& r) {
  std::vector<Value> out;
  for (const auto& [a, b] : r) out.push_back(Value::tuple({Value::integer(a), Value::integer(b)}));
  return Value::set(std::move(out));
}

// Terms over z, succ and add, and a leftmost-innermost rewriter for
//   add(x, z()) -> x
//   add(x, succ(y)) -> succ(add(x, y))
inline Value random_add_term(std::mt19937& rng, int depth) {
  int choice = depth <= 0 ? 0 : static_cast<int>(rng() % 3);
  switch (choice) {
    case 0: return Value::node("NAT", "z", {});
    case 1: return Value::node("NAT", "succ", {random_add_term(rng, depth - 1)});
    default:
      return Value::node("NAT", "add", {random_add_term(rng, depth - 1), random_add_term(rng, depth - 1)});
  }
}

inline std::optional<Value> rewrite_root(const Value& t) {
  if (t.ctor() != "add") return std::nullopt;
  const Value& x = t.args()[0];
  const Value& y = t.args()[1];
  if (y.ctor() == "z") return x;
  if (y.ctor() == "succ") {
    return Value::node("NAT", "succ", {Value::node("NAT", "add", {x, y.args()[0]})});
  }
  return std::nullopt;
}

// One leftmost-innermost step, or nullopt when `t` is in normal form.
inline std::optional<Value> innermost_step(const Value& t) {
  std::vector<Value> args(t.args().begin(), t.args().end());
  for (auto& a : args) {
    if (auto r = innermost_step(a)) {
      a = *r;
      return Value::node(t.adt(), t.ctor(), std::move(args));
    }
  }
  return rewrite_root(t);
}

inline Value innermost_normal_form(Value t) {
  while (auto next = innermost_step(t)) t = *next;
  return t;
}

// Derivation count of E = E "+" E | "a" over `s`, by splitting on every '+'.
inline std::uint64_t count_sum_derivations(const std::string& s, std::size_t i, std::size_t j) {
  if (j - i == 1 && s[i] == 'a') return 1;
  std::uint64_t total = 0;
  for (std::size_t k = i + 1; k + 1 < j; ++k) {
    if (s[k] == '+') total += count_sum_derivations(s, i, k) * count_sum_derivations(s, k + 1, j);
  }
  return total;
}

}  // namespace mrl::test
