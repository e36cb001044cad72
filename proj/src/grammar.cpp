#include "mrl/grammar.hpp"

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "mrl/utf8.hpp"

namespace mrl {

// ---------------------------------------------------------------------------
// Symbols and productions

Symbol Symbol::lit(std::string_view utf8) {
  Symbol s;
  s.kind = Kind::Lit;
  s.text = utf8::decode(utf8);
  return s;
}

Symbol Symbol::cls(std::vector<CharRange> ranges) {
  Symbol s;
  s.kind = Kind::Class;
  s.ranges = std::move(ranges);
  return s;
}

Symbol Symbol::nt(std::string name) {
  Symbol s;
  s.kind = Kind::NT;
  s.name = std::move(name);
  return s;
}

namespace {
Symbol regular(Symbol::Kind k, Symbol inner) {
  Symbol s;
  s.kind = k;
  s.inner.push_back(std::move(inner));
  return s;
}
}  // namespace

Symbol Symbol::star(Symbol s) { return regular(Kind::Star, std::move(s)); }
Symbol Symbol::plus(Symbol s) { return regular(Kind::Plus, std::move(s)); }
Symbol Symbol::opt(Symbol s) { return regular(Kind::Opt, std::move(s)); }

bool Symbol::same_as(const Symbol& o) const {
  if (kind != o.kind || text != o.text || ranges != o.ranges || name != o.name ||
      inner.size() != o.inner.size()) {
    return false;
  }
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (!inner[i].same_as(o.inner[i])) return false;
  }
  return true;
}

bool Production::same_as(const Production& o) const {
  if (lhs != o.lhs || label != o.label || kind != o.kind || body.size() != o.body.size()) return false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (!body[i].same_as(o.body[i])) return false;
  }
  return true;
}

namespace {

void append_class_char(std::string& out, char32_t c) {
  switch (c) {
    case ' ': out += "\\ "; return;
    case '\t': out += "\\t"; return;
    case '\n': out += "\\n"; return;
    case '\r': out += "\\r"; return;
    case '\\': out += "\\\\"; return;
    case ']': out += "\\]"; return;
    case '[': out += "\\["; return;
    case '-': out += "\\-"; return;
    default: utf8::append(out, c);
  }
}

std::string render_ranges(const std::vector<CharRange>& ranges) {
  std::string out = "[";
  for (const auto& r : ranges) {
    append_class_char(out, r.lo);
    if (r.hi != r.lo) {
      out += '-';
      append_class_char(out, r.hi);
    }
  }
  return out + "]";
}

}  // namespace

std::string render_symbol(const Symbol& s) {
  switch (s.kind) {
    case Symbol::Kind::Lit: {
      std::string out = "\"";
      for (char32_t c : s.text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '<') out += '\\';
        utf8::append(out, c);
      }
      return out + "\"";
    }
    case Symbol::Kind::Class: return render_ranges(s.ranges);
    case Symbol::Kind::NT: return s.name;
    case Symbol::Kind::Star: return render_symbol(s.inner[0]) + "*";
    case Symbol::Kind::Plus: return render_symbol(s.inner[0]) + "+";
    case Symbol::Kind::Opt: return render_symbol(s.inner[0]) + "?";
  }
  return "?";
}

AmbiguityError::AmbiguityError(std::uint64_t count, std::string first, std::string second,
                               SourceSpan where)
    : Error(ErrorKind::AmbiguityError,
            std::to_string(count) + " derivations, e.g. " + first + " and " + second,
            std::move(where)),
      count_(count),
      first_(std::move(first)),
      second_(std::move(second)) {}

// ---------------------------------------------------------------------------
// Compiled form

namespace detail {

struct ISym {
  enum class K { Lit, Class, NT } k = K::Lit;
  std::u32string text;
  std::vector<CharRange> ranges;
  int nt = -1;
};

struct IProd {
  int lhs = -1;
  std::vector<ISym> body;
  int source = -1;  // index into CompiledGrammar::productions for user productions
};

enum class NtRole { User, Regular, Start };

struct INt {
  std::string name;
  NtRole role = NtRole::User;
  ProductionKind kind = ProductionKind::Syntax;
  Symbol regular;
  std::vector<int> prods;
  bool nullable = false;
  Value prod_value;  // for Regular and Start
};

struct CompiledGrammar {
  std::vector<Production> productions;
  std::set<std::string> nonterminals;
  std::optional<std::string> layout;
  std::set<std::string> starts;

  std::vector<INt> nts;
  std::vector<IProd> prods;
  std::vector<Value> prod_values;  // parallel to productions
  std::unordered_map<std::string, int> user_nt;
  std::unordered_map<std::string, int> regular_nt;
  std::unordered_map<int, int> start_nt;  // user nt -> wrapper
  int layout_nt = -1;
};

}  // namespace detail

using detail::CompiledGrammar;
using detail::INt;
using detail::IProd;
using detail::ISym;
using detail::NtRole;

namespace {

const char* kind_name(ProductionKind k) {
  switch (k) {
    case ProductionKind::Syntax: return "syntax";
    case ProductionKind::Lexical: return "lexical";
    case ProductionKind::Layout: return "layout";
  }
  return "syntax";
}

Value symbol_value(const Symbol& s) {
  switch (s.kind) {
    case Symbol::Kind::Lit: return Value::node("Symbol", "lit", {Value::string(utf8::encode(s.text))});
    case Symbol::Kind::Class: return Value::node("Symbol", "cc", {Value::string(render_ranges(s.ranges))});
    case Symbol::Kind::NT: return Value::node("Symbol", "sort", {Value::string(s.name)});
    case Symbol::Kind::Star: return Value::node("Symbol", "star", {symbol_value(s.inner[0])});
    case Symbol::Kind::Plus: return Value::node("Symbol", "plus", {symbol_value(s.inner[0])});
    case Symbol::Kind::Opt: return Value::node("Symbol", "opt", {symbol_value(s.inner[0])});
  }
  return Value();
}

Value production_value(const std::string& sort, const std::string& label,
                       std::vector<Value> symbols, const char* kind) {
  return Value::node("Production", "prod",
                     {Value::string(sort), Value::string(label), Value::list(std::move(symbols)),
                      Value::string(kind)});
}

void check_symbols(const Symbol& s, const std::set<std::string>& nts, const Production& p) {
  if (s.kind == Symbol::Kind::NT && !nts.count(s.name)) {
    throw Error(ErrorKind::UnknownSymbol, s.name + " in production for " + p.lhs);
  }
  for (const auto& i : s.inner) check_symbols(i, nts, p);
}

class Builder {
 public:
  explicit Builder(CompiledGrammar& g) : g_(g) {}

  void build() {
    for (const auto& p : g_.productions) user_nt(p.lhs, p.kind);
    if (g_.layout) g_.layout_nt = g_.user_nt.at(*g_.layout);
    for (std::size_t i = 0; i < g_.productions.size(); ++i) {
      const auto& p = g_.productions[i];
      IProd ip;
      ip.lhs = g_.user_nt.at(p.lhs);
      ip.source = static_cast<int>(i);
      for (const auto& s : p.body) translate(s, !p.lexical(), ip.body);
      add_prod(std::move(ip));

      std::vector<Value> syms;
      for (const auto& s : p.body) syms.push_back(symbol_value(s));
      g_.prod_values.push_back(production_value(p.lhs, p.label, std::move(syms), kind_name(p.kind)));
    }
    if (g_.layout_nt >= 0) {
      std::vector<std::pair<std::string, int>> users(g_.user_nt.begin(), g_.user_nt.end());
      std::sort(users.begin(), users.end());
      for (const auto& [name, id] : users) {
        if (id == g_.layout_nt) continue;
        INt w;
        w.name = "start[" + name + "]";
        w.role = NtRole::Start;
        w.prod_value = production_value(
            name, "",
            {Value::node("Symbol", "layouts", {Value::string(*g_.layout)}),
             Value::node("Symbol", "sort", {Value::string(name)})},
            "start");
        int wid = static_cast<int>(g_.nts.size());
        g_.nts.push_back(std::move(w));
        IProd ip;
        ip.lhs = wid;
        ip.body.push_back(nt_sym(g_.layout_nt));
        ip.body.push_back(nt_sym(id));
        add_prod(std::move(ip));
        g_.start_nt[id] = wid;
      }
    }
    compute_nullable();
  }

 private:
  static ISym nt_sym(int id) {
    ISym s;
    s.k = ISym::K::NT;
    s.nt = id;
    return s;
  }

  int user_nt(const std::string& name, ProductionKind kind) {
    auto it = g_.user_nt.find(name);
    if (it != g_.user_nt.end()) return it->second;
    INt n;
    n.name = name;
    n.kind = kind;
    int id = static_cast<int>(g_.nts.size());
    g_.nts.push_back(std::move(n));
    g_.user_nt.emplace(name, id);
    return id;
  }

  void add_prod(IProd p) {
    int id = static_cast<int>(g_.prods.size());
    g_.nts[p.lhs].prods.push_back(id);
    g_.prods.push_back(std::move(p));
  }

  void layout_after(bool cf, std::vector<ISym>& out) {
    if (cf && g_.layout_nt >= 0) out.push_back(nt_sym(g_.layout_nt));
  }

  void translate(const Symbol& s, bool cf, std::vector<ISym>& out) {
    switch (s.kind) {
      case Symbol::Kind::Lit: {
        ISym i;
        i.k = ISym::K::Lit;
        i.text = s.text;
        out.push_back(std::move(i));
        layout_after(cf, out);
        break;
      }
      case Symbol::Kind::Class: {
        ISym i;
        i.k = ISym::K::Class;
        i.ranges = s.ranges;
        out.push_back(std::move(i));
        layout_after(cf, out);
        break;
      }
      case Symbol::Kind::NT: {
        int id = g_.user_nt.at(s.name);
        out.push_back(nt_sym(id));
        if (g_.nts[id].kind != ProductionKind::Syntax) layout_after(cf, out);
        break;
      }
      case Symbol::Kind::Star:
      case Symbol::Kind::Plus:
      case Symbol::Kind::Opt: out.push_back(nt_sym(regular_nt(s, cf))); break;
    }
  }

  int regular_nt(const Symbol& s, bool cf) {
    std::string key = render_symbol(s) + (cf ? "#cf" : "#lex");
    if (auto it = g_.regular_nt.find(key); it != g_.regular_nt.end()) return it->second;
    INt n;
    n.name = render_symbol(s);
    n.role = NtRole::Regular;
    n.kind = cf ? ProductionKind::Syntax : ProductionKind::Lexical;
    n.regular = s;
    n.prod_value = production_value(n.name, "", {symbol_value(s)}, "regular");
    int id = static_cast<int>(g_.nts.size());
    g_.nts.push_back(std::move(n));
    g_.regular_nt.emplace(key, id);

    std::vector<ISym> elem;
    translate(s.inner[0], cf, elem);
    IProd empty{id, {}, -1};
    IProd single{id, elem, -1};
    IProd more{id, {nt_sym(id)}, -1};
    more.body.insert(more.body.end(), elem.begin(), elem.end());
    switch (s.kind) {
      case Symbol::Kind::Star:
        add_prod(std::move(empty));
        add_prod(std::move(more));
        break;
      case Symbol::Kind::Plus:
        add_prod(std::move(single));
        add_prod(std::move(more));
        break;
      default:
        add_prod(std::move(empty));
        add_prod(std::move(single));
        break;
    }
    return id;
  }

  void compute_nullable() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : g_.prods) {
        if (g_.nts[p.lhs].nullable) continue;
        bool all = std::all_of(p.body.begin(), p.body.end(), [&](const ISym& s) {
          return s.k == ISym::K::NT && g_.nts[s.nt].nullable;
        });
        if (all) {
          g_.nts[p.lhs].nullable = true;
          changed = true;
        }
      }
    }
  }

  CompiledGrammar& g_;
};

}  // namespace

Grammar compile_grammar(std::span<const SyntaxDecl> decls) {
  auto g = std::make_shared<CompiledGrammar>();
  std::set<std::string> layouts;
  for (const auto& d : decls) {
    if (d.kind == ProductionKind::Layout) layouts.insert(d.name);
    if (d.start) g->starts.insert(d.name);
    for (const auto& alt : d.alternatives) {
      Production p{d.name, alt.label, alt.body, d.kind};
      bool dup = false;
      for (const auto& q : g->productions) {
        if (q.same_as(p)) {
          dup = true;
          break;
        }
        if (!p.label.empty() && q.lhs == p.lhs && q.label == p.label) {
          Error e(ErrorKind::DuplicateLabel, p.lhs + "." + p.label);
          if (d.where) e.at(*d.where);
          throw e;
        }
      }
      if (!dup) g->productions.push_back(std::move(p));
    }
  }
  if (g->productions.empty()) throw Error(ErrorKind::NoProductions, "grammar has no productions");
  if (layouts.size() > 1) {
    std::string names;
    for (const auto& l : layouts) names += (names.empty() ? "" : ", ") + l;
    throw Error(ErrorKind::MultipleLayoutDecls, names);
  }
  if (!layouts.empty()) g->layout = *layouts.begin();
  for (const auto& p : g->productions) g->nonterminals.insert(p.lhs);
  for (const auto& p : g->productions) {
    for (const auto& s : p.body) check_symbols(s, g->nonterminals, p);
  }
  for (const auto& s : g->starts) {
    if (!g->nonterminals.count(s)) throw Error(ErrorKind::UnknownSymbol, "start symbol " + s);
  }
  Builder(*g).build();

  Grammar out;
  out.compiled_ = std::move(g);
  return out;
}

Grammar::Grammar() = default;
Grammar::~Grammar() = default;
Grammar::Grammar(const Grammar&) = default;
Grammar& Grammar::operator=(const Grammar&) = default;

namespace {
const CompiledGrammar& empty_compiled() {
  static const CompiledGrammar g;
  return g;
}
}  // namespace

const std::vector<Production>& Grammar::productions() const {
  return (compiled_ ? *compiled_ : empty_compiled()).productions;
}
const std::set<std::string>& Grammar::nonterminals() const {
  return (compiled_ ? *compiled_ : empty_compiled()).nonterminals;
}
const std::optional<std::string>& Grammar::layout() const {
  return (compiled_ ? *compiled_ : empty_compiled()).layout;
}
const std::set<std::string>& Grammar::start_symbols() const {
  return (compiled_ ? *compiled_ : empty_compiled()).starts;
}
bool Grammar::empty() const { return !compiled_ || compiled_->productions.empty(); }

// ---------------------------------------------------------------------------
// Earley recognition

namespace {

struct Item {
  int prod;
  int dot;
  std::uint32_t origin;
};

constexpr std::uint64_t pack3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return (a << 44) | (b << 22) | c;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > UINT64_MAX - b ? UINT64_MAX : a + b;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > UINT64_MAX / b ? UINT64_MAX : a * b;
}

bool in_class(const std::vector<CharRange>& ranges, char32_t c) {
  return std::any_of(ranges.begin(), ranges.end(),
                     [c](const CharRange& r) { return r.lo <= c && c <= r.hi; });
}

class Chart {
 public:
  Chart(const CompiledGrammar& g, std::u32string input) : g_(g), input_(std::move(input)) {
    if (input_.size() >= (1u << 22)) throw Error(ErrorKind::ParseError, "input too long");
  }

  const std::u32string& input() const { return input_; }

  bool recognize(int root) {
    const auto n = input_.size();
    sets_.assign(n + 1, {});
    seen_.assign(n + 1, {});
    waiting_.assign(n + 1, {});
    for (int p : g_.nts[root].prods) add(0, Item{p, 0, 0});
    for (std::size_t k = 0; k <= n; ++k) process(static_cast<std::uint32_t>(k));
    return completed_.count(pack3(root, 0, n)) != 0;
  }

  /// Furthest position with live items and the terminals expected there.
  std::pair<std::size_t, std::vector<std::string>> failure() const {
    std::size_t k = sets_.size() - 1;
    while (k > 0 && sets_[k].empty()) --k;
    std::set<std::string> expected;
    for (const auto& it : sets_[k]) {
      const auto& body = g_.prods[it.prod].body;
      if (it.dot >= static_cast<int>(body.size())) continue;
      const auto& s = body[it.dot];
      if (s.k == ISym::K::Lit) {
        Symbol sym;
        sym.kind = Symbol::Kind::Lit;
        sym.text = s.text;
        expected.insert(render_symbol(sym));
      } else if (s.k == ISym::K::Class) {
        expected.insert(render_ranges(s.ranges));
      }
    }
    return {k, std::vector<std::string>(expected.begin(), expected.end())};
  }

  const std::vector<int>* completions(int nt, std::uint32_t i, std::uint32_t j) const {
    auto it = completed_.find(pack3(nt, i, j));
    return it == completed_.end() ? nullptr : &it->second;
  }

  const std::vector<std::uint32_t>* ends(int nt, std::uint32_t i) const {
    auto it = ends_.find(pack3(nt, i, 0));
    return it == ends_.end() ? nullptr : &it->second;
  }

  /// End position when terminal `s` matches at `k`, or -1.
  long match_terminal(const ISym& s, std::uint32_t k) const {
    if (s.k == ISym::K::Lit) {
      if (k + s.text.size() > input_.size()) return -1;
      if (input_.compare(k, s.text.size(), s.text) != 0) return -1;
      return static_cast<long>(k + s.text.size());
    }
    if (k < input_.size() && in_class(s.ranges, input_[k])) return k + 1;
    return -1;
  }

 private:
  void add(std::uint32_t k, Item it) {
    std::uint64_t key = pack3(it.prod, it.dot, it.origin);
    if (seen_[k].insert(key).second) sets_[k].push_back(it);
  }

  void process(std::uint32_t k) {
    for (std::size_t x = 0; x < sets_[k].size(); ++x) {
      const Item it = sets_[k][x];
      const IProd& p = g_.prods[it.prod];
      if (it.dot == static_cast<int>(p.body.size())) {
        complete(k, it);
        continue;
      }
      const ISym& s = p.body[it.dot];
      if (s.k == ISym::K::NT) {
        auto& waiters = waiting_[k][s.nt];
        bool first = waiters.empty();
        waiters.push_back(it);
        if (first) {
          for (int q : g_.nts[s.nt].prods) add(k, Item{q, 0, k});
        } else {
          // Already predicted; completions with origin k so far must be replayed.
          if (auto* c = completions(s.nt, k, k)) {
            if (!c->empty()) add(k, Item{it.prod, it.dot + 1, it.origin});
          }
        }
        if (g_.nts[s.nt].nullable) add(k, Item{it.prod, it.dot + 1, it.origin});
      } else {
        long e = match_terminal(s, k);
        if (e >= 0) add(static_cast<std::uint32_t>(e), Item{it.prod, it.dot + 1, it.origin});
      }
    }
  }

  void complete(std::uint32_t k, const Item& it) {
    const int lhs = g_.prods[it.prod].lhs;
    auto& prods = completed_[pack3(lhs, it.origin, k)];
    if (prods.empty()) ends_[pack3(lhs, it.origin, 0)].push_back(k);
    prods.push_back(it.prod);
    auto wit = waiting_[it.origin].find(lhs);
    if (wit == waiting_[it.origin].end()) return;
    for (std::size_t w = 0; w < wit->second.size(); ++w) {
      const Item wi = waiting_[it.origin][lhs][w];
      add(k, Item{wi.prod, wi.dot + 1, wi.origin});
    }
  }

  const CompiledGrammar& g_;
  std::u32string input_;
  std::vector<std::vector<Item>> sets_;
  std::vector<std::unordered_set<std::uint64_t>> seen_;
  std::vector<std::unordered_map<int, std::vector<Item>>> waiting_;
  std::unordered_map<std::uint64_t, std::vector<int>> completed_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> ends_;
};

// ---------------------------------------------------------------------------
// Derivation counting and tree extraction over the completed items.

// Pushes a node onto the cycle stack for the lifetime of the guard, unless
// it is already there.
class StackGuard {
 public:
  StackGuard(std::unordered_map<std::uint64_t, int>& stack, std::uint64_t key) : stack_(stack), key_(key) {
    pushed_ = stack_.emplace(key, static_cast<int>(stack_.size())).second;
  }
  ~StackGuard() {
    if (pushed_) stack_.erase(key_);
  }
  StackGuard(const StackGuard&) = delete;
  StackGuard& operator=(const StackGuard&) = delete;

 private:
  std::unordered_map<std::uint64_t, int>& stack_;
  std::uint64_t key_;
  bool pushed_;
};

class Forest {
 public:
  Forest(const CompiledGrammar& g, const Chart& c, std::string uri)
      : g_(g), c_(c), uri_(std::move(uri)) {}

  struct Counted {
    std::uint64_t count;
    int low;
  };

  Counted count(int nt, std::uint32_t i, std::uint32_t j) {
    const std::uint64_t key = pack3(nt, i, j);
    if (auto s = on_stack_.find(key); s != on_stack_.end()) return {0, s->second};
    if (auto m = memo_.find(key); m != memo_.end()) return {m->second, INT_MAX};
    const auto* prods = c_.completions(nt, i, j);
    if (!prods) return {0, INT_MAX};

    const int depth = static_cast<int>(on_stack_.size());
    on_stack_.emplace(key, depth);
    std::uint64_t total = 0;
    int low = INT_MAX;
    for (int p : *prods) total = sat_add(total, count_prod(p, i, j, low));
    on_stack_.erase(key);
    if (low >= depth) memo_[key] = total;
    return {total, low};
  }

  /// A choice of production plus the end position of every body symbol.
  struct Option {
    int prod;
    std::vector<std::uint32_t> ends;
  };

  /// Options for a node in preference order: earlier productions first,
  /// then lexicographically shorter child spans. Stops after `limit`.
  std::vector<Option> options(int nt, std::uint32_t i, std::uint32_t j, std::size_t limit) {
    std::vector<Option> out;
    const auto* prods = c_.completions(nt, i, j);
    if (!prods) return out;
    std::vector<int> sorted(*prods);
    std::sort(sorted.begin(), sorted.end());
    const std::uint64_t key = pack3(nt, i, j);
    StackGuard guard(on_stack_, key);
    for (int p : sorted) {
      std::vector<std::uint32_t> ends;
      splits(p, 0, i, j, ends, out, limit);
      if (out.size() >= limit) break;
    }
    return out;
  }

  /// Builds one derivation. When `take_second` is set, the first node met
  /// in preorder that has two or more options uses its second option.
  Value build(int nt, std::uint32_t i, std::uint32_t j, bool& take_second) {
    const INt& n = g_.nts[nt];
    if (n.role == NtRole::Regular) {
      std::vector<Value> elems;
      collect_regular(nt, i, j, take_second, elems);
      return appl(n.prod_value, std::move(elems), i, j);
    }
    Option opt = choose(nt, i, j, take_second);
    std::vector<Value> kids = children(opt, i, take_second, nt);
    const IProd& p = g_.prods[opt.prod];
    const Value& prod = p.source >= 0 ? g_.prod_values[p.source] : n.prod_value;
    return appl(prod, std::move(kids), i, j);
  }

 private:
  Option choose(int nt, std::uint32_t i, std::uint32_t j, bool& take_second) {
    auto opts = options(nt, i, j, take_second ? 2 : 1);
    if (opts.empty()) throw Error(ErrorKind::ParseError, "no acyclic derivation");
    if (take_second && opts.size() > 1) {
      take_second = false;
      return std::move(opts[1]);
    }
    return std::move(opts[0]);
  }

  void collect_regular(int nt, std::uint32_t i, std::uint32_t j, bool& take_second,
                       std::vector<Value>& out) {
    Option opt = choose(nt, i, j, take_second);
    const IProd& p = g_.prods[opt.prod];
    StackGuard guard(on_stack_, pack3(nt, i, j));
    std::uint32_t start = i;
    for (std::size_t m = 0; m < p.body.size(); ++m) {
      const ISym& s = p.body[m];
      if (s.k == ISym::K::NT && s.nt == nt) {
        collect_regular(nt, start, opt.ends[m], take_second, out);
      } else {
        out.push_back(child(s, start, opt.ends[m], take_second));
      }
      start = opt.ends[m];
    }
  }

  std::vector<Value> children(const Option& opt, std::uint32_t i, bool& take_second, int nt) {
    const IProd& p = g_.prods[opt.prod];
    StackGuard guard(on_stack_, pack3(nt, i, opt.ends.empty() ? i : opt.ends.back()));
    std::vector<Value> out;
    std::uint32_t start = i;
    for (std::size_t m = 0; m < p.body.size(); ++m) {
      out.push_back(child(p.body[m], start, opt.ends[m], take_second));
      start = opt.ends[m];
    }
    return out;
  }

  Value child(const ISym& s, std::uint32_t i, std::uint32_t j, bool& take_second) {
    if (s.k == ISym::K::NT) return build(s.nt, i, j, take_second);
    return Value::node("Tree", "token",
                       {Value::string(utf8::encode(c_.input().substr(i, j - i))), loc(i, j)});
  }

  Value loc(std::uint32_t i, std::uint32_t j) const {
    return Value::location(Location{uri_, i, j - i});
  }

  Value appl(const Value& prod, std::vector<Value> kids, std::uint32_t i, std::uint32_t j) const {
    return Value::node("Tree", "appl", {prod, Value::list(std::move(kids)), loc(i, j)});
  }

  // Ends reachable by body symbol m starting at k, in ascending order.
  std::vector<std::uint32_t> symbol_ends(const ISym& s, std::uint32_t k, std::uint32_t j) const {
    std::vector<std::uint32_t> out;
    if (s.k == ISym::K::NT) {
      if (const auto* e = c_.ends(s.nt, k)) {
        for (auto l : *e) {
          if (l <= j) out.push_back(l);
        }
      }
    } else {
      long e = c_.match_terminal(s, k);
      if (e >= 0 && static_cast<std::uint32_t>(e) <= j) out.push_back(static_cast<std::uint32_t>(e));
    }
    return out;
  }

  std::uint64_t count_prod(int prod, std::uint32_t i, std::uint32_t j, int& low) {
    const IProd& p = g_.prods[prod];
    std::map<std::pair<std::size_t, std::uint32_t>, std::uint64_t> ways;
    std::function<std::uint64_t(std::size_t, std::uint32_t)> go = [&](std::size_t m,
                                                                      std::uint32_t k) {
      if (m == p.body.size()) return static_cast<std::uint64_t>(k == j);
      if (auto w = ways.find({m, k}); w != ways.end()) return w->second;
      std::uint64_t total = 0;
      const ISym& s = p.body[m];
      for (auto l : symbol_ends(s, k, j)) {
        std::uint64_t rest = go(m + 1, l);
        if (rest == 0) continue;
        std::uint64_t here = 1;
        if (s.k == ISym::K::NT) {
          auto c = count(s.nt, k, l);
          low = std::min(low, c.low);
          here = c.count;
        }
        total = sat_add(total, sat_mul(here, rest));
      }
      ways[{m, k}] = total;
      return total;
    };
    return go(0, i);
  }

  // Suffix feasibility under the current cycle stack.
  bool feasible(const IProd& p, std::size_t m, std::uint32_t k, std::uint32_t j) {
    if (m == p.body.size()) return k == j;
    const ISym& s = p.body[m];
    for (auto l : symbol_ends(s, k, j)) {
      if (s.k == ISym::K::NT && count(s.nt, k, l).count == 0) continue;
      if (feasible(p, m + 1, l, j)) return true;
    }
    return false;
  }

  void splits(int prod, std::size_t m, std::uint32_t k, std::uint32_t j,
              std::vector<std::uint32_t>& ends, std::vector<Option>& out, std::size_t limit) {
    const IProd& p = g_.prods[prod];
    if (out.size() >= limit) return;
    if (m == p.body.size()) {
      if (k == j) out.push_back(Option{prod, ends});
      return;
    }
    const ISym& s = p.body[m];
    for (auto l : symbol_ends(s, k, j)) {
      if (s.k == ISym::K::NT && count(s.nt, k, l).count == 0) continue;
      if (!feasible(p, m + 1, l, j)) continue;
      ends.push_back(l);
      splits(prod, m + 1, l, j, ends, out, limit);
      ends.pop_back();
      if (out.size() >= limit) return;
    }
  }

  const CompiledGrammar& g_;
  const Chart& c_;
  std::string uri_;
  std::unordered_map<std::uint64_t, std::uint64_t> memo_;
  std::unordered_map<std::uint64_t, int> on_stack_;
};

int root_nt(const CompiledGrammar& g, std::string_view start) {
  auto it = g.user_nt.find(std::string(start));
  if (it == g.user_nt.end()) {
    throw Error(ErrorKind::UnknownSymbol, "no nonterminal named " + std::string(start));
  }
  if (auto w = g.start_nt.find(it->second); w != g.start_nt.end()) return w->second;
  return it->second;
}

std::string summarize(const Value& t);

}  // namespace

Value Grammar::parse(std::string_view start, std::string_view input, AmbiguityPolicy policy,
                     const std::string& uri) const {
  if (empty()) throw Error(ErrorKind::NoProductions, "grammar has no productions");
  const CompiledGrammar& g = *compiled_;
  const int root = root_nt(g, start);
  Chart chart(g, utf8::decode(input));
  const auto n = static_cast<std::uint32_t>(chart.input().size());
  if (!chart.recognize(root)) {
    auto [offset, expected] = chart.failure();
    std::string detail = offset < n ? "unexpected input" : "unexpected end of input";
    if (!expected.empty()) {
      detail += ", expected one of:";
      for (const auto& e : expected) detail += " " + e;
    }
    throw Error(ErrorKind::ParseError, detail, SourceSpan{uri, offset, 0});
  }
  Forest forest(g, chart, uri);
  auto total = forest.count(root, 0, n).count;
  if (total == 0) throw Error(ErrorKind::ParseError, "only cyclic derivations", SourceSpan{uri, 0, n});
  bool take_second = false;
  Value tree = forest.build(root, 0, n, take_second);
  if (total > 1 && policy == AmbiguityPolicy::Error) {
    take_second = true;
    Value other = forest.build(root, 0, n, take_second);
    throw AmbiguityError(total, summarize(tree), summarize(other), SourceSpan{uri, 0, n});
  }
  return tree;
}

std::uint64_t Grammar::count_derivations(std::string_view start, std::string_view input) const {
  if (empty()) throw Error(ErrorKind::NoProductions, "grammar has no productions");
  const CompiledGrammar& g = *compiled_;
  const int root = root_nt(g, start);
  Chart chart(g, utf8::decode(input));
  if (!chart.recognize(root)) return 0;
  Forest forest(g, chart, "input");
  return forest.count(root, 0, static_cast<std::uint32_t>(chart.input().size())).count;
}

// ---------------------------------------------------------------------------
// Tree utilities

namespace {

struct TreeParts {
  std::string_view sort;
  std::string_view label;
  std::string_view kind;
  const Value* symbols = nullptr;
  std::span<const Value> kids;
};

bool is_token(const Value& t) { return t.is(Kind::Node) && t.ctor() == "token"; }

TreeParts parts(const Value& t) {
  if (!t.is(Kind::Node) || t.ctor() != "appl" || t.arity() != 3) {
    throw Error(ErrorKind::ImplodeError, "not a parse tree: " + render(t));
  }
  const Value& prod = t.args()[0];
  TreeParts p;
  p.sort = prod.args()[0].as_str();
  p.label = prod.args()[1].as_str();
  p.symbols = &prod.args()[2];
  p.kind = prod.args()[3].as_str();
  p.kids = t.args()[1].elements();
  return p;
}

void unparse_into(const Value& t, std::string& out) {
  if (is_token(t)) {
    out += t.args()[0].as_str();
    return;
  }
  for (const auto& k : parts(t).kids) unparse_into(k, out);
}

std::string summarize(const Value& t) {
  if (is_token(t)) return escape_string(t.args()[0].as_str());
  auto p = parts(t);
  if (p.kind == "layout") return "";
  if (p.kind == "lexical") return escape_string(unparse(t));
  if (p.kind == "start") return summarize(p.kids.back());
  std::string out;
  if (p.kind == "regular") {
    out = "[";
  } else {
    out = std::string(p.sort);
    if (!p.label.empty()) out += ":" + std::string(p.label);
    out += "(";
  }
  bool first = true;
  for (const auto& k : p.kids) {
    std::string s = summarize(k);
    if (s.empty()) continue;
    if (!first) out += " ";
    first = false;
    out += s;
  }
  return out + (p.kind == "regular" ? "]" : ")");
}

bool is_meaningful(const Value& t) {
  if (is_token(t)) return false;
  return parts(t).kind != "layout";
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Value implode_node(const Value& t, const TypeExpr& expected, const Declarations& decls) {
  if (is_token(t)) return t.args()[0];
  auto p = parts(t);
  if (p.kind == "lexical") {
    std::string text = unparse(t);
    if (expected.kind == TypeExpr::Kind::Int) {
      if (!all_digits(text)) {
        throw Error(ErrorKind::ImplodeError, "lexical " + std::string(p.sort) + " \"" + text +
                                                 "\" in an int slot is not a number");
      }
      return Value::integer(BigInt(text));
    }
    return Value::string(std::move(text));
  }
  if (p.kind == "layout") {
    throw Error(ErrorKind::ImplodeError, "cannot implode layout " + std::string(p.sort));
  }

  std::vector<const Value*> kids;
  for (const auto& k : p.kids) {
    if (is_meaningful(k)) kids.push_back(&k);
  }

  if (p.kind == "start") {
    return implode_node(*kids.at(0), expected, decls);
  }
  if (p.kind == "regular") {
    TypeExpr elem = expected.kind == TypeExpr::Kind::List ? expected.params[0] : TypeExpr::top();
    std::vector<Value> out;
    for (const auto* k : kids) out.push_back(implode_node(*k, elem, decls));
    return Value::list(std::move(out));
  }

  const std::string sort(p.sort);
  if (p.label.empty()) {
    if (kids.size() == 1) return implode_node(*kids[0], expected, decls);
    throw Error(ErrorKind::ImplodeError, "unlabeled production for " + sort + " has " +
                                             std::to_string(kids.size()) + " children");
  }

  const std::string label(p.label);
  auto cands = decls.constructors(label, kids.size());
  const ConstructorDecl* ctor = nullptr;
  for (auto* c : cands) {
    if (expected.kind == TypeExpr::Kind::Adt && c->adt == expected.name) ctor = c;
  }
  for (auto* c : cands) {
    if (!ctor && c->adt == sort) ctor = c;
  }
  if (!ctor && !cands.empty()) ctor = cands.front();
  if (!ctor) {
    throw Error(ErrorKind::ImplodeError, "production " + sort + "." + label + " with " +
                                             std::to_string(kids.size()) +
                                             " children has no matching constructor " + label +
                                             "/" + std::to_string(kids.size()));
  }
  std::vector<Value> args;
  for (std::size_t i = 0; i < kids.size(); ++i) {
    Value a = implode_node(*kids[i], ctor->field_types[i], decls);
    if (!conforms(a, ctor->field_types[i], decls)) {
      throw Error(ErrorKind::ImplodeError, "production " + sort + "." + label + ": child " +
                                               std::to_string(i) + " " + render(a) +
                                               " does not fit field type " +
                                               render_type(ctor->field_types[i]));
    }
    args.push_back(std::move(a));
  }
  return Value::node(ctor->adt, label, std::move(args));
}

}  // namespace

std::string unparse(const Value& tree) {
  std::string out;
  unparse_into(tree, out);
  return out;
}

Value implode(const Value& tree, const Declarations& decls) {
  return implode_node(tree, TypeExpr::top(), decls);
}

}  // namespace mrl
