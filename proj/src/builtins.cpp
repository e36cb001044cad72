// Library functions callable from mrl programs.

#include <fstream>
#include <sstream>

#include "machine.hpp"
#include "mrl/utf8.hpp"

namespace mrl::detail {

namespace {

[[noreturn]] void bad_args(const std::string& name, std::span<const Value> args,
                           const SourceSpan& where) {
  std::string rendered;
  for (std::size_t i = 0; i < args.size(); ++i) rendered += (i ? ", " : "") + render(args[i]);
  throw Error(ErrorKind::TypeError, name + " does not accept (" + rendered + ")", where);
}

std::string path_of(const Value& v, const std::string& name, std::span<const Value> args,
                    const SourceSpan& where) {
  if (v.is(Kind::Str)) return v.as_str();
  if (v.is(Kind::Loc)) {
    std::string uri = v.as_loc().uri;
    if (uri.rfind("file://", 0) == 0) uri = uri.substr(7);
    return uri;
  }
  bad_args(name, args, where);
}

std::string text_of(const Value& v) { return v.is(Kind::Str) ? v.as_str() : render(v); }

bool is_binary_relation(const Value& v) {
  if (!v.is(Kind::Set)) return false;
  for (const auto& e : v.elements()) {
    if (!e.is(Kind::Tuple) || e.arity() != 2) return false;
  }
  return true;
}

}  // namespace

void Machine::install_builtins() {
  auto arity = [](const std::string& name, std::span<const Value> args, std::size_t lo,
                  std::size_t hi, const SourceSpan& where) {
    if (args.size() < lo || args.size() > hi) bad_args(name, args, where);
  };

  builtins_["size"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("size", a, 1, 1, w);
    switch (a[0].kind()) {
      case Kind::List:
      case Kind::Set:
      case Kind::Map:
      case Kind::Tuple: return Value::integer(static_cast<long long>(a[0].arity()));
      case Kind::Str: return Value::integer(static_cast<long long>(utf8::length(a[0].as_str())));
      default: bad_args("size", a, w);
    }
  };
  builtins_["isEmpty"] = [this](std::span<const Value> a, const SourceSpan& w) {
    Value n = builtins_["size"](a, w);
    return Value::boolean(n.as_int() == 0);
  };
  builtins_["capitalize"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("capitalize", a, 1, 1, w);
    if (!a[0].is(Kind::Str)) bad_args("capitalize", a, w);
    auto s = utf8::decode(a[0].as_str());
    if (!s.empty() && s[0] < 128) s[0] = static_cast<char32_t>(std::toupper(static_cast<int>(s[0])));
    return Value::string(utf8::encode(s));
  };
  builtins_["print"] = [this](std::span<const Value> a, const SourceSpan&) {
    for (const auto& v : a) out() << text_of(v);
    out().flush();
    return Value::unit();
  };
  builtins_["println"] = [this](std::span<const Value> a, const SourceSpan&) {
    for (const auto& v : a) out() << text_of(v);
    out() << "\n";
    out().flush();
    return Value::unit();
  };
  builtins_["readFile"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("readFile", a, 1, 1, w);
    std::string path = path_of(a[0], "readFile", a, w);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path, w);
    std::ostringstream ss;
    ss << in.rdbuf();
    return Value::string(ss.str());
  };
  builtins_["writeFile"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("writeFile", a, 2, 2, w);
    std::string path = path_of(a[0], "writeFile", a, w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path, w);
    out << text_of(a[1]);
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path, w);
    return Value::unit();
  };
  builtins_["toInt"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("toInt", a, 1, 1, w);
    if (a[0].is(Kind::Int)) return a[0];
    if (!a[0].is(Kind::Str)) bad_args("toInt", a, w);
    const std::string& s = a[0].as_str();
    std::size_t start = !s.empty() && s[0] == '-' ? 1 : 0;
    bool ok = s.size() > start;
    for (std::size_t i = start; i < s.size(); ++i) ok = ok && std::isdigit(static_cast<unsigned char>(s[i]));
    if (!ok) throw Error(ErrorKind::TypeError, "not an integer: " + escape_string(s), w);
    return Value::integer(BigInt(s));
  };
  builtins_["toStr"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("toStr", a, 1, 1, w);
    return Value::string(text_of(a[0]));
  };
  builtins_["render"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("render", a, 1, 1, w);
    return Value::string(render(a[0]));
  };
  builtins_["typeOf"] = [this, arity](std::span<const Value> a, const SourceSpan& w) {
    arity("typeOf", a, 1, 1, w);
    return Value::string(render_type(type_of(a[0], decls)));
  };
  builtins_["parse"] = [this, arity](std::span<const Value> a, const SourceSpan& w) {
    arity("parse", a, 2, 3, w);
    if (!a[0].is(Kind::Str) || !a[1].is(Kind::Str)) bad_args("parse", a, w);
    std::string uri = a.size() == 3 ? path_of(a[2], "parse", a, w) : "input";
    return grammar().parse(a[0].as_str(), a[1].as_str(), options.ambiguity, uri);
  };
  builtins_["implode"] = [this, arity](std::span<const Value> a, const SourceSpan& w) {
    arity("implode", a, 1, 1, w);
    return implode(a[0], decls);
  };
  builtins_["unparse"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("unparse", a, 1, 1, w);
    return Value::string(unparse(a[0]));
  };
  builtins_["compose"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("compose", a, 2, 2, w);
    if (!a[0].is(Kind::Set) || !a[1].is(Kind::Set)) bad_args("compose", a, w);
    return compose(a[0], a[1]);
  };
  builtins_["carrier"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("carrier", a, 1, 1, w);
    if (!a[0].is(Kind::Set)) bad_args("carrier", a, w);
    return carrier(a[0]);
  };
  auto column = [arity](const char* name, std::size_t index) {
    return [=](std::span<const Value> a, const SourceSpan& w) {
      arity(name, a, 1, 1, w);
      if (!is_binary_relation(a[0])) {
        throw Error(ErrorKind::ArityError, std::string(name) + " needs a binary relation", w);
      }
      std::vector<Value> out;
      for (const auto& t : a[0].elements()) out.push_back(t.elements()[index]);
      return Value::set(std::move(out));
    };
  };
  builtins_["domain"] = column("domain", 0);
  builtins_["range"] = column("range", 1);
  builtins_["toList"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("toList", a, 1, 1, w);
    if (!a[0].is(Kind::Set) && !a[0].is(Kind::List)) bad_args("toList", a, w);
    return Value::list({a[0].elements().begin(), a[0].elements().end()});
  };
  builtins_["toSet"] = [arity](std::span<const Value> a, const SourceSpan& w) {
    arity("toSet", a, 1, 1, w);
    if (!a[0].is(Kind::Set) && !a[0].is(Kind::List)) bad_args("toSet", a, w);
    return Value::set({a[0].elements().begin(), a[0].elements().end()});
  };
}

}  // namespace mrl::detail
