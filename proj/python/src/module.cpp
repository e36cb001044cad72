#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mrl/corpus.hpp"
#include "mrl/grammar.hpp"
#include "mrl/interpreter.hpp"
#include "mrl/types.hpp"
#include "mrl/value.hpp"

namespace py = pybind11;
using mrl::Kind;
using mrl::Value;

namespace {

Value from_python(const py::handle& obj);

std::vector<Value> from_iterable(const py::handle& obj) {
  std::vector<Value> out;
  for (auto item : obj) out.push_back(from_python(item));
  return out;
}

// Python bool is a subclass of int, so it is tested first.
Value from_python(const py::handle& obj) {
  if (py::isinstance<Value>(obj)) return obj.cast<Value>();
  if (py::isinstance<py::bool_>(obj)) return Value::boolean(obj.cast<bool>());
  if (py::isinstance<py::int_>(obj)) return Value::integer(mrl::BigInt(py::str(obj).cast<std::string>()));
  if (py::isinstance<py::str>(obj)) return Value::string(obj.cast<std::string>());
  if (py::isinstance<py::tuple>(obj)) return Value::tuple(from_iterable(obj));
  if (py::isinstance<py::list>(obj)) return Value::list(from_iterable(obj));
  if (py::isinstance<py::set>(obj) || py::isinstance<py::frozenset>(obj)) return Value::set(from_iterable(obj));
  if (py::isinstance<py::dict>(obj)) {
    std::vector<mrl::MapEntry> entries;
    for (auto [k, v] : obj.cast<py::dict>()) entries.emplace_back(from_python(k), from_python(v));
    return Value::map(std::move(entries));
  }
  throw py::type_error("cannot convert " + py::repr(obj).cast<std::string>() + " to an mrl value");
}

// Atoms and collections become native Python objects; locations and
// constructor nodes stay wrapped. Sets become frozensets so they can nest.
py::object to_python(const Value& v) {
  switch (v.kind()) {
    case Kind::Bool: return py::bool_(v.as_bool());
    case Kind::Int: return py::int_(py::str(v.as_int().str()));
    case Kind::Str: return py::str(v.as_str());
    case Kind::Tuple: {
      py::tuple t(v.arity());
      for (std::size_t i = 0; i < v.arity(); ++i) t[i] = to_python(v.elements()[i]);
      return std::move(t);
    }
    case Kind::List: {
      py::list l;
      for (const auto& e : v.elements()) l.append(to_python(e));
      return std::move(l);
    }
    case Kind::Set: {
      py::list l;
      for (const auto& e : v.elements()) l.append(to_python(e));
      return py::frozenset(l);
    }
    case Kind::Map: {
      py::dict d;
      for (const auto& [k, val] : v.entries()) d[to_python(k)] = to_python(val);
      return std::move(d);
    }
    case Kind::Loc:
    case Kind::Node: return py::cast(v);
  }
  return py::none();
}

std::string kind_name(Kind k) {
  static const char* names[] = {"bool", "int", "str", "loc", "tuple", "list", "set", "map", "node"};
  return names[static_cast<int>(k)];
}

struct PyInterpreter {
  std::ostringstream out;
  std::unique_ptr<mrl::Interpreter> in;

  PyInterpreter(const std::string& ambiguity, std::uint64_t solve_budget, std::uint64_t visit_budget,
                const std::vector<std::filesystem::path>& search_paths) {
    mrl::Options options;
    if (ambiguity == "first") {
      options.ambiguity = mrl::AmbiguityPolicy::First;
    } else if (ambiguity != "error") {
      throw py::value_error("ambiguity must be 'error' or 'first'");
    }
    if (solve_budget == 0 || visit_budget == 0) throw py::value_error("budgets must be positive");
    options.solve_budget = solve_budget;
    options.visit_budget = visit_budget;
    options.search_paths = search_paths;
    options.out = &out;
    in = std::make_unique<mrl::Interpreter>(options);
  }

  // Returns what print/println wrote since the last call.
  std::string take_output() {
    std::string s = out.str();
    out.str("");
    return s;
  }
};

}  // namespace

PYBIND11_MODULE(_mrl, m) {
  m.doc() = "Bindings for the mrl interpreter";

  auto error = py::register_exception<mrl::Error>(m, "MrlError");
  static py::exception<mrl::Thrown> thrown(m, "Thrown", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mrl::Thrown& t) {
      py::object exc = py::handle(thrown.ptr())(t.what());
      exc.attr("value") = to_python(t.value());
      PyErr_SetObject(thrown.ptr(), exc.ptr());
    }
  });

  py::class_<Value>(m, "Value")
      .def_property_readonly("kind", [](const Value& v) { return kind_name(v.kind()); })
      .def_property_readonly("adt", [](const Value& v) { return v.is(Kind::Node) ? v.adt() : std::string(); })
      .def_property_readonly("name", [](const Value& v) { return v.is(Kind::Node) ? v.ctor() : std::string(); })
      .def_property_readonly("args",
                             [](const Value& v) {
                               std::vector<Value> out;
                               if (v.is(Kind::Node)) out.assign(v.args().begin(), v.args().end());
                               return out;
                             })
      .def("to_python", &to_python)
      .def_static("of", &from_python, py::arg("obj"))
      .def("__eq__",
           [](const Value& a, const py::object& b) {
             try {
               return a == from_python(b);
             } catch (const py::type_error&) {
               return false;
             }
           })
      .def("__lt__", [](const Value& a, const Value& b) { return a < b; })
      .def("__hash__", [](const Value& v) { return py::hash(py::str(mrl::render(v))); })
      .def("__str__", [](const Value& v) { return mrl::render(v); })
      .def("__repr__", [](const Value& v) { return "Value(" + mrl::render(v) + ")"; });

  m.def("parse_value", [](std::string_view text) { return to_python(mrl::parse_value(text)); }, py::arg("text"),
        "Parses a rendered value. Constructors get no data type.");
  m.def("render", [](const py::object& obj) { return mrl::render(from_python(obj)); }, py::arg("value"));
  m.def("transitive_closure", [](const py::object& r) { return to_python(mrl::transitive_closure(from_python(r))); });
  m.def("unparse", &mrl::unparse, py::arg("tree"), "The text a parse tree was parsed from.");

  py::class_<PyInterpreter>(m, "Interpreter")
      .def(py::init<const std::string&, std::uint64_t, std::uint64_t, const std::vector<std::filesystem::path>&>(),
           py::kw_only(), py::arg("ambiguity") = "error", py::arg("solve_budget") = 10000,
           py::arg("visit_budget") = 10000, py::arg("search_paths") = std::vector<std::filesystem::path>{})
      .def("load_file", [](PyInterpreter& self, const std::filesystem::path& p) { self.in->load_file(p); })
      .def("load_source",
           [](PyInterpreter& self, const std::string& src, const std::string& uri) { self.in->load_source(src, uri); },
           py::arg("source"), py::arg("uri") = "python.mrl")
      .def(
          "call",
          [](PyInterpreter& self, const std::string& name, const py::args& args) {
            std::vector<Value> vs;
            for (auto a : args) vs.push_back(from_python(a));
            return to_python(self.in->call(name, std::move(vs)));
          },
          py::arg("name"))
      .def("execute",
           [](PyInterpreter& self, const std::string& text) -> py::object {
             auto v = self.in->execute(text, "python");
             return v ? to_python(*v) : py::none();
           })
      .def("type_of",
           [](PyInterpreter& self, const std::string& expr) {
             return mrl::render_type(self.in->type_of_expression(expr));
           })
      .def("read_value", [](PyInterpreter& self, std::string_view text) { return to_python(self.in->read_value(text)); })
      .def(
          "parse",
          [](PyInterpreter& self, const std::string& nonterminal, const std::string& text) {
            return self.in->grammar().parse(nonterminal, text, self.in->options().ambiguity);
          },
          py::arg("nonterminal"), py::arg("text"))
      .def("count_derivations",
           [](PyInterpreter& self, const std::string& nonterminal, const std::string& text) {
             return self.in->grammar().count_derivations(nonterminal, text);
           })
      .def("implode",
           [](PyInterpreter& self, const Value& tree) { return to_python(mrl::implode(tree, self.in->declarations())); })
      .def("has_function", [](PyInterpreter& self, const std::string& name,
                              std::size_t arity) { return self.in->has_function(name, arity); })
      .def_property_readonly("warnings", [](PyInterpreter& self) { return self.in->warnings(); })
      .def("take_output", &PyInterpreter::take_output);

  m.def(
      "run_manifest",
      [](const std::filesystem::path& manifest) {
        std::ostream discard(nullptr);
        mrl::Options options;
        options.out = &discard;
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& r : mrl::run_manifest(manifest, options)) out.emplace_back(r.name, r.passed, r.detail);
        return out;
      },
      py::arg("manifest"), "Runs a corpus manifest; returns (name, passed, detail) triples.");
}
