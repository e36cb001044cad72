#include "mrl/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mrl {

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// An outcome that is either a value or a named failure.
struct Outcome {
  bool ok = false;
  Value value;
  std::string error;
  std::string message;
};

Outcome attempt(Interpreter& in, const std::string& entry, std::vector<Value> args) {
  Outcome o;
  try {
    o.value = in.call(entry, std::move(args));
    o.ok = true;
  } catch (const Thrown& t) {
    o.error = t.value().is(Kind::Node) ? t.value().ctor() : "Thrown";
    o.message = t.what();
  } catch (const Error& e) {
    o.error = std::string(e.name());
    o.message = e.what();
  }
  return o;
}

}  // namespace

std::vector<CorpusCase> read_manifest(const std::filesystem::path& manifest) {
  std::istringstream in(read_all(manifest));
  std::vector<CorpusCase> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 4) {
      throw Error(ErrorKind::ValueSyntaxError,
                  "expected 4 tab-separated columns, found " + std::to_string(cols.size()),
                  SourceSpan{manifest.string(), 0, 0});
    }
    out.push_back(CorpusCase{cols[0], cols[1], cols[2], cols[3], n});
  }
  return out;
}

CaseResult run_case(const CorpusCase& c, const std::filesystem::path& base, const Options& options) {
  CaseResult r;
  r.name = c.path + ":" + c.entry + c.args;
  Interpreter in(options);
  const bool expects_error = !c.expected.empty() && c.expected[0] == '!';
  const std::string wanted_error = expects_error ? c.expected.substr(1) : "";
  try {
    in.load_file(base / c.path);
  } catch (const Error& e) {
    r.passed = expects_error && e.name() == wanted_error;
    r.detail = r.passed ? "" : std::string("load failed: ") + e.what();
    return r;
  }
  std::vector<Value> args;
  try {
    Value a = in.read_value(c.args.empty() ? "[]" : c.args);
    if (!a.is(Kind::List)) throw Error(ErrorKind::ValueSyntaxError, "arguments must be a list literal");
    args.assign(a.elements().begin(), a.elements().end());
  } catch (const Error& e) {
    r.detail = std::string("bad arguments: ") + e.what();
    return r;
  }
  Outcome o = attempt(in, c.entry, std::move(args));
  if (expects_error) {
    r.passed = !o.ok && o.error == wanted_error;
    if (!r.passed) {
      r.detail = o.ok ? "expected " + c.expected + ", got " + render(o.value)
                      : "expected " + c.expected + ", got " + o.message;
    }
    return r;
  }
  if (!o.ok) {
    r.detail = o.message;
    return r;
  }
  if (!c.expected.empty() && c.expected[0] == '@') {
    std::string golden;
    try {
      golden = read_all(base / c.expected.substr(1));
    } catch (const Error& e) {
      r.detail = e.what();
      return r;
    }
    r.passed = o.value.is(Kind::Str) && o.value.as_str() == golden;
    if (!r.passed) r.detail = "result differs from " + c.expected.substr(1) + ": " + render(o.value);
    return r;
  }
  try {
    Value expected = in.read_value(c.expected);
    r.passed = o.value == expected;
    if (!r.passed) r.detail = "expected " + render(expected) + ", got " + render(o.value);
  } catch (const Error& e) {
    r.detail = std::string("bad expectation: ") + e.what();
  }
  return r;
}

std::vector<CaseResult> run_test_functions(const std::filesystem::path& file, const Options& options) {
  std::vector<CaseResult> out;
  Interpreter in(options);
  try {
    in.load_file(file);
  } catch (const Error& e) {
    out.push_back(CaseResult{file.string(), false, std::string("load failed: ") + e.what()});
    return out;
  }
  for (const auto& name : in.nullary_functions()) {
    if (name.rfind("test", 0) != 0) continue;
    CaseResult r;
    r.name = file.filename().string() + ":" + name + "()";
    Outcome o = attempt(in, name, {});
    r.passed = o.ok && o.value == Value::boolean(true);
    if (!r.passed) r.detail = o.ok ? "returned " + render(o.value) : o.message;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CaseResult> run_manifest(const std::filesystem::path& manifest, const Options& options) {
  auto cases = read_manifest(manifest);
  const auto base = manifest.parent_path();
  std::vector<CaseResult> out;
  std::set<std::string> files;
  std::vector<std::string> order;
  for (const auto& c : cases) {
    out.push_back(run_case(c, base, options));
    if (files.insert(c.path).second) order.push_back(c.path);
  }
  for (const auto& f : order) {
    auto tests = run_test_functions(base / f, options);
    // A file that fails to load was already reported by its cases.
    if (tests.size() == 1 && !tests[0].passed && tests[0].name == (base / f).string()) continue;
    out.insert(out.end(), tests.begin(), tests.end());
  }
  return out;
}

}  // namespace mrl
