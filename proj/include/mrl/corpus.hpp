#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mrl/interpreter.hpp"

namespace mrl {

/// One manifest line: `path<TAB>entry<TAB>args<TAB>expected`. `args` is a
/// list literal of arguments. `expected` is a value literal, `!ErrorName`
/// for an expected failure, or `@file` naming a golden text file that the
/// string result must equal byte-for-byte.
struct CorpusCase {
  std::string path;
  std::string entry;
  std::string args;
  std::string expected;
  std::size_t line = 0;
};

struct CaseResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Throws IoError when the manifest cannot be read and ValueSyntaxError for
/// malformed lines.
std::vector<CorpusCase> read_manifest(const std::filesystem::path& manifest);

/// Runs one case in a fresh interpreter. Paths resolve against `base`.
CaseResult run_case(const CorpusCase& c, const std::filesystem::path& base, const Options& options);

/// Calls every zero-argument function named `test*` in `file`; each must
/// return `true`.
std::vector<CaseResult> run_test_functions(const std::filesystem::path& file, const Options& options);

/// All cases of a manifest followed by the `test*` functions of every file it
/// mentions.
std::vector<CaseResult> run_manifest(const std::filesystem::path& manifest, const Options& options);

}  // namespace mrl
