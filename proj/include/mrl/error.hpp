#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrl {

/// A region of some source text, rendered as `|uri|(offset,length)`.
struct SourceSpan {
  std::string uri;
  std::size_t offset = 0;
  std::size_t length = 0;

  std::string str() const;
};

enum class ErrorKind {
  // value-core
  ValueSyntaxError,
  UnknownTypeName,
  ArityError,
  // pattern-engine
  UndeclaredConstructor,
  TypeAnnotationError,
  // grammar-parser
  NoProductions,
  UnknownSymbol,
  DuplicateLabel,
  MultipleLayoutDecls,
  ParseError,
  AmbiguityError,
  ImplodeError,
  // module loading
  SyntaxError,
  DuplicateDeclaration,
  CyclicImport,
  ModuleNotFound,
  // evaluation
  NoApplicableAlternative,
  ReturnTypeError,
  ReplacementTypeError,
  FixpointBudgetExceeded,
  ConditionTypeError,
  FailOutsideBacktrackingScope,
  KeyTypeError,
  UnbalancedTemplate,
  IoError,
  TypeError,
  UndefinedName,
  MissingReturn,
  IndexOutOfBounds,
  AssertionFailed,
  StackOverflow,
};

std::string_view error_name(ErrorKind kind);

/// Every diagnostic raised by the library. The kind names match the names
/// used in corpus manifests (`!ErrorName`) and in thrown runtime values.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail, std::optional<SourceSpan> where = std::nullopt);

  ErrorKind kind() const { return kind_; }
  std::string_view name() const { return error_name(kind_); }
  const std::string& detail() const { return detail_; }
  const std::optional<SourceSpan>& where() const { return where_; }

  /// Attaches a location if none is present yet.
  Error& at(const SourceSpan& span);

 private:
  static std::string format(ErrorKind kind, const std::string& detail,
                            const std::optional<SourceSpan>& where);

  ErrorKind kind_;
  std::string detail_;
  std::optional<SourceSpan> where_;
};

}  // namespace mrl
