#include "mrl/error.hpp"

namespace mrl {

std::string SourceSpan::str() const {
  return "|" + uri + "|(" + std::to_string(offset) + "," + std::to_string(length) + ")";
}

std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ValueSyntaxError: return "ValueSyntaxError";
    case ErrorKind::UnknownTypeName: return "UnknownTypeName";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::UndeclaredConstructor: return "UndeclaredConstructor";
    case ErrorKind::TypeAnnotationError: return "TypeAnnotationError";
    case ErrorKind::NoProductions: return "NoProductions";
    case ErrorKind::UnknownSymbol: return "UnknownSymbol";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::MultipleLayoutDecls: return "MultipleLayoutDecls";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::AmbiguityError: return "AmbiguityError";
    case ErrorKind::ImplodeError: return "ImplodeError";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorKind::CyclicImport: return "CyclicImport";
    case ErrorKind::ModuleNotFound: return "ModuleNotFound";
    case ErrorKind::NoApplicableAlternative: return "NoApplicableAlternative";
    case ErrorKind::ReturnTypeError: return "ReturnTypeError";
    case ErrorKind::ReplacementTypeError: return "ReplacementTypeError";
    case ErrorKind::FixpointBudgetExceeded: return "FixpointBudgetExceeded";
    case ErrorKind::ConditionTypeError: return "ConditionTypeError";
    case ErrorKind::FailOutsideBacktrackingScope: return "FailOutsideBacktrackingScope";
    case ErrorKind::KeyTypeError: return "KeyTypeError";
    case ErrorKind::UnbalancedTemplate: return "UnbalancedTemplate";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::UndefinedName: return "UndefinedName";
    case ErrorKind::MissingReturn: return "MissingReturn";
    case ErrorKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorKind::AssertionFailed: return "AssertionFailed";
    case ErrorKind::StackOverflow: return "StackOverflow";
  }
  return "Error";
}

Error::Error(ErrorKind kind, std::string detail, std::optional<SourceSpan> where)
    : std::runtime_error(format(kind, detail, where)),
      kind_(kind),
      detail_(std::move(detail)),
      where_(std::move(where)) {}

Error& Error::at(const SourceSpan& span) {
  if (!where_) {
    where_ = span;
    static_cast<std::runtime_error&>(*this) = std::runtime_error(format(kind_, detail_, where_));
  }
  return *this;
}

std::string Error::format(ErrorKind kind, const std::string& detail,
                          const std::optional<SourceSpan>& where) {
  std::string out;
  if (where) out += where->str() + ": ";
  out += error_name(kind);
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace mrl
