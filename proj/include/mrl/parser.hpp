#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mrl/ast.hpp"

namespace mrl {

/// Parses one `.mrl` source file. Throws SyntaxError (or UnbalancedTemplate)
/// with the offending source span.
ast::Module parse_module(std::string_view source, const std::string& uri);

/// Parses interactive input: any mix of declarations, imports and statements.
/// A trailing expression statement may omit its semicolon.
std::vector<ast::ReplItem> parse_repl(std::string_view source, const std::string& uri);

/// Parses a single expression (used for `:type` and by tests).
ast::ExprPtr parse_expression(std::string_view source, const std::string& uri = "expr");

/// Parses a type such as `list[int]`; user names come back as Adt types.
TypeExpr parse_type(std::string_view source);

/// Converts an expression written in pattern position into a Pattern.
Pattern to_pattern(const ast::Expr& e);

}  // namespace mrl
