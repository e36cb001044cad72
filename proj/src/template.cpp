// String templates. Margins are stripped by the lexer; here interpolations
// are spliced in with auto-indent and `<for>`/`<if>` blocks are expanded
// into the same output buffer.

#include "machine.hpp"
#include "mrl/utf8.hpp"

namespace mrl::detail {

namespace {

std::size_t current_column(const std::string& out) {
  auto nl = out.rfind('\n');
  std::string_view line = nl == std::string::npos ? std::string_view(out)
                                                  : std::string_view(out).substr(nl + 1);
  return utf8::length(line);
}

}  // namespace

void Machine::render_parts(const std::vector<ast::TemplatePart>& parts, Env& env, std::string& out) {
  using PK = ast::TemplatePart::Kind;
  for (const auto& part : parts) {
    switch (part.kind) {
      case PK::Text: out += part.text; break;
      case PK::Interp: {
        Value v = eval(*part.expr, env);
        std::string s = v.is(Kind::Str) ? v.as_str() : render(v);
        const std::string indent(current_column(out), ' ');
        for (std::size_t i = 0; i < s.size(); ++i) {
          out += s[i];
          if (s[i] == '\n' && i + 1 < s.size() && s[i + 1] != '\n') out += indent;
        }
        break;
      }
      case PK::For: {
        FrameGuard scope(env);
        auto gen = solve_conds(part.conditions, 0, env);
        while (gen.next()) render_parts(part.body, env, out);
        break;
      }
      case PK::If: {
        FrameGuard scope(env);
        auto gen = solve_conds(part.conditions, 0, env);
        if (gen.next()) render_parts(part.body, env, out);
        else render_parts(part.else_body, env, out);
        break;
      }
    }
  }
}

}  // namespace mrl::detail
