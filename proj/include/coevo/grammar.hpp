#pragma once

// Xtext-style grammar subset: keywords, rule calls, assignments (=, +=, ?=),
// groups, alternatives, cardinalities (?, *, +) and cross-references
// [Target] / [Target|SyntaxRule]. Terminal rules are not declared by the
// grammar; ID, INT and STRING are builtin.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "coevo/error.hpp"

namespace coevo {

enum class AssignOp { Assign, Append, Flag };
enum class Cardinality { Optional, Many, OneOrMore };

inline const char* to_string(AssignOp op) {
  switch (op) {
    case AssignOp::Assign: return "=";
    case AssignOp::Append: return "+=";
    case AssignOp::Flag: return "?=";
  }
  return "?";
}

inline const char* to_string(Cardinality c) {
  switch (c) {
    case Cardinality::Optional: return "?";
    case Cardinality::Many: return "*";
    case Cardinality::OneOrMore: return "+";
  }
  return "?";
}

struct GrammarExpr;
using ExprPtr = std::shared_ptr<const GrammarExpr>;

struct Keyword {
  std::string text;
};
struct RuleCall {
  std::string target;
};
struct Assignment {
  std::string feature;
  AssignOp op = AssignOp::Assign;
  ExprPtr operand;
};
struct CrossRef {
  std::string target;
  std::string syntax = "ID";
};
struct Group {
  std::vector<GrammarExpr> items;
};
struct Alternatives {
  std::vector<GrammarExpr> options;
};
struct Repeat {
  ExprPtr inner;
  Cardinality cardinality = Cardinality::Many;
};

/// One node of a rule body. Child indices used by `ExprPath`: Group item i,
/// Alternatives option i, and 0 for the operand of Assignment / inner of Repeat.
struct GrammarExpr {
  using Variant = std::variant<Keyword, RuleCall, Assignment, CrossRef, Group, Alternatives, Repeat>;
  Variant node;

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(node);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(node);
  }
};

using ExprPath = std::vector<std::size_t>;

inline bool operator==(const GrammarExpr& a, const GrammarExpr& b);

inline bool operator==(const Keyword& a, const Keyword& b) { return a.text == b.text; }
inline bool operator==(const RuleCall& a, const RuleCall& b) { return a.target == b.target; }
inline bool operator==(const CrossRef& a, const CrossRef& b) {
  return a.target == b.target && a.syntax == b.syntax;
}
inline bool operator==(const Assignment& a, const Assignment& b) {
  return a.feature == b.feature && a.op == b.op && *a.operand == *b.operand;
}
inline bool operator==(const Group& a, const Group& b) { return a.items == b.items; }
inline bool operator==(const Alternatives& a, const Alternatives& b) { return a.options == b.options; }
inline bool operator==(const Repeat& a, const Repeat& b) {
  return a.cardinality == b.cardinality && *a.inner == *b.inner;
}
inline bool operator==(const GrammarExpr& a, const GrammarExpr& b) { return a.node == b.node; }

// Construction helpers, mostly for tests and the diff engine.
namespace expr {
inline GrammarExpr keyword(std::string text) { return {Keyword{std::move(text)}}; }
inline GrammarExpr call(std::string target) { return {RuleCall{std::move(target)}}; }
inline GrammarExpr xref(std::string target, std::string syntax = "ID") {
  return {CrossRef{std::move(target), std::move(syntax)}};
}
inline GrammarExpr assign(std::string feature, AssignOp op, GrammarExpr operand) {
  return {Assignment{std::move(feature), op, std::make_shared<const GrammarExpr>(std::move(operand))}};
}
inline GrammarExpr repeat(GrammarExpr inner, Cardinality c) {
  return {Repeat{std::make_shared<const GrammarExpr>(std::move(inner)), c}};
}
/// Collapses a single item to the item itself.
inline GrammarExpr group(std::vector<GrammarExpr> items) {
  if (items.size() == 1) return std::move(items.front());
  return {Group{std::move(items)}};
}
inline GrammarExpr alternatives(std::vector<GrammarExpr> options) {
  if (options.size() == 1) return std::move(options.front());
  return {Alternatives{std::move(options)}};
}
}  // namespace expr

struct Rule {
  std::string name;
  GrammarExpr body;

  bool operator==(const Rule&) const = default;
};

struct Grammar {
  std::string name;
  std::string preamble;
  std::vector<Rule> rules;

  const Rule* find_rule(std::string_view rule_name) const {
    for (const auto& r : rules)
      if (r.name == rule_name) return &r;
    return nullptr;
  }
  const Rule& entry_rule() const {
    if (rules.empty()) throw PreconditionViolated("grammar has no rules");
    return rules.front();
  }
  std::vector<std::string> keywords() const;
};

/// Equality over rules only; the opaque preamble does not take part.
inline bool structurally_equal(const Grammar& a, const Grammar& b) { return a.rules == b.rules; }

inline bool is_builtin_terminal(std::string_view name) {
  return name == "ID" || name == "INT" || name == "STRING";
}

/// Returns the element at `path` inside `root`, or nullptr if the path leaves
/// the tree.
inline const GrammarExpr* expr_at(const GrammarExpr& root, const ExprPath& path) {
  const GrammarExpr* cur = &root;
  for (std::size_t idx : path) {
    if (const auto* g = std::get_if<Group>(&cur->node)) {
      if (idx >= g->items.size()) return nullptr;
      cur = &g->items[idx];
    } else if (const auto* a = std::get_if<Alternatives>(&cur->node)) {
      if (idx >= a->options.size()) return nullptr;
      cur = &a->options[idx];
    } else if (const auto* r = std::get_if<Repeat>(&cur->node)) {
      if (idx != 0) return nullptr;
      cur = r->inner.get();
    } else if (const auto* as = std::get_if<Assignment>(&cur->node)) {
      if (idx != 0) return nullptr;
      cur = as->operand.get();
    } else {
      return nullptr;
    }
  }
  return cur;
}

/// Calls `fn(expr)` on every node in pre-order.
template <class Fn>
void visit_exprs(const GrammarExpr& e, Fn&& fn) {
  fn(e);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Group>) {
          for (const auto& i : n.items) visit_exprs(i, fn);
        } else if constexpr (std::is_same_v<T, Alternatives>) {
          for (const auto& o : n.options) visit_exprs(o, fn);
        } else if constexpr (std::is_same_v<T, Repeat>) {
          visit_exprs(*n.inner, fn);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          visit_exprs(*n.operand, fn);
        }
      },
      e.node);
}

inline std::vector<std::string> Grammar::keywords() const {
  std::set<std::string> kws;
  for (const auto& r : rules)
    visit_exprs(r.body, [&](const GrammarExpr& e) {
      if (const auto* k = std::get_if<Keyword>(&e.node)) kws.insert(k->text);
    });
  return {kws.begin(), kws.end()};
}

// ---------------------------------------------------------------------------
// Pretty printing

namespace detail {

inline std::string quote_keyword(const std::string& text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

// Precedence: 0 = alternatives, 1 = group, 2 = postfix operand.
inline std::string print_expr(const GrammarExpr& e, int context) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Keyword>) {
          return quote_keyword(n.text);
        } else if constexpr (std::is_same_v<T, RuleCall>) {
          return n.target;
        } else if constexpr (std::is_same_v<T, CrossRef>) {
          return n.syntax == "ID" ? "[" + n.target + "]" : "[" + n.target + "|" + n.syntax + "]";
        } else if constexpr (std::is_same_v<T, Assignment>) {
          std::string s = n.feature + to_string(n.op) + print_expr(*n.operand, 2);
          return context >= 2 ? "(" + s + ")" : s;
        } else if constexpr (std::is_same_v<T, Group>) {
          std::string s;
          for (std::size_t i = 0; i < n.items.size(); ++i) {
            if (i) s += ' ';
            s += print_expr(n.items[i], n.items[i].template is<Group>() ? 2 : 1);
          }
          return context >= 2 ? "(" + s + ")" : s;
        } else if constexpr (std::is_same_v<T, Alternatives>) {
          std::string s;
          for (std::size_t i = 0; i < n.options.size(); ++i) {
            if (i) s += " | ";
            s += print_expr(n.options[i], 1);
          }
          return context >= 1 ? "(" + s + ")" : s;
        } else {
          return print_expr(*n.inner, 2) + to_string(n.cardinality);
        }
      },
      e.node);
}

}  // namespace detail

inline std::string to_string(const GrammarExpr& e) { return detail::print_expr(e, 0); }

/// Renders the preamble verbatim followed by one `Name: body;` per rule.
/// Re-parsing the result yields a structurally equal grammar.
inline std::string to_string(const Grammar& g) {
  std::string out = g.preamble;
  if (!out.empty() && out.back() != '\n') out += '\n';
  for (const auto& r : g.rules) out += r.name + ":\n    " + to_string(r.body) + ";\n\n";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct GToken {
  enum Kind { Ident, String, Symbol, End } kind = End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class GrammarLexer {
 public:
  GrammarLexer(std::string_view src, std::size_t first_line) : src_(src), line_(first_line) {}

  std::vector<GToken> run() {
    std::vector<GToken> out;
    while (true) {
      skip_trivia();
      GToken t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = GToken::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '^') {
        std::size_t start = pos_;
        advance();
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = GToken::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
        if (t.text.front() == '^') t.text.erase(0, 1);
      } else if (c == '\'' || c == '"') {
        t.kind = GToken::String;
        advance();
        while (true) {
          if (pos_ >= src_.size()) throw SyntaxError(t.line, t.column, "unterminated keyword literal");
          char d = src_[pos_];
          if (d == c) {
            advance();
            break;
          }
          if (d == '\\') {
            advance();
            if (pos_ >= src_.size()) throw SyntaxError(t.line, t.column, "unterminated keyword literal");
            char e = src_[pos_];
            t.text.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
            advance();
            continue;
          }
          t.text.push_back(d);
          advance();
        }
      } else {
        static constexpr std::string_view two[] = {"+=", "?=", "=>", "->", "..", "::"};
        t.kind = GToken::Symbol;
        for (auto sym : two)
          if (src_.substr(pos_, 2) == sym) t.text = std::string(sym);
        if (t.text.empty()) t.text = std::string(1, c);
        for (std::size_t k = 0; k < t.text.size(); ++k) advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (src_.substr(pos_, 2) == "/*") {
        std::size_t l = line_, col = col_;
        advance();
        advance();
        while (pos_ < src_.size() && src_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= src_.size()) throw SyntaxError(l, col, "unterminated comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::size_t col_ = 1;
};

class GrammarParser {
 public:
  explicit GrammarParser(std::vector<GToken> toks) : toks_(std::move(toks)) {}

  std::vector<Rule> rules() {
    std::vector<Rule> out;
    while (peek().kind != GToken::End) out.push_back(rule());
    return out;
  }

 private:
  const GToken& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == GToken::Symbol && peek(ahead).text == s;
  }
  GToken take() {
    GToken t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const auto& t = peek();
    std::string found = t.kind == GToken::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.line, t.column, what + ", found " + found);
  }
  void expect_symbol(std::string_view s) {
    if (!at_symbol(s)) fail("expected '" + std::string(s) + "'");
    take();
  }
  void reject_unsupported() const {
    const auto& t = peek();
    if (t.kind != GToken::Symbol) return;
    if (t.text == "&") throw UnsupportedConstruct("unordered group '&' at line " + std::to_string(t.line));
    if (t.text == "=>" || t.text == "->")
      throw UnsupportedConstruct("syntactic predicate '" + t.text + "' at line " + std::to_string(t.line));
    if (t.text == "{") throw UnsupportedConstruct("action '{...}' at line " + std::to_string(t.line));
    if (t.text == "!") throw UnsupportedConstruct("negation '!' at line " + std::to_string(t.line));
    if (t.text == "..") throw UnsupportedConstruct("character range '..' at line " + std::to_string(t.line));
    if (t.text == "@") throw UnsupportedConstruct("annotation at line " + std::to_string(t.line));
    if (t.text == "::") throw UnsupportedConstruct("qualified rule reference at line " + std::to_string(t.line));
  }

  Rule rule() {
    const GToken& head = peek();
    if (head.kind != GToken::Ident) fail("expected rule name");
    if ((head.text == "terminal" || head.text == "enum" || head.text == "fragment") &&
        peek(1).kind == GToken::Ident)
      throw UnsupportedConstruct(head.text + " rule '" + peek(1).text + "'");
    Rule r;
    r.name = take().text;
    if (peek().kind == GToken::Ident && peek().text == "returns")
      throw UnsupportedConstruct("'returns' clause on rule '" + r.name + "'");
    if (at_symbol("<")) throw UnsupportedConstruct("rule parameters on '" + r.name + "'");
    expect_symbol(":");
    r.body = alternatives();
    expect_symbol(";");
    return r;
  }

  GrammarExpr alternatives() {
    std::vector<GrammarExpr> options;
    options.push_back(group());
    while (at_symbol("|")) {
      take();
      options.push_back(group());
    }
    reject_unsupported();
    return expr::alternatives(std::move(options));
  }

  bool at_group_end() const {
    const auto& t = peek();
    if (t.kind == GToken::End) return true;
    return t.kind == GToken::Symbol && (t.text == ")" || t.text == ";" || t.text == "|" || t.text == "]");
  }

  GrammarExpr group() {
    std::vector<GrammarExpr> items;
    while (!at_group_end()) {
      reject_unsupported();
      items.push_back(element());
    }
    if (items.empty()) fail("expected grammar element");
    return expr::group(std::move(items));
  }

  GrammarExpr with_cardinality(GrammarExpr e) {
    if (at_symbol("?") || at_symbol("*") || at_symbol("+")) {
      char c = take().text[0];
      Cardinality card = c == '?' ? Cardinality::Optional : c == '*' ? Cardinality::Many : Cardinality::OneOrMore;
      return expr::repeat(std::move(e), card);
    }
    return e;
  }

  GrammarExpr element() {
    if (peek().kind == GToken::Ident &&
        (at_symbol("=", 1) || at_symbol("+=", 1) || at_symbol("?=", 1))) {
      GToken feature = take();
      std::string op_text = take().text;
      AssignOp op = op_text == "=" ? AssignOp::Assign : op_text == "+=" ? AssignOp::Append : AssignOp::Flag;
      reject_unsupported();
      GrammarExpr operand = atom();
      if (op == AssignOp::Flag && !operand.is<Keyword>())
        throw UnsupportedConstruct("'?=' with a non-keyword operand for feature '" + feature.text + "'");
      return with_cardinality(expr::assign(feature.text, op, std::move(operand)));
    }
    return with_cardinality(atom());
  }

  GrammarExpr atom() {
    const GToken& t = peek();
    if (t.kind == GToken::String) {
      GToken k = take();
      if (k.text.empty()) throw SyntaxError(k.line, k.column, "empty keyword");
      if (k.text.find('\n') != std::string::npos || k.text.find('\r') != std::string::npos)
        throw SyntaxError(k.line, k.column, "keyword contains a line break");
      reject_unsupported();
      return expr::keyword(k.text);
    }
    if (t.kind == GToken::Ident) {
      GToken id = take();
      reject_unsupported();
      return expr::call(id.text);
    }
    if (at_symbol("(")) {
      take();
      GrammarExpr inner = alternatives();
      expect_symbol(")");
      return inner;
    }
    if (at_symbol("[")) {
      take();
      if (peek().kind != GToken::Ident) fail("expected cross-reference target");
      std::string target = take().text;
      if (at_symbol("::")) reject_unsupported();
      std::string syntax = "ID";
      if (at_symbol("|")) {
        take();
        if (peek().kind != GToken::Ident) fail("expected cross-reference syntax rule");
        syntax = take().text;
      }
      expect_symbol("]");
      return expr::xref(std::move(target), std::move(syntax));
    }
    reject_unsupported();
    fail("expected grammar element");
  }

  std::vector<GToken> toks_;
  std::size_t pos_ = 0;
};

// A rule can start with a call to another rule without consuming input;
// such left-recursive cycles would make the instance parser loop.
inline bool nullable(const GrammarExpr& e, const Grammar& g, std::set<std::string>& visiting);

inline bool rule_nullable(const std::string& name, const Grammar& g, std::set<std::string>& visiting) {
  if (is_builtin_terminal(name)) return false;
  const Rule* r = g.find_rule(name);
  if (!r || visiting.count(name)) return false;
  visiting.insert(name);
  bool n = nullable(r->body, g, visiting);
  visiting.erase(name);
  return n;
}

inline bool nullable(const GrammarExpr& e, const Grammar& g, std::set<std::string>& visiting) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Keyword> || std::is_same_v<T, CrossRef>) {
          return false;
        } else if constexpr (std::is_same_v<T, RuleCall>) {
          return rule_nullable(n.target, g, visiting);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          return nullable(*n.operand, g, visiting);
        } else if constexpr (std::is_same_v<T, Group>) {
          return std::all_of(n.items.begin(), n.items.end(),
                             [&](const GrammarExpr& i) { return nullable(i, g, visiting); });
        } else if constexpr (std::is_same_v<T, Alternatives>) {
          return std::any_of(n.options.begin(), n.options.end(),
                             [&](const GrammarExpr& o) { return nullable(o, g, visiting); });
        } else {
          return n.cardinality != Cardinality::OneOrMore || nullable(*n.inner, g, visiting);
        }
      },
      e.node);
}

// Rules reachable at the left edge of `e` (before any token is consumed).
inline void left_calls(const GrammarExpr& e, const Grammar& g, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RuleCall>) {
          if (!is_builtin_terminal(n.target)) out.insert(n.target);
        } else if constexpr (std::is_same_v<T, CrossRef>) {
          if (!is_builtin_terminal(n.syntax)) out.insert(n.syntax);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          left_calls(*n.operand, g, out);
        } else if constexpr (std::is_same_v<T, Group>) {
          for (const auto& item : n.items) {
            left_calls(item, g, out);
            std::set<std::string> visiting;
            if (!nullable(item, g, visiting)) break;
          }
        } else if constexpr (std::is_same_v<T, Alternatives>) {
          for (const auto& o : n.options) left_calls(o, g, out);
        } else if constexpr (std::is_same_v<T, Repeat>) {
          left_calls(*n.inner, g, out);
        }
      },
      e.node);
}

inline void check_left_recursion(const Grammar& g) {
  std::map<std::string, std::set<std::string>> edges;
  for (const auto& r : g.rules) left_calls(r.body, g, edges[r.name]);
  for (const auto& r : g.rules) {
    std::set<std::string> seen;
    std::vector<std::string> stack(edges[r.name].begin(), edges[r.name].end());
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      if (cur == r.name) throw UnsupportedConstruct("left recursion through rule '" + r.name + "'");
      if (!seen.insert(cur).second) continue;
      for (const auto& next : edges[cur]) stack.push_back(next);
    }
  }
}

}  // namespace detail

/// Parses grammar text. Lines before the first `Name:` rule header are kept
/// verbatim as the preamble; the grammar name is taken from a
/// `grammar a.b.Name` declaration there, or else from the entry rule.
inline Grammar parse_grammar(std::string_view source) {
  static const std::regex rule_head(
      R"(^\s*((terminal|enum|fragment)\s+)?\^?[A-Za-z_][A-Za-z0-9_]*(\s+returns\s+[\w:.]+)?\s*(<[^>]*>)?\s*:($|[^:]))");
  Grammar g;
  std::size_t offset = 0;
  std::size_t line_no = 1;
  bool found = false;
  while (offset < source.size()) {
    std::size_t eol = source.find('\n', offset);
    std::size_t next = eol == std::string_view::npos ? source.size() : eol + 1;
    std::string line(source.substr(offset, next - offset));
    if (std::regex_search(line, rule_head)) {
      found = true;
      break;
    }
    offset = next;
    ++line_no;
  }
  g.preamble = std::string(source.substr(0, offset));
  if (!found) throw SyntaxError(line_no, 1, "grammar contains no rules");

  detail::GrammarLexer lexer(source.substr(offset), line_no);
  detail::GrammarParser parser(lexer.run());
  g.rules = parser.rules();

  std::set<std::string> names;
  for (const auto& r : g.rules) {
    if (is_builtin_terminal(r.name))
      throw UnsupportedConstruct("redefinition of builtin terminal '" + r.name + "'");
    if (!names.insert(r.name).second) throw DuplicateRule(r.name);
  }
  for (const auto& r : g.rules)
    visit_exprs(r.body, [&](const GrammarExpr& e) {
      if (const auto* c = std::get_if<RuleCall>(&e.node)) {
        if (!is_builtin_terminal(c->target) && !names.count(c->target))
          throw UnresolvedRuleReference(c->target);
      } else if (const auto* x = std::get_if<CrossRef>(&e.node)) {
        if (!names.count(x->target)) throw UnresolvedRuleReference(x->target);
        if (!is_builtin_terminal(x->syntax) && !names.count(x->syntax))
          throw UnresolvedRuleReference(x->syntax);
      }
    });
  detail::check_left_recursion(g);

  static const std::regex grammar_decl(R"((^|\n)\s*grammar\s+([A-Za-z_][\w.]*))");
  std::smatch m;
  std::string pre = g.preamble;
  if (std::regex_search(pre, m, grammar_decl)) {
    std::string qualified = m[2].str();
    auto dot = qualified.rfind('.');
    g.name = dot == std::string::npos ? qualified : qualified.substr(dot + 1);
  } else {
    g.name = g.rules.front().name;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Structural queries used by the diff and migration engines

/// Rules reachable from `rule` by following alternatives whose options are
/// plain rule calls (`A: B | C;` gives {B, C} and their own closures).
inline std::set<std::string> alternative_closure(const Grammar& g, const std::string& rule) {
  std::set<std::string> out;
  std::vector<std::string> work{rule};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    const Rule* r = g.find_rule(cur);
    if (!r) continue;
    std::vector<const GrammarExpr*> options;
    if (const auto* alt = std::get_if<Alternatives>(&r->body.node)) {
      for (const auto& o : alt->options) options.push_back(&o);
    } else {
      options.push_back(&r->body);
    }
    for (const auto* o : options)
      if (const auto* c = std::get_if<RuleCall>(&o->node))
        if (out.insert(c->target).second) work.push_back(c->target);
  }
  return out;
}

/// Removes every `?` / `*` repetition, leaving the part of `e` that every
/// match must contain. Returns nullopt when nothing mandatory remains.
inline std::optional<GrammarExpr> mandatory_skeleton(const GrammarExpr& e) {
  if (const auto* r = std::get_if<Repeat>(&e.node)) {
    if (r->cardinality != Cardinality::OneOrMore) return std::nullopt;
    return mandatory_skeleton(*r->inner);
  }
  if (const auto* g = std::get_if<Group>(&e.node)) {
    std::vector<GrammarExpr> kept;
    for (const auto& item : g->items)
      if (auto s = mandatory_skeleton(item)) kept.push_back(std::move(*s));
    if (kept.empty()) return std::nullopt;
    return expr::group(std::move(kept));
  }
  return e;
}

/// True when every token sequence accepted by syntax rule `from` is also
/// accepted by `to`: either the same rule, `to` lists `from` among its
/// alternatives, or `to` reduces to `from` once its optional parts are
/// dropped (`QualifiedName: ID ('.' ID)*` widens `ID`).
inline bool syntax_widens(const Grammar& from_grammar, const std::string& from, const Grammar& to_grammar,
                          const std::string& to) {
  if (from == to) return true;
  if (is_builtin_terminal(to)) return false;
  const Rule* target = to_grammar.find_rule(to);
  if (!target) return false;
  if (alternative_closure(to_grammar, to).count(from)) return true;
  auto skeleton = mandatory_skeleton(target->body);
  if (!skeleton) return false;
  if (*skeleton == expr::call(from)) return true;
  if (const Rule* source = from_grammar.find_rule(from)) return *skeleton == source->body;
  return false;
}

}  // namespace coevo
