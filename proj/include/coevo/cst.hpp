#pragma once

// Lossless concrete syntax trees for DSL instances.
//
// Lexing is driven by the grammar's keyword set plus the builtin ID, INT and
// STRING terminals; whitespace, newlines and comments become trivia attached
// to tokens. Trivia after a token up to and including the next newline is
// that token's trailing trivia; everything else leads the next token, and the
// final token absorbs end-of-file trivia. Rendering concatenates
// leading + text + trailing for every token, which reproduces the source.
//
// Parsing interprets the grammar as a PEG: ordered choice, greedy
// repetition, and backtracking bounded by ParseOptions::backtrack_budget.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coevo/error.hpp"
#include "coevo/grammar.hpp"
#include "coevo/text.hpp"

namespace coevo {

enum class TriviaKind { Whitespace, Newline, LineComment, BlockComment };

struct Trivia {
  TriviaKind kind = TriviaKind::Whitespace;
  std::string text;

  bool is_comment() const noexcept {
    return kind == TriviaKind::LineComment || kind == TriviaKind::BlockComment;
  }
  bool operator==(const Trivia&) const = default;
};

enum class TokenKind { Keyword, Id, Int, String, Invalid };

inline const char* to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Id: return "ID";
    case TokenKind::Int: return "INT";
    case TokenKind::String: return "STRING";
    case TokenKind::Invalid: return "invalid";
  }
  return "invalid";
}

inline std::optional<TokenKind> terminal_kind(std::string_view terminal) {
  if (terminal == "ID") return TokenKind::Id;
  if (terminal == "INT") return TokenKind::Int;
  if (terminal == "STRING") return TokenKind::String;
  return std::nullopt;
}

struct Token {
  TokenKind kind = TokenKind::Keyword;
  std::string text;
  std::vector<Trivia> leading;
  std::vector<Trivia> trailing;
  std::size_t line = 0;  // 1-based start line in the source it was lexed from; 0 if synthesized
  std::size_t column = 0;

  bool trailing_has_newline() const {
    return std::any_of(trailing.begin(), trailing.end(),
                       [](const Trivia& t) { return t.kind == TriviaKind::Newline; });
  }
};

/// Position of a token in CstDocument::tokens.
struct TokenId {
  std::size_t value = 0;
  auto operator<=>(const TokenId&) const = default;
};

/// One step from a rule body towards the grammar element that produced a
/// child: the child index (see ExprPath) plus, for steps into a Repeat, the
/// iteration number.
struct TrailStep {
  std::size_t index = 0;
  std::size_t iteration = 0;
  bool operator==(const TrailStep&) const = default;
};
using Trail = std::vector<TrailStep>;

inline ExprPath trail_path(const Trail& trail) {
  ExprPath p;
  p.reserve(trail.size());
  for (const auto& s : trail) p.push_back(s.index);
  return p;
}

struct CstChild {
  enum class Kind { Token, Node };
  Kind kind = Kind::Token;
  std::size_t index = 0;  // into CstDocument::tokens or CstDocument::nodes
  std::string feature;
  std::optional<AssignOp> op;
  Trail trail;
};

struct CstNode {
  std::string rule;
  std::vector<CstChild> children;
};

/// Tokens are stored flat in document order; nodes form a tree over them in
/// an arena where children always precede their parent.
struct CstDocument {
  std::vector<Token> tokens;
  std::vector<CstNode> nodes;
  std::size_t root = 0;
  std::string source;
  std::string grammar_name;
  std::vector<Trivia> dangling;  // trivia of a document without tokens

  const CstNode& root_node() const { return nodes.at(root); }
};

inline std::string render(const CstDocument& doc) {
  std::string out;
  out.reserve(doc.source.size() + 16);
  for (const auto& tok : doc.tokens) {
    for (const auto& t : tok.leading) out += t.text;
    out += tok.text;
    for (const auto& t : tok.trailing) out += t.text;
  }
  for (const auto& t : doc.dangling) out += t.text;
  return out;
}

inline std::size_t count_newlines(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') ++n;
    else if (s[i] == '\r' && !(i + 1 < s.size() && s[i + 1] == '\n')) ++n;
  }
  return n;
}

inline std::size_t token_end_line(const Token& t) { return t.line + count_newlines(t.text); }

// ---------------------------------------------------------------------------
// Lexing

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Trivia> dangling;
};

inline LexResult lex_instance(std::string_view src, const std::vector<std::string>& keywords) {
  std::vector<std::string> kws = keywords;
  std::sort(kws.begin(), kws.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

  LexResult out;
  std::vector<Trivia> pending;
  bool trailing_mode = false;  // collecting trailing trivia of out.tokens.back()
  std::size_t pos = 0, line = 1, col = 1;

  auto advance_over = [&](std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c == '\n' || (c == '\r' && !(i + 1 < s.size() && s[i + 1] == '\n'))) {
        ++line;
        col = 1;
      } else if (c != '\r') {
        ++col;
      }
    }
    pos += s.size();
  };
  auto add_trivia = [&](TriviaKind kind, std::size_t len) {
    std::string_view text = src.substr(pos, len);
    Trivia t{kind, std::string(text)};
    if (trailing_mode) {
      out.tokens.back().trailing.push_back(std::move(t));
      if (kind == TriviaKind::Newline) trailing_mode = false;
    } else {
      pending.push_back(std::move(t));
    }
    advance_over(text);
  };
  auto ident_len = [&](std::size_t at) -> std::size_t {
    if (at >= src.size()) return 0;
    char c = src[at];
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) return 0;
    std::size_t j = at + 1;
    while (j < src.size() && text::is_ident_char(src[j])) ++j;
    return j - at;
  };

  while (pos < src.size()) {
    char c = src[pos];
    if (c == '\n') {
      add_trivia(TriviaKind::Newline, 1);
      continue;
    }
    if (c == '\r') {
      add_trivia(TriviaKind::Newline, pos + 1 < src.size() && src[pos + 1] == '\n' ? 2 : 1);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\f' || c == '\v') {
      std::size_t j = pos;
      while (j < src.size() && (src[j] == ' ' || src[j] == '\t' || src[j] == '\f' || src[j] == '\v')) ++j;
      add_trivia(TriviaKind::Whitespace, j - pos);
      continue;
    }
    if (src.substr(pos, 2) == "//") {
      std::size_t j = pos;
      while (j < src.size() && src[j] != '\n' && src[j] != '\r') ++j;
      add_trivia(TriviaKind::LineComment, j - pos);
      continue;
    }
    std::size_t tok_line = line, tok_col = col;
    Token tok;
    std::size_t len = 0;
    if (src.substr(pos, 2) == "/*") {
      std::size_t close = src.find("*/", pos + 2);
      if (close != std::string_view::npos) {
        add_trivia(TriviaKind::BlockComment, close + 2 - pos);
        continue;
      }
      tok.kind = TokenKind::Invalid;
      len = src.size() - pos;
    } else {
      std::size_t kw_len = 0;
      for (const auto& k : kws)
        if (src.compare(pos, k.size(), k) == 0) {
          kw_len = k.size();
          break;
        }
      std::size_t id_len = ident_len(pos);
      std::size_t int_len = 0;
      while (pos + int_len < src.size() && std::isdigit(static_cast<unsigned char>(src[pos + int_len]))) ++int_len;
      std::size_t str_len = 0;
      bool str_closed = false;
      if (c == '"' || c == '\'') {
        std::size_t j = pos + 1;
        while (j < src.size() && src[j] != c) {
          if (src[j] == '\\' && j + 1 < src.size()) ++j;
          ++j;
        }
        str_closed = j < src.size();
        str_len = (str_closed ? j + 1 : j) - pos;
      }
      std::size_t best_terminal = std::max({id_len, int_len, str_len});
      if (kw_len > 0 && kw_len >= best_terminal) {
        tok.kind = TokenKind::Keyword;
        len = kw_len;
      } else if (best_terminal == 0) {
        tok.kind = TokenKind::Invalid;
        len = 1;
        while (pos + len < src.size() && (static_cast<unsigned char>(src[pos + len]) & 0xC0) == 0x80) ++len;
      } else if (best_terminal == str_len) {
        tok.kind = str_closed ? TokenKind::String : TokenKind::Invalid;
        len = str_len;
      } else if (best_terminal == id_len) {
        tok.kind = TokenKind::Id;
        len = id_len;
      } else {
        tok.kind = TokenKind::Int;
        len = int_len;
      }
    }
    tok.text = std::string(src.substr(pos, len));
    tok.leading = std::move(pending);
    pending.clear();
    tok.line = tok_line;
    tok.column = tok_col;
    advance_over(tok.text);
    out.tokens.push_back(std::move(tok));
    trailing_mode = true;
  }
  if (out.tokens.empty()) {
    out.dangling = std::move(pending);
  } else {
    auto& last = out.tokens.back().trailing;
    last.insert(last.end(), pending.begin(), pending.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// FIRST sets

struct FirstSet {
  std::set<std::string> keywords;
  std::set<TokenKind> terminals;
  bool nullable = false;

  bool contains(const Token& t) const {
    if (t.kind == TokenKind::Keyword) return keywords.count(t.text) > 0;
    return terminals.count(t.kind) > 0;
  }
};

namespace detail {

inline void collect_first(const GrammarExpr& e, const Grammar& g, FirstSet& out, std::set<std::string>& active,
                          bool& nullable);

inline void collect_first_rule(const std::string& name, const Grammar& g, FirstSet& out,
                               std::set<std::string>& active, bool& nullable) {
  if (auto k = terminal_kind(name)) {
    out.terminals.insert(*k);
    nullable = false;
    return;
  }
  const Rule* r = g.find_rule(name);
  if (!r || active.count(name)) {
    nullable = false;
    return;
  }
  active.insert(name);
  collect_first(r->body, g, out, active, nullable);
  active.erase(name);
}

inline void collect_first(const GrammarExpr& e, const Grammar& g, FirstSet& out, std::set<std::string>& active,
                          bool& nullable) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Keyword>) {
          out.keywords.insert(n.text);
          nullable = false;
        } else if constexpr (std::is_same_v<T, RuleCall>) {
          collect_first_rule(n.target, g, out, active, nullable);
        } else if constexpr (std::is_same_v<T, CrossRef>) {
          collect_first_rule(n.syntax, g, out, active, nullable);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          collect_first(*n.operand, g, out, active, nullable);
        } else if constexpr (std::is_same_v<T, Group>) {
          nullable = true;
          for (const auto& item : n.items) {
            bool item_nullable = true;
            collect_first(item, g, out, active, item_nullable);
            if (!item_nullable) {
              nullable = false;
              break;
            }
          }
        } else if constexpr (std::is_same_v<T, Alternatives>) {
          bool any = false;
          for (const auto& o : n.options) {
            bool opt_nullable = true;
            collect_first(o, g, out, active, opt_nullable);
            any = any || opt_nullable;
          }
          nullable = any;
        } else {
          bool inner_nullable = true;
          collect_first(*n.inner, g, out, active, inner_nullable);
          nullable = n.cardinality != Cardinality::OneOrMore || inner_nullable;
        }
      },
      e.node);
}

}  // namespace detail

inline FirstSet first_set(const GrammarExpr& e, const Grammar& g) {
  FirstSet fs;
  std::set<std::string> active;
  bool nullable = true;
  detail::collect_first(e, g, fs, active, nullable);
  fs.nullable = nullable;
  return fs;
}

/// The `*`/`+` repetition that makes up the entry rule's body (such as
/// `(elements+=Type)*`), or nullptr when the entry rule has none at its top
/// level. Used for error resynchronization and response sniffing.
inline const Repeat* entry_repetition(const Grammar& g) {
  const GrammarExpr& body = g.entry_rule().body;
  auto is_list = [](const GrammarExpr& e) {
    const auto* r = std::get_if<Repeat>(&e.node);
    return r && r->cardinality != Cardinality::Optional ? r : nullptr;
  };
  if (const auto* r = is_list(body)) return r;
  if (const auto* grp = std::get_if<Group>(&body.node))
    for (const auto& item : grp->items)
      if (const auto* r = is_list(item)) return r;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParseOptions {
  std::size_t backtrack_budget = 10'000;
};

namespace detail {

class InstanceParser {
 public:
  InstanceParser(const Grammar& g, const std::vector<Token>& toks, ParseOptions opts)
      : g_(g), toks_(toks), opts_(opts) {}

  /// Entry rule followed by end of input; returns the root node index.
  std::optional<std::size_t> parse_document() {
    pos_ = 0;
    const Rule& entry = g_.entry_rule();
    CstNode root{entry.name, {}};
    Trail trail;
    if (!parse(entry.body, root, trail, {})) return std::nullopt;
    if (pos_ != toks_.size()) {
      note_failure(pos_, "end of input");
      return std::nullopt;
    }
    nodes_.push_back(std::move(root));
    return nodes_.size() - 1;
  }

  /// Zero or more `inner` from token `start` to end of input.
  bool parse_tail(const GrammarExpr& inner, std::size_t start) {
    pos_ = start;
    GrammarExpr list = expr::repeat(inner, Cardinality::Many);
    CstNode scratch{"", {}};
    Trail trail;
    if (!parse(list, scratch, trail, {})) return false;
    if (pos_ != toks_.size()) {
      note_failure(pos_, "end of input");
      return false;
    }
    return true;
  }

  std::vector<CstNode> take_nodes() { return std::move(nodes_); }
  std::size_t failure_pos() const { return fail_pos_; }

  std::string expected_description() const {
    std::string s;
    for (const auto& e : expected_) {
      if (!s.empty()) s += " or ";
      s += e;
    }
    return s.empty() ? "input" : s;
  }

 private:
  struct Ctx {
    const std::string* feature = nullptr;
    std::optional<AssignOp> op;
  };
  struct Mark {
    std::size_t pos, children, arena;
  };

  Mark mark(const CstNode& frame) const { return {pos_, frame.children.size(), nodes_.size()}; }

  void restore(CstNode& frame, const Mark& m) {
    if (pos_ > m.pos && ++backtracks_ > opts_.backtrack_budget) throw AmbiguityLimitExceeded(opts_.backtrack_budget);
    pos_ = m.pos;
    frame.children.resize(m.children);
    nodes_.resize(m.arena);
  }

  void note_failure(std::size_t at, std::string expected) {
    if (!has_failure_ || at > fail_pos_) {
      has_failure_ = true;
      fail_pos_ = at;
      expected_.clear();
    }
    if (at == fail_pos_) expected_.insert(std::move(expected));
  }

  void push_child(CstNode& frame, CstChild::Kind kind, std::size_t index, const Ctx& ctx, const Trail& trail) {
    CstChild c;
    c.kind = kind;
    c.index = index;
    if (ctx.feature) c.feature = *ctx.feature;
    c.op = ctx.op;
    c.trail = trail;
    frame.children.push_back(std::move(c));
  }

  bool match_terminal(TokenKind kind, const char* name, CstNode& frame, const Trail& trail, const Ctx& ctx) {
    if (pos_ < toks_.size() && toks_[pos_].kind == kind) {
      push_child(frame, CstChild::Kind::Token, pos_++, ctx, trail);
      return true;
    }
    note_failure(pos_, name);
    return false;
  }

  bool call_rule(const std::string& name, CstNode& frame, const Trail& trail, const Ctx& ctx) {
    if (auto k = terminal_kind(name)) return match_terminal(*k, name.c_str(), frame, trail, ctx);
    const Rule* rule = g_.find_rule(name);
    if (!rule) throw UnresolvedRuleReference(name);
    CstNode child{rule->name, {}};
    Trail child_trail;
    if (!parse(rule->body, child, child_trail, {})) return false;
    nodes_.push_back(std::move(child));
    push_child(frame, CstChild::Kind::Node, nodes_.size() - 1, ctx, trail);
    return true;
  }

  // On failure the parser state (position, frame children, node arena) is
  // left exactly as it was on entry.
  bool parse(const GrammarExpr& e, CstNode& frame, Trail& trail, Ctx ctx) {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Keyword>) {
            if (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Keyword && toks_[pos_].text == n.text) {
              push_child(frame, CstChild::Kind::Token, pos_++, ctx, trail);
              return true;
            }
            note_failure(pos_, "'" + n.text + "'");
            return false;
          } else if constexpr (std::is_same_v<T, RuleCall>) {
            return call_rule(n.target, frame, trail, ctx);
          } else if constexpr (std::is_same_v<T, CrossRef>) {
            return call_rule(n.syntax, frame, trail, ctx);
          } else if constexpr (std::is_same_v<T, Assignment>) {
            trail.push_back({0, 0});
            bool ok = parse(*n.operand, frame, trail, Ctx{&n.feature, n.op});
            trail.pop_back();
            return ok;
          } else if constexpr (std::is_same_v<T, Group>) {
            Mark m = mark(frame);
            for (std::size_t i = 0; i < n.items.size(); ++i) {
              trail.push_back({i, 0});
              bool ok = parse(n.items[i], frame, trail, ctx);
              trail.pop_back();
              if (!ok) {
                restore(frame, m);
                return false;
              }
            }
            return true;
          } else if constexpr (std::is_same_v<T, Alternatives>) {
            for (std::size_t i = 0; i < n.options.size(); ++i) {
              trail.push_back({i, 0});
              bool ok = parse(n.options[i], frame, trail, ctx);
              trail.pop_back();
              if (ok) return true;
            }
            return false;
          } else {
            std::size_t count = 0;
            while (!(n.cardinality == Cardinality::Optional && count == 1)) {
              Mark m = mark(frame);
              trail.push_back({0, count});
              bool ok = parse(*n.inner, frame, trail, ctx);
              trail.pop_back();
              if (!ok) break;
              if (pos_ == m.pos) {
                restore(frame, m);
                break;
              }
              ++count;
            }
            return !(n.cardinality == Cardinality::OneOrMore && count == 0);
          }
        },
        e.node);
  }

  const Grammar& g_;
  const std::vector<Token>& toks_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
  std::vector<CstNode> nodes_;
  std::size_t backtracks_ = 0;
  bool has_failure_ = false;
  std::size_t fail_pos_ = 0;
  std::set<std::string> expected_;
};

inline std::pair<std::size_t, std::size_t> failure_location(const std::vector<Token>& toks, std::size_t at) {
  if (at < toks.size()) return {toks[at].line, toks[at].column};
  if (toks.empty()) return {1, 1};
  const Token& last = toks.back();
  return {token_end_line(last), last.column + last.text.size()};
}

inline std::string failure_found(const std::vector<Token>& toks, std::size_t at) {
  return at < toks.size() ? "'" + toks[at].text + "'" : "end of input";
}

}  // namespace detail

/// Parses `source` against `grammar`; throws ParseError when it does not
/// conform and AmbiguityLimitExceeded when backtracking runs over budget.
inline CstDocument parse_instance(std::string_view source, const Grammar& grammar, ParseOptions opts = {}) {
  LexResult lexed = lex_instance(source, grammar.keywords());
  detail::InstanceParser parser(grammar, lexed.tokens, opts);
  auto root = parser.parse_document();
  if (!root) {
    auto [line, col] = detail::failure_location(lexed.tokens, parser.failure_pos());
    throw ParseError(line, col, parser.expected_description(), detail::failure_found(lexed.tokens, parser.failure_pos()));
  }
  CstDocument doc;
  doc.nodes = parser.take_nodes();
  doc.root = *root;
  doc.tokens = std::move(lexed.tokens);
  doc.dangling = std::move(lexed.dangling);
  doc.source = std::string(source);
  doc.grammar_name = grammar.name;
  return doc;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationError {
  std::size_t line = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationError> errors;
  std::size_t error_line_count = 0;

  bool ok() const noexcept { return errors.empty(); }
};

/// Conformance check that keeps going after the first error: it
/// resynchronizes at the next line whose first token can start an element
/// of the entry rule's top-level list, and counts every line on which a
/// parse attempt fails.
inline ValidationReport validate(std::string_view source, const Grammar& grammar, ParseOptions opts = {}) {
  ValidationReport report;
  LexResult lexed = lex_instance(source, grammar.keywords());
  const auto& toks = lexed.tokens;
  std::set<std::size_t> lines;
  auto record = [&](std::size_t line, std::string message) {
    report.errors.push_back({line, std::move(message)});
    lines.insert(line);
  };
  auto describe = [&](const detail::InstanceParser& p) {
    return "expected " + p.expected_description() + " but found " + detail::failure_found(toks, p.failure_pos());
  };

  try {
    detail::InstanceParser parser(grammar, toks, opts);
    if (parser.parse_document()) return report;
    std::size_t fail = parser.failure_pos();
    record(detail::failure_location(toks, fail).first, describe(parser));

    const Repeat* list = entry_repetition(grammar);
    if (list) {
      FirstSet starters = first_set(*list->inner, grammar);
      while (true) {
        std::size_t fail_line = detail::failure_location(toks, fail).first;
        std::optional<std::size_t> sync;
        for (std::size_t i = std::min(fail, toks.size()); i < toks.size(); ++i) {
          bool starts_line = i == 0 || toks[i].line > token_end_line(toks[i - 1]);
          if (toks[i].line > fail_line && starts_line && starters.contains(toks[i])) {
            sync = i;
            break;
          }
        }
        if (!sync) break;
        detail::InstanceParser retry(grammar, toks, opts);
        if (retry.parse_tail(*list->inner, *sync)) break;
        fail = retry.failure_pos();
        record(detail::failure_location(toks, fail).first, describe(retry));
      }
    }
  } catch (const AmbiguityLimitExceeded& e) {
    record(lines.empty() ? 1 : *lines.rbegin(), e.what());
  }
  report.error_line_count = lines.size();
  return report;
}

// ---------------------------------------------------------------------------
// Tree queries

inline std::optional<std::size_t> first_token(const CstDocument& doc, const CstChild& c) {
  if (c.kind == CstChild::Kind::Token) return c.index;
  for (const auto& child : doc.nodes[c.index].children)
    if (auto t = first_token(doc, child)) return t;
  return std::nullopt;
}

inline std::optional<std::size_t> last_token(const CstDocument& doc, const CstChild& c) {
  if (c.kind == CstChild::Kind::Token) return c.index;
  const auto& children = doc.nodes[c.index].children;
  for (auto it = children.rbegin(); it != children.rend(); ++it)
    if (auto t = last_token(doc, *it)) return t;
  return std::nullopt;
}

/// Indices of every node built for `rule`, in document order.
inline std::vector<std::size_t> nodes_of_rule(const CstDocument& doc, std::string_view rule) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack;
  if (!doc.nodes.empty()) stack.push_back(doc.root);
  while (!stack.empty()) {
    std::size_t n = stack.back();
    stack.pop_back();
    if (doc.nodes[n].rule == rule) out.push_back(n);
    const auto& ch = doc.nodes[n].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it)
      if (it->kind == CstChild::Kind::Node) stack.push_back(it->index);
  }
  return out;
}

}  // namespace coevo
