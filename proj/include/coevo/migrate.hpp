#pragma once

// Deterministic instance migration.
//
// A plan is a list of token-level edits against a CST parsed with the old
// grammar. Mandatory additions (inserted keywords, introduced separators) are
// placed at the structurally corresponding position of every affected node;
// optional additions and widenings need no edit and are never instantiated.
// Anything the planner cannot handle exactly is reported as NeedsLlm rather
// than migrated partially.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "coevo/cst.hpp"
#include "coevo/error.hpp"
#include "coevo/gdiff.hpp"
#include "coevo/grammar.hpp"
#include "coevo/text.hpp"

namespace coevo {

enum class Side { Before, After };
enum class TriviaPolicy { KeepLeading, DropAll };

namespace cst_edit {

/// `token` must carry no trivia of its own. Inserted after the anchor it is
/// placed right after the anchor's text, so the anchor's trailing trivia
/// (same-line comment, newline) moves behind the new token.
struct InsertToken {
  TokenId anchor;
  Side side = Side::After;
  Token token;
};

/// KeepLeading re-homes the deleted token's leading and trailing trivia on
/// a neighbour so comments and line breaks survive; DropAll discards them.
struct DeleteToken {
  TokenId token;
  TriviaPolicy policy = TriviaPolicy::KeepLeading;
};

struct ReplaceTokenText {
  TokenId token;
  std::string text;
};

}  // namespace cst_edit

using CstEdit = std::variant<cst_edit::InsertToken, cst_edit::DeleteToken, cst_edit::ReplaceTokenText>;

inline TokenId edit_anchor(const CstEdit& e) {
  return std::visit(
      [](const auto& x) -> TokenId {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, cst_edit::InsertToken>) return x.anchor;
        else return x.token;
      },
      e);
}

struct MigrationPlan {
  std::vector<CstEdit> edits;
  std::set<std::size_t> touched_lines;  // 1-based lines of the original instance
};

struct NeedsLlm {
  std::vector<std::string> reasons;
};

using MigrationOutcome = std::variant<MigrationPlan, NeedsLlm>;

/// Lines of `doc` whose text an edit changes.
inline std::set<std::size_t> touched_lines(const CstDocument& doc, const std::vector<CstEdit>& edits) {
  std::set<std::size_t> lines;
  for (const auto& e : edits) {
    std::size_t idx = edit_anchor(e).value;
    if (idx >= doc.tokens.size()) throw AnchorNotFound(idx);
    const Token& t = doc.tokens[idx];
    if (const auto* ins = std::get_if<cst_edit::InsertToken>(&e)) {
      lines.insert(ins->side == Side::After ? token_end_line(t) : t.line);
    } else {
      for (std::size_t l = t.line; l <= token_end_line(t); ++l) lines.insert(l);
    }
  }
  return lines;
}

namespace detail {

inline Token keyword_token(const std::string& text) {
  Token t;
  t.kind = TokenKind::Keyword;
  t.text = text;
  return t;
}

inline bool trail_has_prefix(const Trail& trail, const ExprPath& path) {
  if (trail.size() < path.size()) return false;
  for (std::size_t i = 0; i < path.size(); ++i)
    if (trail[i].index != path[i]) return false;
  return true;
}

inline std::vector<std::size_t> iteration_key(const Trail& trail, std::size_t depth) {
  std::vector<std::size_t> key;
  for (std::size_t i = 0; i < depth; ++i) key.push_back(trail[i].iteration);
  return key;
}

/// Children of `node` produced under the element at `path`, grouped by the
/// match instance of that element (distinguished by repetition counters).
inline std::map<std::vector<std::size_t>, std::vector<const CstChild*>> instances_at(const CstNode& node,
                                                                                     const ExprPath& path) {
  std::map<std::vector<std::size_t>, std::vector<const CstChild*>> out;
  for (const auto& c : node.children)
    if (trail_has_prefix(c.trail, path)) out[iteration_key(c.trail, path.size())].push_back(&c);
  return out;
}

inline std::optional<std::size_t> last_token_of(const CstDocument& doc, const std::vector<const CstChild*>& cs) {
  for (auto it = cs.rbegin(); it != cs.rend(); ++it)
    if (auto t = last_token(doc, **it)) return t;
  return std::nullopt;
}

inline std::optional<std::size_t> first_token_of(const CstDocument& doc, const std::vector<const CstChild*>& cs) {
  for (const auto* c : cs)
    if (auto t = first_token(doc, *c)) return t;
  return std::nullopt;
}

inline bool cardinality_accepts(const std::string& card, std::size_t count) {
  if (card == "1") return count == 1;
  if (card == "?") return count <= 1;
  if (card == "+") return count >= 1;
  return true;
}

class Planner {
 public:
  Planner(const CstDocument& doc, const Grammar& old_g, const Grammar& new_g)
      : doc_(doc), old_g_(old_g), new_g_(new_g) {}

  MigrationOutcome run(const GrammarDiff& diff) {
    if (doc_.grammar_name != old_g_.name)
      throw InternalMismatch("document was parsed with grammar '" + doc_.grammar_name + "', expected '" +
                             old_g_.name + "'");
    check_keyword_collisions();
    for (const auto& name : diff.removed)
      if (!nodes_of_rule(doc_, name).empty()) reasons_.push_back("instance uses removed rule '" + name + "'");
    for (const auto& a : diff.added)
      if (a.reachability == Reachability::Mandatory)
        reasons_.push_back("new rule '" + a.rule.name + "' is mandatory and has no inferable content");
    for (const auto& m : diff.modified) plan_rule(m);

    if (!reasons_.empty()) return NeedsLlm{reasons_};
    std::stable_sort(edits_.begin(), edits_.end(), [](const CstEdit& a, const CstEdit& b) {
      return edit_anchor(a).value < edit_anchor(b).value;
    });
    MigrationPlan plan;
    plan.touched_lines = touched_lines(doc_, edits_);
    plan.edits = std::move(edits_);
    return plan;
  }

 private:
  void check_keyword_collisions() {
    auto old_kw = old_g_.keywords();
    std::set<std::string> fresh;
    for (const auto& k : new_g_.keywords())
      if (!std::binary_search(old_kw.begin(), old_kw.end(), k)) fresh.insert(k);
    for (const auto& t : doc_.tokens)
      if (t.kind == TokenKind::Id && fresh.count(t.text))
        reasons_.push_back("identifier '" + t.text + "' on line " + std::to_string(t.line) +
                           " is a keyword of the new grammar");
  }

  const GrammarExpr& old_element(const Rule& rule, const ExprPath& path) const {
    const GrammarExpr* e = expr_at(rule.body, path);
    if (!e)
      throw InternalMismatch("diff path does not exist in old rule '" + rule.name + "'");
    return *e;
  }

  void plan_rule(const RuleModification& m) {
    const Rule* rule = old_g_.find_rule(m.rule);
    if (!rule) throw InternalMismatch("modified rule '" + m.rule + "' is missing from the old grammar");
    auto nodes = nodes_of_rule(doc_, m.rule);
    for (const auto& e : m.edits) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, edit::KeywordInserted>) {
              insert_keyword(*rule, nodes, x);
            } else if constexpr (std::is_same_v<T, edit::KeywordRemoved>) {
              for (std::size_t n : nodes)
                for (const auto& c : doc_.nodes[n].children)
                  if (c.kind == CstChild::Kind::Token && trail_path(c.trail) == x.path)
                    edits_.push_back(cst_edit::DeleteToken{TokenId{c.index}, TriviaPolicy::KeepLeading});
            } else if constexpr (std::is_same_v<T, edit::SeparatorIntroduced>) {
              insert_separators(*rule, nodes, x);
            } else if constexpr (std::is_same_v<T, edit::CardinalityChanged>) {
              check_cardinality(*rule, nodes, x);
            } else if constexpr (std::is_same_v<T, edit::RuleCallRetargeted>) {
              if (!x.compatible)
                reasons_.push_back("rule '" + m.rule + "': call to '" + x.old_target + "' retargeted to '" +
                                   x.new_target + "', which does not accept it");
            } else if constexpr (std::is_same_v<T, edit::Unclassified>) {
              reasons_.push_back("rule '" + m.rule + "': " + x.description);
            }
            // OptionalGroupAdded and CrossRefWidened leave existing content valid.
          },
          e);
    }
  }

  void insert_keyword(const Rule& rule, const std::vector<std::size_t>& nodes, const edit::KeywordInserted& x) {
    const GrammarExpr& parent = old_element(rule, x.old_parent);
    std::set<std::string> visiting;
    if (!nodes.empty() && nullable(parent, old_g_, visiting)) {
      reasons_.push_back("rule '" + rule.name + "': keyword '" + x.text +
                         "' is inserted into a part that may match nothing");
      return;
    }
    const bool is_group = parent.is<Group>();
    for (std::size_t n : nodes) {
      for (const auto& [key, children] : instances_at(doc_.nodes[n], x.old_parent)) {
        std::vector<const CstChild*> before, after;
        for (const auto* c : children) {
          std::size_t item = 0;
          if (is_group) {
            if (c->trail.size() <= x.old_parent.size())
              throw InternalMismatch("CST trail does not match old rule '" + rule.name + "'");
            item = c->trail[x.old_parent.size()].index;
          }
          (item < x.old_position ? before : after).push_back(c);
        }
        if (auto t = last_token_of(doc_, before)) {
          edits_.push_back(cst_edit::InsertToken{TokenId{*t}, Side::After, keyword_token(x.text)});
        } else if (auto t2 = first_token_of(doc_, after)) {
          edits_.push_back(cst_edit::InsertToken{TokenId{*t2}, Side::Before, keyword_token(x.text)});
        } else {
          reasons_.push_back("rule '" + rule.name + "': no anchor token for keyword '" + x.text + "'");
        }
      }
    }
  }

  void insert_separators(const Rule& rule, const std::vector<std::size_t>& nodes,
                         const edit::SeparatorIntroduced& x) {
    if (!old_element(rule, x.old_path).is<Repeat>())
      throw InternalMismatch("separator path of rule '" + rule.name + "' is not a repetition");
    const std::size_t depth = x.old_path.size();
    for (std::size_t n : nodes) {
      for (const auto& [key, children] : instances_at(doc_.nodes[n], x.old_path)) {
        std::map<std::size_t, std::vector<const CstChild*>> elements;
        for (const auto* c : children) {
          if (c->trail.size() <= depth)
            throw InternalMismatch("CST trail does not match old rule '" + rule.name + "'");
          elements[c->trail[depth].iteration].push_back(c);
        }
        if (elements.size() < 2) continue;
        auto last = std::prev(elements.end());
        for (auto it = elements.begin(); it != last; ++it) {
          auto t = last_token_of(doc_, it->second);
          if (!t) {
            reasons_.push_back("rule '" + rule.name + "': list element without tokens");
            continue;
          }
          edits_.push_back(cst_edit::InsertToken{TokenId{*t}, Side::After, keyword_token(x.separator)});
        }
      }
    }
  }

  void check_cardinality(const Rule& rule, const std::vector<std::size_t>& nodes, const edit::CardinalityChanged& x) {
    const bool min_rises = (x.from == "?" || x.from == "*") && (x.to == "1" || x.to == "+");
    if (min_rises && !nodes.empty()) {
      reasons_.push_back("rule '" + rule.name + "': cardinality " + x.from + " -> " + x.to +
                         " makes an element mandatory");
      return;
    }
    if (x.from != "*" && x.from != "+") return;
    const GrammarExpr& el = old_element(rule, x.old_path);
    if (!el.is<Repeat>()) return;
    const std::size_t depth = x.old_path.size();
    for (std::size_t n : nodes)
      for (const auto& [key, children] : instances_at(doc_.nodes[n], x.old_path)) {
        std::set<std::size_t> iterations;
        for (const auto* c : children)
          if (c->trail.size() > depth) iterations.insert(c->trail[depth].iteration);
        if (!cardinality_accepts(x.to, iterations.size())) {
          reasons_.push_back("rule '" + rule.name + "': cardinality " + x.from + " -> " + x.to +
                             " rejects an existing list of " + std::to_string(iterations.size()) + " elements");
          return;
        }
      }
  }

  const CstDocument& doc_;
  const Grammar& old_g_;
  const Grammar& new_g_;
  std::vector<CstEdit> edits_;
  std::vector<std::string> reasons_;
};

inline bool needs_separation(const std::string& left, const std::string& right) {
  return !left.empty() && !right.empty() && text::is_ident_char(left.back()) && text::is_ident_char(right.front());
}

inline void merge_whitespace(std::vector<Trivia>& trivia) {
  std::vector<Trivia> out;
  for (auto& t : trivia) {
    if (t.kind == TriviaKind::Whitespace && !out.empty() && out.back().kind == TriviaKind::Whitespace) continue;
    out.push_back(std::move(t));
  }
  trivia = std::move(out);
}

inline void relocate_positions(std::vector<Token>& tokens, const std::vector<Trivia>& dangling_prefix) {
  std::size_t line = 1, col = 1;
  auto walk = [&](const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c == '\n' || (c == '\r' && !(i + 1 < s.size() && s[i + 1] == '\n'))) {
        ++line;
        col = 1;
      } else if (c != '\r') {
        ++col;
      }
    }
  };
  for (const auto& t : dangling_prefix) walk(t.text);
  for (auto& tok : tokens) {
    for (const auto& t : tok.leading) walk(t.text);
    tok.line = line;
    tok.column = col;
    walk(tok.text);
    for (const auto& t : tok.trailing) walk(t.text);
  }
}

}  // namespace detail

/// Plans the edits that make `document` (parsed with `old_grammar`) conform
/// to `new_grammar`, or explains why that needs an LLM.
inline MigrationOutcome plan_migration(const CstDocument& document, const GrammarDiff& diff,
                                       const Grammar& old_grammar, const Grammar& new_grammar) {
  return detail::Planner(document, old_grammar, new_grammar).run(diff);
}

inline CstDocument apply_plan(const CstDocument& doc, const MigrationPlan& plan) {
  const std::size_t n = doc.tokens.size();
  std::map<std::size_t, std::vector<Token>> before, after;
  std::map<std::size_t, TriviaPolicy> deleted;
  std::map<std::size_t, std::string> replaced;
  for (const auto& e : plan.edits) {
    std::size_t a = edit_anchor(e).value;
    if (a >= n) throw AnchorNotFound(a);
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, cst_edit::InsertToken>) {
            if (!x.token.leading.empty() || !x.token.trailing.empty())
              throw PreconditionViolated("inserted tokens must not carry trivia");
            (x.side == Side::Before ? before : after)[a].push_back(x.token);
          } else if constexpr (std::is_same_v<T, cst_edit::DeleteToken>) {
            if (deleted.count(a) || replaced.count(a)) throw PreconditionViolated("overlapping edits on one token");
            deleted[a] = x.policy;
          } else {
            if (deleted.count(a) || replaced.count(a)) throw PreconditionViolated("overlapping edits on one token");
            replaced[a] = x.text;
          }
        },
        e);
  }
  for (const auto& [a, _] : deleted)
    if (before.count(a) || after.count(a)) throw PreconditionViolated("insertion anchored on a deleted token");

  // Token stream with insertions and replacements; deletions are marked.
  std::vector<Token> toks;
  std::vector<bool> synthetic, dropped;
  std::vector<TriviaPolicy> policy;
  std::vector<std::size_t> remap(n);
  std::map<std::size_t, std::vector<std::size_t>> inserted_before, inserted_after;  // old index -> new indices
  auto push = [&](Token t, bool synth) {
    toks.push_back(std::move(t));
    synthetic.push_back(synth);
    dropped.push_back(false);
    policy.push_back(TriviaPolicy::KeepLeading);
    return toks.size() - 1;
  };
  for (std::size_t i = 0; i < n; ++i) {
    Token tok = doc.tokens[i];
    if (auto r = replaced.find(i); r != replaced.end()) tok.text = r->second;
    if (auto b = before.find(i); b != before.end()) {
      b->second.front().leading = std::move(tok.leading);
      tok.leading.clear();
      for (auto& t : b->second) inserted_before[i].push_back(push(std::move(t), true));
    }
    std::vector<Trivia> tail;
    bool has_after = after.count(i) > 0;
    if (has_after) tail = std::exchange(tok.trailing, {});
    remap[i] = push(std::move(tok), false);
    if (auto d = deleted.find(i); d != deleted.end()) {
      dropped[remap[i]] = true;
      policy[remap[i]] = d->second;
    }
    if (has_after) {
      auto& list = after[i];
      list.back().trailing = std::move(tail);
      for (auto& t : list) inserted_after[i].push_back(push(std::move(t), true));
    }
  }

  // Re-home trivia of deleted tokens.
  std::vector<Trivia> dangling = doc.dangling;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (!dropped[k] || policy[k] == TriviaPolicy::DropAll) continue;
    std::optional<std::size_t> prev, next;
    for (std::size_t p = k; p-- > 0;)
      if (!dropped[p]) {
        prev = p;
        break;
      }
    for (std::size_t q = k + 1; q < toks.size(); ++q)
      if (!dropped[q]) {
        next = q;
        break;
      }
    Token& gone = toks[k];
    std::vector<Trivia> leading = std::exchange(gone.leading, {});
    std::vector<Trivia> trailing = std::exchange(gone.trailing, {});
    std::vector<Trivia> moved = leading;
    moved.insert(moved.end(), trailing.begin(), trailing.end());
    if (prev && (!toks[*prev].trailing_has_newline() || !next)) {
      auto& tr = toks[*prev].trailing;
      tr.insert(tr.end(), moved.begin(), moved.end());
      detail::merge_whitespace(tr);
    } else if (next) {
      // Spaces after a line-initial token would otherwise indent its successor.
      bool line_start = leading.empty() || leading.back().kind == TriviaKind::Newline;
      auto tail = trailing.begin();
      while (line_start && tail != trailing.end() && tail->kind == TriviaKind::Whitespace) ++tail;
      moved = leading;
      moved.insert(moved.end(), tail, trailing.end());
      auto& ld = toks[*next].leading;
      ld.insert(ld.begin(), moved.begin(), moved.end());
      detail::merge_whitespace(ld);
    } else {
      dangling.insert(dangling.end(), moved.begin(), moved.end());
    }
  }

  // Compact surviving tokens.
  std::vector<std::size_t> final_index(toks.size(), static_cast<std::size_t>(-1));
  std::vector<Token> kept;
  std::vector<bool> kept_synthetic;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (dropped[k]) continue;
    final_index[k] = kept.size();
    kept.push_back(std::move(toks[k]));
    kept_synthetic.push_back(synthetic[k]);
  }
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    if (!(kept_synthetic[k] || kept_synthetic[k + 1])) continue;
    if (kept[k].trailing.empty() && kept[k + 1].leading.empty() && detail::needs_separation(kept[k].text, kept[k + 1].text))
      kept[k].trailing.push_back({TriviaKind::Whitespace, " "});
  }
  if (kept.empty()) {
    for (auto& t : toks) {
      dangling.insert(dangling.begin(), t.leading.begin(), t.leading.end());
    }
  }

  // Rebuild the tree over the new token indices.
  CstDocument out;
  out.nodes = doc.nodes;
  out.root = doc.root;
  out.grammar_name = doc.grammar_name;
  for (auto& node : out.nodes) {
    std::vector<CstChild> children;
    for (const auto& c : node.children) {
      if (c.kind == CstChild::Kind::Node) {
        children.push_back(c);
        continue;
      }
      auto emit_inserted = [&](const std::vector<std::size_t>& idxs) {
        for (std::size_t k : idxs) {
          CstChild ic;
          ic.kind = CstChild::Kind::Token;
          ic.index = final_index[k];
          children.push_back(std::move(ic));
        }
      };
      if (auto b = inserted_before.find(c.index); b != inserted_before.end()) emit_inserted(b->second);
      std::size_t fi = final_index[remap[c.index]];
      if (fi != static_cast<std::size_t>(-1)) {
        CstChild moved = c;
        moved.index = fi;
        children.push_back(std::move(moved));
      }
      if (auto a = inserted_after.find(c.index); a != inserted_after.end()) emit_inserted(a->second);
    }
    node.children = std::move(children);
  }
  out.tokens = std::move(kept);
  out.dangling = kept.empty() && out.tokens.empty() ? dangling : std::vector<Trivia>{};
  if (!out.tokens.empty() && !dangling.empty()) {
    auto& tr = out.tokens.back().trailing;
    tr.insert(tr.end(), dangling.begin(), dangling.end());
  }
  detail::relocate_positions(out.tokens, out.dangling);
  out.source = render(out);
  return out;
}

struct MigrationResult {
  std::string text;
  MigrationPlan plan;
};

/// parse -> diff -> plan -> apply -> render, with the result re-validated
/// against the new grammar.
inline std::variant<MigrationResult, NeedsLlm> migrate_deterministic(std::string_view instance,
                                                                     const Grammar& old_grammar,
                                                                     const Grammar& new_grammar,
                                                                     ParseOptions opts = {}) {
  CstDocument doc = parse_instance(instance, old_grammar, opts);
  GrammarDiff diff = diff_grammars(old_grammar, new_grammar);
  MigrationOutcome outcome = plan_migration(doc, diff, old_grammar, new_grammar);
  if (auto* needs = std::get_if<NeedsLlm>(&outcome)) return std::move(*needs);
  auto& plan = std::get<MigrationPlan>(outcome);
  std::string text = render(apply_plan(doc, plan));
  ValidationReport check = validate(text, new_grammar, opts);
  if (!check.ok())
    throw PostconditionViolated("migrated instance does not conform to '" + new_grammar.name +
                                "': line " + std::to_string(check.errors.front().line) + ": " +
                                check.errors.front().message);
  return MigrationResult{std::move(text), std::move(plan)};
}

}  // namespace coevo
