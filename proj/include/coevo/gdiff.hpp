#pragma once

// Typed differences between two grammar versions.
//
// Rules are matched by name. Bodies of rules present in both versions are
// aligned top-down: child lists are matched by a longest common subsequence
// keyed on element kind and keyword text / feature name / call target, and
// matched pairs are compared recursively. Known evolution patterns are
// classified before anything falls back to Unclassified.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coevo/grammar.hpp"

namespace coevo {

enum class Reachability { OptionalOnly, Mandatory, Unreachable };

inline const char* to_string(Reachability r) {
  switch (r) {
    case Reachability::OptionalOnly: return "optional_only";
    case Reachability::Mandatory: return "mandatory";
    case Reachability::Unreachable: return "unreachable";
  }
  return "unreachable";
}

struct RuleAddition {
  Rule rule;
  Reachability reachability = Reachability::Unreachable;
};

namespace edit {

/// A bare keyword added to a group. `old_parent` / `old_position` locate the
/// slot in the old body: insert before old item `old_position` of the group
/// at `old_parent` (a non-group element counts as a one-item group).
struct KeywordInserted {
  ExprPath path;
  std::string text;
  bool mandatory = true;
  ExprPath old_parent;
  std::size_t old_position = 0;
};

/// `path` is the keyword's location in the old body.
struct KeywordRemoved {
  ExprPath path;
  std::string text;
};

/// `(X)*` rewritten to `(X (sep X)*)?`.
struct SeparatorIntroduced {
  ExprPath path;
  ExprPath old_path;
  std::string separator;
  std::string list_feature;
};

struct OptionalGroupAdded {
  ExprPath path;
  GrammarExpr group;
};

/// Cardinalities are spelled "1", "?", "*" or "+".
struct CardinalityChanged {
  ExprPath path;
  ExprPath old_path;
  std::string from;
  std::string to;
};

/// `aspect` is "syntax" when the syntax rule changed (`[Entity]` to
/// `[Entity|QualifiedName]`) and "target" when the referenced type changed.
struct CrossRefWidened {
  ExprPath path;
  std::string aspect;
  std::string reference;
  std::string old_target;
  std::string new_target;
};

struct RuleCallRetargeted {
  ExprPath path;
  std::string old_target;
  std::string new_target;
  bool compatible = false;
};

struct Unclassified {
  ExprPath path;
  std::string description;
};

}  // namespace edit

using ElementEdit = std::variant<edit::KeywordInserted, edit::KeywordRemoved, edit::SeparatorIntroduced,
                                 edit::OptionalGroupAdded, edit::CardinalityChanged, edit::CrossRefWidened,
                                 edit::RuleCallRetargeted, edit::Unclassified>;

inline const char* edit_kind(const ElementEdit& e) {
  static constexpr const char* names[] = {"keyword_inserted",      "keyword_removed",     "separator_introduced",
                                          "optional_group_added",  "cardinality_changed", "cross_ref_widened",
                                          "rule_call_retargeted", "unclassified"};
  return names[e.index()];
}

inline const ExprPath& edit_path(const ElementEdit& e) {
  return std::visit([](const auto& x) -> const ExprPath& { return x.path; }, e);
}

struct RuleModification {
  std::string rule;
  std::vector<ElementEdit> edits;
};

struct GrammarDiff {
  std::vector<RuleAddition> added;
  std::vector<std::string> removed;
  std::vector<RuleModification> modified;

  bool empty() const noexcept { return added.empty() && removed.empty() && modified.empty(); }

  const RuleModification* modification(std::string_view rule) const {
    for (const auto& m : modified)
      if (m.rule == rule) return &m;
    return nullptr;
  }
};

inline std::string cardinality_symbol(const GrammarExpr& e) {
  if (const auto* r = std::get_if<Repeat>(&e.node)) return to_string(r->cardinality);
  return "1";
}

/// Builds `(X (sep X)*)?` from the repeated element X of `(X)*`.
inline GrammarExpr expand_separator_pattern(const GrammarExpr& element, const std::string& separator) {
  std::vector<GrammarExpr> items;
  if (const auto* g = std::get_if<Group>(&element.node)) items = g->items;
  else items.push_back(element);
  std::vector<GrammarExpr> tail{expr::keyword(separator)};
  tail.insert(tail.end(), items.begin(), items.end());
  items.push_back(expr::repeat(expr::group(std::move(tail)), Cardinality::Many));
  return expr::repeat(expr::group(std::move(items)), Cardinality::Optional);
}

namespace detail {

inline std::string align_key(const GrammarExpr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Keyword>) return "k:" + n.text;
        else if constexpr (std::is_same_v<T, RuleCall>) return "c:" + n.target;
        else if constexpr (std::is_same_v<T, Assignment>) return "a:" + n.feature;
        else if constexpr (std::is_same_v<T, CrossRef>) return "x:" + n.target;
        else if constexpr (std::is_same_v<T, Group>) return align_key(n.items.front());
        else if constexpr (std::is_same_v<T, Alternatives>) return "alt:" + align_key(n.options.front());
        else return align_key(*n.inner);
      },
      e.node);
}

/// LCS alignment of two lists by key. Returns (i, j) pairs in order, with
/// npos marking a side that has no partner.
inline std::vector<std::pair<std::size_t, std::size_t>> align(const std::vector<std::string>& a,
                                                              const std::vector<std::string>& b) {
  constexpr auto none = static_cast<std::size_t>(-1);
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      out.emplace_back(i++, j++);
    } else if (j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j])) {
      out.emplace_back(none, j++);
    } else {
      out.emplace_back(i++, none);
    }
  }
  return out;
}

inline std::string first_feature(const GrammarExpr& e) {
  std::string found;
  visit_exprs(e, [&](const GrammarExpr& x) {
    if (found.empty())
      if (const auto* a = std::get_if<Assignment>(&x.node)) found = a->feature;
  });
  return found;
}

inline ExprPath child(ExprPath p, std::size_t i) {
  p.push_back(i);
  return p;
}

class BodyDiffer {
 public:
  BodyDiffer(const Grammar& old_g, const Grammar& new_g, std::vector<ElementEdit>& out)
      : old_g_(old_g), new_g_(new_g), out_(out) {}

  void diff(const GrammarExpr& o, const GrammarExpr& n, const ExprPath& op, const ExprPath& np) {
    if (o == n) return;

    if (const auto* ro = std::get_if<Repeat>(&o.node);
        ro && ro->cardinality == Cardinality::Many && n.is<Repeat>()) {
      std::string sep = separator_of(*ro->inner, n);
      if (!sep.empty()) {
        out_.push_back(edit::SeparatorIntroduced{np, op, sep, first_feature(*ro->inner)});
        return;
      }
    }

    const auto* ro = std::get_if<Repeat>(&o.node);
    const auto* rn = std::get_if<Repeat>(&n.node);
    if (ro && rn) {
      if (ro->cardinality != rn->cardinality)
        out_.push_back(edit::CardinalityChanged{np, op, to_string(ro->cardinality), to_string(rn->cardinality)});
      diff(*ro->inner, *rn->inner, child(op, 0), child(np, 0));
      return;
    }
    if (!ro && rn) {
      out_.push_back(edit::CardinalityChanged{np, op, "1", to_string(rn->cardinality)});
      diff(o, *rn->inner, op, child(np, 0));
      return;
    }
    if (ro && !rn) {
      out_.push_back(edit::CardinalityChanged{np, op, to_string(ro->cardinality), "1"});
      diff(*ro->inner, n, child(op, 0), np);
      return;
    }

    if (o.is<Group>() || n.is<Group>()) {
      diff_group(o, n, op, np);
      return;
    }

    if (o.is<Alternatives>() && n.is<Alternatives>()) {
      diff_alternatives(o.as<Alternatives>(), n.as<Alternatives>(), op, np);
      return;
    }

    if (o.is<Assignment>() && n.is<Assignment>()) {
      const auto& ao = o.as<Assignment>();
      const auto& an = n.as<Assignment>();
      if (ao.feature == an.feature && ao.op == an.op) {
        diff(*ao.operand, *an.operand, child(op, 0), child(np, 0));
      } else {
        unclassified(np, "assignment '" + to_string(o) + "' replaced by '" + to_string(n) + "'");
      }
      return;
    }

    if (o.is<RuleCall>() && n.is<RuleCall>()) {
      const auto& from = o.as<RuleCall>().target;
      const auto& to = n.as<RuleCall>().target;
      bool compatible = alternative_closure(new_g_, to).count(from) > 0;
      out_.push_back(edit::RuleCallRetargeted{np, from, to, compatible});
      return;
    }

    if (o.is<CrossRef>() && n.is<CrossRef>()) {
      const auto& xo = o.as<CrossRef>();
      const auto& xn = n.as<CrossRef>();
      if (xo.syntax != xn.syntax) {
        if (syntax_widens(old_g_, xo.syntax, new_g_, xn.syntax))
          out_.push_back(edit::CrossRefWidened{np, "syntax", xn.target, xo.syntax, xn.syntax});
        else
          unclassified(np, "cross-reference syntax '" + xo.syntax + "' replaced by non-widening '" + xn.syntax + "'");
      }
      if (xo.target != xn.target) {
        if (alternative_closure(new_g_, xn.target).count(xo.target))
          out_.push_back(edit::CrossRefWidened{np, "target", xn.target, xo.target, xn.target});
        else
          unclassified(np, "cross-reference target '" + xo.target + "' replaced by '" + xn.target + "'");
      }
      return;
    }

    unclassified(np, "'" + to_string(o) + "' replaced by '" + to_string(n) + "'");
  }

 private:
  // Returns the separator when `n` is exactly `(X (sep X)*)?` for `(X)*`.
  static std::string separator_of(const GrammarExpr& element, const GrammarExpr& n) {
    const auto* opt = std::get_if<Repeat>(&n.node);
    if (!opt || opt->cardinality != Cardinality::Optional) return {};
    const auto* grp = std::get_if<Group>(&opt->inner->node);
    if (!grp) return {};
    const auto* tail = std::get_if<Repeat>(&grp->items.back().node);
    if (!tail) return {};
    const auto* tail_group = std::get_if<Group>(&tail->inner->node);
    if (!tail_group) return {};
    const auto* sep = std::get_if<Keyword>(&tail_group->items.front().node);
    if (!sep) return {};
    return expand_separator_pattern(element, sep->text) == n ? sep->text : std::string{};
  }

  void unclassified(const ExprPath& p, std::string description) {
    out_.push_back(edit::Unclassified{p, std::move(description)});
  }

  void diff_group(const GrammarExpr& o, const GrammarExpr& n, const ExprPath& op, const ExprPath& np) {
    const bool o_group = o.is<Group>();
    const bool n_group = n.is<Group>();
    std::vector<GrammarExpr> old_items = o_group ? o.as<Group>().items : std::vector<GrammarExpr>{o};
    std::vector<GrammarExpr> new_items = n_group ? n.as<Group>().items : std::vector<GrammarExpr>{n};
    auto old_path = [&](std::size_t i) { return o_group ? child(op, i) : op; };
    auto new_path = [&](std::size_t j) { return n_group ? child(np, j) : np; };

    std::vector<std::string> ok, nk;
    for (const auto& e : old_items) ok.push_back(align_key(e));
    for (const auto& e : new_items) nk.push_back(align_key(e));

    constexpr auto none = static_cast<std::size_t>(-1);
    std::size_t old_position = 0;  // old items consumed so far
    for (auto [i, j] : align(ok, nk)) {
      if (i != none && j != none) {
        diff(old_items[i], new_items[j], old_path(i), new_path(j));
        old_position = i + 1;
      } else if (i != none) {
        const auto& gone = old_items[i];
        if (const auto* k = std::get_if<Keyword>(&gone.node))
          out_.push_back(edit::KeywordRemoved{old_path(i), k->text});
        else
          unclassified(old_path(i), "element '" + to_string(gone) + "' removed");
        old_position = i + 1;
      } else {
        const auto& added = new_items[j];
        if (const auto* k = std::get_if<Keyword>(&added.node)) {
          out_.push_back(edit::KeywordInserted{new_path(j), k->text, true, op, old_position});
        } else if (const auto* r = std::get_if<Repeat>(&added.node);
                   r && r->cardinality != Cardinality::OneOrMore) {
          out_.push_back(edit::OptionalGroupAdded{new_path(j), added});
        } else {
          unclassified(new_path(j), "mandatory element '" + to_string(added) + "' inserted");
        }
      }
    }
  }

  void diff_alternatives(const Alternatives& o, const Alternatives& n, const ExprPath& op, const ExprPath& np) {
    std::vector<std::string> ok, nk;
    for (const auto& e : o.options) ok.push_back(align_key(e));
    for (const auto& e : n.options) nk.push_back(align_key(e));
    constexpr auto none = static_cast<std::size_t>(-1);
    for (auto [i, j] : align(ok, nk)) {
      if (i != none && j != none) {
        diff(o.options[i], n.options[j], child(op, i), child(np, j));
      } else if (i != none) {
        unclassified(child(op, i), "alternative '" + to_string(o.options[i]) + "' removed");
      } else {
        unclassified(child(np, j), "alternative '" + to_string(n.options[j]) + "' added");
      }
    }
  }

  const Grammar& old_g_;
  const Grammar& new_g_;
  std::vector<ElementEdit>& out_;
};

// Walks the new grammar from its entry rule. A call is guarded when the path
// to it crosses a `?`/`*`/`+` repetition, an alternatives node that keeps at
// least one pre-existing option, or a call site where the added rule only
// widens something the old grammar already accepted.
class ReachabilityWalker {
 public:
  ReachabilityWalker(const Grammar& old_g, const Grammar& new_g) : old_g_(old_g), new_g_(new_g) {}

  std::map<std::string, Reachability> run(const std::set<std::string>& added) {
    added_ = added;
    visit_rule(new_g_.entry_rule().name, false);
    std::map<std::string, Reachability> out;
    for (const auto& name : added) {
      if (!called_.count(name)) out[name] = Reachability::Unreachable;
      else out[name] = unguarded_.count(name) ? Reachability::Mandatory : Reachability::OptionalOnly;
    }
    return out;
  }

 private:
  bool is_added(const std::string& r) const { return added_.count(r) > 0; }

  bool widening_call(const std::string& target) const {
    for (const auto& r : alternative_closure(new_g_, target))
      if (old_g_.find_rule(r)) return true;
    return false;
  }

  bool widening_syntax(const std::string& syntax) const {
    const Rule* r = new_g_.find_rule(syntax);
    if (!r) return false;
    auto skeleton = mandatory_skeleton(r->body);
    if (!skeleton || !skeleton->is<RuleCall>()) return false;
    const auto& base = skeleton->as<RuleCall>().target;
    return is_builtin_terminal(base) || old_g_.find_rule(base) != nullptr;
  }

  void record_call(const std::string& target, bool guarded) {
    if (is_builtin_terminal(target)) return;
    called_.insert(target);
    if (!guarded) unguarded_.insert(target);
    visit_rule(target, guarded);
  }

  void visit_rule(const std::string& name, bool guarded) {
    if (!visited_.insert({name, guarded}).second) return;
    if (const Rule* r = new_g_.find_rule(name)) walk(r->body, guarded);
  }

  void walk(const GrammarExpr& e, bool guarded) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, RuleCall>) {
            record_call(n.target, guarded || (is_added(n.target) && widening_call(n.target)));
          } else if constexpr (std::is_same_v<T, CrossRef>) {
            record_call(n.syntax, guarded || (is_added(n.syntax) && widening_syntax(n.syntax)));
          } else if constexpr (std::is_same_v<T, Assignment>) {
            walk(*n.operand, guarded);
          } else if constexpr (std::is_same_v<T, Group>) {
            for (const auto& i : n.items) walk(i, guarded);
          } else if constexpr (std::is_same_v<T, Alternatives>) {
            bool keeps_existing = std::any_of(n.options.begin(), n.options.end(), [&](const GrammarExpr& o) {
              const auto* c = std::get_if<RuleCall>(&o.node);
              return !c || !is_added(c->target);
            });
            for (const auto& o : n.options) walk(o, guarded || keeps_existing);
          } else if constexpr (std::is_same_v<T, Repeat>) {
            walk(*n.inner, true);
          }
        },
        e.node);
  }

  const Grammar& old_g_;
  const Grammar& new_g_;
  std::set<std::string> added_;
  std::set<std::string> called_;
  std::set<std::string> unguarded_;
  std::set<std::pair<std::string, bool>> visited_;
};

}  // namespace detail

inline GrammarDiff diff_grammars(const Grammar& old_g, const Grammar& new_g) {
  GrammarDiff d;
  std::set<std::string> added_names;
  for (const auto& r : new_g.rules)
    if (!old_g.find_rule(r.name)) added_names.insert(r.name);
  for (const auto& r : old_g.rules)
    if (!new_g.find_rule(r.name)) d.removed.push_back(r.name);

  auto reach = detail::ReachabilityWalker(old_g, new_g).run(added_names);
  for (const auto& r : new_g.rules)
    if (added_names.count(r.name)) d.added.push_back({r, reach.at(r.name)});

  for (const auto& r : new_g.rules) {
    const Rule* before = old_g.find_rule(r.name);
    if (!before || before->body == r.body) continue;
    RuleModification m{r.name, {}};
    detail::BodyDiffer(old_g, new_g, m.edits).diff(before->body, r.body, {}, {});
    if (m.edits.empty()) m.edits.push_back(edit::Unclassified{{}, "rule body changed"});
    d.modified.push_back(std::move(m));
  }
  return d;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ElementEdit& e) {
  nlohmann::json j;
  j["kind"] = edit_kind(e);
  j["path"] = edit_path(e);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, edit::KeywordInserted>) {
          j["text"] = x.text;
          j["mandatory"] = x.mandatory;
          j["old_parent"] = x.old_parent;
          j["old_position"] = x.old_position;
        } else if constexpr (std::is_same_v<T, edit::KeywordRemoved>) {
          j["text"] = x.text;
        } else if constexpr (std::is_same_v<T, edit::SeparatorIntroduced>) {
          j["old_path"] = x.old_path;
          j["separator"] = x.separator;
          j["list_feature"] = x.list_feature;
        } else if constexpr (std::is_same_v<T, edit::OptionalGroupAdded>) {
          j["group"] = to_string(x.group);
        } else if constexpr (std::is_same_v<T, edit::CardinalityChanged>) {
          j["old_path"] = x.old_path;
          j["from"] = x.from;
          j["to"] = x.to;
        } else if constexpr (std::is_same_v<T, edit::CrossRefWidened>) {
          j["aspect"] = x.aspect;
          j["reference"] = x.reference;
          j["old_target"] = x.old_target;
          j["new_target"] = x.new_target;
        } else if constexpr (std::is_same_v<T, edit::RuleCallRetargeted>) {
          j["old_target"] = x.old_target;
          j["new_target"] = x.new_target;
          j["compatible"] = x.compatible;
        } else {
          j["description"] = x.description;
        }
      },
      e);
  return j;
}

inline nlohmann::json to_json(const GrammarDiff& d) {
  nlohmann::json j;
  j["added"] = nlohmann::json::array();
  for (const auto& a : d.added)
    j["added"].push_back({{"rule", a.rule.name},
                          {"reachability", to_string(a.reachability)},
                          {"definition", to_string(a.rule.body)}});
  j["removed"] = d.removed;
  j["modified"] = nlohmann::json::array();
  for (const auto& m : d.modified) {
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : m.edits) edits.push_back(to_json(e));
    j["modified"].push_back({{"rule", m.rule}, {"edits", edits}});
  }
  return j;
}

}  // namespace coevo
