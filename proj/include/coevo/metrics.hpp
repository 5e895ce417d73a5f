#pragma once

// Line-level evaluation of an evolved instance.
//
// The deterministic migration of the original serves as the oracle: the
// lines it touches are the lines that must evolve, and its text for those
// lines is the expected result. Evolved lines are aligned with the oracle
// lines (or the original lines when there is no oracle) by an LCS over
// normalized text; oracle line i stands for original line i.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coevo/cst.hpp"
#include "coevo/error.hpp"
#include "coevo/grammar.hpp"
#include "coevo/migrate.hpp"
#include "coevo/text.hpp"

namespace coevo {

/// 0-based (original, evolved) line pairs, increasing in both components.
struct LineAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::optional<std::size_t>> original_to_evolved;
  std::vector<std::optional<std::size_t>> evolved_to_original;

  /// Every line of both texts exactly once, in order; nullopt marks a gap.
  std::vector<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> with_gaps() const {
    std::vector<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> out;
    std::size_t i = 0, j = 0;
    auto flush = [&](std::size_t to_i, std::size_t to_j) {
      for (; i < to_i; ++i) out.emplace_back(i, std::nullopt);
      for (; j < to_j; ++j) out.emplace_back(std::nullopt, j);
    };
    for (const auto& [a, b] : pairs) {
      flush(a, b);
      out.emplace_back(a, b);
      ++i;
      ++j;
    }
    flush(original_to_evolved.size(), evolved_to_original.size());
    return out;
  }
};

/// LCS alignment on `text::normalize_line` keys. Among maximal alignments
/// the one matching each original line as early as possible is chosen.
inline LineAlignment align_lines(const std::vector<std::string>& original, const std::vector<std::string>& evolved) {
  const std::size_t n = original.size(), m = evolved.size();
  std::vector<std::string> a(n), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = text::normalize_line(original[i]);
  for (std::size_t j = 0; j < m; ++j) b[j] = text::normalize_line(evolved[j]);
  // suffix[i][j] = LCS length of a[i..] and b[j..]
  std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      suffix[i][j] = a[i] == b[j] ? suffix[i + 1][j + 1] + 1 : std::max(suffix[i + 1][j], suffix[i][j + 1]);

  LineAlignment out;
  out.original_to_evolved.assign(n, std::nullopt);
  out.evolved_to_original.assign(m, std::nullopt);
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j] && suffix[i][j] == suffix[i + 1][j + 1] + 1) {
      out.pairs.emplace_back(i, j);
      out.original_to_evolved[i] = j;
      out.evolved_to_original[j] = i;
      ++i;
      ++j;
    } else if (suffix[i][j + 1] == suffix[i][j]) {
      ++j;
    } else {
      ++i;
    }
  }
  return out;
}

struct MetricsReport {
  std::size_t line_err = 0;
  std::size_t line_evl = 0;
  std::size_t line_evl_wrg = 0;
  std::size_t line_cmt_lost = 0;
  std::size_t line_cmt_save = 0;
  std::size_t line_fmt_lost = 0;
  std::size_t line_fmt_save = 0;
  std::size_t total_lines_orig = 0;
  std::size_t required_lines = 0;
  bool oracle_available = true;
  bool extraction_failed = false;
  bool truncated = false;
  std::vector<std::size_t> error_lines;

  /// Conforms to the new grammar and keeps every comment and layout.
  bool good() const { return !extraction_failed && line_err == 0 && line_cmt_lost == 0 && line_fmt_lost == 0; }
};

inline nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"line_err", r.line_err},
                        {"line_evl", r.line_evl},
                        {"line_evl_wrg", r.line_evl_wrg},
                        {"line_cmt_lost", r.line_cmt_lost},
                        {"line_cmt_save", r.line_cmt_save},
                        {"line_fmt_lost", r.line_fmt_lost},
                        {"line_fmt_save", r.line_fmt_save},
                        {"total_lines_orig", r.total_lines_orig},
                        {"required_lines", r.required_lines},
                        {"oracle_available", r.oracle_available},
                        {"extraction_failed", r.extraction_failed},
                        {"truncated", r.truncated},
                        {"error_lines", r.error_lines},
                        {"good", r.good()}};
}

/// Expected migration used to score an evolved instance.
struct Oracle {
  std::vector<std::string> lines;      // same line count as the original
  std::set<std::size_t> required;      // 1-based original lines that must change
};

/// Runs the deterministic migration; nullopt when it cannot serve as oracle.
inline std::optional<Oracle> build_oracle(std::string_view original, const Grammar& old_grammar,
                                          const Grammar& new_grammar, ParseOptions opts = {}) {
  try {
    auto result = migrate_deterministic(original, old_grammar, new_grammar, opts);
    auto* migrated = std::get_if<MigrationResult>(&result);
    if (!migrated) return std::nullopt;
    Oracle o{text::split_lines(migrated->text), migrated->plan.touched_lines};
    if (o.lines.size() != text::line_count(original)) return std::nullopt;
    return o;
  } catch (const Error&) {
    return std::nullopt;
  }
}

namespace detail {

/// Pairs still-unmatched lines between consecutive LCS pairs in order, so a
/// rewritten line counts as one changed line rather than a loss plus an
/// addition.
inline void pair_gaps(LineAlignment& al) {
  const std::size_t n = al.original_to_evolved.size(), m = al.evolved_to_original.size();
  std::size_t i = 0, j = 0;
  auto fill = [&](std::size_t to_i, std::size_t to_j) {
    for (; i < to_i && j < to_j; ++i, ++j) {
      al.original_to_evolved[i] = j;
      al.evolved_to_original[j] = i;
    }
  };
  for (const auto& [a, b] : al.pairs) {
    fill(a, b);
    i = a + 1;
    j = b + 1;
  }
  fill(n, m);
}

inline std::string strip_whitespace(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

}  // namespace detail

/// Scores `evolved` against `original`. Pass the oracle when it is already
/// known; otherwise build_oracle computes it.
inline MetricsReport evaluate(std::string_view original, std::string_view evolved, const Grammar& old_grammar,
                              const Grammar& new_grammar, const std::optional<Oracle>& known_oracle = std::nullopt,
                              ParseOptions opts = {}) {
  std::optional<Oracle> oracle = known_oracle ? known_oracle : build_oracle(original, old_grammar, new_grammar, opts);
  const auto orig = text::split_lines(original);
  const auto evo = text::split_lines(evolved);
  // Oracle lines pair 1:1 with original lines, so aligning against them
  // keeps a correct rewrite of a line paired with that line.
  auto align = align_lines(oracle ? oracle->lines : orig, evo);
  detail::pair_gaps(align);
  const auto orig_comments = text::comment_fragments_by_line(original);
  const auto evo_comments = text::comment_fragments_by_line(evolved);

  MetricsReport r;
  r.oracle_available = oracle.has_value();
  r.total_lines_orig = orig.size();
  ValidationReport v = validate(evolved, new_grammar, opts);
  r.line_err = v.error_line_count;
  for (const auto& e : v.errors)
    if (r.error_lines.empty() || r.error_lines.back() != e.line) r.error_lines.push_back(e.line);

  // Without an oracle only lost original lines count as wrong.
  for (std::size_t j = 0; oracle && j < evo.size(); ++j)
    if (!align.evolved_to_original[j] && !text::is_blank(evo[j])) ++r.line_evl_wrg;

  for (std::size_t i = 0; i < orig.size(); ++i) {
    const auto ev = align.original_to_evolved[i];
    const bool required = oracle && oracle->required.count(i + 1) > 0;
    const std::string& reference = required ? oracle->lines[i] : orig[i];
    if (required) {
      ++r.required_lines;
      if (ev && evo[*ev] == reference) ++r.line_evl;
      else ++r.line_evl_wrg;
    } else if (!ev) {
      if (!text::is_blank(orig[i])) ++r.line_evl_wrg;
    } else if (oracle && detail::strip_whitespace(evo[*ev]) != detail::strip_whitespace(orig[i])) {
      ++r.line_evl_wrg;
    }

    if (!orig_comments[i].empty()) {
      if (ev && evo_comments[*ev] == orig_comments[i]) ++r.line_cmt_save;
      else ++r.line_cmt_lost;
    }

    if (ev && text::layout_signature(evo[*ev]) == text::layout_signature(reference)) ++r.line_fmt_save;
    else ++r.line_fmt_lost;
  }
  return r;
}

/// Report for a run whose response contained no usable instance: every
/// original line counts as lost.
inline MetricsReport total_loss_report(std::string_view original, const std::optional<Oracle>& oracle) {
  MetricsReport r;
  r.extraction_failed = true;
  r.oracle_available = oracle.has_value();
  r.line_err = 1;
  const auto orig = text::split_lines(original);
  r.total_lines_orig = orig.size();
  const auto comments = text::comment_fragments_by_line(original);
  for (std::size_t i = 0; i < orig.size(); ++i) {
    bool required = oracle && oracle->required.count(i + 1) > 0;
    if (required) ++r.required_lines;
    if (required || !text::is_blank(orig[i])) ++r.line_evl_wrg;
    if (!comments[i].empty()) ++r.line_cmt_lost;
    ++r.line_fmt_lost;
  }
  return r;
}

struct BatchSummary {
  std::size_t runs = 0;
  std::size_t good_runs = 0;
  std::size_t good_threshold = 0;
  bool accepted = false;
  double mean_line_err = 0, mean_line_evl = 0, mean_line_evl_wrg = 0;
  double mean_line_cmt_lost = 0, mean_line_cmt_save = 0;
  double mean_line_fmt_lost = 0, mean_line_fmt_save = 0;
};

inline BatchSummary summarize_batch(const std::vector<MetricsReport>& reports, std::size_t good_threshold) {
  BatchSummary s;
  s.runs = reports.size();
  s.good_threshold = good_threshold;
  for (const auto& r : reports) {
    if (r.good()) ++s.good_runs;
    s.mean_line_err += static_cast<double>(r.line_err);
    s.mean_line_evl += static_cast<double>(r.line_evl);
    s.mean_line_evl_wrg += static_cast<double>(r.line_evl_wrg);
    s.mean_line_cmt_lost += static_cast<double>(r.line_cmt_lost);
    s.mean_line_cmt_save += static_cast<double>(r.line_cmt_save);
    s.mean_line_fmt_lost += static_cast<double>(r.line_fmt_lost);
    s.mean_line_fmt_save += static_cast<double>(r.line_fmt_save);
  }
  if (s.runs > 0) {
    const double n = static_cast<double>(s.runs);
    for (double* m : {&s.mean_line_err, &s.mean_line_evl, &s.mean_line_evl_wrg, &s.mean_line_cmt_lost,
                      &s.mean_line_cmt_save, &s.mean_line_fmt_lost, &s.mean_line_fmt_save})
      *m /= n;
  }
  s.accepted = s.good_runs >= good_threshold;
  return s;
}

inline nlohmann::json to_json(const BatchSummary& s) {
  return nlohmann::json{{"runs", s.runs},
                        {"good_runs", s.good_runs},
                        {"good_threshold", s.good_threshold},
                        {"accepted", s.accepted},
                        {"mean_line_err", s.mean_line_err},
                        {"mean_line_evl", s.mean_line_evl},
                        {"mean_line_evl_wrg", s.mean_line_evl_wrg},
                        {"mean_line_cmt_lost", s.mean_line_cmt_lost},
                        {"mean_line_cmt_save", s.mean_line_cmt_save},
                        {"mean_line_fmt_lost", s.mean_line_fmt_lost},
                        {"mean_line_fmt_save", s.mean_line_fmt_save}};
}

}  // namespace coevo
