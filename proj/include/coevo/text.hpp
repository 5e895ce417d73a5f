#pragma once

// Line-oriented text helpers shared by the metrics, llm and pipeline layers.
// Everything here is grammar-agnostic.

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coevo::text {

/// Splits on LF, CRLF or lone CR. A terminator at the very end does not open
/// an extra empty line, so "a\nb\n" has two lines and "" has none.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n' || c == '\r') {
      lines.emplace_back(text.substr(start, i - start));
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      start = ++i;
    } else {
      ++i;
    }
  }
  if (start < text.size()) lines.emplace_back(text.substr(start));
  return lines;
}

inline std::size_t line_count(std::string_view text) { return split_lines(text).size(); }

inline bool is_blank(std::string_view line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

/// A comment found by a standalone lexical scan; `line` is 1-based and
/// `text` includes the delimiters.
struct Comment {
  std::size_t line = 0;
  std::string text;
};

/// Finds `//` and `/* */` comments while skipping single- and double-quoted
/// string literals. An unterminated block comment runs to end of text.
inline std::vector<Comment> scan_comments(std::string_view src) {
  std::vector<Comment> out;
  std::size_t line = 1;
  std::size_t i = 0;
  auto newline_at = [&](std::size_t k) {
    if (src[k] == '\n') return true;
    return src[k] == '\r' && !(k + 1 < src.size() && src[k + 1] == '\n');
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      std::size_t j = i;
      while (j < src.size() && src[j] != '\n' && src[j] != '\r') ++j;
      out.push_back({line, std::string(src.substr(i, j - i))});
      i = j;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      std::size_t close = src.find("*/", i + 2);
      std::size_t end = close == std::string_view::npos ? src.size() : close + 2;
      out.push_back({line, std::string(src.substr(i, end - i))});
      for (std::size_t k = i; k < end; ++k)
        if (newline_at(k)) ++line;
      i = end;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != c) {
        if (src[j] == '\\' && j + 1 < src.size()) ++j;
        if (newline_at(j)) ++line;
        ++j;
      }
      i = j < src.size() ? j + 1 : j;
    } else {
      if (newline_at(i)) ++line;
      ++i;
    }
  }
  return out;
}

/// Per-line comment fragments: entry k holds, in order, the pieces of
/// comment text that lie on line k+1. A block comment spanning three lines
/// contributes one fragment to each of them.
inline std::vector<std::vector<std::string>> comment_fragments_by_line(std::string_view src) {
  std::vector<std::vector<std::string>> by_line(line_count(src));
  for (const auto& comment : scan_comments(src)) {
    auto pieces = split_lines(comment.text);
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      std::size_t idx = comment.line - 1 + k;
      if (idx < by_line.size() && !pieces[k].empty()) by_line[idx].push_back(pieces[k]);
    }
  }
  return by_line;
}

/// Comparison key used for line alignment: drops `,` and `;`, trims and
/// collapses whitespace runs to one space.
inline std::string normalize_line(std::string_view line) {
  std::string out;
  bool pending_space = false;
  for (char c : line) {
    if (c == ',' || c == ';') continue;
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

/// Whitespace shape of a line: its leading run, each run between non-blank
/// chunks, and its trailing run.
struct LayoutSignature {
  std::string leading;
  std::vector<std::string> inner;
  std::string trailing;
  bool blank = true;

  bool operator==(const LayoutSignature&) const = default;
};

inline LayoutSignature layout_signature(std::string_view line) {
  LayoutSignature sig;
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  sig.leading = std::string(line.substr(0, i));
  if (i == line.size()) return sig;
  sig.blank = false;
  std::size_t end = line.size();
  while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
  sig.trailing = std::string(line.substr(end));
  std::size_t k = i;
  while (k < end) {
    if (std::isspace(static_cast<unsigned char>(line[k]))) {
      std::size_t j = k;
      while (j < end && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      sig.inner.emplace_back(line.substr(k, j - k));
      k = j;
    } else {
      ++k;
    }
  }
  return sig;
}

}  // namespace coevo::text
