#pragma once

// Prompt construction, completion providers and response extraction for
// LLM-driven instance migration.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coevo/cst.hpp"
#include "coevo/error.hpp"
#include "coevo/grammar.hpp"
#include "coevo/text.hpp"

namespace coevo {

// ---------------------------------------------------------------------------
// Prompt

inline constexpr std::string_view kFinalPromptTemplateId = "final-v1";

inline constexpr std::string_view kFinalPromptTemplate =
    "<GRAMMAR_1> is the initial grammar of the DSL. We evolved it to get <GRAMMAR_2>. <INSTANCE_1> was "
    "originally a text instance that followed <GRAMMAR_1>. Now I want you to analyze the differences between "
    "the two versions of the grammar and, based on these differences, modify <INSTANCE_1> and get "
    "<INSTANCE_2>, which will follow <GRAMMAR_2>. Please address the following things:\n"
    "1. When evolving the instance, please do not omit any mandatory elements, such as characters enclosed "
    "by single quotes.\n"
    "2. If <GRAMMAR_2> adds a new grammar rule or a new attribute that is optional or in an \"OR\" "
    "relationship (i.e., |), then please do not instantiate it.\n"
    "3. Do not miss or add any auxiliary information in the instance, e.g., comments, formats (white space, "
    "indents, tabs, empty lines, etc.).\n"
    "\n"
    "<GRAMMAR_1>\n${GRAMMAR_1}\n</GRAMMAR_1>\n"
    "\n"
    "<GRAMMAR_2>\n${GRAMMAR_2}\n</GRAMMAR_2>\n"
    "\n"
    "<INSTANCE_1>\n${INSTANCE_1}\n</INSTANCE_1>\n";

struct PromptBundle {
  std::string grammar1;
  std::string grammar2;
  std::string instance1;
  std::string template_id = std::string(kFinalPromptTemplateId);
};

inline std::string_view prompt_template(std::string_view id) {
  if (id == kFinalPromptTemplateId) return kFinalPromptTemplate;
  throw PreconditionViolated("unknown prompt template '" + std::string(id) + "'");
}

/// Substitutes ${GRAMMAR_1}, ${GRAMMAR_2} and ${INSTANCE_1} in a single left
/// to right pass; placeholders inside the inputs are left alone.
inline std::string build_prompt(const PromptBundle& bundle) {
  if (bundle.grammar1.empty() || bundle.grammar2.empty() || bundle.instance1.empty())
    throw PreconditionViolated("prompt inputs must be non-empty");
  std::string_view tpl = prompt_template(bundle.template_id);
  const std::pair<std::string_view, const std::string*> slots[] = {
      {"${GRAMMAR_1}", &bundle.grammar1}, {"${GRAMMAR_2}", &bundle.grammar2}, {"${INSTANCE_1}", &bundle.instance1}};
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    bool replaced = false;
    for (const auto& [marker, value] : slots) {
      if (tpl.substr(i, marker.size()) == marker) {
        out += *value;
        i += marker.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(tpl[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Providers

struct ProviderConfig {
  enum class Kind { Mock, Http };
  Kind kind = Kind::Mock;
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  double timeout_seconds = 120;
  double temperature = 0;
  std::string script_path;

  void check() const {
    if (kind == Kind::Http && (endpoint_url.empty() || api_key_env.empty()))
      throw PreconditionViolated("http provider needs an endpoint URL and an API key variable");
    if (kind == Kind::Mock && script_path.empty()) throw PreconditionViolated("mock provider needs a script path");
    if (timeout_seconds <= 0) throw PreconditionViolated("timeout must be positive");
  }
};

inline const char* to_string(ProviderConfig::Kind k) { return k == ProviderConfig::Kind::Mock ? "mock" : "http"; }

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Replays scripted responses in order and wraps around when exhausted.
class MockProvider : public CompletionProvider {
 public:
  explicit MockProvider(std::vector<std::string> responses) : responses_(std::move(responses)) {
    if (responses_.empty()) throw PreconditionViolated("mock script is empty");
  }

  /// Loads `run-NN.txt` files from `dir`, ordered by NN.
  static std::unique_ptr<MockProvider> from_directory(const std::filesystem::path& dir) {
    static const std::regex pattern(R"(run-(\d+)\.txt)");
    std::vector<std::pair<long, std::filesystem::path>> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      std::smatch m;
      std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && std::regex_match(name, m, pattern)) files.emplace_back(std::stol(m[1]), entry.path());
    }
    if (ec) throw Error("cannot read mock script directory '" + dir.string() + "': " + ec.message());
    std::sort(files.begin(), files.end());
    std::vector<std::string> responses;
    for (const auto& [n, path] : files) {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      responses.push_back(ss.str());
    }
    return std::make_unique<MockProvider>(std::move(responses));
  }

  std::string complete(const std::string&) override {
    std::lock_guard lock(mutex_);
    return responses_[cursor_++ % responses_.size()];
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return cursor_;
  }

 private:
  std::vector<std::string> responses_;
  std::size_t cursor_ = 0;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Extraction

enum class FailureKind { NoInstanceFound, Truncated, ProviderError };

inline const char* to_string(FailureKind k) {
  switch (k) {
    case FailureKind::NoInstanceFound: return "no_instance_found";
    case FailureKind::Truncated: return "truncated";
    case FailureKind::ProviderError: return "provider_error";
  }
  return "?";
}

struct RunFailure {
  FailureKind kind = FailureKind::NoInstanceFound;
  std::string message;
  std::string partial;  // candidate text of a truncated response
};

using Extraction = std::variant<std::string, RunFailure>;

struct LlmRunRecord {
  std::size_t run_index = 1;
  std::string raw_response;
  std::optional<std::string> extracted;
  std::optional<RunFailure> failure;
};

namespace detail {

inline bool fence_line(std::string_view line) {
  std::size_t i = line.find_first_not_of(" \t");
  return i != std::string_view::npos && line.substr(i, 3) == "```";
}

/// Net `{` minus `}` outside comments and strings, plus whether a block
/// comment is left open.
struct Balance {
  long braces = 0;
  bool open_comment = false;
  bool operator==(const Balance&) const = default;
};

inline Balance delimiter_balance(std::string_view s) {
  Balance b;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      std::size_t close = s.find("*/", i + 2);
      if (close == std::string_view::npos) {
        b.open_comment = true;
        break;
      }
      i = close + 2;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) j += s[j] == '\\' ? 2 : 1;
      i = j + 1;
    } else {
      if (c == '{') ++b.braces;
      if (c == '}') --b.braces;
      ++i;
    }
  }
  return b;
}

inline bool looks_like_instance(std::string_view candidate, const Grammar* grammar) {
  for (const auto& line : text::split_lines(candidate)) {
    if (text::is_blank(line)) continue;
    std::string_view l = line;
    l.remove_prefix(l.find_first_not_of(" \t"));
    if (l.substr(0, 2) == "//" || l.substr(0, 2) == "/*") return true;
    if (!grammar) return false;
    LexResult lexed = lex_instance(l, grammar->keywords());
    if (lexed.tokens.empty()) return false;
    return first_set(grammar->entry_rule().body, *grammar).contains(lexed.tokens.front());
  }
  return false;
}

}  // namespace detail

/// Pulls the instance text out of a model response: the first fenced code
/// block, or the whole response when it starts like an instance of
/// `grammar`. With `original` given, a candidate whose brace or block-comment
/// balance differs from it, or that lost at least 20% of its lines, is
/// reported as truncated.
inline Extraction extract_instance(std::string_view raw, const Grammar* grammar = nullptr,
                                   std::optional<std::string_view> original = std::nullopt) {
  std::optional<std::string_view> candidate;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    std::size_t next = eol == std::string_view::npos ? raw.size() : eol + 1;
    if (detail::fence_line(raw.substr(pos, next - pos))) {
      std::size_t start = next, scan = next, end = raw.size();
      while (scan < raw.size()) {
        std::size_t e2 = raw.find('\n', scan);
        std::size_t n2 = e2 == std::string_view::npos ? raw.size() : e2 + 1;
        if (detail::fence_line(raw.substr(scan, n2 - scan))) {
          end = scan;
          break;
        }
        scan = n2;
      }
      candidate = raw.substr(start, end - start);
      break;
    }
    pos = next;
  }
  if (!candidate && detail::looks_like_instance(raw, grammar)) candidate = raw;
  if (!candidate || text::is_blank(*candidate))
    return RunFailure{FailureKind::NoInstanceFound, "response contains no instance text", ""};

  detail::Balance got = detail::delimiter_balance(*candidate);
  detail::Balance want = original ? detail::delimiter_balance(*original) : detail::Balance{};
  if (!(got == want))
    return RunFailure{FailureKind::Truncated, "unbalanced '{}' or block comment", std::string(*candidate)};
  if (original) {
    std::size_t before = text::line_count(*original), after = text::line_count(*candidate);
    if (before > 0 && after * 5 <= before * 4)
      return RunFailure{FailureKind::Truncated,
                        "instance shrank from " + std::to_string(before) + " to " + std::to_string(after) + " lines",
                        std::string(*candidate)};
  }
  return std::string(*candidate);
}

/// One prompt, completion and extraction round trip. Provider failures are
/// recorded, not thrown.
inline LlmRunRecord run_llm_once(CompletionProvider& provider, const std::string& prompt, std::size_t run_index,
                                 const Grammar* new_grammar, std::string_view original) {
  LlmRunRecord rec;
  rec.run_index = run_index;
  try {
    rec.raw_response = provider.complete(prompt);
  } catch (const ProviderError& e) {
    rec.failure = RunFailure{FailureKind::ProviderError, e.what(), ""};
    return rec;
  }
  Extraction ex = extract_instance(rec.raw_response, new_grammar, original);
  if (auto* s = std::get_if<std::string>(&ex)) rec.extracted = std::move(*s);
  else rec.failure = std::get<RunFailure>(std::move(ex));
  return rec;
}

}  // namespace coevo
