#pragma once

// Command implementations behind the coevo executable. Each command writes
// its report to `out`, diagnostics to `err`, and returns the process exit
// status.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "coevo/cst.hpp"
#include "coevo/error.hpp"
#include "coevo/gdiff.hpp"
#include "coevo/grammar.hpp"
#include "coevo/http_provider.hpp"
#include "coevo/llm.hpp"
#include "coevo/metrics.hpp"
#include "coevo/migrate.hpp"

namespace coevo {

namespace exit_status {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int grammar_error = 2;
inline constexpr int io_error = 3;
inline constexpr int needs_llm = 4;
inline constexpr int provider_error = 5;
}  // namespace exit_status

enum class Engine { Deterministic, Llm };

inline const char* to_string(Engine e) { return e == Engine::Deterministic ? "deterministic" : "llm"; }

struct RunConfig {
  std::filesystem::path grammar_old_path;
  std::filesystem::path grammar_new_path;
  std::filesystem::path instance_path;
  Engine engine = Engine::Deterministic;
  ProviderConfig provider;
  std::size_t runs = 10;
  std::size_t good_threshold = 6;
  std::size_t parallel = 1;
  std::filesystem::path output;  // migrate: output file; batch: output directory
  std::string seed_note;

  void check() const {
    if (runs == 0) throw PreconditionViolated("runs must be positive");
    if (good_threshold == 0 || good_threshold > runs)
      throw PreconditionViolated("good threshold must be between 1 and the number of runs");
    if (parallel == 0) throw PreconditionViolated("parallelism must be positive");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{{"grammar_old", c.grammar_old_path.string()},
                        {"grammar_new", c.grammar_new_path.string()},
                        {"instance", c.instance_path.string()},
                        {"engine", to_string(c.engine)},
                        {"provider",
                         {{"kind", to_string(c.provider.kind)},
                          {"endpoint_url", c.provider.endpoint_url},
                          {"model", c.provider.model_name},
                          {"api_key_env", c.provider.api_key_env},
                          {"timeout_seconds", c.provider.timeout_seconds},
                          {"temperature", c.provider.temperature},
                          {"script_path", c.provider.script_path}}},
                        {"runs", c.runs},
                        {"good_threshold", c.good_threshold},
                        {"parallel", c.parallel},
                        {"output", c.output.string()},
                        {"seed_note", c.seed_note}};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

inline Grammar load_grammar(const std::filesystem::path& path) { return parse_grammar(read_file(path)); }

/// Runs `body`, mapping exceptions onto exit statuses.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return exit_status::io_error;
  } catch (const GrammarError& e) {
    err << "grammar error: " << e.what() << "\n";
    return exit_status::grammar_error;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return exit_status::provider_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_status::failure;
  }
}

inline int cmd_diff(const std::filesystem::path& old_path, const std::filesystem::path& new_path, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    std::string old_src = read_file(old_path);
    std::string new_src = read_file(new_path);
    GrammarDiff diff = diff_grammars(parse_grammar(old_src), parse_grammar(new_src));
    out << to_json(diff).dump(2) << "\n";
    return exit_status::ok;
  });
}

inline int cmd_validate(const std::filesystem::path& grammar_path, const std::filesystem::path& instance_path,
                        std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::string instance = read_file(instance_path);
    Grammar g = load_grammar(grammar_path);
    ValidationReport report = validate(instance, g);
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : report.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    out << nlohmann::json{{"error_line_count", report.error_line_count}, {"errors", errors}}.dump(2) << "\n";
    return report.ok() ? exit_status::ok : exit_status::failure;
  });
}

inline int cmd_eval(const RunConfig& config, const std::filesystem::path& evolved_path, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    std::string original = read_file(config.instance_path);
    std::string evolved = read_file(evolved_path);
    Grammar g1 = load_grammar(config.grammar_old_path);
    Grammar g2 = load_grammar(config.grammar_new_path);
    parse_instance(original, g1);
    MetricsReport report = evaluate(original, evolved, g1, g2);
    if (!report.oracle_available) err << "warning: no deterministic oracle; only lost lines are counted\n";
    out << to_json(report).dump(2) << "\n";
    return exit_status::ok;
  });
}

namespace detail {

inline nlohmann::json failure_json(const LlmRunRecord& rec) {
  if (!rec.failure) return nullptr;
  return nlohmann::json{{"kind", to_string(rec.failure->kind)}, {"message", rec.failure->message}};
}

inline std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Scores one run: the extracted instance, the partial text of a truncated
/// response, or a total loss.
inline MetricsReport score_run(const LlmRunRecord& rec, std::string_view original, const Grammar& g1,
                               const Grammar& g2, const std::optional<Oracle>& oracle) {
  if (rec.extracted) return evaluate(original, *rec.extracted, g1, g2, oracle);
  if (rec.failure && rec.failure->kind == FailureKind::Truncated) {
    MetricsReport r = evaluate(original, rec.failure->partial, g1, g2, oracle);
    r.truncated = true;
    return r;
  }
  return total_loss_report(original, oracle);
}

}  // namespace detail

inline int cmd_migrate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    std::string g1_src = read_file(config.grammar_old_path);
    std::string g2_src = read_file(config.grammar_new_path);
    std::string instance = read_file(config.instance_path);
    Grammar g1 = parse_grammar(g1_src);
    Grammar g2 = parse_grammar(g2_src);

    if (config.engine == Engine::Deterministic) {
      auto result = migrate_deterministic(instance, g1, g2);
      if (auto* needs = std::get_if<NeedsLlm>(&result)) {
        err << "deterministic migration not possible:\n";
        for (const auto& r : needs->reasons) err << "  - " << r << "\n";
        return exit_status::needs_llm;
      }
      const auto& text = std::get<MigrationResult>(result).text;
      if (config.output.empty()) out << text;
      else write_file(config.output, text);
      return exit_status::ok;
    }

    if (config.output.empty()) throw PreconditionViolated("the llm engine needs --out");
    parse_instance(instance, g1);
    auto provider = make_provider(config.provider);
    std::string prompt = build_prompt({g1_src, g2_src, instance});
    LlmRunRecord rec = run_llm_once(*provider, prompt, 1, &g2, instance);
    std::filesystem::path response_path = config.output;
    response_path += ".response.txt";
    write_file(response_path, rec.raw_response);
    if (rec.failure) {
      std::filesystem::path failure_path = config.output;
      failure_path += ".failure.json";
      write_file(failure_path, detail::failure_json(rec).dump(2) + "\n");
      err << "llm run failed: " << to_string(rec.failure->kind) << ": " << rec.failure->message << "\n";
      return exit_status::provider_error;
    }
    write_file(config.output, *rec.extracted);
    return exit_status::ok;
  });
}

/// Repeats the migration `runs` times, scores each run against the original
/// and writes per-run artifacts plus manifest.json into the output directory.
/// Returns ok when the batch is accepted.
inline int cmd_batch(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    if (config.output.empty()) throw PreconditionViolated("batch needs an output directory");
    std::string g1_src = read_file(config.grammar_old_path);
    std::string g2_src = read_file(config.grammar_new_path);
    std::string instance = read_file(config.instance_path);
    Grammar g1 = parse_grammar(g1_src);
    Grammar g2 = parse_grammar(g2_src);
    parse_instance(instance, g1);
    std::optional<Oracle> oracle = build_oracle(instance, g1, g2);
    if (!oracle) err << "warning: no deterministic oracle; only lost lines are counted\n";

    std::unique_ptr<CompletionProvider> provider;
    std::string prompt;
    std::optional<std::string> deterministic_text;
    if (config.engine == Engine::Llm) {
      provider = make_provider(config.provider);
      prompt = build_prompt({g1_src, g2_src, instance});
    } else {
      auto result = migrate_deterministic(instance, g1, g2);
      if (auto* needs = std::get_if<NeedsLlm>(&result)) {
        for (const auto& r : needs->reasons) err << "  - " << r << "\n";
        return exit_status::needs_llm;
      }
      deterministic_text = std::get<MigrationResult>(result).text;
    }

    std::vector<LlmRunRecord> records(config.runs);
    std::vector<MetricsReport> reports(config.runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < config.runs; k = next++) {
        if (deterministic_text) {
          records[k].run_index = k + 1;
          records[k].raw_response = *deterministic_text;
          records[k].extracted = *deterministic_text;
        } else {
          records[k] = run_llm_once(*provider, prompt, k + 1, &g2, instance);
        }
        reports[k] = detail::score_run(records[k], instance, g1, g2, oracle);
      }
    };
    std::vector<std::thread> pool;
    std::size_t threads = std::min(config.parallel, config.runs);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    BatchSummary summary = summarize_batch(reports, config.good_threshold);
    const auto& dir = config.output;
    const std::string ext = config.instance_path.extension().string();
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t k = 0; k < config.runs; ++k) {
      std::ostringstream name;
      name << "run-" << std::setw(2) << std::setfill('0') << (k + 1);
      std::filesystem::path run_dir = dir / name.str();
      const auto& rec = records[k];
      nlohmann::json paths;
      write_file(run_dir / "response.txt", rec.raw_response);
      paths["raw_response"] = (run_dir / "response.txt").string();
      const std::string* text = rec.extracted ? &*rec.extracted
                                : (rec.failure && rec.failure->kind == FailureKind::Truncated) ? &rec.failure->partial
                                                                                                : nullptr;
      if (text) {
        write_file(run_dir / ("instance" + ext), *text);
        paths["migrated_instance"] = (run_dir / ("instance" + ext)).string();
      } else {
        paths["migrated_instance"] = nullptr;
      }
      write_file(run_dir / "metrics.json", to_json(reports[k]).dump(2) + "\n");
      paths["metrics"] = (run_dir / "metrics.json").string();
      runs.push_back({{"run_index", rec.run_index},
                      {"failure", detail::failure_json(rec)},
                      {"good", reports[k].good()},
                      {"paths", paths}});
    }
    nlohmann::json manifest{{"timestamp", detail::utc_timestamp()},
                            {"config", to_json(config)},
                            {"prompt_template", std::string(kFinalPromptTemplateId)},
                            {"oracle_available", oracle.has_value()},
                            {"runs", runs},
                            {"summary", to_json(summary)}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << to_json(summary).dump(2) << "\n";
    return summary.accepted ? exit_status::ok : exit_status::provider_error;
  });
}

}  // namespace coevo
