// Acceptance run: one PASS/FAIL line per criterion, mock provider only.

#include <iomanip>
#include <iostream>
#include <sstream>

#include "generators.hpp"

using namespace coevo;
using namespace coevo_test;

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> why;
  void expect(bool cond, std::string what) {
    if (!cond) {
      ok = false;
      why.push_back(std::move(what));
    }
  }
};

template <class T>
std::size_t count_edits(const GrammarDiff& d, std::string_view rule) {
  std::size_t n = 0;
  if (const auto* m = d.modification(rule))
    for (const auto& e : m->edits) n += std::holds_alternative<T>(e);
  return n;
}

Check losslessness() {
  Check c;
  c.expect(render(parse_instance(listing1(), g1())) == listing1(), "listing 1 render differs");
  std::uint32_t seed = 100;
  for (const Grammar* g : {&state_machine(), &config(), &g1(), &g2()}) {
    InstanceGenerator gen(*g, seed++);
    for (int i = 0; i < 20; ++i) {
      std::string src = gen.generate();
      try {
        c.expect(render(parse_instance(src, *g)) == src, g->name + " render differs");
      } catch (const Error& e) {
        c.expect(false, g->name + ": " + e.what());
      }
    }
  }
  return c;
}

Check grammar_coverage() {
  Check c;
  GrammarDiff d = diff_grammars(g1(), g2());
  c.expect(d.added.size() == 5, "added rules: " + std::to_string(d.added.size()));
  c.expect(d.removed.empty(), "rules removed");
  c.expect(d.modified.size() == 4, "modified rules: " + std::to_string(d.modified.size()));
  c.expect(count_edits<edit::KeywordInserted>(d, "DataType") == 1, "DataType terminator");
  c.expect(count_edits<edit::SeparatorIntroduced>(d, "Entity") == 1, "Entity separator");
  c.expect(count_edits<edit::CrossRefWidened>(d, "Entity") == 1, "Entity reference");
  c.expect(count_edits<edit::OptionalGroupAdded>(d, "Feature") == 1, "Feature default");
  c.expect(count_edits<edit::CrossRefWidened>(d, "Feature") == 1, "Feature reference");
  c.expect(count_edits<edit::RuleCallRetargeted>(d, "Domainmodel") == 1, "Domainmodel retarget");
  std::size_t unclassified = 0;
  for (const auto& m : d.modified)
    for (const auto& e : m.edits) unclassified += std::holds_alternative<edit::Unclassified>(e);
  c.expect(unclassified == 0, "unclassified edits");
  return c;
}

void expect_report(Check& c, const MetricsReport& r, std::array<std::size_t, 7> want) {
  std::array<std::size_t, 7> got{r.line_err,      r.line_evl,      r.line_evl_wrg, r.line_cmt_lost,
                                 r.line_cmt_save, r.line_fmt_lost, r.line_fmt_save};
  std::ostringstream s;
  for (auto v : got) s << v << ' ';
  c.expect(got == want, "metrics " + s.str());
}

Check end_to_end() {
  Check c;
  auto result = migrate_deterministic(listing1(), g1(), g2());
  if (!std::holds_alternative<MigrationResult>(result)) {
    c.expect(false, "needs llm");
    return c;
  }
  const std::string& out = std::get<MigrationResult>(result).text;
  c.expect(validate(out, g2()).error_line_count == 0, "output does not conform");
  c.expect(out == expected_migrated(), "output differs from fixture");
  expect_report(c, evaluate(listing1(), out, g1(), g2()), {0, 4, 0, 0, 7, 0, 21});
  return c;
}

Check auxiliary_loss() {
  Check c;
  MetricsReport r = evaluate(listing1(), listing2(), g1(), g2());
  c.expect(r.line_err == 0, "line_err " + std::to_string(r.line_err));
  c.expect(r.line_cmt_lost == 7, "cmt_lost " + std::to_string(r.line_cmt_lost));
  c.expect(r.line_cmt_save == 0, "cmt_save " + std::to_string(r.line_cmt_save));
  c.expect(r.line_fmt_lost >= 3, "fmt_lost " + std::to_string(r.line_fmt_lost));
  return c;
}

Check partitions() {
  Check c;
  InstanceGenerator gen(g1(), 500);
  std::mt19937 rng(501);
  for (int i = 0; i < 100; ++i) {
    std::string original = gen.generate();
    auto oracle = build_oracle(original, g1(), g2());
    std::string evolved = mutate(rng() % 2 && oracle ? join_lines(oracle->lines) : original, rng);
    MetricsReport r = evaluate(original, evolved, g1(), g2(), oracle);
    c.expect(r.line_fmt_lost + r.line_fmt_save == r.total_lines_orig, "fmt partition");
    c.expect(r.line_cmt_lost + r.line_cmt_save == comment_lines(original), "cmt partition");
  }
  return c;
}

Check prompt_fidelity() {
  Check c;
  std::string p = build_prompt({read_file(fixture_path("domainmodel_v1.xtext")),
                                read_file(fixture_path("domainmodel_v2.xtext")), listing1()});
  for (const char* rule :
       {"1. When evolving the instance, please do not omit any mandatory elements, such as characters enclosed by "
        "single quotes.",
        "2. If <GRAMMAR_2> adds a new grammar rule or a new attribute that is optional or in an \"OR\" relationship "
        "(i.e., |), then please do not instantiate it.",
        "3. Do not miss or add any auxiliary information in the instance, e.g., comments, formats (white space, "
        "indents, tabs, empty lines, etc.)."})
    c.expect(p.find(rule) != std::string::npos, std::string("missing rule ") + rule[0]);
  c.expect(p.find(listing1()) != std::string::npos, "instance not embedded");
  return c;
}

nlohmann::json run_batch(const TempDir& tmp, int good, int prose, int& status) {
  auto script = tmp.path() / "script";
  int n = 1;
  auto name = [&] {
    std::ostringstream s;
    s << "run-" << std::setw(2) << std::setfill('0') << n++ << ".txt";
    return script / s.str();
  };
  for (int i = 0; i < good; ++i) write_file(name(), "```\n" + expected_migrated() + "```\n");
  for (int i = 0; i < prose; ++i) write_file(name(), "Add a comma between features and a semicolon after datatypes.\n");
  RunConfig cfg;
  cfg.grammar_old_path = fixture_path("domainmodel_v1.xtext");
  cfg.grammar_new_path = fixture_path("domainmodel_v2.xtext");
  cfg.instance_path = fixture_path("listing1.dm");
  cfg.engine = Engine::Llm;
  cfg.provider.kind = ProviderConfig::Kind::Mock;
  cfg.provider.script_path = script.string();
  cfg.output = tmp.path() / "out";
  cfg.runs = 10;
  cfg.good_threshold = 6;
  std::ostringstream out, err;
  status = cmd_batch(cfg, out, err);
  try {
    return nlohmann::json::parse(out.str());
  } catch (const nlohmann::json::exception&) {
    return nlohmann::json::object();
  }
}

Check batch_protocol() {
  Check c;
  {
    TempDir tmp;
    int status = -1;
    auto s = run_batch(tmp, 6, 4, status);
    c.expect(status == 0 && s.value("accepted", false) && s.value("good_runs", -1) == 6, "6/4 not accepted");
  }
  {
    TempDir tmp;
    int status = -1;
    auto s = run_batch(tmp, 5, 5, status);
    c.expect(status != 0 && !s.value("accepted", true) && s.value("good_runs", -1) == 5, "5/5 accepted");
  }
  return c;
}

Check truncation() {
  Check c;
  auto lines = text::split_lines(expected_migrated());
  lines.resize(17);
  MockProvider mock({"Here is the evolved instance:\n```\n" + join_lines(lines)});
  LlmRunRecord rec = run_llm_once(mock, "prompt", 1, &g2(), listing1());
  c.expect(rec.failure && rec.failure->kind == FailureKind::Truncated, "not flagged truncated");
  MetricsReport r = detail::score_run(rec, listing1(), g1(), g2(), build_oracle(listing1(), g1(), g2()));
  c.expect(r.truncated, "report not marked truncated");
  expect_report(c, r, {1, 4, 4, 1, 6, 4, 17});
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, Check (*)()> criteria[] = {
      {"losslessness", losslessness},       {"grammar coverage", grammar_coverage},
      {"end-to-end migration", end_to_end}, {"auxiliary loss", auxiliary_loss},
      {"metric partitions", partitions},    {"prompt fidelity", prompt_fidelity},
      {"batch protocol", batch_protocol},   {"truncation", truncation}};
  int failed = 0, index = 1;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << " " << index++ << " " << name;
    for (const auto& w : c.why) std::cout << " | " << w;
    std::cout << "\n";
    failed += !c.ok;
  }
  std::cout << "NOTE 9 non-reproducible: per-model LLM scores over a mined corpus need proprietary models and data;"
               " criteria 1-8 stand in for them\n";
  return failed ? 1 : 0;
}
