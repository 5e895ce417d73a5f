#include <gtest/gtest.h>

#include "support.hpp"

using namespace coevo;
using coevo_test::g1;
using coevo_test::g2;

namespace {

std::string first_lines(const std::string& s, std::size_t n) {
  std::string out;
  auto lines = text::split_lines(s);
  for (std::size_t i = 0; i < n && i < lines.size(); ++i) out += lines[i] + "\n";
  return out;
}

}  // namespace

TEST(AlignLines, IdenticalTextsPairEverything) {
  auto lines = text::split_lines(coevo_test::listing1());
  LineAlignment a = align_lines(lines, lines);
  ASSERT_EQ(a.pairs.size(), lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) EXPECT_EQ(a.pairs[i], std::make_pair(i, i));
}

TEST(AlignLines, MigratedDomainmodelHasNoGaps) {
  LineAlignment a =
      align_lines(text::split_lines(coevo_test::listing1()), text::split_lines(coevo_test::expected_migrated()));
  EXPECT_EQ(a.pairs.size(), 21u);
  for (const auto& [o, e] : a.with_gaps()) EXPECT_TRUE(o && e);
}

TEST(AlignLines, Listing2LosesEveryCommentLine) {
  auto orig = text::split_lines(coevo_test::listing1());
  LineAlignment a = align_lines(orig, text::split_lines(coevo_test::listing2()));
  for (std::size_t line : {1, 2, 3, 4, 6, 16, 20})
    EXPECT_FALSE(a.original_to_evolved[line - 1].has_value()) << "line " << line;
}

TEST(AlignLines, PrefersEarliestMatch) {
  LineAlignment a = align_lines({"x"}, {"x", "x"});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(AlignLines, GapListCoversBothSides) {
  LineAlignment a = align_lines({"a", "b", "c"}, {"a", "x", "c", "y"});
  auto g = a.with_gaps();
  std::size_t left = 0, right = 0;
  for (const auto& [o, e] : g) {
    left += o.has_value();
    right += e.has_value();
  }
  EXPECT_EQ(left, 3u);
  EXPECT_EQ(right, 4u);
}

TEST(Evaluate, ExpectedMigrationIsPerfect) {
  MetricsReport r = evaluate(coevo_test::listing1(), coevo_test::expected_migrated(), g1(), g2());
  EXPECT_EQ(r.line_err, 0u);
  EXPECT_EQ(r.line_evl, 4u);
  EXPECT_EQ(r.line_evl_wrg, 0u);
  EXPECT_EQ(r.line_cmt_lost, 0u);
  EXPECT_EQ(r.line_cmt_save, 7u);
  EXPECT_EQ(r.line_fmt_lost, 0u);
  EXPECT_EQ(r.line_fmt_save, 21u);
  EXPECT_EQ(r.total_lines_orig, 21u);
  EXPECT_TRUE(r.good());
}

TEST(Evaluate, Listing2LosesCommentsAndLayout) {
  MetricsReport r = evaluate(coevo_test::listing1(), coevo_test::listing2(), g1(), g2());
  EXPECT_EQ(r.line_err, 0u);
  EXPECT_EQ(r.line_cmt_lost, 7u);
  EXPECT_EQ(r.line_cmt_save, 0u);
  EXPECT_GE(r.line_fmt_lost, 3u);
  EXPECT_FALSE(r.good());
}

TEST(Evaluate, UnevolvedCopyMissesRequiredLines) {
  MetricsReport r = evaluate(coevo_test::listing1(), coevo_test::listing1(), g1(), g2());
  EXPECT_GE(r.line_err, 1u);
  EXPECT_EQ(r.line_evl, 0u);
  EXPECT_EQ(r.line_evl_wrg, 4u);
  EXPECT_EQ(r.error_lines, (std::vector<std::size_t>{7, 15}));
}

TEST(Evaluate, TruncatedResponseScoresPartialText) {
  // Lines 18..21 missing: `}`, `entity Comment ... {`, the commented
  // `content` line and `}`.
  MetricsReport r = evaluate(coevo_test::listing1(), first_lines(coevo_test::expected_migrated(), 17), g1(), g2());
  EXPECT_EQ(r.line_err, 1u);
  EXPECT_EQ(r.line_evl, 4u);
  EXPECT_EQ(r.line_evl_wrg, 4u);
  EXPECT_EQ(r.line_cmt_lost, 1u);
  EXPECT_EQ(r.line_cmt_save, 6u);
  EXPECT_EQ(r.line_fmt_lost, 4u);
  EXPECT_EQ(r.line_fmt_save, 17u);
}

TEST(Evaluate, WrongSeparatorCountsAsWrong) {
  std::string evolved = coevo_test::expected_migrated();
  evolved.replace(evolved.find("title: String,"), 14, "title: String;");
  MetricsReport r = evaluate(coevo_test::listing1(), evolved, g1(), g2());
  EXPECT_EQ(r.line_evl, 3u);
  EXPECT_EQ(r.line_evl_wrg, 1u);
}

TEST(Evaluate, InstantiatedOptionalCountsAsUnnecessaryChange) {
  std::string evolved = coevo_test::expected_migrated();
  evolved.replace(evolved.find("many comments: Comment"), 22, "many comments: Comment (x)");
  MetricsReport r = evaluate(coevo_test::listing1(), evolved, g1(), g2());
  EXPECT_EQ(r.line_err, 0u);
  EXPECT_EQ(r.line_evl_wrg, 1u);
}

TEST(Evaluate, WithoutOracleOnlyLostLinesCount) {
  Grammar a = parse_grammar("M: (e+=E)*;\nE: 'e' n=ID;");
  Grammar b = parse_grammar("M: (e+=E)*;\nE: 'e' n=INT;");
  MetricsReport r = evaluate("e x\ne y\n", "e 1\n", a, b);
  EXPECT_FALSE(r.oracle_available);
  EXPECT_EQ(r.line_evl, 0u);
  // `e x` pairs with `e 1` as a change; only `e y` is lost.
  EXPECT_EQ(r.line_evl_wrg, 1u);
}

TEST(Evaluate, TotalLossReport) {
  auto oracle = build_oracle(coevo_test::listing1(), g1(), g2());
  ASSERT_TRUE(oracle);
  MetricsReport r = total_loss_report(coevo_test::listing1(), oracle);
  EXPECT_TRUE(r.extraction_failed);
  EXPECT_EQ(r.line_cmt_lost, 7u);
  EXPECT_EQ(r.line_cmt_save, 0u);
  EXPECT_EQ(r.line_fmt_lost, 21u);
  EXPECT_EQ(r.line_evl, 0u);
  EXPECT_EQ(r.line_evl_wrg, 20u);
  EXPECT_FALSE(r.good());
}

TEST(Evaluate, JsonUsesSnakeCaseKeys) {
  nlohmann::json j = to_json(evaluate(coevo_test::listing1(), coevo_test::expected_migrated(), g1(), g2()));
  for (const char* k : {"line_err", "line_evl", "line_evl_wrg", "line_cmt_lost", "line_cmt_save", "line_fmt_lost",
                        "line_fmt_save", "total_lines_orig"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["line_fmt_save"], 21);
}

TEST(SummarizeBatch, ThresholdBoundary) {
  MetricsReport good;
  MetricsReport bad;
  bad.line_err = 1;
  std::vector<MetricsReport> six(6, good), five(5, good);
  six.insert(six.end(), 4, bad);
  five.insert(five.end(), 5, bad);
  BatchSummary s6 = summarize_batch(six, 6);
  EXPECT_EQ(s6.good_runs, 6u);
  EXPECT_TRUE(s6.accepted);
  EXPECT_DOUBLE_EQ(s6.mean_line_err, 0.4);
  BatchSummary s5 = summarize_batch(five, 6);
  EXPECT_EQ(s5.good_runs, 5u);
  EXPECT_FALSE(s5.accepted);
}

TEST(SummarizeBatch, ZeroReportsAverageToZero) {
  BatchSummary s = summarize_batch(std::vector<MetricsReport>(10), 6);
  EXPECT_EQ(s.mean_line_err, 0);
  EXPECT_EQ(s.mean_line_fmt_lost, 0);
  EXPECT_EQ(s.good_runs, 10u);
}
