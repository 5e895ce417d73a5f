#include <gtest/gtest.h>

#include "coevo/text.hpp"

using namespace coevo::text;

TEST(SplitLines, HandlesAllTerminators) {
  EXPECT_EQ(split_lines(""), std::vector<std::string>{});
  EXPECT_EQ(split_lines("a\nb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_lines("a\r\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_lines("a\rb\r\n\n"), (std::vector<std::string>{"a", "b", ""}));
}

TEST(ScanComments, SkipsStringsAndSpansBlocks) {
  auto cs = scan_comments("x \"// not\" // yes\n/* a\n b */ y '/*'");
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].line, 1u);
  EXPECT_EQ(cs[0].text, "// yes");
  EXPECT_EQ(cs[1].line, 2u);
  EXPECT_EQ(cs[1].text, "/* a\n b */");
}

TEST(ScanComments, UnterminatedBlockRunsToEnd) {
  auto cs = scan_comments("a /* open\nmore");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].text, "/* open\nmore");
}

TEST(CommentFragments, OnePiecePerLine) {
  auto f = comment_fragments_by_line("/* a\n * b\n */\nx // c\ny\n");
  ASSERT_EQ(f.size(), 5u);
  EXPECT_EQ(f[0], std::vector<std::string>{"/* a"});
  EXPECT_EQ(f[1], std::vector<std::string>{" * b"});
  EXPECT_EQ(f[2], std::vector<std::string>{" */"});
  EXPECT_EQ(f[3], std::vector<std::string>{"// c"});
  EXPECT_TRUE(f[4].empty());
}

TEST(NormalizeLine, TrimsCollapsesAndDropsSeparator) {
  EXPECT_EQ(normalize_line("  title:\tString,  "), "title: String");
  EXPECT_EQ(normalize_line("datatype String;"), "datatype String");
  EXPECT_EQ(normalize_line("a,,"), "a");
  EXPECT_EQ(normalize_line("Beta;/* a"), "Beta/* a");
  EXPECT_EQ(normalize_line("x , y"), "x y");
  EXPECT_EQ(normalize_line("   "), "");
}

TEST(LayoutSignature, DistinguishesIndentAndSpacing) {
  EXPECT_EQ(layout_signature("  a b"), layout_signature("  x y"));
  EXPECT_FALSE(layout_signature("\ta") == layout_signature("  a"));
  EXPECT_FALSE(layout_signature("a  b") == layout_signature("a b"));
  EXPECT_FALSE(layout_signature("") == layout_signature("x"));
  EXPECT_TRUE(layout_signature("   ").blank);
}
