#include <gtest/gtest.h>

#include "support.hpp"

using namespace coevo;
using coevo_test::fixture;

namespace {

std::vector<std::string> rule_names(const Grammar& g) {
  std::vector<std::string> out;
  for (const auto& r : g.rules) out.push_back(r.name);
  return out;
}

}  // namespace

TEST(ParseGrammar, DomainmodelBeforeHasFiveRules) {
  const Grammar& g = coevo_test::g1();
  EXPECT_EQ(rule_names(g), (std::vector<std::string>{"Domainmodel", "Type", "DataType", "Entity", "Feature"}));
  EXPECT_EQ(g.name, "Domainmodel");
  EXPECT_NE(g.preamble.find("generate domainmodel"), std::string::npos);
}

TEST(ParseGrammar, DomainmodelAfterHasTenRules) {
  const Grammar& g = coevo_test::g2();
  EXPECT_EQ(g.rules.size(), 10u);
  for (const char* name : {"PackageDeclaration", "AbstractElement", "Import", "QualifiedName", "QualifiedNameWithWildcard"})
    EXPECT_NE(g.find_rule(name), nullptr) << name;
}

TEST(ParseGrammar, BuildsExpectedTree) {
  Grammar g = parse_grammar("Feature: (many?='many')? name=ID ':' type=[Type|QualifiedName];\n"
                            "Type: 'x';\nQualifiedName: ID ('.' ID)*;");
  using namespace expr;
  GrammarExpr want = group({repeat(assign("many", AssignOp::Flag, keyword("many")), Cardinality::Optional),
                            assign("name", AssignOp::Assign, call("ID")), keyword(":"),
                            assign("type", AssignOp::Assign, xref("Type", "QualifiedName"))});
  EXPECT_EQ(g.rules[0].body, want);
}

TEST(ParseGrammar, CrossRefDefaultsToId) {
  Grammar g = parse_grammar("A: 'a' r=[A];");
  const auto& items = g.rules[0].body.as<Group>().items;
  EXPECT_EQ(items[1].as<Assignment>().operand->as<CrossRef>().syntax, "ID");
}

TEST(ParseGrammar, RejectsDuplicateRule) {
  try {
    parse_grammar("Entity: 'a';\nEntity: 'b';");
    FAIL() << "expected DuplicateRule";
  } catch (const DuplicateRule& e) {
    EXPECT_EQ(e.name(), "Entity");
  }
}

TEST(ParseGrammar, RejectsUnresolvedReference) {
  try {
    parse_grammar("A: 'a' b=B;");
    FAIL() << "expected UnresolvedRuleReference";
  } catch (const UnresolvedRuleReference& e) {
    EXPECT_EQ(e.name(), "B");
  }
  EXPECT_THROW(parse_grammar("A: 'a' b=[Missing];"), UnresolvedRuleReference);
}

TEST(ParseGrammar, RejectsUnsupportedConstructs) {
  for (const char* src : {"A: 'a' & 'b';", "A: =>'a';", "terminal T: 'x';", "enum E: a='a';", "A: {A} 'a';",
                          "A: !'a';", "A: 'a'..'z';", "fragment F: 'a';", "A returns B: 'a';", "A: f?=ID;",
                          "A: A 'x';", "A: ->'a';"}) {
    EXPECT_THROW(parse_grammar(src), UnsupportedConstruct) << src;
  }
}

TEST(ParseGrammar, ReportsSyntaxErrorPosition) {
  try {
    parse_grammar("A:\n  'a' (b=ID;\n");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_THROW(parse_grammar("A: 'unterminated;"), SyntaxError);
  EXPECT_THROW(parse_grammar("A: ;"), SyntaxError);
}

TEST(ParseGrammar, PrettyPrintRoundTrips) {
  for (const Grammar* g : {&coevo_test::g1(), &coevo_test::g2()}) {
    Grammar again = parse_grammar(to_string(*g));
    EXPECT_TRUE(structurally_equal(*g, again));
    EXPECT_EQ(again.preamble, g->preamble);
  }
}

TEST(ParseGrammar, Deterministic) {
  std::string src = fixture("domainmodel_v2.xtext");
  EXPECT_EQ(parse_grammar(src).rules, parse_grammar(src).rules);
}

TEST(ParseGrammar, PrintsReadableRules) {
  EXPECT_EQ(to_string(coevo_test::g2().find_rule("Feature")->body),
            "(many?='many')? name=ID ':' type=[Type|QualifiedName] ('(' default=ID ')')?");
}

TEST(Grammar, KeywordsAreSortedAndUnique) {
  auto kws = coevo_test::g1().keywords();
  EXPECT_EQ(kws, (std::vector<std::string>{":", "datatype", "entity", "extends", "many", "{", "}"}));
}

TEST(Grammar, AlternativeClosureFollowsUnitAlternatives) {
  auto closure = alternative_closure(coevo_test::g2(), "AbstractElement");
  EXPECT_TRUE(closure.count("Type"));
  EXPECT_TRUE(closure.count("Entity"));
  EXPECT_TRUE(closure.count("PackageDeclaration"));
  EXPECT_FALSE(closure.count("Feature"));
}

TEST(Grammar, QualifiedNameWidensId) {
  EXPECT_TRUE(syntax_widens(coevo_test::g1(), "ID", coevo_test::g2(), "QualifiedName"));
  EXPECT_FALSE(syntax_widens(coevo_test::g2(), "QualifiedName", coevo_test::g1(), "ID"));
}
