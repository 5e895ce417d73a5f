#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "support.hpp"

using namespace coevo;

namespace {

PromptBundle domainmodel_bundle() {
  return {coevo_test::fixture("domainmodel_v1.xtext"), coevo_test::fixture("domainmodel_v2.xtext"),
          coevo_test::listing1()};
}

/// Local chat-completion endpoint answering with a fixed status and body.
class FakeEndpoint {
 public:
  FakeEndpoint(int status, std::string body, int delay_ms = 0) {
    server_.Post("/v1/chat/completions", [=, this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::string last_auth_;
  std::string last_body_;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig http_config(const std::string& url, const std::string& key_env) {
  ProviderConfig c;
  c.kind = ProviderConfig::Kind::Http;
  c.endpoint_url = url;
  c.model_name = "test-model";
  c.api_key_env = key_env;
  c.timeout_seconds = 5;
  return c;
}

}  // namespace

TEST(BuildPrompt, ContainsTheThreeInstructionsVerbatim) {
  std::string p = build_prompt(domainmodel_bundle());
  EXPECT_NE(p.find("Please address the following things:"), std::string::npos);
  EXPECT_NE(p.find("1. When evolving the instance, please do not omit any mandatory elements, such as characters "
                   "enclosed by single quotes."),
            std::string::npos);
  EXPECT_NE(p.find("2. If <GRAMMAR_2> adds a new grammar rule or a new attribute that is optional or in an \"OR\" "
                   "relationship (i.e., |), then please do not instantiate it."),
            std::string::npos);
  EXPECT_NE(p.find("3. Do not miss or add any auxiliary information in the instance, e.g., comments, formats (white "
                   "space, indents, tabs, empty lines, etc.)."),
            std::string::npos);
}

TEST(BuildPrompt, EmbedsInputsBetweenMarkers) {
  PromptBundle b = domainmodel_bundle();
  std::string p = build_prompt(b);
  EXPECT_NE(p.find("<INSTANCE_1>\n" + b.instance1 + "\n</INSTANCE_1>"), std::string::npos);
  EXPECT_NE(p.find("<GRAMMAR_1>\n" + b.grammar1 + "\n</GRAMMAR_1>"), std::string::npos);
  EXPECT_NE(p.find("<GRAMMAR_2>\n" + b.grammar2 + "\n</GRAMMAR_2>"), std::string::npos);
}

TEST(BuildPrompt, IsPureSubstitution) {
  PromptBundle b{"g1 ${INSTANCE_1}", "g2", "inst ${GRAMMAR_1}"};
  std::string p = build_prompt(b);
  std::size_t markers = std::string("${GRAMMAR_1}").size() + std::string("${GRAMMAR_2}").size() +
                        std::string("${INSTANCE_1}").size();
  EXPECT_EQ(p.size(), prompt_template(b.template_id).size() - markers + b.grammar1.size() + b.grammar2.size() +
                          b.instance1.size());
  EXPECT_NE(p.find("inst ${GRAMMAR_1}"), std::string::npos);
}

TEST(BuildPrompt, RejectsEmptyInputs) {
  PromptBundle b = domainmodel_bundle();
  b.instance1.clear();
  EXPECT_THROW(build_prompt(b), PreconditionViolated);
  b = domainmodel_bundle();
  b.template_id = "nope";
  EXPECT_THROW(build_prompt(b), PreconditionViolated);
}

TEST(MockProvider, ReplaysInOrderAndWraps) {
  MockProvider m({"one", "two"});
  EXPECT_EQ(m.complete("p"), "one");
  EXPECT_EQ(m.complete("p"), "two");
  EXPECT_EQ(m.complete("p"), "one");
  EXPECT_EQ(m.calls(), 3u);
}

TEST(MockProvider, LoadsNumberedFiles) {
  coevo_test::TempDir dir;
  write_file(dir.path() / "run-10.txt", "ten");
  write_file(dir.path() / "run-02.txt", "two");
  write_file(dir.path() / "notes.md", "ignored");
  auto m = MockProvider::from_directory(dir.path());
  EXPECT_EQ(m->complete(""), "two");
  EXPECT_EQ(m->complete(""), "ten");
  EXPECT_EQ(m->complete(""), "two");
}

TEST(MockProvider, EmptyScriptRejected) {
  coevo_test::TempDir dir;
  EXPECT_THROW(MockProvider::from_directory(dir.path()), PreconditionViolated);
}

TEST(HttpProvider, UnsetKeyFailsBeforeNetwork) {
  ::unsetenv("COEVO_TEST_UNSET_KEY");
  HttpProvider p(http_config("http://127.0.0.1:9/v1", "COEVO_TEST_UNSET_KEY"));
  EXPECT_THROW(p.complete("hi"), PreconditionViolated);
}

TEST(HttpProvider, ReturnsFirstMessage) {
  FakeEndpoint ep(200, R"({"choices":[{"message":{"role":"assistant","content":"datatype A;"}}]})");
  ::setenv("COEVO_TEST_KEY", "sekret", 1);
  HttpProvider p(http_config(ep.url(), "COEVO_TEST_KEY"));
  EXPECT_EQ(p.complete("the prompt"), "datatype A;");
  EXPECT_EQ(ep.last_auth_, "Bearer sekret");
  auto body = nlohmann::json::parse(ep.last_body_);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "the prompt");
  EXPECT_EQ(body["temperature"], 0.0);
}

TEST(HttpProvider, RateLimitIsProviderError) {
  FakeEndpoint ep(429, R"({"error":"slow down"})");
  ::setenv("COEVO_TEST_KEY", "k", 1);
  HttpProvider p(http_config(ep.url(), "COEVO_TEST_KEY"));
  try {
    p.complete("x");
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("429 ", 0), 0u) << e.what();
  }
}

TEST(HttpProvider, SlowEndpointTimesOut) {
  FakeEndpoint ep(200, R"({"choices":[]})", 1500);
  ::setenv("COEVO_TEST_KEY", "k", 1);
  ProviderConfig c = http_config(ep.url(), "COEVO_TEST_KEY");
  c.timeout_seconds = 0.3;
  HttpProvider p(c);
  EXPECT_THROW(p.complete("x"), Timeout);
}

TEST(HttpProvider, MalformedBodyIsProviderError) {
  FakeEndpoint ep(200, R"({"nothing":true})");
  ::setenv("COEVO_TEST_KEY", "k", 1);
  HttpProvider p(http_config(ep.url(), "COEVO_TEST_KEY"));
  EXPECT_THROW(p.complete("x"), ProviderError);
}

TEST(ProviderConfig, ChecksRequiredFields) {
  ProviderConfig c;
  c.kind = ProviderConfig::Kind::Http;
  EXPECT_THROW(c.check(), PreconditionViolated);
  c.kind = ProviderConfig::Kind::Mock;
  EXPECT_THROW(c.check(), PreconditionViolated);
  c.script_path = "x";
  EXPECT_NO_THROW(c.check());
}

TEST(ExtractInstance, FencedBlock) {
  std::string raw = "Here you go:\n```dsl\ndatatype String;\n```\nDone.";
  Extraction e = extract_instance(raw);
  ASSERT_TRUE(std::holds_alternative<std::string>(e));
  EXPECT_EQ(std::get<std::string>(e), "datatype String;\n");
}

TEST(ExtractInstance, ProseOnlyIsNoInstance) {
  Extraction e = extract_instance("You should add commas between the features and a semicolon after datatypes.",
                                  &coevo_test::g2(), coevo_test::listing1());
  ASSERT_TRUE(std::holds_alternative<RunFailure>(e));
  EXPECT_EQ(std::get<RunFailure>(e).kind, FailureKind::NoInstanceFound);
}

TEST(ExtractInstance, BareInstanceAccepted) {
  std::string raw = coevo_test::expected_migrated();
  Extraction e = extract_instance(raw, &coevo_test::g2(), coevo_test::listing1());
  ASSERT_TRUE(std::holds_alternative<std::string>(e));
  EXPECT_EQ(std::get<std::string>(e), raw);
}

TEST(ExtractInstance, BareInstanceStartingWithKeyword) {
  Extraction e = extract_instance("\n  datatype A;\n", &coevo_test::g2());
  EXPECT_TRUE(std::holds_alternative<std::string>(e));
}

TEST(ExtractInstance, CutOffEntityIsTruncated) {
  std::string raw = "```\n" + coevo_test::expected_migrated().substr(0, 120) + "\n```\n";
  Extraction e = extract_instance(raw, &coevo_test::g2(), coevo_test::listing1());
  ASSERT_TRUE(std::holds_alternative<RunFailure>(e));
  const auto& f = std::get<RunFailure>(e);
  EXPECT_EQ(f.kind, FailureKind::Truncated);
  EXPECT_FALSE(f.partial.empty());
}

TEST(ExtractInstance, LargeLineDropIsTruncated) {
  std::string original;
  for (int i = 0; i < 10; ++i) original += "datatype T" + std::to_string(i) + "\n";
  std::string shorter;
  for (int i = 0; i < 8; ++i) shorter += "datatype T" + std::to_string(i) + ";\n";
  Extraction e = extract_instance("```\n" + shorter + "```", &coevo_test::g2(), original);
  ASSERT_TRUE(std::holds_alternative<RunFailure>(e));
  EXPECT_EQ(std::get<RunFailure>(e).kind, FailureKind::Truncated);
}

TEST(ExtractInstance, UnterminatedFenceRunsToEnd) {
  Extraction e = extract_instance("```\ndatatype A;\n");
  ASSERT_TRUE(std::holds_alternative<std::string>(e));
  EXPECT_EQ(std::get<std::string>(e), "datatype A;\n");
}

TEST(ExtractInstance, ResultIsSubstringOfResponse) {
  for (std::string raw : {std::string("x\n```\nentity A {}\n```"), coevo_test::expected_migrated(),
                          std::string("```c\n/* a */\n```")}) {
    Extraction e = extract_instance(raw, &coevo_test::g2());
    if (auto* s = std::get_if<std::string>(&e)) {
      EXPECT_NE(raw.find(*s), std::string::npos);
    }
  }
}

TEST(RunLlmOnce, RecordsProviderFailure) {
  class Failing : public CompletionProvider {
   public:
    std::string complete(const std::string&) override { throw ProviderError("503 unavailable"); }
  } failing;
  LlmRunRecord r = run_llm_once(failing, "p", 3, &coevo_test::g2(), coevo_test::listing1());
  EXPECT_EQ(r.run_index, 3u);
  ASSERT_TRUE(r.failure);
  EXPECT_FALSE(r.extracted);
  EXPECT_EQ(r.failure->kind, FailureKind::ProviderError);
}
