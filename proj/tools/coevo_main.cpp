#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "coevo/pipeline.hpp"

namespace {

void add_grammar_pair(CLI::App* cmd, coevo::RunConfig& cfg) {
  cmd->add_option("--grammar-old", cfg.grammar_old_path, "Grammar the instance was written for")->required();
  cmd->add_option("--grammar-new", cfg.grammar_new_path, "Evolved grammar")->required();
}

void add_run_options(CLI::App* cmd, coevo::RunConfig& cfg) {
  add_grammar_pair(cmd, cfg);
  cmd->add_option("--instance", cfg.instance_path, "Instance to migrate")->required();
  cmd->add_option("--engine", cfg.engine, "deterministic or llm")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, coevo::Engine>{{"deterministic", coevo::Engine::Deterministic},
                                               {"llm", coevo::Engine::Llm}}));
  cmd->add_option("--provider", cfg.provider.kind, "mock or http")
      ->transform(CLI::CheckedTransformer(std::map<std::string, coevo::ProviderConfig::Kind>{
          {"mock", coevo::ProviderConfig::Kind::Mock}, {"http", coevo::ProviderConfig::Kind::Http}}));
  cmd->add_option("--model", cfg.provider.model_name, "Model name sent to the endpoint");
  cmd->add_option("--endpoint", cfg.provider.endpoint_url, "Chat-completion endpoint URL");
  cmd->add_option("--api-key-env", cfg.provider.api_key_env, "Environment variable holding the API key")
      ->default_val("COEVO_API_KEY");
  cmd->add_option("--timeout", cfg.provider.timeout_seconds, "Request timeout in seconds")->default_val(120);
  cmd->add_option("--temperature", cfg.provider.temperature, "Sampling temperature")->default_val(0);
  cmd->add_option("--script", cfg.provider.script_path, "Directory of run-NN.txt mock responses");
  cmd->add_option("--note", cfg.seed_note, "Free-text note stored in the manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-evolve DSL instances with their grammar"};
  app.require_subcommand(1);
  coevo::RunConfig cfg;
  std::filesystem::path evolved, grammar;

  auto* diff = app.add_subcommand("diff", "Print the changes between two grammars as JSON");
  add_grammar_pair(diff, cfg);

  auto* validate = app.add_subcommand("validate", "Check an instance against a grammar");
  validate->add_option("--grammar", grammar, "Grammar")->required();
  validate->add_option("--instance", cfg.instance_path, "Instance")->required();

  auto* migrate = app.add_subcommand("migrate", "Migrate an instance to the new grammar");
  add_run_options(migrate, cfg);
  migrate->add_option("--out", cfg.output, "Output file (stdout when omitted for the deterministic engine)");

  auto* eval = app.add_subcommand("eval", "Score an evolved instance against the original");
  add_grammar_pair(eval, cfg);
  eval->add_option("--instance", cfg.instance_path, "Original instance")->required();
  eval->add_option("--evolved", evolved, "Evolved instance")->required();

  auto* batch = app.add_subcommand("batch", "Run repeated migrations and score them");
  add_run_options(batch, cfg);
  batch->add_option("--runs", cfg.runs, "Number of runs")->default_val(10);
  batch->add_option("--good-threshold", cfg.good_threshold, "Good runs needed for acceptance")->default_val(6);
  batch->add_option("--parallel", cfg.parallel, "Concurrent provider calls")->default_val(1);
  batch->add_option("--out", cfg.output, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*diff) return coevo::cmd_diff(cfg.grammar_old_path, cfg.grammar_new_path, std::cout, std::cerr);
  if (*validate) return coevo::cmd_validate(grammar, cfg.instance_path, std::cout, std::cerr);
  if (*migrate) return coevo::cmd_migrate(cfg, std::cout, std::cerr);
  if (*eval) return coevo::cmd_eval(cfg, evolved, std::cout, std::cerr);
  return coevo::cmd_batch(cfg, std::cout, std::cerr);
}
