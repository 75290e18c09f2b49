// cas: translate natural-language commands into symbolic action sequences
// and score them against hand-crafted references.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cas/harness.hpp"
#include "cas/llm.hpp"
#include "cas/metrics.hpp"
#include "cas/pipeline.hpp"
#include "cas/simulator.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonPaths {
  std::string problems_dir = "data/problems";
  std::string prompts_dir = "data/prompts";
  std::string aliases_file = "data/aliases.txt";
};

struct Config {
  std::string endpoint;
  std::string api_key;
  int parallelism = 1;
};

Config load_config(const std::string& path) {
  Config cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw cas::Error("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    cfg.endpoint = j.value("endpoint", "");
    cfg.parallelism = j.value("parallelism", 1);
    if (j.contains("api_key_env")) {
      if (const char* v = std::getenv(j["api_key_env"].get<std::string>().c_str()))
        cfg.api_key = v;
    }
  }
  // environment overrides the file
  if (const char* e = std::getenv("CAS_ENDPOINT")) cfg.endpoint = e;
  if (const char* k = std::getenv("CAS_API_KEY")) cfg.api_key = k;
  return cfg;
}

cas::domain::ProblemDefinition load_problem_arg(const std::string& value,
                                                const CommonPaths& paths) {
  if (fs::exists(value)) return cas::domain::load_problem_file(value);
  const fs::path in_dir = fs::path(paths.problems_dir) / (value + ".problem");
  if (fs::exists(in_dir)) return cas::domain::load_problem_file(in_dir);
  throw cas::Error("problem not found: '" + value + "' (looked for a file and in " +
                   paths.problems_dir + ")");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cas::Error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<cas::llm::ChatBackend> make_backend(const std::string& kind,
                                                    const std::string& fixtures,
                                                    const std::string& endpoint,
                                                    const Config& cfg) {
  if (kind == "replay") return std::make_shared<cas::llm::ReplayBackend>(fixtures);
  cas::llm::HttpOptions options;
  options.endpoint = !endpoint.empty() ? endpoint : cfg.endpoint;
  options.api_key = cfg.api_key;
  if (options.endpoint.empty())
    throw cas::Error("backend '" + kind + "' needs an endpoint (config file or CAS_ENDPOINT)");
  auto http = std::make_shared<cas::llm::HttpBackend>(options);
  if (kind == "http") return http;
  if (kind == "record") return std::make_shared<cas::llm::RecordBackend>(http, fixtures);
  throw cas::Error("unknown backend kind '" + kind + "' (replay|http|record)");
}

struct ModelsConfig {
  std::string entity_model = "codestral-22b-v0.1";
  int parallelism = 1;
  std::vector<cas::harness::ModelProfile> profiles;
};

ModelsConfig load_models_config(const std::string& path, const Config& cfg) {
  std::ifstream in(path);
  if (!in) throw cas::Error("cannot open models config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  ModelsConfig out;
  out.entity_model = j.value("entity_model", out.entity_model);
  out.parallelism = j.value("parallelism", cfg.parallelism);
  for (const auto& m : j.at("models")) {
    cas::harness::ModelProfile profile;
    profile.id = m.at("id").get<std::string>();
    profile.include_catalog = m.value("include_catalog", false);
    profile.backend = make_backend(m.value("backend", "replay"), m.value("fixtures", ""),
                                   m.value("endpoint", ""), cfg);
    out.profiles.push_back(std::move(profile));
  }
  if (out.profiles.empty()) throw cas::Error("models config lists no models");
  return out;
}

void print_sequence(std::ostream& os, const cas::actions::ActionSequence& seq) {
  if (seq.empty()) {
    os << "  (empty)\n";
    return;
  }
  for (const auto& a : seq) os << "  " << cas::actions::to_string(a) << "\n";
}

int cmd_translate(const CommonPaths& paths, const Config& cfg, const std::string& problem_arg,
                  const std::string& command, const std::string& backend_kind,
                  const std::string& fixtures, const std::string& model,
                  const std::string& entity_model, bool catalog) {
  auto problem = load_problem_arg(problem_arg, paths);
  auto prompts = cas::pipeline::PromptLibrary::load_dir(paths.prompts_dir);
  auto aliases = cas::actions::AliasTable::load_file(paths.aliases_file);
  auto backend = make_backend(backend_kind, fixtures, "", cfg);

  cas::pipeline::PipelineOptions options;
  options.translation_model_id = model;
  options.entity_model_id = entity_model;
  options.include_catalog = catalog;

  auto result = cas::pipeline::run(*backend, prompts, problem, command, aliases, options);

  std::cout << "command: " << result.command << "\n\nentity shortlist:\n";
  for (const auto& e : result.shortlist.entities) {
    std::cout << "  " << e << (result.shortlist.unknown.count(e) ? "  (not in problem)" : "")
              << "\n";
  }
  std::cout << "\nraw sequence:\n";
  print_sequence(std::cout, result.raw_sequence);
  std::cout << "\nfinal sequence:\n";
  print_sequence(std::cout, result.final_sequence);
  if (!result.removal_log.empty()) {
    std::cout << "\nremoved:\n";
    for (const auto& r : result.removal_log) {
      std::cout << "  " << cas::actions::to_string(r.action) << "  ["
                << cas::pipeline::to_string(r.reason) << "]\n";
    }
  }
  for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";
  return 0;
}

int cmd_simulate(const CommonPaths& paths, const std::string& problem_arg,
                 const std::string& seq_file, const std::string& mode_name) {
  auto problem = load_problem_arg(problem_arg, paths);
  auto aliases = cas::actions::AliasTable::load_file(paths.aliases_file);
  auto parsed = cas::actions::parse_any(read_file(seq_file));
  cas::actions::ActionSequence seq;
  for (const auto& a : parsed.actions)
    seq.push_back(cas::actions::canonicalize(a, aliases).action);

  const auto mode = mode_name == "strict_skip" ? cas::sim::Mode::StrictSkip
                                               : cas::sim::Mode::Assisted;
  auto result = cas::sim::execute(problem, seq, mode);
  std::cout << cas::sim::format_trace(result.trace);
  std::cout << "final state: " << cas::domain::to_string(result.final_state) << "\n";
  return 0;
}

int cmd_compare(const CommonPaths& paths, const std::string& problem_arg,
                const std::string& ref_file, const std::string& cand_file) {
  auto problem = load_problem_arg(problem_arg, paths);
  auto aliases = cas::actions::AliasTable::load_file(paths.aliases_file);

  auto load_seq = [&](const std::string& file) {
    cas::actions::ActionSequence seq;
    for (const auto& a : cas::actions::parse_any(read_file(file)).actions)
      seq.push_back(cas::actions::canonicalize(a, aliases).action);
    return seq;
  };
  const auto reference = load_seq(ref_file);
  const auto candidate = load_seq(cand_file);

  const auto ref_final = cas::sim::execute(problem, reference, cas::sim::Mode::Assisted);
  const auto cand_final = cas::sim::execute(problem, candidate, cas::sim::Mode::Assisted);

  std::cout << "plan_difference: " << cas::metrics::plan_difference(candidate, reference)
            << "\n";
  std::cout << "levenshtein: " << cas::metrics::levenshtein(candidate, reference) << "\n";
  std::cout << "final_state_similarity: "
            << cas::metrics::final_state_similarity(problem.initial, ref_final.final_state,
                                                    cand_final.final_state)
            << "\n";
  std::cout << "length_discrepancy: "
            << cas::metrics::length_discrepancy(candidate, reference) << "\n";
  return 0;
}

int cmd_eval(const CommonPaths& paths, const Config& cfg, const std::string& dataset_dir,
             const std::string& models_file, const std::string& out_dir, bool strict) {
  auto aliases = cas::actions::AliasTable::load_file(paths.aliases_file);
  auto prompts = cas::pipeline::PromptLibrary::load_dir(paths.prompts_dir);
  cas::harness::ProblemLibrary problems(paths.problems_dir);
  auto dataset = cas::harness::load_dataset(dataset_dir, aliases);
  if (dataset.empty()) throw cas::Error("dataset is empty: " + dataset_dir);
  auto models = load_models_config(models_file, cfg);

  cas::harness::EvalOptions options;
  options.entity_model_id = models.entity_model;
  options.strict = strict;
  options.parallelism = models.parallelism;

  auto report =
      cas::harness::evaluate(dataset, models.profiles, problems, prompts, aliases, options);
  cas::harness::write_report(report, out_dir);

  std::size_t failed = 0;
  for (const auto& c : report.cells)
    if (!c.ok) ++failed;
  std::cout << "evaluated " << dataset.size() << " records x " << models.profiles.size()
            << " models x 3 summaries: " << report.cells.size() << " cells (" << failed
            << " failed)\n";
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_record(const CommonPaths& paths, const Config& cfg, const std::string& dataset_dir,
               const std::string& models_file) {
  auto aliases = cas::actions::AliasTable::load_file(paths.aliases_file);
  auto prompts = cas::pipeline::PromptLibrary::load_dir(paths.prompts_dir);
  cas::harness::ProblemLibrary problems(paths.problems_dir);
  auto dataset = cas::harness::load_dataset(dataset_dir, aliases);
  if (dataset.empty()) throw cas::Error("dataset is empty: " + dataset_dir);
  auto models = load_models_config(models_file, cfg);

  std::size_t completions = 0;
  std::size_t failures = 0;
  for (const auto& rec : dataset) {
    const auto& problem = problems.get(rec.problem_ref);
    for (const auto& summary : rec.summaries) {
      cas::pipeline::PipelineOptions options;
      options.entity_model_id = models.entity_model;
      for (const auto& profile : models.profiles) {
        options.translation_model_id = profile.id;
        options.include_catalog = profile.include_catalog;
        try {
          // running the pipeline against a record backend persists fixtures;
          // responses are cached even when a later stage rejects them
          cas::pipeline::run(*profile.backend, prompts, problem, summary.text, aliases,
                             options);
          ++completions;
        } catch (const cas::Error& e) {
          ++failures;
          std::cerr << rec.id << " / " << profile.id << ": " << e.what() << "\n";
        }
      }
    }
  }
  std::cout << "recorded " << completions << " pipeline runs";
  if (failures) std::cout << " (" << failures << " failed)";
  std::cout << "\n";
  return completions == 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"command-to-action-sequence pipeline and evaluation harness"};
  app.require_subcommand(1);

  CommonPaths paths;
  std::string config_file;
  app.add_option("--config", config_file, "JSON config (endpoint, api_key_env, parallelism)");
  app.add_option("--problems", paths.problems_dir, "problem definitions directory")
      ->capture_default_str();
  app.add_option("--prompts", paths.prompts_dir, "prompt templates directory")
      ->capture_default_str();
  app.add_option("--aliases", paths.aliases_file, "alias table file")->capture_default_str();

  // translate
  auto* translate = app.add_subcommand("translate", "translate one command");
  std::string t_problem, t_command, t_backend = "replay", t_fixtures = "data/fixtures/demo";
  std::string t_model = "mistral-7b-ft", t_entity_model = "codestral-22b-v0.1";
  bool t_catalog = false;
  translate->add_option("--problem", t_problem, "problem name or file")->required();
  translate->add_option("--command", t_command, "natural-language command")->required();
  translate->add_option("--backend", t_backend, "replay|http|record")->capture_default_str();
  translate->add_option("--fixtures", t_fixtures, "fixture directory")->capture_default_str();
  translate->add_option("--model", t_model, "translation model id")->capture_default_str();
  translate->add_option("--entity-model", t_entity_model, "entity inference model id")
      ->capture_default_str();
  translate->add_flag("--catalog", t_catalog, "append the action catalog to the prompt");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "execute an action sequence");
  std::string s_problem, s_seq, s_mode = "assisted";
  simulate->add_option("--problem", s_problem, "problem name or file")->required();
  simulate->add_option("--seq", s_seq, "action sequence file")->required();
  simulate->add_option("--mode", s_mode, "strict_skip|assisted")
      ->check(CLI::IsMember({"strict_skip", "assisted"}))
      ->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "score a candidate against a reference");
  std::string c_problem, c_ref, c_cand;
  compare->add_option("--problem", c_problem, "problem name or file")->required();
  compare->add_option("--ref", c_ref, "reference sequence file")->required();
  compare->add_option("--cand", c_cand, "candidate sequence file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "run the full evaluation grid");
  std::string e_dataset = "data/dataset", e_models = "data/models.json", e_out = "report";
  bool e_strict = false;
  eval->add_option("--dataset", e_dataset, "dataset directory")->capture_default_str();
  eval->add_option("--models", e_models, "models config JSON")->capture_default_str();
  eval->add_option("--out", e_out, "report output directory")->capture_default_str();
  eval->add_flag("--strict", e_strict, "abort on the first missing fixture");

  // record
  auto* record = app.add_subcommand("record", "populate fixtures from live backends");
  std::string r_dataset = "data/dataset", r_models = "data/models.json";
  record->add_option("--dataset", r_dataset, "dataset directory")->capture_default_str();
  record->add_option("--models", r_models, "models config JSON")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  }

  try {
    const Config cfg = load_config(config_file);
    if (translate->parsed())
      return cmd_translate(paths, cfg, t_problem, t_command, t_backend, t_fixtures, t_model,
                           t_entity_model, t_catalog);
    if (simulate->parsed()) return cmd_simulate(paths, s_problem, s_seq, s_mode);
    if (compare->parsed()) return cmd_compare(paths, c_problem, c_ref, c_cand);
    if (eval->parsed()) return cmd_eval(paths, cfg, e_dataset, e_models, e_out, e_strict);
    if (record->parsed()) return cmd_record(paths, cfg, r_dataset, r_models);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
