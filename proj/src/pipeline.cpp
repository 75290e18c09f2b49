#include "cas/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>

namespace cas::pipeline {

using actions::ActionInstance;
using actions::ActionSequence;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open prompt template: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  PromptLibrary lib;
  lib.entity_inference = read_file(dir / "entity_inference.txt");
  lib.command_translation = read_file(dir / "command_translation.txt");
  lib.catalog_clause = read_file(dir / "catalog_clause.txt");
  lib.summarize = read_file(dir / "summarize.txt");
  return lib;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& subs) {
  std::string out = tmpl;
  for (const auto& [key, value] : subs) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string to_string(RemovalReason r) {
  switch (r) {
    case RemovalReason::Unmapped: return "unmapped";
    case RemovalReason::NonexistentEntity: return "nonexistent_entity";
    case RemovalReason::ConsecutiveDuplicate: return "consecutive_duplicate";
    case RemovalReason::Extraneous: return "extraneous";
  }
  return "?";
}

std::string render_catalog(std::span<const domain::ActionSchema> schemas) {
  std::string out;
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    if (i) out += ", ";
    out += schemas[i].name;
    out += "(";
    for (std::size_t j = 0; j < schemas[i].params.size(); ++j) {
      if (j) out += ", ";
      out += schemas[i].params[j].name;
    }
    out += ")";
  }
  return out;
}

llm::ChatRequest build_entity_request(const PromptLibrary& prompts,
                                      const domain::ProblemDefinition& problem,
                                      const std::string& command,
                                      const PipelineOptions& options) {
  std::string entities;
  for (const auto& name : problem.entity_names()) {
    if (!entities.empty()) entities += ", ";
    entities += name;
  }
  llm::ChatRequest req;
  req.model_id = options.entity_model_id;
  req.user_text = render_template(prompts.entity_inference,
                                  {{"entities", entities}, {"command", command}});
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  return req;
}

llm::ChatRequest build_translation_request(const PromptLibrary& prompts,
                                           const EntityShortlist& shortlist,
                                           const std::string& command,
                                           std::span<const domain::ActionSchema> catalog,
                                           const PipelineOptions& options) {
  std::string entities;
  for (const auto& name : shortlist.entities) {
    if (!entities.empty()) entities += ", ";
    entities += name;
  }
  std::string catalog_text;
  if (options.include_catalog)
    catalog_text =
        "\n\n" + render_template(prompts.catalog_clause, {{"actions", render_catalog(catalog)}});

  llm::ChatRequest req;
  req.model_id = options.translation_model_id;
  req.user_text = render_template(
      prompts.command_translation,
      {{"entities", entities}, {"command", command}, {"catalog", catalog_text}});
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  return req;
}

EntityShortlist parse_shortlist(const std::string& response,
                                const domain::ProblemDefinition& problem) {
  EntityShortlist out;
  std::string token;
  auto flush = [&] {
    const std::string norm = actions::normalize_token(token);
    token.clear();
    if (norm.empty()) return;
    if (std::find(out.entities.begin(), out.entities.end(), norm) != out.entities.end())
      return;  // dedupe, keep first occurrence
    out.entities.push_back(norm);
    if (!problem.has_entity(norm)) out.unknown.insert(norm);
  };
  for (char c : response) {
    if (c == ',' || c == '\n' || c == ';')
      flush();
    else
      token.push_back(c);
  }
  flush();
  return out;
}

EntityShortlist infer_entities(llm::ChatBackend& backend, const PromptLibrary& prompts,
                               const domain::ProblemDefinition& problem,
                               const std::string& command, const PipelineOptions& options) {
  if (problem.entities.empty())
    throw ValidationError("entity inference needs a problem with at least one entity");
  const auto req = build_entity_request(prompts, problem, command, options);
  const auto resp = backend.complete(req);
  EntityShortlist shortlist = parse_shortlist(resp.text, problem);
  if (shortlist.entities.empty())
    throw EmptyShortlist("no entity tokens in response: \"" + resp.text + "\"");
  return shortlist;
}

Translation translate(llm::ChatBackend& backend, const PromptLibrary& prompts,
                      const EntityShortlist& shortlist, const std::string& command,
                      std::span<const domain::ActionSchema> catalog,
                      const PipelineOptions& options) {
  if (shortlist.entities.empty()) throw ValidationError("translate needs a non-empty shortlist");
  const auto req = build_translation_request(prompts, shortlist, command, catalog, options);
  const auto resp = backend.complete(req);
  auto parsed = actions::parse_any(resp.text);  // EmptyParse propagates
  Translation t;
  t.raw_text = resp.text;
  t.sequence = std::move(parsed.actions);
  t.skipped_lines = std::move(parsed.skipped_lines);
  return t;
}

PostProcessResult post_process(const actions::ActionSequence& raw,
                               std::span<const domain::ActionSchema> catalog,
                               const std::set<std::string>& entities,
                               const actions::AliasTable& aliases) {
  PostProcessResult out;
  const ActionInstance* last_survivor = nullptr;

  auto find_schema = [&](const std::string& name) -> const domain::ActionSchema* {
    for (const auto& s : catalog)
      if (s.name == name) return &s;
    return nullptr;
  };

  for (const auto& original : raw) {
    ActionInstance a = actions::canonicalize(original, aliases).action;
    const bool extraneous = aliases.extraneous().count(a.name) != 0;
    const domain::ActionSchema* schema = find_schema(a.name);

    // (a) name maps to neither the catalog nor the extraneous set
    if (!schema && !extraneous) {
      out.removals.push_back({std::move(a), RemovalReason::Unmapped});
      continue;
    }
    if (schema && a.args.size() > schema->params.size()) {
      out.warnings.push_back("truncated surplus arguments of " + actions::to_string(a));
      a.args.resize(schema->params.size());
    }
    // (b) undeclared entity argument; quoted speech is exempt
    bool bad_entity = false;
    for (const auto& arg : a.args) {
      if (!arg.quoted && !entities.count(arg.value)) {
        bad_entity = true;
        break;
      }
    }
    if (bad_entity) {
      out.removals.push_back({std::move(a), RemovalReason::NonexistentEntity});
      continue;
    }
    // (c) identical to the immediately preceding surviving action
    if (last_survivor && a == *last_survivor) {
      out.removals.push_back({std::move(a), RemovalReason::ConsecutiveDuplicate});
      continue;
    }
    // (d) extraneous filler
    if (extraneous) {
      out.removals.push_back({std::move(a), RemovalReason::Extraneous});
      continue;
    }
    out.sequence.push_back(std::move(a));
    last_survivor = &out.sequence.back();
  }
  return out;
}

PipelineResult run(llm::ChatBackend& backend, const PromptLibrary& prompts,
                   const domain::ProblemDefinition& problem, const std::string& command,
                   const actions::AliasTable& aliases, const PipelineOptions& options) {
  if (command.empty()) throw ValidationError("command must be non-empty");

  PipelineResult result;
  result.command = command;

  try {
    result.shortlist = infer_entities(backend, prompts, problem, command, options);
  } catch (const Error& e) {
    std::throw_with_nested(PipelineError("entity_inference", e.what()));
  }

  try {
    auto t = translate(backend, prompts, result.shortlist, command, problem.schemas, options);
    result.raw_text = std::move(t.raw_text);
    result.raw_sequence = std::move(t.sequence);
  } catch (const Error& e) {
    std::throw_with_nested(PipelineError("translate", e.what()));
  }

  auto post = post_process(result.raw_sequence, problem.schemas, problem.entity_set(), aliases);
  result.final_sequence = std::move(post.sequence);
  result.removal_log = std::move(post.removals);
  result.warnings = std::move(post.warnings);
  return result;
}

}  // namespace cas::pipeline
