#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cas/actionseq.hpp"
#include "cas/domain.hpp"
#include "cas/llm.hpp"

namespace cas::pipeline {

/// Prompt templates, loaded from a directory of text files. Placeholders
/// ({entities}, {command}, {catalog}, {actions}, {task}, {steps}) are
/// replaced byte-exactly; nothing else in the file is touched.
struct PromptLibrary {
  std::string entity_inference;     // {entities}, {command}
  std::string command_translation;  // {entities}, {command}, {catalog}
  std::string catalog_clause;       // {actions}; appended for pretrained models
  std::string summarize;            // {task}, {steps}

  static PromptLibrary load_dir(const std::filesystem::path& dir);
};

/// Exact placeholder substitution: each {key} in the template is replaced
/// by its value; unknown placeholders are left alone.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& subs);

struct PipelineOptions {
  std::string entity_model_id = "codestral-22b-v0.1";
  std::string translation_model_id = "sonnet-v2";
  bool include_catalog = false;  // pretrained models need the action list
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Entities a model judged relevant to the command. Hallucinated tokens
/// are kept (post-processing guards against them later) but flagged.
struct EntityShortlist {
  std::vector<std::string> entities;  // normalized, response order, deduped
  std::set<std::string> unknown;      // subset not declared in the problem
};

enum class RemovalReason { Unmapped, NonexistentEntity, ConsecutiveDuplicate, Extraneous };

std::string to_string(RemovalReason r);

struct Removal {
  actions::ActionInstance action;  // canonical form at the time of removal
  RemovalReason reason = RemovalReason::Unmapped;
};

struct PipelineResult {
  std::string command;
  EntityShortlist shortlist;
  std::string raw_text;                  // verbatim model output
  actions::ActionSequence raw_sequence;  // parsed, before canonicalization
  actions::ActionSequence final_sequence;
  std::vector<Removal> removal_log;
  std::vector<std::string> warnings;  // argument truncations and the like
};

class EmptyShortlist : public Error {
public:
  explicit EmptyShortlist(const std::string& msg) : Error(msg) {}
};

/// Any stage failure, annotated with the stage that raised it.
class PipelineError : public Error {
public:
  PipelineError(std::string stage, const std::string& msg)
      : Error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

/// `name(param1, param2)` per schema, comma-joined.
std::string render_catalog(std::span<const domain::ActionSchema> schemas);

llm::ChatRequest build_entity_request(const PromptLibrary& prompts,
                                      const domain::ProblemDefinition& problem,
                                      const std::string& command,
                                      const PipelineOptions& options);

llm::ChatRequest build_translation_request(const PromptLibrary& prompts,
                                           const EntityShortlist& shortlist,
                                           const std::string& command,
                                           std::span<const domain::ActionSchema> catalog,
                                           const PipelineOptions& options);

/// Comma/newline-separated token list -> normalized shortlist. Tokens not
/// declared in the problem are retained and flagged unknown.
EntityShortlist parse_shortlist(const std::string& response,
                                const domain::ProblemDefinition& problem);

/// Stage 1: ask which entities relate to the command. Throws
/// EmptyShortlist when no token can be parsed out of the response;
/// backend errors propagate.
EntityShortlist infer_entities(llm::ChatBackend& backend, const PromptLibrary& prompts,
                               const domain::ProblemDefinition& problem,
                               const std::string& command, const PipelineOptions& options);

struct Translation {
  std::string raw_text;
  actions::ActionSequence sequence;
  std::vector<std::string> skipped_lines;
};

/// Stage 2: translate command + shortlist into a raw action sequence. The
/// catalog clause is appended iff options.include_catalog. The response is
/// parsed tolerantly (generic patterns first, script style as fallback).
Translation translate(llm::ChatBackend& backend, const PromptLibrary& prompts,
                      const EntityShortlist& shortlist, const std::string& command,
                      std::span<const domain::ActionSchema> catalog,
                      const PipelineOptions& options);

struct PostProcessResult {
  actions::ActionSequence sequence;
  std::vector<Removal> removals;
  std::vector<std::string> warnings;
};

/// Stage 3: canonicalize each action through the alias table, then drop it
/// when (a) the name maps to neither the catalog nor the extraneous set,
/// (b) an entity argument is undeclared (quoted strings exempt), (c) it
/// equals the immediately preceding surviving action, or (d) its name is
/// in the extraneous set. One left-to-right pass, rules checked in that
/// order per action; every input action lands in the output or the
/// removal log. Idempotent.
PostProcessResult post_process(const actions::ActionSequence& raw,
                               std::span<const domain::ActionSchema> catalog,
                               const std::set<std::string>& entities,
                               const actions::AliasTable& aliases);

/// Full pipeline: infer_entities -> translate -> post_process, with every
/// intermediate artifact captured. Stage failures are rethrown as
/// PipelineError tagged with the stage name.
PipelineResult run(llm::ChatBackend& backend, const PromptLibrary& prompts,
                   const domain::ProblemDefinition& problem, const std::string& command,
                   const actions::AliasTable& aliases, const PipelineOptions& options);

}  // namespace cas::pipeline
