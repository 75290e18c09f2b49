#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cas/actionseq.hpp"
#include "cas/domain.hpp"
#include "cas/llm.hpp"
#include "cas/metrics.hpp"
#include "cas/pipeline.hpp"
#include "cas/simulator.hpp"
#include "cas/stats.hpp"

namespace cas::harness {

struct Summary {
  enum class Kind { Human, Model };
  Kind kind = Kind::Human;
  std::string text;
};

/// One dataset entry: task prose, the hand-crafted reference sequence,
/// optional per-action descriptions (aligned 1:1 with the reference), and
/// exactly three overarching summaries (two human-written, one
/// model-written).
struct TaskRecord {
  std::string id;
  std::string problem_ref;
  std::string task_prose;
  actions::ActionSequence reference_sequence;  // canonical catalog names
  std::vector<std::optional<std::string>> per_action_nl;
  std::vector<Summary> summaries;
};

/// Parses one record file. Format, one file per record:
///
///   id: mail_run_01
///   problem: household_ext
///   task: <one line of prose>
///   [actions]        # script-style reference actions
///   [Walk] <porch> (1)
///   [descriptions]   # one line per action, "-" for none
///   go out to the porch
///   [summaries]      # exactly three: two "human:", one "model:"
///   human: ...
///
/// Reference actions are canonicalized through the alias table at load.
/// Throws ParseError/ValidationError mentioning the record id.
TaskRecord parse_record(const std::string& text, const actions::AliasTable& aliases,
                        const std::string& name_hint);

/// Loads every *.rec file in the directory, sorted by filename. An empty
/// or missing directory yields an empty list.
std::vector<TaskRecord> load_dataset(const std::filesystem::path& dir,
                                     const actions::AliasTable& aliases);

llm::ChatRequest build_summarize_request(const pipeline::PromptLibrary& prompts,
                                         const std::string& task_prose,
                                         std::span<const std::optional<std::string>> steps,
                                         const std::string& model_id);

/// Asks the model for a one-sentence summary of the per-action
/// descriptions (temperature 0). Empty descriptions are skipped and the
/// rest renumbered; at least one non-empty description is required. The
/// first non-empty line of the response is returned, trimmed.
std::string summarize_steps(llm::ChatBackend& backend, const pipeline::PromptLibrary& prompts,
                            const std::string& task_prose,
                            std::span<const std::optional<std::string>> per_action_nl,
                            const std::string& model_id = "sonnet-3.5-v2");

/// All .problem files of a directory, keyed by filename stem.
class ProblemLibrary {
public:
  explicit ProblemLibrary(const std::filesystem::path& dir);

  const domain::ProblemDefinition& get(const std::string& name) const;
  std::size_t size() const { return problems_.size(); }

private:
  std::map<std::string, domain::ProblemDefinition> problems_;
};

/// One evaluation treatment: a command-translation model behind a backend.
struct ModelProfile {
  std::string id;  // used as the translation model_id
  std::shared_ptr<llm::ChatBackend> backend;
  bool include_catalog = false;  // pretrained models get the action list
};

struct EvalOptions {
  std::string entity_model_id = "codestral-22b-v0.1";
  sim::Mode mode = sim::Mode::Assisted;
  bool strict = false;  // abort on FixtureMiss instead of failing the cell
  int parallelism = 1;
};

struct CellResult {
  std::string record_id;
  std::string model_id;
  int summary_index = 0;  // 0..2
  bool ok = false;
  std::string error;  // set when !ok
  metrics::MetricValues values;
};

struct AggregateResult {
  std::string record_id;
  std::string model_id;
  bool ok = false;  // all three summary cells succeeded
  metrics::MetricMeans means;
};

struct StatRow {
  std::string measure;
  std::string test;  // friedman | wilcoxon_pairwise | wilcoxon_one_sample
  std::string model_a;
  std::string model_b;  // empty unless pairwise
  std::size_t n = 0;    // complete blocks / pairs used
  bool computed = false;
  stats::TestResult result;
  std::optional<double> p_corrected;  // Bonferroni, pairwise rows only
  std::string note;
};

struct ModelMeasureSummary {
  std::string model_id;
  std::string measure;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct MetricsReport {
  std::vector<CellResult> cells;            // (record, model, summary) order
  std::vector<AggregateResult> aggregates;  // (record, model) order
  std::vector<StatRow> stats;
  std::vector<ModelMeasureSummary> model_summaries;
};

/// Runs the full grid: for every (record, model, summary) cell the
/// pipeline translates the summary, both sequences are executed (assisted
/// mode by default), and the four measures are computed against the
/// reference. Cell failures are recorded and the run continues; only a
/// FixtureMiss in strict mode aborts. Statistics compare models per
/// measure over records whose blocks are complete: Friedman, all pairwise
/// Wilcoxon tests with Bonferroni correction, and one-sample Wilcoxon
/// tests against 0 for final-state similarity. Deterministic for
/// deterministic backends, regardless of parallelism.
MetricsReport evaluate(const std::vector<TaskRecord>& dataset,
                       const std::vector<ModelProfile>& models,
                       const ProblemLibrary& problems,
                       const pipeline::PromptLibrary& prompts,
                       const actions::AliasTable& aliases, const EvalOptions& options);

/// Writes cells.csv, aggregates.csv, stats.csv, and summary.txt into
/// out_dir (created if needed). Output is byte-deterministic for a given
/// report.
void write_report(const MetricsReport& report, const std::filesystem::path& out_dir);

}  // namespace cas::harness
