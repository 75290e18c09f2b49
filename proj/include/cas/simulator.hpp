#pragma once

#include <string>
#include <vector>

#include "cas/actionseq.hpp"
#include "cas/domain.hpp"

namespace cas::sim {

/// strict_skip applies each applicable action in order and skips the rest.
/// assisted additionally satisfies a missing robot_at precondition by
/// inserting an implicit move first (the navigation a planner would fill
/// in); possession and device-state preconditions are never auto-satisfied.
enum class Mode { StrictSkip, Assisted };

enum class StepStatus { Executed, Skipped };

enum class SkipReason {
  None,
  UnknownAction,      // no schema with this name
  MissingArguments,   // fewer args than the schema's parameters
  UnknownEntity,
  RoleMismatch,       // entity category does not fit the parameter
  Unresolvable,       // here/place() has no referent in the current state
  Precondition,
};

std::string to_string(SkipReason r);

struct TraceStep {
  actions::ActionInstance action;  // as attempted (surplus args already truncated)
  StepStatus status = StepStatus::Skipped;
  SkipReason reason = SkipReason::None;
  std::string detail;   // human-readable specifics for skips
  bool implicit = false;  // navigation inserted by assisted mode
  domain::WorldState state_after;
};

struct ExecutionResult {
  domain::WorldState final_state;
  std::vector<TraceStep> trace;
};

/// Runs the sequence from the problem's initial state. Impossible actions
/// (unknown verb, bad arguments, unsatisfied preconditions) are skipped
/// with a reason, never raised: the result is always the state reached by
/// the executable subset. Deterministic; the input state is unmodified.
/// Surplus arguments beyond a schema's arity are dropped.
ExecutionResult execute(const domain::ProblemDefinition& problem,
                        const actions::ActionSequence& seq, Mode mode);

/// One `executed|skipped <reason> <action>` line per trace step; implicit
/// moves carry the reason slot `implicit`, plain executed steps `-`.
std::string format_trace(const std::vector<TraceStep>& trace);

}  // namespace cas::sim
