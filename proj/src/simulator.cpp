#include "cas/simulator.hpp"

#include <algorithm>
#include <set>

namespace cas::sim {

using actions::ActionInstance;
using domain::Fluent;
using domain::GroundedAction;
using domain::ResolvedAction;
using domain::WorldState;

std::string to_string(SkipReason r) {
  switch (r) {
    case SkipReason::None: return "-";
    case SkipReason::UnknownAction: return "unknown_action";
    case SkipReason::MissingArguments: return "missing_arguments";
    case SkipReason::UnknownEntity: return "unknown_entity";
    case SkipReason::RoleMismatch: return "role_mismatch";
    case SkipReason::Unresolvable: return "unresolvable";
    case SkipReason::Precondition: return "precondition";
  }
  return "?";
}

namespace {

// Minimal navigation step: swap the robot_at fluent. Independent of the
// problem's own move schema so assisted mode works on any catalog.
ResolvedAction implicit_move(const WorldState& state, const std::string& dest) {
  ResolvedAction m;
  m.name = "move_to";
  m.args.push_back(actions::entity_arg(dest));
  if (auto here = state.robot_location()) {
    if (*here != dest) m.del_effects.push_back(Fluent{"robot_at", {*here}});
  }
  m.add_effects.push_back(Fluent{"robot_at", {dest}});
  return m;
}

}  // namespace

ExecutionResult execute(const domain::ProblemDefinition& problem,
                        const actions::ActionSequence& seq, Mode mode) {
  ExecutionResult result;
  WorldState state = problem.initial;

  auto push_skip = [&](ActionInstance a, SkipReason reason, std::string detail) {
    TraceStep step;
    step.action = std::move(a);
    step.status = StepStatus::Skipped;
    step.reason = reason;
    step.detail = std::move(detail);
    step.state_after = state;
    result.trace.push_back(std::move(step));
  };
  auto push_executed = [&](ActionInstance a, bool implicit) {
    TraceStep step;
    step.action = std::move(a);
    step.status = StepStatus::Executed;
    step.implicit = implicit;
    step.state_after = state;
    result.trace.push_back(std::move(step));
  };

  for (const auto& raw : seq) {
    const domain::ActionSchema* schema = problem.find_schema(raw.name);
    if (!schema) {
      push_skip(raw, SkipReason::UnknownAction, "no schema named '" + raw.name + "'");
      continue;
    }
    ActionInstance attempt = raw;
    if (attempt.args.size() > schema->params.size())
      attempt.args.resize(schema->params.size());  // surplus args dropped
    if (attempt.args.size() < schema->params.size()) {
      push_skip(attempt, SkipReason::MissingArguments,
                "expected " + std::to_string(schema->params.size()) + " argument(s)");
      continue;
    }

    GroundedAction grounded;
    try {
      grounded = domain::ground(problem, *schema, attempt.args);
    } catch (const domain::UnknownEntity& e) {
      push_skip(attempt, SkipReason::UnknownEntity, e.what());
      continue;
    } catch (const domain::RoleMismatch& e) {
      push_skip(attempt, SkipReason::RoleMismatch, e.what());
      continue;
    } catch (const domain::GroundingError& e) {
      push_skip(attempt, SkipReason::MissingArguments, e.what());
      continue;
    }

    std::string why;
    auto resolved = domain::resolve_in(problem, state, grounded, &why);
    if (!resolved) {
      push_skip(attempt, SkipReason::Unresolvable, why);
      continue;
    }

    if (!domain::applicable(state, *resolved) && mode == Mode::Assisted) {
      // collect unmet preconditions; only a unique robot_at gap is fixable
      std::set<std::string> wanted_locations;
      bool other_gaps = false;
      for (const auto& f : resolved->preconditions) {
        if (state.contains(f)) continue;
        if (f.predicate == "robot_at" && f.args.size() == 1)
          wanted_locations.insert(f.args[0]);
        else
          other_gaps = true;
      }
      if (!other_gaps && wanted_locations.size() == 1) {
        const std::string dest = *wanted_locations.begin();
        state = domain::apply(state, implicit_move(state, dest));
        ActionInstance move;
        move.name = "move_to";
        move.args.push_back(actions::entity_arg(dest));
        push_executed(std::move(move), /*implicit=*/true);
        // the robot moved: here-terms must be resolved afresh
        resolved = domain::resolve_in(problem, state, grounded, &why);
        if (!resolved) {
          push_skip(attempt, SkipReason::Unresolvable, why);
          continue;
        }
      }
    }

    if (!domain::applicable(state, *resolved)) {
      std::string missing;
      for (const auto& f : resolved->preconditions) {
        if (!state.contains(f)) {
          if (!missing.empty()) missing += ", ";
          missing += domain::to_string(f);
        }
      }
      push_skip(attempt, SkipReason::Precondition, "unsatisfied: " + missing);
      continue;
    }

    state = domain::apply(state, *resolved);
    push_executed(attempt, /*implicit=*/false);
  }

  result.final_state = std::move(state);
  return result;
}

std::string format_trace(const std::vector<TraceStep>& trace) {
  std::string out;
  for (const auto& step : trace) {
    if (step.status == StepStatus::Executed) {
      out += "executed ";
      out += step.implicit ? "implicit" : "-";
    } else {
      out += "skipped ";
      out += to_string(step.reason);
    }
    out += " ";
    out += actions::to_string(step.action);
    out += "\n";
  }
  return out;
}

}  // namespace cas::sim
