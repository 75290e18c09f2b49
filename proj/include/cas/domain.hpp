#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cas/actionseq.hpp"
#include "cas/errors.hpp"

namespace cas::domain {

using actions::Arg;

enum class Category : std::uint8_t { Object, Location, Person };

std::string to_string(Category c);

/// A ground predicate applied to concrete entities, arity 1-3.
/// Equality is structural and order-sensitive.
struct Fluent {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Fluent&) const = default;
};

std::string to_string(const Fluent& f);

inline Fluent fluent(std::string pred, std::vector<std::string> args) {
  return Fluent{std::move(pred), std::move(args)};
}

/// A finite set of ground fluents. Set semantics: no duplicates. A state
/// describing a full scenario carries exactly one `robot_at` fluent;
/// load_problem enforces that for initial states and the bundled action
/// catalog preserves it under apply.
struct WorldState {
  std::set<Fluent> fluents;

  bool contains(const Fluent& f) const { return fluents.count(f) != 0; }
  std::size_t size() const { return fluents.size(); }

  /// Argument of the unique robot_at fluent, or nullopt when there are
  /// zero or several of them.
  std::optional<std::string> robot_location() const;

  auto operator<=>(const WorldState&) const = default;
};

std::string to_string(const WorldState& s);

/// Cardinality of the symmetric difference of two fluent sets.
std::size_t state_difference(const WorldState& a, const WorldState& b);

/// Term inside a schema's precondition/effect template. `Here` and
/// `PlaceOf` are resolved against the world state at execution time:
/// `here` names the robot's current location, `place(x)` the location the
/// entity bound to x currently occupies (itself, for locations).
struct TemplateTerm {
  enum class Kind : std::uint8_t { Param, Entity, Here, PlaceOf };
  Kind kind = Kind::Param;
  std::string text;  // param name (Param/PlaceOf) or entity name (Entity)

  auto operator<=>(const TemplateTerm&) const = default;
};

struct FluentTemplate {
  std::string predicate;
  std::vector<TemplateTerm> args;

  auto operator<=>(const FluentTemplate&) const = default;
};

constexpr std::uint8_t kObjectMask = 1u << 0;
constexpr std::uint8_t kLocationMask = 1u << 1;
constexpr std::uint8_t kPersonMask = 1u << 2;
constexpr std::uint8_t kAnyMask = kObjectMask | kLocationMask | kPersonMask;

/// Formal parameter of a schema: a role name plus the entity categories it
/// accepts. `is_string` marks parameters that take a quoted string instead
/// of an entity (speech payloads).
struct Param {
  std::string name;
  std::uint8_t category_mask = kAnyMask;
  bool is_string = false;
};

/// Lifted action: name, typed parameters, and precondition/effect
/// templates whose variables all appear in params.
struct ActionSchema {
  std::string name;
  std::vector<Param> params;
  std::vector<FluentTemplate> preconditions;
  std::vector<FluentTemplate> add_effects;
  std::vector<FluentTemplate> del_effects;
};

/// Schema term after parameter substitution. PlaceOf/Here still await the
/// world state.
struct GroundTerm {
  enum class Kind : std::uint8_t { Entity, Here, PlaceOf };
  Kind kind = Kind::Entity;
  std::string entity;  // concrete entity (Entity) or place() target (PlaceOf)

  auto operator<=>(const GroundTerm&) const = default;
};

struct GroundFluent {
  std::string predicate;
  std::vector<GroundTerm> args;
};

/// Action with parameters substituted by concrete arguments.
struct GroundedAction {
  std::string name;
  std::vector<Arg> args;
  std::vector<GroundFluent> preconditions;
  std::vector<GroundFluent> add_effects;
  std::vector<GroundFluent> del_effects;
};

/// Fully concrete action: every precondition and effect is a ground
/// fluent. This is what applicable/apply operate on.
struct ResolvedAction {
  std::string name;
  std::vector<Arg> args;
  std::vector<Fluent> preconditions;
  std::vector<Fluent> add_effects;
  std::vector<Fluent> del_effects;
};

std::string to_string(const ResolvedAction& a);

struct EntityDecl {
  std::string name;
  Category category = Category::Object;
  std::optional<std::string> location;  // adds at(name, location) to initial
};

/// Entities, action schemas, and the initial state for one scenario.
struct ProblemDefinition {
  std::string name;
  std::vector<EntityDecl> entities;  // declaration order preserved
  std::vector<ActionSchema> schemas;
  WorldState initial;

  const EntityDecl* find_entity(const std::string& name) const;
  const ActionSchema* find_schema(const std::string& name) const;
  bool has_entity(const std::string& name) const { return find_entity(name) != nullptr; }

  /// Entity names in declaration order (prompt rendering relies on this).
  std::vector<std::string> entity_names() const;
  std::set<std::string> entity_set() const;
};

class GroundingError : public Error {
public:
  explicit GroundingError(const std::string& msg) : Error(msg) {}
};
class ArityMismatch : public GroundingError {
public:
  explicit ArityMismatch(const std::string& msg) : GroundingError(msg) {}
};
class UnknownEntity : public GroundingError {
public:
  explicit UnknownEntity(const std::string& msg) : GroundingError(msg) {}
};
class RoleMismatch : public GroundingError {
public:
  explicit RoleMismatch(const std::string& msg) : GroundingError(msg) {}
};
class NotApplicable : public Error {
public:
  explicit NotApplicable(const std::string& msg) : Error(msg) {}
};

/// Substitutes args into the schema's templates. Throws ArityMismatch when
/// |args| != |params|, UnknownEntity for an entity arg not declared in the
/// problem, RoleMismatch when an arg's category (or string-ness) does not
/// fit the parameter.
GroundedAction ground(const ProblemDefinition& problem, const ActionSchema& schema,
                      std::span<const Arg> args);

/// Resolves here/place() terms against the state. Returns nullopt when a
/// term has no referent (no unique robot_at; entity held or placeless);
/// `why`, if given, receives the reason. Any del effect that coincides
/// with an add effect after resolution is dropped, keeping the effect sets
/// disjoint.
std::optional<ResolvedAction> resolve(const WorldState& state, const GroundedAction& action,
                                      std::string* why = nullptr);

/// resolve() with the problem's entity categories available, so place()
/// applied to a declared location resolves to the location itself even
/// when nothing currently sits there.
std::optional<ResolvedAction> resolve_in(const ProblemDefinition& problem,
                                         const WorldState& state, const GroundedAction& action,
                                         std::string* why = nullptr);

/// True iff every precondition fluent is in the state.
bool applicable(const WorldState& state, const ResolvedAction& action);

/// (state \ del_effects) ∪ add_effects. The input state is unmodified.
/// Throws NotApplicable when a precondition is unsatisfied.
WorldState apply(const WorldState& state, const ResolvedAction& action);

/// Parses the line-oriented problem format:
///
///   [entities]
///   name: category            # object | location | person
///   name: category at place   # also adds at(name, place) to the initial state
///   [schemas]
///   name(param: cats, ...) pre {fluents} add {fluents} del {fluents}
///   [initial]
///   predicate(arg, ...)
///
/// Template terms may be parameter names, declared entities, `here`, or
/// `place(param)`. Throws ParseError with line/column, or ValidationError
/// naming the violated invariant.
ProblemDefinition load_problem(const std::string& text, const std::string& name = "");

ProblemDefinition load_problem_file(const std::filesystem::path& path);

}  // namespace cas::domain
