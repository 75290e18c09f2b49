#include "cas/domain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace cas::domain {

std::string to_string(Category c) {
  switch (c) {
    case Category::Object: return "object";
    case Category::Location: return "location";
    case Category::Person: return "person";
  }
  return "?";
}

std::string to_string(const Fluent& f) {
  std::string s = f.predicate;
  s.push_back('(');
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    if (i) s += ", ";
    s += f.args[i];
  }
  s.push_back(')');
  return s;
}

std::optional<std::string> WorldState::robot_location() const {
  std::optional<std::string> loc;
  for (const auto& f : fluents) {
    if (f.predicate == "robot_at" && f.args.size() == 1) {
      if (loc) return std::nullopt;  // not unique
      loc = f.args[0];
    }
  }
  return loc;
}

std::string to_string(const WorldState& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& f : s.fluents) {
    if (!first) out += ", ";
    first = false;
    out += to_string(f);
  }
  out += "}";
  return out;
}

std::size_t state_difference(const WorldState& a, const WorldState& b) {
  std::size_t diff = 0;
  for (const auto& f : a.fluents)
    if (!b.contains(f)) ++diff;
  for (const auto& f : b.fluents)
    if (!a.contains(f)) ++diff;
  return diff;
}

std::string to_string(const ResolvedAction& a) {
  return actions::to_string(actions::ActionInstance{a.name, a.args});
}

const EntityDecl* ProblemDefinition::find_entity(const std::string& n) const {
  for (const auto& e : entities)
    if (e.name == n) return &e;
  return nullptr;
}

const ActionSchema* ProblemDefinition::find_schema(const std::string& n) const {
  for (const auto& s : schemas)
    if (s.name == n) return &s;
  return nullptr;
}

std::vector<std::string> ProblemDefinition::entity_names() const {
  std::vector<std::string> names;
  names.reserve(entities.size());
  for (const auto& e : entities) names.push_back(e.name);
  return names;
}

std::set<std::string> ProblemDefinition::entity_set() const {
  std::set<std::string> names;
  for (const auto& e : entities) names.insert(e.name);
  return names;
}

namespace {

std::uint8_t category_mask(Category c) {
  switch (c) {
    case Category::Object: return kObjectMask;
    case Category::Location: return kLocationMask;
    case Category::Person: return kPersonMask;
  }
  return 0;
}

}  // namespace

GroundedAction ground(const ProblemDefinition& problem, const ActionSchema& schema,
                      std::span<const Arg> args) {
  if (args.size() != schema.params.size())
    throw ArityMismatch(schema.name + ": expected " + std::to_string(schema.params.size()) +
                        " argument(s), got " + std::to_string(args.size()));

  std::map<std::string, Arg> binding;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const Param& p = schema.params[i];
    const Arg& a = args[i];
    if (p.is_string) {
      if (!a.quoted)
        throw RoleMismatch(schema.name + ": parameter '" + p.name + "' takes a quoted string");
    } else {
      if (a.quoted)
        throw RoleMismatch(schema.name + ": parameter '" + p.name + "' takes an entity");
      const EntityDecl* decl = problem.find_entity(a.value);
      if (!decl) throw UnknownEntity(schema.name + ": unknown entity '" + a.value + "'");
      if (!(category_mask(decl->category) & p.category_mask))
        throw RoleMismatch(schema.name + ": '" + a.value + "' is a " +
                           to_string(decl->category) + ", not accepted for parameter '" +
                           p.name + "'");
    }
    binding[p.name] = a;
  }

  auto substitute = [&](const std::vector<FluentTemplate>& templates) {
    std::vector<GroundFluent> out;
    out.reserve(templates.size());
    for (const auto& t : templates) {
      GroundFluent g;
      g.predicate = t.predicate;
      for (const auto& term : t.args) {
        switch (term.kind) {
          case TemplateTerm::Kind::Entity:
            g.args.push_back({GroundTerm::Kind::Entity, term.text});
            break;
          case TemplateTerm::Kind::Here:
            g.args.push_back({GroundTerm::Kind::Here, ""});
            break;
          case TemplateTerm::Kind::Param:
            g.args.push_back({GroundTerm::Kind::Entity, binding.at(term.text).value});
            break;
          case TemplateTerm::Kind::PlaceOf:
            g.args.push_back({GroundTerm::Kind::PlaceOf, binding.at(term.text).value});
            break;
        }
      }
      out.push_back(std::move(g));
    }
    return out;
  };

  GroundedAction a;
  a.name = schema.name;
  a.args.assign(args.begin(), args.end());
  a.preconditions = substitute(schema.preconditions);
  a.add_effects = substitute(schema.add_effects);
  a.del_effects = substitute(schema.del_effects);
  return a;
}

namespace {

// The unique L with at(e, L) in the state, or nullopt.
std::optional<std::string> place_of(const WorldState& state, const std::string& entity) {
  std::optional<std::string> loc;
  for (const auto& f : state.fluents) {
    if (f.predicate == "at" && f.args.size() == 2 && f.args[0] == entity) {
      if (loc) return std::nullopt;  // ambiguous
      loc = f.args[1];
    }
  }
  return loc;
}

}  // namespace

std::optional<ResolvedAction> resolve(const WorldState& state, const GroundedAction& action,
                                      std::string* why) {
  // Location entities are recognized without the problem here: an entity
  // with no at() fluent resolves to itself only if something is at() it or
  // it is the robot's location. The simulator passes through ground() with
  // the problem, so in practice place() targets are categorised there; the
  // fallback below keeps resolve usable on hand-built actions.
  auto fail = [&](const std::string& reason) -> std::optional<ResolvedAction> {
    if (why) *why = reason;
    return std::nullopt;
  };

  std::optional<std::string> here = state.robot_location();

  auto resolve_term = [&](const GroundTerm& t) -> std::optional<std::string> {
    switch (t.kind) {
      case GroundTerm::Kind::Entity: return t.entity;
      case GroundTerm::Kind::Here: return here;
      case GroundTerm::Kind::PlaceOf: {
        if (auto p = place_of(state, t.entity)) return p;
        // A bare location: nothing is at() it, but it can still serve as a
        // place if it occurs as a location in the state or is the robot's
        // own location.
        for (const auto& f : state.fluents) {
          if (f.predicate == "at" && f.args.size() == 2 && f.args[1] == t.entity)
            return t.entity;
          if (f.predicate == "robot_at" && f.args.size() == 1 && f.args[0] == t.entity)
            return t.entity;
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  };

  auto resolve_set = [&](const std::vector<GroundFluent>& in, std::vector<Fluent>* out,
                         std::string* reason) {
    for (const auto& g : in) {
      Fluent f;
      f.predicate = g.predicate;
      for (const auto& t : g.args) {
        auto v = resolve_term(t);
        if (!v) {
          if (t.kind == GroundTerm::Kind::Here)
            *reason = "no unique robot location";
          else
            *reason = "no place for '" + t.entity + "'";
          return false;
        }
        f.args.push_back(*v);
      }
      out->push_back(std::move(f));
    }
    return true;
  };

  ResolvedAction r;
  r.name = action.name;
  r.args = action.args;
  std::string reason;
  if (!resolve_set(action.preconditions, &r.preconditions, &reason) ||
      !resolve_set(action.add_effects, &r.add_effects, &reason) ||
      !resolve_set(action.del_effects, &r.del_effects, &reason))
    return fail(reason);

  // here/place() terms may coincide after resolution (moving into the room
  // the robot already occupies); keep the grounded effect sets disjoint.
  std::erase_if(r.del_effects, [&](const Fluent& f) {
    return std::find(r.add_effects.begin(), r.add_effects.end(), f) != r.add_effects.end();
  });
  return r;
}

std::optional<ResolvedAction> resolve_in(const ProblemDefinition& problem,
                                         const WorldState& state, const GroundedAction& action,
                                         std::string* why) {
  GroundedAction patched = action;
  // Pre-resolve place() terms whose target is a declared location.
  for (auto* set : {&patched.preconditions, &patched.add_effects, &patched.del_effects}) {
    for (auto& g : *set) {
      for (auto& t : g.args) {
        if (t.kind == GroundTerm::Kind::PlaceOf) {
          const EntityDecl* d = problem.find_entity(t.entity);
          if (d && d->category == Category::Location) t.kind = GroundTerm::Kind::Entity;
        }
      }
    }
  }
  return resolve(state, patched, why);
}

bool applicable(const WorldState& state, const ResolvedAction& action) {
  for (const auto& f : action.preconditions)
    if (!state.contains(f)) return false;
  return true;
}

WorldState apply(const WorldState& state, const ResolvedAction& action) {
  if (!applicable(state, action))
    throw NotApplicable("preconditions of " + to_string(action) + " not satisfied");
  WorldState out = state;
  for (const auto& f : action.del_effects) out.fluents.erase(f);
  for (const auto& f : action.add_effects) out.fluents.insert(f);
  return out;
}

// ---------------------------------------------------------------------------
// Problem file parsing

namespace {

struct Cursor {
  const std::string& line;
  std::size_t lineno;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }
  char peek() {
    skip_ws();
    return pos < line.size() ? line[pos] : '\0';
  }
  void expect(char c) {
    skip_ws();
    if (pos >= line.size() || line[pos] != c)
      throw ParseError(std::string("expected '") + c + "'", lineno, pos + 1);
    ++pos;
  }
  bool consume(char c) {
    skip_ws();
    if (pos < line.size() && line[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < line.size() &&
           (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '_'))
      ++pos;
    if (pos == start) throw ParseError("expected identifier", lineno, pos + 1);
    return line.substr(start, pos - start);
  }
};

Category parse_category(const std::string& tok, std::size_t lineno) {
  if (tok == "object") return Category::Object;
  if (tok == "location") return Category::Location;
  if (tok == "person") return Category::Person;
  throw ParseError("unknown category '" + tok + "'", lineno);
}

std::uint8_t parse_category_mask(Cursor& c) {
  std::uint8_t mask = 0;
  while (true) {
    std::string tok = c.ident();
    if (tok == "any") {
      mask |= kAnyMask;
    } else {
      mask |= category_mask(parse_category(tok, c.lineno));
    }
    if (!c.consume('|')) break;
  }
  return mask;
}

TemplateTerm parse_term(Cursor& c, const ActionSchema& schema) {
  std::string tok = c.ident();
  if (tok == "here") return {TemplateTerm::Kind::Here, ""};
  if (tok == "place") {
    c.expect('(');
    std::string inner = c.ident();
    c.expect(')');
    return {TemplateTerm::Kind::PlaceOf, inner};
  }
  for (const auto& p : schema.params)
    if (p.name == tok) return {TemplateTerm::Kind::Param, tok};
  return {TemplateTerm::Kind::Entity, tok};
}

std::vector<FluentTemplate> parse_template_set(Cursor& c, const ActionSchema& schema) {
  std::vector<FluentTemplate> out;
  c.expect('{');
  if (c.consume('}')) return out;
  while (true) {
    FluentTemplate t;
    t.predicate = c.ident();
    c.expect('(');
    if (!c.consume(')')) {
      while (true) {
        t.args.push_back(parse_term(c, schema));
        if (c.consume(')')) break;
        c.expect(',');
      }
    }
    if (t.args.empty() || t.args.size() > 3)
      throw ParseError("fluent arity must be 1-3", c.lineno, c.pos);
    out.push_back(std::move(t));
    if (c.consume('}')) break;
    c.expect(',');
  }
  return out;
}

ActionSchema parse_schema_line(const std::string& line, std::size_t lineno) {
  Cursor c{line, lineno};
  ActionSchema s;
  s.name = c.ident();
  c.expect('(');
  if (!c.consume(')')) {
    while (true) {
      Param p;
      p.name = c.ident();
      c.expect(':');
      c.skip_ws();
      std::size_t mark = c.pos;
      std::string first = c.ident();
      if (first == "string") {
        p.is_string = true;
        p.category_mask = 0;
      } else {
        c.pos = mark;
        p.category_mask = parse_category_mask(c);
      }
      s.params.push_back(std::move(p));
      if (c.consume(')')) break;
      c.expect(',');
    }
  }
  while (!c.at_end()) {
    std::string kw = c.ident();
    std::vector<FluentTemplate>* target = nullptr;
    if (kw == "pre") target = &s.preconditions;
    else if (kw == "add") target = &s.add_effects;
    else if (kw == "del") target = &s.del_effects;
    else throw ParseError("expected pre/add/del, got '" + kw + "'", lineno, c.pos);
    if (!target->empty())
      throw ParseError("duplicate '" + kw + "' clause", lineno, c.pos);
    *target = parse_template_set(c, s);
  }
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ProblemDefinition load_problem(const std::string& text, const std::string& name) {
  ProblemDefinition problem;
  problem.name = name;

  enum class Section { None, Entities, Schemas, Initial };
  Section section = Section::None;

  struct Pending {
    std::string line;
    std::size_t lineno;
  };
  std::vector<Pending> schema_lines, initial_lines;

  std::stringstream ss(text);
  std::string raw;
  std::size_t lineno = 0;
  bool any_content = false;
  while (std::getline(ss, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    any_content = true;
    if (line == "[entities]") { section = Section::Entities; continue; }
    if (line == "[schemas]") { section = Section::Schemas; continue; }
    if (line == "[initial]") { section = Section::Initial; continue; }
    if (line[0] == '[') throw ParseError("unknown section '" + line + "'", lineno);

    switch (section) {
      case Section::None:
        throw ParseError("content before any [section]", lineno);
      case Section::Entities: {
        // name: category [at location]
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("expected 'name: category'", lineno);
        EntityDecl d;
        d.name = actions::normalize_token(line.substr(0, colon));
        if (d.name.empty()) throw ParseError("empty entity name", lineno);
        std::string rest = trim(line.substr(colon + 1));
        // strip trailing comment
        std::size_t hash = rest.find('#');
        if (hash != std::string::npos) rest = trim(rest.substr(0, hash));
        std::stringstream parts(rest);
        std::string cat, at_kw, loc;
        parts >> cat;
        d.category = parse_category(cat, lineno);
        if (parts >> at_kw) {
          if (at_kw != "at") throw ParseError("expected 'at <location>'", lineno);
          if (!(parts >> loc)) throw ParseError("missing location after 'at'", lineno);
          d.location = actions::normalize_token(loc);
        }
        problem.entities.push_back(std::move(d));
        break;
      }
      case Section::Schemas:
        schema_lines.push_back({line, lineno});
        break;
      case Section::Initial:
        initial_lines.push_back({line, lineno});
        break;
    }
  }
  if (!any_content) throw ParseError("empty problem file", 1);

  // entities: unique names, declared at-locations exist and are locations
  std::set<std::string> seen;
  for (const auto& e : problem.entities) {
    if (!seen.insert(e.name).second)
      throw ValidationError("duplicate entity '" + e.name + "'");
  }
  for (const auto& e : problem.entities) {
    if (e.location) {
      const EntityDecl* loc = problem.find_entity(*e.location);
      if (!loc)
        throw ValidationError("entity '" + e.name + "' placed at undeclared '" +
                              *e.location + "'");
      if (loc->category != Category::Location)
        throw ValidationError("entity '" + e.name + "' placed at non-location '" +
                              *e.location + "'");
      problem.initial.fluents.insert(fluent("at", {e.name, *e.location}));
    }
  }

  for (const auto& p : schema_lines) {
    ActionSchema s = parse_schema_line(p.line, p.lineno);
    if (problem.find_schema(s.name))
      throw ValidationError("duplicate schema '" + s.name + "'");
    // every Entity term must be a declared entity; syntactically identical
    // add/del templates would intersect under every binding
    for (const auto* set : {&s.preconditions, &s.add_effects, &s.del_effects}) {
      for (const auto& t : *set) {
        for (const auto& term : t.args) {
          if (term.kind == TemplateTerm::Kind::Entity && !problem.has_entity(term.text))
            throw ValidationError("schema '" + s.name + "' references '" + term.text +
                                  "', which is neither a parameter nor a declared entity");
        }
      }
    }
    for (const auto& a : s.add_effects) {
      for (const auto& d : s.del_effects) {
        if (a == d)
          throw ValidationError("schema '" + s.name + "': template " + a.predicate +
                                "(...) appears in both add and del effects");
      }
    }
    problem.schemas.push_back(std::move(s));
  }

  for (const auto& p : initial_lines) {
    Cursor c{p.line, p.lineno};
    Fluent f;
    f.predicate = c.ident();
    c.expect('(');
    while (true) {
      f.args.push_back(actions::normalize_token(c.ident()));
      if (c.consume(')')) break;
      c.expect(',');
    }
    if (f.args.empty() || f.args.size() > 3)
      throw ParseError("fluent arity must be 1-3", p.lineno);
    problem.initial.fluents.insert(std::move(f));
  }

  // every entity mentioned in the initial state is declared
  for (const auto& f : problem.initial.fluents) {
    for (const auto& a : f.args) {
      if (!problem.has_entity(a))
        throw ValidationError("initial state references undeclared entity '" + a + "' in " +
                              to_string(f));
    }
  }
  // exactly one robot_at
  std::size_t robot_ats = 0;
  for (const auto& f : problem.initial.fluents)
    if (f.predicate == "robot_at") ++robot_ats;
  if (robot_ats != 1)
    throw ValidationError("initial state must contain exactly one robot_at fluent, found " +
                          std::to_string(robot_ats));

  return problem;
}

ProblemDefinition load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open problem file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_problem(ss.str(), path.stem().string());
}

}  // namespace cas::domain
