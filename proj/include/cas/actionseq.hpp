#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cas/errors.hpp"

namespace cas::actions {

/// Lowercases an identifier token and folds everything that is not
/// [a-z0-9_] into single underscores. Idempotent by construction:
/// normalize(normalize(x)) == normalize(x).
std::string normalize_token(const std::string& raw);

/// One action argument: either an entity token (normalized) or a quoted
/// string kept verbatim (speech and similar free-text payloads).
struct Arg {
  std::string value;
  bool quoted = false;

  auto operator<=>(const Arg&) const = default;
};

inline Arg entity_arg(std::string v) { return Arg{std::move(v), false}; }
inline Arg string_arg(std::string v) { return Arg{std::move(v), true}; }

/// A grounded symbolic action: verb plus ordered arguments.
struct ActionInstance {
  std::string name;
  std::vector<Arg> args;

  auto operator<=>(const ActionInstance&) const = default;
};

/// Ordered list of actions; duplicates permitted, may be empty.
using ActionSequence = std::vector<ActionInstance>;

/// Renders `name(arg1, arg2)`; quoted args keep their quotes.
std::string to_string(const ActionInstance& a);
std::string to_string(const ActionSequence& seq);

/// Raised by parse_generic when no action could be recovered from the text.
class EmptyParse : public Error {
public:
  explicit EmptyParse(const std::string& msg) : Error(msg) {}
};

/// Parses script-style text, one action per line:
///   [Verb] <arg1> (1) <arg2> (1)
/// Instance indices in parentheses are dropped; verbs and args are
/// normalized. Blank lines and `#` comments are skipped.
/// Throws ParseError (with line number) on malformed lines.
ActionSequence parse_vh(const std::string& text);

/// Inverse of parse_vh modulo whitespace; emits `(1)` for every index.
std::string serialize_vh(const ActionSequence& seq);

struct GenericParse {
  ActionSequence actions;
  std::vector<std::string> skipped_lines;  // nonempty lines with no action pattern
};

/// Tolerant extraction of `verb(args...)` patterns from free-form model
/// output. Strips code fences, bullets, and list numbering; recovers at
/// most one action per input line. Never throws except EmptyParse (zero
/// actions recovered).
GenericParse parse_generic(const std::string& text);

/// parse_generic with a parse_vh fallback when no generic pattern matches.
GenericParse parse_any(const std::string& text);

/// Keyword table mapping foreign verbs onto canonical catalog names.
///
/// File format, one mapping per line, `#` comments:
///   alias1|alias2|... -> canonical
///   alias -> canonical($2, $1)     # optional argument selection/reorder
///   @extraneous wait|noop|pause    # names treated as filler downstream
///
/// A mapping target must not itself appear as an alias, so a single
/// application of the table is always a fixed point.
class AliasTable {
public:
  struct Mapping {
    std::string canonical;
    std::vector<int> arg_selectors;  // 1-based source positions; empty = keep args
  };

  AliasTable() = default;

  static AliasTable parse(const std::string& text);
  static AliasTable load_file(const std::filesystem::path& path);

  std::optional<Mapping> find(const std::string& normalized_name) const;
  bool is_canonical(const std::string& normalized_name) const;
  bool empty() const { return aliases_.empty() && canonicals_.empty(); }

  const std::set<std::string>& extraneous() const { return extraneous_; }
  const std::set<std::string>& canonical_names() const { return canonicals_; }

private:
  std::map<std::string, Mapping> aliases_;
  std::set<std::string> canonicals_;
  std::set<std::string> extraneous_;
};

struct Canonicalized {
  ActionInstance action;
  bool known = false;  // name recognized by the table (alias or canonical)
};

/// Lowercases/normalizes the verb and entity args, folds aliases onto
/// canonical names, and applies the mapping's argument selectors. Quoted
/// args pass through verbatim. Unmapped names are returned unchanged with
/// known=false; an empty table performs pure normalization and reports
/// every name as known (there is nothing to judge against). Idempotent.
Canonicalized canonicalize(const ActionInstance& a, const AliasTable& table);

}  // namespace cas::actions
