#include "cas/actionseq.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace cas::actions {

std::string normalize_token(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_sep = false;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '_' || std::isspace(c) || c == '-') {
      pending_sep = true;
    }
    // everything else is dropped outright
  }
  return out;
}

std::string to_string(const ActionInstance& a) {
  std::string s = a.name;
  s.push_back('(');
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ", ";
    if (a.args[i].quoted) {
      s.push_back('"');
      s += a.args[i].value;
      s.push_back('"');
    } else {
      s += a.args[i].value;
    }
  }
  s.push_back(')');
  return s;
}

std::string to_string(const ActionSequence& seq) {
  std::string s;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) s += ", ";
    s += to_string(seq[i]);
  }
  return s;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Splits an argument list on commas that sit outside double quotes.
std::vector<Arg> parse_arg_list(const std::string& body) {
  std::vector<Arg> args;
  std::string cur;
  bool in_quote = false;
  bool saw_quote = false;
  auto flush = [&]() {
    if (saw_quote) {
      args.push_back(string_arg(cur));
    } else {
      std::string tok = normalize_token(cur);
      if (!tok.empty()) args.push_back(entity_arg(tok));
    }
    cur.clear();
    saw_quote = false;
  };
  for (char c : body) {
    if (c == '"') {
      in_quote = !in_quote;
      if (in_quote) {
        saw_quote = true;
        cur.clear();  // drop anything before the opening quote
      }
      continue;
    }
    if (c == ',' && !in_quote) {
      flush();
      continue;
    }
    if (in_quote || saw_quote) {
      if (in_quote) cur.push_back(c);
      continue;  // text after a closing quote is ignored
    }
    cur.push_back(c);
  }
  if (!trim(cur).empty() || saw_quote) flush();
  return args;
}

}  // namespace

ActionSequence parse_vh(const std::string& text) {
  ActionSequence seq;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] != '[') throw ParseError("expected '[' at start of action", lineno, 1);
    std::size_t close = line.find(']');
    if (close == std::string::npos) throw ParseError("missing ']' after verb", lineno);
    ActionInstance a;
    a.name = normalize_token(line.substr(1, close - 1));
    if (a.name.empty()) throw ParseError("empty verb", lineno);

    std::size_t pos = close + 1;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      if (line[pos] != '<')
        throw ParseError("expected '<' before argument", lineno, pos + 1);
      std::size_t end = line.find('>', pos);
      if (end == std::string::npos) throw ParseError("missing '>' after argument", lineno);
      std::string inner = trim(line.substr(pos + 1, end - pos - 1));
      if (inner.size() >= 2 && inner.front() == '"' && inner.back() == '"') {
        a.args.push_back(string_arg(inner.substr(1, inner.size() - 2)));
      } else {
        std::string tok = normalize_token(inner);
        if (tok.empty()) throw ParseError("empty argument", lineno, pos + 1);
        a.args.push_back(entity_arg(tok));
      }
      pos = end + 1;
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size() || line[pos] != '(')
        throw ParseError("expected '(index)' after argument", lineno, pos + 1);
      std::size_t rp = line.find(')', pos);
      if (rp == std::string::npos) throw ParseError("missing ')' in index", lineno);
      std::string idx = trim(line.substr(pos + 1, rp - pos - 1));
      if (idx.empty() || !std::all_of(idx.begin(), idx.end(), [](unsigned char c) {
            return std::isdigit(c);
          }))
        throw ParseError("index must be an integer", lineno, pos + 2);
      pos = rp + 1;
    }
    seq.push_back(std::move(a));
  }
  return seq;
}

std::string serialize_vh(const ActionSequence& seq) {
  std::string out;
  for (const auto& a : seq) {
    out.push_back('[');
    out += a.name;
    out.push_back(']');
    for (const auto& arg : a.args) {
      out += " <";
      if (arg.quoted) {
        out.push_back('"');
        out += arg.value;
        out.push_back('"');
      } else {
        out += arg.value;
      }
      out += "> (1)";
    }
    out.push_back('\n');
  }
  return out;
}

namespace {

// Removes ``` fences wherever they appear in the line; a language tag right
// after an opening fence survives but never forms a verb(args) pattern.
std::string strip_fences(std::string line) {
  std::size_t pos;
  while ((pos = line.find("```")) != std::string::npos) line.erase(pos, 3);
  return line;
}

std::string strip_list_prefix(std::string line) {
  std::size_t pos = 0;
  while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  if (pos < line.size() && (line[pos] == '-' || line[pos] == '*')) {
    return line.substr(pos + 1);
  }
  std::size_t d = pos;
  while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
  if (d > pos && d < line.size() && (line[d] == '.' || line[d] == ')')) {
    return line.substr(d + 1);
  }
  return line.substr(pos);
}

// First `ident(args)` occurrence in the line, or nullopt.
std::optional<ActionInstance> match_action(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (!(std::isalpha(static_cast<unsigned char>(line[i])) || line[i] == '_')) continue;
    std::size_t j = i;
    while (j < line.size() && is_ident_char(line[j])) ++j;
    std::size_t k = j;
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
    if (k < line.size() && line[k] == '(') {
      std::size_t close = line.find(')', k + 1);
      if (close != std::string::npos &&
          line.find('(', k + 1) > close) {  // no nested '('
        ActionInstance a;
        a.name = normalize_token(line.substr(i, j - i));
        a.args = parse_arg_list(line.substr(k + 1, close - k - 1));
        return a;
      }
    }
    i = j;
  }
  return std::nullopt;
}

}  // namespace

GenericParse parse_generic(const std::string& text) {
  GenericParse out;
  for (const auto& raw : split_lines(text)) {
    std::string line = strip_list_prefix(strip_fences(raw));
    if (trim(line).empty()) continue;
    if (auto a = match_action(line)) {
      out.actions.push_back(std::move(*a));
    } else {
      out.skipped_lines.push_back(trim(line));
    }
  }
  if (out.actions.empty()) throw EmptyParse("no actions recovered from text");
  return out;
}

GenericParse parse_any(const std::string& text) {
  try {
    return parse_generic(text);
  } catch (const EmptyParse&) {
    try {
      GenericParse out;
      out.actions = parse_vh(text);
      if (!out.actions.empty()) return out;
    } catch (const ParseError&) {
      // not script style either
    }
    throw;
  }
}

AliasTable AliasTable::parse(const std::string& text) {
  AliasTable table;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;

    if (line.rfind("@extraneous", 0) == 0) {
      std::stringstream ss(line.substr(std::string("@extraneous").size()));
      std::string names;
      ss >> names;
      std::stringstream parts(names);
      std::string name;
      while (std::getline(parts, name, '|')) {
        std::string tok = normalize_token(name);
        if (!tok.empty()) table.extraneous_.insert(tok);
      }
      continue;
    }

    std::size_t arrow = line.find("->");
    if (arrow == std::string::npos)
      throw ParseError("expected 'aliases -> canonical'", lineno);
    std::string lhs = trim(line.substr(0, arrow));
    std::string rhs = trim(line.substr(arrow + 2));
    if (lhs.empty() || rhs.empty()) throw ParseError("empty alias or target", lineno);

    Mapping m;
    std::size_t lp = rhs.find('(');
    if (lp != std::string::npos) {
      if (rhs.back() != ')') throw ParseError("missing ')' in target", lineno);
      m.canonical = normalize_token(rhs.substr(0, lp));
      std::string sel = rhs.substr(lp + 1, rhs.size() - lp - 2);
      std::stringstream parts(sel);
      std::string item;
      while (std::getline(parts, item, ',')) {
        item = trim(item);
        if (item.empty() || item[0] != '$')
          throw ParseError("argument selector must be $<index>", lineno);
        int idx = 0;
        try {
          idx = std::stoi(item.substr(1));
        } catch (const std::exception&) {
          throw ParseError("argument selector must be $<index>", lineno);
        }
        if (idx < 1) throw ParseError("argument selector index is 1-based", lineno);
        m.arg_selectors.push_back(idx);
      }
    } else {
      m.canonical = normalize_token(rhs);
    }
    if (m.canonical.empty()) throw ParseError("empty canonical name", lineno);
    table.canonicals_.insert(m.canonical);

    std::stringstream parts(lhs);
    std::string alias;
    while (std::getline(parts, alias, '|')) {
      std::string tok = normalize_token(alias);
      if (tok.empty()) throw ParseError("empty alias", lineno);
      if (tok != m.canonical) table.aliases_[tok] = m;
    }
  }
  // A canonical name that is also an alias would make the table non-idempotent.
  for (const auto& [alias, m] : table.aliases_) {
    if (table.canonicals_.count(alias))
      throw ParseError("name '" + alias + "' is both an alias and a canonical target");
  }
  return table;
}

AliasTable AliasTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alias table: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<AliasTable::Mapping> AliasTable::find(const std::string& name) const {
  auto it = aliases_.find(name);
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

bool AliasTable::is_canonical(const std::string& name) const {
  return canonicals_.count(name) != 0;
}

Canonicalized canonicalize(const ActionInstance& a, const AliasTable& table) {
  Canonicalized out;
  out.action.name = normalize_token(a.name);
  out.action.args.reserve(a.args.size());
  for (const auto& arg : a.args) {
    out.action.args.push_back(arg.quoted ? arg
                                         : entity_arg(normalize_token(arg.value)));
  }
  if (table.empty()) {
    out.known = true;
    return out;
  }
  if (auto m = table.find(out.action.name)) {
    out.action.name = m->canonical;
    if (!m->arg_selectors.empty()) {
      std::vector<Arg> picked;
      for (int idx : m->arg_selectors) {
        if (static_cast<std::size_t>(idx) <= out.action.args.size())
          picked.push_back(out.action.args[static_cast<std::size_t>(idx) - 1]);
      }
      out.action.args = std::move(picked);
    }
    out.known = true;
  } else {
    out.known = table.is_canonical(out.action.name);
  }
  return out;
}

}  // namespace cas::actions
