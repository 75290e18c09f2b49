#include "cas/actionseq.hpp"

#include <gtest/gtest.h>

#include <random>

namespace cas::actions {
namespace {

ActionInstance act(std::string name, std::vector<std::string> args = {}) {
  ActionInstance a;
  a.name = std::move(name);
  for (auto& v : args) a.args.push_back(entity_arg(std::move(v)));
  return a;
}

TEST(NormalizeToken, Basics) {
  EXPECT_EQ(normalize_token("Walk"), "walk");
  EXPECT_EQ(normalize_token("Living Room"), "living_room");
  EXPECT_EQ(normalize_token("  PutObjBack "), "putobjback");
  EXPECT_EQ(normalize_token("master_bedroom_lamp"), "master_bedroom_lamp");
  EXPECT_EQ(normalize_token("Stand-Up"), "stand_up");
  EXPECT_EQ(normalize_token("!!!"), "");
}

TEST(NormalizeToken, IdempotentOnRandomStrings) {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> len(0, 20);
  std::uniform_int_distribution<int> ch(32, 126);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    int n = len(rng);
    for (int j = 0; j < n; ++j) s.push_back(static_cast<char>(ch(rng)));
    std::string once = normalize_token(s);
    EXPECT_EQ(normalize_token(once), once) << "input: " << s;
  }
}

TEST(ParseVh, TwoActions) {
  auto seq = parse_vh("[Walk] <roommate> (1)\n[Grab] <phone> (1)");
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0], act("walk", {"roommate"}));
  EXPECT_EQ(seq[1], act("grab", {"phone"}));
}

TEST(ParseVh, EmptyTextGivesEmptySequence) {
  EXPECT_TRUE(parse_vh("").empty());
  EXPECT_TRUE(parse_vh("\n# comment\n\n").empty());
}

TEST(ParseVh, MissingAngleBracketsIsError) {
  EXPECT_THROW(parse_vh("[Walk] roommate"), ParseError);
}

TEST(ParseVh, MissingIndexIsError) {
  EXPECT_THROW(parse_vh("[Walk] <roommate>"), ParseError);
}

TEST(ParseVh, ErrorCarriesLineNumber) {
  try {
    parse_vh("[Walk] <kitchen> (1)\nGrab phone");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseVh, ZeroArgActionsAndMultiArg) {
  auto seq = parse_vh("[StandUp]\n[PutBack] <phone> (1) <table> (2)");
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0], act("standup"));
  EXPECT_EQ(seq[1], act("putback", {"phone", "table"}));
}

TEST(ParseVh, QuotedArgumentKeptVerbatim) {
  auto seq = parse_vh("[Talk] <\"I Found It!\"> (1)");
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_TRUE(seq[0].args[0].quoted);
  EXPECT_EQ(seq[0].args[0].value, "I Found It!");
}

TEST(ParseVh, RoundTripThroughSerialize) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> len(0, 8);
  std::uniform_int_distribution<int> arity(0, 3);
  const std::vector<std::string> verbs = {"walk", "grab", "turn_on", "standup"};
  const std::vector<std::string> ents = {"phone", "kitchen", "living_room", "dog"};
  for (int i = 0; i < 200; ++i) {
    ActionSequence seq;
    int n = len(rng);
    for (int j = 0; j < n; ++j) {
      ActionInstance a;
      a.name = verbs[rng() % verbs.size()];
      int k = arity(rng);
      for (int t = 0; t < k; ++t) a.args.push_back(entity_arg(ents[rng() % ents.size()]));
      seq.push_back(a);
    }
    EXPECT_EQ(parse_vh(serialize_vh(seq)), seq);
  }
}

TEST(ParseGeneric, NumberedList) {
  auto out = parse_generic("1. Walk(roommate)\n2. Find(phone)\n3. Grab(phone)");
  ASSERT_EQ(out.actions.size(), 3u);
  EXPECT_EQ(out.actions[0], act("walk", {"roommate"}));
  EXPECT_EQ(out.actions[1], act("find", {"phone"}));
  EXPECT_EQ(out.actions[2], act("grab", {"phone"}));
  EXPECT_TRUE(out.skipped_lines.empty());
}

TEST(ParseGeneric, StripsFencesAndProse) {
  auto out = parse_generic("Sure! Here are the steps: ```Grab(phone)```");
  ASSERT_EQ(out.actions.size(), 1u);
  EXPECT_EQ(out.actions[0], act("grab", {"phone"}));
}

TEST(ParseGeneric, FencedBlockAcrossLines) {
  auto out = parse_generic("```\nWalk(kitchen)\nGrab(mug)\n```");
  ASSERT_EQ(out.actions.size(), 2u);
}

TEST(ParseGeneric, RefusalRaisesEmptyParse) {
  EXPECT_THROW(parse_generic("I cannot help with that."), EmptyParse);
  EXPECT_THROW(parse_generic(""), EmptyParse);
}

TEST(ParseGeneric, ReportsSkippedLines) {
  auto out = parse_generic("Here is the plan:\nWalk(kitchen)\nGood luck!");
  EXPECT_EQ(out.actions.size(), 1u);
  ASSERT_EQ(out.skipped_lines.size(), 2u);
  EXPECT_EQ(out.skipped_lines[0], "Here is the plan:");
}

TEST(ParseGeneric, QuotedArgumentWithComma) {
  auto out = parse_generic("Talk(\"wait, what?\")");
  ASSERT_EQ(out.actions.size(), 1u);
  ASSERT_EQ(out.actions[0].args.size(), 1u);
  EXPECT_EQ(out.actions[0].args[0].value, "wait, what?");
  EXPECT_TRUE(out.actions[0].args[0].quoted);
}

TEST(ParseGeneric, ZeroArgPattern) {
  auto out = parse_generic("- wait()\n- Grab(phone)");
  ASSERT_EQ(out.actions.size(), 2u);
  EXPECT_EQ(out.actions[0], act("wait"));
}

// Totality: arbitrary text either parses or raises EmptyParse, and never
// yields more actions than input lines.
TEST(ParseGeneric, TotalAndBoundedOnRandomText) {
  std::mt19937 rng(2024);
  const std::string alphabet = "abcZ(),.\"` 19[]<>-*\n";
  std::uniform_int_distribution<int> len(0, 120);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    int n = len(rng);
    for (int j = 0; j < n; ++j) text.push_back(alphabet[pick(rng)]);
    std::size_t line_count = 1 + static_cast<std::size_t>(
        std::count(text.begin(), text.end(), '\n'));
    try {
      auto out = parse_generic(text);
      EXPECT_LE(out.actions.size(), line_count) << "text: " << text;
      EXPECT_FALSE(out.actions.empty());
    } catch (const EmptyParse&) {
      // fine: zero actions recovered
    }
  }
}

AliasTable test_table() {
  return AliasTable::parse(
      "# test table\n"
      "walk|run -> move_to\n"
      "putobjback -> put_down($1)\n"
      "swap_args -> give($2, $1)\n"
      "talk -> say\n"
      "@extraneous wait|noop|pause\n");
}

TEST(AliasTable, ParseAndLookup) {
  auto t = test_table();
  ASSERT_TRUE(t.find("walk").has_value());
  EXPECT_EQ(t.find("walk")->canonical, "move_to");
  EXPECT_FALSE(t.find("fly").has_value());
  EXPECT_TRUE(t.is_canonical("move_to"));
  EXPECT_EQ(t.extraneous().size(), 3u);
  EXPECT_TRUE(t.extraneous().count("wait"));
}

TEST(AliasTable, TargetMayNotAlsoBeAlias) {
  EXPECT_THROW(AliasTable::parse("walk -> move_to\nmove_to -> go\n"), ParseError);
}

TEST(AliasTable, MalformedLine) {
  EXPECT_THROW(AliasTable::parse("walk move_to\n"), ParseError);
}

TEST(Canonicalize, FoldsAliasAndNormalizes) {
  auto out = canonicalize(act("Walk", {"Roommate"}), test_table());
  EXPECT_EQ(out.action, act("move_to", {"roommate"}));
  EXPECT_TRUE(out.known);
}

TEST(Canonicalize, EmptyTableIsIdentity) {
  AliasTable empty;
  auto out = canonicalize(act("move_to", {"kitchen"}), empty);
  EXPECT_EQ(out.action, act("move_to", {"kitchen"}));
  EXPECT_TRUE(out.known);
}

TEST(Canonicalize, UnmappedNameFlagged) {
  auto out = canonicalize(act("FlyTo", {"moon"}), test_table());
  EXPECT_EQ(out.action, act("flyto", {"moon"}));
  EXPECT_FALSE(out.known);
}

TEST(Canonicalize, ArgSelectorsDropAndReorder) {
  auto dropped = canonicalize(act("PutObjBack", {"phone", "table"}), test_table());
  EXPECT_EQ(dropped.action, act("put_down", {"phone"}));

  auto swapped = canonicalize(act("swap_args", {"a", "b"}), test_table());
  EXPECT_EQ(swapped.action, act("give", {"b", "a"}));

  // selector beyond the available args is skipped, not an error
  auto fewer = canonicalize(act("swap_args", {"a"}), test_table());
  EXPECT_EQ(fewer.action, act("give", {"a"}));
}

TEST(Canonicalize, QuotedArgsPassThrough) {
  ActionInstance a;
  a.name = "Talk";
  a.args.push_back(string_arg("I found my phone!"));
  auto out = canonicalize(a, test_table());
  EXPECT_EQ(out.action.name, "say");
  EXPECT_TRUE(out.action.args[0].quoted);
  EXPECT_EQ(out.action.args[0].value, "I found my phone!");
}

TEST(Canonicalize, IdempotentOnRandomActions) {
  auto t = test_table();
  std::mt19937 rng(11);
  const std::vector<std::string> names = {"Walk", "run", "move_to", "FLY", "putobjback",
                                          "talk", "wait"};
  const std::vector<std::string> ents = {"Phone", "kitchen", "Dog House", "x1"};
  for (int i = 0; i < 500; ++i) {
    ActionInstance a;
    a.name = names[rng() % names.size()];
    int k = static_cast<int>(rng() % 3);
    for (int j = 0; j < k; ++j) a.args.push_back(entity_arg(ents[rng() % ents.size()]));
    auto once = canonicalize(a, t);
    auto twice = canonicalize(once.action, t);
    EXPECT_EQ(twice.action, once.action);
  }
}

TEST(ToString, RendersQuotedArgs) {
  ActionInstance a;
  a.name = "say";
  a.args.push_back(string_arg("hello"));
  EXPECT_EQ(to_string(a), "say(\"hello\")");
  EXPECT_EQ(to_string(act("move_to", {"kitchen"})), "move_to(kitchen)");
}

TEST(ParseAny, FallsBackToVhStyle) {
  auto out = parse_any("[Walk] <kitchen> (1)\n[Grab] <mug> (1)");
  ASSERT_EQ(out.actions.size(), 2u);
  EXPECT_EQ(out.actions[0], act("walk", {"kitchen"}));
}

}  // namespace
}  // namespace cas::actions
