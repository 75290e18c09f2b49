// Generates the replay fixtures bundled under data/fixtures/: synthetic
// model outputs for every (record, summary, model) cell of the evaluation
// grid, plus the small fixture set behind the documented worked example.
//
// Outputs are deterministic (seeded per cell) and committed to the
// repository, so `cas eval` runs offline. Re-run after editing the
// dataset, prompts, or problem files:
//
//   cas_gen_fixtures --root <repo-root>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cas/harness.hpp"
#include "cas/llm.hpp"
#include "cas/pipeline.hpp"
#include "cas/simulator.hpp"

namespace fs = std::filesystem;
using cas::actions::ActionInstance;
using cas::actions::ActionSequence;

namespace {

// Portable 64-bit FNV-1a, so regeneration gives identical fixtures on any
// platform.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Profile {
  std::string id;
  bool include_catalog;
  double p_drop;
  double p_dup;
  double p_wait;
  double p_halluc;
  double p_unknown;
  double p_extra;
  int style;  // 0 plain lines, 1 numbered, 2 numbered+intro, 3 fenced
};

const std::vector<Profile> kProfiles = {
    {"mistral-7b-ft", false, 0.22, 0.10, 0.12, 0.10, 0.08, 0.05, 0},
    {"phi-4", true, 0.14, 0.04, 0.08, 0.08, 0.06, 0.10, 2},
    {"phi-4-ft", false, 0.10, 0.06, 0.05, 0.05, 0.03, 0.06, 0},
    {"sonnet-v2", true, 0.04, 0.01, 0.02, 0.02, 0.01, 0.12, 1},
};

const std::map<std::string, std::vector<std::string>> kVerbChoices = {
    {"move_to", {"Walk", "Run", "WalkTo", "Go"}},
    {"grab", {"Grab", "PickUp", "Take", "Get"}},
    {"put_down", {"PutDown", "PutObjBack", "Drop"}},
    {"put_on", {"PutOn", "Place"}},
    {"open", {"Open"}},
    {"close", {"Close", "Shut"}},
    {"turn_on", {"SwitchOn", "TurnOn"}},
    {"turn_off", {"SwitchOff", "TurnOff"}},
    {"say", {"Talk", "Tell", "Speak"}},
    {"find", {"Find", "LookFor", "Locate"}},
    {"look_at", {"LookAt", "TurnTo", "Watch"}},
    {"give", {"Give", "Hand"}},
};

const std::vector<std::string> kUnknownVerbs = {"PointAt", "Wave",     "Inspect",
                                                "Snatch",  "Approach", "Shove"};
const std::vector<std::string> kHallucinations = {"sidewalk", "charger", "garden_hose",
                                                  "neighbor", "basement"};

std::string render_action(const std::string& verb, const ActionInstance& a) {
  std::string out = verb + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    if (a.args[i].quoted) {
      out += "\"" + a.args[i].value + "\"";
    } else {
      out += a.args[i].value;
    }
  }
  return out + ")";
}

// The entity-inference stage always runs on the same model at temperature
// 0, so its synthesized response depends on the record and summary only.
std::string synthesize_entities(const cas::harness::TaskRecord& record, int summary_idx) {
  std::mt19937 rng(static_cast<std::uint32_t>(
      fnv1a("entities|" + record.id + "|" + std::to_string(summary_idx))));
  std::vector<std::string> entities;
  for (const auto& a : record.reference_sequence) {
    for (const auto& arg : a.args) {
      if (arg.quoted) continue;
      if (std::find(entities.begin(), entities.end(), arg.value) == entities.end())
        entities.push_back(arg.value);
    }
  }
  // one summary in ten picks up a stray out-of-world token
  if (rng() % 10 == 0) entities.push_back(kHallucinations[rng() % kHallucinations.size()]);
  std::string out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i) out += ", ";
    out += entities[i];
  }
  return out;
}

std::string synthesize_translation(const cas::harness::TaskRecord& record, int summary_idx,
                                   const Profile& profile) {
  std::mt19937 rng(static_cast<std::uint32_t>(
      fnv1a(profile.id + "|" + record.id + "|" + std::to_string(summary_idx))));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto chance = [&](double p) { return u(rng) < p; };
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[rng() % v.size()];
  };

  // perturbed rendering of the reference sequence
  std::vector<std::string> lines;
  for (const auto& ref : record.reference_sequence) {
    if (!lines.empty() && chance(profile.p_drop)) continue;

    if (ref.name == "grab" && chance(profile.p_extra) && !ref.args.empty())
      lines.push_back(render_action("Find", ActionInstance{"find", {ref.args[0]}}));

    ActionInstance a = ref;
    if (chance(profile.p_halluc)) {
      for (auto& arg : a.args) {
        if (!arg.quoted) {
          arg.value = pick(kHallucinations);
          break;
        }
      }
    }
    std::string verb;
    if (chance(profile.p_unknown)) {
      verb = pick(kUnknownVerbs);
    } else {
      auto it = kVerbChoices.find(a.name);
      verb = it != kVerbChoices.end() ? pick(it->second) : a.name;
    }
    lines.push_back(render_action(verb, a));
    if (chance(profile.p_dup)) lines.push_back(lines.back());
    if (chance(profile.p_wait)) lines.push_back("wait()");
  }
  if (lines.empty())
    lines.push_back(render_action("Walk", record.reference_sequence.front()));

  std::string body;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (profile.style == 1 || profile.style == 2)
      body += std::to_string(i + 1) + ". " + lines[i];
    else
      body += lines[i];
    body += "\n";
  }
  switch (profile.style) {
    case 2:
      return "Here are the steps to complete the task:\n" + body;
    case 3:
      return "```\n" + body + "```\n";
    default:
      return body;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate bundled replay fixtures"};
  std::string root = ".";
  app.add_option("--root", root, "repository root");
  CLI11_PARSE(app, argc, argv);

  const fs::path root_path = root;
  const auto prompts = cas::pipeline::PromptLibrary::load_dir(root_path / "data/prompts");
  const auto aliases = cas::actions::AliasTable::load_file(root_path / "data/aliases.txt");
  const cas::harness::ProblemLibrary problems(root_path / "data/problems");
  const auto dataset = cas::harness::load_dataset(root_path / "data/dataset", aliases);

  if (dataset.empty()) {
    std::cerr << "no dataset records found under " << root_path / "data/dataset" << "\n";
    return 2;
  }

  // sanity: every reference sequence must execute fully in assisted mode
  for (const auto& rec : dataset) {
    const auto& problem = problems.get(rec.problem_ref);
    auto run = cas::sim::execute(problem, rec.reference_sequence, cas::sim::Mode::Assisted);
    for (const auto& step : run.trace) {
      if (step.status == cas::sim::StepStatus::Skipped) {
        std::cerr << "reference of " << rec.id << " skips "
                  << cas::actions::to_string(step.action) << " (" << step.detail << ")\n";
        return 2;
      }
    }
  }

  const cas::llm::FixtureStore eval_store(root_path / "data/fixtures/eval");
  std::size_t written = 0;
  for (const auto& rec : dataset) {
    const auto& problem = problems.get(rec.problem_ref);
    for (int s = 0; s < 3; ++s) {
      const std::string& command = rec.summaries[static_cast<std::size_t>(s)].text;
      const std::string entity_response = synthesize_entities(rec, s);
      const auto shortlist = cas::pipeline::parse_shortlist(entity_response, problem);

      cas::pipeline::PipelineOptions entity_popts;  // model-independent stage
      const auto entity_req =
          cas::pipeline::build_entity_request(prompts, problem, command, entity_popts);
      eval_store.write(cas::llm::fingerprint(entity_req), entity_response);
      ++written;

      for (const auto& profile : kProfiles) {
        cas::pipeline::PipelineOptions popts;
        popts.translation_model_id = profile.id;
        popts.include_catalog = profile.include_catalog;
        const auto translation_req = cas::pipeline::build_translation_request(
            prompts, shortlist, command, problem.schemas, popts);
        eval_store.write(cas::llm::fingerprint(translation_req),
                         synthesize_translation(rec, s, profile));
        ++written;
      }
    }
  }

  // fixtures behind the documented worked example
  const cas::llm::FixtureStore demo_store(root_path / "data/fixtures/demo");
  const std::string demo_command = "Find your roommate and tell them they have a phone call";
  {
    cas::pipeline::PipelineOptions popts;
    popts.translation_model_id = "mistral-7b-ft";
    popts.include_catalog = false;
    const auto& household = problems.get("household");

    const auto entity_req =
        cas::pipeline::build_entity_request(prompts, household, demo_command, popts);
    demo_store.write(cas::llm::fingerprint(entity_req), "phone, roommate");

    cas::pipeline::EntityShortlist shortlist;
    shortlist.entities = {"phone", "roommate"};
    const auto translation_req = cas::pipeline::build_translation_request(
        prompts, shortlist, demo_command, household.schemas, popts);
    demo_store.write(cas::llm::fingerprint(translation_req),
                      "Walk(roommate)\n"
                      "Find(phone)\n"
                      "Grab(phone)\n"
                      "TurnTo(roommate)\n"
                      "LookAt(roommate)\n"
                      "PointAt(phone)\n"
                      "Talk(\"I found my phone!\")\n"
                      "PutObjBack(phone)");

    std::vector<std::optional<std::string>> steps = {
        "look for him", "inform him about the call",
        "place the phone on the table and ask him to talk"};
    const auto summarize_req = cas::harness::build_summarize_request(
        prompts,
        "You are home and the phone rings. The person on the other end of the line asks to "
        "speak to your roommate.",
        steps, "sonnet-3.5-v2");
    demo_store.write(cas::llm::fingerprint(summarize_req),
                      "Find your roommate and tell them they have a phone call.");
    written += 3;
  }

  std::cout << "wrote " << written << " fixtures\n";

  // dry-run the full evaluation over the fresh fixtures
  std::vector<cas::harness::ModelProfile> models;
  for (const auto& profile : kProfiles) {
    models.push_back({profile.id,
                      std::make_shared<cas::llm::ReplayBackend>(root_path / "data/fixtures/eval"),
                      profile.include_catalog});
  }
  cas::harness::EvalOptions options;
  options.strict = true;
  options.parallelism = 4;
  const auto report =
      cas::harness::evaluate(dataset, models, problems, prompts, aliases, options);
  std::size_t failed = 0;
  for (const auto& c : report.cells)
    if (!c.ok) ++failed;
  std::cout << "dry-run evaluation: " << report.cells.size() << " cells, " << failed
            << " failed\n";
  for (const auto& s : report.model_summaries) {
    if (s.measure == "final_state_similarity")
      std::cout << "  " << s.model_id << " final_state_similarity mean " << s.mean << "\n";
  }
  return failed == 0 ? 0 : 1;
}
