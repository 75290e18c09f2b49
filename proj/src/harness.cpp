#include "cas/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cas::harness {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TaskRecord parse_record(const std::string& text, const actions::AliasTable& aliases,
                        const std::string& name_hint) {
  TaskRecord rec;
  enum class Section { Head, Actions, Descriptions, Summaries };
  Section section = Section::Head;
  std::string actions_text;
  std::vector<std::string> description_lines;

  std::stringstream ss(text);
  std::string raw;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("record " + (rec.id.empty() ? name_hint : rec.id) + ": " + msg, lineno);
  };

  while (std::getline(ss, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line == "[actions]") { section = Section::Actions; continue; }
    if (line == "[descriptions]") { section = Section::Descriptions; continue; }
    if (line == "[summaries]") { section = Section::Summaries; continue; }
    if (line[0] == '[' && line.back() == ']' && section != Section::Actions)
      throw fail("unknown section " + line);

    switch (section) {
      case Section::Head: {
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) throw fail("expected 'key: value'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (key == "id") rec.id = value;
        else if (key == "problem") rec.problem_ref = value;
        else if (key == "task") rec.task_prose = value;
        else throw fail("unknown key '" + key + "'");
        break;
      }
      case Section::Actions:
        actions_text += line;
        actions_text += '\n';
        break;
      case Section::Descriptions:
        description_lines.push_back(line);
        break;
      case Section::Summaries: {
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) throw fail("expected 'human:' or 'model:' summary");
        const std::string tag = trim(line.substr(0, colon));
        Summary s;
        if (tag == "human") s.kind = Summary::Kind::Human;
        else if (tag == "model") s.kind = Summary::Kind::Model;
        else throw fail("summary tag must be human or model, got '" + tag + "'");
        s.text = trim(line.substr(colon + 1));
        if (s.text.empty()) throw fail("empty summary text");
        rec.summaries.push_back(std::move(s));
        break;
      }
    }
  }

  const std::string rid = rec.id.empty() ? name_hint : rec.id;
  if (rec.id.empty()) throw ValidationError("record " + name_hint + ": missing id");
  if (rec.problem_ref.empty()) throw ValidationError("record " + rid + ": missing problem");
  if (rec.task_prose.empty()) throw ValidationError("record " + rid + ": missing task");

  auto parsed = actions::parse_vh(actions_text);
  rec.reference_sequence.reserve(parsed.size());
  for (const auto& a : parsed)
    rec.reference_sequence.push_back(actions::canonicalize(a, aliases).action);

  for (const auto& d : description_lines) {
    if (d == "-")
      rec.per_action_nl.push_back(std::nullopt);
    else
      rec.per_action_nl.push_back(d);
  }

  if (rec.per_action_nl.size() != rec.reference_sequence.size())
    throw ValidationError("record " + rid + ": " + std::to_string(rec.per_action_nl.size()) +
                          " descriptions for " + std::to_string(rec.reference_sequence.size()) +
                          " actions");
  if (rec.summaries.size() != 3)
    throw ValidationError("record " + rid + ": expected exactly 3 summaries, found " +
                          std::to_string(rec.summaries.size()));
  std::size_t human = 0, model = 0;
  for (const auto& s : rec.summaries)
    (s.kind == Summary::Kind::Human ? human : model)++;
  if (human != 2 || model != 1)
    throw ValidationError("record " + rid + ": summaries must be two human-tagged and one " +
                          "model-tagged (found " + std::to_string(human) + " human, " +
                          std::to_string(model) + " model)");
  return rec;
}

std::vector<TaskRecord> load_dataset(const fs::path& dir, const actions::AliasTable& aliases) {
  std::vector<TaskRecord> records;
  if (!fs::exists(dir)) return records;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rec")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error("cannot open record file: " + f.string());
    std::stringstream ss;
    ss << in.rdbuf();
    records.push_back(parse_record(ss.str(), aliases, f.stem().string()));
  }
  return records;
}

llm::ChatRequest build_summarize_request(const pipeline::PromptLibrary& prompts,
                                         const std::string& task_prose,
                                         std::span<const std::optional<std::string>> steps,
                                         const std::string& model_id) {
  std::string numbered;
  std::size_t n = 0;
  for (const auto& s : steps) {
    if (!s || trim(*s).empty()) continue;
    if (!numbered.empty()) numbered += '\n';
    numbered += std::to_string(++n) + ". " + trim(*s);
  }
  if (n == 0) throw ValidationError("summarize_steps needs at least one non-empty description");

  llm::ChatRequest req;
  req.model_id = model_id;
  req.user_text = pipeline::render_template(prompts.summarize,
                                            {{"task", task_prose}, {"steps", numbered}});
  req.temperature = 0.0;
  return req;
}

std::string summarize_steps(llm::ChatBackend& backend, const pipeline::PromptLibrary& prompts,
                            const std::string& task_prose,
                            std::span<const std::optional<std::string>> per_action_nl,
                            const std::string& model_id) {
  const auto req = build_summarize_request(prompts, task_prose, per_action_nl, model_id);
  const auto resp = backend.complete(req);
  std::stringstream ss(resp.text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (!line.empty()) return line;
  }
  return "";
}

ProblemLibrary::ProblemLibrary(const fs::path& dir) {
  if (!fs::exists(dir)) throw Error("problem directory does not exist: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".problem")
      problems_.emplace(entry.path().stem().string(),
                        domain::load_problem_file(entry.path()));
  }
}

const domain::ProblemDefinition& ProblemLibrary::get(const std::string& name) const {
  auto it = problems_.find(name);
  if (it == problems_.end()) throw Error("no problem named '" + name + "' in the library");
  return it->second;
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

constexpr const char* kMeasures[] = {"plan_difference", "levenshtein",
                                     "final_state_similarity", "length_discrepancy"};

double measure_of(const metrics::MetricMeans& m, const std::string& name) {
  if (name == "plan_difference") return m.plan_difference;
  if (name == "levenshtein") return m.levenshtein;
  if (name == "final_state_similarity") return m.final_state_similarity;
  return m.length_discrepancy;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

MetricsReport evaluate(const std::vector<TaskRecord>& dataset,
                       const std::vector<ModelProfile>& models,
                       const ProblemLibrary& problems,
                       const pipeline::PromptLibrary& prompts,
                       const actions::AliasTable& aliases, const EvalOptions& options) {
  MetricsReport report;

  // reference final states are model-independent; compute once per record
  std::vector<domain::WorldState> reference_finals(dataset.size());
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    const auto& problem = problems.get(dataset[r].problem_ref);
    reference_finals[r] =
        sim::execute(problem, dataset[r].reference_sequence, options.mode).final_state;
  }

  struct CellCoord {
    std::size_t record;
    std::size_t model;
    int summary;
  };
  std::vector<CellCoord> coords;
  coords.reserve(dataset.size() * models.size() * 3);
  for (std::size_t r = 0; r < dataset.size(); ++r)
    for (std::size_t m = 0; m < models.size(); ++m)
      for (int s = 0; s < 3; ++s) coords.push_back({r, m, s});

  std::vector<CellResult> cells(coords.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::string abort_message;
  std::mutex abort_mu;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= coords.size() || aborted.load()) return;
      const auto& coord = coords[i];
      const TaskRecord& record = dataset[coord.record];
      const ModelProfile& model = models[coord.model];

      CellResult cell;
      cell.record_id = record.id;
      cell.model_id = model.id;
      cell.summary_index = coord.summary;
      try {
        const auto& problem = problems.get(record.problem_ref);
        pipeline::PipelineOptions popts;
        popts.entity_model_id = options.entity_model_id;
        popts.translation_model_id = model.id;
        popts.include_catalog = model.include_catalog;
        auto result = pipeline::run(*model.backend, prompts, problem,
                                    record.summaries[static_cast<std::size_t>(coord.summary)].text,
                                    aliases, popts);
        auto cand = sim::execute(problem, result.final_sequence, options.mode);
        cell.values.plan_difference =
            metrics::plan_difference(result.final_sequence, record.reference_sequence);
        cell.values.levenshtein =
            metrics::levenshtein(result.final_sequence, record.reference_sequence);
        cell.values.final_state_similarity = metrics::final_state_similarity(
            problem.initial, reference_finals[coord.record], cand.final_state);
        cell.values.length_discrepancy =
            metrics::length_discrepancy(result.final_sequence, record.reference_sequence);
        cell.ok = true;
      } catch (const Error& e) {
        std::string miss_fingerprint;
        if (const auto* direct = dynamic_cast<const llm::FixtureMiss*>(&e)) {
          miss_fingerprint = direct->fingerprint();
        } else {
          // stage errors arrive as PipelineError with the cause nested
          try {
            std::rethrow_if_nested(e);
          } catch (const llm::FixtureMiss& nested) {
            miss_fingerprint = nested.fingerprint();
          } catch (...) {
          }
        }
        if (!miss_fingerprint.empty() && options.strict) {
          {
            std::lock_guard lock(abort_mu);
            abort_message = miss_fingerprint;
          }
          aborted.store(true);
          return;
        }
        cell.ok = false;
        cell.error = e.what();
      }
      cells[i] = std::move(cell);
    }
  };

  const int threads = std::max(1, options.parallelism);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (aborted.load()) throw llm::FixtureMiss(abort_message.empty() ? "?" : abort_message);

  report.cells = std::move(cells);

  // aggregates: mean over the three summaries, failed if any cell failed
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      AggregateResult agg;
      agg.record_id = dataset[r].id;
      agg.model_id = models[m].id;
      std::vector<metrics::MetricValues> triple;
      bool ok = true;
      for (int s = 0; s < 3; ++s) {
        const auto& cell = report.cells[(r * models.size() + m) * 3 + static_cast<std::size_t>(s)];
        ok = ok && cell.ok;
        if (cell.ok) triple.push_back(cell.values);
      }
      agg.ok = ok;
      if (ok) agg.means = metrics::aggregate(triple);
      report.aggregates.push_back(std::move(agg));
    }
  }

  // per-model distribution summaries over successful aggregates
  for (const auto& model : models) {
    for (const char* measure : kMeasures) {
      ModelMeasureSummary s;
      s.model_id = model.id;
      s.measure = measure;
      std::vector<double> values;
      for (const auto& agg : report.aggregates) {
        if (agg.model_id == model.id && agg.ok) values.push_back(measure_of(agg.means, measure));
      }
      s.n = values.size();
      if (!values.empty()) {
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / static_cast<double>(values.size());
        const std::size_t mid = values.size() / 2;
        s.median = values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
        s.min = values.front();
        s.max = values.back();
      }
      report.model_summaries.push_back(std::move(s));
    }
  }

  // statistical protocol: only with at least two models
  if (models.size() < 2) return report;

  // complete blocks: records where every model's aggregate succeeded
  std::vector<std::size_t> complete;
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    bool all_ok = true;
    for (std::size_t m = 0; m < models.size(); ++m)
      all_ok = all_ok && report.aggregates[r * models.size() + m].ok;
    if (all_ok) complete.push_back(r);
  }

  const int comparisons = static_cast<int>(models.size() * (models.size() - 1) / 2);

  for (const char* measure : kMeasures) {
    // Friedman across all models
    StatRow fried;
    fried.measure = measure;
    fried.test = "friedman";
    fried.n = complete.size();
    if (complete.size() >= 2) {
      stats::BlockedSample sample;
      for (std::size_t r : complete) {
        std::vector<double> row;
        for (std::size_t m = 0; m < models.size(); ++m)
          row.push_back(measure_of(report.aggregates[r * models.size() + m].means, measure));
        sample.values.push_back(std::move(row));
      }
      fried.result = stats::friedman(sample);
      fried.computed = true;
    } else {
      fried.note = "fewer than 2 complete blocks";
    }
    report.stats.push_back(std::move(fried));

    // pairwise Wilcoxon with Bonferroni over pairwise-complete records
    for (std::size_t a = 0; a < models.size(); ++a) {
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        StatRow row;
        row.measure = measure;
        row.test = "wilcoxon_pairwise";
        row.model_a = models[a].id;
        row.model_b = models[b].id;
        std::vector<double> xa, xb;
        for (std::size_t r = 0; r < dataset.size(); ++r) {
          const auto& ra = report.aggregates[r * models.size() + a];
          const auto& rb = report.aggregates[r * models.size() + b];
          if (ra.ok && rb.ok) {
            xa.push_back(measure_of(ra.means, measure));
            xb.push_back(measure_of(rb.means, measure));
          }
        }
        row.n = xa.size();
        if (xa.size() >= 2) {
          try {
            row.result = stats::wilcoxon_signed_rank(xa, xb);
            row.p_corrected = stats::bonferroni(row.result.p_value, comparisons);
            row.computed = true;
          } catch (const stats::AllZeroDifferences&) {
            row.note = "all differences zero";
          }
        } else {
          row.note = "fewer than 2 pairs";
        }
        report.stats.push_back(std::move(row));
      }
    }
  }

  // one-sample tests against 0 for final-state similarity
  for (std::size_t m = 0; m < models.size(); ++m) {
    StatRow row;
    row.measure = "final_state_similarity";
    row.test = "wilcoxon_one_sample";
    row.model_a = models[m].id;
    std::vector<double> values;
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      const auto& agg = report.aggregates[r * models.size() + m];
      if (agg.ok) values.push_back(agg.means.final_state_similarity);
    }
    row.n = values.size();
    if (values.size() >= 2) {
      try {
        row.result = stats::wilcoxon_one_sample(values, 0.0);
        row.computed = true;
      } catch (const stats::AllZeroDifferences&) {
        row.note = "all values equal the reference point";
      }
    } else {
      row.note = "fewer than 2 values";
    }
    report.stats.push_back(std::move(row));
  }

  return report;
}

// ---------------------------------------------------------------------------
// report files

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_report(const MetricsReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "cells.csv", std::ios::binary | std::ios::trunc);
    out << "record_id,model,summary_index,status,plan_difference,levenshtein,"
           "final_state_similarity,length_discrepancy,error\n";
    for (const auto& c : report.cells) {
      out << c.record_id << ',' << c.model_id << ',' << c.summary_index << ','
          << (c.ok ? "ok" : "failed") << ',';
      if (c.ok) {
        out << c.values.plan_difference << ',' << c.values.levenshtein << ','
            << fmt(c.values.final_state_similarity) << ',' << c.values.length_discrepancy
            << ",";
      } else {
        out << ",,,," << sanitize(c.error);
      }
      out << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "aggregates.csv", std::ios::binary | std::ios::trunc);
    out << "record_id,model,status,plan_difference,levenshtein,final_state_similarity,"
           "length_discrepancy\n";
    for (const auto& a : report.aggregates) {
      out << a.record_id << ',' << a.model_id << ',' << (a.ok ? "ok" : "failed") << ',';
      if (a.ok) {
        out << fmt(a.means.plan_difference) << ',' << fmt(a.means.levenshtein) << ','
            << fmt(a.means.final_state_similarity) << ',' << fmt(a.means.length_discrepancy);
      } else {
        out << ",,,";
      }
      out << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "stats.csv", std::ios::binary | std::ios::trunc);
    out << "measure,test,model_a,model_b,n,statistic,df,p_value,p_corrected,method,note\n";
    for (const auto& s : report.stats) {
      out << s.measure << ',' << s.test << ',' << s.model_a << ',' << s.model_b << ',' << s.n
          << ',';
      if (s.computed) {
        out << fmt(s.result.statistic) << ',';
        if (s.result.df) out << *s.result.df;
        out << ',' << fmt(s.result.p_value) << ',';
        if (s.p_corrected) out << fmt(*s.p_corrected);
        out << ',' << s.result.method;
      } else {
        out << ",,,,";
      }
      out << ',' << sanitize(s.note) << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
    std::size_t ok_cells = 0;
    for (const auto& c : report.cells)
      if (c.ok) ++ok_cells;
    out << "evaluation cells: " << report.cells.size() << " (" << ok_cells << " ok, "
        << report.cells.size() - ok_cells << " failed)\n\n";

    out << "per-model measure summaries (over per-record aggregates)\n";
    std::string current;
    for (const auto& m : report.model_summaries) {
      if (m.model_id != current) {
        current = m.model_id;
        out << "\n  " << current << "\n";
      }
      out << "    " << m.measure << ": n=" << m.n << " mean=" << fmt(m.mean)
          << " median=" << fmt(m.median) << " min=" << fmt(m.min) << " max=" << fmt(m.max)
          << "\n";
    }

    if (!report.stats.empty()) {
      out << "\nstatistical tests\n";
      for (const auto& s : report.stats) {
        out << "  " << s.measure << " / " << s.test;
        if (!s.model_a.empty()) {
          out << " [" << s.model_a;
          if (!s.model_b.empty()) out << " vs " << s.model_b;
          out << "]";
        }
        out << " n=" << s.n;
        if (s.computed) {
          out << " statistic=" << fmt(s.result.statistic);
          if (s.result.df) out << " df=" << *s.result.df;
          out << " p=" << fmt(s.result.p_value);
          if (s.p_corrected) out << " p_corrected=" << fmt(*s.p_corrected);
        } else {
          out << " (" << s.note << ")";
        }
        out << "\n";
      }
    }
  }
}

}  // namespace cas::harness
