#pragma once

// Batch evaluation: every scene of a dataset through a backend, for each
// task and run, scored against the oracle and aggregated into a report.

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "ossa/backends.hpp"
#include "ossa/eval.hpp"

namespace ossa {

struct EvalSettings {
  std::vector<TaskId> tasks{TaskId::t1, TaskId::t2, TaskId::t3};
  std::size_t runs = 3;
  PromptMode mode = PromptMode::zero_shot;
  PlanScope scope = PlanScope::full_plan;
  std::size_t concurrency = 4;
  bool scene_averaged = false;  // default pools objects across the dataset
};

// A fresh backend per run; the argument is the run index.
using BackendFactory = std::function<std::unique_ptr<Backend>(std::size_t)>;

struct SceneRecord {
  SceneScores scores;
  std::size_t parse_warnings = 0;
  TokenUsage usage;
  double latency_ms = 0.0;
  int attempts = 0;
};

struct RunRecord {
  TaskId task = TaskId::t1;
  std::size_t run = 0;
  std::vector<SceneRecord> scenes;  // dataset order
  std::array<std::optional<double>, 6> scores{};
};

struct EvalResult {
  MetricsReport report;
  std::vector<RunRecord> runs;
  BackendDescriptor descriptor;
  std::vector<std::string> prompt_hashes;
  TokenUsage usage;
  double latency_ms = 0.0;
};

inline std::array<std::optional<double>, 6> run_scores(const std::vector<SceneRecord>& scenes, bool scene_averaged) {
  std::array<std::optional<double>, 6> out{};
  for (Metric m : kMetrics) {
    auto k = static_cast<std::size_t>(m);
    if (scene_averaged) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& s : scenes)
        if (s.scores[m].defined()) {
          sum += s.scores[m].value();
          ++n;
        }
      if (n) out[k] = sum / static_cast<double>(n);
    } else {
      Ratio total;
      for (const auto& s : scenes) total += s.scores[m];
      if (total.defined()) out[k] = total.value();
    }
  }
  return out;
}

namespace detail {

struct ScenePass {
  SceneRecord record;
  std::vector<std::string> prompt_hashes;
};

inline ScenePass evaluate_scene(Backend& backend, const Scene& scene, const TaskSpec& task, PromptMode mode,
                                const Catalog& catalog) {
  PlanOutput out = backend.plan(SceneInput::from_scene(scene), task, mode);
  ScenePass pass;
  pass.record.scores = score_task(out.report.plans, scene, task, catalog);
  pass.record.parse_warnings = out.report.warnings.size();
  for (const auto& st : out.trace.stages) {
    pass.record.usage += st.usage;
    pass.record.latency_ms += st.latency_ms;
    pass.record.attempts += st.attempts;
  }
  pass.prompt_hashes = std::move(out.trace.prompt_hashes);
  return pass;
}

}  // namespace detail

inline EvalResult evaluate(const Dataset& dataset, const EvalSettings& settings, const BackendFactory& factory,
                           const Catalog& catalog = default_catalog()) {
  if (settings.runs == 0) throw Error(ErrorCode::no_runs, "run count must be at least 1");
  if (settings.tasks.empty()) throw Error(ErrorCode::invalid_config, "no tasks selected");
  if (dataset.scenes.empty()) throw Error(ErrorCode::empty_scene, "dataset " + dataset.name + " has no scenes");
  for (const auto& s : dataset.scenes)
    if (s.objects.empty()) throw Error(ErrorCode::empty_scene, "scene " + s.scene_id + " has no objects");

  EvalResult result;
  result.report.scope = settings.scope;
  std::set<std::string> hashes;

  for (TaskId task_id : settings.tasks) {
    TaskSpec task = TaskSpec::make(task_id);
    ReportRow row;
    row.task = task_id;
    row.mode = settings.mode;
    row.runs = settings.runs;
    std::array<std::vector<double>, 6> per_metric;

    for (std::size_t run = 0; run < settings.runs; ++run) {
      std::unique_ptr<Backend> backend = factory(run);
      BackendDescriptor desc = backend->descriptor();
      if (result.descriptor.id.empty()) result.descriptor = desc;
      row.method = desc.method;

      std::size_t workers = desc.serialized ? 1 : std::max<std::size_t>(1, settings.concurrency);
      workers = std::min(workers, dataset.scenes.size());
      std::vector<std::optional<detail::ScenePass>> passes(dataset.scenes.size());
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto work = [&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= dataset.scenes.size()) return;
          {
            std::lock_guard lock(failure_mutex);
            if (failure) return;
          }
          try {
            passes[i] = detail::evaluate_scene(*backend, dataset.scenes[i], task, settings.mode, catalog);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      };
      if (workers <= 1) {
        work();
      } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
      }
      if (failure) std::rethrow_exception(failure);

      RunRecord rec;
      rec.task = task_id;
      rec.run = run;
      for (auto& p : passes) {
        for (auto& h : p->prompt_hashes) hashes.insert(h);
        result.usage += p->record.usage;
        result.latency_ms += p->record.latency_ms;
        row.extra_predictions += p->record.scores.extra_predictions;
        row.unmatched_gt += p->record.scores.unmatched_gt;
        rec.scenes.push_back(std::move(p->record));
      }
      rec.scores = run_scores(rec.scenes, settings.scene_averaged);
      for (std::size_t k = 0; k < 6; ++k)
        if (rec.scores[k]) per_metric[k].push_back(*rec.scores[k]);
      result.runs.push_back(std::move(rec));
    }
    for (std::size_t k = 0; k < 6; ++k)
      if (!per_metric[k].empty()) row.metrics[k] = aggregate_runs(per_metric[k]);
    result.report.rows.push_back(std::move(row));
  }
  result.prompt_hashes.assign(hashes.begin(), hashes.end());
  return result;
}

// ---------------------------------------------------------------------------
// Run directory

inline Json descriptor_to_json(const BackendDescriptor& d) {
  return {{"id", d.id},
          {"method", d.method},
          {"serialized", d.serialized},
          {"temperature", d.temperature},
          {"model", d.model},
          {"params", d.params}};
}

inline Json make_manifest(const Json& config, const Dataset& dataset, const EvalResult& r) {
  Json prompt_hashes = Json::array();
  for (const auto& h : r.prompt_hashes) prompt_hashes.push_back(h);
  return {{"config", config},
          {"dataset",
           {{"name", dataset.name},
            {"version", dataset.version},
            {"catalog_version", dataset.catalog_version},
            {"scene_count", dataset.scenes.size()}}},
          {"backend", descriptor_to_json(r.descriptor)},
          {"temperature", r.descriptor.temperature},
          {"prompt_hashes", std::move(prompt_hashes)},
          {"usage",
           {{"prompt_tokens", r.usage.prompt_tokens},
            {"completion_tokens", r.usage.completion_tokens},
            {"total_tokens", r.usage.total_tokens},
            {"latency_ms", r.latency_ms}}}};
}

inline std::string scene_scores_csv(const EvalResult& r) {
  std::string out = "task,run,scene_id";
  for (Metric m : kMetrics) out += "," + std::string(to_string(m)) + "_num," + std::string(to_string(m)) + "_den";
  out += ",unmatched_gt,extra_predictions,parse_warnings\n";
  for (const auto& run : r.runs)
    for (const auto& s : run.scenes) {
      out += std::string(to_string(run.task)) + "," + std::to_string(run.run) + "," + s.scores.scene_id;
      for (Metric m : kMetrics)
        out += "," + std::to_string(s.scores[m].num) + "," + std::to_string(s.scores[m].den);
      out += "," + std::to_string(s.scores.unmatched_gt) + "," + std::to_string(s.scores.extra_predictions) + "," +
             std::to_string(s.parse_warnings) + "\n";
    }
  return out;
}

inline void write_report_files(const std::filesystem::path& dir, const MetricsReport& report) {
  write_text_file(dir / "report.txt", render_report(report, ReportFormat::plain));
  write_text_file(dir / "report.md", render_report(report, ReportFormat::markdown));
  write_text_file(dir / "report.csv", render_report(report, ReportFormat::csv));
  write_text_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
}

inline void write_run_directory(const std::filesystem::path& dir, const Json& manifest, const EvalResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text_file(dir / "scene_scores.csv", scene_scores_csv(r));
  write_report_files(dir, r.report);
}

}  // namespace ossa
