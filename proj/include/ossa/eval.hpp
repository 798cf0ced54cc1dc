#pragma once

// Scoring predicted plans against the oracle.
//
// All metrics use ground-truth objects as the denominator. A ground-truth
// object with no matching prediction is wrong on every metric; predictions
// with no ground-truth partner are counted separately and do not affect
// accuracy. AmbA only counts objects whose expected destination is
// uncertain and is undefined when there are none.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ossa/oracle.hpp"
#include "ossa/plan_schema.hpp"
#include "ossa/prompt.hpp"

namespace ossa {

enum class Metric { sta, amb, des, gra, pla, com };

inline constexpr std::array<Metric, 6> kMetrics{Metric::sta, Metric::amb, Metric::des,
                                                Metric::gra, Metric::pla, Metric::com};

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::sta: return "StaA";
    case Metric::amb: return "AmbA";
    case Metric::des: return "DesA";
    case Metric::gra: return "GraA";
    case Metric::pla: return "PlaA";
    case Metric::com: return "ComA";
  }
  return "?";
}

struct Ratio {
  std::size_t num = 0;
  std::size_t den = 0;

  bool defined() const { return den > 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Ratio& operator+=(const Ratio& o) {
    num += o.num;
    den += o.den;
    return *this;
  }
  bool operator==(const Ratio&) const = default;
};

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt index, prediction index), gt order
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> extra_predictions;
};

// Pairs predictions with ground-truth objects of the same category stem.
// Within a category, identical labels pair first; the rest pair in order of
// (index, label), which makes the result independent of prediction order.
inline Matching match_objects(const std::vector<Plan>& predictions, const Scene& gt) {
  struct Entry {
    std::size_t idx;
    CanonicalLabel label;
  };
  std::vector<std::string> stem_order;
  std::map<std::string, std::vector<Entry>> gt_by_stem;
  std::map<std::string, std::vector<Entry>> pred_by_stem;
  for (std::size_t i = 0; i < gt.objects.size(); ++i) {
    auto label = canonicalize_label(gt.objects[i].name);
    if (!gt_by_stem.contains(label.stem)) stem_order.push_back(label.stem);
    gt_by_stem[label.stem].push_back({i, label});
  }
  Matching m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (detail::trim(predictions[i].name).empty()) {
      m.extra_predictions.push_back(i);
      continue;
    }
    auto label = canonicalize_label(predictions[i].name);
    pred_by_stem[label.stem].push_back({i, label});
  }

  auto order_key = [](const Entry& e) { return std::make_tuple(e.label.index.value_or(0), e.label.token, e.idx); };
  for (const auto& stem : stem_order) {
    auto& gts = gt_by_stem[stem];
    auto& preds = pred_by_stem[stem];
    std::vector<bool> gt_used(gts.size(), false), pred_used(preds.size(), false);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (!pred_used[p] && preds[p].label.token == gts[g].label.token) {
          m.pairs.emplace_back(gts[g].idx, preds[p].idx);
          gt_used[g] = pred_used[p] = true;
          break;
        }
      }
    }
    std::vector<Entry> rest_gt, rest_pred;
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (!gt_used[g]) rest_gt.push_back(gts[g]);
    for (std::size_t p = 0; p < preds.size(); ++p)
      if (!pred_used[p]) rest_pred.push_back(preds[p]);
    auto by_key = [&](const Entry& a, const Entry& b) { return order_key(a) < order_key(b); };
    std::sort(rest_gt.begin(), rest_gt.end(), by_key);
    // Ties (same index and label) break on plan content, so identical names
    // pair the same way whatever order they arrive in.
    std::map<std::size_t, std::string> content;
    for (const auto& e : rest_pred) content[e.idx] = plan_to_json(predictions[e.idx]).dump();
    std::sort(rest_pred.begin(), rest_pred.end(), [&](const Entry& a, const Entry& b) {
      return std::tie(a.label.index, a.label.token, content[a.idx]) <
             std::tie(b.label.index, b.label.token, content[b.idx]);
    });
    std::size_t k = 0;
    for (; k < rest_gt.size() && k < rest_pred.size(); ++k) m.pairs.emplace_back(rest_gt[k].idx, rest_pred[k].idx);
    for (std::size_t g = k; g < rest_gt.size(); ++g) m.unmatched_gt.push_back(rest_gt[g].idx);
    for (std::size_t p = k; p < rest_pred.size(); ++p) m.extra_predictions.push_back(rest_pred[p].idx);
    pred_by_stem.erase(stem);
  }
  for (const auto& [stem, preds] : pred_by_stem)
    for (const auto& e : preds) m.extra_predictions.push_back(e.idx);
  std::sort(m.pairs.begin(), m.pairs.end());
  std::sort(m.unmatched_gt.begin(), m.unmatched_gt.end());
  std::sort(m.extra_predictions.begin(), m.extra_predictions.end());
  return m;
}

struct SceneScores {
  std::string scene_id;
  std::array<Ratio, 6> metrics{};
  std::size_t matched = 0;
  std::size_t unmatched_gt = 0;
  std::size_t extra_predictions = 0;

  Ratio& operator[](Metric m) { return metrics[static_cast<std::size_t>(m)]; }
  const Ratio& operator[](Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

inline SceneScores score_task(const std::vector<Plan>& predictions, const Scene& gt, const TaskSpec& task,
                              const Catalog& catalog = default_catalog()) {
  if (gt.objects.empty()) throw Error(ErrorCode::empty_scene, "scene " + gt.scene_id + " has no objects");
  Matching m = match_objects(predictions, gt);
  std::vector<const Plan*> paired(gt.objects.size(), nullptr);
  for (auto [g, p] : m.pairs) paired[g] = &predictions[p];

  SceneScores s;
  s.scene_id = gt.scene_id;
  s.matched = m.pairs.size();
  s.unmatched_gt = m.unmatched_gt.size();
  s.extra_predictions = m.extra_predictions.size();
  for (std::size_t i = 0; i < gt.objects.size(); ++i) {
    const ObjectAnnotation& a = gt.objects[i];
    ExpectedPlan e = ground_truth_plan(a, task, catalog);
    const Plan* p = paired[i];
    bool sta = p && p->state == a.state;
    bool des = p && p->destination == e.destination;
    bool gra = p && p->grasping_type == e.grasping_type;
    bool pla = p && p->placing_type == e.placing_type;
    for (Metric metric : {Metric::sta, Metric::des, Metric::gra, Metric::pla, Metric::com}) ++s[metric].den;
    s[Metric::sta].num += sta;
    s[Metric::des].num += des;
    s[Metric::gra].num += gra;
    s[Metric::pla].num += pla;
    s[Metric::com].num += sta && des && gra && pla;
    if (e.destination == Destination::uncertain) {
      ++s[Metric::amb].den;
      s[Metric::amb].num += p && p->destination == Destination::uncertain;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Aggregation over repeated runs

struct Aggregate {
  double mean = 0.0;
  std::optional<double> stddev;  // sample standard deviation; present when n >= 2
  std::size_t n = 0;
};

inline Aggregate aggregate_runs(const std::vector<double>& runs) {
  if (runs.empty()) throw Error(ErrorCode::no_runs, "no runs to aggregate");
  Aggregate a;
  a.n = runs.size();
  a.mean = std::accumulate(runs.begin(), runs.end(), 0.0) / static_cast<double>(runs.size());
  if (runs.size() >= 2) {
    double ss = 0.0;
    for (double v : runs) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(runs.size() - 1));
  }
  return a;
}

inline std::string format_percent(double fraction) {
  char buf[32];
  double v = fraction * 100.0;
  if (std::fabs(v) < 0.005) v = 0.0;  // no "-0.00"
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string format_aggregate(const Aggregate& a) {
  std::string s = format_percent(a.mean);
  if (a.stddev) s += "±" + format_percent(*a.stddev);
  return s;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  TaskId task = TaskId::t1;
  std::string method;
  PromptMode mode = PromptMode::zero_shot;
  std::array<std::optional<Aggregate>, 6> metrics{};  // nullopt = undefined ("-")
  std::size_t runs = 0;
  std::size_t extra_predictions = 0;
  std::size_t unmatched_gt = 0;

  const std::optional<Aggregate>& operator[](Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

struct MetricsReport {
  PlanScope scope = PlanScope::full_plan;
  std::vector<ReportRow> rows;
  Json provenance = Json::object();
};

enum class ReportFormat { plain, csv, markdown };

inline std::optional<ReportFormat> parse_report_format(std::string_view s) {
  std::string t = detail::to_lower(s);
  if (t == "plain" || t == "table" || t == "txt") return ReportFormat::plain;
  if (t == "csv") return ReportFormat::csv;
  if (t == "markdown" || t == "md") return ReportFormat::markdown;
  return std::nullopt;
}

inline std::string method_label(const ReportRow& r) {
  return r.method + (r.mode == PromptMode::zero_shot ? "(Z)" : "(F)");
}

inline std::vector<Metric> report_columns(const MetricsReport& report) {
  if (report.scope == PlanScope::state_only) return {Metric::sta};
  return {kMetrics.begin(), kMetrics.end()};
}

inline std::string render_report(const MetricsReport& report, ReportFormat format) {
  if (report.rows.empty()) throw Error(ErrorCode::no_runs, "report has no rows");
  auto columns = report_columns(report);
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Task", "Method"};
  for (Metric m : columns) header.emplace_back(to_string(m));
  table.push_back(header);
  for (const auto& r : report.rows) {
    std::vector<std::string> row{std::string(to_string(r.task)), method_label(r)};
    for (Metric m : columns) row.push_back(r[m] ? format_aggregate(*r[m]) : "-");
    table.push_back(std::move(row));
  }

  std::string out;
  if (format == ReportFormat::csv) {
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
      out += "\n";
    }
    return out;
  }

  // Display width: count UTF-8 code points.
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : table)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], width(row[i]));
  auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - width(s), ' '); };

  if (format == ReportFormat::markdown) {
    for (std::size_t r = 0; r < table.size(); ++r) {
      out += "|";
      for (std::size_t i = 0; i < table[r].size(); ++i) out += " " + pad(table[r][i], widths[i]) + " |";
      out += "\n";
      if (r == 0) {
        out += "|";
        for (std::size_t w : widths) out += std::string(w + 2, '-') + "|";
        out += "\n";
      }
    }
    return out;
  }

  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < table[r].size(); ++i) line += (i ? "  " : "") + pad(table[r][i], widths[i]);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w;
      out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
    }
  }
  return out;
}

inline Json aggregate_to_json(const std::optional<Aggregate>& a) {
  if (!a) return nullptr;
  return {{"mean", a->mean}, {"std", a->stddev ? Json(*a->stddev) : Json()}, {"n", a->n}};
}

inline Json report_to_json(const MetricsReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json metrics = Json::object();
    for (Metric m : kMetrics) metrics[std::string(to_string(m))] = aggregate_to_json(r[m]);
    rows.push_back({{"task", std::string(to_string(r.task))},
                    {"method", r.method},
                    {"mode", std::string(to_string(r.mode))},
                    {"runs", r.runs},
                    {"extra_predictions", r.extra_predictions},
                    {"unmatched_gt", r.unmatched_gt},
                    {"metrics", std::move(metrics)}});
  }
  return {{"scope", std::string(to_string(report.scope))}, {"rows", std::move(rows)}, {"provenance", report.provenance}};
}

inline MetricsReport report_from_json(const Json& j) {
  MetricsReport report;
  try {
    report.scope = j.at("scope").get<std::string>() == "state" ? PlanScope::state_only : PlanScope::full_plan;
    for (const auto& row : j.at("rows")) {
      ReportRow r;
      auto task = parse_task_id(row.at("task").get<std::string>());
      auto mode = parse_prompt_mode(row.at("mode").get<std::string>());
      if (!task || !mode) throw Error(ErrorCode::schema_error, "report row has an unknown task or mode");
      r.task = *task;
      r.mode = *mode;
      r.method = row.at("method").get<std::string>();
      r.runs = row.at("runs").get<std::size_t>();
      r.extra_predictions = row.value("extra_predictions", std::size_t{0});
      r.unmatched_gt = row.value("unmatched_gt", std::size_t{0});
      for (Metric m : kMetrics) {
        const Json& a = row.at("metrics").at(std::string(to_string(m)));
        if (a.is_null()) continue;
        Aggregate agg;
        agg.mean = a.at("mean").get<double>();
        if (!a.at("std").is_null()) agg.stddev = a.at("std").get<double>();
        agg.n = a.at("n").get<std::size_t>();
        r.metrics[static_cast<std::size_t>(m)] = agg;
      }
      report.rows.push_back(std::move(r));
    }
    if (auto p = j.find("provenance"); p != j.end()) report.provenance = *p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("report document: ") + e.what());
  }
  return report;
}

}  // namespace ossa
