#include <gtest/gtest.h>

#include <cmath>

#include "ossa/evaluation.hpp"
#include "test_support.hpp"

using namespace ossa;

namespace {

Plan named(const std::string& name, std::optional<ObjectState> state = std::nullopt) {
  Plan p;
  p.name = name;
  p.state = state;
  return p;
}

MetricsReport oracle_report(std::size_t runs = 3) {
  EvalSettings s;
  s.runs = runs;
  return evaluate(generate_dataset({}), s, [](std::size_t) { return std::make_unique<OracleBackend>(); }).report;
}

}  // namespace

TEST(MatchObjects, IndexOrder) {
  Scene gt = test::scene("m", {test::object("plate", ObjectState::clean, "plate 1"),
                               test::object("plate", ObjectState::dirty, "plate 2")});
  Matching m = match_objects({named("plate 2"), named("plate 1")}, gt);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(m.pairs[1], std::make_pair(std::size_t{1}, std::size_t{0}));
}

TEST(MatchObjects, EmptyAndSurplus) {
  Scene gt = test::scene("m", {test::object("apple", ObjectState::intact, "apple")});
  Matching none = match_objects({}, gt);
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_EQ(none.unmatched_gt, std::vector<std::size_t>{0});

  Matching extra = match_objects({named("apple"), named("orange")}, gt);
  ASSERT_EQ(extra.pairs.size(), 1u);
  EXPECT_EQ(extra.extra_predictions, std::vector<std::size_t>{1});

  Matching blank = match_objects({named("  ")}, gt);
  EXPECT_EQ(blank.extra_predictions, std::vector<std::size_t>{0});
  EXPECT_EQ(blank.unmatched_gt, std::vector<std::size_t>{0});
}

TEST(MatchObjects, SynonymsAndUnindexedNames) {
  Scene gt = test::scene("m", {test::object("cup", ObjectState::clean, "cup 1"), test::object("cup", ObjectState::dirty, "cup 2")});
  Matching m = match_objects({named("Cup"), named("cup 2")}, gt);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[1], std::make_pair(std::size_t{1}, std::size_t{1}));  // exact label first
  EXPECT_EQ(m.pairs[0], std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(ScoreTask, ThreeOfFour) {
  Scene gt = test::scene("s", {test::object("apple", ObjectState::intact, "apple"),
                               test::object("cup", ObjectState::dirty, "cup"),
                               test::object("fork", ObjectState::clean, "fork"),
                               test::object("plate", ObjectState::clean, "plate")});
  auto preds = test::oracle_plans(gt, TaskId::t2);
  preds.pop_back();
  SceneScores s = score_task(preds, gt, TaskSpec::make(TaskId::t2));
  EXPECT_EQ(s[Metric::sta], (Ratio{3, 4}));
  EXPECT_EQ(s[Metric::com], (Ratio{3, 4}));
  EXPECT_EQ(s.unmatched_gt, 1u);
  EXPECT_FALSE(s[Metric::amb].defined());
}

TEST(ScoreTask, AmbiguityOnlyWhereUncertain) {
  Scene gt = test::scene("a", {test::object("orange", ObjectState::leftover_food, "orange"),
                               test::object("bowl", ObjectState::containing_leftover_food, "bowl"),
                               test::object("cup", ObjectState::clean, "cup")});
  auto preds = test::oracle_plans(gt, TaskId::t1);
  preds[1].destination = Destination::fridge;
  SceneScores t1 = score_task(preds, gt, TaskSpec::make(TaskId::t1));
  EXPECT_EQ(t1[Metric::amb], (Ratio{1, 2}));
  EXPECT_EQ(t1[Metric::des], (Ratio{2, 3}));
  SceneScores t2 = score_task(preds, gt, TaskSpec::make(TaskId::t2));
  EXPECT_FALSE(t2[Metric::amb].defined());
}

TEST(ScoreTask, UnknownNeverMatchesAndEmptySceneFails) {
  Scene gt = test::scene("u", {test::object("apple", ObjectState::intact, "apple")});
  auto preds = test::oracle_plans(gt, TaskId::t3);
  preds[0].grasping_type.reset();
  SceneScores s = score_task(preds, gt, TaskSpec::make(TaskId::t3));
  EXPECT_EQ(s[Metric::gra], (Ratio{0, 1}));
  EXPECT_EQ(s[Metric::com], (Ratio{0, 1}));
  EXPECT_EQ(s[Metric::sta], (Ratio{1, 1}));
  try {
    score_task(preds, test::scene("empty", {}), TaskSpec::make(TaskId::t1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_scene);
  }
}

TEST(ScoreTask, OracleScoresPerfectly) {
  for (const auto& scene : generate_dataset({}).scenes)
    for (TaskId t : {TaskId::t1, TaskId::t2, TaskId::t3}) {
      SceneScores s = score_task(test::oracle_plans(scene, t), scene, TaskSpec::make(t));
      for (Metric m : kMetrics) {
        if (s[m].defined()) {
          EXPECT_EQ(s[m].num, s[m].den);
        }
      }
    }
}

// 100 random small scenes with damaged predictions against an independent
// recount; also checks ComA bounds and prediction-order invariance.
TEST(ScoreTask, MatchesBruteForceRecount) {
  GenConfig g;
  g.seed = 7;
  g.scene_count = 100;
  g.min_objects = 1;
  g.max_objects = 6;
  Dataset d = generate_dataset(g);
  SplitMix64 rng(31337);
  for (const auto& scene : d.scenes)
    for (TaskId t : {TaskId::t1, TaskId::t2, TaskId::t3}) {
      auto preds = test::corrupted_predictions(rng, scene, t);
      SceneScores s = score_task(preds, scene, TaskSpec::make(t));
      auto expect = test::brute_force_scores(preds, scene, t);
      for (Metric m : kMetrics) EXPECT_EQ(s[m], expect[static_cast<std::size_t>(m)]) << scene.scene_id << " " << to_string(m);
      for (Metric m : {Metric::sta, Metric::des, Metric::gra, Metric::pla}) {
        EXPECT_LE(s[Metric::com].num, s[m].num);
        EXPECT_LE(s[m].num, s[m].den);
      }
      auto reversed = preds;
      std::reverse(reversed.begin(), reversed.end());
      SceneScores r = score_task(reversed, scene, TaskSpec::make(t));
      EXPECT_EQ(r.metrics, s.metrics);
      EXPECT_EQ(r.extra_predictions, s.extra_predictions);
    }
}

// Shuffling duplicates that carry no index still gives the same scores.
TEST(ScoreTask, PermutationInvariantWithinCategory) {
  Scene gt = test::scene("p", {test::object("plate", ObjectState::clean, "plate 1"),
                               test::object("plate", ObjectState::dirty, "plate 2"),
                               test::object("plate", ObjectState::clean, "plate 3")});
  std::vector<Plan> preds{named("plate", ObjectState::dirty), named("plate", ObjectState::clean),
                          named("plate", ObjectState::clean)};
  preds[2].destination = Destination::cupboard;
  SceneScores base = score_task(preds, gt, TaskSpec::make(TaskId::t1));
  std::vector<std::size_t> order{0, 1, 2};
  do {
    std::vector<Plan> shuffled;
    for (std::size_t i : order) shuffled.push_back(preds[i]);
    EXPECT_EQ(score_task(shuffled, gt, TaskSpec::make(TaskId::t1)).metrics, base.metrics);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Aggregate, Examples) {
  Aggregate a = aggregate_runs({0.7, 0.8, 0.9});
  EXPECT_EQ(format_aggregate(a), "80.00±10.00");
  EXPECT_NEAR(a.mean, 0.8, 1e-12);
  EXPECT_NEAR(*a.stddev, 0.1, 1e-12);
  Aggregate one = aggregate_runs({1.0});
  EXPECT_FALSE(one.stddev.has_value());
  EXPECT_EQ(format_aggregate(one), "100.00");
  EXPECT_EQ(format_aggregate(aggregate_runs({1.0, 1.0, 1.0})), "100.00±0.00");
  try {
    aggregate_runs({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_runs);
  }
  EXPECT_EQ(format_percent(-0.00001), "0.00");
}

TEST(Aggregate, ClosedForm) {
  SplitMix64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(rng.uniform_int(1, 12));
    for (double& x : v) x = rng.uniform();
    double sum = 0, sq = 0;
    for (double x : v) {
      sum += x;
      sq += x * x;
    }
    double n = static_cast<double>(v.size());
    Aggregate a = aggregate_runs(v);
    EXPECT_NEAR(a.mean, sum / n, 1e-12);
    if (v.size() >= 2) {
      EXPECT_NEAR(*a.stddev, std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))), 1e-12);
    }
  }
}

TEST(Report, OracleGolden) {
  MetricsReport r = oracle_report();
  auto golden = test::test_dir() / "golden";
  EXPECT_EQ(render_report(r, ReportFormat::plain), read_text_file(golden / "oracle_report_seed42.txt"));
  EXPECT_EQ(render_report(r, ReportFormat::markdown), read_text_file(golden / "oracle_report_seed42.md"));
  EXPECT_EQ(render_report(r, ReportFormat::csv), read_text_file(golden / "oracle_report_seed42.csv"));
}

TEST(Report, MixedGoldenAndJsonRoundTrip) {
  auto golden = test::test_dir() / "golden";
  MetricsReport r = report_from_json(Json::parse(read_text_file(golden / "mixed_report.json")));
  EXPECT_EQ(render_report(r, ReportFormat::plain), read_text_file(golden / "mixed_report.txt"));
  EXPECT_EQ(render_report(r, ReportFormat::markdown), read_text_file(golden / "mixed_report.md"));
  EXPECT_EQ(render_report(r, ReportFormat::csv), read_text_file(golden / "mixed_report.csv"));
  MetricsReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(render_report(back, ReportFormat::plain), render_report(r, ReportFormat::plain));
}

TEST(Report, StateScopeShowsStateColumnOnly) {
  MetricsReport r = oracle_report(1);
  r.scope = PlanScope::state_only;
  std::string csv = render_report(r, ReportFormat::csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Task,Method,StaA");
  EXPECT_NE(csv.find("T1,oracle(Z),100.00\n"), std::string::npos);
}

TEST(Report, EmptyReportIsAnError) {
  try {
    render_report({}, ReportFormat::plain);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_runs);
  }
  EXPECT_EQ(parse_report_format("MD"), ReportFormat::markdown);
  EXPECT_EQ(parse_report_format("xml"), std::nullopt);
}
