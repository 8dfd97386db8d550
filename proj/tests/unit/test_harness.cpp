/*
 * Copyright 2026 The ITD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "itd/error.hpp"
#include "itd/harness.hpp"
#include "itd/result_table.hpp"
#include "itd/rng.hpp"

namespace itd::harness {
namespace {

ExperimentCell cell(synth::Model model, std::size_t k, std::size_t reps) {
  ExperimentCell c;
  c.model.model = model;
  c.model.clients = k;
  c.model.dim = 2;
  c.model.m = 20;
  c.model.n = 20;
  c.replications = reps;
  c.local_permutations = 20;
  c.global_permutations = 100;
  return c;
}

ExperimentGrid grid(std::vector<ExperimentCell> cells, std::uint64_t seed = 3) {
  ExperimentGrid g;
  g.cells = std::move(cells);
  g.seed = seed;
  return g;
}

ResultTable sample_table() {
  ResultTable t;
  t.experiment = "power";
  t.seed = 18446744073709551615ULL;
  t.version = "1.2.3";
  t.rows.push_back({"B", "Normal", 2, 5, 100, 120, 0.05, 50, 500, 37, 40, 37.0 / 40.0, std::nullopt});
  t.rows.push_back({"D", "T5", 10, 1, 3, 4, 0.1, 1, 2, 0, 1, 0.0, 0.1 + 0.2});
  return t;
}

DriftTable sample_drift_table() {
  DriftTable t;
  t.seed = 9;
  t.version = "0.1.0";
  t.clients = 2;
  t.epsilon = 0.8;
  t.dim = 2;
  t.m = 100;
  t.n = 100;
  t.alpha = 0.05;
  t.local_permutations = 50;
  t.global_permutations = 500;
  t.rows = {{"client 0", 3, 10, 0.3}, {"client 1", 5, 10, 0.5}, {"ITD", 9, 10, 0.9}};
  return t;
}

TEST(ResultTableIo, CsvAndJsonRoundTrip) {
  const auto t = sample_table();
  EXPECT_EQ(result_table_from_csv(to_csv(t)), t);
  EXPECT_EQ(result_table_from_json(to_json(t)), t);
  EXPECT_EQ(result_table_from_json(nlohmann::json::parse(to_json(t).dump())), t);
  const auto d = sample_drift_table();
  EXPECT_EQ(drift_table_from_csv(to_csv(d)), d);
  EXPECT_EQ(drift_table_from_json(to_json(d)), d);
  EXPECT_EQ(d.itd_row().power, 0.9);
  EXPECT_EQ(d.max_client_power(), 0.5);
}

TEST(ResultTableIo, CsvHasMetadataAndHeader) {
  const auto csv = to_csv(sample_table());
  EXPECT_EQ(csv.rfind("# ", 0), 0u);
  EXPECT_NE(csv.find("model,dist,K,d,m,n,alpha,B_k,B,rejections,replications,rejection_rate"),
            std::string::npos);
  EXPECT_NE(to_text(sample_table()).find("Normal"), std::string::npos);
  EXPECT_NE(to_text(sample_drift_table()).find("ITD"), std::string::npos);
}

TEST(ResultTableIo, MalformedCsvThrows) {
  EXPECT_THROW(result_table_from_csv("model,dist\nA\n"), Error);
  EXPECT_THROW(drift_table_from_csv(""), Error);
}

TEST(ResultTableIo, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.0, 12345.678}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Execution, ParseAndPrint) {
  for (auto e : {Execution::kInProcess, Execution::kLoopback, Execution::kSocket})
    EXPECT_EQ(parse_execution(to_string(e)), e);
  EXPECT_FALSE(parse_execution("carrier-pigeon").has_value());
  for (auto g : {Generator::kUniformCube, Generator::kNormal}) EXPECT_EQ(parse_generator(to_string(g)), g);
}

TEST(ParallelFor, RunsEveryTaskOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  parallel_for(0, 2, [](std::size_t) { FAIL(); });
}

TEST(ReplicationSeed, DistinctAcrossCellsAndReps) {
  EXPECT_EQ(replication_seed(1, 2, 3), replication_seed(1, 2, 3));
  EXPECT_NE(replication_seed(1, 2, 3), replication_seed(1, 3, 2));
  EXPECT_NE(replication_seed(1, 2, 3), replication_seed(2, 2, 3));
}

TEST(RunType1, SingleReplicationGivesZeroOrOne) {
  const auto t = run_type1(grid({cell(synth::Model::A, 2, 1)}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_TRUE(t.rows[0].rejection_rate == 0.0 || t.rows[0].rejection_rate == 1.0);
  EXPECT_EQ(t.rows[0].replications, 1u);
  EXPECT_EQ(t.experiment, "type1");
  EXPECT_FALSE(t.rows[0].wall_time.has_value());
}

TEST(RunType1, WorkerCountDoesNotChangeResults) {
  auto g = grid({cell(synth::Model::A, 2, 12), cell(synth::Model::A, 1, 8)});
  const auto serial = run_type1(g);
  g.workers = 4;
  EXPECT_EQ(run_type1(g), serial);
}

TEST(RunType1, ExecutionModesAgree) {
  auto g = grid({cell(synth::Model::A, 3, 4)});
  const auto inproc = run_type1(g);
  g.execution = Execution::kLoopback;
  EXPECT_EQ(run_type1(g), inproc);
  g.execution = Execution::kSocket;
  EXPECT_EQ(run_type1(g), inproc);
}

TEST(RunType1, TimingIsOptIn) {
  auto g = grid({cell(synth::Model::A, 1, 2)});
  g.timing = true;
  const auto t = run_type1(g);
  ASSERT_TRUE(t.rows[0].wall_time.has_value());
  EXPECT_GE(*t.rows[0].wall_time, 0.0);
}

TEST(RunType1, RejectsShiftedModels) {
  EXPECT_THROW(run_type1(grid({cell(synth::Model::C, 1, 1)})), InvalidArgument);
  EXPECT_THROW(run_power(grid({cell(synth::Model::A, 1, 1)})), InvalidArgument);
}

TEST(RunType1, LevelIsNearAlpha) {
  auto c = cell(synth::Model::A, 2, 300);
  c.alpha = 0.1;
  const auto t = run_type1(grid({c}, 21));
  // 4 binomial standard deviations around 0.1 at 300 replications.
  EXPECT_NEAR(t.rows[0].rejection_rate, 0.1, 4.0 * std::sqrt(0.09 / 300.0));
}

TEST(RunPower, ZeroShiftBehavesLikeTheNull) {
  auto c = cell(synth::Model::C, 2, 300);
  c.alpha = 0.1;
  c.model.shift_sd = 0.0;
  auto null = c;
  null.model.model = synth::Model::A;
  EXPECT_EQ(run_power(grid({c}, 21)).rows[0].rejections, run_type1(grid({null}, 21)).rows[0].rejections);
}

TEST(RunPower, LargeShiftIsDetected) {
  auto c = cell(synth::Model::C, 2, 40);
  c.model.shift_sd = 3.0;
  const auto t = run_power(grid({c}));
  EXPECT_GE(t.rows[0].rejection_rate, 0.8);
}

TEST(LevelBand, Edges) {
  EXPECT_TRUE(within_level_band(0.005, 0.05));
  EXPECT_TRUE(within_level_band(0.105, 0.05));
  EXPECT_FALSE(within_level_band(0.004, 0.05));
  EXPECT_FALSE(within_level_band(0.106, 0.05));
}

TEST(KsDistance, ExactSmallCases) {
  // One point at 0: the empirical CDF jumps from 0 to 1 where Phi = 1/2.
  EXPECT_NEAR(ks_distance_normal({0.0}, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(ks_distance_normal({-1e9, 1e9}, 1.0), 0.5, 1e-12);
  Rng rng(4);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::vector<double> big(20000);
  for (auto& v : big) v = nd(rng);
  EXPECT_LT(ks_distance_normal(big, 4.0), 0.015);
  EXPECT_GT(ks_distance_normal(big, 1.0), 0.1);
}

TEST(CltCheck, SingleClientIsSkipped) {
  const std::vector<std::size_t> ks{1};
  const auto r = run_clt_check(ks, 10, 1);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].skipped);
  EXPECT_FALSE(r.rows[0].note.empty());
  EXPECT_TRUE(r.pass());
}

TEST(CltCheck, ClosedFormPopulationValues) {
  const std::vector<std::size_t> ks{50};
  const auto r = run_clt_check(ks, 200, 2);
  EXPECT_NEAR(r.population_itd2, 1.25 / 3.0, 1e-15);
  EXPECT_NEAR(r.population_variance, 1.5625 * (1.0 / 5.0 - 1.0 / 9.0), 1e-15);
  EXPECT_NEAR(r.rows[0].variance_ratio, 1.0, 0.3);
  EXPECT_FALSE(to_text(r).empty());
  EXPECT_TRUE(to_json(r).contains("rows"));
}

TEST(CltCheck, WorkerCountDoesNotChangeResults) {
  const std::vector<std::size_t> ks{10};
  const auto a = run_clt_check(ks, 50, 3, 1);
  const auto b = run_clt_check(ks, 50, 3, 3);
  EXPECT_EQ(a.rows[0].ks_distance, b.rows[0].ks_distance);
  EXPECT_EQ(a.rows[0].empirical_variance, b.rows[0].empirical_variance);
}

TEST(ConcentrationCheck, ZeroThresholdIsTriviallyBounded) {
  ConcentrationConfig cfg;
  cfg.clients = 2;
  cfg.m = cfg.n = 10;
  cfg.replications = 50;
  cfg.thresholds = {0.0, 0.5};
  cfg.seed = 4;
  const auto r = run_concentration_check(cfg);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].bound, 1.0);
  EXPECT_TRUE(r.rows[0].pass);
  EXPECT_LE(r.rows[1].bound, 1.0);
  EXPECT_EQ(r.dx, 2.0);
  EXPECT_EQ(r.dy, 2.0);
  EXPECT_GT(r.mean_itd2, 0.0);
  EXPECT_FALSE(to_text(r).empty());
  EXPECT_TRUE(to_json(r).contains("rows"));
}

TEST(ConcentrationCheck, UnboundedGeneratorIsRejected) {
  ConcentrationConfig cfg;
  cfg.generator = Generator::kNormal;
  EXPECT_THROW(run_concentration_check(cfg), InvalidArgument);
}

DriftExperiment drift_experiment(std::size_t clients, double epsilon, std::size_t reps) {
  DriftExperiment e;
  e.drift.clients = clients;
  e.drift.epsilon = epsilon;
  e.drift.m = e.drift.n = 30;
  e.replications = reps;
  e.local_permutations = 20;
  e.global_permutations = 100;
  e.seed = 5;
  return e;
}

TEST(Drift, SingleClientColumnsCoincide) {
  const auto t = run_drift(drift_experiment(1, 0.7, 20));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].label, "client 0");
  EXPECT_EQ(t.rows[0].rejections, t.rows[1].rejections);
  EXPECT_EQ(t.itd_row().label, "ITD");
}

TEST(Drift, ShapeAndDeterminism) {
  auto e = drift_experiment(3, 0.5, 6);
  const auto a = run_drift(e);
  ASSERT_EQ(a.rows.size(), 4u);
  for (const auto& row : a.rows) EXPECT_EQ(row.replications, 6u);
  e.workers = 3;
  EXPECT_EQ(run_drift(e), a);
}

}  // namespace
}  // namespace itd::harness
