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

#include "itd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "itd/error.hpp"
#include "itd/permtest.hpp"
#include "itd/protocol/coordinator.hpp"
#include "itd/rng.hpp"
#include "itd/summation.hpp"
#include "itd/version.hpp"

namespace itd::harness {

using nlohmann::json;

std::string_view to_string(Execution e) noexcept {
  switch (e) {
    case Execution::kInProcess: return "inprocess";
    case Execution::kLoopback: return "loopback";
    case Execution::kSocket: return "socket";
  }
  return "?";
}

std::optional<Execution> parse_execution(std::string_view s) noexcept {
  if (s == "inprocess") return Execution::kInProcess;
  if (s == "loopback") return Execution::kLoopback;
  if (s == "socket") return Execution::kSocket;
  return std::nullopt;
}

std::string_view to_string(Generator g) noexcept {
  switch (g) {
    case Generator::kUniformCube: return "uniform";
    case Generator::kNormal: return "normal";
  }
  return "?";
}

std::optional<Generator> parse_generator(std::string_view s) noexcept {
  if (s == "uniform") return Generator::kUniformCube;
  if (s == "normal") return Generator::kNormal;
  return std::nullopt;
}

std::uint64_t replication_seed(std::uint64_t root, std::size_t cell, std::size_t rep) {
  return derive_seed(root, {stream::kReplication, cell, rep});
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto body = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool within_level_band(double rate, double alpha) noexcept {
  return rate >= alpha / 10.0 && rate <= 2.1 * alpha;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool replicate(const ExperimentCell& cell, Execution execution, std::uint64_t seed, const std::string& run_id) {
  auto cfg = cell.model;
  cfg.seed = seed;
  const auto clients = synth::sample_model(cfg);
  protocol::CoordinatorConfig cc;
  cc.clients = clients.size();
  cc.test = {cell.alpha, cell.local_permutations, cell.global_permutations, seed};
  cc.run_id = run_id;
  if (execution == Execution::kInProcess) return protocol::run_in_process(clients, cc).reject;
  const auto outcome = execution == Execution::kLoopback ? protocol::run_loopback(clients, cc)
                                                         : protocol::run_local_sockets(clients, cc);
  if (!outcome.completed()) throw Error("replication " + run_id + " aborted: " + outcome.abort_reason);
  return outcome.report->reject;
}

ResultTable run_grid(const ExperimentGrid& grid, std::string experiment) {
  ResultTable table;
  table.experiment = std::move(experiment);
  table.seed = grid.seed;
  table.version = std::string(kVersion);
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    const auto& cell = grid.cells[c];
    cell.model.validate();
    if (cell.replications == 0) throw InvalidArgument("experiment cell needs at least one replication");
    const auto start = Clock::now();
    std::vector<char> rejected(cell.replications, 0);
    parallel_for(cell.replications, grid.workers, [&](std::size_t rep) {
      const auto run_id = table.experiment + "-" + std::to_string(c) + "-" + std::to_string(rep);
      rejected[rep] = replicate(cell, grid.execution, replication_seed(grid.seed, c, rep), run_id);
    });
    ResultRow row;
    row.model = std::string(synth::to_string(cell.model.model));
    row.dist = std::string(synth::to_string(cell.model.dist));
    row.clients = cell.model.clients;
    row.dim = cell.model.dim;
    row.m = cell.model.m;
    row.n = cell.model.n;
    row.alpha = cell.alpha;
    row.local_permutations = cell.local_permutations;
    row.global_permutations = cell.global_permutations;
    row.rejections = static_cast<std::size_t>(std::count(rejected.begin(), rejected.end(), 1));
    row.replications = cell.replications;
    row.rejection_rate = static_cast<double>(row.rejections) / static_cast<double>(row.replications);
    if (grid.timing) row.wall_time = seconds_since(start);
    table.rows.push_back(std::move(row));
  }
  return table;
}

double normal_cdf(double x, double variance) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

double mean_of(std::span<const double> v) {
  return compensated_sum(v) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
  const double mu = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - mu) * (x - mu));
  return s.value() / static_cast<double>(v.size() - 1);
}

}  // namespace

ResultTable run_type1(const ExperimentGrid& grid) {
  for (const auto& cell : grid.cells) {
    if (cell.model.model != synth::Model::A) throw InvalidArgument("run_type1: every cell must use model A");
  }
  return run_grid(grid, "type1");
}

ResultTable run_power(const ExperimentGrid& grid) {
  for (const auto& cell : grid.cells) {
    if (cell.model.model == synth::Model::A) throw InvalidArgument("run_power: cells must use models B to D");
  }
  return run_grid(grid, "power");
}

double ks_distance_normal(std::vector<double> sample, double variance) {
  if (sample.empty()) throw InvalidArgument("ks_distance_normal: empty sample");
  if (!(variance > 0.0)) throw InvalidArgument("ks_distance_normal: variance must be positive");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i], variance);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

bool CltReport::pass() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const CltRow& r) { return r.pass; });
}

CltReport run_clt_check(std::span<const std::size_t> client_counts, std::size_t replications,
                        std::uint64_t seed, std::size_t workers) {
  if (replications < 2) throw InvalidArgument("run_clt_check: need at least two replications");
  // W_2^2(N(0,1), N(x, s^2)) = x^2 + (s - 1)^2 with s = 1 + x/2.
  constexpr double kCoef = 1.25;
  CltReport report;
  report.seed = seed;
  report.population_itd2 = kCoef / 3.0;
  report.population_variance = kCoef * kCoef * (1.0 / 5.0 - 1.0 / 9.0);
  for (std::size_t k : client_counts) {
    CltRow row;
    row.clients = k;
    row.replications = replications;
    if (k <= 1) {
      row.skipped = true;
      row.note = "K = 1 has no between-client fluctuation to standardize";
      report.rows.push_back(std::move(row));
      continue;
    }
    std::vector<double> z(replications), predicted(replications);
    const auto weights = kernel::ClientWeightVector::equal(k);
    parallel_for(replications, workers, [&](std::size_t rep) {
      Rng rng(derive_seed(seed, {stream::kReplication, k, rep}));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<double> v(k);
      for (auto& x : v) {
        const double u = unif(rng);
        x = kCoef * u * u;
      }
      const double itd = kernel::weighted_sum(v, weights);
      predicted[rep] = kernel::clt_variance(v, weights, itd);
      z[rep] = std::sqrt(static_cast<double>(k)) * (itd - report.population_itd2);
    });
    row.predicted_variance = mean_of(predicted);
    row.empirical_variance = variance_of(z);
    row.variance_ratio = row.empirical_variance / row.predicted_variance;
    row.ks_distance = ks_distance_normal(z, row.predicted_variance);
    row.pass = row.ks_distance <= kCltKsThreshold && row.variance_ratio >= kCltRatioLow &&
               row.variance_ratio <= kCltRatioHigh;
    report.rows.push_back(std::move(row));
  }
  return report;
}

bool ConcentrationReport::pass() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const ConcentrationRow& r) { return r.pass; });
}

ConcentrationReport run_concentration_check(const ConcentrationConfig& config) {
  if (config.generator != Generator::kUniformCube)
    throw InvalidArgument("run_concentration_check: generator '" + std::string(to_string(config.generator)) +
                          "' has unbounded support");
  if (config.clients == 0 || config.dim == 0 || config.m == 0 || config.n == 0)
    throw InvalidArgument("run_concentration_check: sizes must be >= 1");
  if (config.replications < 2) throw InvalidArgument("run_concentration_check: need at least two replications");
  for (double t : config.thresholds) {
    if (!(t >= 0.0)) throw InvalidArgument("run_concentration_check: thresholds must be >= 0");
  }
  ConcentrationReport report;
  report.config = config;
  report.dx = static_cast<double>(config.dim);
  report.dy = static_cast<double>(config.dim);
  const auto weights = kernel::ClientWeightVector::equal(config.clients);
  std::vector<double> values(config.replications);
  parallel_for(config.replications, config.workers, [&](std::size_t rep) {
    std::vector<ClientSample> clients;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t k = 0; k < config.clients; ++k) {
      Rng rng(derive_seed(config.seed, {stream::kData, rep, k}));
      auto draw = [&](std::size_t count) {
        std::vector<double> coords(count * config.dim);
        for (auto& c : coords) c = unif(rng);
        return transport::PointCloud::uniform(config.dim, std::move(coords));
      };
      auto xs = draw(config.m);
      auto ys = draw(config.n);
      clients.emplace_back(ClientId{static_cast<std::uint32_t>(k)}, std::move(xs), std::move(ys));
    }
    values[rep] = kernel::empirical_itd2(clients, weights).value;
  });
  report.mean_itd2 = mean_of(values);
  const double reps = static_cast<double>(config.replications);
  for (double t : config.thresholds) {
    ConcentrationRow row;
    row.t = t;
    const auto exceed = std::count_if(values.begin(), values.end(),
                                      [&](double v) { return v - report.mean_itd2 > t; });
    row.empirical_tail = static_cast<double>(exceed) / reps;
    row.bound = kernel::concentration_bound(config.clients, config.m, config.n, report.dx, report.dy, t);
    row.mc_sd = std::sqrt(row.bound * (1.0 - row.bound) / reps);
    row.pass = row.empirical_tail <= row.bound + 2.0 * row.mc_sd;
    report.rows.push_back(row);
  }
  return report;
}

DriftTable run_drift(const DriftExperiment& experiment) {
  auto drift = experiment.drift;
  drift.validate();
  if (experiment.replications == 0) throw InvalidArgument("run_drift: need at least one replication");
  const auto start = Clock::now();
  const std::size_t k = drift.clients;
  // rejected[rep * (k + 1) + j]: client j for j < k, integrated test at j = k.
  std::vector<char> rejected(experiment.replications * (k + 1), 0);
  parallel_for(experiment.replications, experiment.workers, [&](std::size_t rep) {
    const std::uint64_t seed = replication_seed(experiment.seed, 0, rep);
    auto cfg = drift;
    cfg.seed = seed;
    const auto clients = synth::sample_drift(cfg);
    const permtest::TestConfig tc{experiment.alpha, experiment.local_permutations,
                                  experiment.global_permutations, seed};
    std::vector<std::size_t> m_sizes, n_sizes;
    std::vector<double> values;
    std::vector<permtest::PermutationBatch> batches;
    kernel::ITDStatistic observed;
    for (const auto& c : clients) {
      m_sizes.push_back(c.m());
      n_sizes.push_back(c.n());
      values.push_back(kernel::client_w2_squared(c));
      observed.per_client.push_back({c.id(), values.back()});
      batches.push_back(permtest::local_permuted_stats(c, tc.local_permutations,
                                                       permtest::client_stream_seed(seed, c.id())));
    }
    const auto weights = kernel::client_weights(m_sizes, n_sizes);
    observed.value = kernel::weighted_sum(values, weights);
    rejected[rep * (k + 1) + k] =
        permtest::finish_test(observed, batches, weights, m_sizes, n_sizes, tc).reject;
    const auto single = kernel::ClientWeightVector::equal(1);
    for (std::size_t j = 0; j < k; ++j) {
      const kernel::ITDStatistic own{values[j], {observed.per_client[j]}};
      rejected[rep * (k + 1) + j] =
          permtest::finish_test(own, std::span(&batches[j], 1), single, std::span(&m_sizes[j], 1),
                                std::span(&n_sizes[j], 1), tc)
              .reject;
    }
  });
  DriftTable table;
  table.seed = experiment.seed;
  table.version = std::string(kVersion);
  table.clients = k;
  table.epsilon = drift.epsilon;
  table.dim = drift.dim;
  table.m = drift.m;
  table.n = drift.n;
  table.alpha = experiment.alpha;
  table.local_permutations = experiment.local_permutations;
  table.global_permutations = experiment.global_permutations;
  for (std::size_t j = 0; j <= k; ++j) {
    DriftRow row;
    row.label = j < k ? "client " + std::to_string(j) : "ITD";
    for (std::size_t rep = 0; rep < experiment.replications; ++rep) row.rejections += rejected[rep * (k + 1) + j];
    row.replications = experiment.replications;
    row.power = static_cast<double>(row.rejections) / static_cast<double>(row.replications);
    table.rows.push_back(std::move(row));
  }
  if (experiment.timing) table.wall_time = seconds_since(start);
  return table;
}

json to_json(const CltReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"K", r.clients}, {"replications", r.replications}, {"skipped", r.skipped}};
    if (r.skipped) {
      row["note"] = r.note;
    } else {
      row["ks_distance"] = r.ks_distance;
      row["predicted_variance"] = r.predicted_variance;
      row["empirical_variance"] = r.empirical_variance;
      row["variance_ratio"] = r.variance_ratio;
      row["pass"] = r.pass;
    }
    rows.push_back(std::move(row));
  }
  return {{"experiment", "clt"},
          {"seed", report.seed},
          {"version", kVersion},
          {"population_itd2", report.population_itd2},
          {"population_variance", report.population_variance},
          {"ks_threshold", kCltKsThreshold},
          {"rows", rows},
          {"pass", report.pass()}};
}

json to_json(const ConcentrationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"t", r.t}, {"empirical_tail", r.empirical_tail}, {"bound", r.bound}, {"mc_sd", r.mc_sd},
                    {"pass", r.pass}});
  const auto& c = report.config;
  return {{"experiment", "concentration"},
          {"seed", c.seed},
          {"version", kVersion},
          {"generator", to_string(c.generator)},
          {"K", c.clients},
          {"d", c.dim},
          {"m", c.m},
          {"n", c.n},
          {"replications", c.replications},
          {"Dx", report.dx},
          {"Dy", report.dy},
          {"mean_itd2", report.mean_itd2},
          {"rows", rows},
          {"pass", report.pass()}};
}

std::string to_text(const CltReport& report) {
  std::ostringstream os;
  os << "clt (seed " << report.seed << ", ITD^2 " << report.population_itd2 << ", variance "
     << report.population_variance << ")\n";
  os << std::setw(6) << "K" << std::setw(8) << "reps" << std::setw(10) << "KS" << std::setw(12) << "pred_var"
     << std::setw(12) << "emp_var" << std::setw(8) << "ratio" << "  result\n";
  for (const auto& r : report.rows) {
    os << std::setw(6) << r.clients << std::setw(8) << r.replications;
    if (r.skipped) {
      os << "  skipped: " << r.note << '\n';
      continue;
    }
    os << std::fixed << std::setprecision(4) << std::setw(10) << r.ks_distance << std::setw(12)
       << r.predicted_variance << std::setw(12) << r.empirical_variance << std::setprecision(3) << std::setw(8)
       << r.variance_ratio << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
    os.unsetf(std::ios::floatfield);
  }
  return os.str();
}

std::string to_text(const ConcentrationReport& report) {
  std::ostringstream os;
  const auto& c = report.config;
  os << "concentration (seed " << c.seed << ", K " << c.clients << ", d " << c.dim << ", m " << c.m << ", n "
     << c.n << ", reps " << c.replications << ", mean ITD^2 " << report.mean_itd2 << ")\n";
  os << std::setw(8) << "t" << std::setw(12) << "tail" << std::setw(12) << "bound" << std::setw(12) << "mc_sd"
     << "  result\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : report.rows) {
    os << std::setw(8) << r.t << std::setw(12) << r.empirical_tail << std::setw(12) << r.bound << std::setw(12)
       << r.mc_sd << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return os.str();
}

}  // namespace itd::harness
