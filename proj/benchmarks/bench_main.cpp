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

#include <benchmark/benchmark.h>

#include "itd/permtest.hpp"
#include "itd/protocol/framing.hpp"
#include "itd/protocol/message.hpp"
#include "itd/synth.hpp"
#include "itd/transport.hpp"

namespace {

using namespace itd;

transport::PointCloud gaussian_cloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> coords(n * d);
  for (auto& c : coords) c = z(rng);
  return transport::PointCloud::uniform(d, std::move(coords));
}

void BM_ExactTransport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_cloud(n, 5, 1);
  const auto b = gaussian_cloud(n, 5, 2);
  const auto cost = transport::cost_matrix(a, b, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(transport::optimal_cost(cost, a.weights(), b.weights()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactTransport)->Arg(50)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond)->Complexity();

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_cloud(n, 5, 1);
  const auto b = gaussian_cloud(n, 5, 2);
  const auto cost = transport::cost_matrix(a, b, 2.0);
  transport::SinkhornOptions opt;
  opt.epsilon = 0.5;
  opt.tolerance = 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(transport::solve_sinkhorn(cost, a.weights(), b.weights(), opt));
}
BENCHMARK(BM_Sinkhorn)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LocalPermutationBatch(benchmark::State& state) {
  synth::ModelConfig cfg;
  cfg.clients = 1;
  cfg.dim = 2;
  cfg.m = cfg.n = static_cast<std::size_t>(state.range(0));
  const auto clients = synth::sample_model(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(permtest::local_permuted_stats(clients[0], 50, 7));
}
BENCHMARK(BM_LocalPermutationBatch)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EncodeDecodeBatch(benchmark::State& state) {
  protocol::PermutedBatchMsg batch{ClientId{3}, std::vector<double>(static_cast<std::size_t>(state.range(0)), 0.125)};
  const protocol::Message msg{protocol::kProtocolVersion, "bench", batch};
  for (auto _ : state) {
    const auto framed = protocol::frame(protocol::encode(msg));
    benchmark::DoNotOptimize(protocol::decode(protocol::unframe(framed)));
  }
}
BENCHMARK(BM_EncodeDecodeBatch)->Arg(100)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
