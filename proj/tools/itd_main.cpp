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

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itd/error.hpp"
#include "itd/harness.hpp"
#include "itd/protocol/client.hpp"
#include "itd/protocol/coordinator.hpp"
#include "itd/protocol/message.hpp"
#include "itd/synth.hpp"
#include "itd/version.hpp"

namespace {

using namespace itd;
namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

// Flag "--Bk" reads ITD_BK from the environment when not given.
template <class T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  std::string env = "ITD_";
  for (char c : name) {
    if (c != '-') env.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return app->add_option(name, var, help)->capture_default_str()->envname(env);
}

template <class T>
CLI::Option* list_flag(CLI::App* app, const std::string& name, std::vector<T>& var, const std::string& help) {
  return flag(app, name, var, help)->delimiter(',');
}

// --out PATH writes PATH.json and, for tables, PATH.csv. A trailing .json or
// .csv extension on PATH is dropped first.
fs::path out_prefix(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".json" || p.extension() == ".csv") p.replace_extension();
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

void write_outputs(const std::string& out, const json& j, const std::string* csv) {
  if (out.empty()) return;
  const auto prefix = out_prefix(out);
  write_file(fs::path(prefix.string() + ".json"), j.dump(2) + "\n");
  if (csv != nullptr) write_file(fs::path(prefix.string() + ".csv"), *csv);
}

synth::Distribution to_dist(const std::string& s) {
  auto d = synth::parse_distribution(s);
  if (!d) throw InvalidArgument("unknown distribution '" + s + "'");
  return *d;
}

synth::Model to_model(const std::string& s) {
  auto m = synth::parse_model(s);
  if (!m) throw InvalidArgument("unknown model '" + s + "'");
  return *m;
}

const std::vector<std::string> kDistNames{"normal", "lognormal", "t5"};
const std::vector<std::string> kModelNames{"A", "B", "C", "D"};

struct GridOptions {
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<std::size_t> clients{1, 5, 10};
  std::vector<std::size_t> dims{2};
  std::size_t m = harness::kDefaultSampleSize;
  std::size_t n = harness::kDefaultSampleSize;
  std::size_t bk = harness::kDefaultLocalPermutations;
  std::size_t b = harness::kDefaultGlobalPermutations;
  std::size_t reps = harness::kDefaultReplications;
  std::vector<std::string> dists{"normal"};
  std::vector<std::string> models{"B", "C", "D"};
  double shift_sd = synth::kDefaultShiftSd;
  std::string transport = "inprocess";
  std::string out;
  std::size_t workers = 1;
  bool timing = false;
};

void add_grid_options(CLI::App* app, GridOptions& o, bool with_model) {
  flag(app, "--seed", o.seed, "Root seed");
  flag(app, "--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  list_flag(app, "--K", o.clients, "Client counts (comma separated)");
  list_flag(app, "--d", o.dims, "Dimensions (comma separated)");
  flag(app, "--m", o.m, "X sample size per client");
  flag(app, "--n", o.n, "Y sample size per client");
  flag(app, "--Bk", o.bk, "Permutations per client");
  flag(app, "--B", o.b, "Aggregated permutations");
  flag(app, "--reps", o.reps, "Replications per cell");
  list_flag(app, "--dist", o.dists, "Distributions")->check(CLI::IsMember(kDistNames));
  if (with_model) list_flag(app, "--model", o.models, "Models (B, C, D)")->check(CLI::IsMember(kModelNames));
  flag(app, "--shift-sd", o.shift_sd, "Standard deviation of the mean and scale shifts");
  flag(app, "--transport", o.transport, "Execution of each test")
      ->check(CLI::IsMember({"inprocess", "loopback", "socket"}));
  flag(app, "--out", o.out, "Write PATH.json and PATH.csv");
  flag(app, "--workers", o.workers, "Worker threads");
  app->add_flag("--timing", o.timing, "Record wall time (output is then not reproducible)");
}

harness::ExperimentGrid make_grid(const GridOptions& o, const std::vector<std::string>& models) {
  harness::ExperimentGrid grid;
  grid.seed = o.seed;
  grid.workers = o.workers;
  grid.execution = *harness::parse_execution(o.transport);
  grid.timing = o.timing;
  for (const auto& model : models) {
    for (const auto& dist : o.dists) {
      for (std::size_t k : o.clients) {
        for (std::size_t d : o.dims) {
          harness::ExperimentCell cell;
          cell.model.model = to_model(model);
          cell.model.dist = to_dist(dist);
          cell.model.clients = k;
          cell.model.dim = d;
          cell.model.m = o.m;
          cell.model.n = o.n;
          cell.model.shift_sd = o.shift_sd;
          cell.alpha = o.alpha;
          cell.replications = o.reps;
          cell.local_permutations = o.bk;
          cell.global_permutations = o.b;
          grid.cells.push_back(cell);
        }
      }
    }
  }
  return grid;
}

int cmd_type1(const GridOptions& o) {
  const auto table = harness::run_type1(make_grid(o, {"A"}));
  std::cout << harness::to_text(table);
  const auto csv = harness::to_csv(table);
  write_outputs(o.out, harness::to_json(table), &csv);
  // The level check is only meaningful with enough replications.
  bool ok = true;
  for (const auto& row : table.rows) {
    if (row.replications >= 100 && !harness::within_level_band(row.rejection_rate, row.alpha)) {
      std::cout << "FAIL level: " << row.dist << " K=" << row.clients << " d=" << row.dim << " rate "
                << row.rejection_rate << " outside [" << row.alpha / 10 << ", " << 2.1 * row.alpha << "]\n";
      ok = false;
    }
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_power(const GridOptions& o) {
  for (const auto& m : o.models) {
    if (m == "A") throw InvalidArgument("power: use models B, C or D (model A is the type1 subcommand)");
  }
  const auto table = harness::run_power(make_grid(o, o.models));
  std::cout << harness::to_text(table);
  const auto csv = harness::to_csv(table);
  write_outputs(o.out, harness::to_json(table), &csv);
  return kExitOk;
}

struct CltOptions {
  std::uint64_t seed = 1;
  std::vector<std::size_t> clients{1, 50, 500};
  std::size_t reps = 500;
  std::string out;
  std::size_t workers = 1;
};

int cmd_clt(const CltOptions& o) {
  const auto report = harness::run_clt_check(o.clients, o.reps, o.seed, o.workers);
  std::cout << harness::to_text(report);
  write_outputs(o.out, harness::to_json(report), nullptr);
  return report.pass() ? kExitOk : kExitCheckFailed;
}

struct ConcentrationOptions {
  harness::ConcentrationConfig config;
  std::string generator = "uniform";
  std::string out;
};

int cmd_concentration(ConcentrationOptions o) {
  o.config.generator = *harness::parse_generator(o.generator);
  const auto report = harness::run_concentration_check(o.config);
  std::cout << harness::to_text(report);
  write_outputs(o.out, harness::to_json(report), nullptr);
  return report.pass() ? kExitOk : kExitCheckFailed;
}

struct DriftOptions {
  harness::DriftExperiment experiment;
  std::string out;
};

int cmd_drift(const DriftOptions& o) {
  const auto table = harness::run_drift(o.experiment);
  std::cout << harness::to_text(table);
  const auto csv = harness::to_csv(table);
  write_outputs(o.out, harness::to_json(table), &csv);
  if (o.experiment.drift.epsilon < 1.0 && table.itd_row().power < table.max_client_power()) {
    std::cout << "FAIL drift: ITD power below the best single client\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::uint32_t id = 0;
  std::string data;
  std::string x_csv;
  std::string y_csv;
  std::size_t sessions = 1;
  std::size_t accept_timeout_ms = 300000;
  std::size_t idle_timeout_ms = protocol::kDefaultReplyTimeout.count();
};

ClientSample load_served_client(const ServeOptions& o) {
  const ClientId id{o.id};
  if (!o.x_csv.empty() || !o.y_csv.empty()) {
    if (o.x_csv.empty() || o.y_csv.empty()) throw InvalidArgument("serve-client: give both --x and --y");
    return synth::load_client_csv(id, o.x_csv, o.y_csv);
  }
  if (o.data.empty()) throw InvalidArgument("serve-client: give --data DIR or --x/--y files");
  for (auto& c : synth::load_clients_dir(o.data)) {
    if (c.id() == id) return c;
  }
  throw InvalidArgument("serve-client: no client " + std::to_string(o.id) + " in " + o.data);
}

int cmd_serve(const ServeOptions& o) {
  protocol::ClientEndpoint endpoint(load_served_client(o));
  protocol::TcpListener listener(o.host, o.port);
  std::cout << "client " << o.id << " listening on " << o.host << ":" << listener.port() << std::endl;
  for (std::size_t s = 0; s < o.sessions; ++s) {
    auto channel = listener.accept(std::chrono::milliseconds(o.accept_timeout_ms));
    if (!channel) {
      std::cerr << "serve-client: no coordinator connected before the accept timeout\n";
      return kExitError;
    }
    endpoint.serve(*channel, std::chrono::milliseconds(o.idle_timeout_ms));
  }
  return kExitOk;
}

struct CoordinateOptions {
  GridOptions grid;
  std::vector<std::string> remotes;
  std::string data;
  std::size_t select = 0;  // 0: all clients
  std::string run_id = "run";
  std::string transcript;
  bool audit = false;
  std::size_t reply_timeout_ms = protocol::kDefaultReplyTimeout.count();
};

struct Remote {
  std::uint32_t id;
  std::size_t m, n;
  std::string host;
  std::uint16_t port;
};

Remote parse_remote(const std::string& s) {
  static const std::regex pattern(R"((\d+):(\d+):(\d+)@([^:]+):(\d+))");
  std::smatch match;
  if (!std::regex_match(s, match, pattern)) throw InvalidArgument("--client expects ID:M:N@HOST:PORT, got '" + s + "'");
  return {static_cast<std::uint32_t>(std::stoul(match[1].str())), std::stoul(match[2].str()),
          std::stoul(match[3].str()), match[4].str(), static_cast<std::uint16_t>(std::stoul(match[5].str()))};
}

json summary_json(const permtest::TestReport& r) {
  json per_client = json::array();
  for (const auto& v : r.observed.per_client)
    per_client.push_back({{"client_id", to_underlying(v.client)}, {"w2_squared", v.value}});
  return {{"observed", r.observed.value}, {"critical_value", r.critical_value}, {"p_value", r.p_value},
          {"alpha", r.alpha}, {"reject", r.reject}, {"per_client", per_client}};
}

int cmd_coordinate(const CoordinateOptions& o) {
  const auto& g = o.grid;
  protocol::CoordinatorConfig config;
  config.test = {g.alpha, g.bk, g.b, g.seed};
  config.run_id = o.run_id;
  config.reply_timeout = std::chrono::milliseconds(o.reply_timeout_ms);

  std::unique_ptr<protocol::Transcript> transcript;
  if (!o.transcript.empty()) {
    transcript = std::make_unique<protocol::Transcript>(o.transcript);
  } else if (o.audit) {
    transcript = std::make_unique<protocol::Transcript>();
  }

  protocol::RunOutcome outcome;
  if (!o.remotes.empty()) {
    std::vector<std::unique_ptr<protocol::SocketChannel>> channels;
    std::vector<protocol::RegistryEntry> registry;
    for (const auto& entry : o.remotes) {
      const auto r = parse_remote(entry);
      channels.push_back(protocol::connect_tcp(r.host, r.port, config.reply_timeout));
      registry.push_back({ClientId{r.id}, r.m, r.n, channels.back().get()});
    }
    config.clients = o.select == 0 ? registry.size() : o.select;
    outcome = protocol::coordinator_run(config, registry, transcript.get());
    for (auto& ch : channels) ch->close();
  } else {
    std::vector<ClientSample> clients;
    if (!o.data.empty()) {
      clients = synth::load_clients_dir(o.data);
    } else {
      synth::ModelConfig mc;
      mc.model = to_model(g.models.front());
      mc.dist = to_dist(g.dists.front());
      mc.clients = g.clients.front();
      mc.dim = g.dims.front();
      mc.m = g.m;
      mc.n = g.n;
      mc.shift_sd = g.shift_sd;
      mc.seed = g.seed;
      clients = synth::sample_model(mc);
    }
    config.clients = o.select == 0 ? clients.size() : o.select;
    if (g.transport == "socket") {
      outcome = protocol::run_local_sockets(clients, config, transcript.get());
    } else {
      outcome = protocol::run_loopback(clients, config, transcript.get());
    }
  }

  if (!outcome.completed()) {
    std::cout << "run aborted: " << outcome.abort_reason << "\nmissing clients:";
    for (auto id : outcome.missing) std::cout << ' ' << to_underlying(id);
    std::cout << '\n';
    return kExitError;
  }
  const auto& report = *outcome.report;
  std::cout << "ITD^2 " << report.observed.value << "  critical value " << report.critical_value << "  p-value "
            << report.p_value << "  " << (report.reject ? "reject H0" : "fail to reject H0") << '\n';
  for (const auto& v : report.observed.per_client)
    std::cout << "  client " << to_underlying(v.client) << "  W2^2 " << v.value << '\n';
  write_outputs(g.out, {{"summary", summary_json(report)}, {"report", protocol::report_to_json(report)}}, nullptr);

  if (o.audit) {
    const auto issues = protocol::audit_transcript(*transcript);
    for (const auto& issue : issues) std::cout << "audit: " << issue << '\n';
    std::cout << "audit: " << transcript->entries().size() << " frames, " << issues.size() << " violations\n";
    if (!issues.empty()) return kExitCheckFailed;
  }
  return kExitOk;
}

struct GenerateOptions {
  GridOptions grid;
  std::string dir;
};

int cmd_generate(const GenerateOptions& o) {
  const auto& g = o.grid;
  synth::ModelConfig mc;
  mc.model = to_model(g.models.front());
  mc.dist = to_dist(g.dists.front());
  mc.clients = g.clients.front();
  mc.dim = g.dims.front();
  mc.m = g.m;
  mc.n = g.n;
  mc.shift_sd = g.shift_sd;
  mc.seed = g.seed;
  const auto clients = synth::sample_model(mc);
  synth::write_clients_dir(o.dir, clients);
  std::cout << "wrote " << clients.size() << " clients to " << o.dir << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed two-sample testing with the integrated transportation distance"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GridOptions type1;
  auto* type1_cmd = app.add_subcommand("type1", "Type I error of the permutation test under model A");
  add_grid_options(type1_cmd, type1, false);

  GridOptions power;
  power.clients = {1, 2, 5};
  auto* power_cmd = app.add_subcommand("power", "Power under models B to D");
  add_grid_options(power_cmd, power, true);

  CltOptions clt;
  auto* clt_cmd = app.add_subcommand("clt", "Central limit check on a closed-form Gaussian kernel");
  flag(clt_cmd, "--seed", clt.seed, "Root seed");
  list_flag(clt_cmd, "--K", clt.clients, "Client counts");
  flag(clt_cmd, "--reps", clt.reps, "Replications per K");
  flag(clt_cmd, "--out", clt.out, "Write PATH.json");
  flag(clt_cmd, "--workers", clt.workers, "Worker threads");

  ConcentrationOptions conc;
  auto* conc_cmd = app.add_subcommand("concentration", "Empirical tail of ITD^2 against the deviation bound");
  flag(conc_cmd, "--seed", conc.config.seed, "Root seed");
  flag(conc_cmd, "--K", conc.config.clients, "Clients");
  flag(conc_cmd, "--d", conc.config.dim, "Dimension");
  flag(conc_cmd, "--m", conc.config.m, "X sample size per client");
  flag(conc_cmd, "--n", conc.config.n, "Y sample size per client");
  flag(conc_cmd, "--reps", conc.config.replications, "Replications");
  list_flag(conc_cmd, "--t", conc.config.thresholds, "Deviation thresholds");
  flag(conc_cmd, "--generator", conc.generator, "Data generator")->check(CLI::IsMember({"uniform", "normal"}));
  flag(conc_cmd, "--out", conc.out, "Write PATH.json");
  flag(conc_cmd, "--workers", conc.config.workers, "Worker threads");

  DriftOptions drift;
  auto& de = drift.experiment;
  auto* drift_cmd = app.add_subcommand("drift", "Per-client and integrated power under mixture drift");
  flag(drift_cmd, "--seed", de.seed, "Root seed");
  flag(drift_cmd, "--alpha", de.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  flag(drift_cmd, "--K", de.drift.clients, "Clients");
  flag(drift_cmd, "--epsilon", de.drift.epsilon, "Probability a Y point comes from the own component")
      ->check(CLI::Range(0.0, 1.0));
  flag(drift_cmd, "--d", de.drift.dim, "Dimension");
  flag(drift_cmd, "--m", de.drift.m, "X sample size per client");
  flag(drift_cmd, "--n", de.drift.n, "Y sample size per client");
  flag(drift_cmd, "--Bk", de.local_permutations, "Permutations per client");
  flag(drift_cmd, "--B", de.global_permutations, "Aggregated permutations");
  flag(drift_cmd, "--reps", de.replications, "Replications");
  flag(drift_cmd, "--out", drift.out, "Write PATH.json and PATH.csv");
  flag(drift_cmd, "--workers", de.workers, "Worker threads");
  drift_cmd->add_flag("--timing", de.timing, "Record wall time (output is then not reproducible)");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve-client", "Serve one client's data to a coordinator over TCP");
  flag(serve_cmd, "--host", serve.host, "Listen address");
  flag(serve_cmd, "--port", serve.port, "Listen port (0 picks a free port)");
  flag(serve_cmd, "--id", serve.id, "Client id");
  flag(serve_cmd, "--data", serve.data, "Directory of client_<id>_{x,y}.csv files");
  serve_cmd->add_option("--x", serve.x_csv, "CSV of X points");
  serve_cmd->add_option("--y", serve.y_csv, "CSV of Y points");
  serve_cmd->add_option("--sessions", serve.sessions, "Coordinator connections to serve")->capture_default_str();
  serve_cmd->add_option("--accept-timeout-ms", serve.accept_timeout_ms, "Wait for a coordinator")
      ->capture_default_str();
  serve_cmd->add_option("--idle-timeout-ms", serve.idle_timeout_ms, "Wait for the next request")
      ->capture_default_str();

  CoordinateOptions coord;
  coord.grid.clients = {5};
  coord.grid.models = {"A"};
  coord.grid.transport = "loopback";
  auto* coord_cmd = app.add_subcommand("coordinate", "Run one distributed test as the coordinator");
  add_grid_options(coord_cmd, coord.grid, true);
  coord_cmd->add_option("--client", coord.remotes, "Remote client ID:M:N@HOST:PORT (repeatable)");
  coord_cmd->add_option("--data", coord.data, "Simulate clients from a client_<id>_{x,y}.csv directory");
  coord_cmd->add_option("--select", coord.select, "Clients to select (default: all)");
  coord_cmd->add_option("--run-id", coord.run_id, "Run identifier")->capture_default_str();
  coord_cmd->add_option("--transcript", coord.transcript, "Dump every frame to this JSON-lines file");
  coord_cmd->add_flag("--audit", coord.audit, "Check every frame against the privacy schema");
  coord_cmd->add_option("--reply-timeout-ms", coord.reply_timeout_ms, "Per-reply timeout")->capture_default_str();

  GenerateOptions gen;
  gen.grid.clients = {5};
  gen.grid.models = {"A"};
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic client samples as CSV files");
  add_grid_options(gen_cmd, gen.grid, true);
  gen_cmd->add_option("--dir", gen.dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*type1_cmd) return cmd_type1(type1);
    if (*power_cmd) return cmd_power(power);
    if (*clt_cmd) return cmd_clt(clt);
    if (*conc_cmd) return cmd_concentration(conc);
    if (*drift_cmd) return cmd_drift(drift);
    if (*serve_cmd) return cmd_serve(serve);
    if (*coord_cmd) return cmd_coordinate(coord);
    if (*gen_cmd) return cmd_generate(gen);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
