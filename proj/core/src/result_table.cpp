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

#include "itd/result_table.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <map>
#include <sstream>

#include "itd/error.hpp"

namespace itd::harness {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidArgument("result table: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

struct CsvDocument {
  std::map<std::string, std::string, std::less<>> meta;
  std::vector<std::string_view> header;
  std::vector<std::vector<std::string_view>> rows;
};

CsvDocument parse_csv(std::string_view text) {
  CsvDocument doc;
  bool have_header = false;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw InvalidArgument("result table: bad metadata line");
      doc.meta.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
      continue;
    }
    auto cells = split(line, ',');
    if (!have_header) {
      doc.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != doc.header.size()) throw InvalidArgument("result table: ragged CSV row");
      doc.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw InvalidArgument("result table: missing header row");
  return doc;
}

const std::string& meta_at(const CsvDocument& doc, std::string_view key) {
  const auto it = doc.meta.find(key);
  if (it == doc.meta.end()) throw InvalidArgument("result table: missing metadata '" + std::string(key) + "'");
  return it->second;
}

std::size_t column(const CsvDocument& doc, std::string_view name) {
  const auto it = std::find(doc.header.begin(), doc.header.end(), name);
  if (it == doc.header.end()) throw InvalidArgument("result table: missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - doc.header.begin());
}

std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      os << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

const DriftRow& DriftTable::itd_row() const {
  const auto it = std::find_if(rows.begin(), rows.end(), [](const DriftRow& r) { return r.label == "ITD"; });
  if (it == rows.end()) throw InvalidArgument("drift table has no ITD row");
  return *it;
}

double DriftTable::max_client_power() const {
  double best = 0.0;
  for (const auto& r : rows) {
    if (r.label != "ITD") best = std::max(best, r.power);
  }
  return best;
}

std::string to_text(const ResultTable& table) {
  const bool timed = std::any_of(table.rows.begin(), table.rows.end(),
                                 [](const ResultRow& r) { return r.wall_time.has_value(); });
  std::vector<std::string> header{"model", "dist", "K", "d", "m", "n", "alpha", "B_k", "B", "reps", "rate"};
  if (timed) header.push_back("wall_s");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows) {
    std::vector<std::string> cells{r.model,
                                   r.dist,
                                   std::to_string(r.clients),
                                   std::to_string(r.dim),
                                   std::to_string(r.m),
                                   std::to_string(r.n),
                                   format_double(r.alpha),
                                   std::to_string(r.local_permutations),
                                   std::to_string(r.global_permutations),
                                   std::to_string(r.replications),
                                   fixed(r.rejection_rate, 3)};
    if (timed) cells.push_back(r.wall_time ? fixed(*r.wall_time, 2) : "");
    rows.push_back(std::move(cells));
  }
  return table.experiment + " (seed " + std::to_string(table.seed) + ")\n" + render(header, rows);
}

std::string to_text(const DriftTable& table) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows)
    rows.push_back({r.label, std::to_string(r.rejections), std::to_string(r.replications), fixed(r.power, 3)});
  std::ostringstream head;
  head << "drift (seed " << table.seed << ", K " << table.clients << ", epsilon "
       << format_double(table.epsilon) << ", d " << table.dim << ", m " << table.m << ", n " << table.n
       << ")\n";
  return head.str() + render({"sample", "rejections", "reps", "power"}, rows);
}

std::string to_csv(const ResultTable& table) {
  const bool timed = std::any_of(table.rows.begin(), table.rows.end(),
                                 [](const ResultRow& r) { return r.wall_time.has_value(); });
  std::ostringstream os;
  os << "# experiment=" << table.experiment << "\n# seed=" << table.seed << "\n# version=" << table.version
     << "\nmodel,dist,K,d,m,n,alpha,B_k,B,rejections,replications,rejection_rate";
  if (timed) os << ",wall_time";
  os << '\n';
  for (const auto& r : table.rows) {
    os << r.model << ',' << r.dist << ',' << r.clients << ',' << r.dim << ',' << r.m << ',' << r.n << ','
       << format_double(r.alpha) << ',' << r.local_permutations << ',' << r.global_permutations << ','
       << r.rejections << ',' << r.replications << ',' << format_double(r.rejection_rate);
    if (timed) os << ',' << (r.wall_time ? format_double(*r.wall_time) : "");
    os << '\n';
  }
  return os.str();
}

ResultTable result_table_from_csv(std::string_view text) {
  const auto doc = parse_csv(text);
  ResultTable t;
  t.experiment = meta_at(doc, "experiment");
  t.seed = parse_number<std::uint64_t>(meta_at(doc, "seed"), "seed");
  t.version = meta_at(doc, "version");
  const auto has_time = std::find(doc.header.begin(), doc.header.end(), "wall_time") != doc.header.end();
  const std::size_t c_model = column(doc, "model"), c_dist = column(doc, "dist"), c_k = column(doc, "K"),
                    c_d = column(doc, "d"), c_m = column(doc, "m"), c_n = column(doc, "n"),
                    c_alpha = column(doc, "alpha"), c_bk = column(doc, "B_k"), c_b = column(doc, "B"),
                    c_rej = column(doc, "rejections"), c_reps = column(doc, "replications"),
                    c_rate = column(doc, "rejection_rate");
  for (const auto& cells : doc.rows) {
    ResultRow r;
    r.model = std::string(cells[c_model]);
    r.dist = std::string(cells[c_dist]);
    r.clients = parse_number<std::size_t>(cells[c_k], "K");
    r.dim = parse_number<std::size_t>(cells[c_d], "d");
    r.m = parse_number<std::size_t>(cells[c_m], "m");
    r.n = parse_number<std::size_t>(cells[c_n], "n");
    r.alpha = parse_number<double>(cells[c_alpha], "alpha");
    r.local_permutations = parse_number<std::size_t>(cells[c_bk], "B_k");
    r.global_permutations = parse_number<std::size_t>(cells[c_b], "B");
    r.rejections = parse_number<std::size_t>(cells[c_rej], "rejections");
    r.replications = parse_number<std::size_t>(cells[c_reps], "replications");
    r.rejection_rate = parse_number<double>(cells[c_rate], "rejection_rate");
    if (has_time) {
      const auto cell = cells[column(doc, "wall_time")];
      if (!cell.empty()) r.wall_time = parse_number<double>(cell, "wall_time");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::string to_csv(const DriftTable& table) {
  std::ostringstream os;
  os << "# seed=" << table.seed << "\n# version=" << table.version << "\n# K=" << table.clients
     << "\n# epsilon=" << format_double(table.epsilon) << "\n# d=" << table.dim << "\n# m=" << table.m
     << "\n# n=" << table.n << "\n# alpha=" << format_double(table.alpha) << "\n# B_k=" << table.local_permutations
     << "\n# B=" << table.global_permutations << '\n';
  if (table.wall_time) os << "# wall_time=" << format_double(*table.wall_time) << '\n';
  os << "label,rejections,replications,power\n";
  for (const auto& r : table.rows)
    os << r.label << ',' << r.rejections << ',' << r.replications << ',' << format_double(r.power) << '\n';
  return os.str();
}

DriftTable drift_table_from_csv(std::string_view text) {
  const auto doc = parse_csv(text);
  DriftTable t;
  t.seed = parse_number<std::uint64_t>(meta_at(doc, "seed"), "seed");
  t.version = meta_at(doc, "version");
  t.clients = parse_number<std::size_t>(meta_at(doc, "K"), "K");
  t.epsilon = parse_number<double>(meta_at(doc, "epsilon"), "epsilon");
  t.dim = parse_number<std::size_t>(meta_at(doc, "d"), "d");
  t.m = parse_number<std::size_t>(meta_at(doc, "m"), "m");
  t.n = parse_number<std::size_t>(meta_at(doc, "n"), "n");
  t.alpha = parse_number<double>(meta_at(doc, "alpha"), "alpha");
  t.local_permutations = parse_number<std::size_t>(meta_at(doc, "B_k"), "B_k");
  t.global_permutations = parse_number<std::size_t>(meta_at(doc, "B"), "B");
  if (const auto it = doc.meta.find("wall_time"); it != doc.meta.end())
    t.wall_time = parse_number<double>(it->second, "wall_time");
  const std::size_t c_label = column(doc, "label"), c_rej = column(doc, "rejections"),
                    c_reps = column(doc, "replications"), c_power = column(doc, "power");
  for (const auto& cells : doc.rows) {
    t.rows.push_back({std::string(cells[c_label]), parse_number<std::size_t>(cells[c_rej], "rejections"),
                      parse_number<std::size_t>(cells[c_reps], "replications"),
                      parse_number<double>(cells[c_power], "power")});
  }
  return t;
}

json to_json(const ResultTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json row{{"model", r.model},
             {"dist", r.dist},
             {"K", r.clients},
             {"d", r.dim},
             {"m", r.m},
             {"n", r.n},
             {"alpha", r.alpha},
             {"B_k", r.local_permutations},
             {"B", r.global_permutations},
             {"rejections", r.rejections},
             {"replications", r.replications},
             {"rejection_rate", r.rejection_rate}};
    if (r.wall_time) row["wall_time"] = *r.wall_time;
    rows.push_back(std::move(row));
  }
  return {{"experiment", table.experiment}, {"seed", table.seed}, {"version", table.version}, {"rows", rows}};
}

ResultTable result_table_from_json(const json& j) {
  try {
    ResultTable t;
    t.experiment = j.at("experiment").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.version = j.at("version").get<std::string>();
    for (const auto& row : j.at("rows")) {
      ResultRow r;
      r.model = row.at("model").get<std::string>();
      r.dist = row.at("dist").get<std::string>();
      r.clients = row.at("K").get<std::size_t>();
      r.dim = row.at("d").get<std::size_t>();
      r.m = row.at("m").get<std::size_t>();
      r.n = row.at("n").get<std::size_t>();
      r.alpha = row.at("alpha").get<double>();
      r.local_permutations = row.at("B_k").get<std::size_t>();
      r.global_permutations = row.at("B").get<std::size_t>();
      r.rejections = row.at("rejections").get<std::size_t>();
      r.replications = row.at("replications").get<std::size_t>();
      r.rejection_rate = row.at("rejection_rate").get<double>();
      if (row.contains("wall_time")) r.wall_time = row.at("wall_time").get<double>();
      t.rows.push_back(std::move(r));
    }
    return t;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("result table JSON: ") + e.what());
  }
}

json to_json(const DriftTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"label", r.label}, {"rejections", r.rejections}, {"replications", r.replications},
                    {"power", r.power}});
  json j{{"experiment", "drift"},
         {"seed", table.seed},
         {"version", table.version},
         {"K", table.clients},
         {"epsilon", table.epsilon},
         {"d", table.dim},
         {"m", table.m},
         {"n", table.n},
         {"alpha", table.alpha},
         {"B_k", table.local_permutations},
         {"B", table.global_permutations},
         {"rows", rows}};
  if (table.wall_time) j["wall_time"] = *table.wall_time;
  return j;
}

DriftTable drift_table_from_json(const json& j) {
  try {
    DriftTable t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.version = j.at("version").get<std::string>();
    t.clients = j.at("K").get<std::size_t>();
    t.epsilon = j.at("epsilon").get<double>();
    t.dim = j.at("d").get<std::size_t>();
    t.m = j.at("m").get<std::size_t>();
    t.n = j.at("n").get<std::size_t>();
    t.alpha = j.at("alpha").get<double>();
    t.local_permutations = j.at("B_k").get<std::size_t>();
    t.global_permutations = j.at("B").get<std::size_t>();
    if (j.contains("wall_time")) t.wall_time = j.at("wall_time").get<double>();
    for (const auto& row : j.at("rows")) {
      t.rows.push_back({row.at("label").get<std::string>(), row.at("rejections").get<std::size_t>(),
                        row.at("replications").get<std::size_t>(), row.at("power").get<double>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("drift table JSON: ") + e.what());
  }
}

}  // namespace itd::harness
