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

#include <charconv>
#include <fstream>
#include <map>
#include <regex>

#include "itd/error.hpp"
#include "itd/synth.hpp"

namespace itd::synth {

namespace {

double parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw InvalidArgument(path.string() + ":" + std::to_string(line) + ": not a number: '" +
                          std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": missing header row");
  std::vector<std::vector<double>> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> p;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      p.push_back(parse_field(rest.substr(0, comma), path, line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!points.empty() && p.size() != points.front().size())
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": inconsistent column count");
    points.push_back(std::move(p));
  }
  if (points.empty()) throw InvalidArgument(path.string() + ": no data rows");
  return points;
}

void write_points_csv(const std::filesystem::path& path, const transport::PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (std::size_t j = 0; j < cloud.dim(); ++j) out << (j ? "," : "") << "x" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      // Shortest round-trip representation.
      const auto res = std::to_chars(buf, buf + sizeof buf, p[j]);
      out << (j ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

ClientSample load_client_csv(ClientId id, const std::filesystem::path& x_csv,
                             const std::filesystem::path& y_csv) {
  return ClientSample(id, transport::PointCloud::from_points(read_points_csv(x_csv)),
                      transport::PointCloud::from_points(read_points_csv(y_csv)));
}

std::vector<ClientSample> load_clients_dir(const std::filesystem::path& dir) {
  static const std::regex pattern(R"(client_(\d+)_([xy])\.csv)");
  std::map<std::uint32_t, std::pair<std::filesystem::path, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch match;
    if (!std::regex_match(name, match, pattern)) continue;
    const auto id = static_cast<std::uint32_t>(std::stoul(match[1].str()));
    auto& slot = found[id];
    (match[2].str() == "x" ? slot.first : slot.second) = entry.path();
  }
  if (found.empty()) throw InvalidArgument(dir.string() + ": no client_<id>_{x,y}.csv files");
  std::vector<ClientSample> out;
  for (const auto& [id, paths] : found) {
    if (paths.first.empty() || paths.second.empty())
      throw InvalidArgument(dir.string() + ": client " + std::to_string(id) +
                            " is missing its x or y file");
    out.push_back(load_client_csv(ClientId{id}, paths.first, paths.second));
  }
  return out;
}

void write_clients_dir(const std::filesystem::path& dir, const std::vector<ClientSample>& clients) {
  std::filesystem::create_directories(dir);
  for (const auto& c : clients) {
    const std::string stem = "client_" + std::to_string(to_underlying(c.id()));
    write_points_csv(dir / (stem + "_x.csv"), c.xs());
    write_points_csv(dir / (stem + "_y.csv"), c.ys());
  }
}

}  // namespace itd::synth
