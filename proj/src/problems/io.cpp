// Copyright 2026 The gendfl Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <string>

#include "gendfl/problems.hpp"

namespace gendfl::problems {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad_row(const std::string& path, std::size_t line_no,
                          const std::string& why) {
  throw SchemaError(path + ":" + std::to_string(line_no) + ": " + why);
}

long long parse_int(const std::string& s, const std::string& path,
                    std::size_t line_no, const char* field) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) {
    bad_row(path, line_no, std::string("malformed ") + field + " '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const std::string& path,
                  std::size_t line_no, const char* field) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno != 0 || !std::isfinite(v)) {
    bad_row(path, line_no, std::string("malformed ") + field + " '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<DayPrices> read_energy_prices(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "day_id,slot,price") {
    throw SchemaError(path + ":1: expected header 'day_id,slot,price'");
  }
  std::vector<DayPrices> days;
  long long day = 0;
  std::size_t next_slot = 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) bad_row(path, line_no, "expected 3 fields");
    const long long d = parse_int(f[0], path, line_no, "day_id");
    const long long slot = parse_int(f[1], path, line_no, "slot");
    const double price = parse_real(f[2], path, line_no, "price");
    if (slot < 1 || slot > static_cast<long long>(kSlotsPerDay)) {
      bad_row(path, line_no, "slot must lie in 1..48");
    }
    if (days.empty() || next_slot > kSlotsPerDay) {
      if (!days.empty() && d <= day) {
        bad_row(path, line_no, "non-monotone timestamps (day_id not increasing)");
      }
      if (!days.empty() && d != day + 1) {
        bad_row(path, line_no, "missing day " + std::to_string(day + 1));
      }
      days.emplace_back();
      day = d;
      next_slot = 1;
    }
    if (d != day) {
      if (d < day) bad_row(path, line_no, "non-monotone timestamps");
      bad_row(path, line_no,
              "day " + std::to_string(day) + " ends after slot " +
                  std::to_string(next_slot - 1));
    }
    if (static_cast<std::size_t>(slot) != next_slot) {
      if (static_cast<std::size_t>(slot) < next_slot) {
        bad_row(path, line_no, "non-monotone timestamps (slot not increasing)");
      }
      bad_row(path, line_no, "missing slot " + std::to_string(next_slot));
    }
    days.back().push_back(price);
    ++next_slot;
  }
  if (!days.empty() && days.back().size() != kSlotsPerDay) {
    throw SchemaError(path + ": last day has " +
                      std::to_string(days.back().size()) + " of 48 slots");
  }
  return days;
}

void write_energy_csv(const std::string& path,
                      const std::vector<DayPrices>& days) {
  std::ofstream out = open_out(path);
  out << "day_id,slot,price\n";
  for (std::size_t d = 0; d < days.size(); ++d) {
    if (days[d].size() != kSlotsPerDay) {
      throw ShapeError("energy day must have 48 prices");
    }
    for (std::size_t s = 0; s < kSlotsPerDay; ++s)
      out << d << ',' << (s + 1) << ',' << fmt17(days[d][s]) << '\n';
  }
}

ProblemSpec energy_spec() {
  ProblemSpec spec;
  spec.family = Family::kEnergy;
  spec.d_x = kSlotsPerDay;
  spec.d_c = kSlotsPerDay;
  spec.set = solver::schedule(Vec(kSlotsPerDay, 0.0), Vec(kSlotsPerDay, 1.0),
                              24.0);
  spec.sign = 1.0;
  return spec;
}

Generated energy_instances(const std::vector<DayPrices>& days) {
  if (days.size() < 2) {
    throw SchemaError("energy data needs at least two days to form a pair");
  }
  Generated g;
  g.spec = energy_spec();
  const Eigen::Index n = static_cast<Eigen::Index>(days.size() - 1);
  g.data.x.resize(n, kSlotsPerDay);
  g.data.c.resize(n, kSlotsPerDay);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
      const auto j = static_cast<Eigen::Index>(s);
      g.data.x(i, j) = days[static_cast<std::size_t>(i)][s];
      g.data.c(i, j) = days[static_cast<std::size_t>(i) + 1][s];
    }
  }
  return g;
}

Generated load_energy_csv(const std::string& path) {
  return energy_instances(read_energy_prices(path));
}

std::vector<DayPrices> synthetic_energy_prices(std::size_t days,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DayPrices> out(days, DayPrices(kSlotsPerDay));
  double level = 0.0;
  for (auto& day : out) {
    level = 0.7 * level + 4.0 * normal(rng);
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(s) /
                           static_cast<double>(kSlotsPerDay);
      const double p = 30.0 - 10.0 * std::cos(phase) + level +
                       3.0 * normal(rng);
      day[s] = std::max(p, 1.0);
    }
  }
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  if (data.x.rows() != data.c.rows()) {
    throw ShapeError("dataset x and c row counts differ");
  }
  std::ofstream out = open_out(path);
  out << "instance_id,kind,index,value\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j)
      out << i << ",x," << j << ',' << fmt17(data.x(i, j)) << '\n';
    for (Eigen::Index j = 0; j < data.c.cols(); ++j)
      out << i << ",c," << j << ',' << fmt17(data.c(i, j)) << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "instance_id,kind,index,value") {
    throw SchemaError(path +
                      ":1: expected header 'instance_id,kind,index,value'");
  }
  std::vector<Vec> xs, cs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) bad_row(path, line_no, "expected 4 fields");
    const long long id = parse_int(f[0], path, line_no, "instance_id");
    const long long idx = parse_int(f[2], path, line_no, "index");
    const double v = parse_real(f[3], path, line_no, "value");
    if (f[1] != "x" && f[1] != "c") bad_row(path, line_no, "kind must be x or c");
    if (id < 0 || static_cast<std::size_t>(id) > xs.size()) {
      bad_row(path, line_no, "instance ids must be consecutive from 0");
    }
    if (static_cast<std::size_t>(id) == xs.size()) {
      xs.emplace_back();
      cs.emplace_back();
    } else if (static_cast<std::size_t>(id) + 1 != xs.size()) {
      bad_row(path, line_no, "instance rows must be grouped and sorted");
    }
    Vec& target = f[1] == "x" ? xs.back() : cs.back();
    if (idx != static_cast<long long>(target.size())) {
      bad_row(path, line_no, "index must count up from 0 within each kind");
    }
    target.push_back(v);
  }
  if (xs.empty()) throw SchemaError(path + ": no instances");
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(xs.size()),
             static_cast<Eigen::Index>(xs[0].size()));
  d.c.resize(static_cast<Eigen::Index>(cs.size()),
             static_cast<Eigen::Index>(cs[0].size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != xs[0].size() || cs[i].size() != cs[0].size()) {
      throw SchemaError(path + ": instance " + std::to_string(i) +
                        " has inconsistent dimensions");
    }
    for (std::size_t j = 0; j < xs[i].size(); ++j)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
    for (std::size_t j = 0; j < cs[i].size(); ++j)
      d.c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cs[i][j];
  }
  return d;
}

}  // namespace gendfl::problems
