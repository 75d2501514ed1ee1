// Copyright 2026 The lmp Authors
//
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

#include "lmp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lmp {

namespace fs = std::filesystem;

namespace {

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      // numeric arrays stay on one line
      bool flat = true;
      for (const auto& e : j)
        if (e.is_structured()) flat = false;
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_rec(e, indent, depth + 1, out);
      }
      if (!flat && !j.empty()) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += format_double(v);
      else
        out += '"' + format_double(v) + '"';
      return;
    }
    default:
      out += j.dump();
  }
}

Json dist_to_json(const Distribution& d) {
  return Json{{"mean", d.mean}, {"variance", d.variance}, {"lo", d.lo}, {"hi", d.hi}};
}

Distribution dist_from_json(const Json& j) {
  Distribution d;
  d.mean = json_to_double(j.at("mean"));
  d.variance = json_to_double(j.at("variance"));
  d.lo = json_to_double(j.at("lo"));
  d.hi = json_to_double(j.at("hi"));
  return d;
}

template <class F>
auto parse_guard(const fs::path& where, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(where.string() + ": " + e.what());
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  out += '\n';
  return out;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": unparsable JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

double json_to_double(const Json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::nan("");
    throw DataError("expected a number, got '" + s + "'");
  }
  if (!j.is_number()) throw DataError("expected a number");
  return j.get<double>();
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector json_to_vector(const Json& j) {
  if (!j.is_array()) throw DataError("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = json_to_double(j[i]);
  return v;
}

Json instance_to_json(const McInstance& inst) {
  Json arcs = Json::array(), coms = Json::array(), routing = Json::array();
  for (const Arc& a : inst.arcs)
    arcs.push_back(Json::array({a.tail, a.head, a.capacity, a.fixed_cost}));
  for (const Commodity& c : inst.commodities)
    coms.push_back(Json::array({c.origin, c.destination, c.volume}));
  for (int a = 0; a < inst.num_arcs(); ++a)
    routing.push_back(vector_to_json(inst.routing_cost.row(a).transpose()));
  return Json{{"type", "mc"},
              {"nodes", inst.num_nodes},
              {"arcs", arcs},
              {"commodities", coms},
              {"routing_costs", routing}};
}

Json instance_to_json(const GaInstance& inst) {
  Json profit = Json::array(), weight = Json::array();
  for (int j = 0; j < inst.num_bins(); ++j) {
    profit.push_back(vector_to_json(inst.profit.row(j).transpose()));
    weight.push_back(vector_to_json(inst.weight.row(j).transpose()));
  }
  return Json{{"type", "ga"},
              {"capacities", vector_to_json(inst.capacity)},
              {"profits", profit},
              {"weights", weight}};
}

Problem problem_from_json(const Json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "mc") {
      McInstance m;
      m.num_nodes = j.at("nodes").get<int>();
      for (const auto& a : j.at("arcs")) {
        Arc arc;
        arc.tail = a.at(0).get<int>();
        arc.head = a.at(1).get<int>();
        arc.capacity = json_to_double(a.at(2));
        arc.fixed_cost = json_to_double(a.at(3));
        m.arcs.push_back(arc);
      }
      for (const auto& c : j.at("commodities")) {
        Commodity com;
        com.origin = c.at(0).get<int>();
        com.destination = c.at(1).get<int>();
        com.volume = json_to_double(c.at(2));
        m.commodities.push_back(com);
      }
      const auto& routing = j.at("routing_costs");
      if (routing.size() != m.arcs.size())
        throw DataError("routing cost matrix needs one row per arc");
      m.routing_cost.resize(m.num_arcs(), m.num_commodities());
      for (int a = 0; a < m.num_arcs(); ++a) {
        const Vector row = json_to_vector(routing[a]);
        if (row.size() != m.num_commodities())
          throw DataError("routing cost row length != commodity count");
        m.routing_cost.row(a) = row.transpose();
      }
      return make_problem(std::move(m));
    }
    if (type == "ga") {
      GaInstance g;
      g.capacity = json_to_vector(j.at("capacities"));
      const auto& p = j.at("profits");
      const auto& w = j.at("weights");
      if (p.size() != static_cast<std::size_t>(g.capacity.size()) ||
          w.size() != p.size())
        throw DataError("profit/weight matrices need one row per bin");
      const Eigen::Index items = p.empty() ? 0 : p[0].size();
      g.profit.resize(g.capacity.size(), items);
      g.weight.resize(g.capacity.size(), items);
      for (std::size_t b = 0; b < p.size(); ++b) {
        const Vector pr = json_to_vector(p[b]), wr = json_to_vector(w[b]);
        if (pr.size() != items || wr.size() != items)
          throw DataError("ragged profit/weight matrix");
        g.profit.row(b) = pr.transpose();
        g.weight.row(b) = wr.transpose();
      }
      return make_problem(std::move(g));
    }
    throw DataError("unknown instance type '" + type + "'");
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed instance: ") + e.what());
  }
}

void save_problem(const Problem& p, const fs::path& path) {
  const Json j = p.is_mc() ? instance_to_json(p.mc()) : instance_to_json(p.ga());
  write_text_file(path, dump_json(j));
}

Problem load_problem(const fs::path& path) {
  const Json j = read_json_file(path);
  try {
    return problem_from_json(j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string problem_hash(const Problem& p) {
  const Json j = p.is_mc() ? instance_to_json(p.mc()) : instance_to_json(p.ga());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump_json(j, -1))));
  return buf;
}

void save_multipliers(const fs::path& path, const std::string& hash,
                      const Vector& values) {
  write_text_file(path, dump_json(Json{{"problem_hash", hash},
                                       {"values", vector_to_json(values)}}));
}

Vector load_multipliers(const fs::path& path,
                        const std::optional<std::string>& expected_hash) {
  const Json j = read_json_file(path);
  return parse_guard(path, [&] {
    const std::string hash = j.at("problem_hash").get<std::string>();
    if (expected_hash && hash != *expected_hash)
      throw DataError(path.string() + ": multiplier file belongs to problem " +
                      hash + ", expected " + *expected_hash);
    return json_to_vector(j.at("values"));
  });
}

GenParams gen_params_from_json(const Json& j) {
  try {
    GenParams g;
    g.name = j.value("name", "");
    g.version = j.value("version", 1);
    const std::string type = j.at("type").get<std::string>();
    if (type == "mc") {
      McGenParams p;
      p.nodes = j.at("nodes").get<int>();
      p.arcs = j.at("arcs").get<int>();
      p.commodity_counts = j.at("commodity_counts").get<std::vector<int>>();
      p.capacity = dist_from_json(j.at("capacity"));
      p.fixed_cost = dist_from_json(j.at("fixed_cost"));
      for (const auto& t : j.at("types"))
        p.types.push_back({dist_from_json(t.at("volume")),
                           dist_from_json(t.at("routing_cost"))});
      if (j.contains("network_seed") && !j.at("network_seed").is_null())
        p.network_seed = j.at("network_seed").get<std::uint64_t>();
      p.retry_budget = j.value("retry_budget", 100);
      p.validate();
      g.params = p;
    } else if (type == "ga") {
      GaGenParams p;
      p.bins = j.at("bins").get<int>();
      p.items = j.at("items").get<int>();
      p.capacity = dist_from_json(j.at("capacity"));
      p.weight = dist_from_json(j.at("weight"));
      p.profit = dist_from_json(j.at("profit"));
      p.validate();
      g.params = p;
    } else {
      throw ParameterError("unknown preset type '" + type + "'");
    }
    return g;
  } catch (const Json::exception& e) {
    throw ParameterError(std::string("malformed generation parameters: ") +
                         e.what());
  }
}

Json gen_params_to_json(const GenParams& g) {
  Json j{{"name", g.name}, {"version", g.version}};
  if (const auto* p = std::get_if<McGenParams>(&g.params)) {
    j["type"] = "mc";
    j["nodes"] = p->nodes;
    j["arcs"] = p->arcs;
    j["commodity_counts"] = p->commodity_counts;
    j["capacity"] = dist_to_json(p->capacity);
    j["fixed_cost"] = dist_to_json(p->fixed_cost);
    Json types = Json::array();
    for (const auto& t : p->types)
      types.push_back({{"volume", dist_to_json(t.volume)},
                       {"routing_cost", dist_to_json(t.routing_cost)}});
    j["types"] = types;
    if (p->network_seed) j["network_seed"] = *p->network_seed;
    j["retry_budget"] = p->retry_budget;
  } else {
    const auto& q = std::get<GaGenParams>(g.params);
    j["type"] = "ga";
    j["bins"] = q.bins;
    j["items"] = q.items;
    j["capacity"] = dist_to_json(q.capacity);
    j["weight"] = dist_to_json(q.weight);
    j["profit"] = dist_to_json(q.profit);
  }
  return j;
}

fs::path preset_directory() {
  if (const char* env = std::getenv("LMP_PRESET_DIR")) return env;
#ifdef LMP_PRESET_DIR
  return LMP_PRESET_DIR;
#else
  return "presets";
#endif
}

GenParams load_preset(const std::string& name) {
  const fs::path path = preset_directory() / (name + ".json");
  if (!fs::exists(path))
    throw ParameterError("unknown preset '" + name + "' (looked in " +
                         path.string() + ")");
  return gen_params_from_json(read_json_file(path));
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == s) out.push_back(i);
  return out;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  Json list = Json::array();
  for (const ManifestEntry& e : m.entries) {
    Json j{{"path", e.path}, {"split", std::string(to_string(e.split))}};
    if (e.cr_path) j["cr_path"] = *e.cr_path;
    if (e.ref_dual_value) j["ref_dual_value"] = *e.ref_dual_value;
    if (e.ref_dual_provenance) j["ref_dual_provenance"] = *e.ref_dual_provenance;
    if (e.ref_multipliers_path)
      j["ref_multipliers_path"] = *e.ref_multipliers_path;
    list.push_back(j);
  }
  const Json doc{{"version", 1},
                 {"splits",
                  {{"train", m.train_fraction},
                   {"validation", m.validation_fraction},
                   {"test", m.test_fraction}}},
                 {"instances", list}};
  write_text_file(path, dump_json(doc));
}

DatasetManifest load_manifest(const fs::path& path) {
  const Json j = read_json_file(path);
  DatasetManifest m;
  m.directory = path.parent_path();
  parse_guard(path, [&] {
    const auto& s = j.at("splits");
    m.train_fraction = json_to_double(s.at("train"));
    m.validation_fraction = json_to_double(s.at("validation"));
    m.test_fraction = json_to_double(s.at("test"));
    for (const auto& e : j.at("instances")) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.split = parse_split(e.at("split").get<std::string>());
      if (e.contains("cr_path")) entry.cr_path = e["cr_path"].get<std::string>();
      if (e.contains("ref_dual_value"))
        entry.ref_dual_value = json_to_double(e["ref_dual_value"]);
      if (e.contains("ref_dual_provenance"))
        entry.ref_dual_provenance = e["ref_dual_provenance"].get<std::string>();
      if (e.contains("ref_multipliers_path"))
        entry.ref_multipliers_path = e["ref_multipliers_path"].get<std::string>();
      m.entries.push_back(entry);
    }
    return 0;
  });
  for (const ManifestEntry& e : m.entries) {
    for (const auto* p : {&e.path, e.cr_path ? &*e.cr_path : nullptr,
                          e.ref_multipliers_path ? &*e.ref_multipliers_path
                                                 : nullptr}) {
      if (p && !fs::exists(m.resolve(*p)))
        throw DataError(path.string() + ": referenced file " + *p +
                        " does not exist");
    }
  }
  return m;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw DataError("CSV row has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

void CsvWriter::save(const fs::path& path) const { write_text_file(path, text_); }

}  // namespace lmp
