#include "hazreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hazreg {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line,
                    const std::string& what) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail_at(path, line, "cannot parse " + what + " from '" + s + "'");
  return v;
}

// Maps header names to column positions; unknown or missing columns are errors.
std::vector<int> check_header(const std::vector<std::string>& fields,
                              const std::vector<std::string>& expected,
                              const std::string& path) {
  std::vector<int> pos(expected.size(), -1);
  for (std::size_t c = 0; c < fields.size(); ++c) {
    auto it = std::find(expected.begin(), expected.end(), fields[c]);
    if (it == expected.end()) fail_at(path, 1, "unknown column '" + fields[c] + "'");
    std::size_t k = static_cast<std::size_t>(it - expected.begin());
    if (pos[k] >= 0) fail_at(path, 1, "duplicate column '" + fields[c] + "'");
    pos[k] = static_cast<int>(c);
  }
  for (std::size_t k = 0; k < expected.size(); ++k)
    if (pos[k] < 0) fail_at(path, 1, "missing required column '" + expected[k] + "'");
  return pos;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FeatureDict FeatureDict::from_names(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return FeatureDict{std::move(names)};
}

int FeatureDict::index_of(const std::string& name) const {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) return -1;
  return static_cast<int>(it - names.begin()) + 1;
}

RawDataset read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  RawDataset out;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  std::vector<int> pos;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (lineno == 1) {
      pos = check_header(fields, {"site_id", "censor_type", "t_lo", "t_hi", "weight"}, path);
      continue;
    }
    if (fields.size() != 5) fail_at(path, lineno, "expected 5 fields");
    RawDataset::Site site;
    site.site_id = fields[static_cast<std::size_t>(pos[0])];
    if (site.site_id.empty()) fail_at(path, lineno, "empty site_id");
    if (!seen.insert(site.site_id).second)
      fail_at(path, lineno, "duplicate site_id '" + site.site_id + "'");
    const std::string& type = fields[static_cast<std::size_t>(pos[1])];
    const std::string& lo = fields[static_cast<std::size_t>(pos[2])];
    const std::string& hi = fields[static_cast<std::size_t>(pos[3])];
    const std::string& wt = fields[static_cast<std::size_t>(pos[4])];
    if (type == "interval") {
      site.censor = CensorType::Interval;
      site.t_lo = parse_double(lo, path, lineno, "t_lo");
      site.t_hi = parse_double(hi, path, lineno, "t_hi");
      if (!(site.t_lo < site.t_hi)) fail_at(path, lineno, "interval needs t_lo < t_hi");
    } else if (type == "right") {
      site.censor = CensorType::Right;
      if (!lo.empty()) fail_at(path, lineno, "right-censored rows must leave t_lo empty");
      site.t_hi = parse_double(hi, path, lineno, "t_hi");
    } else {
      fail_at(path, lineno, "censor_type must be 'interval' or 'right'");
    }
    site.weight = wt.empty() ? 1.0 : parse_double(wt, path, lineno, "weight");
    if (!(site.weight > 0.0)) fail_at(path, lineno, "weight must be > 0");
    out.sites.push_back(std::move(site));
  }
  if (lineno == 0) throw std::runtime_error(path + ": empty file (missing header)");
  return out;
}

void read_feature_events(const std::string& path, RawDataset& dataset) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, RawDataset::Site*> by_id;
  for (auto& site : dataset.sites) by_id[site.site_id] = &site;

  std::set<std::string> names;
  std::string line;
  std::size_t lineno = 0, duplicates = 0;
  std::vector<int> pos;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (lineno == 1) {
      pos = check_header(fields, {"site_id", "feature", "time", "value"}, path);
      continue;
    }
    if (fields.size() != 4) fail_at(path, lineno, "expected 4 fields");
    const std::string& site_id = fields[static_cast<std::size_t>(pos[0])];
    const std::string& feature = fields[static_cast<std::size_t>(pos[1])];
    double time = parse_double(fields[static_cast<std::size_t>(pos[2])], path, lineno, "time");
    double value = parse_double(fields[static_cast<std::size_t>(pos[3])], path, lineno, "value");
    auto it = by_id.find(site_id);
    if (it == by_id.end()) fail_at(path, lineno, "unknown site_id '" + site_id + "'");
    if (feature.empty()) fail_at(path, lineno, "empty feature name");
    if (!(value >= 0.0)) fail_at(path, lineno, "feature values must be >= 0");
    names.insert(feature);
    auto& events = it->second->tracks[feature];
    if (!events.empty() && events.back().first == time) {
      events.back().second = value;  // last one wins
      ++duplicates;
    } else {
      events.emplace_back(time, value);
    }
  }
  if (lineno == 0) throw std::runtime_error(path + ": empty file (missing header)");
  for (auto& site : dataset.sites) {
    for (auto& [name, events] : site.tracks) {
      // Stable sort + keep-last so "last one wins" follows file order.
      std::stable_sort(events.begin(), events.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k + 1 < events.size();) {
        if (events[k].first == events[k + 1].first) {
          events.erase(events.begin() + static_cast<std::ptrdiff_t>(k));
          ++duplicates;
        } else {
          ++k;
        }
      }
    }
  }
  if (duplicates > 0)
    std::cerr << "warning: " << path << ": " << duplicates
              << " duplicate feature event(s); kept the last value at each time\n";
  dataset.feature_names.assign(names.begin(), names.end());
}

std::vector<Observation> materialize(const RawDataset& dataset, const FeatureDict& dict,
                                     std::size_t* skipped) {
  std::vector<Observation> out;
  out.reserve(dataset.sites.size());
  std::size_t dropped = 0;
  for (const auto& site : dataset.sites) {
    Observation obs = site.censor == CensorType::Interval
                          ? Observation::interval_censored(site.site_id, site.t_lo, site.t_hi,
                                                           site.weight)
                          : Observation::right_censored(site.site_id, site.t_hi, site.weight);
    for (const auto& [name, events] : site.tracks) {
      int j = dict.index_of(name);
      if (j < 0) {
        ++dropped;
        continue;
      }
      obs.tracks.push_back(FeatureTrack{j, events});
    }
    obs.validate();
    out.push_back(std::move(obs));
  }
  if (skipped) *skipped = dropped;
  return out;
}

void write_observations(const std::string& path, const std::vector<Observation>& observations) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "site_id,censor_type,t_lo,t_hi,weight\n";
  for (const auto& obs : observations) {
    if (obs.censor == CensorType::Interval)
      out << obs.site_id << ",interval," << format_double(obs.t_lo) << ','
          << format_double(obs.t_hi) << ',' << format_double(obs.weight) << '\n';
    else
      out << obs.site_id << ",right,," << format_double(obs.t_hi) << ','
          << format_double(obs.weight) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_feature_events(const std::string& path, const std::vector<Observation>& observations,
                          const FeatureDict& dict) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "site_id,feature,time,value\n";
  for (const auto& obs : observations) {
    for (const auto& track : obs.tracks) {
      if (track.feature_id < 1 || track.feature_id > static_cast<int>(dict.size()))
        throw std::runtime_error("site " + obs.site_id + ": feature id " +
                                 std::to_string(track.feature_id) + " not in dictionary");
      const std::string& name = dict.names[static_cast<std::size_t>(track.feature_id) - 1];
      for (const auto& [t, v] : track.events)
        out << obs.site_id << ',' << name << ',' << format_double(t) << ','
            << format_double(v) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

json runs_of(const std::vector<double>& values) {
  json runs = json::array();
  for (std::size_t l = 0; l < values.size(); ++l) {
    if (l == 0 || values[l] != values[l - 1]) runs.push_back(json::array({l, values[l]}));
  }
  return runs;
}

std::vector<double> expand_runs(const json& runs, std::size_t size, const std::string& path) {
  std::vector<double> values(size, 0.0);
  std::size_t prev = 0;
  double cur = 0.0;
  bool first = true;
  for (const auto& run : runs) {
    std::size_t l = run.at(0).get<std::size_t>();
    if (l >= size || (!first && l <= prev) || (first && l != 0))
      throw std::runtime_error(path + ": malformed coefficient runs");
    for (std::size_t k = prev; k < l; ++k) values[k] = cur;
    prev = l;
    cur = run.at(1).get<double>();
    first = false;
  }
  for (std::size_t k = prev; k < size; ++k) values[k] = cur;
  return values;
}

}  // namespace

void save_model(const std::string& path, const ModelFile& model) {
  const auto& coeffs = model.coeffs;
  if (coeffs.dim() != model.dict.size())
    throw std::runtime_error("model dimension does not match the feature dictionary");
  json doc;
  doc["format"] = "hazreg-model";
  doc["version"] = model.version;
  doc["horizon"] = coeffs.grid()->horizon();
  doc["knots"] = coeffs.grid()->times();
  doc["variant"] = {{"penalty", to_string(coeffs.variant.penalty)},
                    {"monotone", coeffs.variant.monotone},
                    {"gamma", coeffs.variant.gamma},
                    {"epsilon", coeffs.variant.epsilon}};
  doc["features"] = model.dict.names;
  doc["baseline"] = runs_of(coeffs.w0.values());
  json per_feature = json::array();
  for (const auto& wj : coeffs.w) per_feature.push_back(runs_of(wj.values()));
  doc["coefficients"] = std::move(per_feature);
  doc["metadata"] = model.metadata;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": not a valid model file (" + e.what() + ")");
  }
  if (doc.value("format", "") != "hazreg-model")
    throw std::runtime_error(path + ": not a hazreg model file");
  int version = doc.value("version", -1);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version) +
                             " (this build reads version 1)");

  auto grid = std::make_shared<const KnotGrid>(doc.at("knots").get<std::vector<double>>());
  ModelVariant variant;
  variant.penalty = penalty_from_string(doc.at("variant").at("penalty").get<std::string>());
  variant.monotone = doc.at("variant").at("monotone").get<bool>();
  variant.gamma = doc.at("variant").at("gamma").get<double>();
  variant.epsilon = doc.at("variant").at("epsilon").get<double>();

  FeatureDict dict{doc.at("features").get<std::vector<std::string>>()};
  CoefficientSet coeffs = CoefficientSet::zeros(grid, dict.size(), variant);
  coeffs.w0.values() = expand_runs(doc.at("baseline"), grid->size(), path);
  const json& per_feature = doc.at("coefficients");
  if (per_feature.size() != dict.size())
    throw std::runtime_error(path + ": coefficient count does not match feature dictionary");
  for (std::size_t j = 0; j < dict.size(); ++j)
    coeffs.w[j].values() = expand_runs(per_feature[j], grid->size(), path);
  coeffs.validate();

  ModelFile model{version, std::move(coeffs), std::move(dict), {}};
  if (doc.contains("metadata"))
    model.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
  return model;
}

double infer_horizon(const RawDataset& dataset) {
  double h = 0.0;
  for (const auto& site : dataset.sites) {
    h = std::max(h, site.t_hi);
    for (const auto& [name, events] : site.tracks)
      for (const auto& [t, v] : events) h = std::max(h, t);
  }
  return h;
}

}  // namespace hazreg
