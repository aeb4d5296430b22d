#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hazreg/core.hpp"
#include "hazreg/solver.hpp"

namespace hazreg {

/// Feature name <-> dense index mapping. Indices are 1-based and assigned in
/// lexicographic name order, so the mapping is a pure function of the name set.
struct FeatureDict {
  std::vector<std::string> names;  // names[j-1] is feature j

  static FeatureDict from_names(std::vector<std::string> names);
  std::size_t size() const noexcept { return names.size(); }
  int index_of(const std::string& name) const;  // -1 if unknown
};

/// A dataset as loaded from the observation + feature-event files, with
/// tracks still keyed by feature name.
struct RawDataset {
  struct Site {
    std::string site_id;
    CensorType censor = CensorType::Right;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double weight = 1.0;
    std::map<std::string, std::vector<std::pair<double, double>>> tracks;
  };
  std::vector<Site> sites;
  std::vector<std::string> feature_names;  // sorted, deduplicated
};

/// Parses the observations CSV (site_id,censor_type,t_lo,t_hi,weight).
/// Errors carry file:line positions.
RawDataset read_observations(const std::string& path);

/// Parses the feature events CSV (site_id,feature,time,value) and attaches
/// tracks to the dataset. Events for unlisted sites are an error; duplicate
/// (site, feature, time) events keep the last value, with a warning.
void read_feature_events(const std::string& path, RawDataset& dataset);

/// Resolves names against the dictionary and builds Observations. Tracks
/// whose feature is not in the dictionary are dropped (their coefficient is
/// identically zero); the number of dropped tracks is returned via `skipped`.
std::vector<Observation> materialize(const RawDataset& dataset, const FeatureDict& dict,
                                     std::size_t* skipped = nullptr);

void write_observations(const std::string& path, const std::vector<Observation>& observations);
void write_feature_events(const std::string& path, const std::vector<Observation>& observations,
                          const FeatureDict& dict);

/// Versioned model document: horizon, knots, variant, feature dictionary,
/// run-length-compressed coefficients and fit metadata.
struct ModelFile {
  int version = 1;
  CoefficientSet coeffs;
  FeatureDict dict;
  std::map<std::string, std::string> metadata;  // flat, deterministic order
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/// Largest time appearing anywhere in the dataset (censoring or events),
/// used when the horizon flag is omitted.
double infer_horizon(const RawDataset& dataset);

}  // namespace hazreg
