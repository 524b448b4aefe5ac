#pragma once

#include <iosfwd>
#include <string>

#include "mlr/core_model.hpp"

namespace mlr {

struct Dataset {
  FeatureMatrix X;
  ObservationMask omega;
  EdgeObservations Y;
};

/// Feature file: one line per vertex, `vertex_id x_1 ... x_d`, ids 0..n-1 in
/// any order. Edge file: one line per observed pair, `i j y` with i < j and
/// y in {0, 1}. Blank lines and lines starting with '#' are skipped.
/// Errors are InputError naming the file and line.
Dataset load_dataset(const std::string& features_path, const std::string& edges_path);

FeatureMatrix parse_features(std::istream& in, const std::string& name = "features");
Dataset parse_dataset(std::istream& features, std::istream& edges, const std::string& features_name = "features",
                      const std::string& edges_name = "edges");

void write_features(std::ostream& out, const FeatureMatrix& X);
void write_edges(std::ostream& out, const ObservationMask& omega, const EdgeObservations& Y);
void save_dataset(const std::string& features_path, const std::string& edges_path, const Dataset& data);

}  // namespace mlr
