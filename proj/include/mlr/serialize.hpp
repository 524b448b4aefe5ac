#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlr/design_analysis.hpp"
#include "mlr/estimators.hpp"
#include "mlr/experiment.hpp"
#include "mlr/packing.hpp"
#include "mlr/reduction.hpp"

namespace mlr {

using Json = nlohmann::ordered_json;

/// Upper-triangular nonzero entries as [[i, j, value], ...].
Json upper_entries_json(const ParameterMatrix& theta);
Json to_json(const FitResult& fit);
Json to_json(const IsometryReport& rep);
Json to_json(const PackingSet& pack);
Json to_json(const CardinalityAudit& audit);
Json to_json(const PowerCell& cell);
Json to_json(const MarginalTest& test);
Json to_json(const ExperimentConfig& cfg);
/// Full rates document: version, config, seed, per-design isometry, rows, trials.
Json to_json(const RateTable& table);

/// Rows of the rate table as CSV.
std::string rates_csv(const RateTable& table);

/// Writes `doc` with two-space indentation and a trailing newline.
void write_json(const std::string& path, const Json& doc);

}  // namespace mlr
