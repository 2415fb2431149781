#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gossipq/consensus.hpp"
#include "gossipq/experiment.hpp"
#include "gossipq/graph.hpp"
#include "gossipq/ranktrim.hpp"

namespace gq {

/// algorithm,trial,activation,mae,mae_std
void write_trials_csv(std::ostream& out, const std::vector<SeriesRecord>& runs);
/// algorithm,activation,mean,std,diverged
void write_aggregate_csv(std::ostream& out, const std::vector<MetricSeries>& aggregates);
void write_table_csv(std::ostream& out, const Table& table);

/// Mean line with a shaded +-std band per series, log-scaled y when every
/// value is positive.
void write_svg(std::ostream& out, const std::vector<MetricSeries>& series, const std::string& title);

/// Writes trials.csv, aggregate.csv, <table>.csv for each table, meta.json and,
/// if `svg`, plot.svg into `dir` (created if missing).
void write_result(const ExperimentResult& result, const std::filesystem::path& dir, bool svg);

nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const AsylState& s);
AsylState asyl_state_from_json(const nlohmann::json& j);
nlohmann::json state_to_json(const GoRankState& s);
nlohmann::json state_to_json(const TrimAverager& s);
nlohmann::json state_to_json(const GoDepthState& s);

}  // namespace gq
