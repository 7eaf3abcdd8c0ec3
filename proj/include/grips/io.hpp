#ifndef GRIPS_IO_HPP
#define GRIPS_IO_HPP

#include "grips/mcmc.hpp"
#include "grips/predict.hpp"

#include <string>

namespace grips {

/// Data CSV: header lon,lat,y1..yq,x1..xp. An empty y field is a missing
/// outcome. Throws IoError on unreadable files or malformed rows.
ObservedData read_data_csv(const std::string& path);
void write_data_csv(const std::string& path, const ObservedData& data);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

/// One row per stored draw: iteration, then ChainStore::column_names().
void write_chain_csv(const std::string& path, const ChainStore& chain);

/// Column label of a quantile level, e.g. 0.025 -> "q02.5".
std::string quantile_label(double level);

/// lon,lat,outcome,mean,<quantile columns>,interval_width. Outcomes are
/// numbered from 1.
void write_predictions_csv(const std::string& path, const PredictionSummary& pred);

/// lon,lat,outcome,mean,<quantile columns> at every reference point.
void write_latent_map_csv(const std::string& path, const LatentMap& map, const Mesh& mesh);

void write_text(const std::string& path, const std::string& text);

} // namespace grips

#endif // GRIPS_IO_HPP
