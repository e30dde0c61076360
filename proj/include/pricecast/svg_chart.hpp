#pragma once

#include <string>

#include "pricecast/metrics.hpp"

namespace pricecast {

/// Line chart of actual vs predicted prices. Rows whose prediction is missing
/// are drawn as history and the first predicted row is marked as the
/// train/test boundary.
std::string render_chart(const PredictionTable& table, const std::string& title = "Actual vs predicted");

}  // namespace pricecast
