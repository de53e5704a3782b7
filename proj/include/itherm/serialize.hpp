#pragma once

#include <ostream>

#include <json.hpp>

#include "itherm/estimators.hpp"
#include "itherm/fisher.hpp"
#include "itherm/propagator.hpp"

namespace itherm {

nlohmann::json to_json(const FiParams& p);
nlohmann::json to_json(const FisherReport& r);
nlohmann::json to_json(const FisherMatrix2& chi);
nlohmann::json to_json(const EstimationReport& r);

/// CSV with columns P, f.
void write_csv(const GridDensity& density, std::ostream& os);

/// Round-trippable decimal formatting used by every CSV/JSON emitter.
std::string format_double(double x);

}  // namespace itherm
