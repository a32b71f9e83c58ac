#pragma once

#include <json.hpp>

#include "cct/closed_testing.hpp"
#include "cct/outlier_model.hpp"
#include "cct/pipeline.hpp"
#include "cct/simgen.hpp"

namespace cct {

nlohmann::json to_json(const DiscoveryBound& b);
nlohmann::json to_json(const DiscoverySet& s);
nlohmann::json to_json(const OutlierDistribution& g);
OutlierDistribution outlier_distribution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AcodeResult& r);
nlohmann::json to_json(const GeneratorSpec& g);

}  // namespace cct
