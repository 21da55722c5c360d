#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ensf_da/geometry.hpp"

namespace ensf_da::geojson {

/// Polygon Feature with a single exterior ring; the closing vertex is
/// appended. `properties` is copied verbatim.
nlohmann::json to_feature(const Perimeter& p, const nlohmann::json& properties = nlohmann::json::object());

/// Accepts a Polygon geometry, a Feature holding one, or a
/// FeatureCollection whose first feature holds one. Holes are rejected and a
/// closing vertex equal to the first is stripped. Throws
/// std::invalid_argument on malformed input.
Perimeter from_json(const nlohmann::json& doc);

Perimeter parse(std::string_view text);
Perimeter read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Perimeter& p,
                const nlohmann::json& properties = nlohmann::json::object());

/// FeatureCollection of several perimeters, one feature each.
nlohmann::json to_feature_collection(const std::vector<Perimeter>& perimeters,
                                     const nlohmann::json& shared_properties = nlohmann::json::object());

}  // namespace ensf_da::geojson
