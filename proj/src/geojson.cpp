#include "ensf_da/geojson.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ensf_da::geojson {

using nlohmann::json;

json to_feature(const Perimeter& p, const json& properties) {
  json ring = json::array();
  for (const Vertex& v : p.vertices()) ring.push_back({v.lon, v.lat});
  ring.push_back({p[0].lon, p[0].lat});
  return json{{"type", "Feature"},
              {"properties", properties},
              {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}}};
}

namespace {

Perimeter polygon_from_geometry(const json& geometry) {
  if (!geometry.is_object() || geometry.value("type", "") != "Polygon")
    throw std::invalid_argument("geometry is not a GeoJSON Polygon");
  const json& rings = geometry.at("coordinates");
  if (!rings.is_array() || rings.empty()) throw std::invalid_argument("Polygon has no rings");
  if (rings.size() > 1) throw std::invalid_argument("Polygon holes are not supported");

  std::vector<Vertex> vertices;
  for (const json& pos : rings[0]) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw std::invalid_argument("invalid position in Polygon ring");
    vertices.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (vertices.size() > 1 && vertices.front() == vertices.back()) vertices.pop_back();
  return Perimeter(std::move(vertices));
}

}  // namespace

Perimeter from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("GeoJSON document is not an object");
  try {
    const std::string type = doc.value("type", "");
    if (type == "Polygon") return polygon_from_geometry(doc);
    if (type == "Feature") return polygon_from_geometry(doc.at("geometry"));
    if (type == "FeatureCollection") {
      const json& features = doc.at("features");
      if (!features.is_array() || features.empty())
        throw std::invalid_argument("FeatureCollection has no features");
      return polygon_from_geometry(features[0].at("geometry"));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed GeoJSON: ") + e.what());
  }
  throw std::invalid_argument("unsupported GeoJSON type");
}

Perimeter parse(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("GeoJSON parse error: ") + e.what());
  }
  return from_json(doc);
}

Perimeter read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void write_file(const std::filesystem::path& path, const Perimeter& p, const json& properties) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_feature(p, properties).dump(2) << '\n';
}

json to_feature_collection(const std::vector<Perimeter>& perimeters, const json& shared_properties) {
  json features = json::array();
  for (std::size_t i = 0; i < perimeters.size(); ++i) {
    json props = shared_properties;
    props["index"] = i;
    features.push_back(to_feature(perimeters[i], props));
  }
  return json{{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace ensf_da::geojson
