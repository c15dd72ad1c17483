#include "perco/io.hpp"

#include <stdexcept>

namespace perco {

using nlohmann::json;

namespace {

Point point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Box box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [x0, y0, x1, y1]");
  return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

}  // namespace

json to_json(const Box& b) { return json::array({b.lo.x, b.lo.y, b.hi.x, b.hi.y}); }

json to_json(const Segment& s) { return json::array({s.a.x, s.a.y, s.b.x, s.b.y}); }

json to_json(const Realization& r) {
  json j;
  j["schema"] = kRealizationSchema;
  j["kind"] = r.stick_model ? "sticks" : "graph";
  j["window"] = to_json(r.window);
  j["padding"] = r.padding;
  j["truncation_radius"] = r.truncation_radius ? json(*r.truncation_radius) : json(nullptr);
  json pts = json::array();
  for (const Point& p : r.points) pts.push_back({p.x, p.y});
  j["points"] = std::move(pts);
  if (!r.weights.empty()) j["weights"] = r.weights;
  if (r.stick_model) {
    json sticks = json::array();
    for (const Stick& s : r.sticks) sticks.push_back({{"half_length", s.half_length}, {"angle", s.angle}});
    j["sticks"] = std::move(sticks);
  } else {
    json edges = json::array();
    for (const Edge& e : r.edges) edges.push_back({e.i, e.j});
    j["edges"] = std::move(edges);
  }
  return j;
}

Realization realization_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kRealizationSchema)
      throw std::invalid_argument("unsupported realization schema");
    Realization r;
    r.stick_model = j.at("kind").get<std::string>() == "sticks";
    r.window = box_from(j.at("window"));
    r.padding = j.at("padding").get<double>();
    if (j.contains("truncation_radius") && !j["truncation_radius"].is_null())
      r.truncation_radius = j["truncation_radius"].get<double>();
    for (const auto& p : j.at("points")) r.points.push_back(point_from(p));
    if (j.contains("weights")) r.weights = j["weights"].get<std::vector<double>>();
    if (!r.weights.empty() && r.weights.size() != r.points.size())
      throw std::invalid_argument("weights and points differ in length");
    const std::size_t n = r.points.size();
    if (r.stick_model) {
      const auto& sticks = j.at("sticks");
      if (sticks.size() != n) throw std::invalid_argument("need one stick per point");
      for (std::size_t k = 0; k < n; ++k)
        r.sticks.push_back({r.points[k], sticks[k].at("half_length").get<double>(), sticks[k].at("angle").get<double>()});
    } else {
      for (const auto& e : j.at("edges")) {
        const auto a = e.at(0).get<std::uint32_t>();
        const auto b = e.at(1).get<std::uint32_t>();
        if (a >= b || b >= n) throw std::invalid_argument("edge indices must satisfy i < j < point count");
        r.edges.push_back({a, b, {r.points[a], r.points[b]}});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed realization document: ") + e.what());
  }
}

json witness_to_json(const Realization& r, const EventOutcome& outcome, const std::string& event) {
  json j = to_json(r);
  json segs = json::array();
  for (const Segment& s : outcome.witness_segments) segs.push_back(to_json(s));
  j["witness"] = {{"event", event}, {"occurred", outcome.occurred}, {"pieces", outcome.witness},
                  {"segments", std::move(segs)}};
  return j;
}

}  // namespace perco
