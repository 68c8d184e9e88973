#pragma once

// Trajectory manifest:
//   {"width","height","frames","trajectories":[{"id","points":[{"t","x","y",
//    "depth"?,"u"?,"v"?}]}]}

#include <string>

#include "multicoin/json_io.hpp"
#include "multicoin/trajectory.hpp"

namespace multicoin {

inline Json to_json(const TrajectorySet& set) {
  Json trajectories = Json::array();
  for (const auto& traj : set.trajectories) {
    Json points = Json::array();
    for (const auto& p : traj.points) {
      Json point{{"t", p.t}, {"x", p.x}, {"y", p.y}};
      if (p.depth) point["depth"] = *p.depth;
      if (p.flow) {
        point["u"] = p.flow->u;
        point["v"] = p.flow->v;
      }
      points.push_back(std::move(point));
    }
    trajectories.push_back({{"id", traj.id}, {"points", std::move(points)}});
  }
  return {{"width", set.width},
          {"height", set.height},
          {"frames", set.frame_count},
          {"trajectories", std::move(trajectories)}};
}

inline TrajectorySet trajectory_set_from_json(const Json& j, const std::string& path = "") {
  require_object(j, path);
  TrajectorySet set;
  set.width = field<int>(j, "width", path);
  set.height = field<int>(j, "height", path);
  set.frame_count = field<int>(j, "frames", path);
  if (set.width < 1 || set.height < 1) schema_error(path, "width and height must be >= 1");
  if (set.frame_count < 1) schema_error(child_path(path, "frames"), "must be >= 1");

  const auto trajectories_path = child_path(path, "trajectories");
  const auto& trajectories = require_array(member(j, "trajectories", path), trajectories_path);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto tpath = child_path(trajectories_path, i);
    const auto& tj = require_object(trajectories[i], tpath);
    Trajectory traj;
    traj.id = field<int>(tj, "id", tpath);
    const auto ppath = child_path(tpath, "points");
    const auto& points = require_array(member(tj, "points", tpath), ppath);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto pt_path = child_path(ppath, k);
      const auto& pj = require_object(points[k], pt_path);
      TrackPoint p;
      p.t = field<int>(pj, "t", pt_path);
      p.x = field<double>(pj, "x", pt_path);
      p.y = field<double>(pj, "y", pt_path);
      if (pj.contains("depth") && !pj["depth"].is_null()) p.depth = field<double>(pj, "depth", pt_path);
      const bool has_u = pj.contains("u"), has_v = pj.contains("v");
      if (has_u != has_v) schema_error(pt_path, "u and v must appear together");
      if (has_u) p.flow = FlowSample{field<double>(pj, "u", pt_path), field<double>(pj, "v", pt_path)};
      if (p.t < 0 || p.t >= set.frame_count) schema_error(child_path(pt_path, "t"), "outside [0, frames)");
      if (!traj.points.empty() && traj.points.back().t >= p.t)
        schema_error(child_path(pt_path, "t"), "times must be strictly increasing");
      if (p.x < 0 || p.y < 0 || p.x > set.width - 1 || p.y > set.height - 1)
        schema_error(pt_path, "point lies outside the frame");
      traj.points.push_back(p);
    }
    for (const auto& other : set.trajectories)
      if (other.id == traj.id) schema_error(child_path(tpath, "id"), "duplicate id");
    set.trajectories.push_back(std::move(traj));
  }
  return set;
}

}  // namespace multicoin
