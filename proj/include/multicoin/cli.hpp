#pragma once

// Command-line surface. `run` is the whole program; tools/multicoin.cpp only
// forwards argv. Exit codes: 0 success, 1 usage error, 2 data error. Every
// failure prints a line starting with "error:" to stderr.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "multicoin/json_io.hpp"
#include "multicoin/latent_pack.hpp"
#include "multicoin/manifest.hpp"
#include "multicoin/media_io.hpp"
#include "multicoin/pipelines.hpp"
#include "multicoin/service.hpp"
#include "multicoin/synthetic.hpp"
#include "multicoin/visualize.hpp"

namespace multicoin::cli {

namespace fs = std::filesystem;

struct Size {
  int height = 0;
  int width = 0;
};

/// "HxW", e.g. 352x640.
inline Size parse_size(const std::string& text) {
  const auto x = text.find('x');
  require(x != std::string::npos, ErrorCode::BadParams, "size must look like HxW, got '" + text + "'");
  try {
    std::size_t used = 0;
    Size s{std::stoi(text.substr(0, x), &used), 0};
    require(used == x, ErrorCode::BadParams, "bad height in '" + text + "'");
    s.width = std::stoi(text.substr(x + 1), &used);
    require(used == text.size() - x - 1, ErrorCode::BadParams, "bad width in '" + text + "'");
    return s;
  } catch (const std::logic_error&) {
    fail(ErrorCode::BadParams, "size must look like HxW, got '" + text + "'");
  }
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      require(used == part.size(), ErrorCode::BadParams, what + ": bad number '" + part + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::BadParams, what + ": bad number '" + part + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  require(expected == 0 || out.size() == expected, ErrorCode::BadParams,
          what + " expects " + std::to_string(expected) + " comma-separated values");
  return out;
}

inline Point2 parse_point(const std::string& text, const std::string& what) {
  const auto v = parse_numbers(text, 2, what);
  return {v[0], v[1]};
}

/// Files are taken as given; directories contribute their files with the
/// extension, sorted by name.
inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& args, const std::string& extension) {
  std::vector<fs::path> out;
  for (const auto& arg : args) {
    const fs::path p(arg);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == extension) found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<FlowField> load_flows(const std::vector<std::string>& args) {
  std::vector<FlowField> flows;
  for (const auto& p : expand_inputs(args, ".flo")) flows.push_back(decode_flo(read_file(p)));
  require(!flows.empty(), ErrorCode::EmptyInput, "no .flo inputs found");
  return flows;
}

inline std::vector<Frame> load_frames(const std::vector<std::string>& args) {
  std::vector<Frame> frames;
  for (const auto& p : expand_inputs(args, ".png")) frames.push_back(decode_frame(read_file(p)));
  require(!frames.empty(), ErrorCode::EmptyInput, "no frame inputs found");
  return frames;
}

inline TrajectorySet load_manifest(const std::string& path) {
  const auto bytes = read_file(path);
  return trajectory_set_from_json(parse_json(std::string(bytes.begin(), bytes.end())));
}

inline std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu", i);
  return stem + buf + ext;
}

inline void emit_json(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << dump_json(j);
  } else {
    if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_text(out, dump_json(j));
  }
}

inline void write_sequence(const fs::path& dir, const std::string& stem, const std::vector<Bytes>& files) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < files.size(); ++i) write_file(dir / numbered(stem, i, ".png"), files[i]);
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Control synthesis and evaluation for multi-modal video inbetweening", "multicoin"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();

  // viz-flow / viz-depth
  std::string in_path, out_path;
  double mag_max = 20.0;
  std::optional<double> d_ref, d_scale;
  auto* viz_flow = app.add_subcommand("viz-flow", "Dense flow (.flo) to RGB PNG");
  viz_flow->add_option("--in", in_path, ".flo input")->required();
  viz_flow->add_option("--out", out_path, "PNG output")->required();
  viz_flow->add_option("--mag-max", mag_max, "Saturation magnitude, px/frame")->capture_default_str();

  auto* viz_depth = app.add_subcommand("viz-depth", "Dense depth (PFM) to RGB PNG");
  viz_depth->add_option("--in", in_path, "PFM input")->required();
  viz_depth->add_option("--out", out_path, "PNG output")->required();
  viz_depth->add_option("--d-ref", d_ref, "Reference depth (default: map mean)");
  viz_depth->add_option("--d-scale", d_scale, "Depth deviation mapped to full color (default: 3x mean)");

  // synth
  std::string kind = "uniform", size_text = "64x64", out_dir = ".";
  int frames = 8;
  double u = 1.0, v = 0.0, omega = 0.05;
  std::optional<double> cx, cy;
  int square_size = 8, vx = 1, vy = 0;
  std::optional<std::string> origin, background;
  auto* synth = app.add_subcommand("synth", "Write an analytic fixture (flows, frames, depths)");
  synth->add_option("--kind", kind, "uniform | rotation | moving_square")
      ->check(CLI::IsMember({"uniform", "rotation", "moving_square"}))
      ->capture_default_str();
  synth->add_option("--size", size_text, "HxW")->capture_default_str();
  synth->add_option("--frames", frames, "Number of flow fields")->capture_default_str();
  synth->add_option("--u", u, "uniform: horizontal motion")->capture_default_str();
  synth->add_option("--v", v, "uniform: vertical motion")->capture_default_str();
  synth->add_option("--omega", omega, "rotation: radians per frame")->capture_default_str();
  synth->add_option("--cx", cx, "rotation: center x (default: frame center)");
  synth->add_option("--cy", cy, "rotation: center y (default: frame center)");
  synth->add_option("--square-size", square_size, "moving_square: side length")->capture_default_str();
  synth->add_option("--vx", vx, "moving_square: integer x velocity")->capture_default_str();
  synth->add_option("--vy", vy, "moving_square: integer y velocity")->capture_default_str();
  synth->add_option("--origin", origin, "moving_square: top-left x,y at frame 0");
  synth->add_option("--background", background, "moving_square: r,g,b");
  synth->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // track
  std::vector<std::string> flow_inputs{"."}, depth_inputs, seed_args;
  std::optional<int> auto_seeds;
  double min_sep = 16.0;
  std::string manifest_out = "trajectories.json";
  auto* track = app.add_subcommand("track", "Track seeds through flow fields into a trajectory manifest");
  track->add_option("--flows", flow_inputs, ".flo files or directories, in time order")->capture_default_str();
  track->add_option("--seeds", seed_args, "Seed point x,y (repeatable)");
  track->add_option("--auto-seeds", auto_seeds, "Pick this many seeds by flow magnitude in the first field");
  track->add_option("--min-sep", min_sep, "Minimum seed separation for --auto-seeds")->capture_default_str();
  track->add_option("--depths", depth_inputs, "PFM files or directories, one per frame");
  track->add_option("--out", manifest_out, "Manifest output")->capture_default_str();

  // auto-traj
  std::string first_path, last_path;
  AutoTrajectoryConfig auto_cfg;
  auto* auto_traj = app.add_subcommand("auto-traj", "Linear trajectories between matched features of two frames");
  auto_traj->add_option("--first", first_path, "First frame")->required();
  auto_traj->add_option("--last", last_path, "Last frame")->required();
  auto_traj->add_option("--frames", auto_cfg.frame_count, "Frames along each trajectory")->required();
  auto_traj->add_option("--max-pairs", auto_cfg.max_pairs)->capture_default_str();
  auto_traj->add_option("--threshold", auto_cfg.threshold, "Minimum NCC")->capture_default_str();
  auto_traj->add_option("--out", manifest_out, "Manifest output")->capture_default_str();

  // render-controls
  std::string manifest_path;
  pipelines::RenderOptions render_opts;
  std::optional<int> render_frames;
  std::string controls_dir = "controls";
  auto* render = app.add_subcommand("render-controls", "Rasterize a manifest into flow/depth control PNGs");
  render->add_option("--manifest", manifest_path, "Trajectory manifest")->required();
  render->add_option("--frames", render_frames, "Frame count (default: manifest frames)");
  render->add_option("--sigma", render_opts.controls.splat.sigma)->capture_default_str();
  render->add_option("--truncate", render_opts.controls.splat.truncate)->capture_default_str();
  render->add_option("--radius", render_opts.controls.splat.disk_radius)->capture_default_str();
  render->add_option("--mag-max", render_opts.controls.flow.mag_max)->capture_default_str();
  render->add_option("--d-ref", d_ref);
  render->add_option("--d-scale", d_scale);
  render->add_flag("--anchors", render_opts.anchors, "Add border depth anchors");
  render->add_option("--out", controls_dir, "Output directory")->capture_default_str();

  // segment-region
  std::string flow_path, anchor_text, mask_out = "mask.png";
  double threshold_frac = 0.5;
  auto* segment = app.add_subcommand("segment-region", "Flow-segmented region mask around an anchor");
  segment->add_option("--flow", flow_path, ".flo input")->required();
  segment->add_option("--anchor", anchor_text, "x,y")->required();
  segment->add_option("--threshold-frac", threshold_frac)->capture_default_str();
  segment->add_option("--out", mask_out, "Mask PNG output")->capture_default_str();

  // augment
  std::vector<std::string> keyframe_args;
  std::optional<std::string> mask_path, aug_flow_path, aug_anchor, targets_text;
  std::optional<int> traj_id, length;
  int source = 0, num_targets = 2;
  double dropout_p = 0.0;
  std::string augment_dir = "augmented";
  auto* augment = app.add_subcommand("augment", "Build the slotted keyframe/target-region clip with masks");
  augment->add_option("--keyframe", keyframe_args, "index:path (repeatable; first and last required)")->required();
  augment->add_option("--manifest", manifest_path, "Trajectory manifest")->required();
  augment->add_option("--traj-id", traj_id, "Trajectory to follow (default: first)");
  augment->add_option("--mask", mask_path, "Region mask PNG");
  augment->add_option("--flow", aug_flow_path, ".flo to segment the region from");
  augment->add_option("--anchor", aug_anchor, "Segmentation anchor x,y (default: trajectory at source)");
  augment->add_option("--threshold-frac", threshold_frac)->capture_default_str();
  augment->add_option("--source", source, "Keyframe index the region is cut from")->capture_default_str();
  augment->add_option("--length", length, "Clip length (default: manifest frames)");
  augment->add_option("--targets", targets_text, "Target slot indices, comma-separated");
  augment->add_option("--num-targets", num_targets, "Evenly spaced targets when --targets is absent")
      ->capture_default_str();
  augment->add_option("--dropout-p", dropout_p, "Probability of dropping target content")->capture_default_str();
  augment->add_option("--out", augment_dir, "Output directory")->capture_default_str();

  // layout / curriculum
  int layout_frames = 32, embed_dim = 1152;
  std::string layout_size = "352x640", json_out;
  VaeLayoutConfig vae;
  bool non_causal = false;
  auto* layout = app.add_subcommand("layout", "Latent layout and dual-branch manifest");
  layout->add_option("--frames", layout_frames)->capture_default_str();
  layout->add_option("--size", layout_size, "HxW")->capture_default_str();
  layout->add_option("--temporal-factor", vae.temporal_factor)->capture_default_str();
  layout->add_option("--spatial-factor", vae.spatial_factor)->capture_default_str();
  layout->add_option("--channels", vae.latent_channels)->capture_default_str();
  layout->add_option("--patch", vae.patch_size)->capture_default_str();
  layout->add_option("--embed-dim", embed_dim)->capture_default_str();
  layout->add_flag("--non-causal", non_causal, "Compress the first frame with the rest");
  layout->add_option("--out", json_out, "JSON output (default: stdout)");

  std::string steps_text = "5000,2000,2000,2000";
  auto* curriculum = app.add_subcommand("curriculum", "Stage-wise training manifest");
  curriculum->add_option("--steps", steps_text, "Steps per stage")->capture_default_str();
  curriculum->add_option("--out", json_out, "JSON output (default: stdout)");

  // eval
  std::vector<std::string> a_inputs, b_inputs;
  auto* eval_motion = app.add_subcommand("eval-motion", "Frechet motion metric against generated flow");
  eval_motion->add_option("--manifest", manifest_path, "Input trajectory manifest")->required();
  eval_motion->add_option("--flows", flow_inputs, "Generated .flo files or directories")->required();
  eval_motion->add_option("--out", json_out, "Report output (default: stdout)");

  auto* eval_ssim = app.add_subcommand("eval-ssim", "Per-frame SSIM between two frame sequences");
  eval_ssim->add_option("--a", a_inputs, "Frames or directories")->required();
  eval_ssim->add_option("--b", b_inputs, "Frames or directories")->required();
  eval_ssim->add_option("--out", json_out, "Report output (default: stdout)");

  // serve
  std::string bind = "127.0.0.1:8787", ui_dir;
  long long ttl_seconds = 3600;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--ttl", ttl_seconds, "Asset lifetime in seconds")->capture_default_str();
  serve->add_option("--ui", ui_dir, "Static UI directory served at /");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*viz_flow) {
      const FlowColorConfig cfg{mag_max};
      write_file(out_path, encode_png(flow_to_rgb(decode_flo(read_file(in_path)), cfg)));
    } else if (*viz_depth) {
      const auto depth = decode_pfm(read_file(in_path));
      auto cfg = default_depth_config(depth);
      if (d_ref) cfg.d_ref = *d_ref;
      if (d_scale) cfg.d_scale = *d_scale;
      write_file(out_path, encode_png(depth_to_rgb(depth, cfg)));
    } else if (*synth) {
      const auto size = parse_size(size_text);
      synthetic::Kind fixture;
      if (kind == "uniform") {
        fixture = synthetic::Uniform{u, v};
      } else if (kind == "rotation") {
        fixture = synthetic::Rotation{{cx.value_or((size.width - 1) / 2.0), cy.value_or((size.height - 1) / 2.0)}, omega};
      } else {
        synthetic::MovingSquare sq;
        sq.size = square_size;
        sq.vx = vx;
        sq.vy = vy;
        sq.texture_seed = seed;
        if (origin) {
          const auto o = parse_point(*origin, "--origin");
          sq.origin_x = static_cast<int>(o.x);
          sq.origin_y = static_cast<int>(o.y);
        }
        if (background) {
          const auto c = parse_numbers(*background, 3, "--background");
          sq.background = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                           static_cast<std::uint8_t>(c[2])};
        }
        fixture = sq;
      }
      const auto clip = synthetic::make_clip(fixture, size.width, size.height, frames);
      fs::create_directories(out_dir);
      for (std::size_t i = 0; i < clip.flows.size(); ++i)
        write_file(fs::path(out_dir) / numbered("flow", i, ".flo"), encode_flo(clip.flows[i]));
      for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        write_file(fs::path(out_dir) / numbered("frame", i, ".png"), encode_png(clip.frames[i]));
        write_file(fs::path(out_dir) / numbered("depth", i, ".pfm"), encode_pfm(clip.depths[i]));
      }
      for (std::size_t i = 0; i < clip.footprints.size(); ++i)
        write_file(fs::path(out_dir) / numbered("footprint", i, ".png"), encode_mask_png(clip.footprints[i]));
    } else if (*track) {
      const auto flows = load_flows(flow_inputs);
      std::vector<Point2> seeds;
      for (const auto& s : seed_args) seeds.push_back(parse_point(s, "--seeds"));
      if (auto_seeds) {
        const auto picked = select_seeds(flows.front(), *auto_seeds, min_sep);
        seeds.insert(seeds.end(), picked.begin(), picked.end());
      }
      if (seeds.empty()) fail(ErrorCode::BadParams, "track needs --seeds or --auto-seeds");
      auto set = track_points(flows, seeds);
      if (!depth_inputs.empty()) {
        std::vector<DepthMap> depths;
        for (const auto& p : expand_inputs(depth_inputs, ".pfm")) depths.push_back(decode_pfm(read_file(p)));
        set = attach_depth(std::move(set), depths);
      }
      emit_json(to_json(set), manifest_out);
    } else if (*auto_traj) {
      const auto first = decode_frame(read_file(first_path));
      const auto last = decode_frame(read_file(last_path));
      emit_json(to_json(auto_trajectory(first, last, auto_cfg)), manifest_out);
    } else if (*render) {
      require(d_ref.has_value() == d_scale.has_value(), ErrorCode::BadParams, "--d-ref and --d-scale go together");
      if (d_ref) render_opts.controls.depth = DepthColorConfig{*d_ref, *d_scale};
      render_opts.frames = render_frames;
      const auto rendered = pipelines::render_controls(load_manifest(manifest_path), render_opts);
      write_sequence(controls_dir, "flow", rendered.flow_png);
      write_sequence(controls_dir, "depth", rendered.depth_png);
      write_text(fs::path(controls_dir) / "controls.json", dump_json(rendered.sidecar));
    } else if (*segment) {
      const auto png = pipelines::segment_mask_png(decode_flo(read_file(flow_path)), parse_point(anchor_text, "--anchor"),
                                                   threshold_frac);
      write_file(mask_out, png);
    } else if (*augment) {
      pipelines::AugmentInput in;
      for (const auto& k : keyframe_args) {
        const auto colon = k.find(':');
        require(colon != std::string::npos, ErrorCode::BadParams, "--keyframe expects index:path, got '" + k + "'");
        const auto index = parse_numbers(k.substr(0, colon), 1, "--keyframe index");
        in.keyframes.push_back({static_cast<int>(index[0]), decode_frame(read_file(k.substr(colon + 1)))});
      }
      in.trajectories = load_manifest(manifest_path);
      in.trajectory_id = traj_id;
      if (mask_path) in.mask = decode_mask_png(read_file(*mask_path));
      if (aug_flow_path) in.flow = decode_flo(read_file(*aug_flow_path));
      if (aug_anchor) in.anchor = parse_point(*aug_anchor, "--anchor");
      in.threshold_frac = threshold_frac;
      in.source_frame = source;
      in.length = length;
      if (targets_text) {
        std::vector<int> slots;
        for (double t : parse_numbers(*targets_text, 0, "--targets")) slots.push_back(static_cast<int>(t));
        in.targets = slots;
      }
      in.num_targets = num_targets;
      in.dropout_p = dropout_p;
      in.seed = seed;
      const auto out = pipelines::augment(in);
      write_sequence(augment_dir, "frame", out.frame_png);
      write_sequence(augment_dir, "mask", out.mask_png);
      write_text(fs::path(augment_dir) / "slots.json", dump_json(out.slots));
    } else if (*layout) {
      const auto size = parse_size(layout_size);
      vae.causal_first_frame = !non_causal;
      emit_json(layout_manifest_json(layout_frames, size.height, size.width, vae, embed_dim), json_out);
    } else if (*curriculum) {
      const auto s = parse_numbers(steps_text, 4, "--steps");
      emit_json(to_json(curriculum_manifest({static_cast<int>(s[0]), static_cast<int>(s[1]), static_cast<int>(s[2]),
                                             static_cast<int>(s[3])})),
                json_out);
    } else if (*eval_motion) {
      emit_json(pipelines::evaluate_motion(load_manifest(manifest_path), load_flows(flow_inputs)), json_out);
    } else if (*eval_ssim) {
      emit_json(pipelines::evaluate_ssim(load_frames(a_inputs), load_frames(b_inputs)), json_out);
    } else if (*serve) {
      service::ServiceOptions options;
      options.ttl = std::chrono::seconds(ttl_seconds);
      options.ui_dir = ui_dir;
      return service::serve(service::parse_bind(bind), options);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace multicoin::cli
