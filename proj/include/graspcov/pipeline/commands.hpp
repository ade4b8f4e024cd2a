#pragma once

// Pipeline commands. Output layout under the run directory:
//
//   references/<object>.gref, references/<object>.json
//   reports/<object>/<sampler>_seed<seed>.csv (+ .json sidecar)
//   aggregate.csv, precision.csv, manifest.json
//
// Every file is written atomically. Sidecars carry the config hash and are
// written after their data file, so `resume` can skip finished work.

#include "graspcov/core/error.hpp"
#include "graspcov/metrics/coverage.hpp"
#include "graspcov/pipeline/config.hpp"
#include "graspcov/pipeline/reference_io.hpp"
#include "graspcov/pipeline/report.hpp"
#include "graspcov/samplers/samplers.hpp"
#include "graspcov/se3/farthest.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace graspcov {

struct RunOptions {
  unsigned jobs = 1;
  bool resume = false;
  std::function<void(const std::string&)> log;  // advisory progress messages
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void say(const RunOptions& opt, const std::string& msg) {
  if (opt.log) opt.log(msg);
}

inline std::optional<Json> read_json_if_exists(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  try {
    return Json::parse(read_file_bytes(path));
  } catch (const Json::parse_error&) {
    return std::nullopt;
  }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
/// is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !stop; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < t; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

inline Json manifest_base(const RunConfig& cfg) {
  return {{"toolkit_version", kToolkitVersion},
          {"oracle_version", kOracleVersion},
          {"config_hash", config_hash(cfg)},
          {"config", to_json(cfg)},
          {"aggregation",
           "mean and sample standard deviation over objects and seeds at equal n_valid checkpoints; "
           "undefined cells are skipped"}};
}

/// Merges `section` into <out>/manifest.json, starting fresh when the
/// existing manifest belongs to another config.
inline void update_manifest(const RunConfig& cfg, const std::string& key, const Json& section) {
  const auto path = cfg.output_dir / "manifest.json";
  Json m = manifest_base(cfg);
  if (auto old = read_json_if_exists(path); old && old->value("config_hash", "") == m["config_hash"]) {
    for (auto& [k, v] : old->items())
      if (!m.contains(k)) m[k] = v;
  }
  m[key] = section;
  write_file_atomic(path, m.dump(2) + "\n");
}

}  // namespace detail

struct PreparedObject {
  ObjectConfig config;
  TriMesh mesh;
  std::string mesh_sha256;
  std::string reference_hash;
};

inline PreparedObject prepare_object(const RunConfig& cfg, const ObjectConfig& o) {
  PreparedObject p;
  p.config = o;
  const auto path = cfg.mesh_path(o);
  p.mesh_sha256 = sha256_hex(read_file_bytes(path));
  p.mesh = load_mesh(path, o.scale);
  p.reference_hash = reference_hash(cfg, o, p.mesh_sha256);
  return p;
}

inline std::filesystem::path references_dir(const RunConfig& cfg) { return cfg.output_dir / "references"; }

inline std::filesystem::path report_file(const RunConfig& cfg, const std::string& object_id,
                                         const std::string& sampler, std::uint64_t seed) {
  return cfg.output_dir / "reports" / object_id / (sampler + "_seed" + std::to_string(seed) + ".csv");
}

/// Builds, labels and stores one reference set per object.
inline Json cmd_reference(const RunConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const auto t0 = detail::Clock::now();
  const auto dir = references_dir(cfg);
  Json objects = Json::object();
  for (const ObjectConfig& o : cfg.objects) {
    const PreparedObject obj = prepare_object(cfg, o);
    const auto file = reference_file(dir, o.id);
    if (opt.resume) {
      const auto side = detail::read_json_if_exists(reference_sidecar(dir, o.id));
      if (side && side->value("reference_hash", "") == obj.reference_hash && std::filesystem::exists(file) &&
          side->value("file_sha256", "") == sha256_hex(read_file_bytes(file))) {
        detail::say(opt, "reference " + o.id + ": up to date, skipped");
        objects[o.id] = (*side)["counts"];
        objects[o.id]["reference_hash"] = obj.reference_hash;
        continue;
      }
    }
    const auto t_obj = detail::Clock::now();
    const GridSpec grid = cfg.grid_for(obj.mesh);
    ReferenceOptions ro;
    ro.jobs = opt.jobs;
    ro.max_enumerated = cfg.max_enumerated;
    ReferenceSet ref = generate_reference(obj.mesh, cfg.gripper, grid, cfg.mu, ro);
    ref.object_id = o.id;
    ref.omega = cfg.metric.omega;
    label_robustness(ref, cfg.robustness_eps, cfg.neighbourhood);
    const Json summary = save_reference(ref, dir, obj.reference_hash);
    objects[o.id] = summary["counts"];
    objects[o.id]["reference_hash"] = obj.reference_hash;
    if (cfg.record_wall_time) objects[o.id]["wall_s"] = detail::seconds_since(t_obj);
    detail::say(opt, "reference " + o.id + ": " + std::to_string(ref.enumerated) + " enumerated, " +
                         std::to_string(ref.valid_count()) + " valid, " + std::to_string(ref.success_count()) +
                         " successful");
  }
  Json section = {{"objects", objects},
                  {"wall_s", cfg.record_wall_time ? Json(detail::seconds_since(t0)) : Json(nullptr)}};
  detail::update_manifest(cfg, "reference", section);
  return section;
}

/// Successful reference grasps and their robustness, as used for coverage.
struct CoverageTarget {
  std::vector<Pose> successes;
  std::vector<double> robustness;  // empty when the reference has none
  MetricParams params;

  static CoverageTarget from(const ReferenceSet& ref) {
    CoverageTarget t;
    t.params = MetricParams(ref.omega);
    for (std::size_t i = 0; i < ref.poses.size(); ++i) {
      if (!ref.labels[i].success) continue;
      t.successes.push_back(ref.poses[i]);
      if (ref.has_robustness()) t.robustness.push_back(ref.robustness[i]);
    }
    return t;
  }
};

struct RunResult {
  std::vector<ReportRow> rows;
  std::uint64_t n_valid = 0;
  std::uint64_t attempts = 0;
  bool exhausted = false;
};

/// Samples one (object, sampler, seed) run and reports coverage and
/// precision at every checkpoint. A stream that runs out of attempts gets a
/// final row at the number of valid grasps it reached.
inline RunResult evaluate_run(const TriMesh& mesh, const RunConfig& cfg, const CoverageTarget& target,
                              const std::string& object_id, const SamplerSpec& spec) {
  const auto t0 = detail::Clock::now();
  const std::uint64_t n_max = cfg.checkpoints.back();
  CandidateStream stream(mesh, cfg.gripper, spec, n_max, cfg.sampler_options());
  const std::vector<double> gammas = cfg.report_gammas();
  const std::string sampler = spec.name();

  RunResult out;
  std::vector<Pose> poses;
  std::uint64_t successes = 0;
  std::uint64_t last_emitted = 0;

  auto emit = [&](std::uint64_t n, std::uint64_t attempts) {
    const double prec = cfg.precision_denominator == PrecisionDenominator::Valid
                            ? precision(successes, n)
                            : precision(successes, attempts);
    std::vector<double> dist;
    if (!target.successes.empty()) {
      const PoseIndex index(std::span<const Pose>(poses.data(), n), target.params);
      dist = nearest_distances(index, target.successes);
    }
    for (double gamma : gammas) {
      std::vector<double> d;
      const bool defined = gamma == 0.0 || !target.robustness.empty();
      if (defined) {
        for (std::size_t i = 0; i < dist.size(); ++i)
          if (gamma == 0.0 || target.robustness[i] >= gamma) d.push_back(dist[i]);
      }
      double c2 = std::numeric_limits<double>::quiet_NaN(), c3 = c2;
      if (!d.empty()) {
        c2 = cov2_from_distances(d);
        c3 = cov3_from_distances(d);
      }
      const double wall = cfg.record_wall_time ? 1000.0 * detail::seconds_since(t0)
                                               : std::numeric_limits<double>::quiet_NaN();
      for (double eps : cfg.eps) {
        ReportRow r;
        r.object_id = object_id;
        r.sampler = sampler;
        r.n_valid = n;
        r.attempts = attempts;
        r.eps = eps;
        r.gamma = gamma;
        if (!d.empty()) r.cov1 = cov1_from_distances(d, eps);
        r.cov2 = c2;
        r.cov3 = c3;
        r.precision = prec;
        r.wall_ms = wall;
        out.rows.push_back(r);
      }
    }
    last_emitted = n;
  };

  std::size_t next_cp = 0;
  while (auto c = stream.next()) {
    if (c->validity != Validity::Valid) continue;
    poses.push_back(c->pose);
    successes += label_valid_grasp(mesh, c->pose, cfg.gripper, cfg.mu).success;
    if (poses.size() == cfg.checkpoints[next_cp]) {
      emit(poses.size(), c->attempt_index + 1);
      ++next_cp;
    }
  }
  out.n_valid = poses.size();
  out.attempts = stream.attempts();
  out.exhausted = stream.exhausted();
  if (out.exhausted && out.n_valid > last_emitted) emit(out.n_valid, out.attempts);
  return out;
}

struct EvaluateResult {
  std::vector<std::filesystem::path> reports;
  std::filesystem::path aggregate_csv;
  std::filesystem::path precision_csv;
};

/// Runs every (object, sampler, seed) cell against the stored references
/// and writes the per-run CSVs and the aggregate tables.
inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const RunOptions& opt = {},
                                   std::optional<std::filesystem::path> reference_dir = std::nullopt) {
  cfg.validate();
  const auto t0 = detail::Clock::now();
  const std::string hash = config_hash(cfg);
  const auto ref_dir = reference_dir.value_or(references_dir(cfg));

  std::vector<PreparedObject> objects;
  std::vector<CoverageTarget> targets;
  for (const ObjectConfig& o : cfg.objects) {
    objects.push_back(prepare_object(cfg, o));
    const ReferenceSet ref = load_matching_reference(ref_dir, o.id, objects.back().reference_hash);
    targets.push_back(CoverageTarget::from(ref));
  }

  struct Cell {
    std::size_t object;
    SamplerSpec spec;
    std::filesystem::path csv;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < cfg.objects.size(); ++i)
    for (const SamplerSpec& s : cfg.samplers)
      for (std::uint64_t seed : cfg.seeds) {
        SamplerSpec spec = s;
        spec.seed = seed;
        cells.push_back({i, spec, report_file(cfg, cfg.objects[i].id, spec.name(), seed)});
      }

  std::mutex log_mutex;
  std::atomic<std::size_t> done{0};
  detail::parallel_for(cells.size(), opt.jobs, [&](std::size_t k) {
    const Cell& cell = cells[k];
    const std::string& id = cfg.objects[cell.object].id;
    auto side_path = cell.csv;
    side_path.replace_extension(".json");
    if (opt.resume) {
      const auto side = detail::read_json_if_exists(side_path);
      if (side && side->value("config_hash", "") == hash && std::filesystem::exists(cell.csv) &&
          side->value("csv_sha256", "") == sha256_hex(read_file_bytes(cell.csv))) {
        ++done;
        return;
      }
    }
    const RunResult r = evaluate_run(objects[cell.object].mesh, cfg, targets[cell.object], id, cell.spec);
    const std::string csv = format_report(r.rows);
    write_file_atomic(cell.csv, csv);
    const Json side = {{"config_hash", hash},
                       {"object_id", id},
                       {"sampler", cell.spec.name()},
                       {"seed", cell.spec.seed},
                       {"n_valid", r.n_valid},
                       {"attempts", r.attempts},
                       {"exhausted", r.exhausted},
                       {"csv_sha256", sha256_hex(csv)}};
    write_file_atomic(side_path, side.dump(2) + "\n");
    const std::size_t d = ++done;
    if (opt.log) {
      std::lock_guard lock(log_mutex);
      opt.log("evaluate " + std::to_string(d) + "/" + std::to_string(cells.size()) + ": " + id + " " +
              cell.spec.name() + " seed " + std::to_string(cell.spec.seed) + " (" + std::to_string(r.attempts) +
              " attempts" + (r.exhausted ? ", budget exhausted" : "") + ")");
    }
  });

  // Aggregate from the files on disk, so resumed cells count the same way.
  EvaluateResult result;
  std::vector<ReportRow> all_rows;
  std::vector<std::vector<ReportRow>> runs;
  Json outputs = Json::array();
  for (const Cell& cell : cells) {
    auto rows = parse_report(read_file_bytes(cell.csv), cell.csv.string());
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    runs.push_back(std::move(rows));
    result.reports.push_back(cell.csv);
    outputs.push_back({{"file", std::filesystem::relative(cell.csv, cfg.output_dir).generic_string()},
                       {"object_id", cfg.objects[cell.object].id},
                       {"sampler", cell.spec.name()},
                       {"seed", cell.spec.seed},
                       {"config_hash", hash}});
  }
  std::vector<std::string> order;
  for (const SamplerSpec& s : cfg.samplers) order.push_back(s.name());
  result.aggregate_csv = cfg.output_dir / "aggregate.csv";
  result.precision_csv = cfg.output_dir / "precision.csv";
  write_file_atomic(result.aggregate_csv, format_aggregate(aggregate(all_rows, order)));
  write_file_atomic(result.precision_csv, format_precision_table(precision_table(runs, order)));

  Json section = {{"reports", outputs},
                  {"aggregate", "aggregate.csv"},
                  {"precision", "precision.csv"},
                  {"wall_s", cfg.record_wall_time ? Json(detail::seconds_since(t0)) : Json(nullptr)}};
  detail::update_manifest(cfg, "evaluate", section);
  return result;
}

struct FarthestGrasp {
  std::size_t index = 0;  // position in the reference set
  Pose pose;
  std::uint64_t grid_index = 0;
  double robustness = 0.0;
};

/// k diverse robust grasps: farthest point selection over the successes
/// with robustness >= gamma, seeded with the first of them.
inline std::vector<FarthestGrasp> farthest_robust(const ReferenceSet& ref, std::size_t k, double gamma) {
  const std::vector<Pose> robust = robust_filter(ref, gamma);
  if (robust.empty())
    throw Error(ErrorCode::EmptyRobustSet, "no successful grasp has robustness >= " + format_number(gamma));
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < ref.poses.size(); ++i)
    if (ref.labels[i].success && ref.robustness[i] >= gamma) where.push_back(i);
  std::vector<FarthestGrasp> out;
  for (std::size_t j : farthest_point_indices(robust, k, MetricParams(ref.omega))) {
    const std::size_t i = where[j];
    out.push_back({i, ref.poses[i], ref.grid_index[i], ref.robustness[i]});
  }
  return out;
}

inline std::string format_farthest(const std::vector<FarthestGrasp>& grasps) {
  std::string out = "rank,index,grid_index,px,py,pz,qw,qx,qy,qz,robustness\n";
  for (std::size_t r = 0; r < grasps.size(); ++r) {
    const FarthestGrasp& g = grasps[r];
    out += std::to_string(r) + ',' + std::to_string(g.index) + ',' + std::to_string(g.grid_index);
    for (double v : {g.pose.p.x(), g.pose.p.y(), g.pose.p.z(), g.pose.q.w(), g.pose.q.x(), g.pose.q.y(),
                     g.pose.q.z(), g.robustness})
      out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

inline std::vector<FarthestGrasp> cmd_farthest(const std::filesystem::path& reference, std::size_t k, double gamma,
                                               const std::filesystem::path& out_csv) {
  const StoredReference s = load_reference(reference);
  auto grasps = farthest_robust(s.set, k, gamma);
  write_file_atomic(out_csv, format_farthest(grasps));
  return grasps;
}

}  // namespace graspcov
