// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit
//
// Command-line front end: synth, run, eval, sweep, bench, spectrum.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ddest/config.hpp"
#include "ddest/io.hpp"

namespace {

using namespace ddest;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed_override;
  int jobs = 1;
  bool timing = false;
};

KeyValues bind_config(const GlobalOptions& g) {
  KeyValues kv = KeyValues::defaults();
  if (!g.config_path.empty()) kv.load_file(g.config_path);
  for (const std::string& s : g.sets) kv.apply_assignment(s);
  if (!g.seed_override.empty()) kv.set("seed", g.seed_override);
  return kv;
}

std::vector<std::string> echo_header(const KeyValues& kv,
                                     const std::string& command) {
  std::vector<std::string> lines;
  lines.push_back("tool = ddest");
  lines.push_back("command = " + command);
  lines.push_back("config_hash = " + kv.hash_hex());
  std::string canon = kv.canonical_text();
  std::string line;
  for (char c : canon) {
    if (c == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line.push_back(c);
    }
  }
  return lines;
}

std::filesystem::path default_truth_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_extension(".truth.csv");
  return p;
}

int cmd_synth(const GlobalOptions& g, const std::string& out_path,
              const std::string& truth_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);

  std::vector<ChannelFrame> frames(rc.synth.frames);
  std::vector<TruthRecord> truth;
  std::vector<FrameTruth> truths(rc.synth.frames);
  parallel_for_indexed(static_cast<std::size_t>(rc.synth.frames), g.jobs,
                       [&](std::size_t f) {
                         SceneFrame sf = synthesize_scene_frame(
                             rc.scene, rc.grid, static_cast<int>(f), rc.seed);
                         frames[f] = std::move(sf.frame);
                         truths[f] = sf.truth;
                       });
  for (int f = 0; f < rc.synth.frames; ++f)
    for (int s = 0; s < 2; ++s)
      truth.push_back({f, s + 1, truths[f][s].delay_s,
                       truths[f][s].doppler_hz});

  write_ctf1(out_path, rc.grid, frames);
  std::filesystem::path tp = truth_path.empty()
                                 ? default_truth_path(out_path)
                                 : std::filesystem::path(truth_path);
  write_truth_csv(tp, echo_header(kv, "synth"), truth);
  std::cout << "wrote " << frames.size() << " frames to " << out_path
            << " and ground truth to " << tp.string() << "\n";
  return kExitOk;
}

int cmd_run(const GlobalOptions& g, const std::string& in_path,
            const std::string& algorithm_name_str,
            const std::string& out_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);
  Algorithm algorithm = algorithm_from_name(algorithm_name_str);

  FrameSet set = read_ctf1(in_path);
  // The estimator works on the grid stored in the file, not the
  // configured one; only algorithm parameters come from the config.
  rc.cfar.validate(set.grid.subcarriers * rc.pipeline.pad_delay,
                   set.grid.symbols * rc.pipeline.pad_doppler);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<EstimateRecord>> per_frame(set.frames.size());

  parallel_for_indexed(
      set.frames.size(), g.jobs, [&](std::size_t f) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<PathParams> estimates;
        if (algorithm == Algorithm::kCfar) {
          std::vector<Detection> dets =
              cfar_pipeline(set.frames[f], rc.cfar, rc.pipeline);
          ChannelFrame work = rc.pipeline.background_subtract
                                  ? background_subtract(set.frames[f])
                                  : set.frames[f];
          std::vector<PathParams> bare(dets.size());
          for (std::size_t d = 0; d < dets.size(); ++d) {
            bare[d].delay_s = dets[d].delay_s;
            bare[d].doppler_hz = dets[d].doppler_hz;
          }
          if (!bare.empty()) {
            try {
              Eigen::VectorXcd w = solve_weights(bare, work);
              for (std::size_t d = 0; d < bare.size(); ++d)
                bare[d].weight = w(d);
            } catch (const NumericalError&) {
              // keep zero weights; detections still carry delay/Doppler
            }
          }
          estimates = std::move(bare);
        } else {
          for (const EstimatedPath& p : estimate(set.frames[f], rc.mle))
            if (p.accepted) estimates.push_back(p.params);
        }
        auto t1 = std::chrono::steady_clock::now();
        const double rt =
            g.timing ? std::chrono::duration<double>(t1 - t0).count() : nan;
        for (const PathParams& p : estimates)
          per_frame[f].push_back({static_cast<int>(f), p.delay_s,
                                  p.doppler_hz, p.weight.real(),
                                  p.weight.imag(), rt});
      });

  std::vector<EstimateRecord> records;
  for (const auto& v : per_frame)
    records.insert(records.end(), v.begin(), v.end());
  write_estimates_csv(out_path, echo_header(kv, "run"), records);
  std::cout << "wrote " << records.size() << " estimates for "
            << set.frames.size() << " frames to " << out_path << "\n";
  return kExitOk;
}

int cmd_eval(const GlobalOptions& g, const std::string& estimates_path,
             const std::string& truth_path, const std::string& out_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);

  std::vector<EstimateRecord> est = read_estimates_csv(estimates_path);
  std::vector<TruthRecord> truth = read_truth_csv(truth_path);
  if (truth.empty()) throw ValidationError("eval: truth file has no records");

  std::map<int, FrameTruth> truth_by_frame;
  std::map<int, std::array<bool, 2>> seen;
  for (const TruthRecord& t : truth) {
    truth_by_frame[t.frame][t.sphere - 1] = {t.delay_s, t.doppler_hz};
    seen[t.frame][t.sphere - 1] = true;
  }
  for (const auto& [frame, flags] : seen)
    if (!flags[0] || !flags[1])
      throw ValidationError("eval: frame " + std::to_string(frame) +
                            " is missing a sphere in the truth file");

  std::map<int, std::vector<PathParams>> est_by_frame;
  for (const EstimateRecord& r : est) {
    if (!truth_by_frame.count(r.frame))
      throw ValidationError("eval: estimate references frame " +
                            std::to_string(r.frame) +
                            " absent from the truth file");
    PathParams p;
    p.weight = Complex(r.weight_re, r.weight_im);
    p.delay_s = r.delay_s;
    p.doppler_hz = r.doppler_hz;
    est_by_frame[r.frame].push_back(p);
  }

  std::vector<FrameResult> results;
  for (const auto& [frame, ft] : truth_by_frame) {
    auto it = est_by_frame.find(frame);
    std::span<const PathParams> frame_est =
        it == est_by_frame.end() ? std::span<const PathParams>()
                                 : std::span<const PathParams>(it->second);
    FrameResult fr = assign_targets(frame_est, ft, rc.boundary, rc.grid);
    fr.frame_index = frame;
    results.push_back(fr);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double det = detection_probability(results);
  double delay_rmse = nan, doppler_rmse = nan;
  int matches = 0, false_det = 0;
  for (const FrameResult& r : results) {
    matches += (r.spheres[0].matched ? 1 : 0) + (r.spheres[1].matched ? 1 : 0);
    false_det += r.false_detections;
  }
  // No matches leaves the RMSE columns as nan rather than failing: an
  // all-miss run is a valid (if unhappy) evaluation outcome.
  if (matches > 0) {
    auto [dr, ar] = rmse(results);
    delay_rmse = dr;
    doppler_rmse = ar;
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + out_path + "' for writing");
  for (const std::string& line : echo_header(kv, "eval"))
    out << "# " << line << "\n";
  out << "frames,matches,false_detections,detection_probability,"
         "delay_rmse_s,doppler_rmse_hz\n";
  out << results.size() << ',' << matches << ',' << false_det << ','
      << format_double(det) << ',' << format_double(delay_rmse) << ','
      << format_double(doppler_rmse) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for '" + out_path + "'");
  std::cout << "evaluated " << results.size() << " frames: detection "
            << format_double(det) << ", delay rmse "
            << format_double(delay_rmse) << " s, doppler rmse "
            << format_double(doppler_rmse) << " Hz\n";
  return kExitOk;
}

int cmd_sweep(const GlobalOptions& g, const std::string& out_path,
              const std::string& detail_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);
  rc.sweep.jobs = g.jobs;
  rc.sweep.measure_runtime = g.timing;

  SweepReport report = run_sweep(rc.sweep);
  write_sweep_csv(out_path, echo_header(kv, "sweep"), report);
  if (!detail_path.empty())
    write_sweep_detail_csv(detail_path, echo_header(kv, "sweep"), report);
  std::cout << "swept " << rc.sweep.angles_deg.size() << " angles x "
            << rc.sweep.algorithms.size() << " algorithms ("
            << rc.sweep.frames_per_angle << " frames each) to " << out_path
            << "\n";
  return kExitOk;
}

int cmd_bench(const GlobalOptions& g, const std::string& out_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);

  std::vector<SceneFrame> frames(rc.synth.frames);
  for (int f = 0; f < rc.synth.frames; ++f)
    frames[f] = synthesize_scene_frame(rc.scene, rc.grid, f, rc.seed);

  struct BenchRow {
    std::string name;
    double mean_runtime_s;
  };
  std::vector<BenchRow> rows;
  for (Algorithm algorithm : {Algorithm::kCfar, Algorithm::kMle}) {
    auto t0 = std::chrono::steady_clock::now();
    for (const SceneFrame& sf : frames) {
      if (algorithm == Algorithm::kCfar) {
        std::vector<Detection> dets =
            cfar_pipeline(sf.frame, rc.cfar, rc.pipeline);
        (void)dets;
      } else {
        (void)estimate(sf.frame, rc.mle);
      }
    }
    auto t1 = std::chrono::steady_clock::now();
    rows.push_back({algorithm_name(algorithm),
                    std::chrono::duration<double>(t1 - t0).count() /
                        rc.synth.frames});
  }

  for (const BenchRow& r : rows)
    std::cout << r.name << ": " << format_double(r.mean_runtime_s)
              << " s/frame over " << rc.synth.frames << " frames\n";
  std::cout << "runtime ratio mle/cfar: "
            << format_double(rows[1].mean_runtime_s / rows[0].mean_runtime_s)
            << "\n";

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    for (const std::string& line : echo_header(kv, "bench"))
      out << "# " << line << "\n";
    out << "algorithm,frames,mean_runtime_s\n";
    for (const BenchRow& r : rows)
      out << r.name << ',' << rc.synth.frames << ','
          << format_double(r.mean_runtime_s) << "\n";
    out.flush();
    if (!out) throw IoError("write failed for '" + out_path + "'");
  }
  return kExitOk;
}

int cmd_spectrum(const GlobalOptions& g, const std::string& in_path,
                 int frame_index, const std::string& out_path) {
  KeyValues kv = bind_config(g);
  RunConfig rc = RunConfig::from(kv);
  FrameSet set = read_ctf1(in_path);
  if (frame_index < 0 || frame_index >= static_cast<int>(set.frames.size()))
    throw ValidationError("spectrum: frame " + std::to_string(frame_index) +
                          " outside [0, " +
                          std::to_string(set.frames.size()) + ")");
  ChannelFrame work = rc.pipeline.background_subtract
                          ? background_subtract(set.frames[frame_index])
                          : set.frames[frame_index];
  DelayDopplerSpectrum spec = periodogram(
      hamming_window(work), rc.pipeline.pad_delay, rc.pipeline.pad_doppler);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + out_path + "' for writing");
  for (const std::string& line : echo_header(kv, "spectrum"))
    out << "# " << line << "\n";
  out << "delay_bin,doppler_bin,power\n";
  for (int j = 0; j < spec.doppler_bins(); ++j)
    for (int i = 0; i < spec.delay_bins(); ++i)
      out << i << ',' << j << ',' << format_double(spec.power(i, j)) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for '" + out_path + "'");
  std::cout << "wrote " << spec.delay_bins() * spec.doppler_bins()
            << " spectrum cells to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-Doppler parameter estimation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "configuration file");
  app.add_option("--set", g.sets, "override one key: --set section.key=value");
  app.add_option("--seed", g.seed_override, "override the root RNG seed");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::Range(1, 512));
  app.add_flag("--timing", g.timing,
               "record wall-clock runtimes (off by default so outputs are "
               "byte-stable)");

  auto* synth = app.add_subcommand("synth", "synthesize frames to a CTF1 file");
  std::string synth_out, synth_truth;
  synth->add_option("--out", synth_out, "output CTF1 path")->required();
  synth->add_option("--truth", synth_truth,
                    "ground-truth CSV path (default: <out>.truth.csv)");

  auto* run = app.add_subcommand("run", "run an estimator over a CTF1 file");
  std::string run_in, run_algorithm, run_out;
  run->add_option("--in", run_in, "input CTF1 path")->required();
  run->add_option("--algorithm", run_algorithm, "cfar or mle")->required();
  run->add_option("--out", run_out, "output estimates CSV")->required();

  auto* eval = app.add_subcommand("eval", "score estimates against truth");
  std::string eval_estimates, eval_truth, eval_out;
  eval->add_option("--estimates", eval_estimates, "estimates CSV")->required();
  eval->add_option("--truth", eval_truth, "ground-truth CSV")->required();
  eval->add_option("--out", eval_out, "output metrics CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "bistatic-angle Monte Carlo sweep");
  std::string sweep_out, sweep_detail;
  sweep->add_option("--out", sweep_out, "output summary CSV")->required();
  sweep->add_option("--detail", sweep_detail, "optional per-frame detail CSV");

  auto* bench = app.add_subcommand("bench", "time both estimators");
  std::string bench_out;
  bench->add_option("--out", bench_out, "optional runtimes CSV");

  auto* spectrum =
      app.add_subcommand("spectrum", "export one frame's power spectrum");
  std::string spec_in, spec_out;
  int spec_frame = 0;
  spectrum->add_option("--in", spec_in, "input CTF1 path")->required();
  spectrum->add_option("--frame", spec_frame, "frame index");
  spectrum->add_option("--out", spec_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(g, synth_out, synth_truth);
    if (run->parsed()) return cmd_run(g, run_in, run_algorithm, run_out);
    if (eval->parsed()) return cmd_eval(g, eval_estimates, eval_truth, eval_out);
    if (sweep->parsed()) return cmd_sweep(g, sweep_out, sweep_detail);
    if (bench->parsed()) return cmd_bench(g, bench_out);
    if (spectrum->parsed()) return cmd_spectrum(g, spec_in, spec_frame, spec_out);
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
