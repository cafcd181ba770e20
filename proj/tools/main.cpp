#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "raw2raw/calibration.hpp"
#include "raw2raw/errors.hpp"
#include "raw2raw/metrics.hpp"
#include "raw2raw/noise.hpp"
#include "raw2raw/pairing.hpp"
#include "raw2raw/raw.hpp"
#include "raw2raw/raw_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace raw2raw;

namespace {

// Exit codes: 0 success, 2 input-format, 3 metadata/config, 4 empty-result,
// 5 numerical failure.
enum ExitCode { kOk = 0, kFormat = 2, kMetadata = 3, kEmpty = 4, kNumerical = 5 };

struct GlobalOpts {
  uint64_t seed = 0;
  int threads = 0;  // 0 = auto; results never depend on it
  std::string format = "json";
};

void emit_error(const GlobalOpts& g, int code, const std::string& message) {
  if (g.format == "json") {
    json j = {{"error", message}, {"exit_code", code}};
    std::cout << j.dump() << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
}

std::array<double, 4> parse_quad(const std::string& s, const char* what) {
  std::array<double, 4> out{};
  std::stringstream ss(s);
  std::string tok;
  std::vector<double> vals;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.size() == 1) {
    out.fill(vals[0]);
  } else if (vals.size() == 4) {
    std::copy(vals.begin(), vals.end(), out.begin());
  } else {
    throw MetadataError(std::string(what) + ": expected 1 or 4 comma-separated values");
  }
  return out;
}

void collect_pixels(const RawFrame& src, const RawFrame& tgt,
                    std::vector<Pixel4>& ps, std::vector<Pixel4>& pt, size_t max_samples) {
  if (src.plane_width() != tgt.plane_width() || src.plane_height() != tgt.plane_height())
    throw MetadataError("calibrate: frames must have identical shapes");
  const size_t n = src.channels[0].data.size();
  const size_t stride = std::max<size_t>(1, n / std::max<size_t>(1, max_samples));
  for (size_t i = 0; i < n; i += stride) {
    Pixel4 a, b;
    for (int c = 0; c < 4; ++c) {
      a[c] = src.channels[c].data[i];
      b[c] = tgt.channels[c].data[i];
    }
    ps.push_back(a);
    pt.push_back(b);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAW-to-RAW translation toolkit: normalization, noise profiling, "
               "calibration baselines, evaluation metrics, patch pairing"};
  app.require_subcommand(1);

  GlobalOpts g;
  if (const char* env = std::getenv("RAW2RAW_THREADS")) g.threads = std::atoi(env);
  app.add_option("--seed", g.seed, "Seed for all stochastic behavior")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = auto); never affects results");
  app.add_option("--format", g.format, "Output format: json|text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Normalize a PGM mosaic into a .rgg4 frame");
  std::string in_mosaic, in_meta, out_path;
  ingest->add_option("--mosaic", in_mosaic, "16-bit binary PGM mosaic")->required();
  ingest->add_option("--meta", in_meta, "Metadata sidecar JSON")->required();
  ingest->add_option("--out", out_path, "Output .rgg4 path")->required();

  // profile
  auto* profile = app.add_subcommand("profile", "Build a noise profile from frames");
  std::vector<std::string> profile_inputs;
  std::string profile_out;
  NoiseProfileConfig ncfg;
  profile->add_option("--in", profile_inputs, "Input .rgg4 frames")->required();
  profile->add_option("--out", profile_out, "Output profile JSON")->required();
  profile->add_option("--patch-size", ncfg.patch_size)->capture_default_str();
  profile->add_option("--percentile", ncfg.gradient_percentile)->capture_default_str();
  profile->add_option("--bins", ncfg.num_bins)->capture_default_str();
  profile->add_option("--min-bin-count", ncfg.min_bin_count)->capture_default_str();

  // noise-distance
  auto* ndist = app.add_subcommand("noise-distance", "Masked mean |H_fake - H_real|");
  std::string fake_path, real_path;
  bool norm_by_valid = false;
  ndist->add_option("--fake", fake_path)->required();
  ndist->add_option("--real", real_path)->required();
  ndist->add_flag("--normalize-by-valid", norm_by_valid,
                  "Divide by valid-bin count instead of B*C");

  // fit-pg
  auto* fitpg = app.add_subcommand("fit-pg", "Fit Var(x) = alpha*z + beta to a profile");
  std::string fit_profile, fit_out;
  fitpg->add_option("--profile", fit_profile)->required();
  fitpg->add_option("--out", fit_out, "Optional output JSON path");

  // synth-noise
  auto* synth = app.add_subcommand("synth-noise", "Sample Poisson-Gaussian noise onto a frame");
  std::string synth_in, synth_out, alpha_str = "0", beta_str = "0";
  synth->add_option("--in", synth_in)->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--alpha", alpha_str, "Per-channel alpha (1 or 4 comma-separated)");
  synth->add_option("--beta", beta_str, "Per-channel beta (1 or 4 comma-separated)");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit a global calibration map");
  std::string cal_src, cal_tgt, cal_out, cal_kind = "quad14";
  size_t cal_max_samples = 100000;
  calibrate->add_option("--src", cal_src)->required();
  calibrate->add_option("--tgt", cal_tgt)->required();
  calibrate->add_option("--out", cal_out)->required();
  calibrate->add_option("--kind", cal_kind)->check(CLI::IsMember({"linear4", "rgb3", "quad14"}));
  calibrate->add_option("--max-samples", cal_max_samples)->capture_default_str();

  // apply
  auto* apply = app.add_subcommand("apply", "Apply a calibration map to a frame");
  std::string apply_map, apply_in, apply_out;
  apply->add_option("--map", apply_map)->required();
  apply->add_option("--in", apply_in)->required();
  apply->add_option("--out", apply_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "MAE / PSNR / SSIM / symmetric KL report");
  std::string eval_pred, eval_ref, eval_out;
  eval->add_option("--pred", eval_pred)->required();
  eval->add_option("--ref", eval_ref)->required();
  eval->add_option("--out", eval_out, "Optional report JSON path");

  // pair
  auto* pair = app.add_subcommand("pair", "Build synchronized patch pairs");
  std::string pair_a, pair_b, pair_dir, pair_matches;
  PairingConfig pcfg;
  pair->add_option("--a", pair_a)->required();
  pair->add_option("--b", pair_b)->required();
  pair->add_option("--out-dir", pair_dir)->required();
  pair->add_option("--matches", pair_matches, "Externally computed matches (xa ya xb yb score)");
  pair->add_option("--crop-size", pcfg.crop_size)->capture_default_str();
  pair->add_option("--nms-dist", pcfg.nms_min_dist)->capture_default_str();
  pair->add_option("--ransac-threshold", pcfg.ransac_threshold_px)->capture_default_str();
  pair->add_option("--ransac-iters", pcfg.ransac_max_iters)->capture_default_str();
  pair->add_option("--min-inliers", pcfg.ransac_min_inliers)->capture_default_str();

  // select-ref
  auto* selref = app.add_subcommand("select-ref", "Pick the brightness-closest candidate");
  std::string query_path;
  std::vector<std::string> candidate_paths;
  selref->add_option("--query", query_path)->required();
  selref->add_option("--candidates", candidate_paths)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kMetadata;
  }

  try {
    if (*ingest) {
      const CameraMeta meta = read_meta_sidecar(in_meta);
      const RawMosaic mosaic = read_pgm(in_mosaic, meta.cfa_pattern);
      const RawFrame frame = orient(normalize_raw(mosaic, meta));
      write_frame(frame, out_path);
    } else if (*profile) {
      std::vector<RawFrame> frames;
      for (const auto& p : profile_inputs) frames.push_back(read_frame(p));
      const NoiseProfile np = build_noise_profile(frames, ncfg);
      save_profile(np, profile_out);
    } else if (*ndist) {
      const double d =
          noise_distance(load_profile(fake_path), load_profile(real_path), norm_by_valid);
      if (g.format == "json")
        std::cout << json{{"noise_distance", d}}.dump() << "\n";
      else
        std::cout << d << "\n";
    } else if (*fitpg) {
      const PoissonGaussianParams p = fit_poisson_gaussian(load_profile(fit_profile));
      json j = {{"alpha", p.alpha}, {"beta", p.beta}};
      if (!fit_out.empty()) {
        std::ofstream os(fit_out);
        os << j.dump(2) << "\n";
      }
      if (g.format == "json") {
        std::cout << j.dump() << "\n";
      } else {
        for (int c = 0; c < 4; ++c)
          std::cout << "channel " << c << ": alpha=" << p.alpha[c]
                    << " beta=" << p.beta[c] << "\n";
      }
    } else if (*synth) {
      PoissonGaussianParams p;
      p.alpha = parse_quad(alpha_str, "--alpha");
      p.beta = parse_quad(beta_str, "--beta");
      const RawFrame noisy = synthesize_noise(read_frame(synth_in), p, g.seed);
      write_frame(noisy, synth_out);
    } else if (*calibrate) {
      const RawFrame src = read_frame(cal_src);
      const RawFrame tgt = read_frame(cal_tgt);
      std::vector<Pixel4> ps, pt;
      collect_pixels(src, tgt, ps, pt, cal_max_samples);
      CalibrationMap map = fit_calibration(ps, pt, calibration_kind_from_string(cal_kind));
      map.source_camera = src.meta.camera_id;
      map.target_camera = tgt.meta.camera_id;
      save_calibration(map, cal_out);
    } else if (*apply) {
      const CalibrationMap map = load_calibration(apply_map);
      const RawFrame out = apply_calibration(map, read_frame(apply_in));
      write_frame(out, apply_out);
    } else if (*eval) {
      const EvalReport r = evaluate_pair(read_frame(eval_pred), read_frame(eval_ref));
      if (!eval_out.empty()) save_report(r, eval_out);
      if (g.format == "json") {
        std::cout << report_to_json(r) << "\n";
      } else {
        std::cout << "mae " << r.mae << "\npsnr_db " << r.psnr_db << "\nssim " << r.ssim
                  << "\nkl_sym " << r.kl_sym << "\n";
      }
    } else if (*pair) {
      pcfg.seed = g.seed;
      const RawFrame fa = read_frame(pair_a);
      const RawFrame fb = read_frame(pair_b);
      Matcher matcher;
      if (!pair_matches.empty()) {
        const std::vector<Match> imported = load_matches(pair_matches);
        matcher = [imported](const Plane&, const Plane&) { return imported; };
      }
      const PairingOutput out = build_pairs(fa, fb, pcfg, matcher);
      fs::create_directories(pair_dir);
      for (size_t i = 0; i < out.pairs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "pair_%04zu", i);
        write_frame(out.pairs[i].patch_a, fs::path(pair_dir) / (std::string(name) + "_a.rgg4"));
        write_frame(out.pairs[i].patch_b, fs::path(pair_dir) / (std::string(name) + "_b.rgg4"));
      }
      save_manifest(out.manifest, fs::path(pair_dir) / "manifest.json");
      if (out.manifest.empty_result_warning)
        std::cerr << "warning: no patch pairs produced\n";
    } else if (*selref) {
      const RawFrame query = read_frame(query_path);
      std::vector<RawFrame> candidates;
      for (const auto& p : candidate_paths) candidates.push_back(read_frame(p));
      const size_t idx = select_reference(query, candidates);
      if (g.format == "json")
        std::cout << json{{"index", idx}}.dump() << "\n";
      else
        std::cout << idx << "\n";
    }
  } catch (const FormatError& e) {
    emit_error(g, kFormat, e.what());
    return kFormat;
  } catch (const MetadataError& e) {
    emit_error(g, kMetadata, e.what());
    return kMetadata;
  } catch (const EmptyResultError& e) {
    emit_error(g, kEmpty, e.what());
    return kEmpty;
  } catch (const NumericalError& e) {
    emit_error(g, kNumerical, e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    emit_error(g, kNumerical, e.what());
    return kNumerical;
  }
  return kOk;
}
