#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>

#include <CLI11.hpp>

#include "stsvd/baselines.hpp"
#include "stsvd/cli.hpp"
#include "stsvd/error.hpp"
#include "stsvd/metrics.hpp"
#include "stsvd/phantom.hpp"
#include "stsvd/rankselect.hpp"
#include "stsvd/stream.hpp"
#include "stsvd/svdcore.hpp"

namespace stsvd {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Every command runs from a fully resolved parameter object, so a manifest
// replay goes through the same code as the original invocation.
using Command = std::function<void(const json& p, std::ostream& out, std::ostream& err)>;

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension(suffix);
  return p;
}

std::string absolute_or_empty(const std::string& path) {
  return path.empty() ? path : fs::absolute(path).lexically_normal().string();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void finish_manifest(RunManifest& m, const json& p) {
  m.params = p;
  write_manifest(manifest_path_for(p.at("out").get<std::string>()), m);
}

RsvdOptions rsvd_options(const json& p) {
  RsvdOptions o;
  o.oversample = p.at("oversample").get<std::size_t>();
  o.power_iters = p.at("power_iters").get<int>();
  o.seed = p.at("seed").get<std::uint64_t>();
  return o;
}

RankSelectOptions select_options(const json& p) {
  RankSelectOptions o;
  o.n_eval = p.at("n_eval").get<std::size_t>();
  o.floor_level = p.at("floor_level").get<double>();
  o.tau = p.at("tau").get<double>();
  return o;
}

void write_rank_diagnostics(const fs::path& out, const RankEstimate& temporal, const RankEstimate& spatial,
                            RunManifest& m) {
  const auto bw_path = sibling(out, ".bandwidth.csv");
  const auto sim_path = sibling(out, ".similarity.csv");
  auto bw = open_out(bw_path);
  write_bandwidth_csv(bw, temporal.bandwidth);
  auto sim = open_out(sim_path);
  write_similarity_csv(sim, *spatial.similarity);
  m.outputs["bandwidth_csv"] = bw_path.string();
  m.outputs["similarity_csv"] = sim_path.string();
  m.results["k_temporal"] = temporal.k_hat;
  m.results["k_spatial"] = spatial.k_hat;
  m.results["temporal_no_noise_floor"] = temporal.no_noise_floor;
}

// ---- synth ------------------------------------------------------------------

void cmd_synth(const json& p, std::ostream& out, std::ostream&) {
  MotionSchedule schedule;
  try {
    schedule = MotionSchedule::parse(p.at("schedule").get<std::string>());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schedule) throw Error(ErrorKind::Usage, e.what());
    throw;
  }
  PhantomGrid grid{p.at("nx").get<std::size_t>(), p.at("nz").get<std::size_t>(), p.at("dx_mm").get<double>(),
                   p.at("dz_mm").get<double>()};
  PatternOptions popts;
  if (p.at("fluence_decay_mm").get<double>() > 0.0) popts.fluence_decay_mm = p.at("fluence_decay_mm").get<double>();

  StackMeta meta{grid.n_x, grid.n_z, schedule.total_frames(), grid.dx_mm, grid.dz_mm, p.at("dt_s").get<double>()};
  const auto pattern = make_vessel_pattern(default_vessels(), grid, popts);
  FrameStack clean = [&] {
    try {
      return make_framestack(pattern, schedule, meta);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Schedule) throw Error(ErrorKind::Usage, e.what());
      throw;
    }
  }();
  const auto seed = p.at("seed").get<std::uint64_t>();
  const FrameStack noisy = add_gaussian_noise(clean, p.at("snr_db").get<double>(), seed);

  const fs::path out_path = p.at("out").get<std::string>();
  const fs::path clean_path = sibling(out_path, ".clean.json");
  save_framestack(noisy, out_path);
  save_framestack(clean, clean_path);

  RunManifest m;
  m.command = "synth";
  m.seeds = {{"noise", seed}};
  m.outputs = {{"noisy", out_path.string()}, {"clean", clean_path.string()}};
  m.results = {{"n_t", clean.n_t()}, {"noise_sigma", noise_sigma_for_snr(clean, p.at("snr_db").get<double>())}};
  finish_manifest(m, p);
  out << "wrote " << out_path.string() << " and " << clean_path.string() << " (" << clean.n_x() << "x"
      << clean.n_z() << "x" << clean.n_t() << ")\n";
}

// ---- denoise ----------------------------------------------------------------

struct FrameScores {
  std::vector<MetricsReport> rows;
};

FrameScores score_against(const FrameStack& img, const FrameStack& ref, PsnrForm form) {
  if (ref.n_x() != img.n_x() || ref.n_z() != img.n_z() || (ref.n_t() != 1 && ref.n_t() != img.n_t())) {
    throw Error(ErrorKind::Dimension, "reference stack shape does not match the input");
  }
  FrameScores s;
  for (std::size_t t = 0; t < img.n_t(); ++t) {
    const Image x = img.frame(t);
    const Image y = ref.frame(ref.n_t() == 1 ? 0 : t);
    MetricsReport r;
    r.frame_index = t;
    r.psnr_db = psnr(x, y, form);
    r.ssim = ssim(x, y);
    r.epi = epi(x, y);
    s.rows.push_back(r);
  }
  return s;
}

json summarize(const FrameScores& s) {
  auto mean_of = [&](auto field) -> json {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : s.rows) {
      const std::optional<double>& v = r.*field;
      if (v && std::isfinite(*v)) {
        sum += *v;
        ++n;
      }
    }
    return n ? json(sum / static_cast<double>(n)) : json(nullptr);
  };
  return {{"mean_psnr_db", mean_of(&MetricsReport::psnr_db)},
          {"mean_ssim", mean_of(&MetricsReport::ssim)},
          {"mean_epi", mean_of(&MetricsReport::epi)}};
}

void cmd_denoise(const json& p, std::ostream& out, std::ostream& err) {
  const fs::path in_path = p.at("input").get<std::string>();
  const fs::path out_path = p.at("out").get<std::string>();
  const std::string method = p.at("method").get<std::string>();
  const PsnrForm form = parse_psnr_form(p.at("psnr_form").get<std::string>());

  RunManifest m;
  m.command = "denoise";
  m.inputs = {{"input", in_path.string()}};
  m.outputs = {{"denoised", out_path.string()}};

  if (method == "stsvd") {
    const StreamRank rank = StreamRank::parse(p.at("rank").get<std::string>());
    const RsvdOptions opts = rsvd_options(p);
    m.seeds = {{"sketch", opts.seed}};
    const std::size_t window = p.at("window").get<std::size_t>();
    if (window > 0) {
      StreamConfig cfg;
      cfg.window = window;
      cfg.stride = p.at("stride").get<std::size_t>();
      cfg.rank = rank;
      cfg.svd = opts;
      cfg.select = select_options(p);
      FileFrameSource source(in_path);
      FileFrameSink sink(out_path, source.meta());
      const StreamStats stats = stream_denoise(source, sink, cfg);
      for (const auto& w : stats.warnings) err << "warning: " << w << '\n';
      json windows = json::array();
      for (const auto& w : stats.windows) windows.push_back({{"start", w.start}, {"length", w.length}, {"rank", w.rank}});
      m.results = {{"windows", windows}, {"peak_buffered", stats.peak_buffered},
                   {"partial_window", stats.partial_window}};
      if (rank.mode != RankMode::Fixed) {
        const auto diag = sibling(out_path, ".windows.csv");
        auto csv = open_out(diag);
        csv << "start,length,k_temporal,k_spatial,rank\n";
        for (const auto& w : stats.windows) {
          csv << w.start << ',' << w.length << ',' << (w.temporal ? std::to_string(w.temporal->k_hat) : "") << ','
              << (w.spatial ? std::to_string(w.spatial->k_hat) : "") << ',' << w.rank << '\n';
        }
        m.outputs["windows_csv"] = diag.string();
      }
      out << "streamed " << stats.frames_out << " frames in " << stats.windows.size() << " windows\n";
    } else {
      const FrameStack input = load_framestack(in_path);
      std::size_t k = rank.k;
      if (rank.mode != RankMode::Fixed) {
        auto [temporal, spatial] = estimate_ranks(to_casorati(input), select_options(p), opts.seed);
        write_rank_diagnostics(out_path, temporal, spatial, m);
        k = rank.mode == RankMode::AutoTemporal  ? temporal.k_hat
            : rank.mode == RankMode::AutoSpatial ? spatial.k_hat
                                                 : combine_ranks(temporal, spatial, RankPolicy::Min);
      }
      m.results["rank"] = k;
      save_framestack(rsvd_denoise(input, k, opts), out_path);
      out << "stsvd rank " << k << '\n';
    }
  } else if (method == "avg") {
    const FrameStack input = load_framestack(in_path);
    const std::size_t w = p.at("avg_window").get<std::size_t>();
    if (w == 0) {
      const FrameStack mean = average_frames(input);
      std::vector<Image> frames(input.n_t(), mean.frame(0));
      save_framestack(stack_from_frames(input.meta(), frames), out_path);
    } else {
      save_framestack(sliding_average(input, w), out_path);
    }
  } else if (method == "dwt") {
    const FrameStack input = load_framestack(in_path);
    DwtOptions d;
    d.levels = p.at("dwt_levels").get<std::size_t>();
    d.threshold_scale = p.at("dwt_threshold_scale").get<double>();
    std::size_t used = 0;
    save_framestack(dwt_denoise(input, d, &used), out_path);
    m.results["dwt_levels_used"] = used;
    if (used != d.levels) err << "warning: DWT depth reduced to " << used << " levels\n";
  } else {
    throw Error(ErrorKind::Usage, "unknown method '" + method + "' (expected stsvd, avg or dwt)");
  }

  const std::string ref = p.at("reference").get<std::string>();
  if (!ref.empty()) {
    const FrameScores scores = score_against(load_framestack(out_path), load_framestack(ref), form);
    const auto csv_path = sibling(out_path, ".metrics.csv");
    auto csv = open_out(csv_path);
    write_metrics_header(csv);
    for (const auto& r : scores.rows) write_metrics_row(csv, r);
    m.inputs["reference"] = ref;
    m.outputs["metrics_csv"] = csv_path.string();
    m.results["metrics"] = summarize(scores);
  }
  finish_manifest(m, p);
}

// ---- rank -------------------------------------------------------------------

void cmd_rank(const json& p, std::ostream& out, std::ostream&) {
  const fs::path in_path = p.at("input").get<std::string>();
  const fs::path out_path = p.at("out").get<std::string>();
  const RankPolicy policy = parse_rank_policy(p.at("policy").get<std::string>());
  const auto seed = p.at("seed").get<std::uint64_t>();
  const FrameStack input = load_framestack(in_path);
  auto [temporal, spatial] = estimate_ranks(to_casorati(input), select_options(p), seed);
  const std::size_t k = combine_ranks(temporal, spatial, policy);

  RunManifest m;
  m.command = "rank";
  m.seeds = {{"sketch", seed}};
  m.inputs = {{"input", in_path.string()}};
  m.outputs = {{"summary_csv", out_path.string()}};
  write_rank_diagnostics(out_path, temporal, spatial, m);
  m.results["rank"] = k;

  auto csv = open_out(out_path);
  csv << "estimator,k_hat\n";
  csv << "temporal," << temporal.k_hat << "\nspatial," << spatial.k_hat << '\n' << to_string(policy) << ',' << k << '\n';
  finish_manifest(m, p);
  out << "k_temporal=" << temporal.k_hat << " k_spatial=" << spatial.k_hat << " " << to_string(policy) << "=" << k
      << (temporal.no_noise_floor ? " (temporal curve never reached the noise floor)" : "") << '\n';
}

// ---- metrics ----------------------------------------------------------------

void cmd_metrics(const json& p, std::ostream& out, std::ostream&) {
  const fs::path in_path = p.at("input").get<std::string>();
  const fs::path out_path = p.at("out").get<std::string>();
  const FrameStack input = load_framestack(in_path);
  const PsnrForm form = parse_psnr_form(p.at("psnr_form").get<std::string>());

  RunManifest m;
  m.command = "metrics";
  m.inputs = {{"input", in_path.string()}};
  m.outputs = {{"metrics_csv", out_path.string()}};

  std::optional<FrameScores> scores;
  if (const std::string ref = p.at("reference").get<std::string>(); !ref.empty()) {
    scores = score_against(input, load_framestack(ref), form);
    m.inputs["reference"] = ref;
  }
  std::optional<RoiSet> rois;
  if (const std::string r = p.at("rois").get<std::string>(); !r.empty()) {
    rois = load_rois(r);
    rois->validate(input.n_x(), input.n_z());
    m.inputs["rois"] = r;
  }
  const long profile_x = p.at("profile_x").get<long>();
  if (profile_x >= 0 && static_cast<std::size_t>(profile_x) >= input.n_x()) {
    throw Error(ErrorKind::Bounds, "profile column x=" + std::to_string(profile_x) + " outside [0, " +
                                       std::to_string(input.n_x()) + ")");
  }

  auto csv = open_out(out_path);
  write_metrics_header(csv);
  for (std::size_t t = 0; t < input.n_t(); ++t) {
    MetricsReport r = scores ? scores->rows[t] : MetricsReport{};
    r.frame_index = t;
    const Image f = input.frame(t);
    if (rois) {
      r.snr_db = roi_snr(f, *rois);
      r.cnr = roi_cnr(f, *rois);
    }
    if (profile_x >= 0) {
      const Vector prof = f.row(profile_x).cwiseAbs().transpose();
      r.fwhm_mm = fwhm(std::span<const double>(prof.data(), static_cast<std::size_t>(prof.size())),
                       input.meta().dz_mm);
    }
    write_metrics_row(csv, r);
  }
  if (scores) m.results = summarize(*scores);
  finish_manifest(m, p);
  out << "wrote " << input.n_t() << " metric rows to " << out_path.string() << '\n';
}

// ---- export-image -----------------------------------------------------------

void cmd_export_image(const json& p, std::ostream& out, std::ostream&) {
  const fs::path in_path = p.at("input").get<std::string>();
  const fs::path out_path = p.at("out").get<std::string>();
  const FrameStack input = load_framestack(in_path);
  const long frame = p.at("frame").get<long>();
  const std::string mip = p.at("mip").get<std::string>();
  if ((frame >= 0) == !mip.empty()) throw Error(ErrorKind::Usage, "export-image needs exactly one of --frame or --mip");
  const Image view = frame >= 0 ? display_frame(input, static_cast<std::size_t>(frame))
                                : display_mip(input, parse_mip_axis(mip));
  const Gray8 g = log_compress(view, p.at("dynamic_range_db").get<double>());
  write_pgm(out_path, g);

  RunManifest m;
  m.command = "export-image";
  m.inputs = {{"input", in_path.string()}};
  m.outputs = {{"pgm", out_path.string()}};
  m.results = {{"width", g.width}, {"height", g.height}};
  finish_manifest(m, p);
  out << "wrote " << g.width << "x" << g.height << " PGM " << out_path.string() << '\n';
}

// ---- bench ------------------------------------------------------------------

void cmd_bench(const json& p, std::ostream& out, std::ostream&) {
  const fs::path out_path = p.at("out").get<std::string>();
  BenchDims dims{p.at("nx").get<std::size_t>(), p.at("nz").get<std::size_t>(), p.at("nt").get<std::size_t>()};
  const RsvdOptions opts = rsvd_options(p);
  const BenchReport r = bench(dims, p.at("reps").get<std::size_t>(), p.at("rank").get<std::size_t>(),
                              p.at("stride").get<std::size_t>(), opts);
  auto csv = open_out(out_path);
  write_bench_csv(csv, r);

  RunManifest m;
  m.command = "bench";
  m.seeds = {{"bench", opts.seed}};
  m.outputs = {{"bench_csv", out_path.string()}};
  m.results = {{"per_window_s", r.per_window_s}, {"per_frame_s", r.per_frame_s}, {"rep_seconds", r.rep_seconds}};
  finish_manifest(m, p);
  out << dims.n_x << "x" << dims.n_z << "x" << dims.n_t << " rank " << r.rank << ": " << r.per_window_s * 1e3
      << " ms per window, " << r.per_frame_s * 1e6 << " us per frame (stride " << r.stride << ", median of "
      << r.reps - 1 << " reps)\n"
      << "GPU context figure: about 10 ms per 600x128x200 window, about 50 us per frame\n";
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"synth", cmd_synth},   {"denoise", cmd_denoise},          {"rank", cmd_rank},
      {"metrics", cmd_metrics}, {"export-image", cmd_export_image}, {"bench", cmd_bench},
  };
  return table;
}

void execute(const std::string& command, const json& params, std::ostream& out, std::ostream& err) {
  const auto it = commands().find(command);
  if (it == commands().end()) throw Error(ErrorKind::Parse, "manifest names unknown command '" + command + "'");
  try {
    it->second(params, out, err);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("parameters: ") + e.what());
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatiotemporal SVD denoising for photoacoustic frame stacks", "stsvd"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string command;
  json params;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a noisy vessel phantom and its clean reference");
  std::size_t s_nx = 128, s_nz = 400, s_nt = 100;
  double s_dx = 0.3, s_dz = 0.1, s_dt = 0.01, s_snr = -10.0, s_decay = 0.0;
  std::string s_schedule, s_out;
  std::uint64_t s_seed = 1;
  synth->add_option("--nx", s_nx, "channels")->capture_default_str();
  synth->add_option("--nz", s_nz, "axial samples")->capture_default_str();
  auto* nt_opt = synth->add_option("--nt", s_nt, "frames (stationary schedule)")->capture_default_str();
  synth->add_option("--dx", s_dx, "lateral pitch in mm")->capture_default_str();
  synth->add_option("--dz", s_dz, "axial pitch in mm")->capture_default_str();
  synth->add_option("--dt", s_dt, "frame interval in s")->capture_default_str();
  synth->add_option("--schedule", s_schedule, "motion groups \"frames:shift_mm,...\"");
  synth->add_option("--snr-db", s_snr, "input SNR in dB")->capture_default_str();
  synth->add_option("--seed", s_seed, "noise seed")->capture_default_str();
  synth->add_option("--fluence-decay", s_decay, "depth attenuation length in mm (0 = off)")->capture_default_str();
  synth->add_option("--out", s_out, "output header (.json)")->required();
  synth->callback([&] {
    if (s_schedule.empty()) {
      s_schedule = std::to_string(s_nt) + ":0";
    } else if (nt_opt->count() > 0) {
      std::size_t total = 0;
      try {
        total = MotionSchedule::parse(s_schedule).total_frames();
      } catch (const Error& e) {
        throw Error(ErrorKind::Usage, e.what());
      }
      if (total != s_nt) {
        throw Error(ErrorKind::Usage, "--nt " + std::to_string(s_nt) + " disagrees with the schedule's " +
                                          std::to_string(total) + " frames");
      }
    }
    command = "synth";
    params = {{"nx", s_nx},       {"nz", s_nz},         {"dx_mm", s_dx},
              {"dz_mm", s_dz},    {"dt_s", s_dt},       {"schedule", s_schedule},
              {"snr_db", s_snr},  {"seed", s_seed},     {"fluence_decay_mm", s_decay},
              {"out", absolute_or_empty(s_out)}};
  });

  // shared stsvd knobs
  RsvdOptions rdef;
  RankSelectOptions sdef;

  // denoise
  auto* den = app.add_subcommand("denoise", "denoise a frame stack with STSVD, frame averaging or DWT");
  std::string d_in, d_out, d_method = "stsvd", d_rank, d_form = "standard", d_ref;
  std::size_t d_window = 0, d_stride = 0, d_avg_window = 0, d_levels = 4, d_oversample = rdef.oversample;
  std::size_t d_neval = sdef.n_eval;
  int d_q = rdef.power_iters;
  std::uint64_t d_seed = rdef.seed;
  double d_scale = 1.0, d_floor = sdef.floor_level, d_tau = sdef.tau;
  den->add_option("--input", d_in, "input header")->required();
  den->add_option("--out", d_out, "output header")->required();
  den->add_option("--method", d_method, "stsvd | avg | dwt")->capture_default_str();
  auto* rank_opt = den->add_option("--rank", d_rank, "<k> | auto-temporal | auto-spatial | auto-min (default)");
  auto* win_opt = den->add_option("--window", d_window, "stream with this many frames per window");
  auto* stride_opt = den->add_option("--stride", d_stride, "frames between windows (default window/4)");
  den->add_option("--oversample", d_oversample, "sketch oversampling p")->capture_default_str();
  den->add_option("--power-iters", d_q, "power iterations q")->capture_default_str();
  den->add_option("--seed", d_seed, "sketch seed")->capture_default_str();
  den->add_option("--n-eval", d_neval, "singular vectors examined by the rank estimators")->capture_default_str();
  den->add_option("--floor", d_floor, "temporal noise-floor level")->capture_default_str();
  den->add_option("--tau", d_tau, "spatial correlation threshold")->capture_default_str();
  auto* avgw_opt = den->add_option("--avg-window", d_avg_window, "sliding average length (0 = all frames)");
  auto* lev_opt = den->add_option("--dwt-levels", d_levels, "DWT decomposition depth");
  auto* scale_opt = den->add_option("--dwt-threshold-scale", d_scale, "DWT threshold multiplier");
  den->add_option("--psnr-form", d_form, "standard | paper")->capture_default_str();
  den->add_option("--reference", d_ref, "clean reference stack for per-frame scores");
  den->callback([&] {
    if (d_method != "stsvd") {
      if (rank_opt->count()) throw Error(ErrorKind::Usage, "--rank applies to --method stsvd only");
      if (win_opt->count() || stride_opt->count()) {
        throw Error(ErrorKind::Usage, "--window/--stride apply to --method stsvd only");
      }
    }
    if (d_method != "avg" && avgw_opt->count()) throw Error(ErrorKind::Usage, "--avg-window applies to --method avg");
    if (d_method != "dwt" && (lev_opt->count() || scale_opt->count())) {
      throw Error(ErrorKind::Usage, "--dwt-levels/--dwt-threshold-scale apply to --method dwt");
    }
    if (stride_opt->count() && !win_opt->count()) throw Error(ErrorKind::Usage, "--stride needs --window");
    if (d_method == "stsvd") {
      if (d_rank.empty()) d_rank = "auto-min";
      StreamRank::parse(d_rank);
      if (d_window > 0 && d_stride == 0) d_stride = std::max<std::size_t>(d_window / 4, 1);
    }
    parse_psnr_form(d_form);
    command = "denoise";
    params = {{"input", absolute_or_empty(d_in)},
              {"out", absolute_or_empty(d_out)},
              {"method", d_method},
              {"rank", d_rank},
              {"window", d_window},
              {"stride", d_stride},
              {"oversample", d_oversample},
              {"power_iters", d_q},
              {"seed", d_seed},
              {"n_eval", d_neval},
              {"floor_level", d_floor},
              {"tau", d_tau},
              {"avg_window", d_avg_window},
              {"dwt_levels", d_levels},
              {"dwt_threshold_scale", d_scale},
              {"psnr_form", d_form},
              {"reference", absolute_or_empty(d_ref)}};
  });

  // rank
  auto* rk = app.add_subcommand("rank", "estimate the signal rank with the temporal and spatial estimators");
  std::string r_in, r_out, r_policy = "min";
  std::size_t r_neval = sdef.n_eval;
  double r_floor = sdef.floor_level, r_tau = sdef.tau;
  std::uint64_t r_seed = rdef.seed;
  rk->add_option("--input", r_in, "input header")->required();
  rk->add_option("--out", r_out, "summary CSV")->required();
  rk->add_option("--n-eval", r_neval, "singular vectors examined")->capture_default_str();
  rk->add_option("--floor", r_floor, "temporal noise-floor level")->capture_default_str();
  rk->add_option("--tau", r_tau, "spatial correlation threshold")->capture_default_str();
  rk->add_option("--policy", r_policy, "min | max | temporal-priority")->capture_default_str();
  rk->add_option("--seed", r_seed, "sketch seed")->capture_default_str();
  rk->callback([&] {
    parse_rank_policy(r_policy);
    command = "rank";
    params = {{"input", absolute_or_empty(r_in)}, {"out", absolute_or_empty(r_out)}, {"n_eval", r_neval},
              {"floor_level", r_floor},           {"tau", r_tau},                   {"policy", r_policy},
              {"seed", r_seed}};
  });

  // metrics
  auto* met = app.add_subcommand("metrics", "per-frame image quality metrics as CSV");
  std::string m_in, m_out, m_ref, m_rois, m_profile, m_form = "standard";
  met->add_option("--input", m_in, "input header")->required();
  met->add_option("--out", m_out, "metrics CSV")->required();
  met->add_option("--reference", m_ref, "reference stack (one frame is broadcast)");
  met->add_option("--rois", m_rois, "ROI rectangles JSON");
  met->add_option("--profile", m_profile, "x=<col> for an axial FWHM profile");
  met->add_option("--psnr-form", m_form, "standard | paper")->capture_default_str();
  met->callback([&] {
    long profile_x = -1;
    if (!m_profile.empty()) {
      std::size_t used = 0;
      try {
        if (m_profile.rfind("x=", 0) != 0) throw std::invalid_argument("prefix");
        profile_x = std::stol(m_profile.substr(2), &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used == 0 || used != m_profile.size() - 2 || profile_x < 0) {
        throw Error(ErrorKind::Usage, "--profile expects x=<column>, got '" + m_profile + "'");
      }
    }
    parse_psnr_form(m_form);
    command = "metrics";
    params = {{"input", absolute_or_empty(m_in)},
              {"out", absolute_or_empty(m_out)},
              {"reference", absolute_or_empty(m_ref)},
              {"rois", absolute_or_empty(m_rois)},
              {"profile_x", profile_x},
              {"psnr_form", m_form}};
  });

  // export-image
  auto* exp = app.add_subcommand("export-image", "write a log-compressed 8-bit PGM of a frame or projection");
  std::string e_in, e_out, e_mip;
  long e_frame = -1;
  double e_range = 40.0;
  exp->add_option("--input", e_in, "input header")->required();
  exp->add_option("--out", e_out, "output .pgm")->required();
  auto* frame_opt = exp->add_option("--frame", e_frame, "frame index");
  auto* mip_opt = exp->add_option("--mip", e_mip, "maximum-intensity projection over t | x | z");
  exp->add_option("--dynamic-range", e_range, "display window in dB")->capture_default_str();
  frame_opt->excludes(mip_opt);
  exp->callback([&] {
    if (!frame_opt->count() && !mip_opt->count()) throw Error(ErrorKind::Usage, "export-image needs --frame or --mip");
    if (frame_opt->count() && e_frame < 0) {
      throw Error(ErrorKind::Bounds, "frame index " + std::to_string(e_frame) + " is negative");
    }
    if (mip_opt->count()) parse_mip_axis(e_mip);
    command = "export-image";
    params = {{"input", absolute_or_empty(e_in)}, {"out", absolute_or_empty(e_out)}, {"frame", e_frame},
              {"mip", e_mip},                    {"dynamic_range_db", e_range}};
  });

  // bench
  auto* bn = app.add_subcommand("bench", "time one randomized-SVD window");
  std::size_t b_nx = 600, b_nz = 128, b_nt = 200, b_rank = 1, b_reps = 5, b_stride = 0;
  std::size_t b_oversample = rdef.oversample;
  int b_q = rdef.power_iters;
  std::uint64_t b_seed = rdef.seed;
  std::string b_out;
  bn->add_option("--nx", b_nx)->capture_default_str();
  bn->add_option("--nz", b_nz)->capture_default_str();
  bn->add_option("--nt", b_nt)->capture_default_str();
  bn->add_option("--rank", b_rank)->capture_default_str();
  bn->add_option("--reps", b_reps, "repetitions, the first is discarded")->capture_default_str();
  bn->add_option("--stride", b_stride, "frames per window advance (default nt/4)");
  bn->add_option("--oversample", b_oversample)->capture_default_str();
  bn->add_option("--power-iters", b_q)->capture_default_str();
  bn->add_option("--seed", b_seed)->capture_default_str();
  bn->add_option("--out", b_out, "report CSV")->required();
  bn->callback([&] {
    if (b_stride == 0) b_stride = std::max<std::size_t>(b_nt / 4, 1);
    command = "bench";
    params = {{"nx", b_nx},         {"nz", b_nz},          {"nt", b_nt},     {"rank", b_rank},
              {"reps", b_reps},     {"stride", b_stride},  {"oversample", b_oversample},
              {"power_iters", b_q}, {"seed", b_seed},      {"out", absolute_or_empty(b_out)}};
  });

  // replay
  auto* rp = app.add_subcommand("replay", "re-run a command from its manifest");
  std::string p_manifest, p_out;
  rp->add_option("--manifest", p_manifest, "manifest written by an earlier run")->required();
  rp->add_option("--out", p_out, "new primary output path")->required();
  rp->callback([&] { command = "replay"; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_code(ErrorKind::Usage);
  } catch (const Error& e) {
    err << "stsvd: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  }

  try {
    if (command == "replay") {
      const RunManifest m = read_manifest(p_manifest);
      if (m.command == "bench") err << "warning: bench timings are not reproducible bit-for-bit\n";
      json p = m.params;
      p["out"] = absolute_or_empty(p_out);
      execute(m.command, p, out, err);
    } else {
      execute(command, params, out, err);
    }
  } catch (const Error& e) {
    err << "stsvd: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::Validation);
  }
  return 0;
}

}  // namespace stsvd
