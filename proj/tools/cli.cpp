#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "spectraprune/conv.hpp"
#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"
#include "spectraprune/npy.hpp"
#include "spectraprune/report.hpp"
#include "spectraprune/sparsify.hpp"
#include "spectraprune/spectrum.hpp"

namespace spectraprune::cli {

namespace {

// Inconsistent or missing flags detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check that ran but did not meet its tolerance, or a degenerate result.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& out_help) {
  cmd->add_option("--seed", o.seed, "RNG seed, echoed into reports")->capture_default_str();
  cmd->add_option("--out", o.out, out_help);
  cmd->add_option("--format", o.format, "report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

std::size_t thread_budget(std::ostream& err) {
  const char* env = std::getenv("SPECTRAPRUNE_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0) {
    err << "warning: ignoring SPECTRAPRUNE_THREADS='" << env << "'\n";
    return 1;
  }
  return v;
}

// Writes to `path` when given, else to `out`.
void emit(const Report& report, const std::string& path, const std::string& format,
          std::ostream& out) {
  const ReportFormat f = parse_report_format(format);
  if (path.empty()) {
    out << render_report(report, f);
  } else {
    write_report(path, report, f);
  }
}

Dtype parse_dtype(const std::string& name) {
  if (name == "f64") return Dtype::kF64;
  if (name == "f32") return Dtype::kF32;
  throw UsageError("unknown dtype '" + name + "' (expected f32 or f64)");
}

// Matrix result in the layout of the input file: 4-D inputs are folded back.
TensorFile like_input(const Matrix& m, const TensorFile& input, Dtype dtype) {
  if (is_kernel(input)) {
    return tensor_from(fold_kernel(m, input.shape[0], input.shape[1], input.shape[2], input.shape[3]),
                       dtype);
  }
  return tensor_from(m, dtype);
}

std::size_t clip_topk(std::size_t top_k, const Matrix& a, std::ostream& err) {
  const std::size_t min_dim = std::min(a.rows(), a.cols());
  if (top_k > min_dim) {
    err << "warning: --topk " << top_k << " exceeds min dimension " << min_dim << " of "
        << a.shape_string() << "; clipped to " << min_dim << "\n";
    return min_dim;
  }
  return top_k;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  CommonOptions common;
  std::vector<std::string> inputs;
  std::size_t top_k = 10;
  bool trajectory = false;
};

void register_analyze(CLI::App& app, AnalyzeOptions& o) {
  auto* cmd = app.add_subcommand("analyze", "Spectrum and norm summary of a weight matrix");
  cmd->add_option("inputs", o.inputs, "2-D matrix or 4-D kernel NPY file(s)")->required();
  cmd->add_option("--topk", o.top_k, "number of singular values to report")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--trajectory", o.trajectory,
                "treat inputs as ordered snapshots and report their norm trajectory");
  add_common(cmd, o.common, "report path (default stdout)");
}

int run_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  if (o.trajectory) {
    std::vector<std::pair<std::string, Matrix>> snapshots;
    for (const std::string& path : o.inputs) snapshots.emplace_back(path, to_matrix(read_npy(path)));
    const NormTrajectory traj = trajectory_report(snapshots);
    emit(trajectory_report_table(traj, o.common.seed), o.common.out, o.common.format, out);
    return kOk;
  }
  if (o.inputs.size() != 1) {
    throw UsageError("analyze takes one input unless --trajectory is given");
  }
  const Matrix a = to_matrix(read_npy(o.inputs.front()));
  const std::size_t k = clip_topk(o.top_k, a, err);
  const SpectrumSummary s = spectrum_summary(a, k, o.common.seed);
  if (!s.two_norm_converged) err << "warning: power iteration did not converge\n";
  emit(spectrum_report(s, o.common.seed), o.common.out, o.common.format, out);
  return kOk;
}

// ---------------------------------------------------------------- sparsify

struct SparsifyOptions {
  CommonOptions common;
  std::string input;
  std::string method;
  double keep = 1.0;
  double q = kDefaultQuantile;
  double c = kDefaultCutoff;
  std::size_t rank = kDefaultRank;
  std::string mask;
  std::string report;
  std::string dtype = "f64";
  bool allow_degenerate = false;
  CLI::Option* keep_opt = nullptr;
  CLI::Option* q_opt = nullptr;
  CLI::Option* c_opt = nullptr;
  CLI::Option* rank_opt = nullptr;
};

void register_sparsify(CLI::App& app, SparsifyOptions& o) {
  auto* cmd = app.add_subcommand("sparsify", "Sparsify one weight matrix");
  cmd->add_option("input", o.input, "2-D matrix or 4-D kernel NPY file")->required();
  cmd->add_option("--method", o.method, "threshold, bernoulli or lowrank")
      ->required()
      ->check(CLI::IsMember({"threshold", "bernoulli", "lowrank"}));
  o.keep_opt = cmd->add_option("--keep", o.keep, "fraction of entries kept (threshold)");
  o.q_opt = cmd->add_option("--q", o.q, "quantile above which entries stay unchanged")
                ->capture_default_str();
  o.c_opt = cmd->add_option("--c", o.c, "probability cutoff below which entries are zeroed")
                ->capture_default_str();
  o.rank_opt = cmd->add_option("--rank", o.rank, "rank of the guiding approximation (lowrank)")
                   ->capture_default_str();
  cmd->add_option("--mask", o.mask, "write the retained-entry mask (f32 NPY)");
  cmd->add_option("--report", o.report, "report path (default stdout)");
  cmd->add_option("--dtype", o.dtype, "dtype of the sparsified output")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  cmd->add_flag("--allow-degenerate", o.allow_degenerate,
                "accept a zero quantile cut instead of failing with exit 3");
  add_common(cmd, o.common, "sparsified matrix path (NPY)");
}

SparsifyConfig config_from(const SparsifyOptions& o) {
  SparsifyConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.seed = o.common.seed;
  if (cfg.method == Method::kThreshold) {
    if (o.keep_opt->count() == 0) throw UsageError("--method threshold requires --keep");
    if (o.q_opt->count() || o.c_opt->count() || o.rank_opt->count()) {
      throw UsageError("--q, --c and --rank do not apply to --method threshold");
    }
    cfg.keep_fraction = o.keep;
  } else {
    if (o.keep_opt->count()) throw UsageError("--keep only applies to --method threshold");
    if (cfg.method == Method::kBernoulli && o.rank_opt->count()) {
      throw UsageError("--rank only applies to --method lowrank");
    }
    cfg.q = o.q;
    cfg.c = o.c;
    cfg.rank_k = o.rank;
  }
  return cfg;
}

int run_sparsify(const SparsifyOptions& o, std::ostream& out, std::ostream&) {
  const SparsifyConfig cfg = config_from(o);
  const Dtype dtype = parse_dtype(o.dtype);
  const TensorFile input = read_npy(o.input);
  const Matrix a = to_matrix(input);
  const SparsifyResult result = sparsify(a, cfg);
  if (result.degenerate && !o.allow_degenerate) {
    throw NumericFailure("quantile cut t is 0 (more than a q-fraction of the guide entries are "
                         "zero); rerun with --allow-degenerate to accept");
  }
  if (!o.common.out.empty()) write_npy(o.common.out, like_input(result.sparse, input, dtype));
  if (!o.mask.empty()) write_mask(o.mask, like_input(result.mask, input, Dtype::kF32));
  const SweepRow row = make_sweep_row(cfg, result);
  emit(sweep_report(std::span(&row, 1), cfg.seed), o.report, o.common.format, out);
  return kOk;
}

// ------------------------------------------------------------------- sweep

struct SweepOptions {
  CommonOptions common;
  std::string input;
  std::string method;
  std::vector<double> grid;
  std::vector<double> grid_q;
  std::vector<std::size_t> grid_rank;
  double q = kDefaultQuantile;
  double c = kDefaultCutoff;
  std::size_t rank = kDefaultRank;
};

void register_sweep(CLI::App& app, SweepOptions& o) {
  auto* cmd = app.add_subcommand("sweep", "Sparsify one matrix over a grid of settings");
  cmd->add_option("input", o.input, "2-D matrix or 4-D kernel NPY file")->required();
  cmd->add_option("--method", o.method, "threshold, bernoulli or lowrank")
      ->required()
      ->check(CLI::IsMember({"threshold", "bernoulli", "lowrank"}));
  cmd->add_option("--grid", o.grid, "keep fractions (threshold) or q values, comma separated")
      ->delimiter(',');
  cmd->add_option("--grid-q", o.grid_q, "q values (sampling methods)")->delimiter(',');
  cmd->add_option("--grid-rank", o.grid_rank, "ranks (lowrank)")->delimiter(',');
  cmd->add_option("--q", o.q, "fixed q when only ranks are swept")->capture_default_str();
  cmd->add_option("--c", o.c, "probability cutoff")->capture_default_str();
  cmd->add_option("--rank", o.rank, "fixed rank when --grid-rank is absent")->capture_default_str();
  add_common(cmd, o.common, "report path (default stdout)");
}

std::vector<SparsifyConfig> sweep_grid(const SweepOptions& o) {
  const Method method = parse_method(o.method);
  SparsifyConfig base;
  base.method = method;
  base.seed = o.common.seed;
  base.q = o.q;
  base.c = o.c;
  base.rank_k = o.rank;

  std::vector<SparsifyConfig> configs;
  if (method == Method::kThreshold) {
    if (o.grid.empty()) throw UsageError("--method threshold requires --grid");
    if (!o.grid_q.empty() || !o.grid_rank.empty()) {
      throw UsageError("--grid-q/--grid-rank do not apply to --method threshold");
    }
    for (double keep : o.grid) {
      SparsifyConfig cfg = base;
      cfg.keep_fraction = keep;
      configs.push_back(cfg);
    }
    return configs;
  }

  if (!o.grid.empty() && !o.grid_q.empty()) throw UsageError("give either --grid or --grid-q");
  if (method == Method::kBernoulli && !o.grid_rank.empty()) {
    throw UsageError("--grid-rank only applies to --method lowrank");
  }
  std::vector<double> qs = !o.grid.empty() ? o.grid : o.grid_q;
  std::vector<std::size_t> ranks = o.grid_rank;
  if (qs.empty() && ranks.empty()) throw UsageError("sweep needs a non-empty grid");
  if (qs.empty()) qs.push_back(o.q);
  if (ranks.empty()) ranks.push_back(o.rank);
  for (double q : qs) {
    for (std::size_t r : ranks) {
      SparsifyConfig cfg = base;
      cfg.q = q;
      cfg.rank_k = r;
      configs.push_back(cfg);
    }
  }
  return configs;
}

int run_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  const std::vector<SparsifyConfig> configs = sweep_grid(o);
  const Matrix a = to_matrix(read_npy(o.input));
  // Validate every setting before spending time on any.
  for (const SparsifyConfig& cfg : configs) {
    if (cfg.method == Method::kThreshold && !(cfg.keep_fraction > 0.0 && cfg.keep_fraction <= 1.0)) {
      throw UsageError("grid value " + format_double(cfg.keep_fraction) + " outside (0, 1]");
    }
    if (cfg.method != Method::kThreshold && !(cfg.q > 0.0 && cfg.q < 1.0)) {
      throw UsageError("grid value " + format_double(cfg.q) + " outside (0, 1)");
    }
  }
  const std::vector<SweepRow> rows = sweep_configs(a, configs, thread_budget(err));
  for (const SweepRow& row : rows) {
    if (row.degenerate) err << "warning: degenerate quantile cut for q=" << row.config.q << "\n";
  }
  emit(sweep_report(rows, o.common.seed), o.common.out, o.common.format, out);
  return kOk;
}

// -------------------------------------------------------------- conv-check

struct ConvCheckOptions {
  CommonOptions common;
  std::string kernel;
  std::string signal;
  std::size_t stride = 1;
  std::size_t pad = 0;
};

void register_conv_check(CLI::App& app, ConvCheckOptions& o) {
  auto* cmd = app.add_subcommand("conv-check", "Compare direct convolution with im2col matmul");
  cmd->add_option("kernel", o.kernel, "4-D kernel NPY [O, C, kH, kW]")->required();
  cmd->add_option("signal", o.signal, "3-D signal NPY [C, H, W]")->required();
  cmd->add_option("--stride", o.stride, "stride")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--pad", o.pad, "zero padding")->capture_default_str();
  add_common(cmd, o.common, "report path (default stdout)");
}

int run_conv_check(const ConvCheckOptions& o, std::ostream& out, std::ostream& err) {
  const KernelTensor t = to_kernel(read_npy(o.kernel));
  const SignalTensor x = to_signal(read_npy(o.signal));
  const SignalTensor direct = conv_direct(x, t, o.stride, o.pad);
  const SignalTensor lowered = conv_as_matmul(x, t, o.stride, o.pad);
  const double deviation = max_abs_diff(direct, lowered);
  const bool pass = deviation <= kConvCheckTolerance;

  Report r{std::string(kConvCheckSchema),
           {{"seed", static_cast<std::int64_t>(o.common.seed)},
            {"kernel_shape", t.shape_string()},
            {"signal_shape", x.shape_string()},
            {"stride", static_cast<std::int64_t>(o.stride)},
            {"pad", static_cast<std::int64_t>(o.pad)},
            {"tolerance", kConvCheckTolerance}},
           {"out_channels", "out_h", "out_w", "max_abs_deviation", "pass"},
           {{static_cast<std::int64_t>(direct.channels()), static_cast<std::int64_t>(direct.height()),
             static_cast<std::int64_t>(direct.width()), deviation, pass}}};
  emit(r, o.common.out, o.common.format, out);
  err << "max abs deviation " << format_double(deviation) << "\n";
  return pass ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------- channels

struct ChannelsOptions {
  CommonOptions common;
  std::string kernel;
  std::size_t remove = 0;
  bool score_only = false;
  std::string report;
  std::string dtype = "f64";
  CLI::Option* remove_opt = nullptr;
};

void register_channels(CLI::App& app, ChannelsOptions& o) {
  auto* cmd = app.add_subcommand("channels", "Score output channels by L1 mass and prune the lightest");
  cmd->add_option("kernel", o.kernel, "4-D kernel NPY [O, C, kH, kW]")->required();
  o.remove_opt = cmd->add_option("--remove", o.remove, "zero the N lowest-L1 channels");
  auto* score = cmd->add_flag("--score-only", o.score_only, "only write the channel report");
  o.remove_opt->excludes(score);
  cmd->add_option("--report", o.report, "report path with --remove (default stdout)");
  cmd->add_option("--dtype", o.dtype, "dtype of the pruned kernel")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  add_common(cmd, o.common, "report path (--score-only) or pruned kernel path (--remove)");
}

std::vector<ChannelSweepRow> channel_rows(const KernelTensor& t) {
  if (t.out_channels() >= 2) return channel_sweep(t);
  // A single channel: removing it leaves nothing.
  const ChannelScore s = channel_scores(t).front();
  return {{s.channel_index, s.l1_mass, s.l2_mass, 0.0}};
}

int run_channels(const ChannelsOptions& o, std::ostream& out, std::ostream&) {
  if (!o.score_only && o.remove_opt->count() == 0) {
    throw UsageError("channels requires --remove N or --score-only");
  }
  const TensorFile input = read_npy(o.kernel);
  const KernelTensor t = to_kernel(input);
  const double f_norm = frobenius_norm(unfold_kernel(t));
  const std::vector<ChannelSweepRow> rows = channel_rows(t);

  if (o.score_only) {
    emit(channels_report(rows, {}, f_norm, o.common.seed), o.common.out, o.common.format, out);
    return kOk;
  }
  if (o.remove >= t.out_channels()) {
    throw UsageError("--remove " + std::to_string(o.remove) + " must be less than the " +
                     std::to_string(t.out_channels()) + " output channels");
  }
  const Dtype dtype = parse_dtype(o.dtype);
  const auto [pruned, removed] = prune_channels(t, o.remove);
  if (!o.common.out.empty()) write_npy(o.common.out, tensor_from(pruned, dtype));
  emit(channels_report(rows, removed, f_norm, o.common.seed), o.report, o.common.format, out);
  return kOk;
}

// ----------------------------------------------------------------- compare

struct CompareOptions {
  CommonOptions common;
  std::string a;
  std::string b;
  std::size_t top_k = 10;
};

void register_compare(CLI::App& app, CompareOptions& o) {
  auto* cmd = app.add_subcommand("compare", "Paired spectra and error norms of two matrices");
  cmd->add_option("a", o.a, "original matrix or kernel NPY")->required();
  cmd->add_option("b", o.b, "modified matrix or kernel NPY")->required();
  cmd->add_option("--topk", o.top_k, "number of singular values to pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(cmd, o.common, "report path (default stdout)");
}

int run_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  const TensorFile fa = read_npy(o.a);
  const TensorFile fb = read_npy(o.b);
  if (fa.shape != fb.shape) {
    throw ShapeError("compare: shape mismatch " + fa.shape_string() + " vs " + fb.shape_string());
  }
  const Matrix a = to_matrix(fa);
  const Matrix b = to_matrix(fb);
  const std::size_t k = clip_topk(o.top_k, a, err);
  emit(spectrum_delta_report(compare_spectra(a, b, k, o.common.seed), o.common.seed), o.common.out,
       o.common.format, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrum-preserving sparsification of neural network weight matrices",
               "spectraprune"};
  app.require_subcommand(1);
  AnalyzeOptions analyze;
  SparsifyOptions sparsify_opts;
  SweepOptions sweep;
  ConvCheckOptions conv_check;
  ChannelsOptions channels;
  CompareOptions compare;
  register_analyze(app, analyze);
  register_sparsify(app, sparsify_opts);
  register_sweep(app, sweep);
  register_conv_check(app, conv_check);
  register_channels(app, channels);
  register_compare(app, compare);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (const CLI::App* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  try {
    if (app.got_subcommand("analyze")) return run_analyze(analyze, out, err);
    if (app.got_subcommand("sparsify")) return run_sparsify(sparsify_opts, out, err);
    if (app.got_subcommand("sweep")) return run_sweep(sweep, out, err);
    if (app.got_subcommand("conv-check")) return run_conv_check(conv_check, out, err);
    if (app.got_subcommand("channels")) return run_channels(channels, out, err);
    if (app.got_subcommand("compare")) return run_compare(compare, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace spectraprune::cli
