#include "cli.hpp"

#include "msmaad/baseline.hpp"
#include "msmaad/config.hpp"
#include "msmaad/embed.hpp"
#include "msmaad/eval.hpp"
#include "msmaad/io.hpp"
#include "msmaad/msm.hpp"
#include "msmaad/synth.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace msmaad::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

// Command-line overrides of RunConfig. Each value applies only when its
// option was given.
struct ConfigFlags {
  std::string config_path;
  Index lags = 0;
  std::string direction;
  double fs = 0.0;
  double p_stay = 0.0;
  double p_stay_window = 0.0;
  double window_s = 0.0;
  double ridge = 0.0;
  int max_iter = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  bool normalize = true;
  Index min_hold = 1;

  CLI::Option* o_lags = nullptr;
  CLI::Option* o_direction = nullptr;
  CLI::Option* o_fs = nullptr;
  CLI::Option* o_p_stay = nullptr;
  CLI::Option* o_p_stay_window = nullptr;
  CLI::Option* o_window_s = nullptr;
  CLI::Option* o_ridge = nullptr;
  CLI::Option* o_max_iter = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_normalize = nullptr;
  CLI::Option* o_min_hold = nullptr;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration");
  f.o_lags = cmd->add_option("--lags", f.lags, "number of EEG lags L");
  f.o_direction = cmd->add_option("--direction", f.direction, "lag direction: past|future");
  f.o_fs = cmd->add_option("--fs", f.fs, "sampling rate in Hz");
  f.o_p_stay = cmd->add_option("--p-stay", f.p_stay, "per-sample self-transition probability");
  f.o_p_stay_window =
      cmd->add_option("--p-stay-window", f.p_stay_window, "per-window self-transition probability");
  f.o_window_s = cmd->add_option("--window-s", f.window_s, "correlation window length in s");
  f.o_ridge = cmd->add_option("--ridge", f.ridge, "ridge penalty (default: relative)");
  f.o_max_iter = cmd->add_option("--max-iter", f.max_iter, "maximum EM iterations");
  f.o_tol = cmd->add_option("--tol", f.tol, "relative log-likelihood tolerance");
  f.o_seed = cmd->add_option("--seed", f.seed, "random seed");
  f.o_normalize = cmd->add_flag("--normalize,!--no-normalize", f.normalize,
                                "z-score envelopes before use (default on)");
  f.o_min_hold = cmd->add_option("--min-hold", f.min_hold, "samples a crossing must persist");
}

struct ResolvedConfig {
  RunConfig cfg;
  bool fs_explicit = false;
  bool lags_explicit = false;
  bool direction_explicit = false;
};

ResolvedConfig resolve_config(const ConfigFlags& f) {
  ResolvedConfig r;
  if (!f.config_path.empty()) {
    const Json doc = io::read_json(f.config_path);
    r.cfg.merge_json(doc);
    r.fs_explicit = doc.contains("fs_hz");
    r.lags_explicit = doc.contains("lag_count");
    r.direction_explicit = doc.contains("lag_direction");
  }
  if (f.o_lags->count()) r.cfg.lag_count = f.lags, r.lags_explicit = true;
  if (f.o_direction->count()) {
    r.cfg.lag_direction = parse_lag_direction(f.direction);
    r.direction_explicit = true;
  }
  if (f.o_fs->count()) r.cfg.fs_hz = f.fs, r.fs_explicit = true;
  if (f.o_p_stay->count()) r.cfg.p_switch_sample = 1.0 - f.p_stay;
  if (f.o_p_stay_window->count()) r.cfg.p_switch_window = 1.0 - f.p_stay_window;
  if (f.o_window_s->count()) r.cfg.window_len_s = f.window_s;
  if (f.o_ridge->count()) r.cfg.ridge = f.ridge;
  if (f.o_max_iter->count()) r.cfg.max_iter = f.max_iter;
  if (f.o_tol->count()) r.cfg.tol = f.tol;
  if (f.o_seed->count()) r.cfg.seed = f.seed;
  if (f.o_normalize->count()) r.cfg.normalize_envelopes = f.normalize;
  if (f.o_min_hold->count()) r.cfg.min_hold_samples = f.min_hold;
  r.cfg.validate();
  return r;
}

// Locates "<dir>/<stem>.csv" or "<dir>/<stem>.f32".
fs::path find_series(const fs::path& dir, const std::string& stem, bool required = true) {
  for (const char* ext : {".csv", ".f32", ".bin", ".raw"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  if (required) {
    throw InvalidInput("no " + stem + " series (.csv or .f32) in " + dir.string());
  }
  return {};
}

struct RecordingPaths {
  std::string name;
  fs::path eeg;
  fs::path env1;
  fs::path env2;
  fs::path attended;
  fs::path truth;
};

RecordingPaths recording_from_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("recording directory not found: " + dir.string());
  RecordingPaths p;
  p.name = dir.filename().empty() ? dir.parent_path().filename().string()
                                  : dir.filename().string();
  p.eeg = find_series(dir, "eeg");
  p.env1 = find_series(dir, "env1");
  p.env2 = find_series(dir, "env2");
  p.truth = find_series(dir, "states", false);
  return p;
}

// Loads a series, falling back to the configured rate for CSV files
// without a sidecar, and checks the rate against an explicit setting.
MultichannelSeries load_input(const fs::path& path, ResolvedConfig& rc) {
  if (path.empty()) throw InvalidInput("missing input path");
  if (!fs::exists(path)) throw InvalidInput("file not found: " + path.string());
  std::optional<double> fs_hint;
  if (io::format_from_path(path) == io::SeriesFormat::kCsv && !fs::exists(io::sidecar_path(path))) {
    fs_hint = rc.cfg.fs_hz;
  }
  MultichannelSeries s = io::load_series(path, fs_hint);
  if (rc.fs_explicit && s.fs_hz() != rc.cfg.fs_hz) {
    throw InvalidInput(path.string() + ": sampling rate " + std::to_string(s.fs_hz()) +
                       " Hz differs from configured " + std::to_string(rc.cfg.fs_hz) + " Hz");
  }
  return s;
}

StateSequence load_truth(const fs::path& path, const ResolvedConfig& rc) {
  if (!fs::exists(path)) throw InvalidInput("file not found: " + path.string());
  std::optional<double> fs_hint;
  if (io::format_from_path(path) == io::SeriesFormat::kCsv && !fs::exists(io::sidecar_path(path))) {
    fs_hint = rc.cfg.fs_hz;
  }
  return io::load_states(path, fs_hint);
}

MultichannelSeries maybe_normalize(MultichannelSeries s, const RunConfig& cfg) {
  return cfg.normalize_envelopes ? zscore(s) : s;
}

StateSequence slice_states(const StateSequence& s, Index start, Index count) {
  if (start < 0 || start + count > s.size()) {
    throw InvalidInput("truth sequence is shorter than the decoded range");
  }
  std::vector<int> out(s.states().begin() + start, s.states().begin() + start + count);
  return StateSequence(std::move(out), s.fs_hz());
}

// Adopts lag settings from the decoder file unless they were set
// explicitly, in which case they must agree.
void reconcile_decoder(ResolvedConfig& rc, const io::DecoderFile& dec, const fs::path& path) {
  if (rc.lags_explicit && dec.lag_count != rc.cfg.lag_count) {
    throw InvalidInput(path.string() + ": decoder has lag_count " + std::to_string(dec.lag_count) +
                       " but configuration requests " + std::to_string(rc.cfg.lag_count));
  }
  if (rc.direction_explicit && dec.direction != rc.cfg.lag_direction) {
    throw InvalidInput(path.string() + ": decoder lag direction differs from configuration");
  }
  rc.cfg.lag_count = dec.lag_count;
  rc.cfg.lag_direction = dec.direction;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// Runs `job(i, log)` for i in [0, n) on up to `jobs` threads. Log output is
// flushed in index order after all jobs finish.
int fan_out(std::size_t n, int jobs, std::ostream& out, std::ostream& err,
            const std::function<void(std::size_t, std::ostream&)>& job) {
  std::vector<std::ostringstream> logs(n);
  std::vector<std::ostringstream> errs(n);
  std::vector<int> codes(n, kExitOk);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i, logs[i]);
      } catch (const InvalidInput& e) {
        errs[i] << "error: " << e.what() << '\n';
        codes[i] = kExitUsage;
      } catch (const NumericalError& e) {
        errs[i] << "numerical failure: " << e.what() << '\n';
        codes[i] = kExitNumerical;
      } catch (const fs::filesystem_error& e) {
        errs[i] << "error: " << e.what() << '\n';
        codes[i] = kExitUsage;
      } catch (const std::exception& e) {
        errs[i] << "internal error: " << e.what() << '\n';
        codes[i] = kExitNumerical;
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  int code = kExitOk;
  for (std::size_t i = 0; i < n; ++i) {
    out << logs[i].str();
    err << errs[i].str();
    code = std::max(code, codes[i]);
  }
  return code;
}

// ---------------------------------------------------------------------------
// pretrain

struct PretrainArgs {
  ConfigFlags flags;
  std::string eeg, attended, env1, env2, truth, out;
  std::vector<std::string> recordings;
};

void cmd_pretrain(const PretrainArgs& a, std::ostream& out) {
  ResolvedConfig rc = resolve_config(a.flags);
  std::vector<RecordingPaths> recs;
  for (const auto& d : a.recordings) recs.push_back(recording_from_dir(d));
  if (!a.eeg.empty()) {
    RecordingPaths p;
    p.eeg = a.eeg;
    p.attended = a.attended;
    p.env1 = a.env1;
    p.env2 = a.env2;
    p.truth = a.truth;
    recs.push_back(p);
  }
  if (recs.empty()) throw InvalidInput("pretrain needs --eeg or at least one --recording");

  std::vector<LaggedDesign> designs;
  std::vector<Vector> targets;
  for (auto& p : recs) {
    const MultichannelSeries eeg = load_input(p.eeg, rc);
    if (!rc.fs_explicit) rc.cfg.fs_hz = eeg.fs_hz();
    LaggedDesign design = lag_embed(eeg, rc.cfg.lag_count, rc.cfg.lag_direction);
    Vector target;
    if (!p.attended.empty()) {
      target = aligned_channel(maybe_normalize(load_input(p.attended, rc), rc.cfg), design);
    } else {
      if (p.env1.empty() || p.env2.empty() || p.truth.empty()) {
        throw InvalidInput("pretrain needs --attended or all of --env1, --env2, --truth");
      }
      const Vector e1 = aligned_channel(maybe_normalize(load_input(p.env1, rc), rc.cfg), design);
      const Vector e2 = aligned_channel(maybe_normalize(load_input(p.env2, rc), rc.cfg), design);
      const StateSequence truth = load_truth(p.truth, rc);
      if (truth.size() != design.source_samples) {
        throw InvalidInput(p.truth.string() + ": state count differs from EEG length");
      }
      target.resize(design.rows());
      for (Index k = 0; k < design.rows(); ++k) {
        target(k) = truth[k + design.t_offset] == 1 ? e1(k) : e2(k);
      }
    }
    designs.push_back(std::move(design));
    targets.push_back(std::move(target));
  }

  LaggedDesign stacked = designs.front();
  if (designs.size() > 1) {
    Index rows = 0;
    for (const auto& d : designs) {
      if (d.features() != stacked.features()) {
        throw InvalidInput("recordings have different channel counts");
      }
      rows += d.rows();
    }
    stacked.data.resize(rows, stacked.features());
    Index r = 0;
    for (const auto& d : designs) {
      stacked.data.middleRows(r, d.rows()) = d.data;
      r += d.rows();
    }
  }
  Vector target(stacked.rows());
  Index r = 0;
  for (const auto& t : targets) {
    target.segment(r, t.size()) = t;
    r += t.size();
  }

  const LsDecoder dec = train_ls_decoder(stacked, target, std::max(rc.cfg.ridge, 0.0));
  io::DecoderFile file{dec.beta, dec.mse, rc.cfg.lag_count, rc.cfg.lag_direction};
  if (a.out.empty()) throw InvalidInput("--out is required");
  io::write_json(io::decoder_to_json(file), a.out);
  out << "training MSE: " << fmt(dec.mse, 9) << '\n';
}

// ---------------------------------------------------------------------------
// fit / hmm shared plumbing

struct DecodeArgs {
  ConfigFlags flags;
  std::string eeg, env1, env2, truth, beta, out;
  std::vector<std::string> recordings;
  bool causal = false;
  int jobs = 1;
};

std::vector<RecordingPaths> decode_inputs(const DecodeArgs& a) {
  std::vector<RecordingPaths> recs;
  for (const auto& d : a.recordings) recs.push_back(recording_from_dir(d));
  if (!a.eeg.empty() || !a.env1.empty() || !a.env2.empty()) {
    if (a.eeg.empty() || a.env1.empty() || a.env2.empty()) {
      throw InvalidInput("--eeg, --env1 and --env2 must be given together");
    }
    RecordingPaths p;
    p.name = "recording";
    p.eeg = a.eeg;
    p.env1 = a.env1;
    p.env2 = a.env2;
    p.truth = a.truth;
    recs.push_back(p);
  } else if (!a.truth.empty() && recs.size() == 1) {
    recs.front().truth = a.truth;
  }
  if (recs.empty()) throw InvalidInput("no input recording (use --eeg/--env1/--env2 or --recording)");
  if (a.beta.empty()) throw InvalidInput("--beta is required");
  if (a.out.empty()) throw InvalidInput("--out is required");
  return recs;
}

fs::path output_dir(const DecodeArgs& a, const RecordingPaths& p, std::size_t count) {
  fs::path dir = count > 1 ? fs::path(a.out) / p.name : fs::path(a.out);
  fs::create_directories(dir);
  return dir;
}

struct PreparedRecording {
  ResolvedConfig rc;
  io::DecoderFile decoder;
  LaggedDesign design;
  MultichannelSeries env1;
  MultichannelSeries env2;
  std::optional<StateSequence> truth;
};

PreparedRecording prepare(const DecodeArgs& a, const RecordingPaths& p) {
  ResolvedConfig rc = resolve_config(a.flags);
  io::DecoderFile dec = io::load_decoder(a.beta);
  reconcile_decoder(rc, dec, a.beta);
  const MultichannelSeries eeg = load_input(p.eeg, rc);
  if (!rc.fs_explicit) rc.cfg.fs_hz = eeg.fs_hz();
  rc.cfg.validate();
  LaggedDesign design = lag_embed(eeg, rc.cfg.lag_count, rc.cfg.lag_direction);
  if (dec.beta.size() != design.features()) {
    throw InvalidInput(a.beta + ": decoder length " + std::to_string(dec.beta.size()) +
                       " does not match channels * lags = " + std::to_string(design.features()));
  }
  MultichannelSeries e1 = maybe_normalize(load_input(p.env1, rc), rc.cfg);
  MultichannelSeries e2 = maybe_normalize(load_input(p.env2, rc), rc.cfg);
  std::optional<StateSequence> truth;
  if (!p.truth.empty()) {
    truth = load_truth(p.truth, rc);
    if (truth->size() != eeg.samples()) {
      throw InvalidInput(p.truth.string() + ": state count differs from EEG length");
    }
  }
  return PreparedRecording{std::move(rc), std::move(dec), std::move(design), std::move(e1),
                           std::move(e2), std::move(truth)};
}

Json report_config(const char* command, const RunConfig& cfg, bool causal) {
  Json c;
  c["command"] = command;
  c["causal"] = causal;
  c["run"] = cfg.to_json();
  return c;
}

void fit_one(const DecodeArgs& a, const RecordingPaths& p, const fs::path& dir, std::ostream& log) {
  PreparedRecording r = prepare(a, p);
  const RunConfig& cfg = r.rc.cfg;
  const Vector y = difference_observation(r.env1, r.env2, r.design);
  const MsmParams init = init_from_pretrained(
      r.decoder.beta, std::max(r.decoder.mse, kVarianceFloor), TransitionModel(cfg.p_stay_sample()));
  EmConfig em_cfg;
  em_cfg.max_iter = cfg.max_iter;
  em_cfg.tol = cfg.tol;
  if (cfg.ridge >= 0.0) em_cfg.ridge = cfg.ridge;
  EmFitResult fit = fit_em(r.design, y, init, em_cfg);

  io::TimedPosteriors tp;
  tp.posteriors = fit.posteriors;
  if (a.causal) tp.posteriors.smoothed.reset();
  for (Index k = 0; k < r.design.rows(); ++k) {
    tp.times_s.push_back(static_cast<double>(k + r.design.t_offset) / cfg.fs_hz);
  }
  const StateSequence decoded = decode(tp.posteriors, !a.causal, cfg.fs_hz);

  io::write_json(io::params_to_json(fit.params, cfg.lag_count, cfg.lag_direction),
                 dir / "params.json");
  io::save_posteriors(tp, dir / "posteriors.csv");
  io::save_decoded(tp.times_s, decoded, dir / "decoded.csv");

  Json summary;
  summary["iterations"] = fit.iterations;
  summary["converged"] = fit.converged;
  summary["loglik_trace"] = fit.loglik_trace;
  summary["sigma2"] = {fit.params.sigma2_1, fit.params.sigma2_2};

  log << (p.name.empty() ? std::string("recording") : p.name) << ": EM "
      << (fit.converged ? "converged" : "stopped") << " after " << fit.iterations
      << " iterations, loglik " << fmt(fit.loglik_trace.back(), 12) << '\n';

  if (r.truth) {
    const StateSequence truth = slice_states(*r.truth, r.design.t_offset, r.design.rows());
    EvalReport report = evaluate(tp.posteriors, truth, cfg.min_hold_samples);
    report.config = report_config("fit", cfg, a.causal);
    io::save_report(report, dir / "report.json");
    const double init_acc =
        decoding_accuracy(map_states(emission_loglik(y, r.design, init), cfg.fs_hz), truth);
    summary["init_map_accuracy"] = init_acc;
    log << "  accuracy " << fmt(report.accuracy) << " (raw decoder " << fmt(init_acc)
        << "), mean switch time " << fmt(report.mean_switch_time_s()) << " s, missed "
        << report.missed_switches << "/" << report.n_true_switches << '\n';
  }
  io::write_json(summary, dir / "fit_summary.json");
}

void hmm_one(const DecodeArgs& a, const RecordingPaths& p, const fs::path& dir, std::ostream& log) {
  PreparedRecording r = prepare(a, p);
  const RunConfig& cfg = r.rc.cfg;
  const Index win = cfg.window_len_samples();
  const WindowedCorrelations corrs =
      window_correlations(r.design, r.decoder.beta, r.env1, r.env2, win);
  if (corrs.windows() < 2) throw InvalidInput("recording shorter than two correlation windows");
  Vector pooled(2 * corrs.windows());
  pooled << corrs.r1, corrs.r2;
  const Gmm2Fit gmm = fit_gmm2(pooled, 500, 1e-10, 4, cfg.seed);
  HmmResult hmm = hmm_postprocess(corrs, gmm.model, TransitionModel(cfg.p_stay_window()));

  io::TimedPosteriors tp;
  tp.posteriors = hmm.posteriors;
  if (a.causal) tp.posteriors.smoothed.reset();
  for (Index w = 0; w < corrs.windows(); ++w) tp.times_s.push_back(corrs.center_time_s(w));
  const double window_rate = cfg.fs_hz / static_cast<double>(win);
  const StateSequence decoded = decode(tp.posteriors, !a.causal, window_rate);

  io::save_posteriors(tp, dir / "posteriors.csv");
  io::save_decoded(tp.times_s, decoded, dir / "decoded.csv");
  Json gj;
  gj["mean_att"] = gmm.model.mean_att;
  gj["mean_unatt"] = gmm.model.mean_unatt;
  gj["var_att"] = gmm.model.var_att;
  gj["var_unatt"] = gmm.model.var_unatt;
  gj["weight_att"] = gmm.model.weight_att;
  gj["windows"] = corrs.windows();
  gj["window_len_samples"] = win;
  io::write_json(gj, dir / "gmm.json");

  log << (p.name.empty() ? std::string("recording") : p.name) << ": " << corrs.windows()
      << " windows, GMM means " << fmt(gmm.model.mean_att) << " / " << fmt(gmm.model.mean_unatt)
      << '\n';
  if (r.truth) {
    const StateSequence truth_w =
        majority_downsample(*r.truth, corrs.first_sample, win, corrs.windows());
    EvalReport report = evaluate(tp.posteriors, truth_w, 1);
    report.config = report_config("hmm", cfg, a.causal);
    io::save_report(report, dir / "report.json");
    log << "  window accuracy " << fmt(report.accuracy) << ", mean switch time "
        << fmt(report.mean_switch_time_s()) << " s, missed " << report.missed_switches << "/"
        << report.n_true_switches << '\n';
  }
}

int cmd_decode(const DecodeArgs& a, bool hmm, std::ostream& out, std::ostream& err) {
  const std::vector<RecordingPaths> recs = decode_inputs(a);
  return fan_out(recs.size(), a.jobs, out, err, [&](std::size_t i, std::ostream& log) {
    const fs::path dir = output_dir(a, recs[i], recs.size());
    if (hmm) {
      hmm_one(a, recs[i], dir, log);
    } else {
      fit_one(a, recs[i], dir, log);
    }
  });
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string spec, out, format = "csv";
  std::uint64_t seed = 0;
  CLI::Option* o_seed = nullptr;
};

template <typename T>
T spec_field(const Json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput(std::string("simulation spec field '") + key + "' has the wrong type");
  }
}

Vector spec_vector(const Json& doc, const char* key) {
  const auto v = spec_field<std::vector<double>>(doc, key, {});
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const Json doc = io::read_json(a.spec);
  if (!doc.is_object()) throw InvalidInput(a.spec + ": simulation spec must be a JSON object");
  static const std::vector<std::string> known{
      "samples", "T", "channels", "C", "lag_count", "L", "direction", "fs_hz", "beta1", "beta2",
      "beta2_mode", "sigma2", "sigma2_1", "sigma2_2", "p_stay", "initial", "seed",
      "eeg_ar_coeff", "segment_swap_s"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidInput("unknown simulation spec field '" + key + "'");
    }
  }

  SyntheticSpec spec;
  spec.samples = spec_field<Index>(doc, "samples", spec_field<Index>(doc, "T", spec.samples));
  spec.channels = spec_field<Index>(doc, "channels", spec_field<Index>(doc, "C", spec.channels));
  spec.lag_count = spec_field<Index>(doc, "lag_count", spec_field<Index>(doc, "L", spec.lag_count));
  spec.direction = parse_lag_direction(spec_field<std::string>(doc, "direction", "future"));
  spec.fs_hz = spec_field<double>(doc, "fs_hz", spec.fs_hz);
  const double s2 = spec_field<double>(doc, "sigma2", 0.25);
  spec.sigma2_1 = spec_field<double>(doc, "sigma2_1", s2);
  spec.sigma2_2 = spec_field<double>(doc, "sigma2_2", s2);
  spec.seed = a.o_seed->count() ? a.seed : spec_field<std::uint64_t>(doc, "seed", 0);
  spec.eeg_ar_coeff = spec_field<double>(doc, "eeg_ar_coeff", 0.0);
  const double p_stay = spec_field<double>(doc, "p_stay", 1.0 - 1e-3);
  const auto initial = spec_field<std::array<double, 2>>(doc, "initial", {0.5, 0.5});
  try {
    spec.transition = TransitionModel(p_stay, initial);
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("simulation spec field 'p_stay'/'initial': ") + e.what());
  }
  if (spec.samples < 1) throw InvalidInput("simulation spec field 'samples' must be positive");
  if (spec.channels < 1) throw InvalidInput("simulation spec field 'channels' must be positive");
  if (spec.lag_count < 1) throw InvalidInput("simulation spec field 'lag_count' must be positive");
  if (!(spec.fs_hz > 0.0)) throw InvalidInput("simulation spec field 'fs_hz' must be positive");

  const Index width = spec.channels * spec.lag_count;
  spec.beta1 = spec_vector(doc, "beta1");
  if (spec.beta1.size() == 0) spec.beta1 = random_unit_vector(width, spec.seed);
  if (spec.beta1.size() != width) {
    throw InvalidInput("simulation spec field 'beta1' must have channels * lag_count entries");
  }
  spec.beta2 = spec_vector(doc, "beta2");
  if (spec.beta2.size() == 0) {
    const std::string mode = spec_field<std::string>(doc, "beta2_mode", "negated");
    if (mode == "negated") {
      spec.beta2 = -spec.beta1;
    } else if (mode == "orthogonal") {
      Vector v = random_unit_vector(width, spec.seed, 8);
      v -= v.dot(spec.beta1) / spec.beta1.squaredNorm() * spec.beta1;
      if (v.norm() == 0.0) throw InvalidInput("cannot build an orthogonal beta2 for width 1");
      spec.beta2 = v.normalized() * spec.beta1.norm();
    } else {
      throw InvalidInput("simulation spec field 'beta2_mode' must be 'negated' or 'orthogonal'");
    }
  }
  if (spec.beta2.size() != width) {
    throw InvalidInput("simulation spec field 'beta2' must have channels * lag_count entries");
  }

  SyntheticRecording rec = generate_synthetic(spec);
  MultichannelSeries env1 = rec.env1;
  MultichannelSeries env2 = rec.env2;
  StateSequence states = rec.states;
  if (doc.contains("segment_swap_s")) {
    SwapResult sw = segment_swap(env1, env2, states, spec_field<double>(doc, "segment_swap_s", 60.0),
                                 spec.seed);
    env1 = std::move(sw.env1);
    env2 = std::move(sw.env2);
    states = std::move(sw.states);
  }

  std::string ext;
  if (a.format == "csv") {
    ext = ".csv";
  } else if (a.format == "f32") {
    ext = ".f32";
  } else {
    throw InvalidInput("--format must be csv or f32");
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  io::save_series(rec.eeg, dir / ("eeg" + ext));
  io::save_series(env1, dir / ("env1" + ext));
  io::save_series(env2, dir / ("env2" + ext));
  io::save_states(states, dir / "states.csv");
  Json params = io::params_to_json(rec.true_params, spec.lag_count, spec.direction);
  params["seed"] = spec.seed;
  io::write_json(params, dir / "true_params.json");

  Index switches = 0;
  for (Index t = 1; t < states.size(); ++t) switches += states[t] != states[t - 1];
  const double expected = spec.transition.p_switch() * static_cast<double>(spec.samples);
  out << "samples: " << spec.samples << " (" << fmt(static_cast<double>(spec.samples) / spec.fs_hz)
      << " s)\n"
      << "expected chain switches: " << fmt(expected) << '\n'
      << "realised switches: " << switches << '\n';
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  ConfigFlags flags;
  std::string posteriors, truth, out;
  bool align = false;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  ResolvedConfig rc = resolve_config(a.flags);
  if (a.posteriors.empty() || a.truth.empty() || a.out.empty()) {
    throw InvalidInput("eval needs --posteriors, --truth and --out");
  }
  if (!fs::exists(a.posteriors)) throw InvalidInput("file not found: " + a.posteriors);
  const io::TimedPosteriors tp = io::load_posteriors(a.posteriors);
  const StateSequence truth = load_truth(a.truth, rc);
  const double fs_hz = truth.fs_hz();
  const Index n = tp.posteriors.size();

  const double step = n > 1 ? tp.times_s[1] - tp.times_s[0] : 1.0 / fs_hz;
  const double ratio = step * fs_hz;
  StateSequence aligned_truth = truth;
  if (std::abs(ratio - 1.0) < 1e-6) {
    const Index start = static_cast<Index>(std::llround(tp.times_s[0] * fs_hz));
    aligned_truth = slice_states(truth, start, n);
  } else {
    const Index win = static_cast<Index>(std::llround(ratio));
    if (win < 1) throw InvalidInput("posterior rate exceeds the truth sampling rate");
    const Index start =
        static_cast<Index>(std::llround(tp.times_s[0] * fs_hz - 0.5 * static_cast<double>(win)));
    aligned_truth = majority_downsample(truth, start, win, n);
  }

  PosteriorSequence post = tp.posteriors;
  bool swapped = false;
  if (a.align) {
    AlignedPosteriors al = align_labels(post, aligned_truth);
    post = std::move(al.posteriors);
    swapped = al.swapped;
  }
  EvalReport report = evaluate(post, aligned_truth, rc.cfg.min_hold_samples);
  report.labels_swapped = swapped;
  Json c;
  c["command"] = "eval";
  c["align_labels"] = a.align;
  c["rate_hz"] = aligned_truth.fs_hz();
  c["run"] = rc.cfg.to_json();
  report.config = c;
  io::save_report(report, a.out);
  out << "accuracy: " << fmt(report.accuracy) << '\n'
      << "true switches: " << report.n_true_switches << ", missed: " << report.missed_switches
      << '\n';
  if (!report.switch_times_s.empty()) {
    out << "mean switch detection time: " << fmt(report.mean_switch_time_s()) << " s\n";
  }
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov switching model for sample-level auditory attention decoding", "msm_aad"};
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* c_pre = app.add_subcommand("pretrain", "train a least-squares attended-envelope decoder");
  add_config_flags(c_pre, pre.flags);
  c_pre->add_option("--eeg", pre.eeg, "EEG series");
  c_pre->add_option("--attended", pre.attended, "attended envelope series");
  c_pre->add_option("--env1", pre.env1, "speaker 1 envelope");
  c_pre->add_option("--env2", pre.env2, "speaker 2 envelope");
  c_pre->add_option("--truth", pre.truth, "attention labels (1/2)");
  c_pre->add_option("--recording", pre.recordings, "recording directory (repeatable)");
  c_pre->add_option("--out", pre.out, "output decoder JSON")->required();

  DecodeArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit the Markov switching model by EM and decode");
  DecodeArgs hmm;
  auto* c_hmm = app.add_subcommand("hmm", "window-level correlation HMM baseline");
  for (auto [cmd, a] : {std::pair{c_fit, &fit}, std::pair{c_hmm, &hmm}}) {
    add_config_flags(cmd, a->flags);
    cmd->add_option("--eeg", a->eeg, "EEG series");
    cmd->add_option("--env1", a->env1, "speaker 1 envelope");
    cmd->add_option("--env2", a->env2, "speaker 2 envelope");
    cmd->add_option("--truth", a->truth, "attention labels for evaluation");
    cmd->add_option("--recording", a->recordings, "recording directory (repeatable)");
    cmd->add_option("--beta", a->beta, "pretrained decoder JSON")->required();
    cmd->add_option("--out", a->out, "output directory")->required();
    cmd->add_flag("--causal", a->causal, "forward pass only");
    cmd->add_option("--jobs", a->jobs, "parallel recordings")->check(CLI::PositiveNumber);
  }

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic recording");
  c_sim->add_option("--spec", sim.spec, "simulation spec JSON")->required();
  c_sim->add_option("--out", sim.out, "output directory")->required();
  c_sim->add_option("--format", sim.format, "series format: csv|f32");
  sim.o_seed = c_sim->add_option("--seed", sim.seed, "override the spec seed");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "score posteriors or decoded states against labels");
  add_config_flags(c_eval, ev.flags);
  c_eval->add_option("--posteriors", ev.posteriors, "posterior or decoded CSV")->required();
  c_eval->add_option("--truth", ev.truth, "attention labels")->required();
  c_eval->add_option("--out", ev.out, "report JSON")->required();
  c_eval->add_flag("--align-labels", ev.align, "resolve the state permutation against truth");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (c_pre->parsed()) return guarded([&] { cmd_pretrain(pre, out); }, err);
  if (c_sim->parsed()) return guarded([&] { cmd_simulate(sim, out); }, err);
  if (c_eval->parsed()) return guarded([&] { cmd_eval(ev, out); }, err);
  for (auto [cmd, a, is_hmm] : {std::tuple{c_fit, &fit, false}, std::tuple{c_hmm, &hmm, true}}) {
    if (!cmd->parsed()) continue;
    int inner = kExitOk;
    const int outer = guarded([&] { inner = cmd_decode(*a, is_hmm, out, err); }, err);
    return std::max(outer, inner);
  }
  return kExitUsage;
}

}  // namespace msmaad::cli
