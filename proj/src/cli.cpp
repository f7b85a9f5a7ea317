// SPDX-License-Identifier: Apache-2.0
#include "vmfev/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmfev/config.hpp"
#include "vmfev/error.hpp"
#include "vmfev/experiments.hpp"
#include "vmfev/gmm.hpp"
#include "vmfev/grasp.hpp"
#include "vmfev/io.hpp"
#include "vmfev/losses.hpp"
#include "vmfev/mc_oracle.hpp"
#include "vmfev/natpn.hpp"
#include "vmfev/power_spherical.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev::cli {
namespace {

using nlohmann::json;

// Raised when a verification command ran to completion but failed its check.
class VerificationFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const UnitVector3& v) { return vec_json(v.vec()); }

std::string error_line(const std::string& key, const std::string& msg) {
  return json{{key, msg}}.dump() + "\n";
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;

  CliConfig config() const {
    CliConfig c;
    if (auto env = seed_from_env()) c.seed = c.synth.seed = c.fit.seed = *env;
    if (!config_path.empty()) c = parse_config(read_file(config_path), c);
    if (seed_flag) c.seed = c.synth.seed = c.fit.seed = *seed_flag;
    return c;
  }

  void warn(const std::string& msg) const { err << error_line("warning", msg); }

  // Command-line triples are normalized; a visible deviation from unit
  // length is reported.
  UnitVector3 unit_arg(const std::string& name, const std::string& text) const {
    const Eigen::Vector3d v = parse_triple(text);
    const double n = v.norm();
    if (!std::isfinite(n) || n == 0.0) throw DataError(name + " must be a non-zero finite vector");
    if (std::abs(n - 1.0) > 1e-6) warn(name + " has norm " + format_double(n) + "; normalized");
    return UnitVector3(v);
  }
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path);
}

void write_output(const Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    ctx.out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << text;
}

// Parses each JSONL line and hands it to `fn` with its 0-based index.
template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
  std::size_t i = 0;
  for (const auto& line : split_lines(text)) {
    try {
      fn(i, json::parse(line));
    } catch (const json::exception& e) {
      throw DataError("record " + std::to_string(i) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(i) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DataError("record " + std::to_string(i) + ": " + e.what());
    }
    ++i;
  }
}

UnitVector3 unit_field(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw DataError(std::string(key) + " must have 3 entries");
  return UnitVector3(v[0], v[1], v[2]);
}

std::vector<Eigen::Vector3d> points_field(const json& j, const char* key) {
  std::vector<Eigen::Vector3d> pts;
  for (const auto& p : j.at(key)) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 3) throw DataError(std::string(key) + " points must have 3 entries");
    pts.emplace_back(v[0], v[1], v[2]);
  }
  return pts;
}

Eigen::MatrixXd read_features(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for_each_record(text, [&](std::size_t, const json& j) {
    rows.push_back(j.at("feature").get<std::vector<double>>());
    if (rows.back().empty() || rows.back().size() != rows.front().size()) {
      throw DataError("feature dimension mismatch");
    }
  });
  if (rows.empty()) throw DataError("no feature records");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (!m.allFinite()) throw DataError("non-finite feature value");
  return m;
}

//---------------------------------------------------------------------------//
// Subcommands

struct SampleArgs {
  std::string kind, mu;
  double kappa = 0.0;
  std::size_t n = 1;
};

void cmd_sample(const Context& ctx, const SampleArgs& a) {
  const CliConfig cfg = ctx.config();
  const UnitVector3 mu = ctx.unit_arg("--mu", a.mu);
  RandomStream rng(cfg.seed);
  const auto xs = a.kind == "vmf" ? sample(VmfParams(mu, a.kappa), a.n, rng)
                                  : ps_sample(PsParams(mu, a.kappa), a.n, rng);
  for (const auto& x : xs) {
    ctx.out << "{\"x\":[" << format_double(x.x()) << "," << format_double(x.y()) << ","
            << format_double(x.z()) << "]}\n";
  }
}

struct LogpdfArgs {
  std::string kind, mu, input;
  double kappa = 0.0;
};

void cmd_logpdf(const Context& ctx, const LogpdfArgs& a) {
  const UnitVector3 mu = ctx.unit_arg("--mu", a.mu);
  const VmfParams vp(mu, a.kappa);
  const PsParams pp(mu, a.kappa);
  std::string csv = "index,log_pdf\n";
  for_each_record(read_input(a.input), [&](std::size_t i, const json& j) {
    const UnitVector3 x = unit_field(j, "x");
    const double lp = a.kind == "vmf" ? log_pdf(vp, x) : ps_log_pdf(pp, x);
    csv += std::to_string(i) + "," + format_double(lp) + "\n";
  });
  ctx.out << csv;
}

struct PosteriorArgs {
  std::string prior_mu, obs_mu;
  double prior_kappa = 0.0, evidence = 0.0;
  bool exact = false;
};

void cmd_posterior(const Context& ctx, const PosteriorArgs& a) {
  const VmfParams prior(ctx.unit_arg("--prior-mu", a.prior_mu), a.prior_kappa);
  const UnitVector3 obs = ctx.unit_arg("--obs-mu", a.obs_mu);
  const Evidence ev(a.evidence);
  json j;
  if (a.exact) {
    const std::vector<UnitVector3> data{obs};
    const VmfParams post = conjugate_posterior(prior, ev.m, data);
    j["semantics"] = "exact";
    j["mu"] = vec_json(post.mu);
    j["kappa"] = post.kappa;
  } else {
    const VmfParams post = posterior_update(prior, obs, ev);
    const Eigen::Vector3d pre = interpolated_mean(prior, obs, ev);
    j["semantics"] = "additive";
    j["mu"] = vec_json(post.mu);
    j["kappa"] = post.kappa;
    j["pre_normalization"] = vec_json(pre);
    j["pre_normalization_norm"] = pre.norm();
  }
  ctx.out << j.dump() << "\n";
}

struct LossEvalArgs {
  std::string input;
};

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void cmd_loss_eval(const Context& ctx, const LossEvalArgs& a) {
  const CliConfig cfg = ctx.config();
  const BayesianLossConfig bcfg{cfg.gamma};
  const LossWeights weights;
  std::string csv =
      "index,kappa_post,ell,entropy,bayesian,cosine,nll,width,success,approach,reconstruction,"
      "weighted\n";
  for_each_record(read_input(a.input), [&](std::size_t i, const json& j) {
    const VmfParams prior(unit_field(j, "prior_mu"), j.at("prior_kappa").get<double>());
    const UnitVector3 obs = unit_field(j, "obs_mu");
    const double lik_kappa = j.at("lik_kappa").get<double>();
    if (!(lik_kappa >= 0.0) || !std::isfinite(lik_kappa)) throw DataError("lik_kappa must be >= 0");
    const Evidence ev(j.at("evidence").get<double>());
    const UnitVector3 target = unit_field(j, "target");
    const VmfParams post = posterior_update(prior, obs, ev);

    LossParts parts;
    parts.baseline = bayesian_loss(post, lik_kappa, target, bcfg);
    std::optional<double> width, success, approach, recon;
    if (j.contains("pred_width")) {
      width = l1_width_loss(j.at("pred_width").get<double>(), j.at("true_width").get<double>());
      parts.width = *width;
    }
    if (j.contains("pred_quality")) {
      success = bce_loss(j.at("pred_quality").get<double>(), j.at("label").get<int>());
      parts.success = *success;
    }
    if (j.contains("bin_scores")) {
      const auto scores = j.at("bin_scores").get<std::vector<double>>();
      const auto bins = bin_directions(post.mu, static_cast<int>(scores.size()));
      approach = soft_bin_loss(scores, unit_field(j, "true_approach"), bins);
      parts.approach = *approach;
    }
    if (j.contains("recon")) {
      recon = chamfer_extended(points_field(j, "recon"), points_field(j, "patch"));
      parts.reconstruction = *recon;
    }
    csv += std::to_string(i) + "," + format_double(post.kappa) + "," +
           format_double(expected_log_likelihood(post, lik_kappa, target)) + "," +
           format_double(entropy(post)) + "," + format_double(parts.baseline) + "," +
           format_double(cosine_loss(obs, target)) + "," +
           format_double(nll_loss(VmfParams(obs, lik_kappa), target)) + "," + opt_cell(width) +
           "," + opt_cell(success) + "," + opt_cell(approach) + "," + opt_cell(recon) + "," +
           format_double(weighted_sum(parts, weights)) + "\n";
  });
  ctx.out << csv;
}

struct VerifyArgs {
  std::optional<std::size_t> samples;
  unsigned threads = 1;
  std::string sampler = "vmf";
};

void cmd_verify_mc(const Context& ctx, const VerifyArgs& a) {
  const CliConfig cfg = ctx.config();
  const std::size_t s = a.samples.value_or(cfg.mc_samples);
  const SamplerKind kind = a.sampler == "vmf" ? SamplerKind::kVmf : SamplerKind::kPowerSpherical;
  const auto grid = verify_ell_grid(EllGridSpec{}, s, RandomStream(cfg.seed), kind,
                                    McOptions{std::max(1u, a.threads)});
  std::string csv = "kappa_post,kappa_lik,dot,analytic,mc_value,std_error,z\n";
  for (const auto& p : grid) {
    csv += format_double(p.kappa_post) + "," + format_double(p.kappa_lik) + "," +
           format_double(p.dot) + "," + format_double(p.analytic) + "," +
           format_double(p.mc.value) + "," + format_double(p.mc.std_error) + "," +
           format_double(p.z) + "\n";
  }
  ctx.out << csv;
  const double frac = grid_pass_fraction(grid);
  ctx.err << json{{"grid_points", grid.size()}, {"pass_fraction", frac}, {"z_max", 3.0}}.dump()
          << "\n";
  // The surrogate sampler's bias is reported, not judged.
  if (kind == SamplerKind::kVmf && frac < 0.99) {
    throw VerificationFailure("only " + format_double(100.0 * frac) +
                              "% of grid points have z < 3 (need 99%)");
  }
}

struct GmmFitArgs {
  std::string input, output;
  std::optional<int> k;
  std::optional<int> max_iters;
  double tol = 1e-8;
};

void cmd_gmm_fit(const Context& ctx, const GmmFitArgs& a) {
  const CliConfig cfg = ctx.config();
  GmmFitOptions opts;
  opts.k = a.k.value_or(cfg.fit.gmm_k);
  opts.max_iters = a.max_iters.value_or(cfg.fit.gmm_max_iters);
  opts.tol = a.tol;
  RandomStream rng(cfg.seed);
  const GmmFit fitted = fit_em(read_features(read_input(a.input)), opts, rng);
  for (const auto& msg : fitted.reseeds) ctx.warn(msg);
  write_output(ctx, a.output, gmm_to_json(fitted.model) + "\n");
}

struct GmmDensityArgs {
  std::string model, input;
  std::optional<double> n_h;
  bool per_dim = false;
};

void cmd_gmm_density(const Context& ctx, const GmmDensityArgs& a) {
  const CliConfig cfg = ctx.config();
  const GmmModel model = gmm_from_json(read_file(a.model));
  const Eigen::MatrixXd feats = read_features(read_input(a.input));
  const double n_h =
      a.n_h.value_or(cfg.fit.n_h > 0.0 ? cfg.fit.n_h : static_cast<double>(feats.rows()));
  const CertaintyBudget budget(n_h);
  std::string csv = "index,log_density,evidence\n";
  for (Eigen::Index r = 0; r < feats.rows(); ++r) {
    const Eigen::VectorXd z = feats.row(r).transpose();
    const double ld = a.per_dim ? log_density_per_dim(model, z) : log_density(model, z);
    const Evidence ev = evidence_from_log_density(ld, budget, cfg.fit.m_max);
    csv += std::to_string(r) + "," + format_double(ld) + "," + format_double(ev.m) + "\n";
  }
  ctx.out << csv;
}

struct SynthArgs {
  std::string output;
  std::optional<double> ood_shift;
};

void cmd_synth(const Context& ctx, const SynthArgs& a) {
  CliConfig cfg = ctx.config();
  if (a.ood_shift) cfg.synth.ood_shift = *a.ood_shift;
  write_output(ctx, a.output, dataset_to_jsonl(gen_dataset(cfg.synth)));
}

struct FitArgs {
  std::string loss, input, seeds, curve_out;
  std::optional<double> ood_shift;
  unsigned threads = 1;
};

void cmd_fit(const Context& ctx, const FitArgs& a) {
  CliConfig cfg = ctx.config();
  if (a.ood_shift) cfg.synth.ood_shift = *a.ood_shift;
  const LossKind kind = loss_kind_from_string(a.loss);
  std::vector<std::uint64_t> seeds =
      a.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : parse_seed_list(a.seeds);

  std::vector<FitReport> reports;
  if (!a.input.empty()) {
    const Dataset data = dataset_from_jsonl(read_input(a.input));
    for (auto s : seeds) {
      FitOptions o = cfg.fit;
      o.seed = s;
      reports.push_back(fit(data, kind, o));
    }
  } else {
    reports = run_seeds(cfg.synth, kind, cfg.fit, seeds, std::max(1u, a.threads));
  }
  for (const auto& r : reports) ctx.out << fit_report_to_json(r) << "\n";
  if (!a.curve_out.empty()) {
    const FitReport& r = reports.front();
    write_output(ctx, a.curve_out, curve_to_csv(r.epistemic ? *r.epistemic : r.aleatoric));
  }
}

struct SparsifyArgs {
  std::string input, curve_out;
};

void cmd_sparsify(const Context& ctx, const SparsifyArgs& a) {
  std::vector<double> errors, unc;
  bool first = true;
  for (const auto& line : split_lines(read_input(a.input))) {
    const bool header = first && line.find_first_of("abcdfghijklmnopqrstuvwxyz_") != std::string::npos;
    first = false;
    if (header) continue;
    const auto vals = parse_double_list(line);
    if (vals.size() != 2) throw DataError("sparsify rows need 'error,uncertainty'");
    errors.push_back(vals[0]);
    unc.push_back(vals[1]);
  }
  const auto res = sparsification(errors, unc);
  ctx.out << json{{"ausc", res.ausc}, {"ause", res.ause}, {"count", errors.size()},
                  {"metric_scale", 100}}
                 .dump()
          << "\n";
  if (!a.curve_out.empty()) write_output(ctx, a.curve_out, curve_to_csv(res));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vMF evidential learning toolkit", "vmfev"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx{out, err, {}, std::nullopt};
  std::uint64_t seed_value = 0;
  app.add_option("--config", ctx.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed_value, "random seed");
  std::function<void()> action;

  const auto kinds = CLI::IsMember({"vmf", "ps"});

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "draw unit vectors (JSONL)");
  sample_cmd->add_option("kind", sa.kind, "vmf or ps")->required()->check(kinds);
  sample_cmd->add_option("--mu", sa.mu, "mean direction x,y,z")->required();
  sample_cmd->add_option("--kappa", sa.kappa, "concentration")->required()->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--n", sa.n, "number of draws")->check(CLI::PositiveNumber);
  sample_cmd->callback([&] { action = [&] { cmd_sample(ctx, sa); }; });

  LogpdfArgs la;
  auto* logpdf_cmd = app.add_subcommand("logpdf", "log density of JSONL points (CSV)");
  logpdf_cmd->add_option("kind", la.kind, "vmf or ps")->required()->check(kinds);
  logpdf_cmd->add_option("--mu", la.mu, "mean direction x,y,z")->required();
  logpdf_cmd->add_option("--kappa", la.kappa, "concentration")->required()->check(CLI::NonNegativeNumber);
  logpdf_cmd->add_option("--input", la.input, "JSONL with \"x\" (- for stdin)")->required();
  logpdf_cmd->callback([&] { action = [&] { cmd_logpdf(ctx, la); }; });

  PosteriorArgs pa;
  auto* post_cmd = app.add_subcommand("posterior", "posterior update (JSON)");
  post_cmd->add_option("--prior-mu", pa.prior_mu)->required();
  post_cmd->add_option("--prior-kappa", pa.prior_kappa)->required()->check(CLI::NonNegativeNumber);
  post_cmd->add_option("--obs-mu", pa.obs_mu)->required();
  post_cmd->add_option("--evidence", pa.evidence)->required()->check(CLI::NonNegativeNumber);
  post_cmd->add_flag("--exact", pa.exact, "conjugate update with kappa = |theta|");
  post_cmd->callback([&] { action = [&] { cmd_posterior(ctx, pa); }; });

  LossEvalArgs lea;
  auto* loss_cmd = app.add_subcommand("loss-eval", "evaluate losses on a JSONL batch (CSV)");
  loss_cmd->add_option("--input", lea.input, "JSONL batch (- for stdin)")->required();
  loss_cmd->callback([&] { action = [&] { cmd_loss_eval(ctx, lea); }; });

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify-mc", "analytic vs Monte-Carlo grid check (CSV)");
  verify_cmd->add_option("--samples", va.samples, "samples per grid point")->check(CLI::Range(100, 1000000000));
  verify_cmd->add_option("--threads", va.threads)->check(CLI::Range(1, 1024));
  verify_cmd->add_option("--sampler", va.sampler)->check(kinds);
  verify_cmd->callback([&] { action = [&] { cmd_verify_mc(ctx, va); }; });

  GmmFitArgs gfa;
  auto* gfit_cmd = app.add_subcommand("gmm-fit", "fit a diagonal GMM to JSONL \"feature\" rows");
  gfit_cmd->add_option("--input", gfa.input)->required();
  gfit_cmd->add_option("--output", gfa.output, "model JSON path (default stdout)");
  gfit_cmd->add_option("--k", gfa.k)->check(CLI::Range(1, 1000));
  gfit_cmd->add_option("--max-iters", gfa.max_iters)->check(CLI::Range(1, 1000000));
  gfit_cmd->add_option("--tol", gfa.tol)->check(CLI::NonNegativeNumber);
  gfit_cmd->callback([&] { action = [&] { cmd_gmm_fit(ctx, gfa); }; });

  GmmDensityArgs gda;
  auto* gden_cmd = app.add_subcommand("gmm-density", "log density and evidence (CSV)");
  gden_cmd->add_option("--model", gda.model)->required()->check(CLI::ExistingFile);
  gden_cmd->add_option("--input", gda.input)->required();
  gden_cmd->add_option("--n-h", gda.n_h, "certainty budget (default: record count)")
      ->check(CLI::PositiveNumber);
  gden_cmd->add_flag("--per-dim", gda.per_dim, "dimension-normalized log density");
  gden_cmd->callback([&] { action = [&] { cmd_gmm_density(ctx, gda); }; });

  SynthArgs sya;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset (JSONL)");
  synth_cmd->add_option("--output", sya.output);
  synth_cmd->add_option("--ood-shift", sya.ood_shift)->check(CLI::NonNegativeNumber);
  synth_cmd->callback([&] { action = [&] { cmd_synth(ctx, sya); }; });

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "train a predictor and report metrics (JSON lines)");
  fit_cmd->add_option("--loss", fa.loss)->required()->check(CLI::IsMember({"cosine", "nll", "bayesian"}));
  fit_cmd->add_option("--input", fa.input, "dataset JSONL (default: synthetic from config)");
  fit_cmd->add_option("--seeds", fa.seeds, "comma-separated seeds");
  fit_cmd->add_option("--threads", fa.threads)->check(CLI::Range(1, 1024));
  fit_cmd->add_option("--ood-shift", fa.ood_shift)->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--curve-out", fa.curve_out, "sparsification curve CSV of the first seed");
  fit_cmd->callback([&] { action = [&] { cmd_fit(ctx, fa); }; });

  SparsifyArgs spa;
  auto* sp_cmd = app.add_subcommand("sparsify", "AUSC / AUSE from error,uncertainty CSV (JSON)");
  sp_cmd->add_option("--input", spa.input)->required();
  sp_cmd->add_option("--curve-out", spa.curve_out);
  sp_cmd->callback([&] { action = [&] { cmd_sparsify(ctx, spa); }; });

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << error_line("error", e.what());
    return kUsage;
  }
  if (seed_opt->count() > 0) ctx.seed_flag = seed_value;

  try {
    action();
    return kOk;
  } catch (const VerificationFailure& e) {
    err << error_line("error", e.what());
    return kVerificationFailed;
  } catch (const DivergenceError& e) {
    err << json{{"error", e.what()}, {"iteration", e.iteration()}}.dump() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << error_line("error", e.what());
    return kData;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace vmfev::cli
