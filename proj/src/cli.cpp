#include "mipost/cli.hpp"

#include "mipost/error.hpp"
#include "mipost/fit.hpp"
#include "mipost/mc.hpp"
#include "mipost/moments.hpp"
#include "mipost/table.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef MIPOST_VERSION
#define MIPOST_VERSION "0.0.0"
#endif

namespace mipost::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
  std::string input;
  std::string input_format = "csv";
  std::string prior = "jeffreys";
  std::string prior_matrix;
  std::string var_order = "auto";
  std::string fit = "gamma";
  std::string ansatz_base = "gamma";
  std::vector<double> quantiles;
  std::optional<std::size_t> mc;
  std::uint64_t mc_seed = 0;
  unsigned mc_workers = 0;
  std::string format = "json";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Json fit_json(const FitResult& fit) {
  Json j;
  j["family"] = std::string(to_string(fit.family()));
  Json params;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) {
          params["mean"] = number(p.mean);
          params["variance"] = number(p.variance);
        } else if constexpr (std::is_same_v<T, GammaParams>) {
          params["shape"] = number(p.shape);
          params["scale"] = number(p.scale);
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          params["log_mean"] = number(p.log_mean);
          params["log_variance"] = number(p.log_variance);
        } else {
          params["base"] = std::string(to_string(p.base));
          params["linear"] = number(p.linear);
          params["quadratic"] = number(p.quadratic);
          params["base_mean"] = number(p.base_mean);
          params["base_variance"] = number(p.base_variance);
          params["normalization"] = number(p.normalization);
        }
      },
      fit.params);
  j["parameters"] = params;
  Json achieved = Json::array();
  for (double m : fit.moments_achieved) achieved.push_back(number(m));
  j["moments_achieved"] = achieved;
  const auto& d = fit.diagnostics;
  j["diagnostics"] = {{"iterations", d.iterations},
                      {"residual", number(d.residual)},
                      {"density_nonnegative", d.density_nonnegative},
                      {"min_modulation", number(d.min_modulation)},
                      {"mass_above_i_max", number(d.mass_above_support)},
                      {"starts", d.starts}};
  return j;
}

Json mc_json(const McEstimate& est) {
  auto moment = [](const McMoment& m) { return Json{{"value", number(m.value)}, {"std_error", number(m.std_error)}}; };
  Json j;
  j["samples"] = est.sample_count;
  j["seed"] = est.seed;
  j["batches"] = kMcBatches;
  j["mean"] = moment(est.mean);
  j["variance"] = moment(est.variance);
  j["skewness"] = moment(est.skewness);
  j["kurtosis"] = moment(est.kurtosis);
  Json tails = Json::array();
  for (const auto& t : est.tails) {
    tails.push_back({{"i_star", number(t.threshold)},
                     {"frequency", number(t.frequency)},
                     {"std_error", number(t.std_error)}});
  }
  j["tail_frequencies"] = tails;
  j["max_sample"] = number(est.max_sample);
  j["histogram"] = {{"edges", vector_json(est.bin_edges)}, {"counts", est.bin_counts}};
  return j;
}

void print_text(const Json& report, std::ostream& out, const std::string& prefix = "") {
  for (auto it = report.begin(); it != report.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      print_text(*it, out, key);
    } else {
      out << std::left << std::setw(36) << key << " " << it->dump() << "\n";
    }
  }
}

Json build_report(const Options& opt, std::vector<std::string>& warnings) {
  const TableFormat format = parse_table_format(opt.input_format);
  const CountsTable table = parse_table(read_file(opt.input), format);

  const PriorKind kind = parse_prior_kind(opt.prior);
  PriorSpec prior = PriorSpec::named(PriorKind::haldane);
  if (kind == PriorKind::custom) {
    if (opt.prior_matrix.empty()) throw ValidationError("--prior custom needs --prior-matrix");
    prior = PriorSpec::custom(parse_matrix(read_file(opt.prior_matrix), format));
  } else {
    prior = PriorSpec::named(kind);
  }
  const PosteriorCounts counts = apply_prior(table, prior);
  for (double q : opt.quantiles) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw ValidationError("--quantile must be a finite value >= 0");
  }
  if (opt.mc && *opt.mc < kMcMinSamples) {
    throw ValidationError("--mc needs at least " + std::to_string(kMcMinSamples) + " samples");
  }

  Json report;
  report["tool"] = {{"name", "mipost"}, {"version", MIPOST_VERSION}};

  double observed = 0.0;
  for (double v : table.matrix().values()) observed += v;
  Json input;
  input["rows"] = table.rows();
  input["cols"] = table.cols();
  input["table"] = matrix_json(table.matrix());
  input["prior"] = std::string(to_string(prior.kind()));
  if (prior.custom_matrix()) input["prior_matrix"] = matrix_json(*prior.custom_matrix());
  input["observed_total"] = number(observed);
  input["n"] = number(counts.total());
  report["input"] = input;

  const PointStats st = point_stats(counts);
  report["point_stats"] = {{"J", number(st.plug_in_mi)},
                           {"K", number(st.log_ratio_sq)},
                           {"L", number(st.log_ratio_cube)},
                           {"M", number(st.inverse_count_term)},
                           {"P", number(st.marginal_term)},
                           {"Q", number(st.concentration_term)},
                           {"row_J", vector_json(st.row_mi)},
                           {"col_J", vector_json(st.col_mi)}};

  MomentSummary summary = summarize(counts);
  for (const auto& w : summary.validity.warnings) warnings.push_back(w);

  // Variance order used for fits.
  int order = 1;
  if (opt.var_order == "2") {
    if (!counts.all_positive()) {
      var_o2(counts);  // throws ZeroCellError naming the cells
    }
    order = 2;
  } else if (opt.var_order == "auto") {
    order = summary.var_o2 && *summary.var_o2 > 0.0 ? 2 : 1;
    if (order == 1 && !summary.validity.single_row_or_column) {
      warnings.emplace_back("auto variance order fell back to first order");
    }
  }
  const double variance = order == 2 ? *summary.var_o2 : summary.var_o1;

  report["moments"] = {{"mean_exact", number(summary.mean_exact)},
                       {"mean_o2", number(summary.mean_o2)},
                       {"var_o1", number(summary.var_o1)},
                       {"var_o2", number(summary.var_o2)},
                       {"central3", number(summary.central3)},
                       {"central4", number(summary.central4)},
                       {"skewness", number(summary.skewness)},
                       {"kurtosis", number(summary.kurtosis)},
                       {"i_max", number(summary.i_max)},
                       {"variance_order", order},
                       {"variance", number(variance)}};

  std::optional<FitResult> fit;
  if (opt.fit != "none") {
    const Family family = parse_family(opt.fit);
    if (family == Family::poly_ansatz) {
      AnsatzOptions ao;
      ao.support_max = summary.i_max;
      try {
        fit = fit_poly_ansatz(ansatz_input(summary, variance), parse_family(opt.ansatz_base), ao);
      } catch (const ValidationError& e) {
        // computed moments, not user input, failed the precondition
        throw DomainError(e.what());
      }
      if (!fit->diagnostics.density_nonnegative) {
        warnings.emplace_back("fitted ansatz density is negative somewhere on [0, 1.05 I_max]");
      }
    } else {
      fit = fit_two_moment(summary.mean_exact, variance, family, summary.i_max);
    }
    report["fit"] = fit_json(*fit);
  } else {
    report["fit"] = nullptr;
  }

  Json quantiles = Json::array();
  for (double q : opt.quantiles) {
    Json entry{{"i_star", number(q)}};
    entry["survival"] = fit ? number(survival(*fit, q)) : Json(nullptr);
    quantiles.push_back(entry);
  }
  report["quantiles"] = quantiles;

  if (opt.mc) {
    report["mc"] = mc_json(mc_estimate(counts, *opt.mc, opt.mc_seed, opt.quantiles, opt.mc_workers));
  }

  const auto& v = summary.validity;
  report["diagnostics"] = {{"rs_over_n", number(v.rs_over_n)},
                           {"single_row_or_column", v.single_row_or_column},
                           {"independence_degenerate", v.independence_degenerate},
                           {"zero_cells", v.zero_cells},
                           {"variance_negative", v.variance_negative},
                           {"warnings", warnings}};
  report["seed"] = opt.mc_seed;
  return report;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Posterior distribution of mutual information from a contingency table", "mipost"};
  Options opt;
  app.add_option("--input", opt.input, "Contingency table file")->required();
  app.add_option("--input-format", opt.input_format, "csv|tsv|json")
      ->check(CLI::IsMember({"csv", "tsv", "json"}));
  app.add_option("--prior", opt.prior, "haldane|perks|jeffreys|uniform|custom")
      ->check(CLI::IsMember({"haldane", "perks", "jeffreys", "uniform", "custom"}));
  app.add_option("--prior-matrix", opt.prior_matrix, "Pseudo-count matrix for --prior custom");
  app.add_option("--var-order", opt.var_order, "1|2|auto")->check(CLI::IsMember({"1", "2", "auto"}));
  app.add_option("--fit", opt.fit, "normal|gamma|lognormal|ansatz|none")
      ->check(CLI::IsMember({"normal", "gamma", "lognormal", "ansatz", "none"}));
  app.add_option("--ansatz-base", opt.ansatz_base, "Base density of the ansatz: normal|gamma")
      ->check(CLI::IsMember({"normal", "gamma"}));
  app.add_option("--quantile", opt.quantiles, "Report p(I > X); repeatable")->take_all();
  app.add_option("--mc", opt.mc, "Monte Carlo sample count");
  app.add_option("--mc-seed,--seed", opt.mc_seed, "Monte Carlo seed");
  app.add_option("--mc-workers", opt.mc_workers, "Monte Carlo threads (0 = all cores; output is unaffected)");
  app.add_option("--format", opt.format, "json|text")->check(CLI::IsMember({"json", "text"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mipost: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  std::vector<std::string> warnings;
  Json report;
  try {
    report = build_report(opt, warnings);
  } catch (const FormatError& e) {
    err << "mipost: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    err << "mipost: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    err << "mipost: numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConvergenceError& e) {
    err << "mipost: numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }

  for (const auto& w : warnings) err << "mipost: warning: " << w << "\n";
  if (opt.format == "text") {
    print_text(report, out);
  } else {
    out << report.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace mipost::cli
