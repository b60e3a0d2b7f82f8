// dopo-lab: steady states, dynamics, marginals and spectra of the degenerate
// OPO from the command line.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dopo/correlators.hpp"
#include "dopo/drummond.hpp"
#include "dopo/dynamics.hpp"
#include "dopo/error.hpp"
#include "dopo/io.hpp"
#include "dopo/positive_p.hpp"
#include "dopo/solver.hpp"

namespace {

using dopo::Branch;
using dopo::Error;
using dopo::ErrorKind;
using dopo::NormalizedParams;
using dopo::SteadyStateSolution;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitPhysics = 2;
constexpr int kExitUsage = 3;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kOverlayKappa = 1000.0;

struct Options {
  std::string method = "self-consistent";
  std::string sigma;
  double kappa = 1.0;
  double g = 0.01;
  std::string branch = "all";
  std::string output = "-";
  std::string format = "csv";
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  std::optional<int> grid_n;
  double tmax = 200.0;
  double seed_signal = 0.0;
  std::string axis;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + text + "'");
  }
  if (used != text.size()) throw UsageError("not a number: '" + text + "'");
  return value;
}

// "a" or "a:b:step", inclusive of b up to rounding.
std::vector<double> parse_sigma(const std::string& text) {
  if (text.empty()) throw UsageError("--sigma is required");
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() == 1) return {parse_number(parts[0])};
  if (parts.size() != 3) throw UsageError("--sigma takes a value or a:b:step");
  const double lo = parse_number(parts[0]);
  const double hi = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  if (!(step > 0.0) || !std::isfinite(step)) throw UsageError("sigma step must be > 0");
  if (!(hi >= lo)) throw UsageError("sigma range must have b >= a");
  const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw UsageError("sigma range too long");
  std::vector<double> out;
  out.reserve(count);
  for (long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

double single_sigma(const Options& o) {
  const std::vector<double> s = parse_sigma(o.sigma);
  if (s.size() != 1) throw UsageError("this command takes a single --sigma value");
  return s.front();
}

unsigned thread_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DOPO_LAB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      throw UsageError("DOPO_LAB_THREADS must be a positive integer");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs f(i) for i in [0, n) on a small pool; results land in caller slots.
template <class F>
void parallel_for(std::size_t n, F f) {
  const unsigned workers = thread_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-" || path.empty()) {
      os_ = &std::cout;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UsageError("cannot open output file '" + path + "'");
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }
  void finish() {
    os_->flush();
    if (!*os_) throw UsageError("failed writing output");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_json(dopo::complex z) { return json::array({z.real(), z.imag()}); }

json solution_json(const SteadyStateSolution& s) {
  const dopo::SecondMoments& m = s.moments;
  json j;
  j["method"] = std::string(dopo::to_string(s.method));
  j["branch"] = std::string(dopo::to_string(s.branch));
  j["sigma"] = s.params.sigma;
  j["kappa"] = s.params.kappa;
  j["g"] = s.params.g;
  j["beta_p"] = complex_json(s.mean_field.beta_p);
  j["beta_s"] = complex_json(s.mean_field.beta_s);
  j["I_p"] = s.mean_field.pump_intensity();
  j["I_s"] = s.mean_field.signal_intensity();
  j["moments"] = {{"cpp", complex_json(m.cpp)}, {"npp", m.npp},
                  {"cps", complex_json(m.cps)}, {"xps", complex_json(m.xps)},
                  {"css", complex_json(m.css)}, {"nss", m.nss}};
  j["Vx"] = s.variances.vx;
  j["Vy"] = s.variances.vy;
  j["n_s_norm"] = s.mean_field.signal_intensity() + m.nss;
  j["max_re_eig"] = number(s.max_re_eig);
  j["max_re_eig_coupled"] = number(s.max_re_eig_coupled);
  j["residual"] = number(s.residual);
  return j;
}

json drummond_json(double sigma, double kappa, double g) {
  const dopo::DrummondPrediction p = dopo::perturbative_predictions(sigma, kappa, g);
  return {{"method", "drummond"},
          {"sigma", sigma},
          {"kappa", kappa},
          {"g", g},
          {"pump_mean", p.pump_mean},
          {"Vx", p.vx},
          {"Vy", p.vy},
          {"x2", dopo::critical_moment(sigma, g, 2)},
          {"in_validity_window", p.in_validity_window}};
}

std::optional<Branch> branch_filter(const std::string& name) {
  if (name == "all") return std::nullopt;
  try {
    return dopo::branch_from_string(name);
  } catch (const Error&) {
    throw UsageError("unknown branch '" + name + "'");
  }
}

std::vector<SteadyStateSolution> solve(const std::string& method,
                                       const NormalizedParams& p) {
  if (method == "classical") return dopo::solve_classical(p);
  return dopo::solve_branches(p);
}

void check_method(const std::string& method, bool allow_drummond) {
  if (method == "classical" || method == "self-consistent") return;
  if (method == "drummond" && allow_drummond) return;
  throw UsageError("unsupported --method '" + method + "' for this command");
}

void check_format(const std::string& format, bool allow_json) {
  if (format == "csv") return;
  if (format == "json" && allow_json) return;
  throw UsageError("unsupported --format '" + format + "' for this command");
}

// One sweep row per (sigma, branch).
struct Row {
  double sigma = 0.0;
  std::string branch;
  double ip = kNaN, is = kNaN, vx = kNaN, vy = kNaN, ns = kNaN;
  double eig = kNaN, residual = kNaN;
  std::string error;
};

std::vector<Row> sweep_point(const Options& o, double sigma,
                             std::optional<Branch> only) {
  std::vector<Row> rows;
  try {
    if (o.method == "drummond") {
      const dopo::DrummondPrediction p =
          dopo::perturbative_predictions(sigma, o.kappa, o.g);
      Row r;
      r.sigma = sigma;
      r.branch = "none";
      r.ip = p.pump_mean * p.pump_mean;
      r.vx = p.vx;
      r.vy = p.vy;
      // g^2 <a^+ a> = g^2 (Vx + Vy - 2) / 4
      r.ns = o.g * o.g * (p.vx + p.vy - 2.0) / 4.0;
      rows.push_back(r);
      return rows;
    }
    for (const SteadyStateSolution& s : solve(o.method, {sigma, o.kappa, o.g})) {
      if (only && s.branch != *only) continue;
      Row r;
      r.sigma = sigma;
      r.branch = std::string(dopo::to_string(s.branch));
      r.ip = s.mean_field.pump_intensity();
      r.is = s.mean_field.signal_intensity();
      r.vx = s.variances.vx;
      r.vy = s.variances.vy;
      r.ns = r.is + s.moments.nss;
      r.eig = s.max_re_eig;
      r.residual = s.residual;
      rows.push_back(r);
    }
  } catch (const Error& e) {
    Row r;
    r.sigma = sigma;
    r.error = std::string(dopo::to_string(e.kind())) + ": " + e.what();
    rows.push_back(r);
  }
  return rows;
}

void write_rows(std::ostream& os, const Options& o, const std::vector<Row>& rows,
                double sigma_header) {
  if (o.format == "json") {
    json out = json::array();
    for (const Row& r : rows) {
      out.push_back({{"sigma", r.sigma}, {"method", o.method}, {"branch", r.branch},
                     {"I_p", number(r.ip)}, {"I_s", number(r.is)},
                     {"Vx", number(r.vx)}, {"Vy", number(r.vy)},
                     {"n_s_norm", number(r.ns)}, {"max_re_eig", number(r.eig)},
                     {"residual", number(r.residual)},
                     {"error", r.error.empty() ? json(nullptr) : json(r.error)}});
    }
    os << out.dump(2) << '\n';
    return;
  }
  dopo::write_params_header(os, o.method, {sigma_header, o.kappa, o.g},
                            "sigma_spec=" + o.sigma);
  os << "sigma,method,branch,I_p,I_s,Vx,Vy,n_s_norm,max_re_eig,residual,error\n";
  for (const Row& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    os << dopo::format_number(r.sigma) << ',' << o.method << ',' << r.branch << ','
       << dopo::format_number(r.ip) << ',' << dopo::format_number(r.is) << ','
       << dopo::format_number(r.vx) << ',' << dopo::format_number(r.vy) << ','
       << dopo::format_number(r.ns) << ',' << dopo::format_number(r.eig) << ','
       << dopo::format_number(r.residual) << ',' << err << '\n';
  }
}

int cmd_sweep(const Options& o) {
  check_method(o.method, true);
  check_format(o.format, true);
  const std::vector<double> sigmas = parse_sigma(o.sigma);
  NormalizedParams{sigmas.front(), o.kappa, o.g}.validate();
  const std::optional<Branch> only = branch_filter(o.branch);

  std::vector<std::vector<Row>> per_point(sigmas.size());
  parallel_for(sigmas.size(), [&](std::size_t i) {
    per_point[i] = sweep_point(o, sigmas[i], only);
  });
  std::vector<Row> rows;
  for (const auto& block : per_point) rows.insert(rows.end(), block.begin(), block.end());

  Output out(o.output);
  write_rows(out.stream(), o, rows, sigmas.front());
  out.finish();
  return kExitOk;
}

int cmd_point(const Options& o) {
  check_method(o.method, true);
  check_format(o.format, true);
  const double sigma = single_sigma(o);
  const NormalizedParams p{sigma, o.kappa, o.g};
  p.validate();
  const std::optional<Branch> only = branch_filter(o.branch);

  Output out(o.output);
  if (o.format == "csv") {
    std::vector<Row> rows;
    if (o.method == "drummond") {
      rows = sweep_point(o, sigma, only);
    } else {
      // Errors propagate here rather than landing in a row.
      for (const SteadyStateSolution& s : solve(o.method, p)) {
        if (only && s.branch != *only) continue;
        Row r;
        r.sigma = sigma;
        r.branch = std::string(dopo::to_string(s.branch));
        r.ip = s.mean_field.pump_intensity();
        r.is = s.mean_field.signal_intensity();
        r.vx = s.variances.vx;
        r.vy = s.variances.vy;
        r.ns = r.is + s.moments.nss;
        r.eig = s.max_re_eig;
        r.residual = s.residual;
        rows.push_back(r);
      }
    }
    write_rows(out.stream(), o, rows, sigma);
  } else if (o.method == "drummond") {
    out.stream() << drummond_json(sigma, o.kappa, o.g).dump(2) << '\n';
  } else {
    json arr = json::array();
    for (const SteadyStateSolution& s : solve(o.method, p)) {
      if (only && s.branch != *only) continue;
      arr.push_back(solution_json(s));
    }
    out.stream() << arr.dump(2) << '\n';
  }
  out.finish();
  return kExitOk;
}

int cmd_dynamics(const Options& o) {
  check_format(o.format, false);
  const double sigma = single_sigma(o);
  const NormalizedParams p{sigma, o.kappa, o.g};
  p.validate();
  if (!(o.tmax > 0.0)) throw UsageError("--tmax must be > 0");
  const int samples = o.grid_n.value_or(201);
  if (samples < 2) throw UsageError("--grid-n must be >= 2");

  dopo::GaussianState s0 = dopo::vacuum_state();
  s0.mean_field.beta_s = o.seed_signal;
  const std::vector<double> times = dopo::linear_grid(0.0, o.tmax, samples);
  const std::vector<dopo::GaussianState> traj = dopo::integrate_trajectory(s0, p, times);

  Output out(o.output);
  dopo::write_trajectory_csv(out.stream(), traj, p);
  out.finish();
  return kExitOk;
}

std::vector<double> grid_from_options(const Options& o, std::vector<double> fallback) {
  if (!o.grid_min && !o.grid_max && !o.grid_n) return fallback;
  const double lo = o.grid_min.value_or(fallback.front());
  const double hi = o.grid_max.value_or(fallback.back());
  const int n = o.grid_n.value_or(static_cast<int>(fallback.size()));
  if (n < 2 || !(hi > lo)) throw UsageError("grid needs --grid-n >= 2 and max > min");
  return dopo::linear_grid(lo, hi, n);
}

struct MarginalJob {
  double sigma;
  dopo::MarginalAxis axis;
};

void write_marginal(std::ostream& os, const Options& o, const MarginalJob& job,
                    double overlay_kappa) {
  const NormalizedParams p{job.sigma, overlay_kappa, o.g};
  const std::vector<SteadyStateSolution> sols = dopo::solve_branches(p);
  const SteadyStateSolution& below = sols.front();
  const SteadyStateSolution* above = sols.size() > 1 ? &sols[1] : nullptr;

  const SteadyStateSolution& widest =
      (above && job.axis == dopo::MarginalAxis::XPlus) ? *above : below;
  const std::vector<double> grid = grid_from_options(
      o, dopo::default_marginal_grid(widest, job.axis, o.grid_n.value_or(1025)));

  const dopo::MarginalCurve exact =
      dopo::PositivePField(job.sigma, o.g).marginal(job.axis, grid);
  std::optional<dopo::MarginalCurve> g_below;
  std::optional<dopo::MarginalCurve> g_above;
  try {
    g_below = dopo::gaussian_marginal_curves(below, job.axis, grid);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateMarginal) throw;
  }
  if (above) {
    try {
      g_above = dopo::gaussian_marginal_curves(*above, job.axis, grid);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMarginal) throw;
    }
  }
  dopo::write_marginal_csv(os, p, exact, g_below ? &*g_below : nullptr,
                           g_above ? &*g_above : nullptr);
}

std::string marginal_file_name(const MarginalJob& job) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "marginal_%s_sigma_%.9f.csv",
                std::string(dopo::to_string(job.axis)).c_str(), job.sigma);
  return buf;
}

int cmd_marginals(const Options& o, bool kappa_given) {
  check_format(o.format, false);
  const double overlay_kappa = kappa_given ? o.kappa : kOverlayKappa;
  const double g = o.g;
  NormalizedParams{0.0, overlay_kappa, g}.validate();

  std::vector<MarginalJob> jobs;
  if (!o.sigma.empty()) {
    const dopo::MarginalAxis axis = o.axis.empty()
                                        ? dopo::MarginalAxis::XPlus
                                        : dopo::marginal_axis_from_string(o.axis);
    for (double s : parse_sigma(o.sigma)) jobs.push_back({s, axis});
  } else {
    for (double s : {1.0 - g, 1.0 - g * g / 4.0, 1.0 + g * g / 4.0, 1.0 + g, 1.0 + 2.0 * g}) {
      jobs.push_back({s, dopo::MarginalAxis::XPlus});
    }
    jobs.push_back({1.0 + g, dopo::MarginalAxis::XMinus});
    if (!o.axis.empty()) {
      const dopo::MarginalAxis axis = dopo::marginal_axis_from_string(o.axis);
      std::erase_if(jobs, [&](const MarginalJob& j) { return j.axis != axis; });
    }
  }

  if (jobs.size() == 1) {
    Output out(o.output);
    write_marginal(out.stream(), o, jobs.front(), overlay_kappa);
    out.finish();
    return kExitOk;
  }
  // Several curves: --output names a directory.
  const std::filesystem::path dir = o.output == "-" ? "marginals" : o.output;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create directory '" + dir.string() + "'");
  for (const MarginalJob& job : jobs) {
    Output out((dir / marginal_file_name(job)).string());
    write_marginal(out.stream(), o, job, overlay_kappa);
    out.finish();
  }
  return kExitOk;
}

int cmd_spectrum(const Options& o) {
  check_method(o.method, false);
  check_format(o.format, false);
  const double sigma = single_sigma(o);
  const NormalizedParams p{sigma, o.kappa, o.g};
  p.validate();
  const std::optional<Branch> only = branch_filter(o.branch == "all" ? "below" : o.branch);

  const std::vector<SteadyStateSolution> sols = solve(o.method, p);
  const auto it = std::find_if(sols.begin(), sols.end(), [&](const SteadyStateSolution& s) {
    return s.branch == *only;
  });
  if (it == sols.end()) {
    throw Error(ErrorKind::NoAboveBranch,
                "branch '" + o.branch + "' does not exist at this sigma");
  }
  const std::vector<double> omega =
      grid_from_options(o, dopo::linear_grid(-10.0, 10.0, 2001));
  const dopo::SpectrumCurve spectrum = dopo::quadrature_spectrum(*it, omega);

  Output out(o.output);
  dopo::write_spectrum_csv(out.stream(), *it, spectrum);
  out.finish();
  return kExitOk;
}

void report(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "classical, self-consistent or drummond");
  cmd->add_option("--sigma", o.sigma, "value or a:b:step");
  cmd->add_option("--kappa", o.kappa, "gamma_p / gamma_s");
  cmd->add_option("--g", o.g, "normalized nonlinearity");
  cmd->add_option("--branch", o.branch, "below, above-plus, above-minus or all");
  cmd->add_option("--output", o.output, "output path, - for stdout");
  cmd->add_option("--format", o.format, "csv or json");
  cmd->add_option("--grid-min", o.grid_min, "grid lower end");
  cmd->add_option("--grid-max", o.grid_max, "grid upper end");
  cmd->add_option("--grid-n", o.grid_n, "grid points");
  cmd->add_option("--tmax", o.tmax, "integration time (dynamics)");
  cmd->add_option("--seed-signal", o.seed_signal, "initial real signal amplitude (dynamics)");
  cmd->add_option("--axis", o.axis, "x_plus or x_minus (marginals)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degenerate OPO steady states, fluctuations and spectra", "dopo-lab"};
  app.set_version_flag("--version", std::string(dopo::kToolVersion));
  app.require_subcommand(1);

  Options o;
  CLI::App* sweep = app.add_subcommand("sweep", "steady states over a sigma range");
  CLI::App* point = app.add_subcommand("point", "steady states at one sigma");
  CLI::App* dynamics = app.add_subcommand("dynamics", "Gaussian-state trajectory");
  CLI::App* marginals = app.add_subcommand("marginals", "exact positive-P marginals");
  CLI::App* spectrum = app.add_subcommand("spectrum", "intracavity quadrature spectra");
  for (CLI::App* cmd : {sweep, point, dynamics, marginals, spectrum}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sweep->parsed()) return cmd_sweep(o);
    if (point->parsed()) {
      if (point->count("--format") == 0) o.format = "json";
      return cmd_point(o);
    }
    if (dynamics->parsed()) return cmd_dynamics(o);
    if (marginals->parsed()) return cmd_marginals(o, marginals->count("--kappa") > 0);
    if (spectrum->parsed()) return cmd_spectrum(o);
  } catch (const UsageError& e) {
    report("usage", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    report(dopo::to_string(e.kind()), e.what());
    if (e.kind() == ErrorKind::InvalidParameter) return kExitUsage;
    return dopo::is_physics_error(e.kind()) ? kExitPhysics : kExitNumerical;
  } catch (const std::exception& e) {
    report("numerical", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
