#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlcap/errors.hpp"
#include "nlcap/io.hpp"
#include "nlcap/quantum.hpp"
#include "nlcap/solver.hpp"

namespace nlcap::cli {
namespace {

// 10 significant digits everywhere a number is printed.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw ValidationError("cannot read " + what + " from \"" + text + "\"");
  return v;
}

NSBox load_box(const std::string& path, double tol) {
  NSBox box = io::box_from_json(io::read_json(path));
  require_valid(box, tol);
  return box;
}

std::vector<BlochVector> load_measurements(const std::string& spec) {
  if (spec == "cube13") return cube13_measurements();
  return parse_measurements(io::read_text(spec));
}

// local:ALICE,BOB where each side lists one outcome digit per input,
// e.g. local:01,10.
NSBox local_box(const std::string& spec) {
  const auto comma = spec.find(',');
  const std::string alice = spec.substr(0, comma);
  const std::string bob = comma == std::string::npos ? "" : spec.substr(comma + 1);
  auto digits = [&](const std::string& side) {
    if (side.empty() || !std::all_of(side.begin(), side.end(),
                                     [](char c) { return c >= '0' && c <= '9'; }))
      throw ValidationError("local box spec must look like local:01,10, got \"" +
                            spec + "\"");
    std::vector<int> out;
    for (char c : side) out.push_back(c - '0');
    return out;
  };
  const auto ra = digits(alice);
  const auto sb = digits(bob);
  const int nR = std::max(2, *std::max_element(ra.begin(), ra.end()) + 1);
  const int nS = std::max(2, *std::max_element(sb.begin(), sb.end()) + 1);
  const BoxShape shape{static_cast<int>(ra.size()), static_cast<int>(sb.size()), nR, nS};
  NSBox box = local_deterministic_box(
      shape, [&](int a) { return ra[a]; }, [&](int b) { return sb[b]; });
  return NSBox(shape, std::vector<double>(box.data().begin(), box.data().end()),
               "local:" + spec);
}

NSBox make_box(const std::string& spec, const std::string& measurements) {
  if (spec == "pr") return pr_box();
  if (spec.rfind("werner:", 0) == 0) {
    const double gamma = parse_double(spec.substr(7), "gamma");
    const auto m = load_measurements(measurements);
    return werner_box(gamma, m, m);
  }
  if (spec.rfind("local:", 0) == 0) return local_box(spec.substr(6));
  throw ValidationError("unknown box \"" + spec + "\"; expected pr, werner:G or local:SPEC");
}

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 3) throw ValidationError("--sweep expects LO:HI:STEP");
  const double lo = parse_double(parts[0], "sweep start");
  const double hi = parse_double(parts[1], "sweep end");
  const double step = parse_double(parts[2], "sweep step");
  if (!(step > 0.0) || hi < lo || lo < 0.0 || hi > 1.0)
    throw ValidationError("--sweep needs 0 <= LO <= HI <= 1 and STEP > 0");
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < n; ++i)
    out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

struct SolverFlags {
  SolverOptions opts;
  void attach(CLI::App* cmd) {
    cmd->add_option("--max-iters", opts.outer_max_iters, "outer iteration limit");
    cmd->add_option("--seed", opts.seed, "seed recorded in reports (default 0)");
    cmd->add_option("--step0", opts.step0, "initial step (exponent of the alternating update)");
    cmd->add_option("--inner-tol", opts.inner_tol_bits, "capacity certificate gap, bits");
    cmd->add_option("--stall-window", opts.stall_window, "iterations per stall check");
    cmd->add_option("--stall-rel", opts.stall_rel, "relative improvement to continue");
    cmd->add_option("--feas-tol", opts.feas_tol, "marginal feasibility tolerance");
    cmd->add_option("--sequence-cap", opts.sequence_cap, "largest nS^nB accepted");
    const std::map<std::string, StepSchedule> schedules{
        {"alternating", StepSchedule::kAlternating},
        {"constant", StepSchedule::kConstant},
        {"sqrt", StepSchedule::kInverseSqrt}};
    cmd->add_option("--schedule", opts.schedule,
                    "block update: alternating (default), constant or sqrt mirror steps")
        ->transform(CLI::CheckedTransformer(schedules, CLI::ignore_case));
    cmd->add_option("--momentum", opts.momentum, "heavy-ball weight in [0, 1)");
    cmd->add_flag("!--fixed-step", opts.adaptive_step,
                  "mirror schedules: keep the step when the objective rises");
  }
  SolverOptions with_progress(std::ostream& err, const std::string& tag) const {
    SolverOptions o = opts;
    o.progress = [&err, tag](int t, double best) {
      err << tag << "iteration " << t << " best " << num(best) << '\n';
    };
    return o;
  }
};

int report_convergence(const SolverReport& rep, std::ostream& err) {
  if (rep.converged) return kOk;
  err << "warning: solver stopped after " << rep.iterations
      << " iterations without meeting the stall criterion\n";
  return kNoConvergence;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlocal capacity of nonsignaling boxes"};
  app.require_subcommand(1, 1);

  double tol = kDefaultValidationTol;
  std::string box_path, hv_path, out_path, hv_out_path;
  std::string measurements = "cube13";
  SolverFlags flags;

  auto* verify = app.add_subcommand("verify", "check normalization, positivity and nonsignaling");
  verify->add_option("box", box_path, "box JSON")->required();
  verify->add_option("--tol", tol, "validation tolerance");

  auto* capacity = app.add_subcommand("capacity", "asymptotic nonlocal capacity");
  capacity->add_option("box", box_path, "box JSON")->required();
  capacity->add_option("--tol", tol, "validation tolerance");
  capacity->add_option("--out", out_path, "write the solver report as JSON");
  capacity->add_option("--hv-out", hv_out_path, "write the optimal HV-box as JSON");
  flags.attach(capacity);

  auto* bounds = app.add_subcommand("bounds", "capacity with single-shot and C-box bounds");
  bounds->add_option("box", box_path, "box JSON")->required();
  bounds->add_option("--tol", tol, "validation tolerance");
  flags.attach(bounds);

  double gamma = 0.0;
  std::string sweep;
  auto* werner = app.add_subcommand("werner", "Werner-state boxes, one point or a sweep");
  auto* gamma_opt = werner->add_option("--gamma", gamma, "visibility in [0, 1]");
  auto* sweep_opt = werner->add_option("--sweep", sweep, "LO:HI:STEP");
  gamma_opt->excludes(sweep_opt);
  werner->add_option("--measurements", measurements, "cube13 or a JSON file of [x,y,z]");
  werner->add_option("--out", out_path, "CSV file (default: standard output)");
  flags.attach(werner);

  std::string spec;
  auto* make = app.add_subcommand("make-box", "write a builtin box");
  make->add_option("spec", spec, "pr | werner:G | local:ALICE,BOB")->required();
  make->add_option("--out", out_path, "box JSON (default: standard output)");
  make->add_option("--measurements", measurements, "for werner:G, cube13 or a JSON file");

  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "sample the master protocol of an HV-box");
  simulate->add_option("box", box_path, "box JSON")->required();
  simulate->add_option("--hv", hv_path, "HV-box JSON")->required();
  simulate->add_option("--samples", samples, "draws per input pair")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "sampler seed (default 0)");
  simulate->add_option("--tol", tol, "validation tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInvalid;
  }

  try {
    if (!(tol >= 0.0)) throw ValidationError("--tol must be nonnegative");

    if (verify->parsed()) {
      const NSBox box = io::box_from_json(io::read_json(box_path));
      const auto rep = verify_nonsignaling(box, tol);
      out << "max_residual " << num(rep.max_residual) << '\n'
          << "normalization_error " << num(rep.normalization_error) << '\n'
          << "min_entry " << num(rep.min_entry) << '\n';
      if (rep.min_entry < -tol || rep.normalization_error > tol) {
        out << "status invalid\n";
        return kInvalid;
      }
      if (rep.max_residual > tol) {
        out << "status signaling\n";
        err << "signaling residual " << num(rep.max_residual) << " exceeds " << num(tol) << '\n';
        return kSignaling;
      }
      out << "status ok\n";
      return kOk;
    }

    if (capacity->parsed()) {
      flags.opts.validate();
      const NSBox box = load_box(box_path, tol);
      const auto rep = nonlocal_capacity(box, flags.with_progress(err, ""));
      const auto ss = single_shot_bounds(rep.D_bits);
      out << "D_bits " << num(rep.D_bits) << '\n'
          << "ss_lower " << num(ss.lower) << '\n'
          << "ss_upper " << num(ss.upper) << '\n'
          << "iterations " << rep.iterations << '\n'
          << "feas_residual " << num(rep.feas_residual) << '\n';
      if (!out_path.empty()) io::write_text(out_path, io::dump(io::report_to_json(rep)));
      if (!hv_out_path.empty()) io::write_text(hv_out_path, io::dump(io::hvbox_to_json(rep.hv)));
      return report_convergence(rep, err);
    }

    if (bounds->parsed()) {
      flags.opts.validate();
      const NSBox box = load_box(box_path, tol);
      const auto rep = nonlocal_capacity(box, flags.with_progress(err, "capacity: "));
      const auto cor = corollary1_bounds(box, flags.with_progress(err, "c-box: "));
      const auto ss = single_shot_bounds(rep.D_bits);
      out << "D_bits " << num(rep.D_bits) << '\n'
          << "ss_lower " << num(ss.lower) << '\n'
          << "ss_upper " << num(ss.upper) << '\n'
          << "c_ch " << num(cor.c_ch) << '\n'
          << "cor1_lower " << (cor.lower_defined ? num(cor.lower) : "undefined") << '\n'
          << "cor1_upper " << num(cor.upper) << '\n';
      const int a = report_convergence(rep, err);
      return a != kOk ? a : report_convergence(cor.cbox_report, err);
    }

    if (werner->parsed()) {
      flags.opts.validate();
      if (gamma_opt->count() == 0 && sweep_opt->count() == 0)
        throw ValidationError("werner needs --gamma or --sweep");
      const std::vector<double> gammas =
          sweep_opt->count() ? parse_sweep(sweep) : std::vector<double>{gamma};
      for (double g : gammas)
        if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
      const auto m = load_measurements(measurements);

      std::ostringstream csv;
      csv << "gamma,D_bits,ss_lower,ss_upper,iterations,feas_residual\n";
      int status = kOk;
      for (std::size_t i = 0; i < gammas.size(); ++i) {
        const double g = gammas[i];
        const std::string tag = "gamma " + num(g) + ": ";
        const NSBox box = werner_box(g, m, m);
        const auto rep = nonlocal_capacity(box, flags.with_progress(err, tag));
        const auto ss = single_shot_bounds(rep.D_bits);
        csv << num(g) << ',' << num(rep.D_bits) << ',' << num(ss.lower) << ','
            << num(ss.upper) << ',' << rep.iterations << ',' << num(rep.feas_residual)
            << '\n';
        err << tag << "D_bits " << num(rep.D_bits) << " (" << i + 1 << '/'
            << gammas.size() << ")\n";
        if (report_convergence(rep, err) != kOk) status = kNoConvergence;
      }
      if (out_path.empty()) {
        out << csv.str();
      } else {
        io::write_text(out_path, csv.str());
      }
      return status;
    }

    if (make->parsed()) {
      const NSBox box = make_box(spec, measurements);
      require_valid(box, tol);
      const std::string text = io::dump(io::box_to_json(box));
      if (out_path.empty()) {
        out << text;
      } else {
        io::write_text(out_path, text);
      }
      return kOk;
    }

    if (simulate->parsed()) {
      const NSBox box = load_box(box_path, tol);
      const HVBox hv = io::hvbox_from_json(io::read_json(hv_path));
      const auto& sh = box.shape();
      if (hv.nA() != sh.nA || hv.nR() != sh.nR || hv.space().length() != sh.nB ||
          hv.space().alphabet() != sh.nS)
        throw ShapeError("HV-box alphabets do not match the box");
      MasterProtocolSampler sampler(hv, seed);
      const double n = static_cast<double>(samples);
      double worst = 0.0;
      std::vector<std::uint64_t> counts(static_cast<std::size_t>(sh.nR) * sh.nS);
      for (int a = 0; a < sh.nA; ++a) {
        for (int b = 0; b < sh.nB; ++b) {
          std::fill(counts.begin(), counts.end(), 0);
          for (std::uint64_t i = 0; i < samples; ++i) {
            const auto [r, s] = sampler.sample(a, b);
            ++counts[static_cast<std::size_t>(r) * sh.nS + s];
          }
          double gap = 0.0;
          for (int r = 0; r < sh.nR; ++r)
            for (int s = 0; s < sh.nS; ++s)
              gap = std::max(gap, std::abs(static_cast<double>(counts[r * sh.nS + s]) / n -
                                           box(a, b, r, s)));
          out << "linf a=" << a << " b=" << b << ' ' << num(gap) << '\n';
          worst = std::max(worst, gap);
        }
      }
      out << "max_linf " << num(worst) << '\n'
          << "hv_residual " << num(marginal_residual(hv, box)) << '\n';
      return kOk;
    }
  } catch (const SignalingError& e) {
    err << "signaling: " << e.what() << '\n';
    return kSignaling;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ConvergenceError& e) {
    err << "no convergence: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const Error& e) {
    err << "invalid: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace nlcap::cli
