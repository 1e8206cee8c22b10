// Command-line front end: verbs simulate, trace, weakvalues, monitor, eve and
// sweep. Exit codes: 0 success, 1 engine error, 2 usage error; errors are one
// JSON line {"code", "message"} on stderr.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "zeno_tsvf/errors.hpp"
#include "zeno_tsvf/io.hpp"
#include "zeno_tsvf/measurement.hpp"
#include "zeno_tsvf/schedule.hpp"
#include "zeno_tsvf/sweep.hpp"
#include "zeno_tsvf/tsvf.hpp"

namespace zeno_tsvf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitEngineError = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "D1", "D2", "D3(m)" / "D3:m", "Bob(m,n)" / "Bob:m:n".
inline SinkId parse_sink(const std::string& text) {
  static const std::regex d3(R"(D3(?:\((\d+)\)|:(\d+)))");
  static const std::regex bob(R"(Bob(?:\((\d+),(\d+)\)|:(\d+):(\d+)))");
  std::smatch match;
  if (text == "D1") return SinkId::d1();
  if (text == "D2") return SinkId::d2();
  if (std::regex_match(text, match, d3)) {
    return SinkId::d3(std::stoi(match[1].matched ? match[1].str() : match[2].str()));
  }
  if (std::regex_match(text, match, bob)) {
    const bool paren = match[1].matched;
    return SinkId::bob_absorb(std::stoi(match[paren ? 1 : 3].str()),
                              std::stoi(match[paren ? 2 : 4].str()));
  }
  throw UsageError("unrecognized sink '" + text + "' (expected D1, D2, D3(m) or Bob(m,n))");
}

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

inline int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw UsageError("not an integer: '" + s + "'");
  return v;
}

}  // namespace detail

// Comma-separated items; each item is a value or an inclusive range
// start:stop[:step].
inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& item : detail::split(text, ',')) {
    const auto parts = detail::split(item, ':');
    if (parts.size() == 1) {
      out.push_back(detail::to_int(parts[0]));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const int start = detail::to_int(parts[0]);
      const int stop = detail::to_int(parts[1]);
      const int step = parts.size() == 3 ? detail::to_int(parts[2]) : 1;
      if (step <= 0 || stop < start) throw UsageError("bad integer range '" + item + "'");
      for (long long v = start; v <= stop; v += step) out.push_back(static_cast<int>(v));
    } else {
      throw UsageError("bad integer list item '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : detail::split(text, ',')) {
    const auto parts = detail::split(item, ':');
    if (parts.size() == 1) {
      out.push_back(detail::to_double(parts[0]));
    } else if (parts.size() == 3) {
      const double start = detail::to_double(parts[0]);
      const double stop = detail::to_double(parts[1]);
      const double step = detail::to_double(parts[2]);
      if (!(step > 0.0) || stop < start) throw UsageError("bad range '" + item + "'");
      const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (long long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    } else {
      throw UsageError("bad list item '" + item + "' (expected value or start:stop:step)");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

struct Options {
  int outer = 0;
  int inner = 0;
  int bit = 0;
  std::string post;
  std::string format;
  std::string output;
  std::string density;
  std::string schedule_out;
  std::string monitor = "all";
  std::string placement = "after-inner";
  std::string condition;
  std::string config;
  std::string m_list;
  std::string n_list;
  std::string g_list;
  double g = 0.0;
  double sigma = 1.0;
  double prior = 0.5;
  int slice_m = 0;
  int slice_n = 1;
  std::uint64_t seed = 0;
  std::uint64_t n_runs = 0;
  unsigned jobs = 1;
  std::size_t max_points = kDefaultSweepCap;
};

namespace detail {

inline std::string error_line(std::string_view code, const std::string& message) {
  return io::Json{{"code", code}, {"message", message}}.dump() + "\n";
}

// Looks for --config PATH / --config=PATH and turns every key of that JSON
// object into a flag, unless the flag is already on the command line.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config file '" + *path + "'");
  io::Json config;
  try {
    config = io::Json::parse(in);
  } catch (const io::Json::exception& e) {
    throw UsageError("config file '" + *path + "' is not valid JSON: " + e.what());
  }
  if (!config.is_object()) throw UsageError("config file must hold a JSON object");

  auto present = [&](const std::string& flag) {
    for (const std::string& a : args) {
      if (a == flag || a.starts_with(flag + "=")) return true;
    }
    return false;
  };
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || present(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        text += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
      }
    } else {
      text = value.dump();
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

inline void write_output(const Options& opt, const std::string& text, std::ostream& out) {
  if (opt.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(opt.output, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + opt.output + "'");
  file << text;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << text;
}

inline LogicBit logic_bit(int bit) { return bit == 1 ? LogicBit::kOne : LogicBit::kZero; }

inline PostSelection post_selection(const Options& opt) {
  if (opt.post.empty()) return {opt.bit == 1 ? SinkId::d2() : SinkId::d1()};
  return {parse_sink(opt.post)};
}

inline std::string format_or(const Options& opt, const char* fallback,
                             std::initializer_list<const char*> allowed) {
  const std::string fmt = opt.format.empty() ? fallback : opt.format;
  for (const char* a : allowed) {
    if (fmt == a) return fmt;
  }
  throw UsageError("format '" + fmt + "' is not supported by this verb");
}

inline SliceLocator coupling_slice(const Options& opt, const Schedule& schedule) {
  const int cycle = opt.slice_m == 0 ? schedule.outer_cycles() : opt.slice_m;
  return inner_slice(schedule, cycle, opt.slice_n);
}

inline std::set<SliceLocator> monitor_slices(const Options& opt, const Schedule& schedule) {
  if (opt.monitor == "all") return all_inner_slices(schedule);
  std::set<SliceLocator> out;
  if (opt.monitor.empty() || opt.monitor == "none") return out;
  for (const std::string& item : split(opt.monitor, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw UsageError("monitor slots are m:n pairs, got '" + item + "'");
    out.insert(inner_slice(schedule, to_int(parts[0]), to_int(parts[1])));
  }
  return out;
}

inline MonitorPlacement placement(const Options& opt) {
  if (opt.placement == "after-inner") return MonitorPlacement::kAfterInnerBS;
  if (opt.placement == "after-absorber") return MonitorPlacement::kAfterAbsorber;
  throw UsageError("placement must be after-inner or after-absorber");
}

inline io::Json slice_json(const Schedule& schedule, SliceLocator slice) {
  const Event& e = schedule.events[slice.after_event_index];
  return io::Json{{"after_event_index", slice.after_event_index}, {"m", e.cycle}, {"n", e.step}};
}

// --- verbs -----------------------------------------------------------------

inline void cmd_simulate(const Options& opt, std::ostream& out) {
  const Schedule schedule = build_schedule({opt.outer, opt.inner, logic_bit(opt.bit), {}});
  const RunReport report = forward_evolve(schedule).report;
  if (!opt.schedule_out.empty()) write_file(opt.schedule_out, io::dump(io::schedule_to_json(schedule)));
  if (format_or(opt, "json", {"json", "csv"}) == "json") {
    write_output(opt, io::dump(io::report_to_json(report)), out);
    return;
  }
  std::ostringstream csv;
  io::write_csv_header(csv, {"M", "N", "bit", "p_D1", "p_D2", "sum_p_D3", "sum_p_absorb", "total"});
  csv << report.outer_cycles << ',' << report.inner_cycles << ',' << opt.bit << ','
      << io::format_double(report.p_d1) << ',' << io::format_double(report.p_d2) << ','
      << io::format_double(report.sum_p_d3()) << ',' << io::format_double(report.sum_p_absorb())
      << ',' << io::format_double(report.total) << '\n';
  write_output(opt, csv.str(), out);
}

inline void cmd_trace(const Options& opt, std::ostream& out) {
  const std::string fmt = format_or(opt, "csv", {"csv", "json"});
  const Schedule schedule = build_schedule({opt.outer, opt.inner, logic_bit(opt.bit), {}});
  const TwoStateTrace trace = two_state_trace(schedule, post_selection(opt));
  const auto rows = presence_trace_export(schedule, trace);
  if (fmt == "json") {
    write_output(opt, io::dump(io::trace_to_json(rows)), out);
    return;
  }
  std::ostringstream csv;
  io::write_trace_csv(csv, rows);
  write_output(opt, csv.str(), out);
}

// Pointer weak measurement of P_C at one channel slice, compared with the
// weak value from the two-state trace.
inline void cmd_weakvalues(const Options& opt, std::ostream& out) {
  format_or(opt, "json", {"json"});
  const Schedule schedule = build_schedule({opt.outer, opt.inner, logic_bit(opt.bit), {}});
  const PostSelection post = post_selection(opt);
  const SliceLocator slice = coupling_slice(opt, schedule);
  const TwoStateTrace trace = two_state_trace(schedule, post);
  if (slice.after_event_index + 1 >= trace.slices.size()) {
    throw Error(ErrorCode::kInvalidParameter, "coupling slice lies after the post-selection event");
  }
  const TwoStateSlice& ts = trace.slices[slice.after_event_index + 1];
  const PointerModel model{opt.g, opt.sigma};
  const PointerDistribution dist = couple_pointer(schedule, {slice}, model, post);
  if (!opt.density.empty()) {
    std::ostringstream csv;
    io::write_density_csv(csv, dist);
    write_file(opt.density, csv.str());
  }
  io::Json w = io::Json::object();
  for (PathMode mode : kAllModes) w[std::string(1, mode_letter(mode))] = io::complex_json(ts.weak_value(mode));
  const double mean = pointer_mean(dist);
  io::Json j{{"M", opt.outer},
             {"N", opt.inner},
             {"bit", opt.bit},
             {"post", post.target.label()},
             {"slice", slice_json(schedule, slice)},
             {"weak_values", w},
             {"abl_c", io::clean(abl_probability(ts.forward, ts.backward, PathMode::kC))},
             {"g", opt.g},
             {"sigma", opt.sigma},
             {"pointer_mean", io::clean(mean)},
             {"mixture_mean", io::clean(mixture_mean(dist))},
             {"density_integral", io::clean(density_integral(dist))}};
  j["shift_per_g"] = opt.g != 0.0 ? io::Json(io::clean(mean / opt.g)) : io::Json(nullptr);
  write_output(opt, io::dump(j), out);
}

inline void cmd_monitor(const Options& opt, std::ostream& out) {
  format_or(opt, "json", {"json"});
  const Schedule schedule = build_schedule({opt.outer, opt.inner, logic_bit(opt.bit), {}});
  const std::set<SliceLocator> monitor = monitor_slices(opt, schedule);
  const MonitorPlacement where = placement(opt);
  const MonteCarloSummary mc = run_monte_carlo(schedule, monitor, opt.seed, opt.n_runs, where, opt.jobs);

  io::Json j = io::monte_carlo_to_json(schedule, mc);
  j["placement"] = opt.placement;
  io::Json freq = io::Json::object();
  for (const auto& [sink, n] : mc.never_found_detector_counts) {
    freq[sink.label()] = static_cast<double>(n) / static_cast<double>(mc.never_found_runs);
  }
  j["never_found_frequencies"] = freq;
  // The analytic counterpart exists for the open channel monitored everywhere.
  if (schedule.bit() == LogicBit::kZero && monitor == all_inner_slices(schedule)) {
    try {
      j["never_found_oracle"] = io::distribution_json(never_found_equivalence_oracle(opt.outer, opt.inner));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kImpossiblePostSelection) throw;
      j["never_found_oracle"] = nullptr;
    }
  }
  write_output(opt, io::dump(j), out);
}

inline void cmd_eve(const Options& opt, std::ostream& out) {
  format_or(opt, "json", {"json"});
  const Schedule s0 = build_schedule({opt.outer, opt.inner, LogicBit::kZero, {}});
  const Schedule s1 = build_schedule({opt.outer, opt.inner, LogicBit::kOne, {}});
  const SliceLocator slice = coupling_slice(opt, s0);
  std::optional<PostSelection> condition;
  if (!opt.condition.empty()) condition = PostSelection{parse_sink(opt.condition)};
  const EveResult eve = eve_information(s0, s1, slice, {opt.g, opt.sigma}, opt.prior, condition);
  if (!opt.density.empty()) {
    std::ostringstream csv;
    io::write_density_csv(csv, eve);
    write_file(opt.density, csv.str());
  }
  io::Json j{{"M", opt.outer},
             {"N", opt.inner},
             {"slice", slice_json(s0, slice)},
             {"g", opt.g},
             {"sigma", opt.sigma},
             {"prior", opt.prior},
             {"mutual_information_bits", io::clean(eve.mutual_information_bits)},
             {"tv_distance", io::clean(eve.tv_distance)}};
  j["condition"] = condition ? io::Json(condition->target.label()) : io::Json(nullptr);
  write_output(opt, io::dump(j), out);
}

inline void cmd_sweep(const Options& opt, std::ostream& out) {
  format_or(opt, "csv", {"csv"});
  SweepSpec spec;
  spec.outer = parse_int_list(opt.m_list);
  spec.inner = parse_int_list(opt.n_list);
  if (!opt.g_list.empty()) spec.couplings = parse_double_list(opt.g_list);
  spec.bit = logic_bit(opt.bit);
  spec.sigma = opt.sigma;
  spec.eve_cycle = opt.slice_m;
  spec.eve_step = opt.slice_n;
  spec.prior = opt.prior;
  spec.max_points = opt.max_points;
  for (int v : spec.outer) {
    if (v < 1) throw UsageError("M values must be >= 1");
  }
  for (int v : spec.inner) {
    if (v < 1) throw UsageError("N values must be >= 1");
  }
  const auto rows = run_sweep(spec, opt.jobs);
  std::ostringstream csv;
  io::write_sweep_csv(csv, spec, rows);
  write_output(opt, csv.str(), out);
}

}  // namespace detail

// Runs one command line (without the program name).
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Two-state analysis of the chained-Zeno counterfactual communication protocol",
               "zeno_tsvf"};
  app.require_subcommand(1);

  auto add_protocol = [&](CLI::App* sub) {
    sub->add_option("--M", opt.outer, "outer cycles")->required()->check(CLI::Range(1, 1'000'000));
    sub->add_option("--N", opt.inner, "inner cycles")->required()->check(CLI::Range(1, 10'000'000));
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", opt.format, "csv or json");
    sub->add_option("--output", opt.output, "output path (default stdout)");
    sub->add_option("--config", opt.config, "JSON file mirroring the flags; flags win");
  };
  auto add_bit = [&](CLI::App* sub) {
    sub->add_option("--bit", opt.bit, "0: channel open, 1: Bob blocks")->check(CLI::IsMember({0, 1}));
  };
  auto add_pointer = [&](CLI::App* sub, bool g_required) {
    auto* g = sub->add_option("--g", opt.g, "pointer coupling");
    if (g_required) g->required();
    sub->add_option("--sigma", opt.sigma, "pointer width")->check(CLI::PositiveNumber);
    sub->add_option("--slice-m", opt.slice_m, "outer cycle of the coupled InnerBS (0: last)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--slice-n", opt.slice_n, "inner step of the coupled InnerBS")
        ->check(CLI::PositiveNumber);
  };
  auto add_jobs = [&](CLI::App* sub) {
    sub->add_option("--jobs", opt.jobs, "worker threads")
        ->envname("ZENO_TSVF_JOBS")
        ->check(CLI::Range(1u, 1024u));
  };

  auto* simulate = app.add_subcommand("simulate", "detector probabilities of one run");
  add_protocol(simulate);
  add_bit(simulate);
  add_common(simulate);
  simulate->add_option("--schedule-out", opt.schedule_out, "also write the event schedule as JSON");

  auto* trace = app.add_subcommand("trace", "forward/backward presence trace");
  add_protocol(trace);
  add_bit(trace);
  add_common(trace);
  trace->add_option("--post", opt.post, "post-selected sink (default D1 for bit 0, D2 for bit 1)");

  auto* weak = app.add_subcommand("weakvalues", "pointer weak measurement of the channel projector");
  add_protocol(weak);
  add_bit(weak);
  add_common(weak);
  add_pointer(weak, false);
  opt.g = 0.01;
  weak->add_option("--post", opt.post, "post-selected sink");
  weak->add_option("--density", opt.density, "write the conditional pointer density as CSV");

  auto* monitor = app.add_subcommand("monitor", "projective monitoring Monte Carlo");
  add_protocol(monitor);
  add_bit(monitor);
  add_common(monitor);
  add_jobs(monitor);
  monitor->add_option("--seed", opt.seed, "64-bit seed")->required();
  monitor->add_option("--n-runs", opt.n_runs, "number of trajectories")->required();
  monitor->add_option("--monitor", opt.monitor, "all, none, or m:n slots");
  monitor->add_option("--placement", opt.placement, "after-inner or after-absorber");

  auto* eve = app.add_subcommand("eve", "eavesdropper pointer statistics");
  add_protocol(eve);
  add_common(eve);
  add_pointer(eve, true);
  eve->add_option("--prior", opt.prior, "prior probability of bit 0");
  eve->add_option("--condition", opt.condition, "condition on a detector outcome");
  eve->add_option("--density", opt.density, "write x,p0,p1 densities as CSV");

  auto* sweep = app.add_subcommand("sweep", "parameter sweep, long-format CSV");
  add_bit(sweep);
  add_common(sweep);
  add_jobs(sweep);
  sweep->add_option("--M-list", opt.m_list, "M values, e.g. 1:40 or 5,10,20")->required();
  sweep->add_option("--N-list", opt.n_list, "N values")->required();
  sweep->add_option("--g-list", opt.g_list, "pointer couplings; enables eavesdropper columns");
  sweep->add_option("--sigma", opt.sigma, "pointer width")->check(CLI::PositiveNumber);
  sweep->add_option("--slice-m", opt.slice_m, "outer cycle of Eve's slice (0: last)")
      ->check(CLI::NonNegativeNumber);
  sweep->add_option("--slice-n", opt.slice_n, "inner step of Eve's slice")->check(CLI::PositiveNumber);
  sweep->add_option("--prior", opt.prior, "prior probability of bit 0");
  sweep->add_option("--max-points", opt.max_points, "cap on the number of sweep points");

  try {
    args = detail::merge_config(std::move(args));
    std::vector<const char*> argv{"zeno_tsvf"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }

    if (simulate->parsed()) detail::cmd_simulate(opt, out);
    else if (trace->parsed()) detail::cmd_trace(opt, out);
    else if (weak->parsed()) detail::cmd_weakvalues(opt, out);
    else if (monitor->parsed()) detail::cmd_monitor(opt, out);
    else if (eve->parsed()) detail::cmd_eve(opt, out);
    else if (sweep->parsed()) detail::cmd_sweep(opt, out);
  } catch (const UsageError& e) {
    err << detail::error_line("usage-error", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    err << detail::error_line(code_name(e.code()), e.what());
    return kExitEngineError;
  } catch (const std::exception& e) {
    err << detail::error_line("io-error", e.what());
    return kExitEngineError;
  }
  return kExitOk;
}

}  // namespace zeno_tsvf::cli
