#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spdada/optimizers.hpp"

namespace spdada {

/// 17 significant digits: round-trips every double.
inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(std::string_view s) {
  const std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw Error(ErrorKind::InvalidInput, "not a number: '" + tmp + "'");
  }
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                       : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// `key=value` pairs separated by spaces, as written in the `#` preamble lines.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::string_view line) {
  KeyValues kv;
  for (const auto& tok : split(line, ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline std::string config_line(const SolverConfig& c) {
  std::ostringstream os;
  os << "solver=" << to_string(c.kind) << " eta=" << fmt_real(c.eta)
     << " beta0=" << fmt_real(c.beta0) << " armijo_rho=" << fmt_real(c.armijo.rho)
     << " armijo_omega=" << fmt_real(c.armijo.omega)
     << " armijo_alpha0=" << fmt_real(c.armijo.alpha0)
     << " armijo_trial=" << to_string(c.armijo.trial_rule) << " tol=" << fmt_real(c.tol_grad)
     << " max_iter=" << c.max_iter;
  return os.str();
}

inline SolverConfig config_from(const KeyValues& kv) {
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::InvalidInput, std::string("missing config key ") + key);
    return it->second;
  };
  SolverConfig c;
  c.kind = parse_solver_kind(get("solver"));
  c.eta = parse_real(get("eta"));
  c.beta0 = parse_real(get("beta0"));
  c.armijo.rho = parse_real(get("armijo_rho"));
  c.armijo.omega = parse_real(get("armijo_omega"));
  c.armijo.alpha0 = parse_real(get("armijo_alpha0"));
  c.armijo.trial_rule = parse_trial_rule(get("armijo_trial"));
  c.tol_grad = parse_real(get("tol"));
  c.max_iter = std::stoull(get("max_iter"));
  return c;
}

inline constexpr std::string_view kTraceHeader =
    "run_id,solver,problem,k,f,grad_norm,alpha,beta,expmaps,fevals,elapsed_ns,status";

/// Trace CSV: `#` preamble lines carrying `key=value` configuration, the
/// fixed header, then one row per record; the last row of each run holds its
/// terminal status, earlier rows read `running`.
inline void write_trace_csv(std::ostream& os, const std::vector<RunTrace>& traces,
                            const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) os << "# " << line << '\n';
  os << kTraceHeader << '\n';
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      const auto& r = t.records[i];
      const bool terminal = i + 1 == t.records.size();
      os << t.run_id << ',' << to_string(t.config.kind) << ',' << t.problem << ',' << r.k << ','
         << fmt_real(r.f) << ',' << fmt_real(r.grad_norm) << ',' << fmt_real(r.alpha) << ','
         << fmt_real(r.beta) << ',' << r.expmaps << ',' << r.fevals << ',' << r.elapsed_ns << ','
         << (terminal ? to_string(t.status) : std::string_view("running")) << '\n';
    }
  }
}

struct TraceFile {
  std::vector<std::string> preamble;
  std::vector<RunTrace> traces;
};

inline TraceFile read_trace_csv(std::istream& is) {
  TraceFile out;
  std::string line;
  bool header_seen = false;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  SolverConfig base;
  bool have_config = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      const auto kv = parse_key_values(body);
      if (kv.count("solver") && kv.count("eta")) {
        base = config_from(kv);
        have_config = true;
      }
      out.preamble.push_back(std::move(body));
      continue;
    }
    if (!header_seen) {
      if (line != kTraceHeader) throw Error(ErrorKind::InvalidInput, "unexpected trace header: " + line);
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 12) throw Error(ErrorKind::InvalidInput, "malformed trace row: " + line);
    const auto key = std::make_pair(f[0], f[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      RunTrace t;
      t.run_id = f[0];
      t.config = have_config ? base : SolverConfig{};
      t.config.kind = parse_solver_kind(f[1]);
      t.problem = f[2];
      it = index.emplace(key, out.traces.size()).first;
      out.traces.push_back(std::move(t));
    }
    RunTrace& t = out.traces[it->second];
    TraceRecord r;
    r.k = std::stoull(f[3]);
    r.f = parse_real(f[4]);
    r.grad_norm = parse_real(f[5]);
    r.alpha = parse_real(f[6]);
    r.beta = parse_real(f[7]);
    r.expmaps = std::stoull(f[8]);
    r.fevals = std::stoull(f[9]);
    r.elapsed_ns = std::stoll(f[10]);
    if (f[11] != "running") t.status = parse_run_status(f[11]);
    t.records.push_back(r);
  }
  if (!header_seen) throw Error(ErrorKind::InvalidInput, "trace file has no header");
  return out;
}

inline TraceFile read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  return read_trace_csv(in);
}

struct AuditRow {
  std::string trace_id;
  std::string check;
  double bound = 0.0;
  double observed = 0.0;
  bool pass = true;
};

inline void write_audit_csv(std::ostream& os, const std::vector<AuditRow>& rows,
                            const std::vector<std::string>& preamble = {}) {
  for (const auto& line : preamble) os << "# " << line << '\n';
  os << "trace_id,check,bound,observed,pass\n";
  for (const auto& r : rows) {
    os << r.trace_id << ',' << r.check << ',' << fmt_real(r.bound) << ',' << fmt_real(r.observed)
       << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace spdada
