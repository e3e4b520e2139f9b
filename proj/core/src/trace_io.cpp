#include "bsc/trace_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace bsc::io {

std::string format_number(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string format_value(const ConfigValue& value) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double d) const { return format_number(d); }
    std::string operator()(long long i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(Visitor{}, value);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

template <class T>
std::string optional_int(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      os << ',';
    }
    os << csv_field(fields[i]);
  }
  os << "\r\n";
}

nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) {
    return nullptr;
  }
  return v;
}

nlohmann::json to_json(const ConfigValue& value) {
  struct Visitor {
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(double d) const { return number_or_null(d); }
    nlohmann::json operator()(long long i) const { return i; }
    nlohmann::json operator()(bool b) const { return b; }
  };
  return std::visit(Visitor{}, value);
}

nlohmann::json to_json(const ConfigEcho& echo) {
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& [key, value] : echo) {
    obj[key] = to_json(value);
  }
  return obj;
}

std::string row_status(const SolveOutcome& outcome, std::size_t index) {
  if (index + 1 == outcome.trace.size() && outcome.status == SolveStatus::step_collapse) {
    return "step collapse";
  }
  return {};
}

std::string pretty(const char* fmt, double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), fmt, v);
  return buf.data();
}

}  // namespace

void write_config_echo(std::ostream& os, const RunReport& report) {
  os << "# experiment=" << report.experiment << '\n';
  for (const auto& [key, value] : report.config) {
    os << "# " << key << '=' << format_value(value) << '\n';
  }
}

void write_csv(std::ostream& os, const RunReport& report, CsvSchema schema) {
  write_config_echo(os, report);
  const auto& trace = report.outcome.trace;
  if (schema == CsvSchema::trials) {
    write_row(os, {"k", "t", "u", "du", "dup", "Hprime", "status"});
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& rec = trace[i];
      for (const auto& trial : rec.trials) {
        write_row(os, {std::to_string(rec.k), format_number(trial.t), format_number(rec.u_display),
                       format_number(rec.du_display), format_number(trial.trial_increment),
                       format_number(trial.h_prime), to_string(trial.verdict)});
      }
      const auto extra = row_status(report.outcome, i);
      if (!extra.empty()) {
        write_row(os, {std::to_string(rec.k), format_number(rec.t), format_number(rec.u_display),
                       format_number(rec.du_display), "", format_number(rec.h_prime), extra});
      }
    }
    return;
  }
  write_row(os, {"k", "t", "residual_v", "increment_u", "Hprime", "bisection_trials", "kappa_k",
                 "inner_iters", "status"});
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& rec = trace[i];
    auto status = row_status(report.outcome, i);
    if (status.empty()) {
      status = rec.trials.empty() ? std::string() : to_string(rec.trials.back().verdict);
    }
    write_row(os, {std::to_string(rec.k), format_number(rec.t), format_number(rec.residual_v),
                   format_number(rec.increment_u), format_number(rec.h_prime),
                   std::to_string(rec.bisection_trials), optional_number(rec.kappa_k),
                   optional_int(rec.inner_iters), status});
  }
}

void write_json(std::ostream& os, const RunReport& report) {
  nlohmann::json doc;
  nlohmann::json config = to_json(report.config);
  config["experiment"] = report.experiment;
  doc["config"] = std::move(config);

  nlohmann::json trace = nlohmann::json::array();
  for (const auto& rec : report.outcome.trace) {
    nlohmann::json r;
    r["k"] = rec.k;
    r["t"] = number_or_null(rec.t);
    r["residual_v"] = number_or_null(rec.residual_v);
    r["increment_u"] = number_or_null(rec.increment_u);
    r["h_prime"] = number_or_null(rec.h_prime);
    r["bisection_trials"] = rec.bisection_trials;
    r["kappa_k"] = rec.kappa_k ? number_or_null(*rec.kappa_k) : nlohmann::json(nullptr);
    r["inner_iters"] = rec.inner_iters ? nlohmann::json(*rec.inner_iters) : nlohmann::json(nullptr);
    r["u"] = number_or_null(rec.u_display);
    r["du"] = number_or_null(rec.du_display);
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& trial : rec.trials) {
      trials.push_back({{"t", number_or_null(trial.t)},
                        {"h_prime", number_or_null(trial.h_prime)},
                        {"dup", number_or_null(trial.trial_increment)},
                        {"verdict", to_string(trial.verdict)},
                        {"inner_iters", trial.inner_iterations}});
    }
    r["trials"] = std::move(trials);
    trace.push_back(std::move(r));
  }
  doc["trace"] = std::move(trace);

  const auto& out = report.outcome;
  nlohmann::json summary = to_json(report.summary);
  summary["status"] = to_string(out.status);
  summary["iterations"] = out.trace.size();
  summary["final_residual_v"] = number_or_null(out.final_residual_v);
  summary["final_increment_u"] = number_or_null(out.final_increment_u);
  summary["H"] = number_or_null(out.H);
  summary["increment_evaluations"] = out.increment_evaluations;
  summary["message"] = out.message;
  doc["summary"] = std::move(summary);

  if (report.mesh_history) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : *report.mesh_history) {
      nlohmann::json kt = nlohmann::json::array();
      for (double k : e.kappa_trials) {
        kt.push_back(number_or_null(k));
      }
      hist.push_back({{"iteration", e.iteration},
                      {"cells", e.cells},
                      {"dofs", e.dofs},
                      {"kappa_trials", std::move(kt)},
                      {"kappa_accepted", e.kappa_accepted ? number_or_null(*e.kappa_accepted)
                                                          : nlohmann::json(nullptr)},
                      {"residual_v", number_or_null(e.residual_v)}});
    }
    doc["mesh_history"] = std::move(hist);
  }
  os << doc.dump(2) << '\n';
}

void write_pretty(std::ostream& os, const RunReport& report, CsvSchema schema) {
  const auto& trace = report.outcome.trace;
  if (schema == CsvSchema::trials) {
    os << "  k       t         u        du       dup    Hprime\n";
    for (const auto& rec : trace) {
      for (const auto& trial : rec.trials) {
        char line[160];
        std::snprintf(line, sizeof line, "%3d  %6.4f  %8.1e  %8.1e  %8.1e  %8.1e  %s\n", rec.k,
                      trial.t, rec.u_display, rec.du_display, trial.trial_increment, trial.h_prime,
                      to_string(trial.verdict).c_str());
        os << line;
      }
    }
    return;
  }
  os << "  k       t  residual_v  increment_u    Hprime   kappa_k  inner  trials\n";
  for (const auto& rec : trace) {
    const std::string kappa = rec.kappa_k ? pretty("%8.1e", *rec.kappa_k) : "       -";
    char line[160];
    std::snprintf(line, sizeof line, "%3d  %6.4f  %10.1e  %11.1e  %8.1e  %s  %5d  %6d\n", rec.k,
                  rec.t, rec.residual_v, rec.increment_u, rec.h_prime, kappa.c_str(),
                  rec.inner_iters.value_or(0), rec.bisection_trials);
    os << line;
  }
}

std::string summary_line(const RunReport& report) {
  const auto& out = report.outcome;
  std::string line = report.experiment + ": status=" + to_string(out.status) +
                     " iterations=" + std::to_string(out.trace.size()) +
                     " residual_v=" + format_number(out.final_residual_v) +
                     " increment_u=" + format_number(out.final_increment_u);
  for (const auto& [key, value] : report.summary) {
    line += ' ' + key + '=' + format_value(value);
  }
  if (!out.message.empty()) {
    line += " (" + out.message + ')';
  }
  return line;
}

}  // namespace bsc::io
