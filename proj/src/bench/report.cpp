#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ewlab/bench.hpp"

namespace ewlab::bench {

namespace {

struct CellStats {
  std::string defense;
  std::string attack;
  int n_seeds = 0;
  int n_ok = 0;
  int n_copy = 0;
  std::vector<double> p_values;
  std::vector<double> delta_cos;
  std::vector<double> delta_l2;
  std::vector<double> utility_provided;
  std::vector<double> utility_served;
  std::vector<double> triggered;
  std::map<std::string, int> errors;
};

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::vector<CellStats> collect(const std::vector<RunRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "no records to report");
  std::map<std::pair<std::string, std::string>, CellStats> cells;
  for (const RunRecord& r : records) {
    CellStats& cell = cells[{r.defense, r.attack}];
    cell.defense = r.defense;
    cell.attack = r.attack;
    ++cell.n_seeds;
    if (!r.ok) {
      ++cell.errors[r.error];
      continue;
    }
    ++cell.n_ok;
    if (r.report.copy) ++cell.n_copy;
    cell.p_values.push_back(r.report.p_value);
    cell.delta_cos.push_back(r.report.delta_cos);
    cell.delta_l2.push_back(r.report.delta_l2);
    cell.utility_provided.push_back(r.utility_provided);
    cell.utility_served.push_back(r.utility_served);
    cell.triggered.push_back(r.triggered_fraction);
  }
  std::vector<CellStats> out;
  out.reserve(cells.size());
  for (auto& [key, cell] : cells) out.push_back(std::move(cell));
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

}  // namespace

std::string render_table(const std::vector<RunRecord>& records) {
  const std::vector<CellStats> cells = collect(records);
  std::ostringstream out;
  // Detection columns follow the usual table layout:
  // p-value, delta-cos, delta-l2, COPY?. Deltas are percentages.
  char header[256];
  std::snprintf(header, sizeof(header),
                "%-14s %-24s %-20s %-20s %-22s %-10s %-9s %-9s %s\n",
                "defense", "attack", "p-value", "dcos(%)", "dl2(%)", "COPY?",
                "util(p)", "util(s)", "runs");
  out << header;
  for (const CellStats& cell : cells) {
    std::string p_str = "-";
    std::string dcos_str = "-";
    std::string dl2_str = "-";
    std::string copy_str = "-";
    if (cell.n_ok > 0) {
      p_str = scientific(mean_of(cell.p_values)) + "+-" +
              scientific(std_of(cell.p_values));
      dcos_str = fixed(100.0 * mean_of(cell.delta_cos), 2) + "+-" +
                 fixed(100.0 * std_of(cell.delta_cos), 2);
      dl2_str = fixed(100.0 * mean_of(cell.delta_l2), 2) + "+-" +
                fixed(100.0 * std_of(cell.delta_l2), 2);
      const bool majority = 2 * cell.n_copy > cell.n_ok;
      copy_str = std::string(majority ? "yes" : "no") + " (" +
                 std::to_string(cell.n_copy) + "/" +
                 std::to_string(cell.n_ok) + ")";
    }
    std::string runs = std::to_string(cell.n_ok) + "/" +
                       std::to_string(cell.n_seeds);
    for (const auto& [code, count] : cell.errors) {
      runs += " " + code + "x" + std::to_string(count);
    }
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%-14s %-24s %-20s %-20s %-22s %-10s %-9s %-9s %s\n",
                  cell.defense.c_str(), cell.attack.c_str(), p_str.c_str(),
                  dcos_str.c_str(), dl2_str.c_str(), copy_str.c_str(),
                  cell.n_ok ? fixed(mean_of(cell.utility_provided), 3).c_str()
                            : "-",
                  cell.n_ok ? fixed(mean_of(cell.utility_served), 3).c_str()
                            : "-",
                  runs.c_str());
    out << line;
  }
  return out.str();
}

std::string render_csv(const std::vector<RunRecord>& records) {
  const std::vector<CellStats> cells = collect(records);
  std::ostringstream out;
  out << "defense,attack,n_seeds,n_ok,n_copy,copy_majority,p_mean,p_std,"
         "delta_cos_mean,delta_cos_std,delta_l2_mean,delta_l2_std,"
         "utility_provided_mean,utility_served_mean,triggered_mean,errors\n";
  for (const CellStats& cell : cells) {
    out << cell.defense << ',' << cell.attack << ',' << cell.n_seeds << ','
        << cell.n_ok << ',' << cell.n_copy << ','
        << (2 * cell.n_copy > cell.n_ok ? "yes" : "no") << ','
        << io::format_double(mean_of(cell.p_values)) << ','
        << io::format_double(std_of(cell.p_values)) << ','
        << io::format_double(mean_of(cell.delta_cos)) << ','
        << io::format_double(std_of(cell.delta_cos)) << ','
        << io::format_double(mean_of(cell.delta_l2)) << ','
        << io::format_double(std_of(cell.delta_l2)) << ','
        << io::format_double(mean_of(cell.utility_provided)) << ','
        << io::format_double(mean_of(cell.utility_served)) << ','
        << io::format_double(mean_of(cell.triggered)) << ',';
    bool first = true;
    for (const auto& [code, count] : cell.errors) {
      if (!first) out << ';';
      out << code << 'x' << count;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json render_json(const std::vector<RunRecord>& records) {
  const std::vector<CellStats> cells = collect(records);
  nlohmann::json j;
  j["cells"] = nlohmann::json::array();
  for (const CellStats& cell : cells) {
    nlohmann::json c;
    c["defense"] = cell.defense;
    c["attack"] = cell.attack;
    c["n_seeds"] = cell.n_seeds;
    c["n_ok"] = cell.n_ok;
    c["n_copy"] = cell.n_copy;
    c["copy_majority"] = 2 * cell.n_copy > cell.n_ok;
    c["p_mean"] = mean_of(cell.p_values);
    c["p_std"] = std_of(cell.p_values);
    c["delta_cos_mean"] = mean_of(cell.delta_cos);
    c["delta_cos_std"] = std_of(cell.delta_cos);
    c["delta_l2_mean"] = mean_of(cell.delta_l2);
    c["delta_l2_std"] = std_of(cell.delta_l2);
    c["utility_provided_mean"] = mean_of(cell.utility_provided);
    c["utility_served_mean"] = mean_of(cell.utility_served);
    c["triggered_mean"] = mean_of(cell.triggered);
    c["errors"] = cell.errors;
    j["cells"].push_back(c);
  }
  j["records"] = nlohmann::json::array();
  for (const RunRecord& r : records) {
    nlohmann::json e;
    e["seed_index"] = r.seed_index;
    e["defense"] = r.defense;
    e["attack"] = r.attack;
    e["ok"] = r.ok;
    if (!r.ok) {
      e["error"] = r.error;
    } else {
      e["p_value"] = r.report.p_value;
      e["delta_cos"] = r.report.delta_cos;
      e["delta_l2"] = r.report.delta_l2;
      e["copy"] = r.report.copy;
      e["utility_provided"] = r.utility_provided;
      e["utility_served"] = r.utility_served;
      e["triggered_fraction"] = r.triggered_fraction;
      e["regions"] = nlohmann::json::array();
      for (const auto& v : r.report.verdicts) {
        e["regions"].push_back({{"region", v.region},
                                {"n_backdoor", v.n_backdoor},
                                {"n_benign", v.n_benign},
                                {"delta_cos", v.delta_cos},
                                {"delta_l2", v.delta_l2},
                                {"p_value", v.p_value},
                                {"skipped", v.skipped}});
      }
    }
    j["records"].push_back(e);
  }
  return j;
}

std::vector<std::string> emit_report(const std::vector<RunRecord>& records,
                                     const std::vector<std::string>& formats,
                                     const std::string& out_dir) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "no records to report");
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const std::string& format : formats) {
    std::string path;
    std::string payload;
    if (format == "table") {
      path = out_dir + "/report.txt";
      payload = render_table(records);
    } else if (format == "csv") {
      path = out_dir + "/report.csv";
      payload = render_csv(records);
    } else if (format == "json") {
      path = out_dir + "/report.json";
      payload = render_json(records).dump(2) + "\n";
    } else {
      fail(ErrorCode::ConfigInvalid, "unknown report format: " + format);
    }
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << payload;
    written.push_back(path);
  }
  return written;
}

std::string render_sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "param,value,seed,delta_cos,p_value\n";
  for (const SweepPoint& p : points) {
    out << p.param << ',' << io::format_double(p.value) << ',' << p.seed_index
        << ',' << io::format_double(p.delta_cos) << ','
        << io::format_double(p.p_value) << '\n';
  }
  return out.str();
}

}  // namespace ewlab::bench
