#include "edgeprov/bench/sweep.hpp"

#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "edgeprov/error.hpp"

namespace edgeprov::bench {

std::vector<std::string> preset_names() { return {"table1", "table8", "table9"}; }

std::vector<WorkloadConfig> preset_grid(const std::string& name, const WorkloadConfig& base) {
  std::vector<WorkloadConfig> cells;
  if (name == "table1") {
    for (std::size_t a : {10, 100}) {
      for (double d : {0.5, 1.0, 3.5, 5.0}) {
        auto c = base;
        c.attrs = a;
        c.task_duration_s = d;
        cells.push_back(c);
      }
    }
  } else if (name == "table8") {
    for (std::size_t g : {0, 10, 20, 50}) {
      for (const char* bw : {"1gbit", "25kbit"}) {
        for (double d : {0.5, 1.0}) {
          auto c = base;
          c.attrs = 100;
          c.group_size = g;
          c.bandwidth = bw;
          c.task_duration_s = d;
          cells.push_back(c);
        }
      }
    }
  } else if (name == "table9") {
    for (std::size_t n : {8, 16, 32, 64}) {
      auto c = base;
      c.clients = n;
      c.task_duration_s = 0.5;
      c.attrs = 100;
      cells.push_back(c);
    }
  } else {
    throw Error(Errc::InvalidArgument, "unknown preset '" + name + "' (table1, table8, table9)");
  }
  return cells;
}

std::vector<CellResult> sweep(const std::vector<WorkloadConfig>& cells, std::size_t repeats,
                              const HarnessOptions& options, const std::function<void(const CellResult&)>& on_cell) {
  std::vector<CellResult> out;
  for (const auto& cfg : cells) {
    out.push_back(run_cell(cfg, repeats, options));
    if (on_cell) on_cell(out.back());
  }
  return out;
}

std::string csv_header() {
  return "mode,A,d,G,bandwidth,N,repeat,t_base_ms,t_capture_ms,overhead_pct,envelopes,records,bytes_on_wire,"
         "retransmissions,ci95_pct";
}

namespace {

std::string num(double v, const char* fmt = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string csv_row(const CellResult& cell) {
  const auto& c = cell.cfg;
  std::ostringstream row;
  row << cell.mode << ',' << c.attrs << ',' << num(c.task_duration_s, "%g") << ',' << c.group_size << ','
      << c.bandwidth << ',' << c.clients << ',' << cell.repeats << ',';
  if (cell.error) {
    row << ",,,,,,,";
    return row.str();
  }
  const auto& m = cell.mean;
  row << num(m.t_base_ms) << ',' << num(m.t_capture_ms) << ',' << num(m.overhead_pct, "%.4f") << ',' << m.envelopes
      << ',' << m.records << ',' << m.bytes_on_wire << ',' << m.retransmissions << ',' << num(cell.ci95_pct, "%.4f");
  return row.str();
}

void write_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << csv_header() << '\n';
  for (const auto& c : cells) out << csv_row(c) << '\n';
}

std::string summary_grid(const std::vector<CellResult>& cells) {
  using RowKey = std::pair<std::size_t, std::size_t>;  // G, N
  using ColKey = std::tuple<std::string, double, std::size_t>;
  std::set<RowKey> rows;
  std::set<ColKey> cols;
  std::map<std::pair<RowKey, ColKey>, std::string> text;
  for (const auto& cell : cells) {
    RowKey r{cell.cfg.group_size, cell.cfg.clients};
    ColKey k{cell.cfg.bandwidth, cell.cfg.task_duration_s, cell.cfg.attrs};
    rows.insert(r);
    cols.insert(k);
    text[{r, k}] = cell.error ? "failed"
                              : num(cell.mean.overhead_pct, "%.2f") + "% +/- " + num(cell.ci95_pct, "%.2f");
  }

  std::vector<std::string> headers;
  for (const auto& [bw, d, a] : cols) headers.push_back(bw + " d=" + num(d, "%g") + "s A=" + std::to_string(a));
  std::size_t width = 18;
  for (const auto& h : headers) width = std::max(width, h.size() + 2);

  std::ostringstream out;
  char label[32];
  std::snprintf(label, sizeof label, "%-10s", "G / N");
  out << label;
  for (const auto& h : headers) out << std::string(width - h.size(), ' ') << h;
  out << '\n';
  for (const auto& r : rows) {
    std::snprintf(label, sizeof label, "%-10s", (std::to_string(r.first) + " / " + std::to_string(r.second)).c_str());
    out << label;
    for (const auto& k : cols) {
      auto it = text.find({r, k});
      const std::string cell = it == text.end() ? "-" : it->second;
      out << std::string(width > cell.size() ? width - cell.size() : 1, ' ') << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace edgeprov::bench
