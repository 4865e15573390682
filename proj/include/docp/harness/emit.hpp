#pragma once

// CSV / JSON writers. Column order is part of the output contract:
//   runs:    run_id,optimizer,lr,mu,seed,step,train_loss,val_loss,grad_norm_sq,step_norm,rho,safeguard_count
//   summary: optimizer,lr,final_train,final_val,min_val,min_val_step,diverged
//   heatmap: optimizer,lr,val_loss_at_T

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "docp/error.hpp"
#include "docp/harness/run.hpp"
#include "docp/harness/sweep.hpp"

namespace docp::harness {

enum class Format { Csv, Json };

inline constexpr std::string_view kRunsHeader =
    "run_id,optimizer,lr,mu,seed,step,train_loss,val_loss,grad_norm_sq,step_norm,rho,safeguard_count";
inline constexpr std::string_view kSummaryHeader = "optimizer,lr,final_train,final_val,min_val,min_val_step,diverged";
inline constexpr std::string_view kHeatmapHeader = "optimizer,lr,val_loss_at_T";

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF; quotes doubled.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view s) {
    sep();
    out_ << csv_field(s);
    return *this;
  }
  CsvWriter& field(double v) { return field(format_number(v)); }
  CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }

  void end_row() {
    out_ << "\r\n";
    first_ = true;
  }
  void header(std::string_view line) {
    out_ << line << "\r\n";
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

inline void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  CsvWriter w(out);
  w.header(kRunsHeader);
  for (const auto& r : records) {
    for (const auto& row : r.rows) {
      w.field(std::string_view(r.run_id)).field(std::string_view(r.optimizer)).field(r.lr).field(r.mu);
      w.field(std::to_string(r.seed)).field(row.step).field(row.train_loss).field(row.val_loss).field(row.grad_norm_sq);
      w.field(row.step_norm).field(row.rho).field(row.safeguard_count);
      w.end_row();
    }
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  CsvWriter w(out);
  w.header(kSummaryHeader);
  for (const auto& r : records) {
    w.field(std::string_view(r.optimizer)).field(r.lr).field(r.final_train).field(r.final_val).field(r.min_val);
    w.field(r.min_val_step).field(r.diverged);
    w.end_row();
  }
}

struct HeatmapCell {
  std::string optimizer;
  double lr = 0.0;
  double val_loss_at_T = 0.0;
};

/// Replicate-mean validation loss at step T for every (optimizer, lr) run in
/// the sweeps; NaN when any replicate diverged before T.
inline std::vector<HeatmapCell> heatmap(const std::vector<SweepTable>& sweeps, std::size_t T) {
  std::vector<HeatmapCell> cells;
  for (const auto& table : sweeps) {
    std::vector<const SweepRow*> rows;
    for (const auto& r : table.rows) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const SweepRow* a, const SweepRow* b) { return a->lr > b->lr; });
    for (const auto* row : rows) {
      double sum = 0.0;
      bool ok = !row->records.empty();
      for (const auto& rec : row->records) {
        if (rec.val_curve.size() <= T) {
          ok = false;
          break;
        }
        sum += rec.val_curve[T];
      }
      cells.push_back({table.optimizer, row->lr,
                       ok ? sum / static_cast<double>(row->records.size()) : std::numeric_limits<double>::quiet_NaN()});
    }
  }
  return cells;
}

inline void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells) {
  CsvWriter w(out);
  w.header(kHeatmapHeader);
  for (const auto& c : cells) {
    w.field(std::string_view(c.optimizer)).field(c.lr).field(c.val_loss_at_T);
    w.end_row();
  }
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepTable>& sweeps) {
  CsvWriter w(out);
  w.header("optimizer,stage,lr,final_val,min_val,min_val_step,n_diverged,selected");
  for (const auto& t : sweeps) {
    for (const auto& r : t.rows) {
      w.field(std::string_view(t.optimizer)).field(static_cast<std::size_t>(r.stage)).field(r.lr);
      w.field(r.final_val).field(r.min_val).field(r.min_val_step).field(r.n_diverged).field(r.lr == t.selected_lr);
      w.end_row();
    }
  }
}

namespace detail {

/// JSON has no NaN/Inf; they become null.
inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"step", row.step},
                    {"train_loss", detail::number(row.train_loss)},
                    {"val_loss", detail::number(row.val_loss)},
                    {"grad_norm_sq", detail::number(row.grad_norm_sq)},
                    {"step_norm", detail::number(row.step_norm)},
                    {"rho", detail::number(row.rho)},
                    {"safeguard_count", row.safeguard_count}});
  }
  return {{"run_id", r.run_id},
          {"optimizer", r.optimizer},
          {"lr", r.lr},
          {"mu", r.mu},
          {"seed", r.seed},
          {"rows", rows},
          {"summary",
           {{"final_train", detail::number(r.final_train)},
            {"final_val", detail::number(r.final_val)},
            {"min_val", detail::number(r.min_val)},
            {"min_val_step", r.min_val_step},
            {"diverged", r.diverged},
            {"wall_ms", r.wall_ms}}}};
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  docp::detail::require(!ec && std::filesystem::is_directory(dir), "cannot create output directory '" + dir.string() + "'");
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  docp::detail::require(out.good(), "cannot write '" + path.string() + "'");
  out << content;
  out.close();
  docp::detail::require(!out.fail(), "write failed for '" + path.string() + "'");
}

/// Writes runs + summary for `records` into `dir`: runs.csv and summary.csv,
/// or runs.json carrying both.
inline void emit_results(const std::vector<RunRecord>& records, Format format, const std::filesystem::path& dir,
                         const std::string& stem = "") {
  docp::detail::require(!records.empty(), "emit_results: no records");
  ensure_dir(dir);
  const std::string prefix = stem.empty() ? "" : stem + "_";
  if (format == Format::Csv) {
    std::ostringstream runs, summary;
    write_runs_csv(runs, records);
    write_summary_csv(summary, records);
    write_file(dir / (prefix + "runs.csv"), runs.str());
    write_file(dir / (prefix + "summary.csv"), summary.str());
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : records) j.push_back(to_json(r));
    write_file(dir / (prefix + "runs.json"), j.dump(2) + "\n");
  }
}

}  // namespace docp::harness
