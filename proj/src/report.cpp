#include "spectraprune/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "spectraprune/error.hpp"

namespace spectraprune {

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw ParameterError("unknown report format '" + std::string(name) + "' (expected json or csv)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

std::vector<ReportField> seed_meta(std::uint64_t seed) {
  return {{"seed", static_cast<std::int64_t>(seed)}};
}

nlohmann::ordered_json to_json(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string to_csv(const Cell& c) {
  struct Visitor {
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(const IndexList& v) const {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i > 0 ? " " : "") + std::to_string(v[i]);
      return s;
    }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

Report sweep_report(std::span<const SweepRow> rows, std::uint64_t seed) {
  Report r{std::string(kSweepSchema), seed_meta(seed),
           {"method", "keep_fraction", "q", "c", "rank_k", "seed", "achieved_sparsity",
            "err_two_norm", "err_f_norm", "tilde_f_norm", "threshold_t", "degenerate"},
           {}};
  for (const SweepRow& row : rows) {
    const SparsifyConfig& cfg = row.config;
    r.rows.push_back({std::string(to_string(cfg.method)), cfg.keep_fraction, cfg.q, cfg.c,
                      as_int(cfg.rank_k), static_cast<std::int64_t>(cfg.seed),
                      row.achieved_sparsity, row.err_two_norm, row.err_f_norm, row.tilde_f_norm,
                      row.threshold_t, row.degenerate});
  }
  return r;
}

Report spectrum_report(const SpectrumSummary& s, std::uint64_t seed) {
  Report r{std::string(kSpectrumSchema),
           {{"seed", static_cast<std::int64_t>(seed)},
            {"rows", as_int(s.rows)},
            {"cols", as_int(s.cols)},
            {"two_norm", s.two_norm},
            {"two_norm_converged", s.two_norm_converged},
            {"f_norm", s.f_norm},
            {"nnz", as_int(s.nnz)}},
           {"index", "singular_value"},
           {}};
  for (std::size_t i = 0; i < s.top_singular_values.size(); ++i) {
    r.rows.push_back({as_int(i), s.top_singular_values[i]});
  }
  return r;
}

Report trajectory_report_table(const NormTrajectory& t, std::uint64_t seed) {
  Report r{std::string(kTrajectorySchema), seed_meta(seed), {"label", "two_norm", "f_norm"}, {}};
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    r.rows.push_back({t.labels[i], t.two_norms[i], t.f_norms[i]});
  }
  return r;
}

Report channels_report(std::span<const ChannelSweepRow> rows, std::span<const std::size_t> removed,
                       double f_norm, std::uint64_t seed) {
  IndexList removed_list;
  for (std::size_t i : removed) removed_list.push_back(as_int(i));
  Report r{std::string(kChannelsSchema),
           {{"seed", static_cast<std::int64_t>(seed)},
            {"f_norm", f_norm},
            {"removed", removed_list}},
           {"channel_index", "l1_mass", "l2_mass", "tilde_f_norm", "removed"},
           {}};
  for (const ChannelSweepRow& row : rows) {
    const bool was_removed =
        std::find(removed.begin(), removed.end(), row.channel_index) != removed.end();
    r.rows.push_back(
        {as_int(row.channel_index), row.l1_mass, row.l2_mass, row.tilde_f_norm, was_removed});
  }
  return r;
}

Report spectrum_delta_report(const SpectrumDelta& d, std::uint64_t seed) {
  Report r{std::string(kSpectrumDeltaSchema),
           {{"seed", static_cast<std::int64_t>(seed)},
            {"err_two_norm", d.err_two_norm},
            {"err_f_norm", d.err_f_norm}},
           {"index", "sigma_original", "sigma_modified"},
           {}};
  for (std::size_t i = 0; i < d.original.size(); ++i) {
    r.rows.push_back({as_int(i), d.original[i], d.modified[i]});
  }
  return r;
}

std::string render_report(const Report& r, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    nlohmann::ordered_json doc;
    doc["schema"] = r.schema;
    for (const ReportField& f : r.meta) doc[f.name] = to_json(f.value);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < r.columns.size(); ++c) obj[r.columns[c]] = to_json(row[c]);
      rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
  }

  // Meta fields shadowed by a column of the same name are left to the column.
  std::vector<const ReportField*> meta;
  for (const ReportField& f : r.meta) {
    if (std::find(r.columns.begin(), r.columns.end(), f.name) == r.columns.end()) meta.push_back(&f);
  }
  std::string out;
  auto append_header = [&](const std::string& name) {
    if (!out.empty()) out += ',';
    out += csv_escape(name);
  };
  for (const ReportField* f : meta) append_header(f->name);
  for (const std::string& c : r.columns) append_header(c);
  out += '\n';
  for (const auto& row : r.rows) {
    std::string line;
    for (const ReportField* f : meta) line += to_csv(f->value) + ',';
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += ',';
      line += to_csv(row[c]);
    }
    out += line + '\n';
  }
  return out;
}

void write_report(const std::filesystem::path& path, const Report& r, ReportFormat format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << render_report(r, format);
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace spectraprune
