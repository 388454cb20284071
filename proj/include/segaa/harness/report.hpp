#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "segaa/harness/experiment.hpp"

namespace segaa::harness {

namespace fs = std::filesystem;

/// {run}_{target}_{kind}.{ext}
inline std::string artifact_name(const std::string& run, const std::string& target, const std::string& kind,
                                 const std::string& ext) {
  return run + "_" + target + "_" + kind + "." + ext;
}

inline std::string confusion_csv(const TargetMetrics& m) {
  const auto names = data::class_names(m.target);
  std::ostringstream o;
  o << "true\\predicted";
  for (auto n : names) o << ',' << n;
  o << '\n';
  for (std::size_t t = 0; t < m.confusion.classes; ++t) {
    o << names[t];
    for (std::size_t p = 0; p < m.confusion.classes; ++p) o << ',' << m.confusion.at(t, p);
    o << '\n';
  }
  return o.str();
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Row-normalized heatmap, shaded white to blue, annotated with counts.
inline std::string confusion_svg(const TargetMetrics& m, const std::string& title) {
  const auto names = data::class_names(m.target);
  const std::size_t k = m.confusion.classes;
  const int cell = 56, left = 110, top = 60;
  const int width = left + static_cast<int>(k) * cell + 20, height = top + static_cast<int>(k) * cell + 70;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << detail::xml_escape(title)
    << "</text>\n";
  for (std::size_t t = 0; t < k; ++t) {
    const double row = static_cast<double>(m.confusion.row_sum(t));
    for (std::size_t p = 0; p < k; ++p) {
      const auto n = m.confusion.at(t, p);
      const double frac = row > 0 ? static_cast<double>(n) / row : 0.0;
      const int shade = static_cast<int>(255.0 - 200.0 * frac + 0.5);
      const int x = left + static_cast<int>(p) * cell, y = top + static_cast<int>(t) * cell;
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
        << shade << ',' << shade << ",255)\" stroke=\"#888\"/>\n";
      o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
        << (frac > 0.6 ? "white" : "black") << "\">" << n << "</text>\n";
    }
    o << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(t) * cell + cell / 2 + 4
      << "\" text-anchor=\"end\">" << names[t] << "</text>\n";
  }
  for (std::size_t p = 0; p < k; ++p) {
    o << "<text x=\"" << left + static_cast<int>(p) * cell + cell / 2 << "\" y=\"" << top + static_cast<int>(k) * cell + 16
      << "\" text-anchor=\"middle\">" << names[p] << "</text>\n";
  }
  o << "<text x=\"" << left + static_cast<int>(k) * cell / 2 << "\" y=\"" << height - 14
    << "\" text-anchor=\"middle\">predicted</text>\n";
  o << "<text x=\"14\" y=\"" << top + static_cast<int>(k) * cell / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << top + static_cast<int>(k) * cell / 2 << ")\">true</text>\n";
  o << "</svg>\n";
  return o.str();
}

inline json target_json(const TargetMetrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["support"] = m.confusion.total();
  j["classes"] = json::array();
  for (auto n : data::class_names(m.target)) j["classes"].push_back(std::string(n));
  j["confusion"] = json::array();
  for (std::size_t t = 0; t < m.confusion.classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < m.confusion.classes; ++p) row.push_back(m.confusion.at(t, p));
    j["confusion"].push_back(row);
  }
  return j;
}

/// One object per run. Timings are left out when `with_timings` is false so
/// the document depends only on (store, plan, seed).
inline json report_json(const EvalReport& r, bool with_timings) {
  json j;
  j["run"] = r.run;
  j["kind"] = r.kind;
  j["status"] = r.ok() ? "ok" : "failed";
  if (!r.ok()) j["error"] = r.error;
  j["targets"] = json::object();
  for (const auto& m : r.targets) j["targets"][std::string(data::to_string(m.target))] = target_json(m);
  j["networks"] = json::array();
  for (const auto& n : r.networks) {
    json nj{{"label", n.label}, {"epochs", n.epochs}, {"stopped_early", n.stopped_early}, {"best_epoch", n.best_epoch}};
    if (with_timings) nj["train_seconds"] = n.train_seconds;
    j["networks"].push_back(nj);
  }
  if (!r.stages.empty()) {
    j["cascade_stages"] = json::array();
    for (const auto& s : r.stages) {
      json up = json::array();
      for (Target t : s.upstream) up.push_back(std::string(data::to_string(t)));
      j["cascade_stages"].push_back({{"stage", s.stage},
                                     {"target", std::string(data::to_string(s.target))},
                                     {"upstream", up},
                                     {"oracle_fed_accuracy", s.oracle_fed_accuracy},
                                     {"predicted_fed_accuracy", s.predicted_fed_accuracy}});
    }
  }
  if (with_timings) j["train_seconds"] = r.train_seconds;
  j["config"] = r.config;
  return j;
}

/// Per-epoch history of one network; timings only when requested.
inline json history_json(const History& h, bool with_timings) {
  json j;
  j["targets"] = json::array();
  for (Target t : h.targets) j["targets"].push_back(std::string(data::to_string(t)));
  j["stopped_early"] = h.stopped_early;
  j["best_epoch"] = h.best_epoch;
  if (with_timings) j["train_seconds"] = h.train_seconds;
  j["epochs"] = json::array();
  for (const auto& e : h.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"loss", e.loss},
                           {"head_loss", e.head_loss},
                           {"val_accuracy", e.val_accuracy},
                           {"monitor", e.monitor},
                           {"learning_rate", e.learning_rate}});
  }
  return j;
}

inline json timings_json(const MatrixResult& res) {
  json j;
  j["runs"] = json::array();
  for (const auto& r : res.reports) {
    json nets = json::array();
    for (const auto& n : r.networks) nets.push_back({{"label", n.label}, {"train_seconds", n.train_seconds}});
    j["runs"].push_back({{"run", r.run}, {"train_seconds", r.train_seconds}, {"networks", nets}});
  }
  j["runtime_ratios"] = json::array();
  for (const auto& rr : res.ratios) {
    j["runtime_ratios"].push_back({{"family", std::string(models::to_string(rr.family))},
                                   {"multi_seconds", rr.multi_seconds},
                                   {"individual_seconds", rr.individual_seconds},
                                   {"ratio", rr.ratio()}});
  }
  return j;
}

/// run,target,accuracy,precision,recall,f1
inline std::string comparison_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream o;
  o << "run,target,accuracy,precision,recall,f1\n";
  for (const auto& r : reports) {
    for (const auto& m : r.targets) {
      o << r.run << ',' << data::to_string(m.target) << ',' << detail::fixed(m.accuracy, 4) << ','
        << detail::fixed(m.precision, 4) << ',' << detail::fixed(m.recall, 4) << ',' << detail::fixed(m.f1, 4) << '\n';
    }
  }
  return o.str();
}

/// Fixed-width table for terminal output.
inline std::string comparison_table(const std::vector<EvalReport>& reports) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-40s %-9s %8s %9s %8s %8s\n", "run", "target", "accuracy", "precision", "recall", "f1");
  o << buf;
  for (const auto& r : reports) {
    if (!r.ok()) {
      o << r.run << "  FAILED: " << r.error << '\n';
      continue;
    }
    for (const auto& m : r.targets) {
      std::snprintf(buf, sizeof buf, "%-40s %-9s %8.4f %9.4f %8.4f %8.4f\n", r.run.c_str(),
                    std::string(data::to_string(m.target)).c_str(), m.accuracy, m.precision, m.recall, m.f1);
      o << buf;
    }
  }
  return o.str();
}

namespace detail {

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << s;
  if (!out) throw DataError("error writing " + p.string());
}

}  // namespace detail

struct EmitOptions {
  bool deterministic = true;  // keep timings out of metrics.json
  bool write_timings = true;
};

/// Writes metrics.json, comparison.csv, timings.json and per-target
/// confusion tables and heatmaps. Returns the files written.
inline std::vector<fs::path> emit_report(const MatrixResult& res, const fs::path& dir, EmitOptions opt = {}) {
  if (res.reports.empty()) throw UsageError("no reports to emit");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
  std::vector<fs::path> written;
  auto put = [&](const fs::path& p, const std::string& s) {
    detail::write_text(p, s);
    written.push_back(p);
  };

  json doc;
  doc["runs"] = json::array();
  for (const auto& r : res.reports) doc["runs"].push_back(report_json(r, !opt.deterministic));
  if (!opt.deterministic) doc["runtime_ratios"] = timings_json(res)["runtime_ratios"];
  put(dir / "metrics.json", doc.dump(2) + "\n");
  put(dir / "comparison.csv", comparison_csv(res.reports));
  if (opt.write_timings) put(dir / "timings.json", timings_json(res).dump(2) + "\n");

  for (const auto& r : res.reports) {
    for (const auto& m : r.targets) {
      const std::string t(data::to_string(m.target));
      put(dir / artifact_name(r.run, t, "confusion", "csv"), confusion_csv(m));
      put(dir / artifact_name(r.run, t, "heatmap", "svg"), confusion_svg(m, r.run + " / " + t));
    }
  }
  return written;
}

}  // namespace segaa::harness
