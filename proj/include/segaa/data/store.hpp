#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "segaa/data/dataset.hpp"

namespace segaa::data {

inline std::string store_header() {
  std::string h = "id,source,speaker_id,augmentation,emotion,gender,age_bin";
  char buf[8];
  for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) {
    std::snprintf(buf, sizeof buf, ",f%02zu", i);
    h += buf;
  }
  return h;
}

/// Formats a real with 9 significant digits, '.' decimal point.
inline std::string format_feature(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_store(std::ostream& out, const std::vector<LabeledExample>& rows) {
  out << store_header() << '\n';
  for (const auto& e : rows) {
    out << e.id() << ',' << to_string(e.source) << ',' << e.speaker_id << ',' << dsp::to_string(e.augmentation)
        << ',' << kEmotions[e.labels.emotion] << ',' << kGenders[e.labels.gender] << ','
        << kAgeBins[e.labels.age_bin];
    for (double v : e.features) out << ',' << format_feature(v);
    out << '\n';
  }
}

inline void write_store(const std::filesystem::path& path, const std::vector<LabeledExample>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature store " + path.string());
  write_store(out, rows);
  if (!out) throw DataError("error writing feature store " + path.string());
}

inline std::vector<LabeledExample> read_store(std::istream& in, const std::string& name = "<store>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(name + ": empty feature store");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != store_header()) throw DataError(name + ": unexpected feature store header");
  std::vector<LabeledExample> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = name + ":" + std::to_string(line_no);
    const auto cells = detail::split(line, ',');
    if (cells.size() != 7 + dsp::kFeatureDim) throw DataError(where + ": expected 49 columns");
    LabeledExample e;
    const auto hash = cells[0].rfind('#');
    if (hash == std::string::npos) throw DataError(where + ": id lacks '#<augmentation>' suffix");
    e.clip = cells[0].substr(0, hash);
    try {
      e.source = parse_source(cells[1]);
      e.augmentation = dsp::parse_augmentation(cells[3]);
      e.labels = {class_index(Target::Emotion, cells[4]), class_index(Target::Gender, cells[5]),
                  class_index(Target::Age, cells[6])};
    } catch (const Error& err) {
      throw DataError(where + ": " + err.what());
    }
    if (cells[0].substr(hash + 1) != cells[3]) throw DataError(where + ": id and augmentation disagree");
    e.speaker_id = cells[2];
    if (e.speaker_id.empty()) throw DataError(where + ": empty speaker_id");
    for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) {
      const std::string& c = cells[7 + i];
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} || res.ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw DataError(where + ": bad feature value '" + c + "'");
      }
      e.features[i] = static_cast<double>(static_cast<float>(v));  // 9 digits identify the float exactly
    }
    rows.push_back(std::move(e));
  }
  return rows;
}

inline std::vector<LabeledExample> read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature store " + path.string());
  return read_store(in, path.string());
}

}  // namespace segaa::data
