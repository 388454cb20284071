#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "segaa/data/labels.hpp"

namespace segaa::data {

enum class Source { CremaD, EmoDb, Synthetic };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::CremaD: return "crema_d";
    case Source::EmoDb: return "emo_db";
    case Source::Synthetic: return "synthetic";
  }
  return "?";
}

inline Source parse_source(std::string_view s) {
  if (s == "crema_d") return Source::CremaD;
  if (s == "emo_db") return Source::EmoDb;
  if (s == "synthetic") return Source::Synthetic;
  throw DataError("unknown source '" + std::string(s) + "'");
}

/// Age and sex of one speaker as given by corpus metadata.
struct Speaker {
  int age = 0;
  std::string sex;
};

using SpeakerTable = std::map<std::string, Speaker>;

struct ParsedClip {
  std::string speaker_id;
  Labels labels;
  bool operator==(const ParsedClip&) const = default;
};

/// Decade bin: 20-29 -> twenties ... 70-79 -> seventies.
inline int bin_age(int age) {
  if (age < 20 || age > 79) throw DataError("age " + std::to_string(age) + " outside supported range [20, 79]");
  return age / 10 - 2;
}

inline int parse_sex(const std::string& sex) {
  std::string s;
  for (char c : sex) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "female" || s == "f") return 0;
  if (s == "male" || s == "m") return 1;
  throw DataError("unrecognised sex '" + sex + "'");
}

namespace detail {

inline std::string stem(const std::string& filename) {
  return std::filesystem::path(filename).stem().string();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace detail

/// ActorID_SentenceCode_EmotionCode_Level.wav
inline ParsedClip parse_crema(const std::string& filename, const SpeakerTable& demographics) {
  const auto parts = detail::split(detail::stem(filename), '_');
  if (parts.size() != 4 || parts[0].empty()) {
    throw DataError("malformed CREMA-D filename '" + filename + "'");
  }
  static const std::map<std::string, int> codes{{"ANG", 0}, {"DIS", 1}, {"FEA", 2},
                                                {"HAP", 3}, {"NEU", 4}, {"SAD", 5}};
  const auto code = codes.find(parts[2]);
  if (code == codes.end()) {
    throw DataError("unknown CREMA-D emotion code '" + parts[2] + "' in '" + filename + "'");
  }
  const auto actor = demographics.find(parts[0]);
  if (actor == demographics.end()) {
    throw DataError("CREMA-D actor " + parts[0] + " missing from demographics table");
  }
  return {parts[0], {code->second, parse_sex(actor->second.sex), bin_age(actor->second.age)}};
}

/// SStttEv.wav: speaker, text code, emotion letter, version. Boredom yields nullopt.
inline std::optional<ParsedClip> parse_emodb(const std::string& filename, const SpeakerTable& speakers) {
  const std::string s = detail::stem(filename);
  if (s.size() != 7 || !std::isdigit(static_cast<unsigned char>(s[0])) ||
      !std::isdigit(static_cast<unsigned char>(s[1]))) {
    throw DataError("malformed EMO-DB filename '" + filename + "'");
  }
  int emotion = -1;
  switch (s[5]) {
    case 'W': emotion = 0; break;  // Wut / Aerger
    case 'E': emotion = 1; break;  // Ekel
    case 'A': emotion = 2; break;  // Angst
    case 'F': emotion = 3; break;  // Freude
    case 'N': emotion = 4; break;
    case 'T': emotion = 5; break;  // Trauer
    case 'L': return std::nullopt;  // Langeweile (boredom) is excluded
    default: throw DataError("malformed EMO-DB filename '" + filename + "': unknown emotion letter");
  }
  const std::string id = s.substr(0, 2);
  const auto spk = speakers.find(id);
  if (spk == speakers.end()) throw DataError("unknown EMO-DB speaker " + id + " in '" + filename + "'");
  return ParsedClip{id, {emotion, parse_sex(spk->second.sex), bin_age(spk->second.age)}};
}

/// Speaker metadata from the EMO-DB documentation.
inline const SpeakerTable& emodb_speakers() {
  static const SpeakerTable table{
      {"03", {31, "male"}},   {"08", {34, "female"}}, {"09", {21, "female"}}, {"10", {32, "male"}},
      {"11", {26, "male"}},   {"12", {30, "male"}},   {"13", {32, "female"}}, {"14", {35, "female"}},
      {"15", {25, "male"}},   {"16", {31, "female"}},
  };
  return table;
}

/// Reads a CREMA-D VideoDemographics-style CSV. Columns located by header
/// name (ActorID, Age, Sex); other columns pass through unused.
inline SpeakerTable load_demographics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open demographics table " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty demographics table " + path.string());
  auto header = detail::split(line, ',');
  for (auto& h : header) {
    h = detail::trim(h);
    if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
  }
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(path.string() + ": demographics table lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = col("ActorID"), age_col = col("Age"), sex_col = col("Sex");
  SpeakerTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() <= std::max({id_col, age_col, sex_col})) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    }
    Speaker s;
    try {
      s.age = std::stoi(detail::trim(cells[age_col]));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad age");
    }
    s.sex = detail::trim(cells[sex_col]);
    table[detail::trim(cells[id_col])] = s;
  }
  return table;
}

}  // namespace segaa::data
