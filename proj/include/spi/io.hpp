#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spi/calibration.hpp"
#include "spi/combinatorics.hpp"
#include "spi/errors.hpp"
#include "spi/score_vector.hpp"
#include "spi/subset_selection.hpp"

namespace spi {

// Full-precision round-trippable formatting; infinities print as inf/-inf.
inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline double parse_double(const std::string& text, const std::string& path, long line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(line_no) + ": cannot parse '" + text +
                  "' as a number");
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace detail

// CSV with header `score`, one value per row.
inline ScoreVector read_score_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "score") {
    throw IoError(path + ": expected header 'score'");
  }
  std::vector<double> values;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    values.push_back(detail::parse_double(line, path, line_no));
  }
  return ScoreVector(std::move(values));
}

// CSV with header `label,score`.
inline LabeledScoreSet read_labeled_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "label,score") {
    throw IoError(path + ": expected header 'label,score'");
  }
  LabeledScoreSet out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    out.entries.emplace_back(fields[0], detail::parse_double(fields[1], path, line_no));
  }
  return out;
}

// CSV with header `group,score`; groups keep their order of first appearance.
inline GroupedScores read_grouped_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "group,score") {
    throw IoError(path + ": expected header 'group,score'");
  }
  std::vector<std::pair<std::string, std::vector<double>>> raw;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    const double value = detail::parse_double(fields[1], path, line_no);
    auto it = std::find_if(raw.begin(), raw.end(),
                           [&](const auto& g) { return g.first == fields[0]; });
    if (it == raw.end()) {
      raw.push_back({fields[0], {value}});
    } else {
      it->second.push_back(value);
    }
  }
  GroupedScores grouped;
  for (auto& [id, values] : raw) {
    grouped.groups.push_back({id, ScoreVector(std::move(values))});
  }
  grouped.validate();
  return grouped;
}

inline nlohmann::json to_json(const PredictionThreshold& t) {
  if (t.trivial()) return {{"cutoff", "+inf"}};
  if (t.empty_set()) return {{"cutoff", "-inf"}};
  return {{"cutoff", t.cutoff}};
}

inline nlohmann::json to_json(const CoverageBounds& b) {
  return {{"lower", b.lower}, {"upper", b.upper}, {"m", b.m},
          {"N", b.N},         {"alpha", b.alpha}, {"beta", b.beta}};
}

inline nlohmann::json to_json(const WindowTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [lo, hi] : t.rows) rows.push_back({lo, hi});
  return {{"m", t.m}, {"N", t.N}, {"beta", t.beta}, {"rows", rows}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spi
