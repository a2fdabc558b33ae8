// Apache License, Version 2.0, refer to LICENSE.txt
//
// CSV outputs exchanged between pipeline stages. Every file starts with a
// header row.
//   solution / ground truth : image_id,label
//   trace                   : iteration,energy,K,accepted,best_energy
//   selected words          : category,rank,block,word_id,word_kind,lambda,gain
//   metrics                 : metric,value

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scenecat/category_model.hpp"
#include "scenecat/codebook.hpp"
#include "scenecat/error.hpp"
#include "scenecat/sampler.hpp"

namespace scenecat::csv {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  return os;
}

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

inline void write_labels(const std::filesystem::path& path, const std::vector<std::string>& ids,
                         std::span<const int> labels) {
  auto os = detail::open_out(path);
  os << "image_id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) os << ids[i] << ',' << labels[i] << '\n';
}

// Reads image_id,label rows (header optional).
inline std::vector<std::pair<std::string, int>> read_labels(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open label file: " + path.string());
  std::vector<std::pair<std::string, int>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw InputError(path.string() + ":" + std::to_string(line_no) + ": missing comma");
    std::string id = line.substr(0, comma);
    std::string val = line.substr(comma + 1);
    while (!val.empty() && val.front() == ' ') val.erase(val.begin());
    if (line_no == 1 && id == "image_id") continue;
    try {
      std::size_t used = 0;
      const int label = std::stoi(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      rows.emplace_back(std::move(id), label);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad label '" + val + "'");
    }
  }
  return rows;
}

inline void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  auto os = detail::open_out(path);
  os << "iteration,energy,K,accepted,best_energy\n";
  for (const auto& r : trace)
    os << r.iteration << ',' << detail::fmt("%.6f", r.energy) << ',' << r.k << ',' << (r.accepted ? 1 : 0) << ','
       << detail::fmt("%.6f", r.best_energy) << '\n';
}

inline void write_selected_words(const std::filesystem::path& path, const std::vector<CategoryModel>& models,
                                 std::size_t n_itw, std::size_t words) {
  auto os = detail::open_out(path);
  os << "category,rank,block,word_id,word_kind,lambda,gain\n";
  for (std::size_t k = 0; k < models.size(); ++k) {
    int rank = 1;
    for (const auto& f : models[k].selected) {
      const FeatureRef ref = FeatureRef::of(f.feature, words);
      os << k << ',' << rank++ << ',' << ref.block << ',' << ref.word << ','
         << (static_cast<std::size_t>(ref.word) < n_itw ? "ITW" : "HTW") << ',' << detail::fmt("%.9g", f.lambda) << ','
         << detail::fmt("%.9g", f.gain) << '\n';
    }
  }
}

inline void write_metrics(const std::filesystem::path& path, const std::vector<std::pair<std::string, double>>& rows) {
  auto os = detail::open_out(path);
  os << "metric,value\n";
  for (const auto& [k, v] : rows) os << k << ',' << detail::fmt("%.10g", v) << '\n';
}

inline std::vector<std::pair<std::string, double>> read_metrics(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open metrics file: " + path.string());
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    rows.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace scenecat::csv
