// Copyright 2026 The cfx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfx/errors.hpp"
#include "cfx/model.hpp"
#include "cfx/text.hpp"

namespace cfx {

struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> feature_columns;  // empty: every non-label column, in file order
};

/// Parses comma-separated text with a header row. Labels are matched
/// against `class_labels` by text.
inline Dataset parse_dataset_csv(const std::string& content, const CsvSchema& schema,
                                 const std::vector<std::string>& class_labels) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty()) {
    throw ParseError("CSV has no header row");
  }
  std::vector<std::string> header;
  for (auto& h : text::split(line, ',')) header.emplace_back(text::trim(h));

  auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw SchemaError("CSV is missing column \"" + name + "\"");
  };
  const std::size_t label_col = column_of(schema.label_column);
  std::vector<std::string> names = schema.feature_columns;
  if (names.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != label_col) names.push_back(header[i]);
    }
  }
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(column_of(n));

  std::vector<Vector> rows;
  std::vector<std::size_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::size_t row_no = rows.size() + 1;
    auto cells = text::split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_no) + " (line " + std::to_string(line_no) +
                       ") has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    std::vector<double> values;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      double v = 0.0;
      if (!text::parse_double(cells[cols[k]], v)) {
        throw ParseError("row " + std::to_string(row_no) + ", column \"" + names[k] +
                         "\": cannot parse '" + std::string(text::trim(cells[cols[k]])) +
                         "' as a number");
      }
      values.push_back(v);
    }
    const std::string label(text::trim(cells[label_col]));
    std::optional<std::size_t> cls;
    for (std::size_t c = 0; c < class_labels.size(); ++c) {
      if (class_labels[c] == label) cls = c;
    }
    if (!cls) {
      throw SchemaError("row " + std::to_string(row_no) + ": unknown label \"" + label +
                        "\"; allowed labels: " + text::join(class_labels, ", "));
    }
    rows.emplace_back(std::move(values));
    labels.push_back(*cls);
  }
  return Dataset(std::move(rows), std::move(labels), std::move(names));
}

inline Dataset load_dataset_csv(const std::string& path, const CsvSchema& schema,
                                const std::vector<std::string>& class_labels) {
  return parse_dataset_csv(read_file(path), schema, class_labels);
}

inline std::string dataset_to_csv(const Dataset& data, const std::vector<std::string>& class_labels,
                                  const std::string& label_column = "label") {
  std::ostringstream os;
  std::vector<std::string> names = data.feature_names();
  if (names.empty()) {
    for (std::size_t j = 0; j < data.width(); ++j) names.push_back("x" + std::to_string(j));
  }
  os << text::join(names, ",") << ',' << label_column << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) os << text::exact(v) << ',';
    os << class_labels.at(data.labels()[i]) << '\n';
  }
  return os.str();
}

}  // namespace cfx
