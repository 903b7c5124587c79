#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "listpl/types.hpp"

namespace listpl {

/// One parsed LETOR line, still sparse. Feature indices are 1-based as on
/// disk and unique within the record.
struct DocumentRecord {
  int label = 0;
  std::string query_id;
  std::vector<std::pair<Index, double>> features;  // (1-based index, value), file order
  std::string comment;
};

/// All documents judged for one query, densified. Row order is file order.
template <typename Scalar = double>
struct QueryGroup {
  std::string query_id;
  MatrixX<Scalar> features;  // documents x feature_count
  LabelVector labels;

  Index num_documents() const { return features.rows(); }
};

template <typename Scalar = double>
struct Dataset {
  std::vector<QueryGroup<Scalar>> groups;  // first-appearance order
  Index feature_count = 0;
  int max_grade = 4;

  Index num_queries() const { return static_cast<Index>(groups.size()); }
  Index num_documents() const {
    Index n = 0;
    for (const auto& g : groups) n += g.num_documents();
    return n;
  }
};

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t line_number, const std::string& what) {
  throw DataError("line " + std::to_string(line_number) + ": " + what);
}

inline std::string_view next_token(std::string_view& rest) {
  std::size_t start = 0;
  while (start < rest.size() && (rest[start] == ' ' || rest[start] == '\t')) ++start;
  std::size_t end = start;
  while (end < rest.size() && rest[end] != ' ' && rest[end] != '\t') ++end;
  std::string_view token = rest.substr(start, end - start);
  rest.remove_prefix(end);
  return token;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline void append_number(std::string& out, double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

inline void append_number(std::string& out, float value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace detail

/// Parses `<label> qid:<token> <idx>:<val> ... [#<comment>]`.
inline DocumentRecord parse_letor_line(std::string_view line, Index feature_count, int max_grade,
                                       std::size_t line_number) {
  DocumentRecord record;

  if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
    record.comment = std::string(line.substr(hash + 1));
    line = line.substr(0, hash);
  }

  std::string_view rest = line;
  const std::string_view label_token = detail::next_token(rest);
  if (label_token.empty()) detail::parse_fail(line_number, "missing relevance label");
  if (!detail::parse_number(label_token, record.label)) {
    detail::parse_fail(line_number, "malformed relevance label '" + std::string(label_token) + "'");
  }
  if (record.label < 0 || record.label > max_grade) {
    detail::parse_fail(line_number, "label " + std::to_string(record.label) +
                                        " outside [0, " + std::to_string(max_grade) + "]");
  }

  const std::string_view qid_token = detail::next_token(rest);
  if (!qid_token.starts_with("qid:") || qid_token.size() == 4) {
    detail::parse_fail(line_number, "expected qid:<token>, got '" + std::string(qid_token) + "'");
  }
  record.query_id = std::string(qid_token.substr(4));

  std::vector<char> seen(static_cast<std::size_t>(feature_count) + 1, 0);
  for (std::string_view token = detail::next_token(rest); !token.empty();
       token = detail::next_token(rest)) {
    const std::size_t colon = token.find(':');
    if (colon == std::string_view::npos) {
      detail::parse_fail(line_number, "malformed feature '" + std::string(token) + "'");
    }
    Index index = 0;
    double value = 0;
    if (!detail::parse_number(token.substr(0, colon), index) ||
        !detail::parse_number(token.substr(colon + 1), value)) {
      detail::parse_fail(line_number, "malformed feature '" + std::string(token) + "'");
    }
    if (index < 1) detail::parse_fail(line_number, "feature index must be >= 1");
    if (index > feature_count) {
      detail::parse_fail(line_number, "feature index " + std::to_string(index) + " exceeds " +
                                          std::to_string(feature_count));
    }
    if (seen[static_cast<std::size_t>(index)]) {
      detail::parse_fail(line_number, "duplicate feature index " + std::to_string(index));
    }
    seen[static_cast<std::size_t>(index)] = 1;
    record.features.emplace_back(index, value);
  }
  return record;
}

/// Streaming parse of a LETOR/SVMLight ranking file. Records sharing a qid
/// are grouped into one QueryGroup in file order; groups appear in order of
/// each qid's first appearance. Absent sparse indices densify to 0.
template <typename Scalar = double>
Dataset<Scalar> parse_letor(std::istream& source, Index feature_count, int max_grade = 4) {
  if (feature_count < 1) throw std::invalid_argument("parse_letor: feature_count must be positive");

  struct GroupBuilder {
    std::string query_id;
    std::vector<Scalar> rows;  // row-major, num_labels x feature_count
    std::vector<int> labels;
  };
  std::vector<GroupBuilder> builders;
  std::unordered_map<std::string, std::size_t> builder_of;

  std::string line;
  std::size_t line_number = 0;
  while (std::getline(source, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    DocumentRecord record = parse_letor_line(line, feature_count, max_grade, line_number);

    auto [it, inserted] = builder_of.try_emplace(record.query_id, builders.size());
    if (inserted) {
      builders.push_back({record.query_id, {}, {}});
    }
    GroupBuilder& builder = builders[it->second];
    const std::size_t row_start = builder.rows.size();
    builder.rows.resize(row_start + static_cast<std::size_t>(feature_count), Scalar(0));
    for (const auto& [index, value] : record.features) {
      builder.rows[row_start + static_cast<std::size_t>(index - 1)] = static_cast<Scalar>(value);
    }
    builder.labels.push_back(record.label);
  }

  Dataset<Scalar> dataset;
  dataset.feature_count = feature_count;
  dataset.max_grade = max_grade;
  dataset.groups.reserve(builders.size());
  for (GroupBuilder& builder : builders) {
    QueryGroup<Scalar> group;
    group.query_id = std::move(builder.query_id);
    const Index rows = static_cast<Index>(builder.labels.size());
    group.features = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(
        builder.rows.data(), rows, feature_count);
    group.labels = Eigen::Map<const LabelVector>(builder.labels.data(), rows);
    dataset.groups.push_back(std::move(group));
  }
  return dataset;
}

template <typename Scalar = double>
Dataset<Scalar> load_letor_file(const std::string& path, Index feature_count, int max_grade = 4) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_letor<Scalar>(in, feature_count, max_grade);
}

/// Serializes back to LETOR lines: single-space separated, every feature
/// written explicitly in ascending index order.
template <typename Scalar>
void write_letor(std::ostream& out, const Dataset<Scalar>& dataset) {
  std::string line;
  for (const QueryGroup<Scalar>& group : dataset.groups) {
    for (Index row = 0; row < group.num_documents(); ++row) {
      line.clear();
      line += std::to_string(group.labels(row));
      line += " qid:";
      line += group.query_id;
      for (Index c = 0; c < dataset.feature_count; ++c) {
        line += ' ';
        line += std::to_string(c + 1);
        line += ':';
        detail::append_number(line, group.features(row, c));
      }
      line += '\n';
      out << line;
    }
  }
}

/// Min-max scales every feature column to [0, 1] within each query.
/// Zero-range columns (including single-document queries) map to zeros;
/// labels are untouched.
template <typename Scalar>
Dataset<Scalar> normalize_features(Dataset<Scalar> dataset) {
  for (QueryGroup<Scalar>& group : dataset.groups) {
    for (Index c = 0; c < group.features.cols(); ++c) {
      auto column = group.features.col(c);
      const Scalar low = column.minCoeff();
      const Scalar range = column.maxCoeff() - low;
      if (range > Scalar(0)) {
        column = (column.array() - low) / range;
      } else {
        column.setZero();
      }
    }
  }
  return dataset;
}

template <typename Scalar>
struct FilterResult {
  Dataset<Scalar> dataset;
  Index removed_groups = 0;
};

/// Drops queries that carry no learnable preference for training: fewer
/// than two documents, or every label zero. Evaluation keeps all queries.
template <typename Scalar>
FilterResult<Scalar> filter_trainable(const Dataset<Scalar>& dataset) {
  FilterResult<Scalar> result;
  result.dataset.feature_count = dataset.feature_count;
  result.dataset.max_grade = dataset.max_grade;
  for (const QueryGroup<Scalar>& group : dataset.groups) {
    const bool trainable = group.num_documents() >= 2 && (group.labels.array() != 0).any();
    if (trainable) {
      result.dataset.groups.push_back(group);
    } else {
      ++result.removed_groups;
    }
  }
  return result;
}

}  // namespace listpl
