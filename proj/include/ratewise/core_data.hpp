#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ratewise/error.hpp"

namespace ratewise {

using EntityId = std::string;

struct Indicator {
  std::string name;
  std::string unit;

  bool operator==(const Indicator&) const = default;
};

struct IndicatorSchema {
  std::vector<Indicator> indicators;
  std::string id_field = "name";
  std::string type_field = "type";

  std::size_t size() const noexcept { return indicators.size(); }
  bool operator==(const IndicatorSchema&) const = default;
};

struct Entity {
  EntityId id;
  std::string name;
  std::string type_label;
  std::vector<double> raw;

  bool operator==(const Entity&) const = default;
};

struct ColumnStats {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const ColumnStats&) const = default;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) fail(ErrorKind::internal, "number formatting failed");
  return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Immutable collection of rateable entities over a fixed indicator schema.
//
// Construction validates every invariant (unique ids, m >= 2, n >= 2,
// finite raw values of the right arity) and computes per-indicator min/max.
class Dataset {
 public:
  Dataset(IndicatorSchema schema, std::vector<Entity> entities)
      : schema_(std::move(schema)), entities_(std::move(entities)) {
    const std::size_t m = schema_.size();
    if (m < 2) fail(ErrorKind::validation, "at least 2 indicators required");
    std::set<std::string> names;
    for (const auto& ind : schema_.indicators) {
      if (ind.name.empty()) fail(ErrorKind::validation, "empty indicator name");
      if (!names.insert(ind.name).second) {
        fail(ErrorKind::validation, "duplicate indicator name '" + ind.name + "'");
      }
    }
    if (entities_.empty()) fail(ErrorKind::validation, "no entities");
    if (entities_.size() < 2) fail(ErrorKind::validation, "insufficient entities: need at least 2");

    for (std::size_t i = 0; i < entities_.size(); ++i) {
      const auto& e = entities_[i];
      if (e.id.empty()) fail(ErrorKind::validation, "entity " + std::to_string(i + 1) + " has an empty id");
      if (e.raw.size() != m) {
        fail(ErrorKind::validation, "entity '" + e.id + "' has " + std::to_string(e.raw.size()) +
                                        " indicator values, expected " + std::to_string(m));
      }
      for (double v : e.raw) {
        if (!std::isfinite(v)) fail(ErrorKind::validation, "entity '" + e.id + "' has a non-finite value");
      }
      if (!index_.emplace(e.id, i).second) fail(ErrorKind::validation, "duplicate id '" + e.id + "'");
      if (std::find(type_labels_.begin(), type_labels_.end(), e.type_label) == type_labels_.end()) {
        type_labels_.push_back(e.type_label);
      }
    }
    std::sort(type_labels_.begin(), type_labels_.end());

    stats_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      stats_[j].min = stats_[j].max = entities_.front().raw[j];
      for (const auto& e : entities_) {
        stats_[j].min = std::min(stats_[j].min, e.raw[j]);
        stats_[j].max = std::max(stats_[j].max, e.raw[j]);
      }
    }
  }

  const IndicatorSchema& schema() const noexcept { return schema_; }
  const std::vector<Entity>& entities() const noexcept { return entities_; }
  const std::vector<ColumnStats>& norm_stats() const noexcept { return stats_; }
  // Sorted, distinct.
  const std::vector<std::string>& type_labels() const noexcept { return type_labels_; }

  std::size_t size() const noexcept { return entities_.size(); }
  std::size_t indicator_count() const noexcept { return schema_.size(); }

  std::optional<std::size_t> find(const EntityId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const EntityId& id) const {
    auto idx = find(id);
    if (!idx) fail(ErrorKind::not_found, "unknown entity '" + id + "'");
    return *idx;
  }

  const Entity& entity(const EntityId& id) const { return entities_[index_of(id)]; }

  // Ids in ingestion order.
  std::vector<EntityId> ids() const {
    std::vector<EntityId> out;
    out.reserve(entities_.size());
    for (const auto& e : entities_) out.push_back(e.id);
    return out;
  }

  bool operator==(const Dataset& other) const {
    return schema_ == other.schema_ && entities_ == other.entities_;
  }

 private:
  IndicatorSchema schema_;
  std::vector<Entity> entities_;
  std::vector<ColumnStats> stats_;
  std::vector<std::string> type_labels_;
  std::unordered_map<EntityId, std::size_t> index_;
};

// Row-major n x m matrix of min-max normalized indicator values, rows in
// dataset order.
class NormalizedMatrix {
 public:
  NormalizedMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                   std::vector<EntityId> order)
      : rows_(rows), cols_(cols), values_(std::move(values)), order_(std::move(order)) {
    if (values_.size() != rows_ * cols_ || order_.size() != rows_) {
      fail(ErrorKind::internal, "normalized matrix shape mismatch");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<EntityId>& entity_order() const noexcept { return order_; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
  std::vector<EntityId> order_;
};

inline NormalizedMatrix normalize(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t m = ds.indicator_count();
  std::vector<double> values(n * m, 0.0);
  const auto& stats = ds.norm_stats();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& raw = ds.entities()[i].raw;
    for (std::size_t j = 0; j < m; ++j) {
      const double range = stats[j].max - stats[j].min;
      // constant column contributes nothing under any weight
      values[i * m + j] = range > 0.0 ? (raw[j] - stats[j].min) / range : 0.0;
    }
  }
  return NormalizedMatrix(n, m, std::move(values), ds.ids());
}

// ---------------------------------------------------------------------------
// Delimited text ingestion / export

struct ColumnHints {
  std::optional<std::string> id_column;
  std::optional<std::string> type_column;
  // Explicit indicator subset, in output order. Empty means "all other columns".
  std::vector<std::string> indicator_columns;
};

namespace detail {

// RFC 4180-style record splitter. Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool was_quoted = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !was_quoted && field.find_first_not_of(" \t") == std::string::npos) {
      field.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n') {
      ++line_no;
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline bool blank(const std::vector<std::string>& fields) {
  return std::all_of(fields.begin(), fields.end(), [](const std::string& f) { return trim(f).empty(); });
}

// "asset_size [CNY 100m]" -> {asset_size, CNY 100m}
inline Indicator parse_indicator_header(const std::string& header) {
  std::string h = trim(header);
  if (!h.empty() && h.back() == ']') {
    auto open = h.rfind('[');
    if (open != std::string::npos) {
      return {trim(h.substr(0, open)), trim(h.substr(open + 1, h.size() - open - 2))};
    }
  }
  return {h, ""};
}

inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace detail

// Parses comma-delimited text with a header row: id/name column, type
// column, then numeric indicator columns. Row numbers in error messages
// count physical lines, header = line 1.
inline Dataset ingest(std::istream& in, const ColumnHints& hints = {}) {
  std::vector<std::string> header;
  std::size_t line_no = 0;
  // skip leading blank lines
  do {
    if (!detail::read_record(in, header, line_no)) fail(ErrorKind::validation, "empty input: missing header row");
  } while (detail::blank(header));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  for (auto& h : header) h = detail::trim(h);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::validation, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  if (header.size() < 4) {
    fail(ErrorKind::validation, "header needs an id column, a type column and at least 2 indicator columns");
  }
  const std::size_t id_col = hints.id_column ? column_of(*hints.id_column) : 0;
  const std::size_t type_col = hints.type_column ? column_of(*hints.type_column) : 1;
  if (id_col == type_col) fail(ErrorKind::validation, "id and type columns must differ");

  std::vector<std::size_t> ind_cols;
  IndicatorSchema schema;
  schema.id_field = header[id_col];
  schema.type_field = header[type_col];
  if (!hints.indicator_columns.empty()) {
    for (const auto& name : hints.indicator_columns) ind_cols.push_back(column_of(name));
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != id_col && c != type_col) ind_cols.push_back(c);
    }
  }
  for (auto c : ind_cols) schema.indicators.push_back(detail::parse_indicator_header(header[c]));

  std::vector<Entity> entities;
  std::set<std::string> seen;
  std::vector<std::string> fields;
  while (true) {
    const std::size_t row_line = line_no + 1;
    if (!detail::read_record(in, fields, line_no)) break;
    if (detail::blank(fields)) continue;
    if (fields.size() != header.size()) {
      fail(ErrorKind::validation, "row " + std::to_string(row_line) + ": expected " +
                                      std::to_string(header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    Entity e;
    e.id = detail::trim(fields[id_col]);
    e.name = e.id;
    e.type_label = detail::trim(fields[type_col]);
    if (e.id.empty()) fail(ErrorKind::validation, "row " + std::to_string(row_line) + ": empty id");
    if (!seen.insert(e.id).second) {
      fail(ErrorKind::validation, "row " + std::to_string(row_line) + ": duplicate id '" + e.id + "'");
    }
    for (auto c : ind_cols) {
      auto v = parse_double(fields[c]);
      if (!v) {
        fail(ErrorKind::validation, "row " + std::to_string(row_line) + ", column " + std::to_string(c + 1) +
                                        " ('" + header[c] + "'): non-numeric value '" +
                                        detail::trim(fields[c]) + "'");
      }
      e.raw.push_back(*v);
    }
    entities.push_back(std::move(e));
  }
  if (entities.empty()) fail(ErrorKind::validation, "no entities");
  return Dataset(std::move(schema), std::move(entities));
}

inline Dataset ingest_text(std::string_view text, const ColumnHints& hints = {}) {
  std::istringstream in{std::string(text)};
  return ingest(in, hints);
}

inline void export_csv(const Dataset& ds, std::ostream& out) {
  out << detail::quote_field(ds.schema().id_field) << ',' << detail::quote_field(ds.schema().type_field);
  for (const auto& ind : ds.schema().indicators) {
    out << ',' << detail::quote_field(ind.unit.empty() ? ind.name : ind.name + " [" + ind.unit + "]");
  }
  out << '\n';
  for (const auto& e : ds.entities()) {
    out << detail::quote_field(e.id) << ',' << detail::quote_field(e.type_label);
    for (double v : e.raw) out << ',' << format_double(v);
    out << '\n';
  }
}

inline std::string export_csv(const Dataset& ds) {
  std::ostringstream out;
  export_csv(ds, out);
  return out.str();
}

}  // namespace ratewise
