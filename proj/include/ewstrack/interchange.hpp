#pragma once

// Document interchange model: the neutral JSON form a PDF converter emits
// and the engine consumes.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/issue.hpp"

namespace ews {

enum class ElementKind { text, table, image };

std::string_view to_string(ElementKind kind) noexcept;
std::optional<ElementKind> element_kind_from_string(std::string_view s) noexcept;

struct TableDims {
  int rows = 0;
  int cols = 0;
  bool operator==(const TableDims&) const = default;
};

struct Element {
  ElementKind kind = ElementKind::text;
  int page = 1;
  std::string markdown;  // text body or markdown table; empty for images
  std::optional<std::string> image_ref;
  std::optional<std::string> caption;
  std::optional<TableDims> table_dims;

  bool operator==(const Element&) const = default;
};

struct DocumentIR {
  std::string file_name;
  std::vector<Element> elements;

  bool operator==(const DocumentIR&) const = default;
};

/// Parses and validates interchange JSON. Throws Error(MalformedJson) when the
/// bytes are not JSON and Error(SchemaViolation) naming the element index when
/// a field is missing, mistyped or breaks an element invariant.
DocumentIR parse_document_ir(std::string_view raw_json);

nlohmann::json to_json(const DocumentIR& doc);
/// Canonical serialization (stable key order, two-space indent).
std::string serialize_document_ir(const DocumentIR& doc);

std::vector<Issue> validate_document(const DocumentIR& doc);
/// Duplicate file names plus every per-document breach. Empty iff clean.
std::vector<Issue> validate_corpus(std::span<const DocumentIR> docs);

}  // namespace ews
