#include "ewstrack/interchange.hpp"

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"

namespace ews {

using nlohmann::json;

std::string_view to_string(ElementKind kind) noexcept {
  switch (kind) {
    case ElementKind::text: return "text";
    case ElementKind::table: return "table";
    case ElementKind::image: return "image";
  }
  return "text";
}

std::optional<ElementKind> element_kind_from_string(std::string_view s) noexcept {
  if (s == "text") return ElementKind::text;
  if (s == "table") return ElementKind::table;
  if (s == "image") return ElementKind::image;
  return std::nullopt;
}

namespace {

const std::set<std::string, std::less<>> kElementKeys = {"kind",     "page",    "markdown",
                                                         "image_ref", "caption", "table_dims"};

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::SchemaViolation, what); }

std::string at_index(std::size_t i) { return "element " + std::to_string(i); }

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) violation(at_index(index) + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

Element parse_element(const json& j, std::size_t index) {
  if (!j.is_object()) violation(at_index(index) + ": must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!kElementKeys.contains(key)) violation(at_index(index) + ": unknown field '" + key + "'");
  }
  Element el;

  auto kind = j.find("kind");
  if (kind == j.end()) violation(at_index(index) + ": missing 'kind'");
  if (!kind->is_string()) violation(at_index(index) + ": 'kind' must be a string");
  auto parsed_kind = element_kind_from_string(kind->get<std::string>());
  if (!parsed_kind) violation(at_index(index) + ": bad kind '" + kind->get<std::string>() + "'");
  el.kind = *parsed_kind;

  auto page = j.find("page");
  if (page == j.end()) violation(at_index(index) + ": missing 'page'");
  if (!page->is_number_integer()) violation(at_index(index) + ": 'page' must be an integer");
  const auto page_value = page->get<long long>();
  if (page_value < 1 || page_value > 1'000'000) violation(at_index(index) + ": page must be >= 1");
  el.page = static_cast<int>(page_value);

  auto md = j.find("markdown");
  if (md == j.end()) violation(at_index(index) + ": missing 'markdown'");
  if (!md->is_string()) violation(at_index(index) + ": 'markdown' must be a string");
  el.markdown = md->get<std::string>();

  el.image_ref = optional_string(j, "image_ref", index);
  el.caption = optional_string(j, "caption", index);

  if (auto dims = j.find("table_dims"); dims != j.end() && !dims->is_null()) {
    if (!dims->is_object()) violation(at_index(index) + ": 'table_dims' must be an object");
    auto rows = dims->find("rows");
    auto cols = dims->find("cols");
    if (rows == dims->end() || cols == dims->end() || !rows->is_number_integer() ||
        !cols->is_number_integer()) {
      violation(at_index(index) + ": 'table_dims' needs integer rows and cols");
    }
    if (dims->size() != 2) violation(at_index(index) + ": 'table_dims' has unknown fields");
    const auto r = rows->get<long long>();
    const auto c = cols->get<long long>();
    if (r < 1 || c < 1 || r > 1'000'000 || c > 1'000'000) {
      violation(at_index(index) + ": table_dims rows and cols must be >= 1");
    }
    el.table_dims = TableDims{static_cast<int>(r), static_cast<int>(c)};
  }

  switch (el.kind) {
    case ElementKind::table:
      if (el.markdown.empty()) violation(at_index(index) + ": table markdown is empty");
      if (!el.table_dims) violation(at_index(index) + ": table without 'table_dims'");
      break;
    case ElementKind::image:
      if (!el.image_ref) violation(at_index(index) + ": image without 'image_ref'");
      break;
    case ElementKind::text:
      if (el.markdown.empty()) violation(at_index(index) + ": text markdown is empty");
      break;
  }
  return el;
}

}  // namespace

DocumentIR parse_document_ir(std::string_view raw_json) {
  json j;
  try {
    j = json::parse(raw_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
  if (!j.is_object()) violation("document must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "file_name" && key != "elements") violation("unknown top-level field '" + key + "'");
  }
  auto name = j.find("file_name");
  if (name == j.end() || !name->is_string()) violation("missing string 'file_name'");
  auto elements = j.find("elements");
  if (elements == j.end() || !elements->is_array()) violation("missing array 'elements'");

  DocumentIR doc;
  doc.file_name = name->get<std::string>();
  if (doc.file_name.empty()) violation("'file_name' is empty");
  doc.elements.reserve(elements->size());
  for (std::size_t i = 0; i < elements->size(); ++i) {
    doc.elements.push_back(parse_element((*elements)[i], i));
  }
  return doc;
}

json to_json(const DocumentIR& doc) {
  json elements = json::array();
  for (const auto& el : doc.elements) {
    json e = {{"kind", to_string(el.kind)}, {"page", el.page}, {"markdown", el.markdown}};
    if (el.image_ref) e["image_ref"] = *el.image_ref;
    if (el.caption) e["caption"] = *el.caption;
    if (el.table_dims) e["table_dims"] = {{"rows", el.table_dims->rows}, {"cols", el.table_dims->cols}};
    elements.push_back(std::move(e));
  }
  return json{{"file_name", doc.file_name}, {"elements", std::move(elements)}};
}

std::string serialize_document_ir(const DocumentIR& doc) { return to_json(doc).dump(2) + "\n"; }

std::vector<Issue> validate_document(const DocumentIR& doc) {
  std::vector<Issue> issues;
  if (doc.file_name.empty()) issues.push_back({"EmptyFileName", doc.file_name, "file_name is empty"});
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& el = doc.elements[i];
    const std::string where = at_index(i);
    if (el.page < 1) issues.push_back({"PageOutOfRange", doc.file_name, where + ": page " + std::to_string(el.page)});
    switch (el.kind) {
      case ElementKind::table:
        if (el.markdown.empty()) issues.push_back({"EmptyTable", doc.file_name, where});
        if (!el.table_dims || el.table_dims->rows < 1 || el.table_dims->cols < 1) {
          issues.push_back({"BadTableDims", doc.file_name, where});
        }
        break;
      case ElementKind::image:
        if (!el.image_ref) issues.push_back({"ImageWithoutRef", doc.file_name, where});
        break;
      case ElementKind::text:
        if (el.markdown.empty()) issues.push_back({"EmptyText", doc.file_name, where});
        break;
    }
  }
  return issues;
}

std::vector<Issue> validate_corpus(std::span<const DocumentIR> docs) {
  std::vector<Issue> issues;
  std::map<std::string, std::size_t> seen;
  for (const auto& doc : docs) ++seen[doc.file_name];
  for (const auto& [name, count] : seen) {
    if (count > 1) {
      issues.push_back({"DuplicateFileName", name, std::to_string(count) + " documents share this name"});
    }
  }
  for (const auto& doc : docs) {
    auto doc_issues = validate_document(doc);
    issues.insert(issues.end(), doc_issues.begin(), doc_issues.end());
  }
  return issues;
}

}  // namespace ews
