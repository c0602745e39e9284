// Thin bindings: structured values cross the boundary as JSON text and are
// decoded on the Python side (see ewstrack/__init__.py).

#include <sstream>

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "ewstrack/chunker.hpp"
#include "ewstrack/errors.hpp"
#include "ewstrack/evaluation.hpp"
#include "ewstrack/extraction.hpp"
#include "ewstrack/gold.hpp"
#include "ewstrack/interchange.hpp"
#include "ewstrack/money.hpp"
#include "ewstrack/ports.hpp"
#include "ewstrack/report.hpp"
#include "ewstrack/retrieval.hpp"

namespace py = pybind11;
using json = nlohmann::json;

namespace {

ews::Decimal decimal_arg(const std::string& text) {
  auto d = ews::Decimal::parse(text);
  if (!d) throw ews::Error(ews::ErrorCode::InvalidArgument, "not a decimal: '" + text + "'");
  return *d;
}

ews::ElementKind kind_arg(const std::string& kind) {
  auto k = ews::element_kind_from_string(kind);
  if (!k) throw ews::Error(ews::ErrorCode::InvalidArgument, "unknown element kind '" + kind + "'");
  return *k;
}

std::vector<std::tuple<std::string, std::string, std::string>> issue_tuples(const std::vector<ews::Issue>& issues) {
  std::vector<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& i : issues) out.emplace_back(i.code, i.subject, i.detail);
  return out;
}

ews::ExtractionResult result_arg(const std::string& text) {
  try {
    return ews::extraction_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ews::Error(ews::ErrorCode::MalformedJson, e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EWS budget tracking engine";
  m.attr("__version__") = EWS_VERSION;

  // EwsError(message) with a .code attribute naming the engine error code.
  static py::handle error_type = py::exception<ews::Error>(m, "EwsError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ews::Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type)(e.what());
      err.attr("code") = std::string(ews::to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  m.def("parse_document", [](const std::string& text) {
    return ews::serialize_document_ir(ews::parse_document_ir(text));
  }, "Validate interchange JSON; returns its canonical serialization.");

  m.def("validate_corpus", [](const std::vector<std::string>& texts) {
    std::vector<ews::DocumentIR> docs;
    for (const auto& t : texts) docs.push_back(ews::parse_document_ir(t));
    return issue_tuples(ews::validate_corpus(docs));
  });

  m.def("chunk_document", [](const std::string& text, std::size_t max_text_chars, std::size_t min_text_chars) {
    ews::ChunkConfig cfg;
    cfg.max_text_chars = max_text_chars;
    cfg.min_text_chars = min_text_chars;
    cfg.validate();
    json out = json::array();
    for (const auto& c : ews::chunk_document(ews::parse_document_ir(text), cfg)) out.push_back(ews::to_json(c));
    return out.dump();
  }, py::arg("document"), py::arg("max_text_chars") = 4000, py::arg("min_text_chars") = 200);

  m.def("chunk_id", [](const std::string& file, std::size_t ordinal, const std::string& kind) {
    return ews::chunk_id(file, ordinal, kind_arg(kind));
  });

  m.def("rrf_fuse", [](const std::vector<std::string>& dense, const std::vector<std::string>& lexical, double k) {
    auto ranked = [](const std::vector<std::string>& ids) {
      std::vector<ews::RankedHit> hits;
      for (std::size_t i = 0; i < ids.size(); ++i) hits.push_back({ids[i], i + 1, 0.0});
      return hits;
    };
    const auto d = ranked(dense), l = ranked(lexical);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& c : ews::rrf_fuse(d, l, k)) out.emplace_back(c.chunk_id, c.rrf_score);
    return out;
  }, py::arg("dense"), py::arg("lexical"), py::arg("k") = 60.0);

  m.def("hash_embed", [](const std::string& text, std::size_t dim, std::uint64_t seed) {
    return ews::hash_embedder({ews::Space::text_table, dim, true}, seed)->embed(text);
  }, py::arg("text"), py::arg("dim") = 256, py::arg("seed") = 17);

  m.def("parse_money", [](const std::string& text) {
    const auto money = ews::parse_money(text);
    return std::make_pair(money.amount.to_string(), money.currency);
  });

  m.def("budget_tp", [](const std::string& pred, const std::string& gold, const std::string& total,
                        const std::string& tolerance) {
    ews::EvalConfig cfg;
    cfg.tolerance = decimal_arg(tolerance);
    cfg.validate();
    return ews::budget_tp(decimal_arg(pred), decimal_arg(gold), decimal_arg(total), cfg);
  }, py::arg("pred"), py::arg("gold"), py::arg("total"), py::arg("tolerance") = "0.05");

  m.def("gold_budgets", [](const std::string& path) {
    const auto records = ews::load_gold_csv(path);
    json out = json::object();
    for (const auto& project : ews::gold_projects(records)) {
      const auto v = ews::budget_vector(records, project);
      json pillars = json::object();
      for (ews::PillarId p : ews::kAllPillars) pillars[std::string(ews::to_string(p))] = v[p].to_string();
      out[project] = {{"pillars", pillars}, {"total", v.total.to_string()}};
    }
    return out.dump();
  }, "Per-project pillar sums and totals of a gold CSV, amounts as decimal strings.");

  m.def("check_extraction", [](const std::string& text) {
    try {
      return issue_tuples(ews::check_extraction_schema(json::parse(text)));
    } catch (const json::parse_error& e) {
      throw ews::Error(ews::ErrorCode::MalformedJson, e.what());
    }
  });

  m.def("percentage_tenths", [](const std::string& text) { return ews::percentage_tenths(result_arg(text)); });

  m.def("render_report", [](const std::string& text) {
    const auto r = ews::render_report(result_arg(text));
    return std::make_pair(r.text, r.json.dump());
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int status = 0;
    {
      py::gil_scoped_release release;
      status = ews::cli::run_cli(args, out, err);
    }
    return std::make_tuple(status, out.str(), err.str());
  }, "Run one ewstrack command in-process; returns (exit status, stdout, stderr).");
}
