#include "cli.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "ewstrack/agent.hpp"
#include "ewstrack/augmenter.hpp"
#include "ewstrack/chunker.hpp"
#include "ewstrack/errors.hpp"
#include "ewstrack/evaluation.hpp"
#include "ewstrack/extraction.hpp"
#include "ewstrack/extractors.hpp"
#include "ewstrack/gold.hpp"
#include "ewstrack/http_ports.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/interchange.hpp"
#include "ewstrack/parallel.hpp"
#include "ewstrack/prompts.hpp"
#include "ewstrack/report.hpp"
#include "ewstrack/text.hpp"

namespace ews::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Constant context reply used when indexing with the mock backend and no script.
constexpr std::string_view kOfflineContext =
    "This passage is an excerpt of the project document. It is indexed without a generated summary.";

int exit_for(ErrorCode code) {
  if (is_backend_failure(code)) return kBackendError;
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingScriptEntry:
      return kUsageError;
    default:
      return kDataError;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << content;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, p.string() + ": " + e.what());
  }
}

std::vector<fs::path> files_with_ext(const fs::path& dir, std::string_view ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && to_lower_ascii(e.path().extension().string()) == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Options shared by the commands that build an engine.
struct EngineOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string backend = "mock";
  std::string script_dir;
  std::string assets_dir;
  std::size_t jobs = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    cmd.add_option("--set", sets, "override one setting, key=value")->take_all();
    cmd.add_option("--backend", backend, "model backend")->check(CLI::IsMember({"mock", "http"}));
    cmd.add_option("--script-dir", script_dir, "mock replies: <document stem>.json or default.json")
        ->check(CLI::ExistingDirectory);
    cmd.add_option("--assets", assets_dir, "prompt asset directory replacing the built-in one")
        ->check(CLI::ExistingDirectory);
    cmd.add_option("--jobs", jobs, "documents processed in parallel (default: processors)");
  }

  EngineConfig config() const {
    EngineConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }

  std::map<std::string, std::string> overrides() const {
    std::map<std::string, std::string> m;
    if (!config_file.empty()) {
      EngineConfig probe;
      apply_config_file(probe, config_file);
      const auto defaults = EngineConfig{}.to_map();
      for (const auto& [k, v] : probe.to_map()) {
        if (defaults.at(k) != v) m[k] = v;
      }
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      m[kv.substr(0, eq)] = std::string(trim(kv.substr(eq + 1)));
    }
    return m;
  }

  std::size_t worker_count() const {
    if (jobs > 0) return jobs;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }

  std::unique_ptr<PromptAssets> load_assets() const {
    if (assets_dir.empty()) return nullptr;
    return std::make_unique<PromptAssets>(PromptAssets::load(assets_dir));
  }

  /// Script for one document; an absent script yields an empty one, so the
  /// first call raises MissingScriptEntry.
  MockScript script_for(const std::string& stem) const {
    if (script_dir.empty()) return {};
    for (const auto& name : {stem + ".json", std::string("default.json")}) {
      const fs::path p = fs::path(script_dir) / name;
      if (fs::exists(p)) {
        try {
          return MockScript::from_json(read_json(p));
        } catch (const Error& e) {
          throw Error(ErrorCode::InvalidArgument, p.string() + ": " + e.what());
        }
      }
    }
    return {};
  }

  std::unique_ptr<LlmPort> llm_for(const std::string& stem, bool offline_context_fallback) const {
    if (backend == "http") return http_llm(HttpBackendConfig::llm_from_env());
    if (script_dir.empty() && offline_context_fallback) {
      MockScript s;
      s.replies[std::string(prompt::kContext)] = {MockReply{std::string(kOfflineContext), false}};
      return mock_llm(std::move(s));
    }
    return mock_llm(script_for(stem));
  }
};

json run_manifest(const std::string& command, const EngineOptions& opts, const json& extra) {
  json j = {{"command", command},
            {"backend", opts.backend},
            {"config_overrides", opts.overrides()},
            {"engine_version", EWS_VERSION},
            {"timestamp", utc_timestamp()}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

// Embedders matching an index. The mock backend reproduces the seeded hash
// embedder recorded in the index metadata.
struct Embedders {
  std::vector<std::unique_ptr<EmbedderPort>> owned;
  EmbedderSet set;

  const EmbedderPort& text() const { return *set.at(Space::text_table); }
};

Embedders make_embedders(const std::vector<EmbeddingSpec>& spaces, const std::string& backend, std::uint64_t seed) {
  Embedders e;
  for (const auto& spec : spaces) {
    if (backend == "http") {
      e.owned.push_back(http_embedder(HttpBackendConfig::embedder_from_env(), spec));
    } else {
      e.owned.push_back(hash_embedder(spec, seed));
    }
    e.set[spec.space] = e.owned.back().get();
  }
  return e;
}

void print_warnings(std::ostream& err, const std::string& subject, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << subject << ": " << w << "\n";
}

// --- ingest -------------------------------------------------------------------

int cmd_ingest(const std::string& in_dir, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(in_dir)) {
    err << "error: input directory not found: " << in_dir << "\n";
    return kUsageError;
  }
  std::vector<std::string> warnings;
  for (const auto& pdf : files_with_ext(in_dir, ".pdf")) {
    warnings.push_back("PdfSkipped: " + pdf.filename().string() +
                       " (convert PDFs to interchange JSON with the separate converter first)");
  }

  std::vector<DocumentIR> docs;
  std::vector<std::string> sources;
  bool failed = false;
  for (const auto& p : files_with_ext(in_dir, ".json")) {
    if (p.filename() == "corpus_manifest.json") continue;
    try {
      DocumentIR doc = parse_document_ir(read_file(p));
      for (const auto& issue : validate_document(doc)) {
        err << "error: " << p.filename().string() << ": " << issue.code << " " << issue.subject << ": " << issue.detail
            << "\n";
        failed = true;
      }
      docs.push_back(std::move(doc));
      sources.push_back(p.filename().string());
    } catch (const Error& e) {
      err << "error: " << p.filename().string() << ": " << e.what() << "\n";
      failed = true;
    }
  }
  for (const auto& issue : validate_corpus(docs)) {
    // per-document issues were already reported above
    if (issue.code == "DuplicateFileName" || issue.code == "DuplicateImageRef") {
      err << "error: " << issue.code << " " << issue.subject << ": " << issue.detail << "\n";
      failed = true;
    }
  }
  if (failed) return kDataError;
  if (docs.empty()) warnings.push_back("EmptyCorpus: no interchange documents in " + in_dir);

  json listed = json::array();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::string text = serialize_document_ir(docs[i]);
    write_file(fs::path(out_dir) / "corpus" / sources[i], text);
    int pages = 0;
    for (const auto& el : docs[i].elements) pages = std::max(pages, el.page);
    listed.push_back({{"file_name", docs[i].file_name},
                      {"path", "corpus/" + sources[i]},
                      {"elements", docs[i].elements.size()},
                      {"pages", pages},
                      {"checksum", to_hex(fnv1a64(text))}});
  }
  write_json(fs::path(out_dir) / "corpus_manifest.json",
             {{"documents", listed}, {"count", docs.size()}, {"warnings", warnings}});
  print_warnings(err, "ingest", warnings);
  out << "ingested " << docs.size() << " document(s) into " << out_dir << "\n";
  return kOk;
}

// --- index --------------------------------------------------------------------

struct IndexArgs {
  std::string corpus;
  std::string index_dir;
  bool force = false;
  bool skip_augment = false;
};

std::vector<DocumentIR> load_corpus(const fs::path& dir, std::ostream& err, bool& failed) {
  fs::path docs_dir = dir;
  if (fs::exists(dir / "corpus_manifest.json") && fs::is_directory(dir / "corpus")) docs_dir = dir / "corpus";
  std::vector<DocumentIR> docs;
  for (const auto& p : files_with_ext(docs_dir, ".json")) {
    if (p.filename() == "corpus_manifest.json") continue;
    try {
      docs.push_back(parse_document_ir(read_file(p)));
    } catch (const Error& e) {
      err << "error: " << p.filename().string() << ": " << e.what() << "\n";
      failed = true;
    }
  }
  for (const auto& issue : validate_corpus(docs)) {
    err << "error: " << issue.code << " " << issue.subject << ": " << issue.detail << "\n";
    failed = true;
  }
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.file_name < b.file_name; });
  return docs;
}

int cmd_index(const IndexArgs& a, const EngineOptions& opts, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(a.corpus)) {
    err << "error: corpus directory not found: " << a.corpus << "\n";
    return kUsageError;
  }
  const fs::path index_dir = a.index_dir;
  if (fs::exists(index_dir) && !fs::is_empty(index_dir)) {
    if (!a.force) {
      err << "error: " << a.index_dir << " already exists; pass --force to rebuild it\n";
      return kUsageError;
    }
    if (!fs::exists(index_dir / "manifest.json")) {
      err << "error: " << a.index_dir << " is not empty and holds no index; refusing to overwrite it\n";
      return kUsageError;
    }
  }
  const EngineConfig cfg = opts.config();
  const auto assets_owned = opts.load_assets();
  const PromptAssets& assets = assets_owned ? *assets_owned : PromptAssets::builtin();

  bool failed = false;
  const auto docs = load_corpus(a.corpus, err, failed);
  if (failed) return kDataError;
  if (docs.empty()) err << "warning: EmptyCorpus: nothing to index in " << a.corpus << "\n";

  // Scripted replies are consumed in order, so a mock LLM gets one call at a time.
  const std::size_t in_flight = opts.backend == "mock" ? 1 : cfg.augment_in_flight;
  std::vector<std::vector<AugmentedChunk>> per_doc(docs.size());
  std::vector<std::vector<std::string>> per_doc_warnings(docs.size());
  parallel_for(docs.size(), opts.worker_count(), [&](std::size_t i) {
    const auto chunks = chunk_document(docs[i], cfg.chunk);
    if (a.skip_augment) {
      for (const auto& c : chunks) per_doc[i].push_back(make_augmented(c, ""));
      return;
    }
    const auto llm = opts.llm_for(project_of(docs[i].file_name), true);
    const std::string digest = doc_digest(docs[i], cfg.digest_chars);
    for (auto& outcome : augment_chunks(chunks, digest, *llm, assets, in_flight)) {
      for (auto& w : outcome.warnings) per_doc_warnings[i].push_back(std::move(w));
      per_doc[i].push_back(std::move(outcome.augmented));
    }
  });

  std::vector<AugmentedChunk> all;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    print_warnings(err, docs[i].file_name, per_doc_warnings[i]);
    for (auto& c : per_doc[i]) all.push_back(std::move(c));
  }
  if (a.skip_augment) err << "warning: SkippedAugmentation: context summaries are empty\n";

  IndexStore store(default_spaces(cfg.embed_dim), cfg.bm25f);
  const Embedders embedders = make_embedders(store.spaces(), opts.backend, cfg.embed_seed);
  const IndexStats stats = store.upsert_chunks(all, embedders.set);
  store.metadata["embed.backend"] = opts.backend;
  store.metadata["embed.dim"] = std::to_string(cfg.embed_dim);
  store.metadata["embed.seed"] = std::to_string(cfg.embed_seed);
  store.metadata["augment"] = a.skip_augment ? "skipped" : "llm";

  if (fs::exists(index_dir)) fs::remove_all(index_dir);
  store.persist(index_dir);
  write_json(index_dir / "run_manifest.json",
             run_manifest("index", opts,
                          {{"corpus_dir", a.corpus}, {"index_dir", a.index_dir}, {"skip_augment", a.skip_augment}}));

  out << "chunks: " << stats.num_chunks << "\n"
      << "terms: " << stats.num_terms << "\n"
      << "avg_body_len: " << stats.avg_body_len << "\n"
      << "avg_context_len: " << stats.avg_context_len << "\n";
  for (const auto& [space, n] : stats.vectors_per_space) out << "vectors." << to_string(space) << ": " << n << "\n";
  return kOk;
}

// --- extract ------------------------------------------------------------------

struct ExtractArgs {
  std::string index_dir;
  std::string file;
  bool all = false;
  std::string method;
  std::string out_dir = "run";
};

Method parse_method_flag(const std::string& m) {
  static const std::map<std::string, Method> names = {{"zero", Method::zero_shot},  {"few", Method::few_shot},
                                                      {"clf", Method::classifier}, {"cot", Method::cot},
                                                      {"agent", Method::agent}};
  if (auto it = names.find(m); it != names.end()) return it->second;
  if (auto parsed = method_from_string(m)) return *parsed;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + m + "'");
}

struct DocOutcome {
  int status = kOk;
  std::vector<std::string> messages;
};

int cmd_extract(const ExtractArgs& a, const EngineOptions& opts, std::ostream& out, std::ostream& err) {
  const Method method = parse_method_flag(a.method);
  if (!fs::exists(fs::path(a.index_dir) / "manifest.json")) {
    err << "error: no index at " << a.index_dir << "\n";
    return kUsageError;
  }
  const EngineConfig cfg = opts.config();
  const auto assets_owned = opts.load_assets();
  const PromptAssets& assets = assets_owned ? *assets_owned : PromptAssets::builtin();
  const IndexStore index = IndexStore::load(a.index_dir);

  const auto meta = [&](const std::string& key, const std::string& fallback) {
    auto it = index.metadata.find(key);
    return it == index.metadata.end() ? fallback : it->second;
  };
  if (meta("embed.backend", "mock") != opts.backend) {
    throw Error(ErrorCode::InvalidArgument,
                "index was embedded with the " + meta("embed.backend", "mock") + " backend; pass --backend accordingly");
  }
  const Embedders embedders = make_embedders(index.spaces(), opts.backend, std::stoull(meta("embed.seed", "17")));

  std::vector<std::string> files;
  if (a.all) {
    files = index.files();
  } else {
    files.push_back(a.file);
  }
  if (files.empty()) err << "warning: EmptyIndex: no documents to extract\n";

  std::map<PillarId, std::vector<std::string>> keywords;
  for (const auto& [p, q] : assets.pillar_queries) keywords[p] = q.keywords;
  const KeywordClassifier classifier(keywords);

  const fs::path run = a.out_dir;
  std::vector<DocOutcome> outcomes(files.size());
  parallel_for(files.size(), opts.worker_count(), [&](std::size_t i) {
    const std::string& file = files[i];
    const std::string stem = project_of(file);
    DocOutcome& o = outcomes[i];
    std::unique_ptr<LlmPort> llm;
    try {
      llm = opts.llm_for(stem, false);
    } catch (const Error& e) {
      o.status = exit_for(e.code());
      o.messages.push_back(std::string("error: ") + e.what());
      return;
    }
    ExtractionContext ctx{index, embedders.text(), *llm, assets, cfg.retrieval, cfg.llm_in_flight};
    if (opts.backend == "mock") ctx.max_in_flight = 1;

    auto save_partial = [&](const RetrievalTrace& trace, const Error& e) {
      json t = to_json(trace);
      t["aborted"] = true;
      t["error"] = e.what();
      write_json(run / "traces" / (stem + ".json"), t);
    };
    try {
      Extraction x;
      switch (method) {
        case Method::zero_shot: x = extract_direct(file, ctx, DirectMode::zero_shot); break;
        case Method::few_shot: x = extract_direct(file, ctx, DirectMode::few_shot); break;
        case Method::classifier: x = extract_with_classifier(file, ctx, classifier); break;
        case Method::cot: x = extract_cot(file, ctx); break;
        case Method::agent: x = extract_agent(file, ctx, cfg.agent); break;
      }
      const json result = to_json(x.result);
      const auto issues = validate_extraction(result, index);
      for (const auto& issue : issues) {
        o.messages.push_back("error: " + file + ": " + issue.code + " " + issue.subject + ": " + issue.detail);
      }
      write_json(run / "results" / (stem + ".json"), result);
      write_json(run / "traces" / (stem + ".json"), to_json(x.trace));
      const Report report = render_report(x.result);
      write_file(run / "reports" / (stem + ".txt"), report.text);
      write_json(run / "reports" / (stem + ".json"), report.json);
      for (const auto& w : x.result.warnings) o.messages.push_back("warning: " + file + ": " + w);
      if (!issues.empty()) o.status = kDataError;
    } catch (const AgentAborted& e) {
      save_partial(e.partial().trace, e);
      o.status = kBackendError;
      o.messages.push_back("error: " + file + ": " + e.what());
    } catch (const Error& e) {
      RetrievalTrace empty{file, method, {}};
      if (is_backend_failure(e.code())) save_partial(empty, e);
      o.status = exit_for(e.code());
      o.messages.push_back("error: " + file + ": " + e.what());
    }
  });

  int status = kOk;
  for (std::size_t i = 0; i < files.size(); ++i) {
    for (const auto& m : outcomes[i].messages) err << m << "\n";
    status = std::max(status, outcomes[i].status);
    out << files[i] << ": " << (outcomes[i].status == kOk ? "ok" : "failed") << "\n";
  }
  write_json(run / "run_manifest.json",
             run_manifest("extract", opts,
                          {{"index_dir", a.index_dir},
                           {"method", to_string(method)},
                           {"files", files},
                           {"output_dir", a.out_dir}}));
  return status;
}

// --- evaluate -----------------------------------------------------------------

std::string metrics_text(const MetricsReport& m) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << "projects: " << m.projects.size() << "\n";
  s << "amounts: accuracy " << m.amounts.accuracy << "  precision " << m.amounts.macro_precision << "  recall "
    << m.amounts.macro_recall << "  f1 " << m.amounts.macro_f1 << "\n";
  s << "labels: accuracy " << m.labels.accuracy << "  precision " << m.labels.macro_precision << "  recall "
    << m.labels.macro_recall << "  f1 " << m.labels.macro_f1 << "\n";
  s << "evidence: precision " << m.evidence.precision << "  recall " << m.evidence.recall << "  f1 "
    << m.evidence.f1 << "  recall@k " << m.evidence.recall_at_k << "\n";
  s << "mapping: precision " << m.mapping.precision << "  recall " << m.mapping.recall << "  f1 " << m.mapping.f1
    << "\n";
  s << "totals: within tolerance " << m.totals.fraction_within_tolerance << "  mean percentage error "
    << m.totals.mean_percentage_error << "\n";
  return s.str();
}

struct EvaluateArgs {
  std::string run_dir;
  std::string gold_csv;
  std::string index_dir;
  std::string out_dir;
};

int cmd_evaluate(const EvaluateArgs& a, const EngineOptions& opts, std::ostream& out, std::ostream& err) {
  const fs::path run = a.run_dir;
  if (!fs::is_directory(run / "results")) {
    err << "error: no results directory under " << a.run_dir << "\n";
    return kUsageError;
  }
  const EngineConfig cfg = opts.config();
  std::string index_dir = a.index_dir;
  if (index_dir.empty() && fs::exists(run / "run_manifest.json")) {
    index_dir = read_json(run / "run_manifest.json").value("index_dir", "");
  }
  if (index_dir.empty()) {
    err << "error: pass --index; the run manifest names no index\n";
    return kUsageError;
  }
  const auto gold = load_gold_csv(a.gold_csv);
  const IndexStore index = IndexStore::load(index_dir);

  Predictions preds;
  Traces traces;
  std::optional<Method> method;
  for (const auto& p : files_with_ext(run / "results", ".json")) {
    const json j = read_json(p);
    const auto issues = check_extraction_schema(j);
    if (!issues.empty()) {
      err << "error: " << p.filename().string() << ": " << issues.front().code << " " << issues.front().detail << "\n";
      return kDataError;
    }
    ExtractionResult r = extraction_from_json(j);
    method = r.method;
    const std::string project = project_of(r.file_name);
    const fs::path trace_path = run / "traces" / p.filename();
    if (fs::exists(trace_path)) traces[project] = trace_from_json(read_json(trace_path));
    preds[project] = std::move(r);
  }
  // Projects the run never produced count as "nothing found".
  for (const auto& project : gold_projects(gold)) {
    if (preds.count(project)) continue;
    ExtractionResult empty;
    empty.file_name = project;
    if (method) empty.method = *method;
    empty.warnings.push_back("MissingResult: no extraction for this project");
    err << "warning: " << project << ": no extraction result; scored as empty\n";
    traces[project] = RetrievalTrace{project, empty.method, {}};
    preds[project] = std::move(empty);
  }

  const MetricsReport m = evaluate(preds, traces, gold, index, cfg.eval);
  const fs::path dest = a.out_dir.empty() ? run / "metrics" : fs::path(a.out_dir);
  write_json(dest / "metrics.json", to_json(m));
  const std::string text = metrics_text(m);
  write_file(dest / "metrics.txt", text);
  out << text;
  return kOk;
}

// --- compare ------------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& inputs, const std::string& out_dir, int decimals, std::ostream& out,
                std::ostream& err) {
  if (inputs.size() < 2) {
    err << "error: compare needs at least two runs\n";
    return kUsageError;
  }
  std::vector<std::pair<std::string, MetricsReport>> runs;
  for (const auto& in : inputs) {
    fs::path p = in;
    std::string name = p.stem().string();
    if (fs::is_directory(p)) {
      name = p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
      if (fs::exists(p / "run_manifest.json")) {
        const json manifest = read_json(p / "run_manifest.json");
        if (manifest.contains("method")) name = manifest["method"].get<std::string>() + " (" + name + ")";
      }
      p = p / "metrics" / "metrics.json";
    }
    if (!fs::exists(p)) {
      err << "error: no metrics at " << p.string() << "\n";
      return kUsageError;
    }
    const json j = read_json(p);
    if (j.contains("system")) name = j["system"].get<std::string>();
    runs.emplace_back(name, metrics_from_json(j));
  }
  const ComparisonTable table = compare_systems(runs);
  const std::string text = render_text(table, decimals);
  out << text;
  if (!out_dir.empty()) {
    write_file(fs::path(out_dir) / "comparison.txt", text);
    write_json(fs::path(out_dir) / "comparison.json", to_json(table));
  }
  return kOk;
}

// --- report -------------------------------------------------------------------

int cmd_report(const std::string& path, bool as_json, std::ostream& out, std::ostream& err) {
  const json j = read_json(path);
  const auto issues = check_extraction_schema(j);
  if (!issues.empty()) {
    for (const auto& i : issues) err << "error: " << i.code << " " << i.subject << ": " << i.detail << "\n";
    return kDataError;
  }
  const Report r = render_report(extraction_from_json(j));
  if (as_json) {
    out << r.json.dump(2) << "\n";
  } else {
    out << r.text;
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EWS budget tracking: ingest, index, extract, evaluate, compare, report", "ewstrack"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EWS_VERSION);

  std::string in_dir, out_dir;
  auto* ingest = app.add_subcommand("ingest", "validate interchange JSON documents into a corpus");
  ingest->add_option("in_dir", in_dir)->required();
  ingest->add_option("out_dir", out_dir)->required();

  IndexArgs index_args;
  EngineOptions index_opts;
  auto* index = app.add_subcommand("index", "chunk, augment, embed and persist a corpus");
  index->add_option("corpus", index_args.corpus)->required();
  index->add_option("index_dir", index_args.index_dir)->required();
  index->add_flag("--force", index_args.force, "replace an existing index");
  index->add_flag("--skip-augment", index_args.skip_augment, "index with empty context summaries");
  index_opts.add_to(*index);

  ExtractArgs extract_args;
  EngineOptions extract_opts;
  auto* extract = app.add_subcommand("extract", "run one extraction strategy over indexed documents");
  extract->add_option("index_dir", extract_args.index_dir)->required();
  auto* file_opt = extract->add_option("file", extract_args.file, "document file name");
  auto* all_opt = extract->add_flag("--all", extract_args.all, "every indexed document");
  file_opt->excludes(all_opt);
  extract->add_option("--method", extract_args.method)
      ->required()
      ->check(CLI::IsMember({"zero", "few", "clf", "cot", "agent", "zero_shot", "few_shot", "classifier"}));
  extract->add_option("--out", extract_args.out_dir, "run directory");
  extract_opts.add_to(*extract);

  EvaluateArgs eval_args;
  EngineOptions eval_opts;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a run against a gold CSV");
  evaluate_cmd->add_option("run_dir", eval_args.run_dir)->required();
  evaluate_cmd->add_option("gold_csv", eval_args.gold_csv)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--index", eval_args.index_dir, "index directory (default: from the run manifest)");
  evaluate_cmd->add_option("--out", eval_args.out_dir, "metrics directory (default: <run_dir>/metrics)");
  evaluate_cmd->add_option("--config", eval_opts.config_file)->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--set", eval_opts.sets)->take_all();

  std::vector<std::string> compare_inputs;
  std::string compare_out;
  int decimals = 2;
  auto* compare = app.add_subcommand("compare", "tabulate metrics of several runs");
  compare->add_option("runs", compare_inputs, "run directories or metrics JSON files");
  compare->add_option("--out", compare_out, "write comparison.txt and comparison.json here");
  compare->add_option("--decimals", decimals)->check(CLI::Range(0, 6));

  std::string report_path;
  bool report_json = false;
  auto* report = app.add_subcommand("report", "render the analysis report of one result");
  report->add_option("result_json", report_path)->required()->check(CLI::ExistingFile);
  report->add_flag("--json", report_json);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("ewstrack");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(in_dir, out_dir, out, err);
    if (index->parsed()) return cmd_index(index_args, index_opts, out, err);
    if (extract->parsed()) {
      if (extract_args.file.empty() && !extract_args.all) {
        err << "error: name a document or pass --all\n";
        return kUsageError;
      }
      return cmd_extract(extract_args, extract_opts, out, err);
    }
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_args, eval_opts, out, err);
    if (compare->parsed()) return cmd_compare(compare_inputs, compare_out, decimals, out, err);
    if (report->parsed()) return cmd_report(report_path, report_json, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace ews::cli
