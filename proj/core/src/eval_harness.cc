// Copyright 2026 The Safetune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "safetune/eval_harness.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "nlohmann/json.hpp"
#include "safetune/digest.h"
#include "safetune/error.h"
#include "safetune/providers.h"

namespace safetune {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kAbsent = "\xE2\x80\x94";  // em dash
constexpr std::size_t kLabelWidth = 14;
constexpr std::size_t kMinColumnWidth = 10;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string loc = "line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(loc + ": " + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError(loc + ": not a JSON object", lineno);
    try {
      fn(j, loc, lineno);
    } catch (const json::exception& e) {
      throw ParseError(loc + ": " + e.what(), lineno);
    }
  }
}

std::string Str(const json& j, const char* key, const std::string& loc,
                std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(loc + ": missing or non-string field '" + key + "'", lineno);
  }
  return it->get<std::string>();
}

std::size_t DisplayWidth(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string PadRight(std::string_view s, std::size_t width) {
  std::string out(s);
  const std::size_t w = DisplayWidth(s);
  if (w < width) out.append(width - w, ' ');
  return out;
}

std::string PadLeft(std::string_view s, std::size_t width) {
  const std::size_t w = DisplayWidth(s);
  std::string out = w < width ? std::string(width - w, ' ') : std::string();
  out.append(s);
  return out;
}

std::string Fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr std::array<std::string_view, 8> kMetricRows = {
    "BLEU",   "ROUGE-1", "ROUGE-2", "ROUGE-L",
    "BERT-P", "BERT-R",  "BLEURT",  "Word Count"};

// Formatted cell, std::nullopt when the value is absent.
std::optional<std::string> Cell(const TaskSummary& t, std::size_t row) {
  if (!t.mean) return std::nullopt;
  const MeanScores& m = *t.mean;
  switch (row) {
    case 0: return Fixed2(m.bleu);
    case 1: return Fixed2(m.rouge1.f1);
    case 2: return Fixed2(m.rouge2.f1);
    case 3: return Fixed2(m.rougeL.f1);
    case 4: return Fixed2(m.bert.precision);
    case 5: return Fixed2(m.bert.recall);
    case 6:
      if (!m.bleurt) return std::nullopt;
      return Fixed2(*m.bleurt);
    default: return std::to_string(m.DisplayWordCount());
  }
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ordered_json PrfJson(const PrfTriple& p) {
  ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  return j;
}

PrfTriple PrfFrom(const json& j) {
  PrfTriple p;
  p.precision = j.at("precision").get<double>();
  p.recall = j.at("recall").get<double>();
  p.f1 = j.at("f1").get<double>();
  return p;
}

ordered_json OptionalJson(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> OptionalFrom(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ordered_json ScoreJson(const ScoreSet& s) {
  ordered_json j;
  j["bleu"] = s.bleu;
  j["rouge1"] = PrfJson(s.rouge1);
  j["rouge2"] = PrfJson(s.rouge2);
  j["rougeL"] = PrfJson(s.rougeL);
  j["bert"] = PrfJson(s.bert);
  j["bleurt"] = OptionalJson(s.bleurt);
  j["word_count"] = s.word_count;
  j["complete"] = s.complete;
  return j;
}

ScoreSet ScoreFrom(const json& j) {
  ScoreSet s;
  s.bleu = j.at("bleu").get<double>();
  s.rouge1 = PrfFrom(j.at("rouge1"));
  s.rouge2 = PrfFrom(j.at("rouge2"));
  s.rougeL = PrfFrom(j.at("rougeL"));
  s.bert = PrfFrom(j.at("bert"));
  s.bleurt = OptionalFrom(j.at("bleurt"));
  s.word_count = j.at("word_count").get<std::size_t>();
  s.complete = j.at("complete").get<bool>();
  return s;
}

ordered_json MeanJson(const MeanScores& m) {
  ordered_json j;
  j["bleu"] = m.bleu;
  j["rouge1"] = PrfJson(m.rouge1);
  j["rouge2"] = PrfJson(m.rouge2);
  j["rougeL"] = PrfJson(m.rougeL);
  j["bert"] = PrfJson(m.bert);
  j["bleurt"] = OptionalJson(m.bleurt);
  j["word_count"] = m.word_count;
  j["items"] = m.items;
  return j;
}

MeanScores MeanFrom(const json& j) {
  MeanScores m;
  m.bleu = j.at("bleu").get<double>();
  m.rouge1 = PrfFrom(j.at("rouge1"));
  m.rouge2 = PrfFrom(j.at("rouge2"));
  m.rougeL = PrfFrom(j.at("rougeL"));
  m.bert = PrfFrom(j.at("bert"));
  m.bleurt = OptionalFrom(j.at("bleurt"));
  m.word_count = j.at("word_count").get<double>();
  m.items = j.at("items").get<std::size_t>();
  return m;
}

std::string NowUtc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string DescribeConfig(const EvalOptions& o) {
  const auto& m = o.metrics;
  std::ostringstream s;
  s << "tokenizer(nfc=" << (m.normalization.compose ? "on" : "off")
    << ",lowercase=" << (m.normalization.lowercase ? "on" : "off")
    << ",punctuation=" << (m.normalization.detach_punctuation ? "detach" : "keep")
    << "); bleu(max_n=" << m.bleu.max_n << ",smoothing="
    << (m.bleu.smoothing == BleuSmoothing::kNone ? "none" : "add-epsilon");
  if (m.bleu.smoothing == BleuSmoothing::kAddEpsilon) {
    s << ",epsilon=" << m.bleu.epsilon;
  }
  s << "); rouge=f1; bertscore(embeddings=" << o.embeddings_name
    << ",idf=" << (m.use_idf ? "on" : "off") << "); bleurt="
    << (o.bleurt ? "provider" : "none") << "; missing="
    << (o.strict ? "zero" : "excluded");
  return s.str();
}

}  // namespace

std::vector<EvalItem> parse_eval_items(std::string_view text) {
  std::vector<EvalItem> items;
  std::set<std::string> ids;
  ForEachLine(text, [&](const json& j, const std::string& loc, std::size_t n) {
    EvalItem it;
    it.id = Str(j, "id", loc, n);
    const std::string task = Str(j, "task_type", loc, n);
    const auto t = ParseTaskType(task);
    if (!t) throw ParseError(loc + ": unknown task type '" + task + "'", n);
    it.task_type = *t;
    it.instruction = Str(j, "instruction", loc, n);
    it.input = Str(j, "input", loc, n);
    it.reference = Str(j, "reference", loc, n);
    if (it.reference.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw DataError(loc + ": item '" + it.id + "' has an empty reference");
    }
    if (!ids.insert(it.id).second) {
      throw DataError(loc + ": duplicate item id '" + it.id + "'");
    }
    items.push_back(std::move(it));
  });
  return items;
}

std::vector<EvalItem> load_eval_items(const std::string& path) {
  return parse_eval_items(ReadFile(path));
}

std::string serialize_eval_items(const std::vector<EvalItem>& items) {
  std::string out;
  for (const auto& it : items) {
    ordered_json j;
    j["id"] = it.id;
    j["task_type"] = ToString(it.task_type);
    j["instruction"] = it.instruction;
    j["input"] = it.input;
    j["reference"] = it.reference;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SystemOutputs> parse_outputs(std::string_view text) {
  std::vector<SystemOutputs> systems;
  std::map<std::string, std::size_t> index;
  ForEachLine(text, [&](const json& j, const std::string& loc, std::size_t n) {
    SystemOutput o;
    o.item_id = Str(j, "item_id", loc, n);
    o.system_name = Str(j, "system_name", loc, n);
    o.text = Str(j, "text", loc, n);
    auto [it, inserted] = index.emplace(o.system_name, systems.size());
    if (inserted) systems.push_back({o.system_name, {}});
    systems[it->second].outputs.push_back(std::move(o));
  });
  return systems;
}

std::vector<SystemOutputs> load_outputs(const std::string& path) {
  return parse_outputs(ReadFile(path));
}

std::string serialize_outputs(const std::vector<SystemOutput>& outputs) {
  std::string out;
  for (const auto& o : outputs) {
    ordered_json j;
    j["item_id"] = o.item_id;
    j["system_name"] = o.system_name;
    j["text"] = o.text;
    out += j.dump() + "\n";
  }
  return out;
}

long MeanScores::DisplayWordCount() const {
  return static_cast<long>(std::floor(word_count + 0.5));
}

MeanScores aggregate(const std::vector<ScoreSet>& item_scores) {
  if (item_scores.empty()) throw InvalidArgument("aggregate: no scores");
  MeanScores m;
  double bleurt_sum = 0.0;
  std::size_t bleurt_n = 0;
  auto add = [](PrfTriple& acc, const PrfTriple& x) {
    acc.precision += x.precision;
    acc.recall += x.recall;
    acc.f1 += x.f1;
  };
  for (const auto& s : item_scores) {
    m.bleu += s.bleu;
    add(m.rouge1, s.rouge1);
    add(m.rouge2, s.rouge2);
    add(m.rougeL, s.rougeL);
    add(m.bert, s.bert);
    m.word_count += static_cast<double>(s.word_count);
    if (s.bleurt) {
      bleurt_sum += *s.bleurt;
      ++bleurt_n;
    }
  }
  const double n = static_cast<double>(item_scores.size());
  auto div = [n](PrfTriple& p) {
    p.precision /= n;
    p.recall /= n;
    p.f1 /= n;
  };
  m.bleu /= n;
  div(m.rouge1);
  div(m.rouge2);
  div(m.rougeL);
  div(m.bert);
  m.word_count /= n;
  if (bleurt_n) m.bleurt = bleurt_sum / static_cast<double>(bleurt_n);
  m.items = item_scores.size();
  return m;
}

EvalReport run_eval(const std::vector<EvalItem>& items,
                    const std::vector<SystemOutputs>& systems,
                    const EvalOptions& options) {
  if (items.empty()) throw InvalidArgument("run_eval: no eval items");
  if (systems.empty()) throw InvalidArgument("run_eval: no systems");

  std::map<std::string, std::size_t> item_index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!item_index.emplace(items[i].id, i).second) {
      throw DataError("duplicate eval item id: " + items[i].id);
    }
    if (items[i].reference.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw DataError("eval item '" + items[i].id + "' has an empty reference");
    }
  }

  EvalReport report;
  struct Job {
    std::size_t system;
    std::size_t item;
    const std::string* text;
  };
  std::vector<Job> jobs;
  // answered[s][i] = job index + 1, 0 when unanswered.
  std::vector<std::vector<std::size_t>> answered;
  std::vector<const SystemOutputs*> kept;

  for (const auto& sys : systems) {
    if (sys.outputs.empty()) {
      report.warnings.push_back("system '" + sys.name +
                                "' has no outputs and was excluded");
      continue;
    }
    const std::size_t s = kept.size();
    kept.push_back(&sys);
    answered.emplace_back(items.size(), 0);
    for (const auto& o : sys.outputs) {
      auto it = item_index.find(o.item_id);
      if (it == item_index.end()) {
        throw DataError("system '" + sys.name + "' answers unknown item '" +
                        o.item_id + "'");
      }
      if (answered[s][it->second] != 0) {
        throw DataError("system '" + sys.name + "' answers item '" +
                        o.item_id + "' twice");
      }
      jobs.push_back({s, it->second, &o.text});
      answered[s][it->second] = jobs.size();
    }
  }
  if (kept.empty()) throw InvalidArgument("run_eval: every system is empty");

  HashedEmbeddingProvider fallback;
  const EmbeddingProvider& embeddings =
      options.embeddings ? *options.embeddings : fallback;

  std::vector<ScoreSet> scores(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        scores[j] = score_pair(*jobs[j].text, items[jobs[j].item].reference,
                               options.metrics, embeddings, options.bleurt);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::size_t threads = options.threads ? options.threads
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t s = 0; s < kept.size(); ++s) {
    SystemReport sr;
    sr.name = kept[s]->name;
    std::array<std::vector<ScoreSet>, 6> per_task;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto t = static_cast<std::size_t>(items[i].task_type);
      ItemScore is;
      is.item_id = items[i].id;
      is.task_type = items[i].task_type;
      if (answered[s][i]) {
        is.scores = scores[answered[s][i] - 1];
        ++sr.by_task[t].scored;
      } else {
        ++sr.by_task[t].missing;
        if (!options.strict) continue;
        is.missing = true;
      }
      per_task[t].push_back(is.scores);
      sr.items.push_back(std::move(is));
    }
    for (std::size_t t = 0; t < per_task.size(); ++t) {
      if (!per_task[t].empty()) sr.by_task[t].mean = aggregate(per_task[t]);
    }
    report.systems.push_back(std::move(sr));
  }

  report.metadata.metric_config = DescribeConfig(options);
  report.metadata.dataset_digest = Sha256Hex(serialize_eval_items(items));
  report.metadata.timestamp =
      options.timestamp.empty() ? NowUtc() : options.timestamp;
  return report;
}

std::optional<ReportFormat> ParseReportFormat(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kStructured;
  return std::nullopt;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  const auto& systems = report.systems;
  std::string out;

  if (format == ReportFormat::kTable) {
    std::vector<std::size_t> widths;
    for (const auto& s : systems) {
      widths.push_back(std::max(kMinColumnWidth, DisplayWidth(s.name)));
    }
    auto row = [&](std::string_view label, auto&& cell) {
      std::string line = PadRight(label, kLabelWidth);
      for (std::size_t s = 0; s < systems.size(); ++s) {
        line += "  " + PadLeft(cell(s), widths[s]);
      }
      out += line + "\n";
    };
    row("Type of task", [&](std::size_t s) { return systems[s].name; });
    for (TaskType t : kAllTaskTypes) {
      out += std::string(SectionTitle(t)) + "\n";
      for (std::size_t r = 0; r < kMetricRows.size(); ++r) {
        row(kMetricRows[r], [&](std::size_t s) {
          return Cell(systems[s].For(t), r).value_or(std::string(kAbsent));
        });
      }
    }
    out += "\n";
    row("Items scored", [&](std::size_t s) {
      std::size_t n = 0;
      for (const auto& t : systems[s].by_task) n += t.scored;
      return std::to_string(n);
    });
    row("Items missing", [&](std::size_t s) {
      std::size_t n = 0;
      for (const auto& t : systems[s].by_task) n += t.missing;
      return std::to_string(n);
    });
    return out;
  }

  if (format == ReportFormat::kCsv) {
    out = "task_type,metric";
    for (const auto& s : systems) out += "," + CsvField(s.name);
    out += "\n";
    for (TaskType t : kAllTaskTypes) {
      for (std::size_t r = 0; r < kMetricRows.size(); ++r) {
        out += std::string(ToString(t)) + "," + std::string(kMetricRows[r]);
        for (const auto& s : systems) {
          out += "," + Cell(s.For(t), r).value_or("");
        }
        out += "\n";
      }
    }
    return out;
  }

  ordered_json j;
  j["metadata"] = {{"metric_config", report.metadata.metric_config},
                   {"dataset_digest", report.metadata.dataset_digest},
                   {"timestamp", report.metadata.timestamp}};
  j["warnings"] = report.warnings;
  ordered_json sys_arr = ordered_json::array();
  for (const auto& s : systems) {
    ordered_json sj;
    sj["name"] = s.name;
    ordered_json by_task;
    for (TaskType t : kAllTaskTypes) {
      const TaskSummary& ts = s.For(t);
      ordered_json tj;
      tj["scored"] = ts.scored;
      tj["missing"] = ts.missing;
      tj["mean"] = ts.mean ? MeanJson(*ts.mean) : ordered_json(nullptr);
      by_task[std::string(ToString(t))] = std::move(tj);
    }
    sj["by_task"] = std::move(by_task);
    ordered_json item_arr = ordered_json::array();
    for (const auto& is : s.items) {
      ordered_json ij;
      ij["item_id"] = is.item_id;
      ij["task_type"] = ToString(is.task_type);
      ij["missing"] = is.missing;
      ij["scores"] = ScoreJson(is.scores);
      item_arr.push_back(std::move(ij));
    }
    sj["items"] = std::move(item_arr);
    sys_arr.push_back(std::move(sj));
  }
  j["systems"] = std::move(sys_arr);
  return j.dump(2) + "\n";
}

EvalReport parse_structured_report(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    const auto& md = j.at("metadata");
    r.metadata.metric_config = md.at("metric_config").get<std::string>();
    r.metadata.dataset_digest = md.at("dataset_digest").get<std::string>();
    r.metadata.timestamp = md.at("timestamp").get<std::string>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& sj : j.at("systems")) {
      SystemReport s;
      s.name = sj.at("name").get<std::string>();
      for (TaskType t : kAllTaskTypes) {
        const auto& tj = sj.at("by_task").at(std::string(ToString(t)));
        TaskSummary& ts = s.by_task[static_cast<std::size_t>(t)];
        ts.scored = tj.at("scored").get<std::size_t>();
        ts.missing = tj.at("missing").get<std::size_t>();
        if (!tj.at("mean").is_null()) ts.mean = MeanFrom(tj.at("mean"));
      }
      for (const auto& ij : sj.at("items")) {
        ItemScore is;
        is.item_id = ij.at("item_id").get<std::string>();
        const auto t = ParseTaskType(ij.at("task_type").get<std::string>());
        if (!t) throw ParseError("report: unknown task type");
        is.task_type = *t;
        is.missing = ij.at("missing").get<bool>();
        is.scores = ScoreFrom(ij.at("scores"));
        s.items.push_back(std::move(is));
      }
      r.systems.push_back(std::move(s));
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::vector<SystemOutput> collect_outputs(const std::vector<EvalItem>& items,
                                          ChatClient& client,
                                          const std::string& system_name,
                                          std::size_t max_in_flight,
                                          double temperature) {
  const std::size_t width = std::max<std::size_t>(1, max_in_flight);
  std::vector<SystemOutput> outputs;
  outputs.reserve(items.size());
  for (std::size_t base = 0; base < items.size(); base += width) {
    const std::size_t wave = std::min(width, items.size() - base);
    std::vector<std::future<ChatResult>> inflight;
    for (std::size_t i = 0; i < wave; ++i) {
      const EvalItem& item = items[base + i];
      ChatRequest req;
      req.model = client.config().model;
      req.temperature = temperature;
      req.index = base + i;
      if (!item.instruction.empty()) {
        req.messages.push_back({"system", item.instruction});
      }
      req.messages.push_back({"user", item.input});
      inflight.push_back(std::async(
          wave == 1 ? std::launch::deferred : std::launch::async,
          [&client, req = std::move(req)]() mutable {
            return client.Complete(std::move(req));
          }));
    }
    for (std::size_t i = 0; i < wave; ++i) {
      try {
        ChatResult r = inflight[i].get();
        outputs.push_back({items[base + i].id, system_name, std::move(r.text)});
      } catch (const EndpointError& e) {
        for (std::size_t j = i + 1; j < wave; ++j) inflight[j].wait();
        throw CollectionError(e, std::move(outputs));
      }
    }
  }
  return outputs;
}

}  // namespace safetune
