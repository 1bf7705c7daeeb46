#include "rxnelicit/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rxnelicit/error.hpp"
#include "rxnelicit/smiles.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::metrics {

namespace {

void check_pairs(std::size_t p, std::size_t r, std::string_view what) {
  if (p != r)
    throw DataError(std::string(what) + ": " + std::to_string(p) +
                    " predictions vs " + std::to_string(r) + " references");
  if (p == 0)
    throw DataError(std::string(what) + ": empty corpus");
}

using Tokens = std::vector<std::string>;

std::map<std::vector<std::string_view>, std::size_t> ngram_counts(
    const Tokens &t, std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i)
    ++out[std::vector<std::string_view>(t.begin() + i, t.begin() + i + n)];
  return out;
}

}  // namespace

double bleu(std::span<const std::string> predictions,
            std::span<const std::string> references) {
  check_pairs(predictions.size(), references.size(), "bleu");
  constexpr std::size_t kMaxN = 4;
  std::array<std::size_t, kMaxN + 1> matched{}, total{};
  std::size_t pred_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto p = smiles::regex_tokens(predictions[i]);
    const auto r = smiles::regex_tokens(references[i]);
    pred_len += p.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      const auto pc = ngram_counts(p, n);
      const auto rc = ngram_counts(r, n);
      for (const auto &[g, c] : pc) {
        total[n] += c;
        if (auto it = rc.find(g); it != rc.end())
          matched[n] += std::min(c, it->second);
      }
    }
  }
  if (pred_len == 0 || matched[1] == 0)
    return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxN; ++n) {
    const double pn =
        matched[n] > 0 ? static_cast<double>(matched[n]) / total[n]
                       : 1.0 / (static_cast<double>(total[n]) + 1.0);
    log_sum += std::log(pn);
  }
  const double bp =
      pred_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / pred_len);
  return bp * std::exp(log_sum / kMaxN);
}

MeteorParts meteor_pair(std::span<const std::string> pred,
                        std::span<const std::string> ref) {
  MeteorParts out;
  std::vector<int> pred_to_ref(pred.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);

  // Repeatedly align the longest run of unaligned tokens common to both
  // sides; the earliest (pred, ref) start wins ties.
  for (;;) {
    std::size_t best_len = 0, best_p = 0, best_r = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred_to_ref[i] >= 0)
        continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::size_t len = 0;
        while (i + len < pred.size() && j + len < ref.size() &&
               pred_to_ref[i + len] < 0 && !ref_used[j + len] &&
               pred[i + len] == ref[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_p = i;
          best_r = j;
        }
      }
    }
    if (best_len == 0)
      break;
    for (std::size_t k = 0; k < best_len; ++k) {
      pred_to_ref[best_p + k] = static_cast<int>(best_r + k);
      ref_used[best_r + k] = true;
    }
  }

  int prev = -2;
  for (int r : pred_to_ref) {
    if (r < 0) {
      prev = -2;
      continue;
    }
    ++out.matches;
    if (r != prev + 1)
      ++out.chunks;
    prev = r;
  }
  if (out.matches == 0)
    return out;
  const double m = static_cast<double>(out.matches);
  out.precision = m / pred.size();
  out.recall = m / ref.size();
  const double f = 10.0 * out.precision * out.recall /
                   (out.recall + 9.0 * out.precision);
  const double frag = static_cast<double>(out.chunks) / m;
  out.score = f * (1.0 - 0.5 * frag * frag * frag);
  return out;
}

double meteor(std::span<const std::string> predictions,
              std::span<const std::string> references) {
  check_pairs(predictions.size(), references.size(), "meteor");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    sum += meteor_pair(smiles::regex_tokens(predictions[i]),
                       smiles::regex_tokens(references[i]))
               .score;
  return sum / predictions.size();
}

std::vector<std::string> compound_multiset(std::string_view s) {
  std::vector<std::string> out;
  for (auto part : split(s, '.')) {
    part = trim(part);
    if (!part.empty() && smiles::validate_compound(part))
      out.push_back(smiles::canonicalize(part));
    else
      out.emplace_back(part);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double exact_match(std::span<const std::string> predictions,
                   std::span<const std::string> references) {
  check_pairs(predictions.size(), references.size(), "exact_match");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    hits += compound_multiset(predictions[i]) == compound_multiset(references[i]);
  return static_cast<double>(hits) / predictions.size();
}

namespace {

struct Pooled {
  smiles::Fingerprint fp{smiles::kFingerprintWidth};
  std::size_t valid = 0;
  std::size_t total = 0;
};

Pooled pool(std::string_view s) {
  Pooled p;
  for (auto part : split(s, '.')) {
    part = trim(part);
    ++p.total;
    if (part.empty() || !smiles::validate_compound(part))
      continue;
    ++p.valid;
    p.fp |= smiles::fingerprint(smiles::parse(part));
  }
  return p;
}

}  // namespace

double pair_similarity(std::string_view prediction, std::string_view reference) {
  const auto a = pool(prediction);
  const auto b = pool(reference);
  if (a.valid == 0 || b.valid == 0) {
    const bool all_invalid = a.valid == 0 && b.valid == 0;
    return all_invalid && trim(prediction) == trim(reference) ? 1.0 : 0.0;
  }
  return smiles::tanimoto(a.fp, b.fp);
}

double similarity(std::span<const std::string> predictions,
                  std::span<const std::string> references) {
  check_pairs(predictions.size(), references.size(), "similarity");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    sum += pair_similarity(predictions[i], references[i]);
  return sum / predictions.size();
}

bool is_valid_prediction(std::string_view s) {
  return static_cast<bool>(smiles::validate(trim(s)));
}

double validity(std::span<const std::string> predictions) {
  if (predictions.empty())
    throw DataError("validity: empty corpus");
  std::size_t ok = 0;
  for (const auto &p : predictions)
    ok += is_valid_prediction(p);
  return static_cast<double>(ok) / predictions.size();
}

double improvement(double candidate_em, double baseline_em) {
  if (!(baseline_em > 0.0))
    throw DataError("improvement: baseline em must be positive");
  return (candidate_em - baseline_em) / baseline_em;
}

Scores score(std::span<const EvalRow> rows) {
  Scores s;
  s.count = rows.size();
  if (rows.empty())
    return s;
  std::vector<std::string> p, r;
  p.reserve(rows.size());
  r.reserve(rows.size());
  for (const auto &row : rows) {
    p.push_back(row.prediction);
    r.push_back(row.reference);
  }
  s.bleu = bleu(p, r);
  s.meteor = meteor(p, r);
  s.em = exact_match(p, r);
  s.similarity = similarity(p, r);
  s.validity = validity(p);
  return s;
}

MetricReport evaluate(std::span<const EvalRow> rows) {
  if (rows.empty())
    throw DataError("evaluate: no rows");
  MetricReport rep;
  rep.overall = score(rows);
  std::map<data::TaskType, std::vector<EvalRow>> by_task;
  for (const auto &row : rows)
    by_task[row.task].push_back(row);
  for (const auto &[task, rs] : by_task)
    rep.tasks[task] = score(rs);
  return rep;
}

void MetricReport::apply_baseline(const MetricReport &baseline) {
  auto fill = [](Scores &s, const Scores &b) {
    if (b.count > 0 && b.em > 0.0)
      s.improve = improvement(s.em, b.em);
  };
  fill(overall, baseline.overall);
  for (auto &[task, s] : tasks)
    if (auto it = baseline.tasks.find(task); it != baseline.tasks.end())
      fill(s, it->second);
}

namespace {

nlohmann::ordered_json scores_json(const Scores &s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["bleu"] = s.bleu;
  j["meteor"] = s.meteor;
  j["em"] = s.em;
  j["similarity"] = s.similarity;
  j["validity"] = s.validity;
  j["improve"] = s.improve ? nlohmann::ordered_json(*s.improve)
                           : nlohmann::ordered_json(nullptr);
  return j;
}

Scores scores_from(const nlohmann::json &j) {
  Scores s;
  s.count = j.at("count").get<std::size_t>();
  s.bleu = j.at("bleu").get<double>();
  s.meteor = j.at("meteor").get<double>();
  s.em = j.at("em").get<double>();
  s.similarity = j.at("similarity").get<double>();
  s.validity = j.at("validity").get<double>();
  if (auto it = j.find("improve"); it != j.end() && !it->is_null())
    s.improve = it->get<double>();
  return s;
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["overall"] = scores_json(overall);
  j["tasks"] = nlohmann::ordered_json::object();
  for (auto task : data::kAllTasks)
    if (auto it = tasks.find(task); it != tasks.end())
      j["tasks"][std::string(data::task_name(task))] = scores_json(it->second);
  return j.dump(2) + "\n";
}

MetricReport MetricReport::from_json(std::string_view text,
                                     const std::string &source) {
  MetricReport rep;
  try {
    auto j = nlohmann::json::parse(text);
    rep.overall = scores_from(j.at("overall"));
    for (const auto &[name, v] : j.at("tasks").items()) {
      auto task = data::parse_task(name);
      if (!task)
        throw DataError(source + ": unknown task \"" + name + "\"");
      rep.tasks[*task] = scores_from(v);
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(source + ": " + e.what());
  }
  return rep;
}

std::string serialize_predictions(std::span<const Prediction> preds) {
  std::string out;
  for (const auto &p : preds) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["prediction"] = p.prediction;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions(std::string_view text,
                                          const std::string &source) {
  std::vector<Prediction> out;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty())
      continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(),
                     j.at("prediction").get<std::string>()});
    } catch (const nlohmann::json::exception &e) {
      throw DataError(source + ": line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return out;
}

std::vector<EvalRow> align(std::span<const Prediction> predictions,
                           const data::Dataset &references) {
  std::unordered_map<std::string_view, std::size_t> by_id;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (!by_id.emplace(predictions[i].id, i).second)
      throw DataError("duplicate prediction id \"" + predictions[i].id + "\"");
  std::vector<EvalRow> rows;
  rows.reserve(references.size());
  for (const auto &r : references) {
    auto it = by_id.find(r.id);
    if (it == by_id.end())
      throw DataError("reference id \"" + r.id + "\" has no prediction");
    rows.push_back({r.id, r.task, predictions[it->second].prediction, r.output});
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    for (const auto &p : predictions)
      if (by_id.contains(p.id))
        throw DataError("prediction id \"" + p.id + "\" has no reference");
  }
  return rows;
}

}  // namespace rxnelicit::metrics
