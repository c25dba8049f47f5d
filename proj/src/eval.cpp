#include "rexfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "rexfuse/error.hpp"

namespace rexfuse {

void EvalConfig::validate() const {
  if (k == 0) throw Error("K must be at least 1");
  if (!std::isfinite(relevance_threshold)) throw Error("relevance threshold must be finite");
}

std::vector<std::size_t> topk(std::span<const double> scores, std::size_t k,
                              const std::unordered_set<std::size_t>& exclude) {
  std::vector<std::size_t> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!exclude.contains(i)) candidates.push_back(i);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    better);
  candidates.resize(n);
  return candidates;
}

std::vector<std::size_t> topk(const Scorer& scorer, std::size_t user, std::size_t n_items, std::size_t k,
                              const std::unordered_set<std::size_t>& exclude) {
  std::vector<double> scores(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (!exclude.contains(i)) scores[i] = scorer(user, i);
  }
  return topk(scores, k, exclude);
}

PrecisionRecall precision_recall(const Recommendations& recommendations, std::span<const Rating> test,
                                 double threshold) {
  std::map<std::size_t, std::unordered_set<std::size_t>> relevant;
  for (const auto& r : test) {
    if (r.value >= threshold) relevant[r.user].insert(r.item);
  }
  if (relevant.empty()) throw Error("no user has a relevant test item; precision/recall undefined");

  std::size_t hits = 0, recommended = 0, n_relevant = 0;
  for (const auto& [user, items] : relevant) {
    n_relevant += items.size();
    auto it = recommendations.find(user);
    if (it == recommendations.end()) continue;
    recommended += it->second.size();
    for (std::size_t item : it->second) hits += items.contains(item) ? 1 : 0;
  }
  PrecisionRecall out;
  out.n_users = relevant.size();
  out.precision = recommended == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(recommended);
  out.recall = static_cast<double>(hits) / static_cast<double>(n_relevant);
  return out;
}

double coverage(const Recommendations& recommendations, std::size_t n_items) {
  if (n_items == 0) throw Error("coverage of an empty catalog");
  std::unordered_set<std::size_t> seen;
  for (const auto& [user, items] : recommendations) seen.insert(items.begin(), items.end());
  return static_cast<double>(seen.size()) / static_cast<double>(n_items);
}

double rmse(const Scorer& scorer, std::span<const Rating> test) {
  std::vector<PredictionPair> pairs;
  pairs.reserve(test.size());
  for (const auto& r : test) pairs.push_back({scorer(r.user, r.item), r.value});
  return std::sqrt(loss_mse(pairs));
}

Recommendations recommend_for_test_users(const Scorer& scorer, const InteractionDataset& dataset,
                                         const EvalConfig& config, unsigned workers) {
  config.validate();

  std::vector<std::size_t> users;
  {
    std::vector<char> has_relevant(dataset.users.size(), 0);
    for (const auto& r : dataset.test) {
      if (r.value >= config.relevance_threshold) has_relevant[r.user] = 1;
    }
    for (std::size_t u = 0; u < has_relevant.size(); ++u) {
      if (has_relevant[u]) users.push_back(u);
    }
  }
  std::vector<std::unordered_set<std::size_t>> seen(dataset.users.size());
  if (config.exclude_train) {
    for (const auto& r : dataset.train) seen[r.user].insert(r.item);
  }

  std::vector<std::vector<std::size_t>> lists(users.size());
  auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t n = first; n < users.size(); n += stride) {
      const std::size_t u = users[n];
      lists[n] = topk(scorer, u, dataset.items.size(), config.k, seen[u]);
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
  }

  Recommendations recs;
  for (std::size_t n = 0; n < users.size(); ++n) recs.emplace(users[n], std::move(lists[n]));
  return recs;
}

EvalReport evaluate(const Scorer& scorer, const InteractionDataset& dataset, const EvalConfig& config,
                    unsigned workers) {
  if (dataset.test.empty()) throw Error("test split is empty");
  const Recommendations recs = recommend_for_test_users(scorer, dataset, config, workers);

  EvalReport report;
  const auto pr = precision_recall(recs, dataset.test, config.relevance_threshold);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.n_users_evaluated = pr.n_users;
  report.coverage = coverage(recs, dataset.items.size());
  report.rmse = rmse(scorer, dataset.test);
  return report;
}

Scorer mf_scorer(const FactorModel& model) {
  return [&model](std::size_t u, std::size_t i) { return dot(model.P.row(u), model.Q.row(i)); };
}

std::vector<EvalReport> sweep_alpha(const InteractionDataset& dataset, const ItemEmbeddingTable& embeddings,
                                    const TrainConfig& config, std::span<const double> alphas,
                                    const EvalConfig& eval_config, FusionMode fusion, unsigned workers) {
  if (alphas.empty()) throw Error("alpha sweep needs at least one value");
  std::vector<EvalReport> reports;
  for (double alpha : alphas) {
    auto trained = train_hybrid(dataset, embeddings, config, alpha, fusion);
    HybridScorer scorer(trained.model);
    auto report = evaluate(std::cref(scorer), dataset, eval_config, workers);
    report.alpha = alpha;
    reports.push_back(report);
  }
  return reports;
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.alpha ? nlohmann::ordered_json(*r.alpha) : nlohmann::ordered_json(nullptr);
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["coverage"] = r.coverage;
  j["rmse"] = r.rmse;
  j["n_users_evaluated"] = r.n_users_evaluated;
  return j;
}

}  // namespace

std::string to_json(const EvalReport& report) { return report_json(report).dump(); }

std::string to_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump();
}

std::string format_table(std::span<const EvalReport> reports) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %10s %10s %8s\n", "alpha", "Precision", "Recall", "Coverage",
                "RMSE", "users");
  out += buf;
  for (const auto& r : reports) {
    char alpha[32];
    if (r.alpha)
      std::snprintf(alpha, sizeof alpha, "%.4g", *r.alpha);
    else
      std::snprintf(alpha, sizeof alpha, "-");
    std::snprintf(buf, sizeof buf, "%-8s %10.6f %10.6f %10.6f %10.6f %8zu\n", alpha, r.precision, r.recall,
                  r.coverage, r.rmse, r.n_users_evaluated);
    out += buf;
  }
  return out;
}

}  // namespace rexfuse
