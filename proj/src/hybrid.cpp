#include "rexfuse/hybrid.hpp"

#include <cmath>
#include <string>

#include "rexfuse/error.hpp"
#include "rexfuse/random.hpp"

namespace rexfuse {

namespace {

// Row i holds W E_i (zero for items without content).
Matrix projected_items(const HybridModel& model, std::vector<char>* has_content = nullptr) {
  Matrix out(model.factors.n_items(), model.factors.k());
  if (has_content) has_content->assign(model.factors.n_items(), 0);
  for (const auto& [item, vec] : model.embeddings.vectors) {
    auto v = project(model.projection, vec);
    std::copy(v.begin(), v.end(), out.row(item).begin());
    if (has_content) (*has_content)[item] = 1;
  }
  return out;
}

double fused(const HybridModel& model, double cf, double semantic) {
  return model.cf_weight() * cf + model.semantic_weight() * semantic;
}

}  // namespace

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "additive") return FusionMode::additive;
  if (name == "convex") return FusionMode::convex;
  throw Error("unknown fusion mode '" + std::string(name) + "' (expected additive or convex)");
}

std::string_view to_string(FusionMode mode) { return mode == FusionMode::convex ? "convex" : "additive"; }

void HybridModel::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) throw Error("alpha must be finite and non-negative");
  if (fusion == FusionMode::convex && alpha > 1.0) throw Error("convex fusion needs alpha in [0, 1]");
  if (factors.P.cols() != factors.Q.cols()) throw Error("P and Q disagree on the latent dimension");
  if (projection.latent_dim() != factors.k() || projection.embedding_dim() != embeddings.dim)
    throw Error("projection is " + std::to_string(projection.latent_dim()) + "x" +
                std::to_string(projection.embedding_dim()) + ", expected " + std::to_string(factors.k()) + "x" +
                std::to_string(embeddings.dim));
  for (const auto& [item, vec] : embeddings.vectors) {
    detail::check_index(item, factors.n_items(), "embedding item");
    if (vec.size() != embeddings.dim) throw Error("embedding for item " + std::to_string(item) + " has wrong length");
  }
}

std::vector<double> projected_embedding(const HybridModel& model, std::size_t item) {
  detail::check_index(item, model.factors.n_items(), "item");
  if (const auto* e = model.embeddings.find(item)) return project(model.projection, *e);
  return std::vector<double>(model.factors.k(), 0.0);
}

double semantic_score(const HybridModel& model, std::size_t user, std::size_t item) {
  detail::check_index(user, model.factors.n_users(), "user");
  return dot(model.factors.P.row(user), projected_embedding(model, item));
}

double predict_hybrid(const HybridModel& model, std::size_t user, std::size_t item) {
  const double cf = predict_mf(model.factors, user, item);
  return fused(model, cf, semantic_score(model, user, item));
}

double predict_cold_start(const HybridModel& model, std::size_t user, std::size_t item) {
  detail::check_index(user, model.factors.n_users(), "user");
  detail::check_index(item, model.factors.n_items(), "item");
  const auto* e = model.embeddings.find(item);
  if (!e) throw Error("cold item without content: item " + std::to_string(item) + " has no text or embedding");
  return dot(model.factors.P.row(user), project(model.projection, *e));
}

double loss_regularized(const HybridModel& model, std::span<const Rating> data, double reg) {
  if (data.empty()) throw Error("objective over an empty dataset");
  const Matrix projected = projected_items(model);
  const auto& P = model.factors.P;
  const auto& Q = model.factors.Q;
  double sum = 0.0;
  for (const auto& r : data) {
    detail::check_index(r.user, P.rows(), "user");
    detail::check_index(r.item, Q.rows(), "item");
    auto pu = P.row(r.user);
    const double e = fused(model, dot(pu, Q.row(r.item)), dot(pu, projected.row(r.item))) - r.value;
    sum += e * e + reg * (squared_norm(pu) + squared_norm(Q.row(r.item)));
  }
  return sum / static_cast<double>(data.size()) + reg * model.projection.weights.squared_norm();
}

HybridGradient objective_gradient(const HybridModel& model, std::span<const Rating> data, double reg) {
  if (data.empty()) throw Error("gradient over an empty dataset");
  const auto& P = model.factors.P;
  const auto& Q = model.factors.Q;
  const Matrix& W = model.projection.weights;
  const std::size_t k = model.factors.k();
  const Matrix projected = projected_items(model);
  HybridGradient grad{Matrix(P.rows(), k), Matrix(Q.rows(), k), Matrix(W.rows(), W.cols())};
  const double scale = 2.0 / static_cast<double>(data.size());
  const double cf_w = model.cf_weight();
  const double sem_w = model.semantic_weight();

  for (const auto& r : data) {
    auto pu = P.row(r.user);
    auto qi = Q.row(r.item);
    auto vi = projected.row(r.item);
    const double e = fused(model, dot(pu, qi), dot(pu, vi)) - r.value;
    auto gp = grad.P.row(r.user);
    auto gq = grad.Q.row(r.item);
    for (std::size_t f = 0; f < k; ++f) {
      gp[f] += scale * (e * (cf_w * qi[f] + sem_w * vi[f]) + reg * pu[f]);
      gq[f] += scale * (e * cf_w * pu[f] + reg * qi[f]);
    }
    if (const auto* emb = model.embeddings.find(r.item)) {
      for (std::size_t f = 0; f < k; ++f) {
        const double coeff = scale * e * sem_w * pu[f];
        auto gw = grad.W.row(f);
        for (std::size_t d = 0; d < gw.size(); ++d) gw[d] += coeff * (*emb)[d];
      }
    }
  }
  for (std::size_t n = 0; n < W.values().size(); ++n) grad.W.values()[n] += 2.0 * reg * W.values()[n];
  return grad;
}

HybridTrainResult train_hybrid(const InteractionDataset& dataset, ItemEmbeddingTable embeddings,
                               const TrainConfig& config, double alpha, FusionMode fusion) {
  config.validate();
  if (dataset.train.empty()) throw Error("training split is empty");
  if (embeddings.dim == 0 || embeddings.vectors.empty())
    throw Error("hybrid training needs an embedding for at least one item");

  HybridTrainResult result;
  HybridModel& model = result.model;
  model.factors = init_factors(dataset.users.size(), dataset.items.size(), config);
  model.projection.weights = Matrix(config.k, embeddings.dim);
  Rng rng(derive_seed(config.seed, "projection"));
  for (double& x : model.projection.weights.values()) x = rng.symmetric(config.init_scale);
  model.embeddings = std::move(embeddings);
  model.alpha = alpha;
  model.fusion = fusion;
  model.validate();

  const double lr = config.learning_rate;
  const double reg = config.reg;
  const double cf_w = model.cf_weight();
  const double sem_w = model.semantic_weight();
  const std::size_t k = config.k;
  Matrix& W = model.projection.weights;
  std::vector<double> v(k);
  std::vector<double> p_old(k);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t idx : detail::epoch_order(dataset.train.size(), config.seed, epoch)) {
      const Rating& r = dataset.train[idx];
      auto pu = model.factors.P.row(r.user);
      auto qi = model.factors.Q.row(r.item);
      const auto* emb = model.embeddings.find(r.item);
      if (emb)
        v = project(model.projection, *emb);
      else
        std::fill(v.begin(), v.end(), 0.0);

      const double e = cf_w * dot(pu, qi) + sem_w * dot(pu, v) - r.value;
      std::copy(pu.begin(), pu.end(), p_old.begin());
      for (std::size_t f = 0; f < k; ++f) {
        const double p = pu[f];
        const double q = qi[f];
        pu[f] = p - lr * (e * (cf_w * q + sem_w * v[f]) + reg * p);
        qi[f] = q - lr * (e * cf_w * p + reg * q);
      }
      for (std::size_t f = 0; f < k; ++f) {
        auto wf = W.row(f);
        const double coeff = sem_w * e * p_old[f];
        if (emb) {
          for (std::size_t d = 0; d < wf.size(); ++d) wf[d] -= lr * (coeff * (*emb)[d] + reg * wf[d]);
        } else {
          for (double& w : wf) w -= lr * (reg * w);
        }
      }
    }
    const double loss = loss_regularized(model, dataset.train, reg);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
    result.loss_trace.push_back(loss);
  }
  return result;
}

HybridScorer::HybridScorer(const HybridModel& model) : model_(model) {
  projected_ = projected_items(model, &has_content_);
}

double HybridScorer::operator()(std::size_t user, std::size_t item) const {
  auto pu = model_.factors.P.row(user);
  return fused(model_, dot(pu, model_.factors.Q.row(item)), dot(pu, projected_.row(item)));
}

double HybridScorer::cold_start(std::size_t user, std::size_t item) const {
  return dot(model_.factors.P.row(user), projected_.row(item));
}

}  // namespace rexfuse
