#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>

#include "CLI11.hpp"
#include "rexfuse/dataset.hpp"
#include "rexfuse/error.hpp"
#include "rexfuse/hybrid.hpp"
#include "rexfuse/model_file.hpp"
#include "rexfuse/semantic.hpp"

namespace rexfuse::cli {

namespace {

InteractionDataset load_dataset(const DataOptions& data, std::uint64_t seed) {
  return build_dataset(load_interactions(data.data, parse_interaction_format(data.format)), seed);
}

struct Content {
  ItemEmbeddingTable table;
  std::string provider;
};

Content load_content(const ContentOptions& content, const IdIndex& items, std::ostream& err) {
  if (content.item_text && content.embeddings) throw Error("give only one of --item-text and --embeddings");
  if (!content.item_text && !content.embeddings)
    throw Error("hybrid mode requires --item-text or --embeddings (neither was given)");

  Content out;
  std::size_t skipped = 0;
  if (content.item_text) {
    const ItemTextCorpus corpus = load_item_text(*content.item_text, items);
    skipped = corpus.skipped;
    HashedBowProvider provider(corpus, content.dim);
    out.table = provider.embed(items);
    out.provider = provider.describe();
  } else {
    FileEmbeddingProvider provider(*content.embeddings);
    out.table = provider.embed(items);
    skipped = out.table.skipped;
    out.provider = provider.describe();
  }
  if (skipped > 0) err << "warning: skipped " << skipped << " content records with unknown item_id\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text << '\n';
}

void print_trace(const std::vector<double>& trace, std::ostream& out) {
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f\n", e + 1, trace[e]);
    out << buf;
  }
}

}  // namespace

std::uint64_t default_seed() {
  if (const char* env = std::getenv("REXFUSE_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(std::string("REXFUSE_SEED is not an unsigned integer: '") + env + "'");
  }
  return 42;
}

void cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  const ModelMode mode = parse_model_mode(opts.mode);
  const InteractionDataset dataset = load_dataset(opts.data, opts.config.seed);

  ModelFile file;
  file.users = dataset.users;
  file.items = dataset.items;
  file.train_config = opts.config;
  file.split_seed = opts.config.seed;
  file.item_train_counts = item_train_counts(dataset);

  if (mode == ModelMode::mf) {
    auto trained = train_mf(dataset, opts.config);
    print_trace(trained.loss_trace, out);
    file.model = std::move(trained.model);
  } else {
    Content content = load_content(opts.content, dataset.items, err);
    auto trained = train_hybrid(dataset, std::move(content.table), opts.config, opts.alpha,
                                parse_fusion_mode(opts.fusion));
    print_trace(trained.loss_trace, out);
    file.embedding_provider = content.provider;
    file.model = std::move(trained.model);
  }
  save_model(opts.out, file);
  out << "wrote " << opts.out.string() << '\n';
}

EvalReport cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& /*err*/) {
  const ModelFile file = load_model(opts.model);
  const InteractionDataset dataset = load_dataset(opts.data, file.split_seed);

  auto check = [](const IdIndex& model_ids, const IdIndex& data_ids, const char* what) {
    for (const auto& id : data_ids.ids()) {
      if (!model_ids.find(id))
        throw Error(std::string("model/data mismatch: ") + what + " '" + id + "' in the data is unknown to the model");
    }
    if (!(model_ids == data_ids))
      throw Error(std::string("model/data mismatch: ") + what + " index differs from the one the model was trained on");
  };
  check(file.users, dataset.users, "user");
  check(file.items, dataset.items, "item");

  EvalReport report;
  if (const auto* h = std::get_if<HybridModel>(&file.model)) {
    HybridScorer scorer(*h);
    report = evaluate(std::cref(scorer), dataset, opts.eval, opts.workers);
    report.alpha = h->alpha;
  } else {
    report = evaluate(mf_scorer(std::get<FactorModel>(file.model)), dataset, opts.eval, opts.workers);
  }
  out << format_table(std::span<const EvalReport>(&report, 1));
  if (opts.json) write_file(*opts.json, to_json(report));
  return report;
}

void cmd_recommend(const RecommendOptions& opts, std::ostream& out) {
  if (opts.k == 0) throw Error("--k-at must be at least 1");
  const ModelFile file = load_model(opts.model);
  const auto user = file.users.find(opts.user);
  if (!user) throw Error("unknown user '" + opts.user + "'");

  const auto* hybrid = std::get_if<HybridModel>(&file.model);
  if (opts.include_cold && !hybrid) throw Error("--include-cold needs a hybrid model (mf models have no content path)");
  std::unique_ptr<HybridScorer> scorer;
  if (hybrid) scorer = std::make_unique<HybridScorer>(*hybrid);

  const std::size_t n_items = file.items.size();
  std::vector<double> scores(n_items, 0.0);
  std::vector<char> cold(n_items, 0);
  std::unordered_set<std::size_t> excluded;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (file.item_train_counts[i] > 0) {
      scores[i] = scorer ? (*scorer)(*user, i) : predict_mf(std::get<FactorModel>(file.model), *user, i);
    } else if (opts.include_cold && scorer->has_content(i)) {
      scores[i] = scorer->cold_start(*user, i);
      cold[i] = 1;
    } else {
      excluded.insert(i);
    }
  }

  const char* warm_path = hybrid ? "cf+semantic" : "cf";
  std::size_t rank = 0;
  char buf[64];
  for (std::size_t i : topk(scores, opts.k, excluded)) {
    std::snprintf(buf, sizeof buf, "%.6f", scores[i]);
    out << ++rank << ',' << file.items.id(i) << ',' << buf << ',' << (cold[i] ? "cold-start" : warm_path) << '\n';
  }
}

std::vector<EvalReport> cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.alphas.empty()) throw Error("--alphas needs at least one value");
  const InteractionDataset dataset = load_dataset(opts.data, opts.config.seed);
  Content content = load_content(opts.content, dataset.items, err);
  auto reports = sweep_alpha(dataset, content.table, opts.config, opts.alphas, opts.eval,
                             parse_fusion_mode(opts.fusion), opts.workers);
  out << format_table(reports);
  if (opts.json) write_file(*opts.json, to_json(reports));
  return reports;
}

namespace {

void add_data_flags(CLI::App& cmd, DataOptions& data) {
  cmd.add_option("--data", data.data, "Interaction file")->required();
  cmd.add_option("--format", data.format, "movielens100k or csv")
      ->check(CLI::IsMember({"movielens100k", "csv"}))
      ->capture_default_str();
}

void add_content_flags(CLI::App& cmd, ContentOptions& content) {
  auto* text = cmd.add_option("--item-text", content.item_text, "Item text JSON-lines (hashed bag-of-words)");
  auto* emb = cmd.add_option("--embeddings", content.embeddings, "Precomputed item vectors, JSON-lines");
  text->excludes(emb);
  cmd.add_option("--dim", content.dim, "Hashed bag-of-words dimension")->capture_default_str();
}

void add_train_flags(CLI::App& cmd, TrainConfig& config, std::string& fusion) {
  cmd.add_option("--k", config.k, "Latent dimension")->capture_default_str();
  cmd.add_option("--lr", config.learning_rate, "SGD learning rate")->capture_default_str();
  cmd.add_option("--reg", config.reg, "Regularization lambda")->capture_default_str();
  cmd.add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--init-scale", config.init_scale, "Uniform init half-width")->capture_default_str();
  cmd.add_option("--seed", config.seed, "Split and training seed (default $REXFUSE_SEED or 42)");
  cmd.add_option("--fusion", fusion, "additive or convex")
      ->check(CLI::IsMember({"additive", "convex"}))
      ->capture_default_str();
}

void add_eval_flags(CLI::App& cmd, EvalConfig& eval, std::optional<std::filesystem::path>& json, unsigned& workers) {
  cmd.add_option("--k-at", eval.k, "Top-K list length")->capture_default_str();
  cmd.add_option("--threshold", eval.relevance_threshold, "Relevance rating cutoff")->capture_default_str();
  cmd.add_option("--json", json, "Also write the report as JSON");
  cmd.add_option("--workers", workers, "Evaluation threads")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid collaborative-filtering / text-embedding recommender"};
  app.require_subcommand(1);

  TrainOptions train;
  EvaluateOptions evaluate_opts;
  RecommendOptions recommend;
  SweepOptions sweep;

  try {
    const std::uint64_t seed = default_seed();
    train.config.seed = seed;
    sweep.config.seed = seed;
  } catch (const Error& e) {
    err << "rexfuse: error: " << e.what() << '\n';
    return 2;
  }

  auto* train_cmd = app.add_subcommand("train", "Train an mf or hybrid model");
  add_data_flags(*train_cmd, train.data);
  add_content_flags(*train_cmd, train.content);
  add_train_flags(*train_cmd, train.config, train.fusion);
  train_cmd->add_option("--mode", train.mode, "mf or hybrid")
      ->check(CLI::IsMember({"mf", "hybrid"}))
      ->capture_default_str();
  train_cmd->add_option("--alpha", train.alpha, "Fusion weight")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model file to write")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model on its test split");
  eval_cmd->add_option("--model", evaluate_opts.model, "Model file")->required();
  add_data_flags(*eval_cmd, evaluate_opts.data);
  add_eval_flags(*eval_cmd, evaluate_opts.eval, evaluate_opts.json, evaluate_opts.workers);

  auto* rec_cmd = app.add_subcommand("recommend", "Top-K items for one user");
  rec_cmd->add_option("--model", recommend.model, "Model file")->required();
  rec_cmd->add_option("--user", recommend.user, "External user id")->required();
  rec_cmd->add_option("--k-at", recommend.k, "List length")->capture_default_str();
  rec_cmd->add_flag("--include-cold", recommend.include_cold, "Also rank items with no training data");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate one hybrid model per alpha");
  add_data_flags(*sweep_cmd, sweep.data);
  add_content_flags(*sweep_cmd, sweep.content);
  add_train_flags(*sweep_cmd, sweep.config, sweep.fusion);
  sweep_cmd->add_option("--alphas", sweep.alphas, "Comma-separated alpha grid")->required()->delimiter(',');
  add_eval_flags(*sweep_cmd, sweep.eval, sweep.json, sweep.workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) cmd_train(train, out, err);
    if (*eval_cmd) cmd_evaluate(evaluate_opts, out, err);
    if (*rec_cmd) cmd_recommend(recommend, out);
    if (*sweep_cmd) cmd_sweep(sweep, out, err);
  } catch (const std::exception& e) {
    err << "rexfuse: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rexfuse::cli
