#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rexfuse/eval.hpp"
#include "rexfuse/factor_model.hpp"

namespace rexfuse::cli {

/// Seed used when --seed is not given: $REXFUSE_SEED if set, else 42.
std::uint64_t default_seed();

struct DataOptions {
  std::filesystem::path data;
  std::string format = "movielens100k";
};

struct ContentOptions {
  std::optional<std::filesystem::path> item_text;
  std::optional<std::filesystem::path> embeddings;
  std::size_t dim = 64;  ///< hashed bag-of-words dimension
};

struct TrainOptions {
  DataOptions data;
  ContentOptions content;
  std::string mode = "mf";
  double alpha = 0.5;
  std::string fusion = "additive";
  TrainConfig config;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path model;
  DataOptions data;
  EvalConfig eval;
  std::optional<std::filesystem::path> json;
  unsigned workers = 1;
};

struct RecommendOptions {
  std::filesystem::path model;
  std::string user;
  std::size_t k = 10;
  bool include_cold = false;
};

struct SweepOptions {
  DataOptions data;
  ContentOptions content;
  std::vector<double> alphas;
  std::string fusion = "additive";
  TrainConfig config;
  EvalConfig eval;
  std::optional<std::filesystem::path> json;
  unsigned workers = 1;
};

/// Each command writes its normal output to `out` and warnings to `err`,
/// and throws rexfuse::Error on failure.
void cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
EvalReport cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
void cmd_recommend(const RecommendOptions& opts, std::ostream& out);
std::vector<EvalReport> cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

/// Parses and runs a full command line. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rexfuse::cli
