#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace victr::cli {

// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kShapeOrConfig = 3,   // ShapeError, ConfigError
  kNumeric = 4,         // ZeroNormError, NonFiniteError, DivergenceError
  kData = 5,            // bundle/checkpoint format errors, SpecError, IoError
  kVocabulary = 6,      // ParseError, DuplicateEntryError, UnknownCategoryError
  kSampling = 7,        // InsufficientClipsError, RangeError
  kEvaluation = 8,      // LabelError, DegenerateClassError, UnknownAblationError
  kGradCheckFailed = 9,
};

int exit_code_for(const std::exception& e);

/// Options shared by every subcommand. Layering: preset, then config file,
/// then each --set in order, then --seed (train.seed and data.seed).
struct CommonOptions {
  std::string preset;
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

RunConfig resolve_config(const CommonOptions& opts);

struct SynthOptions {
  std::string out;  // default <out_dir>/bundles.vctr
};
struct TrainOptions {
  std::string data;        // bundle file; synthetic from data.* when empty
  std::string checkpoint;  // default <out_dir>/checkpoint.vckp
};
struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
};
struct ZeroShotOptions {
  std::string checkpoint;
  std::vector<std::string> data;  // one file per split
  std::string split = "test";
};
struct AblateOptions {
  std::vector<std::string> rows;  // all rows when empty
  std::string data;
};
struct GradCheckOptions {
  bool all_toggles = false;
  double tolerance = 1e-4;
};
struct FlopsOptions {
  std::string scope = "single_logit";
  std::string convention = "mac";
};

// Each returns the process exit status and writes its artifacts plus a
// <subcommand>.manifest.json under out_dir.
int run_synth(const CommonOptions& common, const SynthOptions& opts, std::ostream& out);
int run_train(const CommonOptions& common, const TrainOptions& opts, std::ostream& out);
int run_eval(const CommonOptions& common, const EvalOptions& opts, std::ostream& out);
int run_zeroshot(const CommonOptions& common, const ZeroShotOptions& opts, std::ostream& out);
int run_ablate(const CommonOptions& common, const AblateOptions& opts, std::ostream& out);
int run_gradcheck(const CommonOptions& common, const GradCheckOptions& opts, std::ostream& out);
int run_flops(const CommonOptions& common, const FlopsOptions& opts, std::ostream& out);

}  // namespace victr::cli
