#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "careerpath/agents.hpp"
#include "careerpath/env.hpp"
#include "careerpath/eval.hpp"
#include "careerpath/forest.hpp"
#include "careerpath/market.hpp"
#include "careerpath/models.hpp"

namespace careerpath {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// Bad or incompatible document. `field` is a dotted path when known.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

Json job_to_json(JobId job);
JobId job_from_json(const Json& j, const std::string& field);

// Config documents. Seeds are not part of these; the pipeline derives them.
// from_json rejects unknown keys and keeps defaults for missing ones.
Json to_json(const SynthConfig& c);
Json to_json(const ForestParams& p);
Json to_json(const EnvConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const NetConfig& c);
void from_json(const Json& j, SynthConfig& c, const std::string& field);
void from_json(const Json& j, ForestParams& p, const std::string& field);
void from_json(const Json& j, EnvConfig& c, const std::string& field);
void from_json(const Json& j, TrainConfig& c, const std::string& field);
void from_json(const Json& j, NetConfig& c, const std::string& field);

// Model documents. Trees are stored as parallel flat node arrays.
Json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const Json& j, const std::string& field);
Json to_json(const ForestClassifier& f);
Json to_json(const ForestRegressor& f);
ForestClassifier classifier_from_json(const Json& j, const std::string& field);
ForestRegressor regressor_from_json(const Json& j, const std::string& field);
Json to_json(const TransitionModel& m);
TransitionModel transition_model_from_json(const Json& j);
Json to_json(const SalaryModel& m);
SalaryModel salary_model_from_json(const Json& j);
Json to_json(const Mlp& net);
Mlp mlp_from_json(const Json& j, const std::string& field);
Json to_json(const QTable& table);
QTable qtable_from_json(const Json& j, const std::string& field);

// Trained policy plus what is needed to rebuild it.
struct PolicyArtifact {
  std::string algorithm;  // sarsa, qlearning, dqn, a2c, greedy_common, greedy_her
  StateRepresentation representation = StateRepresentation::LastJob;
  std::vector<JobId> catalog;
  EnvConfig env;
  std::optional<QTable> table;
  std::optional<Mlp> net;     // DQN Q-network or A2C actor
  std::optional<Mlp> critic;  // A2C

  std::unique_ptr<Policy> make_policy(bool stochastic = true) const;
};

Json to_json(const PolicyArtifact& a);
PolicyArtifact policy_artifact_from_json(const Json& j);

// Whole-file helpers. Documents carry `format_version` and `kind` at the top.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);
void check_document(const Json& doc, std::string_view kind);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the artifact root, '/' separated
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// Every regular file under `root` except manifest.json, sorted by path.
std::vector<ManifestEntry> scan_artifacts(const std::filesystem::path& root);

// Paths whose hash or size differ from the manifest, plus missing files.
std::vector<std::string> verify_manifest(const std::filesystem::path& root);

}  // namespace careerpath
