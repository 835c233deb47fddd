#include "careerpath/persist.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace careerpath {

namespace {

std::string join(const std::string& field, std::string_view key) {
  return field.empty() ? std::string(key) : field + "." + std::string(key);
}

// Reads the keys of one JSON object, tracking which ones were consumed.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string field) : j_(j), field_(std::move(field)) {
    if (!j_.is_object()) throw FormatError(field_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& at(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw FormatError(join(field_, key), "missing");
    return j_.at(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(j_.at(key), join(field_, key));
  }

  template <typename T>
  T required(const char* key) {
    return convert<T>(at(key), join(field_, key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw FormatError(join(field_, key), "unknown field");
  }

  template <typename T>
  static T convert(const Json& v, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw FormatError(field, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw FormatError(field, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw FormatError(field, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw FormatError(field, "expected a nonnegative integer");
      return v.get<T>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer()) throw FormatError(field, "expected an integer");
      return v.get<T>();
    }
  }

 private:
  const Json& j_;
  std::string field_;
  std::set<std::string, std::less<>> seen_;
};

Json document(std::string_view kind) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = kind;
  return doc;
}

std::string_view alpha_schedule_name(AlphaSchedule s) {
  return s == AlphaSchedule::Constant ? "constant" : "inverse_visits";
}

AlphaSchedule parse_alpha_schedule(const std::string& text, const std::string& field) {
  if (text == "constant") return AlphaSchedule::Constant;
  if (text == "inverse_visits") return AlphaSchedule::InverseVisits;
  throw FormatError(field, "unknown schedule '" + text + "' (expected constant or inverse_visits)");
}

template <typename T>
std::vector<T> array_of(const Json& v, const std::string& field) {
  if (!v.is_array()) throw FormatError(field, "expected an array");
  std::vector<T> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(ObjectReader::convert<T>(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Json shaped(std::vector<std::size_t> shape, const std::vector<double>& data) {
  Json j;
  j["shape"] = shape;
  j["data"] = data;
  return j;
}

std::vector<double> shaped_from_json(const Json& j, const std::vector<std::size_t>& expect_shape,
                                     const std::string& field) {
  ObjectReader r(j, field);
  const auto shape = array_of<std::size_t>(r.at("shape"), join(field, "shape"));
  if (shape != expect_shape) throw FormatError(join(field, "shape"), "does not match the layer dimensions");
  auto data = array_of<double>(r.at("data"), join(field, "data"));
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (data.size() != n) throw FormatError(join(field, "data"), "length does not match shape");
  for (double x : data)
    if (!std::isfinite(x)) throw FormatError(join(field, "data"), "non-finite value");
  r.finish();
  return data;
}

std::vector<JobId> catalog_from_json(const Json& v, const std::string& field) {
  if (!v.is_array()) throw FormatError(field, "expected an array of jobs");
  std::vector<JobId> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(job_from_json(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Json catalog_to_json(const std::vector<JobId>& catalog) {
  Json j = Json::array();
  for (const auto& job : catalog) j.push_back(job_to_json(job));
  return j;
}

}  // namespace

Json job_to_json(JobId job) { return Json::array({job.occupation, job.industry}); }

JobId job_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw FormatError(field, "expected [occupation, industry]");
  JobId job{j[0].get<int>(), j[1].get<int>()};
  if (job.occupation < 0 || job.industry < 0) throw FormatError(field, "codes must be nonnegative");
  return job;
}

Json to_json(const SynthConfig& c) {
  Json j;
  j["n_employees"] = c.n_employees;
  j["n_occupations"] = c.n_occupations;
  j["n_industries"] = c.n_industries;
  j["duration_median_days"] = c.duration_median_days;
  j["duration_mean_days"] = c.duration_mean_days;
  j["salary_median_eur"] = c.salary_median_eur;
  j["salary_mean_eur"] = c.salary_mean_eur;
  j["records_mean"] = c.records_mean;
  j["records_cap"] = c.records_cap;
  j["occupation_salary_spread"] = c.occupation_salary_spread;
  j["industry_salary_spread"] = c.industry_salary_spread;
  j["senior_salary_premium"] = c.senior_salary_premium;
  j["popularity_exponent"] = c.popularity_exponent;
  j["n_vacancies"] = c.n_vacancies;
  j["hire_intercept"] = c.hire_intercept;
  j["hire_occupation_weight"] = c.hire_occupation_weight;
  j["hire_industry_weight"] = c.hire_industry_weight;
  j["hire_total_weight"] = c.hire_total_weight;
  j["tenure_scale_days"] = c.tenure_scale_days;
  j["search_self"] = c.search_self;
  j["search_same_occupation"] = c.search_same_occupation;
  j["search_same_industry"] = c.search_same_industry;
  j["unqualified_senior_apply_rate"] = c.unqualified_senior_apply_rate;
  j["max_search_attempts"] = c.max_search_attempts;
  j["senior_missing_history_bias"] = c.senior_missing_history_bias;
  return j;
}

void from_json(const Json& j, SynthConfig& c, const std::string& field) {
  ObjectReader r(j, field);
  r.get("n_employees", c.n_employees);
  r.get("n_occupations", c.n_occupations);
  r.get("n_industries", c.n_industries);
  r.get("duration_median_days", c.duration_median_days);
  r.get("duration_mean_days", c.duration_mean_days);
  r.get("salary_median_eur", c.salary_median_eur);
  r.get("salary_mean_eur", c.salary_mean_eur);
  r.get("records_mean", c.records_mean);
  r.get("records_cap", c.records_cap);
  r.get("occupation_salary_spread", c.occupation_salary_spread);
  r.get("industry_salary_spread", c.industry_salary_spread);
  r.get("senior_salary_premium", c.senior_salary_premium);
  r.get("popularity_exponent", c.popularity_exponent);
  r.get("n_vacancies", c.n_vacancies);
  r.get("hire_intercept", c.hire_intercept);
  r.get("hire_occupation_weight", c.hire_occupation_weight);
  r.get("hire_industry_weight", c.hire_industry_weight);
  r.get("hire_total_weight", c.hire_total_weight);
  r.get("tenure_scale_days", c.tenure_scale_days);
  r.get("search_self", c.search_self);
  r.get("search_same_occupation", c.search_same_occupation);
  r.get("search_same_industry", c.search_same_industry);
  r.get("unqualified_senior_apply_rate", c.unqualified_senior_apply_rate);
  r.get("max_search_attempts", c.max_search_attempts);
  r.get("senior_missing_history_bias", c.senior_missing_history_bias);
  r.finish();
}

Json to_json(const ForestParams& p) {
  Json j;
  j["n_trees"] = p.n_trees;
  if (p.max_depth == kUnlimitedDepth)
    j["max_depth"] = nullptr;
  else
    j["max_depth"] = p.max_depth;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["features_per_split"] = p.features_per_split;
  j["bootstrap"] = p.bootstrap;
  return j;
}

void from_json(const Json& j, ForestParams& p, const std::string& field) {
  ObjectReader r(j, field);
  r.get("n_trees", p.n_trees);
  if (r.has("max_depth") && r.at("max_depth").is_null())
    p.max_depth = kUnlimitedDepth;
  else
    r.get("max_depth", p.max_depth);
  r.get("min_samples_leaf", p.min_samples_leaf);
  r.get("features_per_split", p.features_per_split);
  r.get("bootstrap", p.bootstrap);
  r.finish();
}

Json to_json(const EnvConfig& c) {
  Json j;
  j["horizon_steps"] = c.horizon_steps;
  j["step_months"] = c.step_months;
  j["discount"] = c.discount;
  return j;
}

void from_json(const Json& j, EnvConfig& c, const std::string& field) {
  ObjectReader r(j, field);
  r.get("horizon_steps", c.horizon_steps);
  r.get("step_months", c.step_months);
  r.get("discount", c.discount);
  r.finish();
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["episodes"] = c.episodes;
  j["alpha"] = c.alpha;
  j["alpha_schedule"] = alpha_schedule_name(c.alpha_schedule);
  j["alpha_min"] = c.alpha_min;
  j["alpha_exponent"] = c.alpha_exponent;
  j["epsilon"] = {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"decay_fraction", c.epsilon.decay_fraction}};
  if (c.gamma)
    j["gamma"] = *c.gamma;
  else
    j["gamma"] = nullptr;
  j["step_in_state"] = c.step_in_state;
  return j;
}

void from_json(const Json& j, TrainConfig& c, const std::string& field) {
  ObjectReader r(j, field);
  r.get("episodes", c.episodes);
  r.get("alpha", c.alpha);
  if (r.has("alpha_schedule"))
    c.alpha_schedule = parse_alpha_schedule(r.required<std::string>("alpha_schedule"), join(field, "alpha_schedule"));
  r.get("alpha_min", c.alpha_min);
  r.get("alpha_exponent", c.alpha_exponent);
  if (r.has("epsilon")) {
    ObjectReader e(r.at("epsilon"), join(field, "epsilon"));
    e.get("start", c.epsilon.start);
    e.get("end", c.epsilon.end);
    e.get("decay_fraction", c.epsilon.decay_fraction);
    e.finish();
  }
  if (r.has("gamma")) {
    if (r.at("gamma").is_null())
      c.gamma.reset();
    else
      c.gamma = r.required<double>("gamma");
  }
  r.get("step_in_state", c.step_in_state);
  r.finish();
}

Json to_json(const NetConfig& c) {
  Json j;
  j["hidden"] = c.hidden;
  j["activation"] = to_string(c.activation);
  j["learning_rate"] = c.learning_rate;
  j["replay_capacity"] = c.replay_capacity;
  j["batch_size"] = c.batch_size;
  j["target_sync_interval"] = c.target_sync_interval;
  j["warmup_transitions"] = c.warmup_transitions;
  j["train_every"] = c.train_every;
  j["entropy_coef"] = c.entropy_coef;
  j["critic_learning_rate"] = c.critic_learning_rate;
  j["reward_scale"] = c.reward_scale;
  return j;
}

void from_json(const Json& j, NetConfig& c, const std::string& field) {
  ObjectReader r(j, field);
  if (r.has("hidden")) c.hidden = array_of<std::size_t>(r.at("hidden"), join(field, "hidden"));
  if (r.has("activation")) {
    const auto text = r.required<std::string>("activation");
    try {
      c.activation = parse_activation(text);
    } catch (const std::invalid_argument& e) {
      throw FormatError(join(field, "activation"), e.what());
    }
  }
  r.get("learning_rate", c.learning_rate);
  r.get("replay_capacity", c.replay_capacity);
  r.get("batch_size", c.batch_size);
  r.get("target_sync_interval", c.target_sync_interval);
  r.get("warmup_transitions", c.warmup_transitions);
  r.get("train_every", c.train_every);
  r.get("entropy_coef", c.entropy_coef);
  r.get("critic_learning_rate", c.critic_learning_rate);
  r.get("reward_scale", c.reward_scale);
  r.finish();
}

Json to_json(const DecisionTree& tree) {
  const auto& nodes = tree.nodes();
  Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
       value = Json::array(), samples = Json::array();
  for (const auto& n : nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    samples.push_back(n.samples);
  }
  Json j;
  j["n_nodes"] = nodes.size();
  j["feature"] = std::move(feature);
  j["threshold"] = std::move(threshold);
  j["left"] = std::move(left);
  j["right"] = std::move(right);
  j["value"] = std::move(value);
  j["samples"] = std::move(samples);
  return j;
}

DecisionTree tree_from_json(const Json& j, const std::string& field) {
  ObjectReader r(j, field);
  const auto n = r.required<std::size_t>("n_nodes");
  const auto feature = array_of<int>(r.at("feature"), join(field, "feature"));
  const auto threshold = array_of<double>(r.at("threshold"), join(field, "threshold"));
  const auto left = array_of<int>(r.at("left"), join(field, "left"));
  const auto right = array_of<int>(r.at("right"), join(field, "right"));
  const auto value = array_of<double>(r.at("value"), join(field, "value"));
  const auto samples = array_of<std::size_t>(r.at("samples"), join(field, "samples"));
  r.finish();
  if (n == 0) throw FormatError(field, "tree has no nodes");
  if (feature.size() != n || threshold.size() != n || left.size() != n || right.size() != n ||
      value.size() != n || samples.size() != n)
    throw FormatError(field, "node arrays differ in length from n_nodes");
  std::vector<DecisionTree::Node> nodes(n);
  const int count = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i], samples[i]};
    if (node.feature >= 0) {
      // Children come after their parent, so predictions always terminate.
      const int self = static_cast<int>(i);
      if (node.left <= self || node.right <= self || node.left >= count || node.right >= count)
        throw FormatError(field, "node " + std::to_string(i) + " has invalid children");
    }
  }
  return DecisionTree(std::move(nodes));
}

namespace {

template <typename Forest>
Json forest_to_json(const Forest& f, std::string_view kind) {
  Json j = document(kind);
  j["params"] = to_json(f.params());
  j["seed"] = f.params().seed;
  j["n_features"] = f.n_features();
  Json trees = Json::array();
  for (const auto& t : f.trees()) trees.push_back(to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

template <typename Forest>
Forest forest_from_json(const Json& j, std::string_view kind, const std::string& field) {
  ObjectReader r(j, field);
  r.required<int>("format_version");
  if (r.required<std::string>("kind") != kind) throw FormatError(join(field, "kind"), "expected " + std::string(kind));
  ForestParams params;
  from_json(r.at("params"), params, join(field, "params"));
  params.seed = r.required<std::uint64_t>("seed");
  const auto n_features = r.required<std::size_t>("n_features");
  const Json& trees_json = r.at("trees");
  if (!trees_json.is_array() || trees_json.empty()) throw FormatError(join(field, "trees"), "expected trees");
  std::vector<DecisionTree> trees;
  for (std::size_t i = 0; i < trees_json.size(); ++i) {
    const std::string tf = join(field, "trees") + "[" + std::to_string(i) + "]";
    trees.push_back(tree_from_json(trees_json[i], tf));
    for (const auto& node : trees.back().nodes())
      if (node.feature >= static_cast<int>(n_features)) throw FormatError(tf, "split feature out of range");
  }
  r.finish();
  return Forest(std::move(trees), params, n_features);
}

}  // namespace

Json to_json(const ForestClassifier& f) { return forest_to_json(f, "forest_classifier"); }
Json to_json(const ForestRegressor& f) { return forest_to_json(f, "forest_regressor"); }

ForestClassifier classifier_from_json(const Json& j, const std::string& field) {
  return forest_from_json<ForestClassifier>(j, "forest_classifier", field);
}

ForestRegressor regressor_from_json(const Json& j, const std::string& field) {
  return forest_from_json<ForestRegressor>(j, "forest_regressor", field);
}

Json to_json(const TransitionModel& m) {
  Json j = document("transition_model");
  j["representation"] = to_string(m.representation());
  j["catalog"] = catalog_to_json(m.catalog());
  j["classifier"] = to_json(m.classifier());
  return j;
}

TransitionModel transition_model_from_json(const Json& j) {
  check_document(j, "transition_model");
  ObjectReader r(j, "");
  r.at("format_version");
  r.at("kind");
  StateRepresentation repr;
  try {
    repr = parse_representation(r.required<std::string>("representation"));
  } catch (const std::invalid_argument& e) {
    throw FormatError("representation", e.what());
  }
  auto catalog = catalog_from_json(r.at("catalog"), "catalog");
  auto classifier = classifier_from_json(r.at("classifier"), "classifier");
  r.finish();
  if (classifier.n_features() != feature_count(repr))
    throw FormatError("classifier.n_features", "does not match the representation");
  return TransitionModel(repr, std::move(classifier), std::move(catalog));
}

Json to_json(const SalaryModel& m) {
  Json j = document("salary_model");
  Json catalog = Json::array();
  Json table = Json::array();
  for (const auto& [job, salary] : m.table()) {
    catalog.push_back(job_to_json(job));
    table.push_back(salary);
  }
  j["catalog"] = std::move(catalog);
  j["annual_salary_eur"] = std::move(table);  // informational; rebuilt from the regressor
  j["regressor"] = to_json(m.regressor());
  return j;
}

SalaryModel salary_model_from_json(const Json& j) {
  check_document(j, "salary_model");
  ObjectReader r(j, "");
  r.at("format_version");
  r.at("kind");
  auto catalog = catalog_from_json(r.at("catalog"), "catalog");
  const auto table = array_of<double>(r.at("annual_salary_eur"), "annual_salary_eur");
  auto regressor = regressor_from_json(r.at("regressor"), "regressor");
  r.finish();
  if (table.size() != catalog.size()) throw FormatError("annual_salary_eur", "length differs from catalog");
  if (regressor.n_features() != 2) throw FormatError("regressor.n_features", "expected 2");
  SalaryModel model(std::move(regressor), catalog);
  for (std::size_t i = 0; i < catalog.size(); ++i)
    if (model.annual(catalog[i]) != table[i])
      throw FormatError("annual_salary_eur", "table disagrees with the regressor at " + to_string(catalog[i]));
  return model;
}

Json to_json(const Mlp& net) {
  Json j;
  j["dims"] = net.dims();
  j["hidden_activation"] = to_string(net.hidden_activation());
  j["output_activation"] = to_string(net.output_activation());
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::size_t in = net.dims()[l], out = net.dims()[l + 1];
    layers.push_back({{"weight", shaped({out, in}, net.params().weights[l])},
                      {"bias", shaped({out}, net.params().biases[l])}});
  }
  j["layers"] = std::move(layers);
  return j;
}

Mlp mlp_from_json(const Json& j, const std::string& field) {
  ObjectReader r(j, field);
  const auto dims = array_of<std::size_t>(r.at("dims"), join(field, "dims"));
  Activation hidden, output;
  try {
    hidden = parse_activation(r.required<std::string>("hidden_activation"));
    output = parse_activation(r.required<std::string>("output_activation"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(field, e.what());
  }
  Mlp net;
  try {
    net = Mlp(dims, hidden, output);
  } catch (const std::invalid_argument& e) {
    throw FormatError(field, e.what());
  }
  const Json& layers = r.at("layers");
  if (!layers.is_array() || layers.size() != net.layer_count())
    throw FormatError(join(field, "layers"), "expected " + std::to_string(net.layer_count()) + " layers");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::string lf = join(field, "layers") + "[" + std::to_string(l) + "]";
    ObjectReader lr(layers[l], lf);
    net.params().weights[l] = shaped_from_json(lr.at("weight"), {dims[l + 1], dims[l]}, join(lf, "weight"));
    net.params().biases[l] = shaped_from_json(lr.at("bias"), {dims[l + 1]}, join(lf, "bias"));
    lr.finish();
  }
  r.finish();
  return net;
}

Json to_json(const QTable& table) {
  const auto& catalog = table.catalog();
  const std::size_t n = catalog.size();
  // Nonzero entries sorted by (step, state job, action job); unseen pairs read as 0.
  std::vector<std::tuple<int, JobId, JobId, double>> entries;
  for (std::size_t key = 0; key < table.n_state_keys(); ++key)
    for (std::size_t a = 0; a < n; ++a) {
      const double q = table.get(key, a);
      if (q != 0.0) entries.emplace_back(static_cast<int>(key / n), catalog[key % n], catalog[a], q);
    }
  std::sort(entries.begin(), entries.end());
  Json rows = Json::array();
  for (const auto& [step, state, action, q] : entries) {
    Json row;
    if (table.step_in_state()) row["step"] = step;
    row["state"] = job_to_json(state);
    row["action"] = job_to_json(action);
    row["q"] = q;
    rows.push_back(std::move(row));
  }
  Json j;
  j["catalog"] = catalog_to_json(catalog);
  j["horizon_steps"] = table.horizon_steps();
  j["step_in_state"] = table.step_in_state();
  j["entries"] = std::move(rows);
  return j;
}

QTable qtable_from_json(const Json& j, const std::string& field) {
  ObjectReader r(j, field);
  auto catalog = catalog_from_json(r.at("catalog"), join(field, "catalog"));
  const int horizon = r.required<int>("horizon_steps");
  const bool step_in_state = r.required<bool>("step_in_state");
  if (horizon < 1) throw FormatError(join(field, "horizon_steps"), "must be positive");
  std::map<JobId, std::size_t> index;
  for (std::size_t i = 0; i < catalog.size(); ++i)
    if (!index.emplace(catalog[i], i).second) throw FormatError(join(field, "catalog"), "duplicate job");
  QTable table(catalog, horizon, step_in_state);
  const Json& rows = r.at("entries");
  if (!rows.is_array()) throw FormatError(join(field, "entries"), "expected an array");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string ef = join(field, "entries") + "[" + std::to_string(i) + "]";
    ObjectReader er(rows[i], ef);
    int step = 0;
    if (step_in_state) step = er.required<int>("step");
    const JobId state = job_from_json(er.at("state"), join(ef, "state"));
    const JobId action = job_from_json(er.at("action"), join(ef, "action"));
    const double q = er.required<double>("q");
    er.finish();
    auto s = index.find(state);
    auto a = index.find(action);
    if (s == index.end() || a == index.end()) throw FormatError(ef, "job outside the catalog");
    if (step < 0 || step > horizon) throw FormatError(join(ef, "step"), "out of range");
    const std::size_t key = static_cast<std::size_t>(step) * catalog.size() + s->second;
    table.at(key, a->second) = q;
  }
  r.finish();
  return table;
}

std::unique_ptr<Policy> PolicyArtifact::make_policy(bool stochastic) const {
  if (algorithm == "greedy_common") return std::make_unique<GreedyMostCommonPolicy>();
  if (algorithm == "greedy_her") return std::make_unique<GreedyHighestExpectedRewardPolicy>();
  if (algorithm == "sarsa" || algorithm == "qlearning") {
    if (!table) throw FormatError("table", "missing for a tabular policy");
    return std::make_unique<TabularPolicy>(*table, algorithm);
  }
  StateFeaturizer featurizer(catalog, representation, env);
  if (algorithm == "dqn") {
    if (!net) throw FormatError("net", "missing for a dqn policy");
    return std::make_unique<DqnPolicy>(*net, featurizer);
  }
  if (algorithm == "a2c") {
    if (!net || !critic) throw FormatError("net", "actor and critic required for an a2c policy");
    return std::make_unique<A2cPolicy>(*net, *critic, featurizer, stochastic);
  }
  throw FormatError("algorithm", "unknown algorithm '" + algorithm + "'");
}

Json to_json(const PolicyArtifact& a) {
  Json j = document("policy");
  j["algorithm"] = a.algorithm;
  j["representation"] = to_string(a.representation);
  j["env"] = to_json(a.env);
  j["catalog"] = catalog_to_json(a.catalog);
  if (a.table) j["table"] = to_json(*a.table);
  if (a.net) j["net"] = to_json(*a.net);
  if (a.critic) j["critic"] = to_json(*a.critic);
  return j;
}

PolicyArtifact policy_artifact_from_json(const Json& j) {
  check_document(j, "policy");
  ObjectReader r(j, "");
  r.at("format_version");
  r.at("kind");
  PolicyArtifact a;
  a.algorithm = r.required<std::string>("algorithm");
  try {
    a.representation = parse_representation(r.required<std::string>("representation"));
  } catch (const std::invalid_argument& e) {
    throw FormatError("representation", e.what());
  }
  from_json(r.at("env"), a.env, "env");
  a.catalog = catalog_from_json(r.at("catalog"), "catalog");
  if (r.has("table")) a.table = qtable_from_json(r.at("table"), "table");
  if (r.has("net")) a.net = mlp_from_json(r.at("net"), "net");
  if (r.has("critic")) a.critic = mlp_from_json(r.at("critic"), "critic");
  r.finish();
  if (a.table && a.table->catalog() != a.catalog) throw FormatError("table.catalog", "differs from the policy catalog");
  if (a.net) {
    const StateFeaturizer featurizer(a.catalog, a.representation, a.env);
    if (a.net->input_size() != featurizer.size()) throw FormatError("net.dims", "input width does not match the state features");
    if (a.net->output_size() != a.catalog.size()) throw FormatError("net.dims", "output width does not match the catalog");
  }
  a.make_policy();  // validates algorithm and required parts
  return a;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string(), e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << doc.dump(1) << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void check_document(const Json& doc, std::string_view kind) {
  if (!doc.is_object()) throw FormatError("", "document is not an object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    throw FormatError("format_version", "missing");
  const int version = doc["format_version"].get<int>();
  if (version != kFormatVersion)
    throw FormatError("format_version", "unsupported version " + std::to_string(version) + " (this build reads " +
                                            std::to_string(kFormatVersion) + ")");
  if (!doc.contains("kind") || !doc["kind"].is_string() || doc["kind"].get<std::string>() != kind)
    throw FormatError("kind", "expected '" + std::string(kind) + "'");
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

std::vector<ManifestEntry> scan_artifacts(const std::filesystem::path& root) {
  std::vector<ManifestEntry> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), root).generic_string();
    if (rel == "manifest.json") continue;
    out.push_back({rel, sha256_file(entry.path()), entry.file_size()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& root) {
  const Json doc = read_json(root / "manifest.json");
  check_document(doc, "manifest");
  if (!doc.contains("files") || !doc["files"].is_array()) throw FormatError("files", "missing");
  std::vector<std::string> problems;
  std::set<std::string> listed;
  for (const auto& f : doc["files"]) {
    const auto path = f.at("path").get<std::string>();
    listed.insert(path);
    const auto full = root / path;
    if (!std::filesystem::is_regular_file(full)) {
      problems.push_back(path + ": missing");
      continue;
    }
    if (std::filesystem::file_size(full) != f.at("bytes").get<std::uintmax_t>() ||
        sha256_file(full) != f.at("sha256").get<std::string>())
      problems.push_back(path + ": content changed");
  }
  for (const auto& e : scan_artifacts(root))
    if (!listed.contains(e.path)) problems.push_back(e.path + ": not in manifest");
  return problems;
}

}  // namespace careerpath
