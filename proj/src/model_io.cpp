#include "gaunet/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json_helpers.hpp"

namespace gaunet {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  json j;
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = to_string(net.activation);
  j["leaky_slope"] = net.leaky_slope;
  json weights = json::array();
  json biases = json::array();
  for (int l = 0; l < net.layer_count(); ++l) {
    weights.push_back(net.weights[l].a);
    biases.push_back(net.biases[l]);
  }
  j["weights"] = weights;
  j["biases"] = biases;
  return j;
}

Mlp mlp_from_json(const json& j, const std::string& where) {
  Mlp net;
  try {
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    net.activation = activation_from_string(j.at("activation").get<std::string>());
    net.leaky_slope = j.at("leaky_slope").get<double>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (net.layer_sizes.size() < 2 || weights.size() != net.layer_sizes.size() - 1 ||
        biases.size() != weights.size())
      throw std::invalid_argument("layer count mismatch");
    for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
      int out = net.layer_sizes[l + 1];
      int in = net.layer_sizes[l];
      Matrix w(out, in);
      auto wa = weights.at(l).get<std::vector<double>>();
      if (static_cast<int>(wa.size()) != out * in) throw std::invalid_argument("weight array size mismatch");
      w.a = std::move(wa);
      net.weights.push_back(std::move(w));
      auto b = biases.at(l).get<std::vector<double>>();
      if (static_cast<int>(b.size()) != out) throw std::invalid_argument("bias array size mismatch");
      net.biases.push_back(std::move(b));
    }
  } catch (const std::exception& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  for (const auto& w : net.weights)
    for (double v : w.a)
      if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite parameter");
  for (const auto& b : net.biases)
    for (double v : b)
      if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite parameter");
  return net;
}

json standardizer_to_json(const Standardizer& st) {
  json j;
  j["mean"] = st.mean;
  j["stdev"] = st.stdev;
  j["min"] = st.min;
  j["max"] = st.max;
  j["zero_variance"] = st.zero_variance;
  return j;
}

Standardizer standardizer_from_json(const json& j) {
  Standardizer st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.stdev = j.at("stdev").get<std::vector<double>>();
  st.min = j.at("min").get<std::vector<double>>();
  st.max = j.at("max").get<std::vector<double>>();
  st.zero_variance = j.at("zero_variance").get<std::vector<std::uint8_t>>();
  if (st.stdev.size() != st.mean.size() || st.min.size() != st.mean.size() ||
      st.max.size() != st.mean.size() || st.zero_variance.size() != st.mean.size())
    throw std::invalid_argument("standardizer: field lengths disagree");
  return st;
}

}  // namespace

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["max_epochs"] = cfg.max_epochs;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["validation_fraction"] = cfg.validation_fraction;
  j["alpha"] = cfg.penalties.alpha;
  j["alpha_interaction"] = cfg.penalties.alpha_interaction;
  j["beta_clarity"] = cfg.penalties.beta_clarity;
  if (std::isfinite(cfg.importance_threshold)) {
    j["importance_threshold"] = cfg.importance_threshold;
  } else {
    j["importance_threshold"] = "inf";  // nlohmann writes non-finite numbers as null
  }
  j["importance_grid_points"] = cfg.importance_grid_points;
  j["importance_normalize"] = cfg.importance_normalize;
  j["seed"] = cfg.seed;
  j["activation"] = to_string(cfg.activation);
  j["hidden_sizes"] = cfg.hidden_sizes;
  j["leaky_slope"] = cfg.leaky_slope;
  j["lr_decay_factor"] = cfg.lr_decay_factor;
  j["lr_decay_patience"] = cfg.lr_decay_patience;
  json groups = json::array();
  for (const auto& g : cfg.share_groups)
    groups.push_back({{"variable", g.variable}, {"alternatives", g.alternatives}});
  j["share_groups"] = groups;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
  cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
  cfg.penalties.alpha = j.value("alpha", cfg.penalties.alpha);
  cfg.penalties.alpha_interaction = j.value("alpha_interaction", cfg.penalties.alpha_interaction);
  cfg.penalties.beta_clarity = j.value("beta_clarity", cfg.penalties.beta_clarity);
  if (j.contains("importance_threshold")) {
    const auto& t = j.at("importance_threshold");
    cfg.importance_threshold = t.is_string() ? std::numeric_limits<double>::infinity()
                                             : t.get<double>();
  }
  cfg.importance_grid_points = j.value("importance_grid_points", cfg.importance_grid_points);
  cfg.importance_normalize = j.value("importance_normalize", cfg.importance_normalize);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("activation")) cfg.activation = activation_from_string(j.at("activation"));
  cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
  cfg.leaky_slope = j.value("leaky_slope", cfg.leaky_slope);
  cfg.lr_decay_factor = j.value("lr_decay_factor", cfg.lr_decay_factor);
  cfg.lr_decay_patience = j.value("lr_decay_patience", cfg.lr_decay_patience);
  if (j.contains("share_groups")) {
    cfg.share_groups.clear();
    for (const auto& g : j.at("share_groups"))
      cfg.share_groups.push_back(
          {g.at("variable").get<std::string>(),
           g.value("alternatives", std::vector<std::string>{})});
  }
  cfg.validate();
  return cfg;
}

std::string model_to_json(const FittedModel& model) {
  model.utility.validate();
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = to_string(model.utility.kind);
  json alts = json::array();
  for (int i = 0; i < model.utility.alternatives.alternative_count(); ++i)
    alts.push_back({{"name", model.utility.alternatives.names[i]},
                    {"variables", model.utility.alternatives.variables[i]}});
  j["alternatives"] = alts;
  j["ascs"] = model.utility.ascs;

  json shapes = json::array();
  for (const auto& s : model.utility.shapes)
    shapes.push_back({{"alt", s.alt}, {"var", s.var}, {"net", s.net}, {"omega", s.omega}});
  j["shapes"] = shapes;
  json nets = json::array();
  for (const auto& net : model.utility.nets) nets.push_back(mlp_to_json(net));
  j["nets"] = nets;
  j["omegas"] = model.utility.omegas;

  json inters = json::array();
  for (const auto& q : model.utility.interactions)
    inters.push_back({{"alt", q.alt}, {"var_a", q.var_a}, {"var_b", q.var_b}, {"net", q.net}, {"omega", q.omega}});
  j["interactions"] = inters;
  json inets = json::array();
  for (const auto& net : model.utility.interaction_nets) inets.push_back(mlp_to_json(net));
  j["interaction_nets"] = inets;
  j["interaction_omegas"] = model.utility.interaction_omegas;

  json groups = json::array();
  for (const auto& g : model.utility.share_groups)
    groups.push_back({{"variable", g.variable}, {"alternatives", g.alternatives}});
  j["share_groups"] = groups;

  j["linear_weights"] = model.utility.linear_weights;
  json dnets = json::array();
  for (const auto& net : model.utility.dense_nets) dnets.push_back(mlp_to_json(net));
  j["dense_nets"] = dnets;

  j["standardizer"] = standardizer_to_json(model.standardizer);
  j["train_config"] = train_config_to_json(model.config);
  j["seed"] = model.seed;
  j["provenance"] = model.provenance;
  return j.dump(2);
}

FittedModel model_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("model file '" + origin + "' is not valid JSON: " + e.what());
  }
  auto fail = [&](const std::string& what) -> std::invalid_argument {
    return std::invalid_argument("model file '" + origin + "': " + what);
  };
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    const std::string current(kModelSchemaVersion);
    if (version.substr(0, version.find('.')) != current.substr(0, current.find('.')))
      throw fail("unsupported schema version '" + version + "'");

    FittedModel out;
    out.utility.kind = model_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& a : j.at("alternatives")) {
      out.utility.alternatives.names.push_back(a.at("name").get<std::string>());
      out.utility.alternatives.variables.push_back(a.at("variables").get<std::vector<std::string>>());
    }
    out.utility.ascs = j.at("ascs").get<std::vector<double>>();
    for (const auto& s : j.at("shapes"))
      out.utility.shapes.push_back({s.at("alt").get<int>(), s.at("var").get<int>(),
                                    s.at("net").get<int>(), s.at("omega").get<int>()});
    const auto& nets = j.at("nets");
    for (size_t i = 0; i < nets.size(); ++i)
      out.utility.nets.push_back(mlp_from_json(nets.at(i), "nets[" + std::to_string(i) + "]"));
    out.utility.omegas = j.at("omegas").get<std::vector<double>>();
    for (const auto& q : j.at("interactions"))
      out.utility.interactions.push_back({q.at("alt").get<int>(), q.at("var_a").get<int>(),
                                          q.at("var_b").get<int>(), q.at("net").get<int>(),
                                          q.at("omega").get<int>()});
    const auto& inets = j.at("interaction_nets");
    for (size_t i = 0; i < inets.size(); ++i)
      out.utility.interaction_nets.push_back(
          mlp_from_json(inets.at(i), "interaction_nets[" + std::to_string(i) + "]"));
    out.utility.interaction_omegas = j.at("interaction_omegas").get<std::vector<double>>();
    for (const auto& g : j.at("share_groups"))
      out.utility.share_groups.push_back(
          {g.at("variable").get<std::string>(), g.at("alternatives").get<std::vector<std::string>>()});
    out.utility.linear_weights = j.at("linear_weights").get<std::vector<std::vector<double>>>();
    const auto& dnets = j.at("dense_nets");
    for (size_t i = 0; i < dnets.size(); ++i)
      out.utility.dense_nets.push_back(mlp_from_json(dnets.at(i), "dense_nets[" + std::to_string(i) + "]"));

    out.standardizer = standardizer_from_json(j.at("standardizer"));
    out.config = train_config_from_json(j.at("train_config"));
    out.seed = j.at("seed").get<std::uint64_t>();
    out.provenance = j.at("provenance").get<std::string>();

    for (double v : out.utility.ascs)
      if (!std::isfinite(v)) throw fail("non-finite asc");
    for (double v : out.utility.omegas)
      if (!std::isfinite(v)) throw fail("non-finite omega");
    for (double v : out.utility.interaction_omegas)
      if (!std::isfinite(v)) throw fail("non-finite interaction omega");
    for (const auto& w : out.utility.linear_weights)
      for (double v : w)
        if (!std::isfinite(v)) throw fail("non-finite linear weight");
    out.utility.validate();
    return out;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
}

void save_model(const FittedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write model file '" + path + "'");
  out << model_to_json(model) << '\n';
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), path);
}

}  // namespace gaunet
