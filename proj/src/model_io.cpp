#include "mrc/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mrc/errors.hpp"

namespace mrc {

using nlohmann::json;

namespace {

json summary_json(const SolveSummary& s) {
  return {{"method", s.method},     {"iterations", s.iterations}, {"gamma", s.gamma},
          {"certified", s.certified}, {"raw_value", s.raw_value},   {"stop_reason", s.stop_reason}};
}

SolveSummary summary_from(const json& j) {
  SolveSummary s;
  s.method = j.at("method").get<std::string>();
  s.iterations = j.at("iterations").get<std::size_t>();
  s.gamma = j.at("gamma").get<double>();
  s.certified = j.at("certified").get<bool>();
  s.raw_value = j.at("raw_value").get<double>();
  s.stop_reason = j.at("stop_reason").get<std::string>();
  return s;
}

json matrix_json(const DenseMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

DenseMatrix matrix_from(const json& j) {
  DenseMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw InputError("matrix data has the wrong length");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

}  // namespace

std::string serialize_model(const MrcModel& model) {
  const FeatureMapSpec& spec = model.features->spec();
  const LambdaProvenance& prov = model.uncertainty.provenance;
  json j;
  j["format"] = "mrc-model";
  j["version"] = kModelFormatVersion;
  j["variant"] = to_string(model.variant);
  j["feature_spec"] = {{"kind", to_string(spec.kind)},
                       {"num_classes", spec.num_classes},
                       {"input_dim", spec.input_dim},
                       {"num_frequencies", spec.num_frequencies},
                       {"sigma", spec.sigma},
                       {"seed", spec.seed},
                       {"constant_feature", spec.constant_feature},
                       {"feature_bound", spec.feature_bound}};
  j["normalization"] = {{"mean", model.normalization.mean}, {"stddev", model.normalization.stddev}};
  j["label_names"] = model.label_names;
  j["uncertainty"] = {{"tau", model.uncertainty.tau},
                      {"lambda", model.uncertainty.lambda},
                      {"mode", to_string(prov.mode)},
                      {"delta", prov.delta},
                      {"lambda0", prov.lambda0},
                      {"feature_bound", prov.feature_bound},
                      {"family_size", prov.family_size},
                      {"rademacher_r", prov.rademacher_r},
                      {"repaired", prov.repaired}};
  j["mu_star"] = model.mu_star;
  j["phi_star"] = model.phi_star;
  j["minimax_risk"] = model.minimax_risk;
  j["lower_bound"] = model.lower_bound ? json(*model.lower_bound) : json(nullptr);
  j["mu_lower"] = model.mu_lower;
  j["anchor"] = matrix_json(model.anchor);
  j["num_pieces"] = model.num_pieces;
  j["solver"]["upper"] = summary_json(model.upper_solve);
  j["solver"]["lower"] = model.lower_solve ? summary_json(*model.lower_solve) : json(nullptr);
  return j.dump(1) + "\n";
}

MrcModel deserialize_model(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "mrc-model") throw InputError("not a model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw InputError("unsupported model format version " + std::to_string(version));
    }
    MrcModel model;
    model.variant = parse_model_variant(j.at("variant").get<std::string>());
    const json& fs = j.at("feature_spec");
    FeatureMapSpec spec;
    spec.kind = parse_feature_kind(fs.at("kind").get<std::string>());
    spec.num_classes = fs.at("num_classes").get<std::size_t>();
    spec.input_dim = fs.at("input_dim").get<std::size_t>();
    spec.num_frequencies = fs.at("num_frequencies").get<std::size_t>();
    spec.sigma = fs.at("sigma").get<double>();
    spec.seed = fs.at("seed").get<std::uint64_t>();
    spec.constant_feature = fs.at("constant_feature").get<bool>();
    spec.feature_bound = fs.at("feature_bound").get<double>();
    model.features = std::make_shared<const FeatureMap>(spec);

    model.normalization.mean = j.at("normalization").at("mean").get<Vector>();
    model.normalization.stddev = j.at("normalization").at("stddev").get<Vector>();
    model.label_names = j.at("label_names").get<std::vector<std::string>>();
    const json& u = j.at("uncertainty");
    model.uncertainty.tau = u.at("tau").get<Vector>();
    model.uncertainty.lambda = u.at("lambda").get<Vector>();
    LambdaProvenance& prov = model.uncertainty.provenance;
    prov.mode = parse_lambda_mode(u.at("mode").get<std::string>());
    prov.delta = u.at("delta").get<double>();
    prov.lambda0 = u.at("lambda0").get<double>();
    prov.feature_bound = u.at("feature_bound").get<double>();
    prov.family_size = u.at("family_size").get<std::size_t>();
    prov.rademacher_r = u.at("rademacher_r").get<double>();
    prov.repaired = u.at("repaired").get<bool>();

    model.mu_star = j.at("mu_star").get<Vector>();
    model.phi_star = j.at("phi_star").get<double>();
    model.minimax_risk = j.at("minimax_risk").get<double>();
    if (!j.at("lower_bound").is_null()) model.lower_bound = j.at("lower_bound").get<double>();
    model.mu_lower = j.at("mu_lower").get<Vector>();
    model.anchor = matrix_from(j.at("anchor"));
    model.num_pieces = j.at("num_pieces").get<std::size_t>();
    model.upper_solve = summary_from(j.at("solver").at("upper"));
    if (!j.at("solver").at("lower").is_null()) model.lower_solve = summary_from(j.at("solver").at("lower"));

    const std::size_t m = model.features->size();
    if (model.mu_star.size() != m || model.uncertainty.tau.size() != m || model.uncertainty.lambda.size() != m) {
      throw InputError("parameter vectors do not match the feature map");
    }
    if (model.label_names.size() != spec.num_classes) throw InputError("label names do not match the class count");
    return model;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const MrcModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << serialize_model(model);
  if (!out) throw InputError(path.string() + ": write failed");
}

MrcModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open model file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return deserialize_model(buffer.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace mrc
