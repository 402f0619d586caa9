#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "multistop/model.hpp"

namespace multistop {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

Vector vector_of(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], where);
  return out;
}

Matrix matrix_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v.front().is_array()) {
    throw ParseError(where + ": expected a nonempty array of rows");
  }
  const auto cols = v.front().size();
  Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ParseError(where + ": ragged rows");
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(v[i][j], where);
    }
  }
  return out;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Model model_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("model document must be an object");
  const auto& st = field(doc, "states");
  if (!st.is_number_integer()) throw ParseError("states: expected an integer");
  const int states = st.get<int>();

  Matrix transition = matrix_of(field(doc, "transition"), "transition");
  if (transition.rows() != states) throw ValidationError("transition: row count differs from states");

  const auto& obs = field(doc, "observation");
  ObservationLaw law;
  if (obs.contains("poisson")) {
    const auto& p = obs["poisson"];
    PoissonObservation po;
    po.rates = vector_of(field(p, "rates"), "observation.poisson.rates");
    if (p.contains("max_count")) {
      if (!p["max_count"].is_number_integer()) throw ParseError("max_count: expected an integer");
      po.max_count = p["max_count"].get<int>();
      if (po.max_count < 1) throw ValidationError("observation: max_count must be at least 1");
    }
    law = po;
  } else if (obs.contains("explicit")) {
    law = ExplicitObservation{matrix_of(field(obs["explicit"], "matrix"), "observation.explicit.matrix")};
  } else {
    throw ParseError("observation: expected 'poisson' or 'explicit'");
  }

  const auto& rj = field(doc, "rewards");
  std::vector<Vector> rewards;
  if (rj.is_array() && !rj.empty() && rj.front().is_array()) {
    for (const auto& r : rj) rewards.push_back(vector_of(r, "rewards"));
  } else {
    rewards.push_back(vector_of(rj, "rewards"));
  }

  const auto& sj = field(doc, "stops");
  if (!sj.is_number_integer()) throw ParseError("stops: expected an integer");
  const int stops = sj.get<int>();
  if (rewards.size() != 1 && static_cast<int>(rewards.size()) != stops) {
    throw ValidationError("rewards: need one vector per stop or a single shared vector");
  }

  std::optional<double> penalty;
  if (doc.contains("continue_penalty") && !doc["continue_penalty"].is_null()) {
    penalty = number(doc["continue_penalty"], "continue_penalty");
  }

  return Model(std::move(transition), std::move(law), std::move(rewards),
               number(field(doc, "discount"), "discount"), stops,
               vector_of(field(doc, "initial_belief"), "initial_belief"), penalty);
}

json toml_to_json(const toml::node& node) {
  if (auto* t = node.as_table()) {
    json out = json::object();
    for (auto&& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto* a = node.as_array()) {
    json out = json::array();
    for (auto&& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto* i = node.as_integer()) return i->get();
  if (auto* f = node.as_floating_point()) return f->get();
  if (auto* b = node.as_boolean()) return b->get();
  if (auto* s = node.as_string()) return s->get();
  throw ParseError("unsupported TOML value");
}

}  // namespace

Model parse_model_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

Model parse_model_toml(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string("invalid TOML: ") + std::string(e.description()));
  }
  return model_from_json(toml_to_json(tbl));
}

Model load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto ext = path.extension().string();
  if (ext == ".toml") return parse_model_toml(text);
  if (ext == ".json") return parse_model_json(text);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_model_json(text);
  return parse_model_toml(text);
}

std::string model_to_json(const Model& model, int indent) {
  json doc;
  doc["states"] = model.states();
  doc["transition"] = to_json(model.transition());
  if (const auto* po = std::get_if<PoissonObservation>(&model.observation_law())) {
    doc["observation"]["poisson"] = {{"rates", to_json(po->rates)}, {"max_count", po->max_count}};
  } else {
    doc["observation"]["explicit"] = {
        {"matrix", to_json(std::get<ExplicitObservation>(model.observation_law()).matrix)}};
  }
  if (model.shared_reward()) {
    doc["rewards"] = to_json(model.reward(1));
  } else {
    json rs = json::array();
    for (const auto& r : model.rewards()) rs.push_back(to_json(r));
    doc["rewards"] = rs;
  }
  doc["discount"] = model.discount();
  doc["stops"] = model.stops();
  doc["initial_belief"] = to_json(model.initial_belief());
  if (model.continue_penalty()) doc["continue_penalty"] = *model.continue_penalty();
  return doc.dump(indent);
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace multistop
