#include "macscale/model_io.hpp"

#include <algorithm>
#include <fstream>

namespace macscale {

nlohmann::json matrix_to_json(const PhaseMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

PhaseMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError("matrix must be a nested array");
  const std::size_t r = j.size(), c = j[0].size();
  PhaseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != c) throw ValidationError("ragged matrix rows");
    for (std::size_t k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) throw ValidationError("matrix entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

MacModel model_from_json(const nlohmann::json& j) {
  try {
    MacModel m;
    m.n_phases = j.at("n_phases").get<int>();
    const int max_down = j.at("max_down_jump").get<int>();
    m.kill_v = j.value("kill_v", 1.0);
    const auto& blocks = j.at("blocks");
    if (max_down < 0) throw ValidationError("max_down_jump must be >= 0");
    m.a_up = matrix_from_json(blocks.at("A1"));
    for (int k = 0; k <= max_down; ++k) {
      const std::string key = k == 0 ? "A0" : "A-" + std::to_string(k);
      if (!blocks.contains(key)) throw ValidationError("missing block " + key);
      m.a_down.push_back(matrix_from_json(blocks.at(key)));
    }
    for (const auto& [key, _] : blocks.items()) {
      if (key == "A1" || key == "A0") continue;
      if (key.rfind("A-", 0) != 0) throw ValidationError("unknown block " + key);
      const int k = std::stoi(key.substr(2));
      if (k < 1 || k > max_down) throw ValidationError("block " + key + " beyond max_down_jump");
    }
    const auto n = static_cast<std::size_t>(std::max(m.n_phases, 0));
    auto square = [&](const PhaseMatrix& b) { return b.rows() == n && b.cols() == n; };
    if (!square(m.a_up)) throw ValidationError("block A1 is not n_phases x n_phases");
    for (std::size_t k = 0; k < m.a_down.size(); ++k)
      if (!square(m.a_down[k]))
        throw ValidationError("block " + std::string(k == 0 ? "A0" : "A-" + std::to_string(k)) +
                              " is not n_phases x n_phases");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

nlohmann::json model_to_json(const MacModel& model) {
  nlohmann::json blocks;
  blocks["A1"] = matrix_to_json(model.a_up);
  for (std::size_t k = 0; k < model.a_down.size(); ++k)
    blocks[k == 0 ? "A0" : "A-" + std::to_string(k)] = matrix_to_json(model.a_down[k]);
  return {{"n_phases", model.n_phases},
          {"max_down_jump", model.max_down_jump()},
          {"kill_v", model.kill_v},
          {"blocks", blocks}};
}

MacModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const MacModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << model_to_json(model).dump(2) << "\n";
}

}  // namespace macscale
