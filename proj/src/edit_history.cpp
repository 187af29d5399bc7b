#include "relight/edit_history.hpp"

#include <cmath>

#include "relight/error.hpp"

namespace relight {

namespace {

void check(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi))
    throw RequestError(422, std::string(name) + " is outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

Json state_json(const EditState& s) {
  return {{"scene_id", s.scene_id}, {"dyaw_deg", s.dyaw_deg},   {"dpitch_deg", s.dpitch_deg},
          {"energy_factor", s.energy_factor}, {"dtemp_k", s.dtemp_k}, {"show_mask", s.show_mask}};
}

EditState state_from_json(const Json& j) {
  try {
    EditState s{j.at("scene_id").get<std::string>(), j.at("dyaw_deg").get<double>(), j.at("dpitch_deg").get<double>(),
                j.at("energy_factor").get<double>(),  j.at("dtemp_k").get<double>(),  j.at("show_mask").get<bool>()};
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("edit state: ") + e.what());
  }
}

}  // namespace

void EditState::validate() const {
  check("dyaw_deg", dyaw_deg, -kMaxYawEditDeg, kMaxYawEditDeg);
  check("dpitch_deg", dpitch_deg, -kMaxPitchEditDeg, kMaxPitchEditDeg);
  check("energy_factor", energy_factor, kMinEnergyFactor, kMaxEnergyFactor);
  check("dtemp_k", dtemp_k, -kMaxTempEditK, kMaxTempEditK);
}

EditRequest EditState::to_request() const {
  EditRequest r;
  r.scene_id = scene_id;
  r.dyaw_deg = dyaw_deg;
  r.dpitch_deg = dpitch_deg;
  r.denergy_factor = energy_factor;
  r.dtemp_k = dtemp_k;
  r.show_mask = show_mask;
  return r;
}

EditHistory::EditHistory(EditState initial) {
  initial.validate();
  undo_.push_back(std::move(initial));
}

void EditHistory::edit(const EditState& next) {
  next.validate();
  undo_.push_back(next);
  if (undo_.size() > kCapacity) undo_.pop_front();
  redo_.clear();
}

bool EditHistory::undo() {
  if (!can_undo()) return false;
  redo_.push_back(undo_.back());
  undo_.pop_back();
  return true;
}

bool EditHistory::redo() {
  if (!can_redo()) return false;
  undo_.push_back(redo_.back());
  redo_.pop_back();
  return true;
}

std::string EditHistory::export_json() const {
  Json states = Json::array();
  for (const auto& s : undo_) states.push_back(state_json(s));
  return Json{{"schema", kEditHistorySchema}, {"states", states}}.dump(2) + "\n";
}

std::vector<EditState> import_edit_states(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("edit history is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kEditHistorySchema)
    throw IoError("edit history must carry schema " + kEditHistorySchema);
  if (!j.contains("states") || !j.at("states").is_array()) throw IoError("edit history has no states array");
  std::vector<EditState> out;
  for (const auto& s : j.at("states")) out.push_back(state_from_json(s));
  return out;
}

}  // namespace relight
