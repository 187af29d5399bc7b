#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "relight/service.hpp"

namespace relight {

inline const std::string kEditHistorySchema = "relight-edit-history/1";

struct EditState {
  std::string scene_id;
  double dyaw_deg = 0.0;
  double dpitch_deg = 0.0;
  double energy_factor = 1.0;
  double dtemp_k = 0.0;
  bool show_mask = false;

  // Throws RequestError(422) outside the slider bounds.
  void validate() const;
  EditRequest to_request() const;
  bool operator==(const EditState&) const = default;
};

// Bounded undo/redo history. The oldest entry falls off past the capacity;
// a fresh edit clears the redo stack.
class EditHistory {
 public:
  static constexpr std::size_t kCapacity = 64;

  explicit EditHistory(EditState initial);

  const EditState& current() const { return undo_.back(); }
  void edit(const EditState& next);
  bool can_undo() const { return undo_.size() > 1; }
  bool can_redo() const { return !redo_.empty(); }
  bool undo();
  bool redo();
  std::size_t size() const { return undo_.size(); }

  // The states from oldest to current.
  std::vector<EditState> states() const { return {undo_.begin(), undo_.end()}; }
  std::string export_json() const;

 private:
  std::deque<EditState> undo_;
  std::vector<EditState> redo_;
};

std::vector<EditState> import_edit_states(const std::string& text);

}  // namespace relight
