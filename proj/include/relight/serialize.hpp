#pragma once

#include <json.hpp>

#include "relight/light_model.hpp"
#include "relight/renderer.hpp"

namespace relight {

using Json = nlohmann::json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

Json to_json(const LightParams& l);
LightParams light_from_json(const Json& j);

Json to_json(const DeltaL& d);
DeltaL delta_from_json(const Json& j);

Json to_json(const CameraPose& c);
CameraPose camera_from_json(const Json& j);

Json to_json(const Material& m);
Material material_from_json(const Json& j);

Json to_json(const SceneSpec& s);
SceneSpec scene_from_json(const Json& j);

Json to_json(const RenderOptions& o);
RenderOptions render_options_from_json(const Json& j);

const char* shape_name(Shape s);
const char* light_kind_name(LightKind k);

}  // namespace relight
