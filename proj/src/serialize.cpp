#include "relight/serialize.hpp"

#include "relight/error.hpp"

namespace relight {

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::sphere: return "sphere";
    case Shape::box: return "box";
    case Shape::plane: return "plane";
  }
  return "sphere";
}

const char* light_kind_name(LightKind k) { return k == LightKind::point ? "point" : "directional"; }

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const Json& j) {
  return guarded("vec3", [&] {
    if (!j.is_array() || j.size() != 3) throw IoError("vec3 must be a 3-element array");
    return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  });
}

Json to_json(const LightParams& l) {
  Json j = {{"kind", light_kind_name(l.kind)},
            {"yaw_rad", l.yaw_rad},
            {"pitch_rad", l.pitch_rad},
            {"energy_lux", l.energy_lux},
            {"temperature_k", l.temperature_k}};
  if (l.kind == LightKind::point) j["position"] = to_json(l.position);
  return j;
}

LightParams light_from_json(const Json& j) {
  return guarded("light", [&] {
    LightParams l;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "point")
      l.kind = LightKind::point;
    else if (kind == "directional")
      l.kind = LightKind::directional;
    else
      throw IoError("unknown light kind '" + kind + "'");
    l.yaw_rad = j.at("yaw_rad").get<double>();
    l.pitch_rad = j.at("pitch_rad").get<double>();
    l.energy_lux = j.at("energy_lux").get<double>();
    l.temperature_k = j.at("temperature_k").get<double>();
    if (l.kind == LightKind::point) l.position = vec3_from_json(j.at("position"));
    l.validate();
    return l;
  });
}

Json to_json(const DeltaL& d) {
  return {{"delta_sh", d.delta_sh},
          {"delta_log_e", d.delta_log_e},
          {"delta_tau", d.delta_tau},
          {"edit", {{"dyaw_rad", d.edit.dyaw_rad}, {"dpitch_rad", d.edit.dpitch_rad}}}};
}

DeltaL delta_from_json(const Json& j) {
  return guarded("delta", [&] {
    DeltaL d;
    const auto sh = j.at("delta_sh").get<std::vector<double>>();
    if (sh.size() != 9) throw IoError("delta_sh must hold 9 values");
    std::copy(sh.begin(), sh.end(), d.delta_sh.begin());
    d.delta_log_e = j.at("delta_log_e").get<double>();
    d.delta_tau = j.at("delta_tau").get<double>();
    d.edit.dyaw_rad = j.at("edit").at("dyaw_rad").get<double>();
    d.edit.dpitch_rad = j.at("edit").at("dpitch_rad").get<double>();
    return d;
  });
}

Json to_json(const CameraPose& c) {
  return {{"position", to_json(c.position)}, {"look_at", to_json(c.look_at)}, {"up", to_json(c.up)},
          {"vfov_rad", c.vfov_rad},           {"width", c.width},              {"height", c.height}};
}

CameraPose camera_from_json(const Json& j) {
  return guarded("camera", [&] {
    CameraPose c;
    c.position = vec3_from_json(j.at("position"));
    c.look_at = vec3_from_json(j.at("look_at"));
    c.up = vec3_from_json(j.at("up"));
    c.vfov_rad = j.at("vfov_rad").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.validate();
    return c;
  });
}

Json to_json(const Material& m) {
  return {{"albedo", to_json(m.albedo)}, {"roughness", m.roughness}, {"metallic", m.metallic}};
}

Material material_from_json(const Json& j) {
  return guarded("material", [&] {
    Material m{vec3_from_json(j.at("albedo")), j.at("roughness").get<double>(), j.at("metallic").get<double>()};
    m.validate();
    return m;
  });
}

Json to_json(const SceneSpec& s) {
  Json prims = Json::array();
  for (const auto& p : s.primitives)
    prims.push_back({{"shape", shape_name(p.shape)},
                     {"rotation", p.transform.rotation.m},
                     {"translation", to_json(p.transform.translation)},
                     {"scale", to_json(p.transform.scale)},
                     {"material", to_json(p.material)}});
  return {{"background", to_json(s.background)}, {"primitives", prims}};
}

SceneSpec scene_from_json(const Json& j) {
  return guarded("scene", [&] {
    SceneSpec s;
    s.background = vec3_from_json(j.at("background"));
    for (const auto& pj : j.at("primitives")) {
      Primitive p;
      const auto shape = pj.at("shape").get<std::string>();
      if (shape == "sphere")
        p.shape = Shape::sphere;
      else if (shape == "box")
        p.shape = Shape::box;
      else if (shape == "plane")
        p.shape = Shape::plane;
      else
        throw IoError("unknown shape '" + shape + "'");
      const auto rot = pj.at("rotation").get<std::vector<double>>();
      if (rot.size() != 9) throw IoError("rotation must hold 9 values");
      std::copy(rot.begin(), rot.end(), p.transform.rotation.m.begin());
      p.transform.translation = vec3_from_json(pj.at("translation"));
      p.transform.scale = vec3_from_json(pj.at("scale"));
      p.material = material_from_json(pj.at("material"));
      s.primitives.push_back(p);
    }
    s.validate();
    return s;
  });
}

Json to_json(const RenderOptions& o) { return {{"shadows", o.shadows}, {"specular", o.specular}}; }

RenderOptions render_options_from_json(const Json& j) {
  return guarded("render options", [&] {
    return RenderOptions{j.at("shadows").get<bool>(), j.at("specular").get<bool>()};
  });
}

}  // namespace relight
