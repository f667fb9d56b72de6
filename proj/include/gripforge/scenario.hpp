#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gripforge/errors.hpp"
#include "gripforge/sim.hpp"
#include "gripforge/trajectory.hpp"

namespace gripforge {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kScenarioFormatVersion = 1;

struct ScenarioMetadata {
  std::string name;
  std::uint64_t seed = 0;
  std::string corruption;  // empty for pristine data
  int frame_offset = 0;    // frames dropped from the source sequence
};

/// Self-contained refinement problem: the scene, the synergy basis, and the
/// vision-style reference trajectory.
struct Scenario {
  Scene scene;
  SynergyBasis basis;
  Trajectory trajectory;
  ScenarioMetadata metadata;

  void validate() const {
    trajectory.validate();
    if (!(scene.object.mass > 0.0)) {
      throw InvalidDimensions("Scenario: object mass must be > 0");
    }
    double ratio = (1.0 / Simulator::kDt) / trajectory.frame_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw InvalidDimensions("Scenario: frame rate must divide 240 Hz");
    }
  }
};

// ---------------------------------------------------------------------------
// JSON serialization

namespace io {

inline const ordered_json& require(const ordered_json& j, const char* key,
                                   const char* context) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string("missing field '") + key + "' in " + context);
  }
  return *it;
}

inline ordered_json pose_to_json(const Pose& p) {
  const auto& q = p.rotation.quat();
  return ordered_json::array({q.w(), q.x(), q.y(), q.z(), p.translation.x(),
                              p.translation.y(), p.translation.z()});
}

inline Pose pose_from_json(const ordered_json& j) {
  if (!j.is_array() || j.size() != 7) {
    throw ParseError("pose must be [qw,qx,qy,qz,tx,ty,tz]");
  }
  Pose p;
  p.rotation = Rotation(j[0].get<double>(), j[1].get<double>(),
                        j[2].get<double>(), j[3].get<double>());
  p.translation = Vec3(j[4].get<double>(), j[5].get<double>(),
                       j[6].get<double>());
  return p;
}

inline ordered_json vec3_to_json(const Vec3& v) {
  return ordered_json::array({v.x(), v.y(), v.z()});
}

inline Vec3 vec3_from_json(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline ordered_json vecx_to_json(const VecX& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline VecX vecx_from_json(const ordered_json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  VecX v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

inline ordered_json shape_to_json(const ShapeGeometry& shape) {
  ordered_json j;
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    j["shape"] = "box";
    j["half_extents"] = vec3_to_json(box->half);
  } else if (const auto* cyl = std::get_if<CylinderShape>(&shape)) {
    j["shape"] = "cylinder";
    j["radius"] = cyl->radius;
    j["half_height"] = cyl->half_height;
  } else {
    const auto& cvx = std::get<ConvexShape>(shape);
    j["shape"] = "convex";
    ordered_json verts = ordered_json::array();
    for (const auto& v : cvx.vertices) verts.push_back(vec3_to_json(v));
    j["vertices"] = verts;
    j["faces"] = cvx.faces;
  }
  return j;
}

inline ShapeGeometry shape_from_json(const ordered_json& j) {
  std::string kind = require(j, "shape", "object").get<std::string>();
  if (kind == "box") {
    return BoxShape{vec3_from_json(require(j, "half_extents", "object"))};
  }
  if (kind == "cylinder") {
    return CylinderShape{require(j, "radius", "object").get<double>(),
                         require(j, "half_height", "object").get<double>()};
  }
  if (kind == "convex") {
    std::vector<Vec3> verts;
    for (const auto& v : require(j, "vertices", "object")) {
      verts.push_back(vec3_from_json(v));
    }
    std::vector<std::vector<int>> faces =
        require(j, "faces", "object").get<std::vector<std::vector<int>>>();
    return make_convex(std::move(verts), std::move(faces));
  }
  throw ParseError("unknown object shape '" + kind + "'");
}

}  // namespace io

inline ordered_json scenario_to_json(const Scenario& sc) {
  sc.validate();
  ordered_json j;
  j["format_version"] = kScenarioFormatVersion;

  ordered_json meta;
  meta["name"] = sc.metadata.name;
  meta["seed"] = sc.metadata.seed;
  meta["corruption"] = sc.metadata.corruption;
  meta["frame_offset"] = sc.metadata.frame_offset;
  j["metadata"] = meta;

  const GripperParams& gp = sc.scene.gripper.params;
  ordered_json grip;
  grip["n_fingers"] = gp.n_fingers;
  grip["mount_radius"] = gp.mount_radius;
  grip["proximal_length"] = gp.proximal_length;
  grip["distal_length"] = gp.distal_length;
  grip["link_radius"] = gp.link_radius;
  grip["palm_radius"] = gp.palm_radius;
  grip["servo_kp"] = gp.servo_kp;
  grip["servo_kv"] = gp.servo_kv;
  grip["joint_inertia"] = gp.joint_inertia;
  grip["wrist_time_constant"] = gp.wrist_time_constant;

  ordered_json object = io::shape_to_json(sc.scene.object.geometry);
  object["mass"] = sc.scene.object.mass;

  ordered_json contact;
  contact["stiffness"] = sc.scene.contact.stiffness;
  contact["damping_ratio"] = sc.scene.contact.damping_ratio;
  contact["friction"] = sc.scene.contact.friction;
  contact["friction_vel"] = sc.scene.contact.friction_vel;

  ordered_json scene;
  scene["gravity"] = io::vec3_to_json(sc.scene.gravity);
  scene["ground"] = sc.scene.ground;
  scene["ground_height"] = sc.scene.ground_height;
  scene["contact"] = contact;
  scene["gripper"] = grip;
  scene["object"] = object;
  j["scene"] = scene;

  ordered_json basis;
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < sc.basis.components.rows(); ++r) {
    rows.push_back(io::vecx_to_json(sc.basis.components.row(r).transpose()));
  }
  basis["components"] = rows;
  basis["mean"] = io::vecx_to_json(sc.basis.mean);
  basis["lower"] = io::vecx_to_json(sc.basis.lower);
  basis["upper"] = io::vecx_to_json(sc.basis.upper);
  j["basis"] = basis;

  ordered_json traj;
  traj["frame_rate"] = sc.trajectory.frame_rate;
  ordered_json frames = ordered_json::array();
  for (int f = 0; f < sc.trajectory.length(); ++f) {
    ordered_json fr;
    fr["object_pose"] = io::pose_to_json(sc.trajectory.object_poses[f]);
    ordered_json control;
    control["coeffs"] = io::vecx_to_json(sc.trajectory.controls[f].coeffs);
    control["wrist"] = io::pose_to_json(sc.trajectory.controls[f].wrist);
    fr["control"] = control;
    ordered_json joints = ordered_json::array();
    for (const auto& p : sc.trajectory.joint_positions[f]) {
      joints.push_back(io::vec3_to_json(p));
    }
    fr["joints"] = joints;
    frames.push_back(fr);
  }
  traj["frames"] = frames;
  j["trajectory"] = traj;
  return j;
}

inline Scenario scenario_from_json(const ordered_json& j) {
  using io::require;
  int version = require(j, "format_version", "document").get<int>();
  if (version != kScenarioFormatVersion) {
    throw VersionUnsupported("unsupported scenario format_version " +
                             std::to_string(version));
  }
  Scenario sc;

  const auto& meta = require(j, "metadata", "document");
  sc.metadata.name = require(meta, "name", "metadata").get<std::string>();
  sc.metadata.seed = require(meta, "seed", "metadata").get<std::uint64_t>();
  sc.metadata.corruption =
      require(meta, "corruption", "metadata").get<std::string>();
  sc.metadata.frame_offset =
      require(meta, "frame_offset", "metadata").get<int>();

  const auto& scene = require(j, "scene", "document");
  sc.scene.gravity = io::vec3_from_json(require(scene, "gravity", "scene"));
  sc.scene.ground = require(scene, "ground", "scene").get<bool>();
  sc.scene.ground_height =
      require(scene, "ground_height", "scene").get<double>();

  const auto& contact = require(scene, "contact", "scene");
  sc.scene.contact.stiffness =
      require(contact, "stiffness", "contact").get<double>();
  sc.scene.contact.damping_ratio =
      require(contact, "damping_ratio", "contact").get<double>();
  sc.scene.contact.friction =
      require(contact, "friction", "contact").get<double>();
  sc.scene.contact.friction_vel =
      require(contact, "friction_vel", "contact").get<double>();

  const auto& grip = require(scene, "gripper", "scene");
  GripperParams gp;
  gp.n_fingers = require(grip, "n_fingers", "gripper").get<int>();
  gp.mount_radius = require(grip, "mount_radius", "gripper").get<double>();
  gp.proximal_length =
      require(grip, "proximal_length", "gripper").get<double>();
  gp.distal_length = require(grip, "distal_length", "gripper").get<double>();
  gp.link_radius = require(grip, "link_radius", "gripper").get<double>();
  gp.palm_radius = require(grip, "palm_radius", "gripper").get<double>();
  gp.servo_kp = require(grip, "servo_kp", "gripper").get<double>();
  gp.servo_kv = require(grip, "servo_kv", "gripper").get<double>();
  gp.joint_inertia = require(grip, "joint_inertia", "gripper").get<double>();
  gp.wrist_time_constant =
      require(grip, "wrist_time_constant", "gripper").get<double>();
  sc.scene.gripper.params = gp;

  const auto& object = require(scene, "object", "scene");
  sc.scene.object = ObjectModel::make(io::shape_from_json(object),
                                      require(object, "mass", "object").get<double>());

  const auto& basis = require(j, "basis", "document");
  const auto& rows = require(basis, "components", "basis");
  if (!rows.is_array() || rows.empty()) {
    throw ParseError("basis components must be a non-empty matrix");
  }
  int n_joints = static_cast<int>(rows.size());
  int n_coeffs = static_cast<int>(rows[0].size());
  sc.basis.components.resize(n_joints, n_coeffs);
  for (int r = 0; r < n_joints; ++r) {
    VecX row = io::vecx_from_json(rows[r]);
    if (row.size() != n_coeffs) throw ParseError("ragged basis components");
    sc.basis.components.row(r) = row.transpose();
  }
  sc.basis.mean = io::vecx_from_json(require(basis, "mean", "basis"));
  sc.basis.lower = io::vecx_from_json(require(basis, "lower", "basis"));
  sc.basis.upper = io::vecx_from_json(require(basis, "upper", "basis"));
  sc.scene.gripper.joint_lower = sc.basis.lower;
  sc.scene.gripper.joint_upper = sc.basis.upper;

  const auto& traj = require(j, "trajectory", "document");
  sc.trajectory.frame_rate =
      require(traj, "frame_rate", "trajectory").get<double>();
  for (const auto& fr : require(traj, "frames", "trajectory")) {
    sc.trajectory.object_poses.push_back(
        io::pose_from_json(require(fr, "object_pose", "frame")));
    const auto& control = require(fr, "control", "frame");
    HandControl c;
    c.coeffs = io::vecx_from_json(require(control, "coeffs", "control"));
    c.wrist = io::pose_from_json(require(control, "wrist", "control"));
    sc.trajectory.controls.push_back(std::move(c));
    std::vector<Vec3> joints;
    for (const auto& p : require(fr, "joints", "frame")) {
      joints.push_back(io::vec3_from_json(p));
    }
    sc.trajectory.joint_positions.push_back(std::move(joints));
  }
  sc.validate();
  return sc;
}

inline std::string save_scenario_string(const Scenario& sc) {
  return scenario_to_json(sc).dump(2) + "\n";
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << save_scenario_string(sc);
  if (!out) throw IoError("write failed: " + path);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario field error: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Replay and contact export

/// Rest state for the trajectory's first frame.
inline SimState initial_state(const Simulator& sim, const Trajectory& traj) {
  if (traj.length() == 0) throw EmptySequence("initial_state: empty trajectory");
  return sim.make_initial_state(traj.controls.front(),
                                traj.object_poses.front());
}

struct ReplayResult {
  Trajectory trajectory;
  std::vector<std::vector<ContactRecord>> contacts;
};

/// Rolls the recorded controls back through the simulator. Frame 0 is the
/// constructed rest state; later frames come from the rollout.
inline ReplayResult replay(const Scenario& sc) {
  sc.validate();
  Simulator sim(sc.scene, sc.basis);
  SimState s0 = initial_state(sim, sc.trajectory);
  std::vector<HandControl> controls(sc.trajectory.controls.begin(),
                                    sc.trajectory.controls.end() - 1);
  RolloutResult roll =
      sim.rollout(s0, controls, 1.0 / sc.trajectory.frame_rate);

  ReplayResult out;
  out.trajectory.frame_rate = sc.trajectory.frame_rate;
  out.trajectory.object_poses.push_back(s0.object);
  out.trajectory.controls.push_back(sc.trajectory.controls.front());
  out.trajectory.joint_positions.push_back(sim.hand_joint_positions(s0));
  for (std::size_t f = 0; f < roll.states.size(); ++f) {
    out.trajectory.object_poses.push_back(roll.states[f].object);
    out.trajectory.controls.push_back(sc.trajectory.controls[f + 1]);
    out.trajectory.joint_positions.push_back(
        sim.hand_joint_positions(roll.states[f]));
  }
  out.contacts.resize(1);  // no contacts resolved "at" frame 0
  for (auto& c : roll.contacts) out.contacts.push_back(std::move(c));
  for (std::size_t f = 0; f < out.contacts.size(); ++f) {
    for (auto& r : out.contacts[f]) r.frame = static_cast<int>(f);
  }
  return out;
}

namespace io {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace io

inline std::string contact_body_name(const Scene& scene, int body) {
  if (body == kGroundBody) return "ground";
  if (body == kObjectBody) return "object";
  return scene.gripper.body_name(body);
}

inline constexpr const char* kContactCsvHeader =
    "frame,body_a,body_b,px,py,pz,nx,ny,nz,fn,ft1,ft2,wfx,wfy,wfz,wtx,wty,wtz";

/// CSV export, one row per contact per frame. Records must be frame-sorted.
inline void export_contacts(const std::vector<ContactRecord>& records,
                            const Scene& scene, const std::string& path) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].frame < records[i - 1].frame) {
      throw OutOfRange("export_contacts: records must be frame-sorted");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kContactCsvHeader << "\n";
  for (const auto& r : records) {
    const double cols[] = {r.point.x(),        r.point.y(),
                           r.point.z(),        r.normal.x(),
                           r.normal.y(),       r.normal.z(),
                           r.normal_force,     r.tangential.x(),
                           r.tangential.y(),   r.wrench_force.x(),
                           r.wrench_force.y(), r.wrench_force.z(),
                           r.wrench_torque.x(), r.wrench_torque.y(),
                           r.wrench_torque.z()};
    out << r.frame << ',' << contact_body_name(scene, r.body_a) << ','
        << contact_body_name(scene, r.body_b);
    for (double c : cols) out << ',' << io::format_double(c);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<ContactRecord> flatten_contacts(
    const std::vector<std::vector<ContactRecord>>& per_frame) {
  std::vector<ContactRecord> flat;
  for (const auto& frame : per_frame) {
    flat.insert(flat.end(), frame.begin(), frame.end());
  }
  return flat;
}

}  // namespace gripforge
