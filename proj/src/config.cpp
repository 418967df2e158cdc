#include "flapsim/config.hpp"

#include "flapsim/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace flapsim::config {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ValidationError(key, "expected a number");
  const std::string& s = n.Scalar();
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw ValidationError(key, "expected a number, got '" + s + "'");
  return v;
}

long long parse_int(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ValidationError(key, "expected an integer");
  const std::string& s = n.Scalar();
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ValidationError(key, "expected an unsigned integer");
  const std::string& s = n.Scalar();
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ValidationError(key, "expected true or false");
  const std::string& s = n.Scalar();
  if (s == "true") return true;
  if (s == "false") return false;
  throw ValidationError(key, "expected true or false, got '" + s + "'");
}

std::string parse_string(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ValidationError(key, "expected a string");
  return n.Scalar();
}

std::vector<double> parse_list(const YAML::Node& n, const std::string& key, std::size_t size) {
  if (!n.IsSequence() || n.size() != size) {
    throw ValidationError(key, "expected a list of " + std::to_string(size) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(parse_double(n[i], key));
  return out;
}

YAML::Node scalar(const std::string& s) { return YAML::Node(s); }

YAML::Node flow_list(const std::vector<std::string>& items) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto& s : items) n.push_back(s);
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

struct Entry {
  std::string path;
  std::function<void(Config&, const YAML::Node&, const std::string&)> set;
  std::function<YAML::Node(const Config&)> get;
};

template <class Acc>
Entry real(std::string path, Acc acc) {
  return {std::move(path), [acc](Config& c, const YAML::Node& n, const std::string& k) { acc(c) = parse_double(n, k); },
          [acc](const Config& c) { return scalar(fmt(acc(const_cast<Config&>(c)))); }};
}

template <class Acc>
Entry integer(std::string path, Acc acc) {
  return {std::move(path),
          [acc](Config& c, const YAML::Node& n, const std::string& k) {
            const long long v = parse_int(n, k);
            if (v < -2147483647LL || v > 2147483647LL) throw ValidationError(k, "integer out of range");
            acc(c) = static_cast<int>(v);
          },
          [acc](const Config& c) { return scalar(std::to_string(acc(const_cast<Config&>(c)))); }};
}

template <class Acc>
Entry boolean(std::string path, Acc acc) {
  return {std::move(path), [acc](Config& c, const YAML::Node& n, const std::string& k) { acc(c) = parse_bool(n, k); },
          [acc](const Config& c) { return scalar(acc(const_cast<Config&>(c)) ? "true" : "false"); }};
}

// Fixed-size Eigen vector (or a 3x3 matrix stored row by row).
template <int N, class Acc>
Entry vector(std::string path, Acc acc) {
  return {std::move(path),
          [acc](Config& c, const YAML::Node& n, const std::string& k) {
            const std::vector<double> v = parse_list(n, k, N);
            auto& dst = acc(c);
            for (int i = 0; i < N; ++i) dst[i] = v[i];
          },
          [acc](const Config& c) {
            const auto& src = acc(const_cast<Config&>(c));
            std::vector<std::string> items;
            for (int i = 0; i < N; ++i) items.push_back(fmt(src[i]));
            return flow_list(items);
          }};
}

template <class Acc>
Entry matrix3(std::string path, Acc acc) {
  return {std::move(path),
          [acc](Config& c, const YAML::Node& n, const std::string& k) {
            if (!n.IsSequence() || n.size() != 3) throw ValidationError(k, "expected a 3x3 matrix as three rows");
            Eigen::Matrix3d m;
            for (int r = 0; r < 3; ++r) {
              const std::vector<double> row = parse_list(n[r], k, 3);
              for (int j = 0; j < 3; ++j) m(r, j) = row[j];
            }
            acc(c) = m;
          },
          [acc](const Config& c) {
            const Eigen::Matrix3d& m = acc(const_cast<Config&>(c));
            YAML::Node rows(YAML::NodeType::Sequence);
            for (int r = 0; r < 3; ++r) rows.push_back(flow_list({fmt(m(r, 0)), fmt(m(r, 1)), fmt(m(r, 2))}));
            rows.SetStyle(YAML::EmitterStyle::Flow);
            return rows;
          }};
}

std::vector<Entry> build_schema() {
  std::vector<Entry> s;
  auto geo = [](Config& c) -> kin::LinkageGeometry& { return c.model.topology.geometry; };

  // kinematics
  s.push_back(vector<2>("kinematics.crank1_center_m", [geo](Config& c) -> kin::Vec2& { return geo(c).crank1_center; }));
  s.push_back(real("kinematics.crank1_radius_m", [geo](Config& c) -> double& { return geo(c).crank1_radius; }));
  s.push_back(real("kinematics.coupler_a_length_m", [geo](Config& c) -> double& { return geo(c).coupler_a_length; }));
  s.push_back(real("kinematics.humerus_offset_rad", [geo](Config& c) -> double& { return geo(c).humerus_offset; }));
  s.push_back(vector<2>("kinematics.crank2_center_m", [geo](Config& c) -> kin::Vec2& { return geo(c).crank2_center; }));
  s.push_back(real("kinematics.crank2_radius_m", [geo](Config& c) -> double& { return geo(c).crank2_radius; }));
  s.push_back(real("kinematics.gear_ratio", [geo](Config& c) -> double& { return geo(c).gear_ratio; }));
  s.push_back(real("kinematics.crank2_phase_rad", [geo](Config& c) -> double& { return geo(c).crank2_phase; }));
  s.push_back(real("kinematics.coupler_b_length_m", [geo](Config& c) -> double& { return geo(c).coupler_b_length; }));
  s.push_back(vector<2>("kinematics.rocker_b_pivot_m", [geo](Config& c) -> kin::Vec2& { return geo(c).rocker_b_pivot; }));
  s.push_back(real("kinematics.rocker_b_lever_m", [geo](Config& c) -> double& { return geo(c).rocker_b_lever; }));
  s.push_back(real("kinematics.rocker_b_lever_angle_rad",
                   [geo](Config& c) -> double& { return geo(c).rocker_b_lever_angle; }));
  s.push_back(real("kinematics.pushrod_fixed_length_m",
                   [geo](Config& c) -> double& { return geo(c).pushrod_fixed_length; }));
  s.push_back(real("kinematics.radius_lever_m", [geo](Config& c) -> double& { return geo(c).radius_lever; }));
  s.push_back(real("kinematics.radius_lever_angle_rad",
                   [geo](Config& c) -> double& { return geo(c).radius_lever_angle; }));
  s.push_back(real("kinematics.elbow_distance_m", [geo](Config& c) -> double& { return geo(c).elbow_distance; }));
  s.push_back(real("kinematics.joint5_distance_m", [geo](Config& c) -> double& { return geo(c).joint5_distance; }));
  s.push_back(real("kinematics.joint16_distance_m", [geo](Config& c) -> double& { return geo(c).joint16_distance; }));
  s.push_back({"kinematics.assembly_branch",
               [geo](Config& c, const YAML::Node& n, const std::string& k) {
                 if (!n.IsSequence() || n.size() != 3) throw ValidationError(k, "expected three entries of +1 or -1");
                 for (int i = 0; i < 3; ++i) {
                   const long long b = parse_int(n[i], k);
                   if (b != 1 && b != -1) throw ValidationError(k, "entries must be +1 or -1");
                   geo(c).assembly_branch[i] = static_cast<int>(b);
                 }
               },
               [geo](const Config& c) {
                 const auto& b = geo(const_cast<Config&>(c)).assembly_branch;
                 return flow_list({std::to_string(b[0]), std::to_string(b[1]), std::to_string(b[2])});
               }});
  for (int i = 0; i < kin::kFdcCount; ++i) {
    const std::string base = "kinematics.fdc." + std::string(kin::fdc_name(i));
    s.push_back(real(base + ".min_m", [geo, i](Config& c) -> double& { return geo(c).fdc_min[i]; }));
    s.push_back(real(base + ".max_m", [geo, i](Config& c) -> double& { return geo(c).fdc_max[i]; }));
  }

  // mass
  s.push_back(real("mass.body_mass_kg", [](Config& c) -> double& { return c.model.mass.body_mass; }));
  s.push_back(matrix3("mass.body_inertia_kg_m2", [](Config& c) -> Eigen::Matrix3d& { return c.model.mass.body_inertia; }));
  s.push_back(real("mass.body_axis_incline_rad", [](Config& c) -> double& { return c.model.body_axis_incline; }));
  s.push_back(vector<3>("mass.shoulder_m", [](Config& c) -> Eigen::Vector3d& { return c.model.mass.shoulder; }));
  s.push_back(real("mass.elbow_distance_m", [](Config& c) -> double& { return c.model.mass.elbow_distance; }));
  for (const char* link : {"humerus", "radius"}) {
    const bool hum = std::string(link) == "humerus";
    auto props = [hum](Config& c) -> dyn::LinkProps& { return hum ? c.model.mass.humerus : c.model.mass.radius; };
    const std::string base = std::string("mass.") + link;
    s.push_back(real(base + ".mass_kg", [props](Config& c) -> double& { return props(c).mass; }));
    s.push_back(vector<3>(base + ".com_m", [props](Config& c) -> Eigen::Vector3d& { return props(c).com; }));
    s.push_back(matrix3(base + ".inertia_kg_m2", [props](Config& c) -> Eigen::Matrix3d& { return props(c).inertia; }));
  }

  // coupling
  const char* sites[4] = {"left_humerus", "left_radius", "right_humerus", "right_radius"};
  for (int i = 0; i < 4; ++i) {
    const std::string base = std::string("coupling.") + sites[i];
    auto site = [i](Config& c) -> dyn::CouplingSite& { return c.model.coupling.sites[i]; };
    s.push_back(real(base + ".stiffness_n_per_m", [site](Config& c) -> double& { return site(c).stiffness; }));
    s.push_back(real(base + ".damping_n_s_per_m", [site](Config& c) -> double& { return site(c).damping; }));
    s.push_back(real(base + ".rest_length_m", [site](Config& c) -> double& { return site(c).rest_length; }));
    s.push_back(real(base + ".attach_distance_m", [site](Config& c) -> double& { return site(c).attach_distance; }));
  }

  // aero
  s.push_back(real("aero.density_kg_per_m3", [](Config& c) -> double& { return c.model.air.density; }));
  s.push_back(vector<4>("aero.lift_coefficients", [](Config& c) -> std::array<double, 4>& { return c.model.air.lift; }));
  s.push_back(vector<4>("aero.drag_coefficients", [](Config& c) -> std::array<double, 4>& { return c.model.air.drag; }));
  for (int i = 0; i < 4; ++i) {
    const std::string base = "aero.segments." + aero::default_segments()[i].id;
    auto seg = [i](Config& c) -> aero::WingSegment& { return c.model.segments[i]; };
    s.push_back(real(base + ".chord_m", [seg](Config& c) -> double& { return seg(c).chord; }));
    s.push_back(real(base + ".span_m", [seg](Config& c) -> double& { return seg(c).span; }));
    s.push_back(real(base + ".root_offset_m", [seg](Config& c) -> double& { return seg(c).root_offset; }));
    s.push_back(real(base + ".leading_edge_x_m", [seg](Config& c) -> double& { return seg(c).leading_edge_x; }));
    s.push_back(integer(base + ".n_strips", [seg](Config& c) -> int& { return seg(c).n_strips; }));
  }

  // control
  auto ctl = [](Config& c) -> ctl::ControllerConfig& { return c.model.control; };
  s.push_back(real("control.crank_rate_gain_per_s", [ctl](Config& c) -> double& { return ctl(c).K_d1; }));
  s.push_back(vector<4>("control.fdc_stiffness_gain_per_s2", [ctl](Config& c) -> ctl::Vec4& { return ctl(c).K_p2; }));
  s.push_back(vector<4>("control.fdc_damping_gain_per_s", [ctl](Config& c) -> ctl::Vec4& { return ctl(c).K_d2; }));
  s.push_back(real("control.crank_rate_reference_rad_per_s", [ctl](Config& c) -> double& { return ctl(c).omega_ref; }));
  s.push_back(vector<4>("control.zero_path_m", [ctl](Config& c) -> ctl::Vec4& { return ctl(c).l_ref_zp; }));
  s.push_back(vector<4>("control.pitch_gain", [ctl](Config& c) -> ctl::Vec4& { return ctl(c).K_c; }));
  s.push_back(real("control.pitch_gain_unit_m_per_rad", [ctl](Config& c) -> double& { return ctl(c).gain_unit; }));
  s.push_back(real("control.pitch_reference_rad", [ctl](Config& c) -> double& { return ctl(c).theta_ref; }));

  // sim
  s.push_back(real("sim.dt_s", [](Config& c) -> double& { return c.sim.dt; }));
  s.push_back(real("sim.duration_s", [](Config& c) -> double& { return c.sim.duration; }));
  s.push_back(integer("sim.log_every_steps", [](Config& c) -> int& { return c.sim.log_every; }));
  s.push_back(real("sim.gravity_m_per_s2", [](Config& c) -> double& { return c.model.gravity; }));
  s.push_back(boolean("sim.gravity", [](Config& c) -> bool& { return c.sim.gravity; }));
  s.push_back(boolean("sim.aero", [](Config& c) -> bool& { return c.sim.aero; }));
  s.push_back(boolean("sim.damping", [](Config& c) -> bool& { return c.sim.damping; }));
  s.push_back(boolean("sim.crank_controller", [](Config& c) -> bool& { return c.sim.controllers.crank; }));
  s.push_back(boolean("sim.fdc_controller", [](Config& c) -> bool& { return c.sim.controllers.fdc; }));
  s.push_back(boolean("sim.pitch_controller", [](Config& c) -> bool& { return c.sim.controllers.pitch; }));
  s.push_back(boolean("sim.parallel_aero", [](Config& c) -> bool& { return c.sim.parallel_aero; }));
  s.push_back(boolean("sim.record_strips", [](Config& c) -> bool& { return c.sim.record_strips; }));
  s.push_back(vector<3>("sim.initial.position_m", [](Config& c) -> Eigen::Vector3d& { return c.sim.position; }));
  s.push_back(vector<3>("sim.initial.velocity_m_per_s", [](Config& c) -> Eigen::Vector3d& { return c.sim.velocity; }));
  s.push_back(real("sim.initial.pitch_rad", [](Config& c) -> double& { return c.sim.pitch; }));
  s.push_back(vector<3>("sim.initial.omega_rad_per_s", [](Config& c) -> Eigen::Vector3d& { return c.sim.omega; }));
  s.push_back(real("sim.initial.crank_angle_rad", [](Config& c) -> double& { return c.sim.crank_angle; }));
  s.push_back(real("sim.initial.crank_rate_rad_per_s", [](Config& c) -> double& { return c.sim.crank_rate; }));
  s.push_back(boolean("sim.initial.fdc_from_zero_path", [](Config& c) -> bool& { return c.sim.fdc_from_zero_path; }));
  s.push_back(vector<4>("sim.initial.fdc_lengths_m", [](Config& c) -> Eigen::Vector4d& { return c.sim.fdc_lengths; }));
  s.push_back(real("sim.divergence.max_speed_m_per_s", [](Config& c) -> double& { return c.sim.max_speed; }));
  s.push_back(real("sim.divergence.max_rate_rad_per_s", [](Config& c) -> double& { return c.sim.max_rate; }));

  // cost
  s.push_back(real("cost.w_momentum", [](Config& c) -> double& { return c.cost.w_momentum; }));
  s.push_back(real("cost.w_velocity", [](Config& c) -> double& { return c.cost.w_velocity; }));
  s.push_back(real("cost.w_pitch", [](Config& c) -> double& { return c.cost.w_pitch; }));
  s.push_back(real("cost.dt_s", [](Config& c) -> double& { return c.cost.dt; }));
  s.push_back(real("cost.horizon_s", [](Config& c) -> double& { return c.cost.horizon; }));
  s.push_back(real("cost.warmup_s", [](Config& c) -> double& { return c.cost.warmup; }));
  s.push_back(real("cost.penalty", [](Config& c) -> double& { return c.cost.penalty; }));

  // optimizer
  s.push_back({"optimizer.method",
               [](Config& c, const YAML::Node& n, const std::string& k) {
                 c.optimizer.method = opt::parse_method(parse_string(n, k));
               },
               [](const Config& c) { return scalar(opt::method_name(c.optimizer.method)); }});
  s.push_back(integer("optimizer.budget", [](Config& c) -> int& { return c.optimizer.budget; }));
  s.push_back(real("optimizer.initial_step", [](Config& c) -> double& { return c.optimizer.initial_step; }));
  s.push_back(real("optimizer.x_tolerance", [](Config& c) -> double& { return c.optimizer.x_tolerance; }));
  s.push_back(real("optimizer.f_tolerance", [](Config& c) -> double& { return c.optimizer.f_tolerance; }));
  s.push_back(integer("optimizer.population", [](Config& c) -> int& { return c.optimizer.population; }));
  s.push_back(real("optimizer.sigma0", [](Config& c) -> double& { return c.optimizer.sigma0; }));
  s.push_back({"optimizer.seed",
               [](Config& c, const YAML::Node& n, const std::string& k) { c.optimizer.seed = parse_u64(n, k); },
               [](const Config& c) { return scalar(std::to_string(c.optimizer.seed)); }});
  s.push_back(boolean("optimizer.parallel", [](Config& c) -> bool& { return c.optimizer.parallel; }));
  s.push_back(vector<4>("optimizer.gain_min", [](Config& c) -> Eigen::Vector4d& { return c.gain_bounds.K_c_min; }));
  s.push_back(vector<4>("optimizer.gain_max", [](Config& c) -> Eigen::Vector4d& { return c.gain_bounds.K_c_max; }));
  s.push_back(vector<4>("optimizer.gain_start", [](Config& c) -> Eigen::Vector4d& { return c.gain_bounds.K_c_start; }));
  auto optional_vec = [](std::string path, std::optional<Eigen::Vector4d> Config::*member) {
    return Entry{std::move(path),
                 [member](Config& c, const YAML::Node& n, const std::string& k) {
                   if (n.IsNull()) {
                     (c.*member).reset();
                     return;
                   }
                   const std::vector<double> v = parse_list(n, k, 4);
                   c.*member = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
                 },
                 [member](const Config& c) {
                   if (!(c.*member)) return YAML::Node(YAML::NodeType::Null);
                   const Eigen::Vector4d& v = *(c.*member);
                   return flow_list({fmt(v[0]), fmt(v[1]), fmt(v[2]), fmt(v[3])});
                 }};
  };
  s.push_back(optional_vec("optimizer.zero_path_min_m", &Config::zero_path_min));
  s.push_back(optional_vec("optimizer.zero_path_max_m", &Config::zero_path_max));

  // limit cycle
  s.push_back(real("limit_cycle.section_phase_rad", [](Config& c) -> double& { return c.limit_cycle.section_phase; }));
  s.push_back(real("limit_cycle.threshold", [](Config& c) -> double& { return c.limit_cycle.threshold; }));
  s.push_back(integer("limit_cycle.consecutive", [](Config& c) -> int& { return c.limit_cycle.consecutive; }));
  s.push_back(integer("limit_cycle.min_periods", [](Config& c) -> int& { return c.limit_cycle.min_periods; }));
  s.push_back(real("limit_cycle.weight_pitch_per_rad2", [](Config& c) -> double& { return c.limit_cycle.weight_pitch; }));
  s.push_back(real("limit_cycle.weight_omega_s2_per_rad2",
                   [](Config& c) -> double& { return c.limit_cycle.weight_omega; }));
  s.push_back(real("limit_cycle.weight_velocity_s2_per_m2",
                   [](Config& c) -> double& { return c.limit_cycle.weight_translation; }));
  s.push_back(real("limit_cycle.weight_joint_rate_s2_per_rad2",
                   [](Config& c) -> double& { return c.limit_cycle.weight_joint; }));

  // sensitivity
  s.push_back({"sensitivity.parameters",
               [](Config& c, const YAML::Node& n, const std::string& k) {
                 if (!n.IsSequence()) throw ValidationError(k, "expected a list of parameter names");
                 c.sensitivity.parameters.clear();
                 for (std::size_t i = 0; i < n.size(); ++i) c.sensitivity.parameters.push_back(parse_string(n[i], k));
               },
               [](const Config& c) { return flow_list(c.sensitivity.parameters); }});
  s.push_back(real("sensitivity.delta", [](Config& c) -> double& { return c.sensitivity.delta; }));
  s.push_back(integer("sensitivity.n_samples", [](Config& c) -> int& { return c.sensitivity.n_samples; }));
  s.push_back(boolean("sensitivity.parallel", [](Config& c) -> bool& { return c.sensitivity.parallel; }));
  return s;
}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> s = build_schema();
  return s;
}

const Entry* find_entry(const std::string& path) {
  for (const auto& e : schema()) {
    if (e.path == path) return &e;
  }
  return nullptr;
}

bool is_section(const std::string& path) {
  const std::string prefix = path + ".";
  for (const auto& e : schema()) {
    if (e.path.compare(0, prefix.size(), prefix) == 0) return true;
  }
  return false;
}

void apply_node(Config& cfg, const YAML::Node& node, const std::string& prefix) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string key = it->first.Scalar();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const YAML::Node value = it->second;
    if (const Entry* e = find_entry(path)) {
      e->set(cfg, value, path);
    } else if (is_section(path)) {
      if (value.IsNull()) continue;
      if (!value.IsMap()) throw ValidationError(path, "expected a mapping");
      apply_node(cfg, value, path);
    } else {
      throw ValidationError(path, "unknown configuration key");
    }
  }
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("malformed YAML: ") + e.what());
  }
}

}  // namespace

void SensitivityConfig::validate() const {
  if (parameters.empty()) throw ValidationError("sensitivity.parameters", "must name at least one parameter");
  kin::LinkageGeometry g;
  for (const auto& p : parameters) {
    if (!kin::fdc_index(p) && !g.scalar(p)) throw ValidationError("sensitivity.parameters", "unknown parameter '" + p + "'");
  }
  if (!(delta != 0.0) || !std::isfinite(delta)) throw ValidationError("sensitivity.delta", "must be nonzero and finite");
  if (n_samples < 4) throw ValidationError("sensitivity.n_samples", "must be at least 4");
}

opt::Bounds Config::zero_path_bounds() const {
  opt::Bounds b = opt::zero_path_bounds(model);
  if (zero_path_min) b.lo = *zero_path_min;
  if (zero_path_max) b.hi = *zero_path_max;
  return b;
}

void Config::finalize() {
  model.topology.geometry.fdc_nominal = model.control.l_ref_zp;
  model.refresh();
  validate();
}

void Config::validate() const {
  const auto& g = model.topology.geometry;
  for (int i = 0; i < kin::kFdcCount; ++i) {
    if (!(g.fdc_min[i] <= g.fdc_max[i])) {
      throw ValidationError("kinematics.fdc." + std::string(kin::fdc_name(i)), "min_m exceeds max_m");
    }
    if (model.control.l_ref_zp[i] < g.fdc_min[i] || model.control.l_ref_zp[i] > g.fdc_max[i]) {
      throw ValidationError("control.zero_path_m", "entries must lie inside the FDC bounds");
    }
  }
  model.validate();
  sim.validate();
  cost.validate(sim.dt);
  optimizer.validate();
  gain_bounds.validate();
  zero_path_bounds().validate("optimizer.zero_path_min_m");
  const opt::Bounds zp = zero_path_bounds();
  const opt::Bounds fdc = opt::zero_path_bounds(model);
  for (int i = 0; i < 4; ++i) {
    if (zp.lo[i] < fdc.lo[i] || zp.hi[i] > fdc.hi[i]) {
      throw ValidationError("optimizer.zero_path_min_m", "zero-path bounds must lie inside the FDC bounds");
    }
  }
  limit_cycle.validate();
  sensitivity.validate();
}

Config parse_config(const std::string& yaml_text) {
  const YAML::Node root = parse_yaml(yaml_text);
  Config cfg;
  if (root.IsDefined() && !root.IsNull()) {
    if (!root.IsMap()) throw ParseError("configuration root must be a mapping");
    apply_node(cfg, root, "");
  }
  cfg.finalize();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(Config& cfg, const std::vector<std::string>& assignments) {
  for (const auto& assignment : assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const Entry* e = find_entry(key);
    if (!e) throw ValidationError(key, "unknown configuration key");
    e->set(cfg, parse_yaml(assignment.substr(eq + 1)), key);
  }
  cfg.finalize();
}

void apply_override(Config& cfg, const std::string& assignment) { apply_overrides(cfg, {assignment}); }

std::string to_yaml(const Config& cfg) {
  YAML::Node root(YAML::NodeType::Map);
  for (const auto& e : schema()) {
    std::vector<std::string> parts;
    std::stringstream ss(e.path);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node child = chain.back()[parts[i]];
      if (!child.IsMap()) child = YAML::Node(YAML::NodeType::Map);
      chain.back()[parts[i]] = child;
      chain.push_back(chain.back()[parts[i]]);
    }
    chain.back()[parts.back()] = e.get(cfg);
  }
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : schema()) keys.push_back(e.path);
  return keys;
}

}  // namespace flapsim::config
