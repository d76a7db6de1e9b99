#include "vpmpcc/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vpmpcc/error.hpp"

namespace vpmpcc {

namespace {

using nlohmann::json;

enum class Kind { Number, Integer, Boolean, Text, Array3, Array4, Array9 };

struct KeySpec {
  Kind kind;
  const char* unit;
  const char* note;
};

const std::map<std::string, std::map<std::string, KeySpec>>& schema() {
  static const std::map<std::string, std::map<std::string, KeySpec>> s = {
      {"vehicle",
       {{"L", {Kind::Number, "m", "wheelbase (must equal lf+lr)"}},
        {"mass", {Kind::Number, "kg", "vehicle mass"}},
        {"inertia_z", {Kind::Number, "kg m^2", "yaw inertia"}},
        {"lf", {Kind::Number, "m", "CoG to front axle"}},
        {"lr", {Kind::Number, "m", "CoG to rear axle"}},
        {"Cf", {Kind::Number, "N/rad", "front cornering stiffness"}},
        {"Cr", {Kind::Number, "N/rad", "rear cornering stiffness"}},
        {"kv", {Kind::Number, "1/s", "speed-tracking gain"}},
        {"a_max", {Kind::Number, "m/s^2", "longitudinal acceleration saturation"}},
        {"steer_rate", {Kind::Number, "rad/s", "steering actuator rate limit"}},
        {"v_blend", {Kind::Number, "m/s", "kinematic blend threshold"}}}},
      {"mpc",
       {{"Ts", {Kind::Number, "s", "planner period"}},
        {"u_min", {Kind::Array3, "m/s,rad,m/s", "control lower box"}},
        {"u_max", {Kind::Array3, "m/s,rad,m/s", "control upper box"}},
        {"e_con_max", {Kind::Number, "m", "contouring-error normalizer"}},
        {"e_lag_max", {Kind::Number, "m", "lag-error normalizer"}},
        {"v_delta_max", {Kind::Number, "m/s", "velocity-matching normalizer"}},
        {"corridor_weight", {Kind::Number, "-", "soft corridor penalty weight"}},
        {"max_sqp_iter", {Kind::Integer, "-", "iteration cap per receding step"}}}},
      {"ofr",
       {{"lambda", {Kind::Array4, "-", "objective weights (lambda4 < 0)"}},
        {"t_lb", {Kind::Number, "s", "lap-time reward threshold"}},
        {"d_tol", {Kind::Number, "m", "allowed orthogonal deviation"}},
        {"d_ub", {Kind::Number, "m", "teleport gap threshold"}},
        {"D_lb", {Kind::Number, "m", "minimum qualified trajectory length"}},
        {"J_fail", {Kind::Number, "-", "failure objective value"}},
        {"J_fail_ablation1", {Kind::Number, "-", "failure value for ablation1"}},
        {"alpha", {Kind::Number, "-", "baseline deviation weight"}}}},
      {"bo",
       {{"N_BO", {Kind::Integer, "-", "total evaluation budget"}},
        {"n_init", {Kind::Integer, "-", "space-filling initial evaluations"}},
        {"gp_restarts", {Kind::Integer, "-", "likelihood multi-starts"}},
        {"theta_lb", {Kind::Array9, "-", "lower parameter bounds"}},
        {"theta_ub", {Kind::Array9, "-", "upper parameter bounds"}}}},
      {"track",
       {{"file", {Kind::Text, "-", "centerline CSV (empty = bundled circuit)"}},
        {"raceline", {Kind::Text, "-", "raceline CSV overriding the reference line"}},
        {"half_width", {Kind::Number, "m", "fallback half width"}}}},
      {"rvp",
       {{"v_cap", {Kind::Number, "m/s", "profile speed cap"}},
        {"a_lat_max", {Kind::Number, "m/s^2", "lateral acceleration limit"}},
        {"a_long_max", {Kind::Number, "m/s^2", "forward acceleration limit"}},
        {"a_brake_max", {Kind::Number, "m/s^2", "braking limit"}}}},
      {"sim",
       {{"substeps", {Kind::Integer, "-", "dynamic substeps per period"}},
        {"timeout_factor", {Kind::Number, "-", "timeout cap factor"}},
        {"start_speed", {Kind::Number, "m/s", "start protocol speed"}}}},
      {"output", {{"real_timing", {Kind::Boolean, "-", "write measured times into logs"}}}},
  };
  return s;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorCode::ParseError, where + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, where + ": expected an integer");
  return v.get<int>();
}

Eigen::VectorXd array_n(const json& v, int n, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw Error(ErrorCode::ParseError, where + ": expected an array of " + std::to_string(n));
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = number(v[static_cast<size_t>(i)], where);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.theta_lower = default_theta_lower();
  cfg.theta_upper = default_theta_upper();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, origin + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, origin + ": top level must be an object");

  ExperimentConfig cfg = defaults();
  double j_fail_ab1 = cfg.ablation1_j_fail;

  for (const auto& [section, body] : doc.items()) {
    auto sec_it = schema().find(section);
    if (sec_it == schema().end()) {
      throw Error(ErrorCode::ParseError, origin + ": unknown section '" + section + "'");
    }
    if (!body.is_object()) {
      throw Error(ErrorCode::ParseError, origin + ": section '" + section + "' must be an object");
    }
    for (const auto& [key, value] : body.items()) {
      auto key_it = sec_it->second.find(key);
      if (key_it == sec_it->second.end()) {
        throw Error(ErrorCode::ParseError,
                    origin + ": unknown key '" + section + "." + key + "'");
      }
      const std::string where = origin + ": " + section + "." + key;
      const std::string full = section + "." + key;

      if (full == "vehicle.L") cfg.mpc.wheelbase = number(value, where);
      else if (full == "vehicle.mass") cfg.vehicle.mass = number(value, where);
      else if (full == "vehicle.inertia_z") cfg.vehicle.inertia_z = number(value, where);
      else if (full == "vehicle.lf") cfg.vehicle.lf = number(value, where);
      else if (full == "vehicle.lr") cfg.vehicle.lr = number(value, where);
      else if (full == "vehicle.Cf") cfg.vehicle.cf = number(value, where);
      else if (full == "vehicle.Cr") cfg.vehicle.cr = number(value, where);
      else if (full == "vehicle.kv") cfg.vehicle.kv = number(value, where);
      else if (full == "vehicle.a_max") cfg.vehicle.a_max = number(value, where);
      else if (full == "vehicle.steer_rate") cfg.vehicle.steer_rate = number(value, where);
      else if (full == "vehicle.v_blend") cfg.vehicle.v_blend = number(value, where);
      else if (full == "mpc.Ts") cfg.mpc.ts = number(value, where);
      else if (full == "mpc.u_min") {
        const Eigen::VectorXd u = array_n(value, 3, where);
        cfg.mpc.u_min = Control{u[0], u[1], u[2]};
      } else if (full == "mpc.u_max") {
        const Eigen::VectorXd u = array_n(value, 3, where);
        cfg.mpc.u_max = Control{u[0], u[1], u[2]};
      } else if (full == "mpc.e_con_max") cfg.mpc.e_con_max = number(value, where);
      else if (full == "mpc.e_lag_max") cfg.mpc.e_lag_max = number(value, where);
      else if (full == "mpc.v_delta_max") cfg.mpc.v_delta_max = number(value, where);
      else if (full == "mpc.corridor_weight") cfg.mpc.corridor_weight = number(value, where);
      else if (full == "mpc.max_sqp_iter") cfg.mpc.max_sqp_iter = integer(value, where);
      else if (full == "ofr.lambda") {
        const Eigen::VectorXd l = array_n(value, 4, where);
        cfg.ofr.lambda1 = l[0];
        cfg.ofr.lambda2 = l[1];
        cfg.ofr.lambda3 = l[2];
        cfg.ofr.lambda4 = l[3];
      } else if (full == "ofr.t_lb") cfg.ofr.t_lb = number(value, where);
      else if (full == "ofr.d_tol") cfg.ofr.d_tol = number(value, where);
      else if (full == "ofr.d_ub") cfg.ofr.d_ub = number(value, where);
      else if (full == "ofr.D_lb") cfg.ofr.d_lb_length = number(value, where);
      else if (full == "ofr.J_fail") cfg.ofr.j_fail = number(value, where);
      else if (full == "ofr.J_fail_ablation1") j_fail_ab1 = number(value, where);
      else if (full == "ofr.alpha") cfg.ofr.alpha = number(value, where);
      else if (full == "bo.N_BO") cfg.n_bo = integer(value, where);
      else if (full == "bo.n_init") cfg.n_init = integer(value, where);
      else if (full == "bo.gp_restarts") cfg.gp_restarts = integer(value, where);
      else if (full == "bo.theta_lb") cfg.theta_lower = array_n(value, 9, where);
      else if (full == "bo.theta_ub") cfg.theta_upper = array_n(value, 9, where);
      else if (full == "track.file") cfg.track_file = value.get<std::string>();
      else if (full == "track.raceline") cfg.raceline_file = value.get<std::string>();
      else if (full == "track.half_width") cfg.half_width = number(value, where);
      else if (full == "rvp.v_cap") cfg.rvp.v_cap = number(value, where);
      else if (full == "rvp.a_lat_max") cfg.rvp.a_lat_max = number(value, where);
      else if (full == "rvp.a_long_max") cfg.rvp.a_long_max = number(value, where);
      else if (full == "rvp.a_brake_max") cfg.rvp.a_brake_max = number(value, where);
      else if (full == "sim.substeps") cfg.sim.substeps = integer(value, where);
      else if (full == "sim.timeout_factor") cfg.sim.timeout_factor = number(value, where);
      else if (full == "sim.start_speed") cfg.sim.start_speed = number(value, where);
      else if (full == "output.real_timing") {
        if (!value.is_boolean()) throw Error(ErrorCode::ParseError, where + ": expected a bool");
        cfg.real_timing = value.get<bool>();
      }
    }
  }
  cfg.ablation1_j_fail = j_fail_ab1;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void ExperimentConfig::validate() const {
  if (std::abs(vehicle.wheelbase() - mpc.wheelbase) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                "vehicle.L must equal vehicle.lf + vehicle.lr");
  }
  if (mpc.ts <= 0.0) throw Error(ErrorCode::InvalidArgument, "mpc.Ts must be > 0");
  if (!(mpc.u_min.v < mpc.u_max.v && mpc.u_min.delta < mpc.u_max.delta &&
        mpc.u_min.vp < mpc.u_max.vp)) {
    throw Error(ErrorCode::InvalidArgument, "u_min must be componentwise below u_max");
  }
  if (mpc.e_con_max <= 0.0 || mpc.e_lag_max <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "error normalizers must be > 0");
  }
  if (half_width <= 0.0) throw Error(ErrorCode::InvalidArgument, "track.half_width must be > 0");
  if (n_bo <= 0) throw Error(ErrorCode::InvalidArgument, "bo.N_BO must be > 0");
  if (theta_lower.size() != 9 || theta_upper.size() != 9) {
    throw Error(ErrorCode::InvalidArgument, "theta bounds must have 9 entries");
  }
  for (int i = 0; i < 9; ++i) {
    if (!(theta_lower[i] < theta_upper[i])) {
      throw Error(ErrorCode::InvalidArgument, "theta bounds must satisfy lb < ub");
    }
  }
  ofr.validate();
}

std::string ExperimentConfig::schema_text() {
  std::stringstream out;
  out << "key\tunit\tnote\n";
  for (const auto& [section, keys] : schema()) {
    for (const auto& [key, spec] : keys) {
      out << section << '.' << key << '\t' << spec.unit << '\t' << spec.note << '\n';
    }
  }
  return out.str();
}

TrackModel build_track_from_config(const ExperimentConfig& cfg) {
  if (!cfg.raceline_file.empty()) {
    return load_raceline(cfg.raceline_file, cfg.half_width);
  }
  TrackModel track = [&] {
    if (!cfg.track_file.empty()) return load_track_file(cfg.track_file, cfg.half_width);
    const Centerline line = sharp_corner_centerline(1.2, cfg.half_width);
    return TrackModel::build(line.points, line.half_widths, cfg.half_width);
  }();
  track.attach_rvp(generate_rvp(track, cfg.rvp.v_cap, cfg.rvp.a_lat_max, cfg.rvp.a_long_max,
                                cfg.rvp.a_brake_max));
  return track;
}

}  // namespace vpmpcc
