#ifndef LGD_SIMKERNEL_HPP
#define LGD_SIMKERNEL_HPP

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgd/paramspec.hpp"
#include "lgd/rng.hpp"

namespace lgd {

// Attitude plus body rates, degrees and deg/s. This is the state slice
// the rest of the pipeline consumes (logs, features, prediction targets).
struct StateUnit {
    double roll = 0, pitch = 0, yaw = 0;
    double roll_rate = 0, pitch_rate = 0, yaw_rate = 0;
};

// Simulated IMU sample: gyro in deg/s, accelerometer specific force in
// m/s^2, both in body frame.
struct SensorUnit {
    double gx = 0, gy = 0, gz = 0;
    double ax = 0, ay = 0, az = 0;
};

enum class Phase { Ground, Takeoff, Enroute, Hover, Land, Done };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Ground: return "ground";
        case Phase::Takeoff: return "takeoff";
        case Phase::Enroute: return "enroute";
        case Phase::Hover: return "hover";
        case Phase::Land: return "land";
        case Phase::Done: return "done";
    }
    return "?";
}

// Fixed airframe constants. A 1.5 kg X quad with 0.25 m arms; per-motor
// max thrust is half the weight so straight-and-level hover sits at motor
// command 0.5 exactly.
struct Airframe {
    double mass = 1.5;                 // kg
    double arm = 0.25;                 // m, hub to motor
    double ixx = 0.02, iyy = 0.02;     // kg m^2
    double izz = 0.04;
    double motor_tau = 0.05;           // s, first order thrust lag
    double g = 9.80665;                // m/s^2
    double yaw_torque_per_thrust = 0.02;  // m, prop reaction moment arm
    double lin_drag = 0.35;            // N per m/s, crude body drag
    double ang_damp = 0.02;            // N m per rad/s
    double max_thrust_per_motor() const { return mass * g / 2.0; }
    double hover_throttle() const { return 0.5; }
};

inline constexpr double kSimDt = 0.0025;     // 400 Hz physics + control
inline constexpr int kLogDecimation = 16;    // 25 Hz trace entries
inline constexpr double kLogDt = kSimDt * kLogDecimation;
inline constexpr double kGyroNoiseSd = 0.05;   // deg/s
inline constexpr double kAccelNoiseSd = 0.05;  // m/s^2
inline constexpr double kGyroRangeDps = 200.0;  // IMU full scale; readings clip here

struct PlantState {
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();   // NED, m (down positive)
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();   // NED, m/s
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();  // body to world
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // body rates, rad/s
    Eigen::Vector4d motor = Eigen::Vector4d::Zero();  // lagged thrust fraction
    Eigen::Vector3d acc_world = Eigen::Vector3d::Zero();  // last step, for the accelerometer
    double t = 0;

    double altitude() const { return -pos.z(); }
};

// Controller gains decoded from a Configuration once per config change.
struct ControlGains {
    double psc_posxy_p = 1.0, psc_velxy_p = 2.0, psc_posz_p = 1.0;
    double ang_rll_p = 4.5, ang_pit_p = 4.5, ang_yaw_p = 4.5;
    double rat_rll_p = 0.135, rat_rll_i = 0.135, rat_rll_d = 0.0036;
    double rat_pit_p = 0.135, rat_pit_i = 0.135, rat_pit_d = 0.0036;
    double rat_yaw_p = 0.18, rat_yaw_i = 0.018, rat_yaw_d = 0.0;
    double wpnav_speed_ms = 5.0;      // converted from cm/s
    double wpnav_speed_dn_ms = 1.5;
    double wpnav_speed_up_ms = 2.5;
    double wpnav_accel_ms2 = 1.0;     // converted from cm/s^2
    double angle_max_rad = 0.7853981633974483;  // from centidegrees
    double ins_pos1_z = 0.0, ins_pos2_z = 0.0, ins_pos3_z = 0.0;
};

inline double config_value_or(const ParameterTable& t, const Configuration& c, std::string_view name,
                              double fallback) {
    auto i = t.find(name);
    if (!i) return fallback;
    return c[*i];
}

inline ControlGains decode_gains(const ParameterTable& t, const Configuration& c) {
    require_config_size(t, c);
    ControlGains g;
    g.psc_posxy_p = config_value_or(t, c, "PSC_POSXY_P", g.psc_posxy_p);
    g.psc_velxy_p = config_value_or(t, c, "PSC_VELXY_P", g.psc_velxy_p);
    g.psc_posz_p = config_value_or(t, c, "PSC_POSZ_P", g.psc_posz_p);
    g.ang_rll_p = config_value_or(t, c, "ATC_ANG_RLL_P", g.ang_rll_p);
    g.ang_pit_p = config_value_or(t, c, "ATC_ANG_PIT_P", g.ang_pit_p);
    g.ang_yaw_p = config_value_or(t, c, "ATC_ANG_YAW_P", g.ang_yaw_p);
    g.rat_rll_p = config_value_or(t, c, "ATC_RAT_RLL_P", g.rat_rll_p);
    g.rat_rll_i = config_value_or(t, c, "ATC_RAT_RLL_I", g.rat_rll_i);
    g.rat_rll_d = config_value_or(t, c, "ATC_RAT_RLL_D", g.rat_rll_d);
    g.rat_pit_p = config_value_or(t, c, "ATC_RAT_PIT_P", g.rat_pit_p);
    g.rat_pit_i = config_value_or(t, c, "ATC_RAT_PIT_I", g.rat_pit_i);
    g.rat_pit_d = config_value_or(t, c, "ATC_RAT_PIT_D", g.rat_pit_d);
    g.rat_yaw_p = config_value_or(t, c, "ATC_RAT_YAW_P", g.rat_yaw_p);
    g.rat_yaw_i = config_value_or(t, c, "ATC_RAT_YAW_I", g.rat_yaw_i);
    g.rat_yaw_d = config_value_or(t, c, "ATC_RAT_YAW_D", g.rat_yaw_d);
    g.wpnav_speed_ms = config_value_or(t, c, "WPNAV_SPEED", 500.0) * 0.01;
    g.wpnav_speed_dn_ms = config_value_or(t, c, "WPNAV_SPEED_DN", 150.0) * 0.01;
    g.wpnav_speed_up_ms = config_value_or(t, c, "WPNAV_SPEED_UP", 250.0) * 0.01;
    g.wpnav_accel_ms2 = config_value_or(t, c, "WPNAV_ACCEL", 100.0) * 0.01;
    g.angle_max_rad = config_value_or(t, c, "ANGLE_MAX", 4500.0) * 0.01 * M_PI / 180.0;
    g.ins_pos1_z = config_value_or(t, c, "INS_POS1_Z", 0.0);
    g.ins_pos2_z = config_value_or(t, c, "INS_POS2_Z", 0.0);
    g.ins_pos3_z = config_value_or(t, c, "INS_POS3_Z", 0.0);
    return g;
}

// What the control loops feed on: the estimator output, which lags the
// physical state by a few samples (filtering plus fusion delay).
struct EstimateSnapshot {
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

inline constexpr int kEstimateLatencySteps = 12;  // 30 ms at the 400 Hz loop

struct ControllerMemory {
    Eigen::Vector3d rate_int = Eigen::Vector3d::Zero();
    Eigen::Vector3d last_rate_err = Eigen::Vector3d::Zero();
    Eigen::Vector3d dterm = Eigen::Vector3d::Zero();  // filtered derivative state
    bool primed = false;
    EstimateSnapshot history[kEstimateLatencySteps + 1];
    int history_count = 0;  // ring fill, head at history_head
    int history_head = 0;
    // attitude estimate, integrated from the clipped gyro. Exact while the
    // body rates stay inside the gyro full scale; drifts once they leave it.
    Eigen::Quaterniond est_q = Eigen::Quaterniond::Identity();
    bool est_q_init = false;
};

struct Setpoint {
    Eigen::Vector3d target_pos = Eigen::Vector3d::Zero();  // NED
    double target_yaw = 0.0;                               // rad
};

struct ActuatorCommand {
    Eigen::Vector4d pre_clamp = Eigen::Vector4d::Zero();
    Eigen::Vector4d post_clamp = Eigen::Vector4d::Zero();
    StateUnit reference;  // attitude / rate targets the loops were tracking
};

class SimulationDiverged : public std::runtime_error {
public:
    explicit SimulationDiverged(double last_finite_t)
        : std::runtime_error("simulation diverged, last finite state at t=" + std::to_string(last_finite_t)),
          last_finite_t_(last_finite_t) {}
    double last_finite_t() const { return last_finite_t_; }

private:
    double last_finite_t_;
};

inline double wrap_pi(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

inline double wrap_deg(double a) {
    while (a > 180.0) a -= 360.0;
    while (a <= -180.0) a += 360.0;
    return a;
}

inline double rad2deg(double r) { return r * 180.0 / M_PI; }
inline double deg2rad(double d) { return d * M_PI / 180.0; }

// ZYX Euler angles from the body-to-world quaternion, radians.
inline Eigen::Vector3d euler_zyx(const Eigen::Quaterniond& q) {
    Eigen::Matrix3d r = q.toRotationMatrix();
    double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    double roll = std::atan2(r(2, 1), r(2, 2));
    double yaw = std::atan2(r(1, 0), r(0, 0));
    return {roll, pitch, yaw};
}

inline StateUnit state_unit_of(const PlantState& p) {
    Eigen::Vector3d e = euler_zyx(p.q);
    StateUnit s;
    s.roll = wrap_deg(rad2deg(e.x()));
    s.pitch = wrap_deg(rad2deg(e.y()));
    s.yaw = wrap_deg(rad2deg(e.z()));
    s.roll_rate = rad2deg(p.omega.x());
    s.pitch_rate = rad2deg(p.omega.y());
    s.yaw_rate = rad2deg(p.omega.z());
    return s;
}

namespace detail {

// X layout, motor order FR, RL, FL, RR. Columns: x, y position sign,
// spin sign (reaction torque direction on the body z axis).
struct MotorGeom {
    double x, y, spin;
};
inline constexpr MotorGeom kMotors[4] = {
    {+1.0, +1.0, +1.0},  // front right
    {-1.0, -1.0, +1.0},  // rear left
    {+1.0, -1.0, -1.0},  // front left
    {-1.0, +1.0, -1.0},  // rear right
};

}  // namespace detail

// Rigid body update, semi-implicit Euler. Motor commands pass through the
// first order thrust lag before producing forces.
inline void integrate_plant(PlantState& plant, const Eigen::Vector4d& motor_cmds, double dt,
                            const Airframe& af = Airframe{}) {
    const double tmax = af.max_thrust_per_motor();
    for (int i = 0; i < 4; ++i)
        plant.motor[i] += (std::clamp(motor_cmds[i], 0.0, 1.0) - plant.motor[i]) * dt / af.motor_tau;

    double thrust[4];
    double total_thrust = 0;
    for (int i = 0; i < 4; ++i) {
        thrust[i] = tmax * plant.motor[i];
        total_thrust += thrust[i];
    }
    const double darm = af.arm / std::sqrt(2.0);  // X frame moment arm per axis
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
        const auto& mg = detail::kMotors[i];
        torque.x() += -(mg.y * darm) * thrust[i];
        torque.y() += (mg.x * darm) * thrust[i];
        torque.z() += mg.spin * af.yaw_torque_per_thrust * thrust[i];
    }
    torque -= af.ang_damp * plant.omega;

    Eigen::Vector3d inertia(af.ixx, af.iyy, af.izz);
    Eigen::Vector3d iw = inertia.cwiseProduct(plant.omega);
    Eigen::Vector3d domega = (torque - plant.omega.cross(iw)).cwiseQuotient(inertia);
    plant.omega += domega * dt;

    Eigen::Vector3d f_body(0, 0, -total_thrust);
    Eigen::Vector3d f_world = plant.q * f_body + Eigen::Vector3d(0, 0, af.mass * af.g) - af.lin_drag * plant.vel;
    plant.acc_world = f_world / af.mass;
    plant.vel += plant.acc_world * dt;
    plant.pos += plant.vel * dt;

    Eigen::Quaterniond dq(0.0, plant.omega.x() * 0.5 * dt, plant.omega.y() * 0.5 * dt, plant.omega.z() * 0.5 * dt);
    Eigen::Quaterniond qd = plant.q * dq;
    plant.q.w() += qd.w();
    plant.q.x() += qd.x();
    plant.q.y() += qd.y();
    plant.q.z() += qd.z();
    plant.q.normalize();

    double t_before = plant.t;
    plant.t += dt;

    bool finite = plant.pos.allFinite() && plant.vel.allFinite() && plant.omega.allFinite() &&
                  std::isfinite(plant.q.w()) && plant.pos.cwiseAbs().maxCoeff() < 1e6 &&
                  plant.omega.cwiseAbs().maxCoeff() < 1e6;
    if (!finite) throw SimulationDiverged(t_before);
}

// One controller update followed by one physics step of dt seconds.
// Runs the cascade: position P -> capped velocity setpoint ->
// velocity P -> capped acceleration -> lean angles capped by ANGLE_MAX ->
// angle P -> rate PID -> motor mix clamped to [0, 1].
inline ActuatorCommand step(PlantState& plant, ControllerMemory& mem, const ControlGains& g, const Setpoint& sp,
                            double dt, const Airframe& af = Airframe{}) {
    if (!(dt > 0.0) || dt > 0.05) throw std::invalid_argument("step: dt must be in (0, 0.05]");

    // push the current physical state and control on the delayed estimate
    {
        EstimateSnapshot now{plant.pos, plant.vel, plant.q, plant.omega};
        mem.history_head = (mem.history_head + 1) % (kEstimateLatencySteps + 1);
        mem.history[mem.history_head] = now;
        if (mem.history_count < kEstimateLatencySteps + 1) ++mem.history_count;
    }
    int lag = std::min(mem.history_count - 1, kEstimateLatencySteps);
    const EstimateSnapshot& est =
        mem.history[(mem.history_head - lag + (kEstimateLatencySteps + 1)) % (kEstimateLatencySteps + 1)];

    // attitude comes from integrating the gyro, so it is only as good as the
    // gyro: inside full scale this reproduces the true attitude exactly,
    // beyond it the estimate falls behind the real motion
    const double gyro_cap = deg2rad(kGyroRangeDps);
    if (!mem.est_q_init) {
        mem.est_q = plant.q;  // pre-arm alignment on the ground
        mem.est_q_init = true;
    } else {
        Eigen::Vector3d w = plant.omega.cwiseMax(-gyro_cap).cwiseMin(gyro_cap);
        Eigen::Quaterniond dq(0.0, w.x() * 0.5 * dt, w.y() * 0.5 * dt, w.z() * 0.5 * dt);
        Eigen::Quaterniond qd = mem.est_q * dq;
        mem.est_q.w() += qd.w();
        mem.est_q.x() += qd.x();
        mem.est_q.y() += qd.y();
        mem.est_q.z() += qd.z();
        mem.est_q.normalize();
    }

    const Eigen::Vector3d euler = euler_zyx(mem.est_q);
    const double roll = euler.x(), pitch = euler.y(), yaw = euler.z();

    // --- position loop ---
    Eigen::Vector3d perr = sp.target_pos - est.pos;
    double dist_xy = std::hypot(perr.x(), perr.y());
    double vmag = 0.0;
    if (dist_xy > 1e-6) {
        double v_p = g.psc_posxy_p * dist_xy;
        // square root braking ramp so the vehicle can actually stop inside
        // the configured acceleration at the waypoint
        double v_brake = std::sqrt(2.0 * g.wpnav_accel_ms2 * dist_xy);
        vmag = std::min({g.wpnav_speed_ms, v_p, v_brake});
    }
    Eigen::Vector2d vel_sp_xy = Eigen::Vector2d::Zero();
    if (dist_xy > 1e-6) vel_sp_xy = Eigen::Vector2d(perr.x(), perr.y()) / dist_xy * vmag;

    double alt_err = -perr.z();  // positive means climb needed... perr.z = tgt - pos (down); climb err = -(tgt-pos).z
    double climb_sp = g.psc_posz_p * alt_err;
    climb_sp = std::clamp(climb_sp, -g.wpnav_speed_dn_ms, g.wpnav_speed_up_ms);

    // --- velocity loop ---
    Eigen::Vector2d verr(vel_sp_xy.x() - est.vel.x(), vel_sp_xy.y() - est.vel.y());
    Eigen::Vector2d acc_sp = g.psc_velxy_p * verr;
    double an = acc_sp.norm();
    if (an > g.wpnav_accel_ms2) acc_sp *= g.wpnav_accel_ms2 / an;

    // desired horizontal acceleration in the heading frame -> lean angles
    double cy = std::cos(yaw), sy = std::sin(yaw);
    double ax_body = cy * acc_sp.x() + sy * acc_sp.y();   // forward
    double ay_body = -sy * acc_sp.x() + cy * acc_sp.y();  // right
    double pitch_t = std::atan2(-ax_body, af.g);  // accelerate forward = nose down
    double roll_t = std::atan2(ay_body, af.g);
    double tilt = std::hypot(roll_t, pitch_t);
    if (tilt > g.angle_max_rad && tilt > 1e-9) {
        roll_t *= g.angle_max_rad / tilt;
        pitch_t *= g.angle_max_rad / tilt;
    }

    // --- angle loop ---
    constexpr double kRateLimitRP = 12.566370614359172;  // 720 deg/s
    constexpr double kRateLimitYaw = 2.0943951023931953;  // 120 deg/s
    Eigen::Vector3d rate_sp;
    rate_sp.x() = std::clamp(g.ang_rll_p * wrap_pi(roll_t - roll), -kRateLimitRP, kRateLimitRP);
    rate_sp.y() = std::clamp(g.ang_pit_p * wrap_pi(pitch_t - pitch), -kRateLimitRP, kRateLimitRP);
    rate_sp.z() = std::clamp(g.ang_yaw_p * wrap_pi(sp.target_yaw - yaw), -kRateLimitYaw, kRateLimitYaw);

    // --- rate PID ---
    Eigen::Vector3d kp(g.rat_rll_p, g.rat_pit_p, g.rat_yaw_p);
    Eigen::Vector3d ki(g.rat_rll_i, g.rat_pit_i, g.rat_yaw_i);
    Eigen::Vector3d kd(g.rat_rll_d, g.rat_pit_d, g.rat_yaw_d);
    // rate feedback comes from the same gyro and clips at the same full scale
    Eigen::Vector3d omega_meas = est.omega.cwiseMax(-gyro_cap).cwiseMin(gyro_cap);
    Eigen::Vector3d rerr = rate_sp - omega_meas;
    constexpr double kIMax = 0.3;
    constexpr double kDFiltHz = 20.0;
    double dalpha = 1.0 - std::exp(-2.0 * M_PI * kDFiltHz * dt);
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
        mem.rate_int[i] = std::clamp(mem.rate_int[i] + ki[i] * rerr[i] * dt, -kIMax, kIMax);
        double deriv = mem.primed ? (rerr[i] - mem.last_rate_err[i]) / dt : 0.0;
        mem.dterm[i] += dalpha * (deriv - mem.dterm[i]);
        out[i] = kp[i] * rerr[i] + mem.rate_int[i] + kd[i] * mem.dterm[i];
    }
    mem.last_rate_err = rerr;
    mem.primed = true;
    out.x() = std::clamp(out.x(), -0.9, 0.9);
    out.y() = std::clamp(out.y(), -0.9, 0.9);
    out.z() = std::clamp(out.z(), -0.45, 0.45);

    // --- vertical loop ---
    double climb = -est.vel.z();
    constexpr double kThrPerClimbErr = 0.12;
    double thr = af.hover_throttle() + kThrPerClimbErr * (climb_sp - climb);
    double ctilt = std::cos(roll) * std::cos(pitch);
    thr /= std::max(ctilt, 0.5);  // keep lift through moderate lean

    // --- mixer ---
    ActuatorCommand cmd;
    for (int i = 0; i < 4; ++i) {
        const auto& mg = detail::kMotors[i];
        double c = thr + (-mg.y) * out.x() + mg.x * out.y() + mg.spin * out.z();
        cmd.pre_clamp[i] = c;
        cmd.post_clamp[i] = std::clamp(c, 0.0, 1.0);
    }
    cmd.reference.roll = rad2deg(roll_t);
    cmd.reference.pitch = rad2deg(pitch_t);
    cmd.reference.yaw = wrap_deg(rad2deg(sp.target_yaw));
    cmd.reference.roll_rate = rad2deg(rate_sp.x());
    cmd.reference.pitch_rate = rad2deg(rate_sp.y());
    cmd.reference.yaw_rate = rad2deg(rate_sp.z());

    integrate_plant(plant, cmd.post_clamp, dt, af);
    return cmd;
}

// Config-level convenience overload matching the rest of the module API.
inline ActuatorCommand step(PlantState& plant, ControllerMemory& mem, const ParameterTable& table,
                            const Configuration& config, const Setpoint& sp, double dt) {
    ControlGains g = decode_gains(table, config);
    return step(plant, mem, g, sp, dt);
}

// Simulated IMU read. The accelerometer sits INS_POS1_Z meters below the
// body origin (primary IMU), which adds the centripetal term
// omega x (omega x r) when the body spins.
inline SensorUnit sensor_read(const PlantState& p, const ControlGains& g, Rng& rng, const Airframe& af = Airframe{},
                              bool with_noise = true) {
    Eigen::Vector3d gravity(0, 0, af.g);
    Eigen::Vector3d specific_force = p.q.conjugate() * (p.acc_world - gravity);
    Eigen::Vector3d r(0, 0, g.ins_pos1_z);
    Eigen::Vector3d lever = p.omega.cross(p.omega.cross(r));
    double ng = with_noise ? 1.0 : 0.0;
    SensorUnit s;
    auto gyro = [&](double w) {
        return std::clamp(rad2deg(w) + ng * rng.normal(0.0, kGyroNoiseSd), -kGyroRangeDps,
                          kGyroRangeDps);
    };
    s.gx = gyro(p.omega.x());
    s.gy = gyro(p.omega.y());
    s.gz = gyro(p.omega.z());
    s.ax = specific_force.x() + lever.x() + ng * rng.normal(0.0, kAccelNoiseSd);
    s.ay = specific_force.y() + lever.y() + ng * rng.normal(0.0, kAccelNoiseSd);
    s.az = specific_force.z() + lever.z() + ng * rng.normal(0.0, kAccelNoiseSd);
    return s;
}

struct Mission {
    double takeoff_alt = 10.0;                 // m above ground
    std::vector<Eigen::Vector3d> waypoints;    // north, east, altitude-up, m
    double acceptance_radius = 1.5;            // m, tight enough that corner
                                               // cuts stay well off the
                                               // deviation monitor threshold
    double duration_cap = 180.0;               // s
};

// Built-in course: climb to 10 m, fly a 40 m square, cut back across the
// diagonal, land where it started.
inline Mission default_mission() {
    Mission m;
    m.takeoff_alt = 10.0;
    m.waypoints = {
        {40, 0, 10}, {40, 40, 10}, {0, 40, 10}, {0, 0, 10}, {40, 40, 10}, {0, 0, 10},
    };
    return m;
}

// Mission file: one directive per line, `TAKEOFF alt`, `WP x y z`
// (z = altitude up), `LAND`. Blank lines and `#` comments ignored.
inline Mission parse_mission(const std::vector<std::string>& lines) {
    Mission m;
    m.takeoff_alt = 10.0;
    bool saw_land = false;
    std::size_t row = 0;
    for (const auto& raw : lines) {
        ++row;
        std::string line(trim(raw));
        if (line.empty() || line[0] == '#') continue;
        if (saw_land) throw std::runtime_error("mission row " + std::to_string(row) + ": directives after LAND");
        auto fail = [&](const std::string& msg) {
            throw std::runtime_error("mission row " + std::to_string(row) + ": " + msg);
        };
        if (line.rfind("TAKEOFF", 0) == 0) {
            double alt;
            if (!parse_double(line.substr(7), alt) || alt <= 0) fail("bad TAKEOFF altitude");
            m.takeoff_alt = alt;
        } else if (line.rfind("WP", 0) == 0) {
            std::string rest = line.substr(2);
            for (auto& ch : rest)
                if (ch == '\t') ch = ' ';
            std::vector<double> v;
            std::size_t pos = 0;
            while (pos < rest.size()) {
                while (pos < rest.size() && rest[pos] == ' ') ++pos;
                std::size_t end = rest.find(' ', pos);
                if (end == std::string::npos) end = rest.size();
                if (end > pos) {
                    double d;
                    if (!parse_double(std::string_view(rest).substr(pos, end - pos), d)) fail("bad WP coordinate");
                    v.push_back(d);
                }
                pos = end;
            }
            if (v.size() != 3) fail("WP needs exactly x y z");
            m.waypoints.emplace_back(v[0], v[1], v[2]);
        } else if (line == "LAND") {
            saw_land = true;
        } else {
            fail("unknown directive '" + line + "'");
        }
    }
    return m;
}

inline Mission load_mission(const std::string& path) { return parse_mission(read_lines(path)); }

struct InjectionPlan {
    double time = 20.0;  // s into the flight
    Configuration config;
};

struct TraceEntry {
    double t = 0;
    StateUnit state;
    SensorUnit sensors;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
    Eigen::Vector4d motor_pre = Eigen::Vector4d::Zero();
    Eigen::Vector4d motor_post = Eigen::Vector4d::Zero();
    StateUnit reference;
    Phase phase = Phase::Ground;
    double alt_target = 0;
    bool leg_valid = false;                          // enroute legs only
    Eigen::Vector2d leg_a = Eigen::Vector2d::Zero();  // horizontal leg endpoints
    Eigen::Vector2d leg_b = Eigen::Vector2d::Zero();
};

struct TraceEvent {
    double t = 0;
    std::string tag;
};

struct FlightTrace {
    std::vector<TraceEntry> entries;
    std::vector<TraceEvent> events;
    bool diverged = false;
    bool has_event(std::string_view tag) const {
        for (const auto& e : events)
            if (e.tag == tag) return true;
        return false;
    }
};

// Flies the mission under `config`. If `injection` is set the active
// configuration is swapped mid-flight at the stated time, which models a
// parameter write from the GCS while airborne. Divergence does not throw
// here: the partial trace is returned with a `diverged` event so the
// monitor can account for it.
inline FlightTrace run_mission(const ParameterTable& table, const Configuration& config, const Mission& mission,
                               std::uint64_t seed, const std::optional<InjectionPlan>& injection = std::nullopt,
                               const Airframe& af = Airframe{}) {
    require_config_size(table, config);
    if (mission.takeoff_alt <= 0) throw std::invalid_argument("run_mission: takeoff altitude must be positive");
    if (mission.duration_cap <= 0) throw std::invalid_argument("run_mission: duration cap must be positive");

    ControlGains gains = decode_gains(table, config);
    if (injection) {
        require_config_size(table, injection->config);
        double climb = std::max(gains.wpnav_speed_up_ms, 0.1);
        double takeoff_estimate = mission.takeoff_alt / climb + 2.0;
        if (injection->time <= takeoff_estimate)
            throw std::invalid_argument("run_mission: injection time " + std::to_string(injection->time) +
                                        " is inside the takeoff window (ends ~" + std::to_string(takeoff_estimate) +
                                        ")");
    }

    FlightTrace trace;
    PlantState plant;
    ControllerMemory mem;
    Phase phase = Phase::Takeoff;
    std::size_t wp_index = 0;
    bool injected = false;
    bool airborne = false;

    Eigen::Vector3d takeoff_top(0, 0, -mission.takeoff_alt);
    Eigen::Vector2d leg_a(0, 0), leg_b(0, 0);
    bool leg_valid = false;
    Eigen::Vector3d target = takeoff_top;
    double target_yaw = 0.0;
    Eigen::Vector3d land_spot = Eigen::Vector3d::Zero();

    auto wp_ned = [&](std::size_t i) {
        const auto& w = mission.waypoints[i];
        return Eigen::Vector3d(w.x(), w.y(), -w.z());
    };

    const long max_steps = (long)std::ceil(mission.duration_cap / kSimDt);
    long last_logged_step = -1;

    auto log_entry = [&](long step_idx, const ActuatorCommand& cmd) {
        if (step_idx == last_logged_step) return;  // impact on a decimation step
        Rng sensor_rng(mix_key({seed, 0x53454e53ULL, (std::uint64_t)step_idx}));
        TraceEntry e;
        e.t = step_idx * kSimDt;
        e.state = state_unit_of(plant);
        e.sensors = sensor_read(plant, gains, sensor_rng, af);
        e.pos = plant.pos;
        e.vel = plant.vel;
        e.motor_pre = cmd.pre_clamp;
        e.motor_post = cmd.post_clamp;
        e.reference = cmd.reference;
        e.phase = phase;
        e.alt_target = -target.z();
        e.leg_valid = leg_valid;
        e.leg_a = leg_a;
        e.leg_b = leg_b;
        trace.entries.push_back(e);
        last_logged_step = step_idx;
    };

    for (long i = 0; i < max_steps; ++i) {
        double t = i * kSimDt;

        if (injection && !injected && t >= injection->time) {
            gains = decode_gains(table, injection->config);
            injected = true;
            trace.events.push_back({t, "config_injected"});
        }

        // phase transitions, evaluated before the control step
        switch (phase) {
            case Phase::Takeoff:
                if (plant.altitude() >= mission.takeoff_alt - 0.2) {
                    trace.events.push_back({t, "takeoff_complete"});
                    if (mission.waypoints.empty()) {
                        phase = Phase::Land;
                        land_spot = plant.pos;
                        target = Eigen::Vector3d(land_spot.x(), land_spot.y(), 0.0);
                        leg_valid = false;
                    } else {
                        phase = Phase::Enroute;
                        wp_index = 0;
                        leg_a = Eigen::Vector2d(plant.pos.x(), plant.pos.y());
                        leg_b = wp_ned(0).head<2>();
                        leg_valid = true;
                        target = wp_ned(0);
                        Eigen::Vector2d dir = leg_b - leg_a;
                        if (dir.norm() > 1e-6) target_yaw = std::atan2(dir.y(), dir.x());
                    }
                }
                break;
            case Phase::Enroute: {
                if ((plant.pos - wp_ned(wp_index)).norm() <= mission.acceptance_radius) {
                    trace.events.push_back({t, "waypoint_reached:" + std::to_string(wp_index)});
                    if (wp_index + 1 < mission.waypoints.size()) {
                        leg_a = wp_ned(wp_index).head<2>();
                        ++wp_index;
                        leg_b = wp_ned(wp_index).head<2>();
                        target = wp_ned(wp_index);
                        Eigen::Vector2d dir = leg_b - leg_a;
                        if (dir.norm() > 1e-6) target_yaw = std::atan2(dir.y(), dir.x());
                    } else {
                        phase = Phase::Land;
                        land_spot = plant.pos;
                        target = Eigen::Vector3d(land_spot.x(), land_spot.y(), 0.0);
                        leg_valid = false;
                    }
                }
                break;
            }
            default:
                break;
        }

        Setpoint sp;
        sp.target_pos = target;
        sp.target_yaw = target_yaw;

        ActuatorCommand cmd;
        try {
            cmd = step(plant, mem, gains, sp, kSimDt, af);
        } catch (const SimulationDiverged& d) {
            trace.diverged = true;
            trace.events.push_back({d.last_finite_t(), "diverged"});
            break;
        }

        if (!airborne && plant.altitude() > 0.3) airborne = true;

        // ground contact handling after integration
        if (plant.pos.z() >= 0.0) {
            if (!airborne) {
                // still sitting on the pad spooling up
                plant.pos.z() = 0.0;
                if (plant.vel.z() > 0.0) plant.vel.z() = 0.0;
            } else {
                log_entry(i + 1, cmd);
                if (phase == Phase::Land) {
                    trace.events.push_back({plant.t, "landed"});
                    trace.events.push_back({plant.t, "mission_complete"});
                } else {
                    trace.events.push_back({plant.t, "ground_impact"});
                }
                break;
            }
        }

        if ((i + 1) % kLogDecimation == 0) log_entry(i + 1, cmd);

        if (i + 1 >= max_steps) {
            trace.events.push_back({plant.t, "duration_cap"});
            log_entry(i + 1, cmd);
        }
    }

    return trace;
}

}  // namespace lgd

#endif
