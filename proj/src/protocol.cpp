#include "armteleop/protocol.hpp"

namespace armteleop::protocol {

namespace {

Json limits_to_json(const RobotLimits& l)
{
    return Json{{"max_line_velocity", l.max_line_velocity},
                {"max_line_acceleration", l.max_line_acceleration},
                {"gripper_speed", l.gripper_speed},
                {"command_latency", l.command_latency},
                {"max_angular_velocity", l.max_angular_velocity},
                {"max_angular_acceleration", l.max_angular_acceleration}};
}

double num(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw ProtocolError("malformed", std::string("field \"") + key + "\" must be a number");
    }
    return it->get<double>();
}

RobotLimits limits_from_json(const Json& j)
{
    RobotLimits l;
    l.max_line_velocity = num(j, "max_line_velocity");
    l.max_line_acceleration = num(j, "max_line_acceleration");
    l.gripper_speed = num(j, "gripper_speed");
    l.command_latency = num(j, "command_latency");
    l.max_angular_velocity = num(j, "max_angular_velocity");
    l.max_angular_acceleration = num(j, "max_angular_acceleration");
    return l;
}

Json server_to_json(const ServerInfo& s)
{
    Json joints = Json::array();
    for (Eigen::Index i = 0; i < s.lower.size(); ++i) {
        joints.push_back(Json{{"limits", Json::array({s.lower[i], s.upper[i]})}, {"max_vel", s.max_velocity[i]}});
    }
    return Json{{"dof", s.dof},
                {"reach_m", s.reach_m},
                {"joints", std::move(joints)},
                {"limits", limits_to_json(s.limits)},
                {"frame_rate", s.frame_rate}};
}

ServerInfo server_from_json(const Json& j)
{
    if (!j.is_object()) throw ProtocolError("malformed", "\"server\" must be an object");
    ServerInfo s;
    const auto dof = j.find("dof");
    if (dof == j.end() || !dof->is_number_unsigned()) throw ProtocolError("malformed", "\"dof\" must be a count");
    s.dof = dof->get<std::size_t>();
    s.reach_m = num(j, "reach_m");
    const auto joints = j.find("joints");
    if (joints == j.end() || !joints->is_array() || joints->size() != s.dof) {
        throw ProtocolError("malformed", "\"joints\" must list dof entries");
    }
    const auto n = static_cast<Eigen::Index>(s.dof);
    s.lower.resize(n);
    s.upper.resize(n);
    s.max_velocity.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Json& jj = (*joints)[static_cast<std::size_t>(i)];
        const Eigen::VectorXd lim = vec_from_json(jj.at("limits"), "limits", 2);
        s.lower[i] = lim[0];
        s.upper[i] = lim[1];
        s.max_velocity[i] = num(jj, "max_vel");
    }
    const auto lim = j.find("limits");
    if (lim == j.end() || !lim->is_object()) throw ProtocolError("malformed", "\"limits\" must be an object");
    s.limits = limits_from_json(*lim);
    s.frame_rate = num(j, "frame_rate");
    return s;
}

Role role_from(const std::string& s)
{
    if (s == "operator") return Role::operator_;
    if (s == "observer") return Role::observer;
    throw ProtocolError("malformed", "unknown role \"" + s + "\"");
}

Json report_to_json(const TaskReport& r)
{
    return Json{{"task", task_name(r.kind)},
                {"from", std::string(1, r.start_marker)},
                {"to", std::string(1, r.end_marker)},
                {"success", r.success},
                {"reason", r.reason},
                {"robot_motion_s", r.robot_motion_time},
                {"anomaly_frames", r.anomaly_frames},
                {"frames", r.frames},
                {"grasped", r.grasped},
                {"cube", vec_to_json(r.cube_final)},
                {"placement_error_m", r.placement_error},
                {"yaw_change_deg", r.yaw_change_deg}};
}

char marker_from(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get<std::string>().size() != 1) {
        throw ProtocolError("malformed", std::string("field \"") + key + "\" must be a marker letter");
    }
    return it->get<std::string>()[0];
}

std::size_t count_from(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) {
        throw ProtocolError("malformed", std::string("field \"") + key + "\" must be a count");
    }
    return it->get<std::size_t>();
}

bool flag_from(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_boolean()) {
        throw ProtocolError("malformed", std::string("field \"") + key + "\" must be a boolean");
    }
    return it->get<bool>();
}

std::string text_from(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ProtocolError("malformed", std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

TaskReport report_from_json(const Json& j)
{
    TaskReport r;
    try {
        r.kind = parse_task_kind(text_from(j, "task"));
    } catch (const TaskError& e) {
        throw ProtocolError("malformed", e.what());
    }
    r.start_marker = marker_from(j, "from");
    r.end_marker = marker_from(j, "to");
    r.success = flag_from(j, "success");
    r.reason = text_from(j, "reason");
    r.robot_motion_time = num(j, "robot_motion_s");
    r.anomaly_frames = count_from(j, "anomaly_frames");
    r.frames = count_from(j, "frames");
    r.grasped = flag_from(j, "grasped");
    r.cube_final = vec_from_json(j.at("cube"), "cube", 3);
    r.placement_error = num(j, "placement_error_m");
    r.yaw_change_deg = num(j, "yaw_change_deg");
    return r;
}

} // namespace

std::string role_name(Role r)
{
    return r == Role::operator_ ? "operator" : "observer";
}

Json to_json(const Message& m)
{
    struct {
        Json operator()(const Hello& h) const
        {
            Json j{{"kind", "hello"}, {"version", h.version}, {"role", role_name(h.role)}};
            if (h.server) j["server"] = server_to_json(*h.server);
            return j;
        }
        Json operator()(const Hand& h) const
        {
            Json j{{"kind", "hand"}};
            j.update(hand_to_json(h.sample));
            return j;
        }
        Json operator()(const Event& e) const { return Json{{"kind", "event"}, {"event", event_to_json(e.event)}}; }
        Json operator()(const Frame& f) const
        {
            Json j{{"kind", "frame"}};
            j.update(frame_to_json(f.frame));
            return j;
        }
        Json operator()(const Error& e) const
        {
            return Json{{"kind", "error"}, {"code", e.code}, {"message", e.message}};
        }
        Json operator()(const TaskResult& t) const
        {
            Json j{{"kind", "task_result"}};
            j.update(report_to_json(t.report));
            return j;
        }
    } visitor;
    return std::visit(visitor, m);
}

Message from_json(const Json& j)
{
    if (!j.is_object()) throw ProtocolError("malformed", "message must be a JSON object");
    const auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) throw ProtocolError("malformed", "message has no \"kind\"");
    const std::string kind = kind_it->get<std::string>();
    try {
        if (kind == "hello") {
            Hello h;
            const auto v = j.find("version");
            if (v == j.end() || !v->is_number_integer()) throw ProtocolError("malformed", "hello needs an integer version");
            h.version = v->get<int>();
            h.role = j.contains("role") ? role_from(text_from(j, "role")) : Role::operator_;
            if (j.contains("server")) h.server = server_from_json(j.at("server"));
            return h;
        }
        if (kind == "hand") return Hand{hand_from_json(j)};
        if (kind == "event") {
            if (!j.contains("event")) throw ProtocolError("malformed", "event message has no \"event\"");
            return Event{event_from_json(j.at("event"))};
        }
        if (kind == "frame") return Frame{frame_from_json(j)};
        if (kind == "error") return Error{text_from(j, "code"), text_from(j, "message")};
        if (kind == "task_result") return TaskResult{report_from_json(j)};
    } catch (const FormatError& e) {
        throw ProtocolError("malformed", e.what());
    } catch (const Json::exception& e) {
        throw ProtocolError("malformed", e.what());
    }
    throw ProtocolError("unknown_kind", "unknown message kind \"" + kind + "\"");
}

std::string encode(const Message& m)
{
    return to_json(m).dump();
}

Message decode(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ProtocolError("malformed", std::string("invalid JSON: ") + e.what());
    }
    return from_json(j);
}

ServerInfo server_info(const SessionConfig& cfg)
{
    ServerInfo s;
    s.dof = cfg.chain.dof();
    s.reach_m = cfg.chain.reach_radius();
    s.lower = cfg.chain.lower_limits();
    s.upper = cfg.chain.upper_limits();
    s.max_velocity = cfg.chain.max_velocities();
    s.limits = cfg.limits;
    s.frame_rate = cfg.frame_rate;
    return s;
}

} // namespace armteleop::protocol
