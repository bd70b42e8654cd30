#include "armteleop/codec.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace armteleop {

namespace {

const Json& field_of(const Json& j, const char* field)
{
    if (!j.is_object()) throw FormatError("expected an object");
    const auto it = j.find(field);
    if (it == j.end()) throw FormatError(std::string("missing field \"") + field + "\"");
    return *it;
}

double number_of(const Json& j, const char* field)
{
    const Json& v = field_of(j, field);
    if (!v.is_number()) throw FormatError(std::string("field \"") + field + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw FormatError(std::string("field \"") + field + "\" must be finite");
    return d;
}

bool bool_of(const Json& j, const char* field)
{
    const Json& v = field_of(j, field);
    if (!v.is_boolean()) throw FormatError(std::string("field \"") + field + "\" must be a boolean");
    return v.get<bool>();
}

Json pose_to_json(const Pose& p)
{
    return Json{{"pos", vec_to_json(p.position)}, {"q", quat_to_json(p.orientation)}};
}

Pose pose_from_json(const Json& j)
{
    return Pose(vec_from_json(field_of(j, "pos"), "pos", 3), quat_from_json(field_of(j, "q"), "q"));
}

} // namespace

TraceError::TraceError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
{
}

Json vec_to_json(const Eigen::VectorXd& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const Json& j, const char* field, Eigen::Index expected)
{
    if (!j.is_array()) throw FormatError(std::string("field \"") + field + "\" must be an array");
    if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
        throw FormatError(std::string("field \"") + field + "\" must have " + std::to_string(expected) + " entries");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw FormatError(std::string("field \"") + field + "\" must hold numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
        if (!std::isfinite(v[static_cast<Eigen::Index>(i)])) {
            throw FormatError(std::string("field \"") + field + "\" must be finite");
        }
    }
    return v;
}

Json quat_to_json(const Quat& q)
{
    return Json::array({q.w(), q.x(), q.y(), q.z()});
}

Quat quat_from_json(const Json& j, const char* field)
{
    const Eigen::VectorXd v = vec_from_json(j, field, 4);
    if (v.norm() < 1e-9) throw FormatError(std::string("field \"") + field + "\" is not a rotation");
    return Quat(v[0], v[1], v[2], v[3]);
}

Json hand_to_json(const HandSample& h)
{
    return Json{{"t", h.timestamp},
                {"pos", vec_to_json(h.pose.position)},
                {"q", quat_to_json(h.pose.orientation)},
                {"aperture", h.aperture}};
}

HandSample hand_from_json(const Json& j)
{
    const double t = number_of(j, "t");
    const Pose p(vec_from_json(field_of(j, "pos"), "pos", 3), quat_from_json(field_of(j, "q"), "q"));
    return HandSample(p, number_of(j, "aperture"), t);
}

Json event_to_json(const MappingEvent& e)
{
    struct {
        Json operator()(const event::Freeze&) const { return "freeze"; }
        Json operator()(const event::Unfreeze&) const { return "unfreeze"; }
        Json operator()(const event::SetScale& s) const { return Json{{"scale", s.scale}}; }
        Json operator()(const event::FlipAxis& f) const { return Json{{"flip", f.axis == MirrorAxis::x ? "x" : "y"}}; }
        Json operator()(const event::SetRotationOffset& r) const
        {
            return Json{{"rotation_offset", quat_to_json(r.offset)}};
        }
    } visitor;
    return std::visit(visitor, e);
}

MappingEvent event_from_json(const Json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "freeze") return event::Freeze{};
        if (s == "unfreeze") return event::Unfreeze{};
        throw FormatError("unknown event \"" + s + "\"");
    }
    if (!j.is_object() || j.size() != 1) throw FormatError("event must be a string or a one-key object");
    if (j.contains("scale")) return event::SetScale{number_of(j, "scale")};
    if (j.contains("flip")) {
        const Json& a = j.at("flip");
        const std::string s = a.is_string() ? a.get<std::string>() : std::string();
        if (s.size() != 1) throw FormatError("flip axis must be \"x\" or \"y\"");
        try {
            return event::FlipAxis{parse_mirror_axis(s[0])};
        } catch (const MappingError& err) {
            throw FormatError(err.what());
        }
    }
    if (j.contains("rotation_offset")) {
        return event::SetRotationOffset{canonical(quat_from_json(j.at("rotation_offset"), "rotation_offset"))};
    }
    throw FormatError("unknown event \"" + j.begin().key() + "\"");
}

Json target_to_json(const GripperTarget& g)
{
    return Json{{"pos", vec_to_json(g.pose.position)},
                {"q", quat_to_json(g.pose.orientation)},
                {"openness_mm", g.openness_mm}};
}

GripperTarget target_from_json(const Json& j)
{
    return GripperTarget{pose_from_json(j), number_of(j, "openness_mm")};
}

Json frame_to_json(const FrameOutput& f)
{
    return Json{{"frame", f.frame_index},
                {"t", f.time},
                {"target", target_to_json(f.target)},
                {"virtual_q", vec_to_json(f.virtual_q)},
                {"physical_q", vec_to_json(f.physical.q)},
                {"physical_qdot", vec_to_json(f.physical.joint_velocities)},
                {"physical_tcp", pose_to_json(f.physical.tcp_pose)},
                {"gripper_mm", f.physical.gripper_openness},
                {"anomaly", f.anomaly},
                {"overlap", f.overlap},
                {"lag_m", f.lag_distance},
                {"active", f.embodiment_active},
                {"scale", f.scale},
                {"mirror", Json::array({f.mirror_x, f.mirror_y})}};
}

FrameOutput frame_from_json(const Json& j)
{
    FrameOutput f;
    const Json& idx = field_of(j, "frame");
    if (!idx.is_number_unsigned()) throw FormatError("field \"frame\" must be a non-negative integer");
    f.frame_index = idx.get<std::size_t>();
    f.time = number_of(j, "t");
    f.target = target_from_json(field_of(j, "target"));
    f.virtual_q = vec_from_json(field_of(j, "virtual_q"), "virtual_q");
    f.physical.q = vec_from_json(field_of(j, "physical_q"), "physical_q", f.virtual_q.size());
    f.physical.joint_velocities = vec_from_json(field_of(j, "physical_qdot"), "physical_qdot", f.virtual_q.size());
    f.physical.tcp_pose = pose_from_json(field_of(j, "physical_tcp"));
    f.physical.gripper_openness = number_of(j, "gripper_mm");
    f.physical.time = f.time;
    f.anomaly = bool_of(j, "anomaly");
    f.overlap = bool_of(j, "overlap");
    f.lag_distance = number_of(j, "lag_m");
    f.embodiment_active = bool_of(j, "active");
    f.scale = number_of(j, "scale");
    const Eigen::VectorXd m = vec_from_json(field_of(j, "mirror"), "mirror", 2);
    for (const double s : {m[0], m[1]}) {
        if (s != 1.0 && s != -1.0) throw FormatError("mirror signs must be 1 or -1");
    }
    f.mirror_x = static_cast<int>(m[0]);
    f.mirror_y = static_cast<int>(m[1]);
    return f;
}

Json record_to_json(const LogRecord& r)
{
    Json events = Json::array();
    for (const auto& e : r.events) {
        if (e.rejected) {
            events.push_back(Json{{"rejected", event_to_json(e.event)}, {"reason", *e.rejected}});
        } else {
            events.push_back(event_to_json(e.event));
        }
    }
    return Json{{"frame", r.out.frame_index},
                {"t", r.out.time},
                {"hand", hand_to_json(r.hand)},
                {"target", target_to_json(r.out.target)},
                {"virtual_q", vec_to_json(r.out.virtual_q)},
                {"physical_q", vec_to_json(r.out.physical.q)},
                {"gripper_mm", r.out.physical.gripper_openness},
                {"anomaly", r.out.anomaly},
                {"overlap", r.out.overlap},
                {"lag_m", r.out.lag_distance},
                {"active", r.out.embodiment_active},
                {"events", std::move(events)}};
}

void write_log(std::ostream& os, const SessionLog& log)
{
    for (const auto& r : log) os << record_to_json(r).dump() << '\n';
}

std::string log_to_string(const SessionLog& log)
{
    std::ostringstream os;
    write_log(os, log);
    return os.str();
}

Trace parse_trace(std::istream& in)
{
    Trace trace;
    std::string line;
    std::size_t n = 0;
    double last_t = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& err) {
            throw TraceError(n, std::string("invalid JSON: ") + err.what());
        }
        TraceEntry entry;
        try {
            entry.t = number_of(j, "t");
            if (j.contains("event")) {
                entry.item = event_from_json(j.at("event"));
            } else {
                entry.item = hand_from_json(j);
            }
        } catch (const FormatError& err) {
            throw TraceError(n, err.what());
        }
        if (entry.t < last_t) {
            throw TraceError(n, "timestamp goes backwards");
        }
        last_t = entry.t;
        trace.push_back(std::move(entry));
    }
    return trace;
}

Trace parse_trace_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_trace(in);
}

Trace load_trace(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace " + path);
    return parse_trace(in);
}

Json trace_entry_to_json(const TraceEntry& e)
{
    if (const auto* h = std::get_if<HandSample>(&e.item)) {
        return hand_to_json(*h);
    }
    return Json{{"t", e.t}, {"event", event_to_json(std::get<MappingEvent>(e.item))}};
}

void write_trace(std::ostream& os, const Trace& trace)
{
    for (const auto& e : trace) os << trace_entry_to_json(e).dump() << '\n';
}

} // namespace armteleop
