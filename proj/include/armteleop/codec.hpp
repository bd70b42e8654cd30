#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "armteleop/session.hpp"

namespace armteleop {

using Json = nlohmann::ordered_json;

/// A JSON value that does not have the expected shape.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trace file problem; the message starts with "line N:".
class TraceError : public std::runtime_error {
public:
    TraceError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

Json vec_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_json(const Json& j, const char* field, Eigen::Index expected = -1);

Json quat_to_json(const Quat& q); // [w, x, y, z]
Quat quat_from_json(const Json& j, const char* field);

/// {"t", "pos", "q", "aperture"}
Json hand_to_json(const HandSample& h);
HandSample hand_from_json(const Json& j);

/// "freeze" | "unfreeze" | {"scale": s} | {"flip": "x"|"y"} | {"rotation_offset": [w,x,y,z]}
Json event_to_json(const MappingEvent& e);
MappingEvent event_from_json(const Json& j);

/// {"pos", "q", "openness_mm"}
Json target_to_json(const GripperTarget& g);
GripperTarget target_from_json(const Json& j);

/// Full frame payload, as broadcast to clients.
Json frame_to_json(const FrameOutput& f);
FrameOutput frame_from_json(const Json& j);

/// One session log line.
Json record_to_json(const LogRecord& r);
void write_log(std::ostream& os, const SessionLog& log);
std::string log_to_string(const SessionLog& log);

/// Parses a newline-delimited trace. Blank lines are skipped; an empty
/// input is an empty trace. Throws TraceError naming the offending line,
/// including for timestamps that go backwards.
Trace parse_trace(std::istream& in);
Trace parse_trace_string(const std::string& text);
Trace load_trace(const std::string& path);

/// One trace line for an entry; inverse of parse_trace on that line.
Json trace_entry_to_json(const TraceEntry& e);
void write_trace(std::ostream& os, const Trace& trace);

} // namespace armteleop
