#pragma once

#include <optional>
#include <string>
#include <variant>

#include "armteleop/codec.hpp"
#include "armteleop/task.hpp"

namespace armteleop::protocol {

inline constexpr int kVersion = 1;

enum class Role { operator_, observer };

std::string role_name(Role r);

/// Summary of the arm a server drives, sent in its hello.
struct ServerInfo {
    std::size_t dof = 0;
    double reach_m = 0.0;
    JointConfig lower;
    JointConfig upper;
    JointConfig max_velocity;
    RobotLimits limits;
    double frame_rate = 35.0;
};

struct Hello {
    int version = kVersion;
    Role role = Role::operator_;
    std::optional<ServerInfo> server; // set on the server's reply
};

struct Hand {
    HandSample sample;
};

struct Event {
    MappingEvent event;
};

struct Frame {
    FrameOutput frame;
};

struct Error {
    std::string code; // malformed | unknown_kind | unexpected_kind | version | handshake | role | transition
    std::string message;
};

struct TaskResult {
    TaskReport report;
};

using Message = std::variant<Hello, Hand, Event, Frame, Error, TaskResult>;

/// Undecodable input; code() is the error code to send back.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

Json to_json(const Message& m);
Message from_json(const Json& j);

std::string encode(const Message& m);
Message decode(const std::string& text);

ServerInfo server_info(const SessionConfig& cfg);

} // namespace armteleop::protocol
