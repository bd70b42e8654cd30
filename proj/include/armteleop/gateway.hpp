#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "armteleop/config.hpp"

namespace armteleop {

struct GatewayOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    bool lockstep = false;      // one tick per hand message instead of a clock
    std::size_t max_outbound = 64; // queued messages per client before frames are dropped
    std::string log_path;       // session log, appended per tick when set
};

/// WebSocket front door for one session. Networking and ticking share one
/// thread, so the session is only touched from there. Hand samples and
/// events wait in an ordered mailbox until the next tick; several hand
/// samples inside one tick collapse to the latest.
class Gateway {
public:
    Gateway(AppConfig cfg, GatewayOptions opt);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds the listening socket; returns the bound port.
    std::uint16_t listen();

    /// Serves until stop(). Calls listen() first if needed.
    void run();

    /// Thread-safe.
    void stop();

    /// Frames broadcast so far. Thread-safe.
    std::size_t frames_sent() const;

    struct Impl; // defined with the connection handling

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace armteleop
