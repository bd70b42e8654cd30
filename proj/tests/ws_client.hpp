#pragma once

// Blocking WebSocket client and an in-process gateway for tests.

#include <chrono>
#include <optional>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "armteleop/gateway.hpp"
#include "armteleop/protocol.hpp"

namespace testing {

class WsClient {
public:
    explicit WsClient(std::uint16_t port) : ws_(ioc_)
    {
        namespace net = boost::asio;
        auto& tcp = boost::beast::get_lowest_layer(ws_);
        tcp.expires_after(std::chrono::seconds(5));
        tcp.connect(net::ip::tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
        ws_.handshake("127.0.0.1", "/");
        tcp.expires_never();
    }

    void send(const std::string& text)
    {
        ws_.text(true);
        ws_.write(boost::asio::buffer(text));
    }

    void send(const armteleop::protocol::Message& m) { send(armteleop::protocol::encode(m)); }

    /// Next message text, or nothing if the server closed the connection or
    /// nothing arrived within the timeout.
    std::optional<std::string> recv(std::chrono::milliseconds timeout = std::chrono::seconds(10))
    {
        boost::beast::get_lowest_layer(ws_).expires_after(timeout);
        boost::beast::flat_buffer buf;
        boost::beast::error_code ec;
        ws_.read(buf, ec);
        if (ec) return std::nullopt;
        return boost::beast::buffers_to_string(buf.data());
    }

    armteleop::protocol::Message recv_message()
    {
        const auto text = recv();
        if (!text) throw std::runtime_error("connection closed or timed out");
        return armteleop::protocol::decode(*text);
    }

    void close()
    {
        boost::beast::error_code ec;
        ws_.close(boost::beast::websocket::close_code::normal, ec);
    }

private:
    boost::asio::io_context ioc_;
    boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
};

/// Gateway on a free port, served from a background thread.
class GatewayRunner {
public:
    GatewayRunner(armteleop::AppConfig cfg, armteleop::GatewayOptions opt) : gw_(std::move(cfg), [&] {
        opt.port = 0;
        return opt;
    }())
    {
        port_ = gw_.listen();
        thread_ = std::thread([this] { gw_.run(); });
    }

    ~GatewayRunner()
    {
        gw_.stop();
        thread_.join();
    }

    std::uint16_t port() const { return port_; }
    armteleop::Gateway& gateway() { return gw_; }

private:
    armteleop::Gateway gw_;
    std::uint16_t port_ = 0;
    std::thread thread_;
};

inline armteleop::AppConfig default_app_config()
{
    armteleop::AppConfig cfg;
    cfg.markers = armteleop::default_markers();
    return cfg;
}

struct StreamComparison {
    std::size_t frames = 0;     // frames received by the operator
    std::size_t mismatches = 0; // frames whose text differs from the replay
    std::size_t observer_mismatches = 0;
    bool complete = false;      // one frame per hand sample, on both clients
};

/// Streams a trace to a lockstep gateway as the operator, with an observer
/// listening, and compares every broadcast frame with an offline replay.
inline StreamComparison stream_vs_replay(const armteleop::Trace& trace)
{
    using namespace armteleop;
    const SessionConfig cfg;
    const SessionLog log = replay(cfg, trace);

    GatewayOptions opt;
    opt.lockstep = true;
    opt.max_outbound = 1u << 20;
    GatewayRunner gw(default_app_config(), opt);

    WsClient observer(gw.port());
    observer.send(protocol::Hello{protocol::kVersion, protocol::Role::observer, std::nullopt});
    observer.recv();
    std::vector<std::string> seen;
    std::thread listen([&] {
        while (seen.size() < log.size()) {
            const auto text = observer.recv();
            if (!text) return;
            seen.push_back(*text);
        }
    });

    WsClient op(gw.port());
    op.send(protocol::Hello{});
    op.recv();
    StreamComparison res;
    for (const TraceEntry& e : trace) {
        if (const auto* h = std::get_if<HandSample>(&e.item)) {
            op.send(protocol::Hand{*h});
            const auto text = op.recv();
            if (!text) break;
            const std::string want = protocol::encode(protocol::Frame{log[res.frames].out});
            if (*text != want) ++res.mismatches;
            ++res.frames;
        } else {
            op.send(protocol::Event{std::get<MappingEvent>(e.item)});
        }
    }
    listen.join();
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] != protocol::encode(protocol::Frame{log[i].out})) ++res.observer_mismatches;
    }
    res.complete = res.frames == log.size() && seen.size() == log.size();
    op.close();
    observer.close();
    return res;
}

} // namespace testing
