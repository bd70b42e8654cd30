#include "armteleop/gateway.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "armteleop/protocol.hpp"

namespace armteleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection;

} // namespace

struct Gateway::Impl {
    Impl(AppConfig c, GatewayOptions o) : cfg(std::move(c)), opt(std::move(o)), session(cfg.session) {}

    void on_open(const std::shared_ptr<Connection>& c);
    void on_message(const std::shared_ptr<Connection>& c, const std::string& text);
    void on_close(const std::shared_ptr<Connection>& c);
    void do_accept();
    void schedule_tick();
    void tick();
    bool apply(const MappingEvent& e, const std::shared_ptr<Connection>& reply_to);
    void broadcast(const std::string& frame);

    AppConfig cfg;
    GatewayOptions opt;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    net::steady_timer timer{ioc};
    Session session;
    std::set<std::shared_ptr<Connection>> clients;
    std::weak_ptr<Connection> operator_conn;
    std::vector<std::variant<HandSample, MappingEvent>> mailbox;
    std::optional<HandSample> latest;
    std::optional<double> last_hand_t;
    std::chrono::steady_clock::time_point next_tick;
    bool ticking = false;
    bool listening = false;
    std::atomic<std::size_t> frames{0};
    std::ofstream log;
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Gateway::Impl& g) : ws_(std::move(socket)), g_(g) {}

    void start()
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
    }

    /// Frames may be dropped when the client falls behind; anything else is
    /// always delivered.
    void send(const protocol::Message& m)
    {
        const bool droppable = std::holds_alternative<protocol::Frame>(m);
        send_text(std::make_shared<const std::string>(protocol::encode(m)), droppable);
    }

    void send_text(std::shared_ptr<const std::string> text, bool droppable)
    {
        if (closed_) return;
        if (droppable && outq_.size() >= g_.opt.max_outbound) {
            // drop the oldest queued frame that is not being written
            auto it = std::find_if(outq_.begin() + (writing_ ? 1 : 0), outq_.end(),
                                   [](const Outgoing& o) { return o.droppable; });
            if (it == outq_.end()) return;
            outq_.erase(it);
            ++dropped_;
        }
        outq_.push_back(Outgoing{std::move(text), droppable});
        if (!writing_) do_write();
    }

    void close_after_flush()
    {
        close_pending_ = true;
        if (!writing_) do_close();
    }

    bool greeted = false;
    protocol::Role role = protocol::Role::observer;

private:
    struct Outgoing {
        std::shared_ptr<const std::string> text;
        bool droppable = false;
    };

    void on_accept(beast::error_code ec)
    {
        if (ec) return;
        g_.on_open(shared_from_this());
        do_read();
    }

    void do_read()
    {
        ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec) {
            finish();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        g_.on_message(shared_from_this(), text);
        if (!closed_ && !close_pending_) do_read();
    }

    void do_write()
    {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*outq_.front().text),
                        beast::bind_front_handler(&Connection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        writing_ = false;
        if (ec) {
            finish();
            return;
        }
        outq_.pop_front();
        if (!outq_.empty()) {
            do_write();
        } else if (close_pending_) {
            do_close();
        }
    }

    void do_close()
    {
        if (closed_) return;
        ws_.async_close(websocket::close_code::normal,
                        [self = shared_from_this()](beast::error_code) { self->finish(); });
    }

    void finish()
    {
        if (closed_) return;
        closed_ = true;
        outq_.clear();
        g_.on_close(shared_from_this());
    }

    websocket::stream<beast::tcp_stream> ws_;
    Gateway::Impl& g_;
    beast::flat_buffer buffer_;
    std::deque<Outgoing> outq_;
    bool writing_ = false;
    bool close_pending_ = false;
    bool closed_ = false;
    std::size_t dropped_ = 0;
};

} // namespace

void Gateway::Impl::on_open(const std::shared_ptr<Connection>& c)
{
    clients.insert(c);
}

void Gateway::Impl::on_close(const std::shared_ptr<Connection>& c)
{
    clients.erase(c);
    if (operator_conn.lock() == c) {
        operator_conn.reset();
        // Losing the operator pauses the mapping; the robot finishes its
        // current command and holds.
        if (!session.mapping().frozen && session.frames() > 0) apply(event::Freeze{}, nullptr);
    }
}

bool Gateway::Impl::apply(const MappingEvent& e, const std::shared_ptr<Connection>& reply_to)
{
    try {
        session.apply_event(e);
        return true;
    } catch (const MappingError& err) {
        if (reply_to) reply_to->send(protocol::Error{"transition", err.what()});
        return false;
    }
}

void Gateway::Impl::on_message(const std::shared_ptr<Connection>& c, const std::string& text)
{
    protocol::Message msg;
    try {
        msg = protocol::decode(text);
    } catch (const protocol::ProtocolError& e) {
        c->send(protocol::Error{e.code(), e.what()});
        return;
    }

    if (!c->greeted) {
        const auto* hello = std::get_if<protocol::Hello>(&msg);
        if (!hello) {
            c->send(protocol::Error{"handshake", "the first message must be hello"});
            return;
        }
        if (hello->version != protocol::kVersion) {
            c->send(protocol::Error{"version", "protocol version " + std::to_string(hello->version) +
                                                   " is not supported; this server speaks " +
                                                   std::to_string(protocol::kVersion)});
            c->close_after_flush();
            return;
        }
        if (hello->role == protocol::Role::operator_ && !operator_conn.expired()) {
            c->send(protocol::Error{"role", "an operator is already connected"});
            c->close_after_flush();
            return;
        }
        c->greeted = true;
        c->role = hello->role;
        if (c->role == protocol::Role::operator_) operator_conn = c;
        c->send(protocol::Hello{protocol::kVersion, c->role, protocol::server_info(cfg.session)});
        return;
    }

    if (std::holds_alternative<protocol::Hello>(msg)) {
        c->send(protocol::Error{"handshake", "already greeted"});
        return;
    }
    const bool from_client = std::holds_alternative<protocol::Hand>(msg) || std::holds_alternative<protocol::Event>(msg);
    if (!from_client) {
        c->send(protocol::Error{"unexpected_kind", "clients may only send hello, hand and event"});
        return;
    }
    if (c->role != protocol::Role::operator_) {
        c->send(protocol::Error{"role", "observers cannot steer the session"});
        return;
    }

    if (const auto* hand = std::get_if<protocol::Hand>(&msg)) {
        if (last_hand_t && hand->sample.timestamp < *last_hand_t) {
            c->send(protocol::Error{"malformed", "hand timestamp went backwards"});
            return;
        }
        last_hand_t = hand->sample.timestamp;
        if (opt.lockstep) {
            latest = hand->sample;
            tick();
        } else {
            mailbox.emplace_back(hand->sample);
            if (!ticking) schedule_tick();
        }
        return;
    }

    const auto& ev = std::get<protocol::Event>(msg).event;
    if (opt.lockstep) {
        apply(ev, c);
    } else {
        mailbox.emplace_back(ev);
    }
}

void Gateway::Impl::schedule_tick()
{
    using namespace std::chrono;
    const auto period = duration_cast<steady_clock::duration>(duration<double>(1.0 / cfg.session.frame_rate));
    const auto now = steady_clock::now();
    if (!ticking) {
        next_tick = now;
        ticking = true;
    }
    next_tick += period;
    if (next_tick < now) next_tick = now + period; // fell behind: skip, never burst
    timer.expires_at(next_tick);
    timer.async_wait([this](beast::error_code ec) {
        if (ec) return;
        tick();
        schedule_tick();
    });
}

void Gateway::Impl::tick()
{
    auto items = std::move(mailbox);
    mailbox.clear();
    for (auto& item : items) {
        if (auto* hand = std::get_if<HandSample>(&item)) {
            latest = *hand; // latest wins within a tick
        } else {
            apply(std::get<MappingEvent>(item), operator_conn.lock());
        }
    }
    if (!latest) return;
    const FrameOutput out = session.tick(*latest);
    if (log.is_open()) {
        log << record_to_json(session.log().back()).dump() << '\n';
        log.flush();
    }
    broadcast(protocol::encode(protocol::Frame{out}));
}

void Gateway::Impl::broadcast(const std::string& frame)
{
    auto text = std::make_shared<const std::string>(frame);
    for (const auto& c : clients) {
        if (c->greeted) c->send_text(text, true);
    }
    ++frames;
}

void Gateway::Impl::do_accept()
{
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;
        std::make_shared<Connection>(std::move(socket), *this)->start();
        do_accept();
    });
}

Gateway::Gateway(AppConfig cfg, GatewayOptions opt) : impl_(std::make_unique<Impl>(std::move(cfg), std::move(opt)))
{
    if (!impl_->opt.log_path.empty()) {
        impl_->log.open(impl_->opt.log_path, std::ios::trunc);
        if (!impl_->log) throw std::runtime_error("cannot write session log " + impl_->opt.log_path);
    }
}

Gateway::~Gateway() = default;

std::uint16_t Gateway::listen()
{
    Impl& g = *impl_;
    if (!g.listening) {
        const tcp::endpoint ep(net::ip::make_address(g.opt.address), g.opt.port);
        g.acceptor.open(ep.protocol());
        g.acceptor.set_option(net::socket_base::reuse_address(true));
        g.acceptor.bind(ep);
        g.acceptor.listen(net::socket_base::max_listen_connections);
        g.listening = true;
        g.do_accept();
    }
    return g.acceptor.local_endpoint().port();
}

void Gateway::run()
{
    listen();
    impl_->ioc.run();
}

void Gateway::stop()
{
    impl_->ioc.stop();
}

std::size_t Gateway::frames_sent() const
{
    return impl_->frames.load();
}

} // namespace armteleop
