#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "gengrid/bridge.hpp"

namespace gengrid::bridge {

namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Inbound {
    enum class Kind { Join, Message } kind = Kind::Message;
    std::uint64_t client = 0;
    std::string text;
};

class Connection;

/// Io-thread side of the server: connected clients and the inbound hand-off.
struct Hub {
    std::map<std::uint64_t, std::shared_ptr<Connection>> clients;
    std::size_t max_queued_frames = 64;
    std::atomic<std::uint64_t> dropped{0};
    std::function<void(Inbound)> push;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Hub& owner, std::uint64_t id)
        : ws_(std::move(socket)), owner_(owner), id_(id) {}

    void run();
    /// Frames are droppable, replies and the initial frame are not.
    void send(std::shared_ptr<const std::string> msg, bool droppable);
    void subscribe() { subscribed_ = true; }
    bool subscribed() const { return subscribed_; }
    void close();

private:
    void do_read();
    void do_write();
    void drop();

    websocket::stream<beast::tcp_stream> ws_;
    Hub& owner_;
    std::uint64_t id_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> outbox_;
    std::size_t queued_frames_ = 0;
    std::deque<bool> droppable_;
    bool writing_ = false;
    bool subscribed_ = false;
};

}  // namespace

struct Server::Impl {
    Impl(Session s, ServerOptions o) : session(std::move(s)), options(std::move(o)) {
        hub.max_queued_frames = options.max_queued_frames;
        hub.push = [this](Inbound in) { push(std::move(in)); };
    }

    Session session;
    ServerOptions options;
    net::io_context ioc{1};
    std::optional<tcp::acceptor> acceptor;
    std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> is_running{false};
    unsigned short bound_port = 0;

    std::mutex mu;
    std::condition_variable cv;
    std::deque<Inbound> inbox;
    bool stop_requested = false;

    Hub hub;  // io thread only
    std::uint64_t next_client = 1;

    std::ofstream log_out;

    void push(Inbound in) {
        {
            std::lock_guard lk(mu);
            inbox.push_back(std::move(in));
        }
        cv.notify_one();
    }

    void accept() {
        acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
                return;
            }
            auto conn = std::make_shared<Connection>(std::move(socket), hub, next_client++);
            conn->run();
            accept();
        });
    }

    void post_to_client(std::uint64_t client, std::string text, bool subscribe) {
        auto msg = std::make_shared<const std::string>(std::move(text));
        net::post(ioc, [this, client, msg, subscribe] {
            auto it = hub.clients.find(client);
            if (it == hub.clients.end()) return;
            it->second->send(msg, false);
            if (subscribe) it->second->subscribe();
        });
    }

    void broadcast(std::string text) {
        auto msg = std::make_shared<const std::string>(std::move(text));
        net::post(ioc, [this, msg] {
            for (auto& [id, conn] : hub.clients) {
                if (conn->subscribed()) conn->send(msg, true);
            }
        });
    }

    void handle(const Inbound& in) {
        if (in.kind == Inbound::Kind::Join) {
            post_to_client(in.client, encode_frame(session.frame()), true);
            return;
        }
        auto decoded = decode_command(in.text);
        Reply reply;
        if (auto* cmd = std::get_if<Command>(&decoded)) {
            const auto before = session.log().size();
            reply = session.apply(*cmd);
            if (session.log().size() > before && log_out.is_open()) {
                log_out << encode_log({session.log().back()});
                log_out.flush();
            }
        } else {
            reply = std::get<Reply>(decoded);
            reply.tick = session.tick();
        }
        post_to_client(in.client, encode_reply(reply), false);
    }

    void sim_loop() {
        using clock = std::chrono::steady_clock;
        const double base_ms = options.tick_period_ms.value_or(session.simulation().spec().world.tick_ms);
        auto next = clock::now();
        while (true) {
            std::deque<Inbound> batch;
            {
                std::unique_lock lk(mu);
                cv.wait_until(lk, next, [this] { return stop_requested || !inbox.empty(); });
                if (stop_requested) return;
                batch.swap(inbox);
            }
            for (const auto& in : batch) handle(in);
            const auto now = clock::now();
            if (now < next) continue;
            if (auto frame = session.advance()) broadcast(encode_frame(*frame));
            const auto period = std::chrono::duration_cast<clock::duration>(
                std::chrono::duration<double, std::milli>(base_ms / session.speed()));
            next += period;
            if (next + std::chrono::seconds(1) < now) next = now;
        }
    }
};

namespace {

void Connection::run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        self->owner_.clients[self->id_] = self;
        self->owner_.push({Inbound::Kind::Join, self->id_, {}});
        spdlog::info("client {} connected", self->id_);
        self->do_read();
    });
}

void Connection::do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->drop();
            return;
        }
        self->owner_.push({Inbound::Kind::Message, self->id_, beast::buffers_to_string(self->buffer_.data())});
        self->buffer_.consume(self->buffer_.size());
        self->do_read();
    });
}

void Connection::send(std::shared_ptr<const std::string> msg, bool droppable) {
    if (droppable && queued_frames_ >= owner_.max_queued_frames) {
        ++owner_.dropped;
        return;
    }
    if (droppable) ++queued_frames_;
    outbox_.push_back(std::move(msg));
    droppable_.push_back(droppable);
    if (!writing_) do_write();
}

void Connection::do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->drop();
            return;
        }
        if (self->droppable_.front()) --self->queued_frames_;
        self->outbox_.pop_front();
        self->droppable_.pop_front();
        if (self->outbox_.empty()) {
            self->writing_ = false;
        } else {
            self->do_write();
        }
    });
}

void Connection::drop() {
    if (owner_.clients.erase(id_)) spdlog::info("client {} disconnected", id_);
}

void Connection::close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
}

}  // namespace

Server::Server(Session session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
    if (impl_->is_running) return;
    auto& im = *impl_;
    try {
        const auto address = net::ip::make_address(im.options.host);
        im.acceptor.emplace(im.ioc);
        const tcp::endpoint ep(address, im.options.port);
        im.acceptor->open(ep.protocol());
        im.acceptor->set_option(net::socket_base::reuse_address(true));
        im.acceptor->bind(ep);
        im.acceptor->listen();
        im.bound_port = im.acceptor->local_endpoint().port();
    } catch (const boost::system::system_error& e) {
        im.acceptor.reset();
        throw Error("cannot listen on " + im.options.host + ":" + std::to_string(im.options.port) + ": " +
                    e.code().message());
    }
    if (im.options.command_log) {
        im.log_out.open(*im.options.command_log, std::ios::binary | std::ios::trunc);
        if (!im.log_out) throw IoError("cannot write command log '" + im.options.command_log->string() + "'");
        im.log_out << encode_log(im.session.log());
    }
    im.stop_requested = false;
    im.work.emplace(net::make_work_guard(im.ioc));
    im.accept();
    im.io_thread = std::thread([&im] { im.ioc.run(); });
    im.sim_thread = std::thread([&im] { im.sim_loop(); });
    im.is_running = true;
    spdlog::info("bridge listening on {}:{}", im.options.host, im.bound_port);
}

void Server::stop() {
    if (!impl_ || !impl_->is_running) return;
    auto& im = *impl_;
    {
        std::lock_guard lk(im.mu);
        im.stop_requested = true;
    }
    im.cv.notify_one();
    if (im.sim_thread.joinable()) im.sim_thread.join();
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor->close(ec);
        for (auto& [id, conn] : im.hub.clients) conn->close();
        im.hub.clients.clear();
    });
    im.work.reset();
    if (im.io_thread.joinable()) im.io_thread.join();
    im.ioc.restart();
    im.is_running = false;
}

unsigned short Server::port() const noexcept { return impl_->bound_port; }
bool Server::running() const noexcept { return impl_->is_running; }
std::uint64_t Server::dropped_frames() const noexcept { return impl_->hub.dropped; }

}  // namespace gengrid::bridge
