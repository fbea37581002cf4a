#include "microvol/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"

namespace microvol {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

namespace {

std::string_view sv(beast::string_view v) { return {v.data(), v.size()}; }

std::string base64(const std::vector<std::uint8_t>& bytes) {
    std::string out(beast::detail::base64::encoded_size(bytes.size()), '\0');
    out.resize(beast::detail::base64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::string> split_path(std::string_view target) {
    std::vector<std::string> parts;
    std::string current;
    for (const char c : target) {
        if (c == '?') break;
        if (c == '/') {
            if (!current.empty()) parts.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

std::optional<std::string> query_param(std::string_view target, std::string_view key) {
    const std::size_t q = target.find('?');
    if (q == std::string_view::npos) return std::nullopt;
    std::string pair;
    const auto match = [&]() -> std::optional<std::string> {
        const std::size_t eq = pair.find('=');
        if (std::string_view(pair).substr(0, eq) != key) return std::nullopt;
        return eq == std::string::npos ? std::string{} : pair.substr(eq + 1);
    };
    for (const char c : target.substr(q + 1)) {
        if (c != '&') {
            pair.push_back(c);
            continue;
        }
        if (auto v = match()) return v;
        pair.clear();
    }
    return match();
}

json manifest_json(const LODManifest& m) {
    json levels = json::array();
    for (int lod = 1; lod <= m.levels; ++lod) {
        const int b = m.blocks_per_axis(lod);
        levels.push_back({{"lod", lod}, {"blocks_per_axis", b}, {"blocks", b * b * b}});
    }
    return {{"backend", m.backend},
            {"levels", m.levels},
            {"level_blocks", levels},
            {"micro_dims", m.micro_dims},
            {"volume_dims", m.volume_dims},
            {"value_range", {m.value_range.first, m.value_range.second}},
            {"degree", m.degree},
            {"ghost", m.ghost},
            {"error_bound", m.error_bound},
            {"total_bytes", m.total_bytes()}};
}

}  // namespace

struct ServiceSession {
    std::string id;
    std::shared_ptr<const BlockSource> source;
    std::unique_ptr<RuntimeSession> runtime;
    std::atomic<bool> streaming{false};
    std::mutex mutex;
    std::function<void()> close_stream;  // set while a stream is attached
};

class RenderService::Impl {
public:
    explicit Impl(ServiceConfig config) : config_(std::move(config)), acceptor_(ioc_) {}

    unsigned short start() {
        const tcp::endpoint endpoint(net::ip::make_address(config_.address), config_.port);
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
        port_ = acceptor_.local_endpoint().port();
        accept();
        const int n = std::max(1, config_.io_threads);
        for (int i = 0; i < n; ++i) threads_.emplace_back([this] { ioc_.run(); });
        return port_;
    }

    void stop();
    void wait() {
        std::unique_lock lock(stop_mutex_);
        stop_cv_.wait(lock, [&] { return finished_; });
    }

    unsigned short port() const { return port_; }

    std::size_t session_count() const {
        std::lock_guard lock(sessions_mutex_);
        return sessions_.size();
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req);

    std::shared_ptr<ServiceSession> find_session(const std::string& id) const {
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    void reap(const std::string& id) {
        std::shared_ptr<ServiceSession> s;
        {
            std::lock_guard lock(sessions_mutex_);
            const auto it = sessions_.find(id);
            if (it == sessions_.end()) return;
            s = it->second;
            sessions_.erase(it);
        }
        s->runtime->cancel();
        std::function<void()> close;
        {
            std::lock_guard lock(s->mutex);
            close.swap(s->close_stream);
        }
        if (close) close();
    }

    void worker_started() { ++active_workers_; }
    void worker_finished() {
        {
            std::lock_guard lock(workers_mutex_);
            --active_workers_;
        }
        workers_cv_.notify_all();
    }

    // Connections register a shutdown callback so stop() can wake their workers.
    std::size_t register_closer(std::function<void()> closer) {
        {
            std::lock_guard lock(closers_mutex_);
            if (!closing_) {
                closers_.emplace(++closer_id_, std::move(closer));
                return closer_id_;
            }
        }
        closer();
        return 0;
    }
    void unregister_closer(std::size_t id) {
        std::lock_guard lock(closers_mutex_);
        closers_.erase(id);
    }

    const ServiceConfig& config() const { return config_; }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            on_accept(std::move(socket));
            accept();
        });
    }
    void on_accept(tcp::socket socket);

    std::shared_ptr<const BlockSource> open_store(const std::filesystem::path& path);
    http::response<http::string_body> create_session(const http::request<http::string_body>& req);

    ServiceConfig config_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::vector<std::thread> threads_;
    unsigned short port_ = 0;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<ServiceSession>> sessions_;
    std::uint64_t next_session_ = 0;

    std::mutex stores_mutex_;
    std::map<std::filesystem::path, std::shared_ptr<const BlockSource>> stores_;

    std::mutex workers_mutex_;
    std::condition_variable workers_cv_;
    std::atomic<int> active_workers_{0};

    std::mutex closers_mutex_;
    std::map<std::size_t, std::function<void()>> closers_;
    std::size_t closer_id_ = 0;
    bool closing_ = false;

    std::mutex stop_mutex_;
    std::condition_variable stop_cv_;
    bool stopped_ = false;
    bool finished_ = false;
};

namespace {

using Response = http::response<http::string_body>;

Response json_response(const http::request<http::string_body>& req, http::status status, const json& body,
                       const std::string& origin) {
    Response res{status, req.version()};
    res.set(http::field::server, "microvol");
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, origin);
    res.keep_alive(req.keep_alive());
    res.body() = body.dump();
    res.prepare_payload();
    return res;
}

Response error_response(const http::request<http::string_body>& req, http::status status, const std::string& message,
                        const std::string& origin) {
    return json_response(req, status, {{"error", message}}, origin);
}

// One WebSocket stream bound to a session. Reads POVs on the I/O strand and
// renders on its own worker thread; only the latest unserved POV is kept.
class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
public:
    StreamConnection(tcp::socket&& socket, std::shared_ptr<ServiceSession> session,
                     RenderService::Impl* service)
        : ws_(std::move(socket)), session_(std::move(session)), service_(service) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
            res.set(http::field::server, "microvol");
        }));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) {
                self->session_->streaming = false;
                return;
            }
            self->start();
        });
    }

private:
    struct Job {
        std::uint64_t seq = 0;
        PointOfView pov;
    };

    void start() {
        std::weak_ptr<StreamConnection> weak = shared_from_this();
        closer_id_ = service_->register_closer([weak] {
            if (auto self = weak.lock()) self->close_worker();
        });
        {
            std::lock_guard lock(session_->mutex);
            session_->close_stream = [weak] {
                if (auto self = weak.lock()) self->close_stream();
            };
        }
        service_->worker_started();
        // The worker drops its reference before reporting, so stop() never
        // returns while a connection could still be destroyed on this thread.
        std::thread([self = shared_from_this(), service = service_]() mutable {
            self->work();
            self.reset();
            service->worker_finished();
        }).detach();
        read();
    }

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->disconnected();
                return;
            }
            self->on_message();
            self->read();
        });
    }

    void on_message() {
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        PointOfView pov;
        try {
            const json msg = json::parse(text);
            if (msg.contains("type") && msg.at("type") != "pov") {
                send({{"type", "error"}, {"message", "unsupported message type"}});
                return;
            }
            pov = pov_from_json(msg);
        } catch (const std::exception& e) {
            send({{"type", "error"}, {"message", std::string("malformed POV: ") + e.what()}});
            return;
        }
        {
            std::lock_guard lock(mutex_);
            pending_ = Job{received_++, pov};
        }
        cv_.notify_one();
    }

    void disconnected() {
        close_worker();
        service_->unregister_closer(closer_id_);
        service_->reap(session_->id);
    }

    // Session deleted over HTTP: stop rendering and close the socket.
    void close_stream() {
        close_worker();
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            self->ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) {});
        });
    }

    void close_worker() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        session_->runtime->cancel();
        cv_.notify_all();
    }

    void work() {
        for (;;) {
            Job job;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return closed_ || pending_.has_value(); });
                if (closed_) break;
                job = *pending_;
                pending_.reset();
            }
            try {
                const auto step = session_->runtime->step(job.pov);
                json visible = json::array();
                for (const auto& a : step.visible) visible.push_back(a.to_string());
                send({{"type", "frame"},
                      {"seq", job.seq},
                      {"frame", step.timing.frame},
                      {"width", step.frame.width},
                      {"height", step.frame.height},
                      {"png", base64(encode_png(step.frame))},
                      {"timing", to_json(step.timing)},
                      {"miss_rate", step.timing.miss_rate},
                      {"visible", visible}});
            } catch (const std::exception& e) {
                send({{"type", "error"}, {"seq", job.seq}, {"message", e.what()}});
            }
        }
    }

    void send(const json& msg) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text = msg.dump()]() mutable {
            self->queue_.push_back(std::move(text));
            if (self->queue_.size() == 1) self->write();
        });
    }

    void write() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<ServiceSession> session_;
    RenderService::Impl* service_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;  // touched only on the strand
    std::size_t closer_id_ = 0;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<Job> pending_;
    std::uint64_t received_ = 0;
    bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, RenderService::Impl* service)
        : stream_(std::move(socket)), service_(service) {}

    void run() {
        net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
    }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec == http::error::end_of_stream) {
                self->shutdown();
                return;
            }
            if (ec) return;
            if (websocket::is_upgrade(self->req_)) {
                self->upgrade();
                return;
            }
            self->reply(self->service_->handle(self->req_));
        });
    }

    void upgrade() {
        const auto parts = split_path(sv(req_.target()));
        const std::string& origin = service_->config().cors_origin;
        if (parts.size() != 3 || parts[0] != "session" || parts[2] != "stream") {
            reply(error_response(req_, http::status::not_found, "no such stream endpoint", origin));
            return;
        }
        auto session = service_->find_session(parts[1]);
        if (!session) {
            reply(error_response(req_, http::status::not_found, "unknown session " + parts[1], origin));
            return;
        }
        if (session->streaming.exchange(true)) {
            reply(error_response(req_, http::status::conflict, "session already has a stream", origin));
            return;
        }
        stream_.expires_never();
        std::make_shared<StreamConnection>(stream_.release_socket(), std::move(session), service_)
            ->run(std::move(req_));
    }

    void reply(Response res) {
        auto sp = std::make_shared<Response>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (sp->need_eof()) {
                self->shutdown();
                return;
            }
            self->read();
        });
    }

    void shutdown() {
        beast::error_code ec;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }

    beast::tcp_stream stream_;
    RenderService::Impl* service_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

void RenderService::Impl::on_accept(tcp::socket socket) {
    std::make_shared<HttpConnection>(std::move(socket), this)->run();
}

void RenderService::Impl::stop() {
    {
        std::lock_guard lock(stop_mutex_);
        if (stopped_) return;
        stopped_ = true;
    }
    net::post(ioc_, [this] {
        beast::error_code ec;
        acceptor_.close(ec);
    });
    std::map<std::size_t, std::function<void()>> closers;
    {
        std::lock_guard lock(closers_mutex_);
        closing_ = true;
        closers.swap(closers_);
    }
    for (auto& [id, close] : closers) close();
    {
        std::unique_lock lock(workers_mutex_);
        workers_cv_.wait(lock, [&] { return active_workers_.load() == 0; });
    }
    ioc_.stop();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
    threads_.clear();
    {
        std::lock_guard lock(sessions_mutex_);
        sessions_.clear();
    }
    {
        std::lock_guard lock(stop_mutex_);
        finished_ = true;
    }
    stop_cv_.notify_all();
}

std::shared_ptr<const BlockSource> RenderService::Impl::open_store(const std::filesystem::path& path) {
    const auto key = std::filesystem::weakly_canonical(path);
    std::lock_guard lock(stores_mutex_);
    if (const auto it = stores_.find(key); it != stores_.end()) return it->second;
    auto store = std::make_shared<FileBlockStore>(key);
    store->set_io_delay(config_.io_delay);
    stores_.emplace(key, store);
    return store;
}

http::response<http::string_body> RenderService::Impl::create_session(const http::request<http::string_body>& req) {
    const std::string& origin = config_.cors_origin;
    json body = json::object();
    if (!req.body().empty()) {
        try {
            body = json::parse(req.body());
        } catch (const json::parse_error& e) {
            return error_response(req, http::status::bad_request, std::string("invalid JSON: ") + e.what(), origin);
        }
        if (!body.is_object()) return error_response(req, http::status::bad_request, "body must be an object", origin);
    }
    std::shared_ptr<const BlockSource> source;
    try {
        const std::filesystem::path path =
            body.contains("store") ? std::filesystem::path(body.at("store").get<std::string>()) : config_.store;
        if (path.empty()) return error_response(req, http::status::bad_request, "no store configured", origin);
        source = open_store(path);
    } catch (const std::exception& e) {
        return error_response(req, http::status::not_found, std::string("cannot open store: ") + e.what(), origin);
    }

    RuntimeConfig rc = config_.runtime;
    std::optional<TransferFunction> tf = config_.transfer_function;
    try {
        if (body.contains("width")) rc.render.width = body.at("width").get<int>();
        if (body.contains("height")) rc.render.height = body.at("height").get<int>();
        if (body.contains("sample_distance")) rc.render.sample_distance = body.at("sample_distance").get<double>();
        if (body.contains("o_max")) rc.render.o_max = body.at("o_max").get<double>();
        if (body.contains("cache_capacity")) rc.cache_capacity = body.at("cache_capacity").get<std::size_t>();
        if (body.contains("prefetch")) rc.prefetch = parse_prefetch_mode(body.at("prefetch").get<std::string>());
        const auto& range = source->manifest().value_range;
        if (body.contains("tf")) {
            const json& t = body.at("tf");
            tf = t.is_string() ? preset_transfer_function(t.get<std::string>(), range.first, range.second)
                               : TransferFunction::from_json(t);
        }
        if (!tf) tf = preset_transfer_function("bands", range.first, range.second);
        if (rc.render.width > 4096 || rc.render.height > 4096) throw DomainError("image size limit is 4096");
        rc.render.validate();
    } catch (const std::exception& e) {
        return error_response(req, http::status::bad_request, e.what(), origin);
    }

    auto session = std::make_shared<ServiceSession>();
    session->source = source;
    try {
        session->runtime = std::make_unique<RuntimeSession>(source, *tf, rc);
    } catch (const std::exception& e) {
        return error_response(req, http::status::bad_request, e.what(), origin);
    }
    {
        std::lock_guard lock(sessions_mutex_);
        if (sessions_.size() >= config_.max_sessions) {
            return error_response(req, http::status::service_unavailable, "session limit reached", origin);
        }
        session->id = "s" + std::to_string(++next_session_);
        sessions_.emplace(session->id, session);
    }
    return json_response(req, http::status::created,
                         json{{"id", session->id},
                          {"stream", "/session/" + session->id + "/stream"},
                          {"width", rc.render.width},
                          {"height", rc.render.height},
                          {"cache_capacity", rc.cache_capacity},
                          {"prefetch", to_string(rc.prefetch)}},
                         origin);
}

http::response<http::string_body> RenderService::Impl::handle(const http::request<http::string_body>& req) {
    const std::string& origin = config_.cors_origin;
    if (req.method() == http::verb::options) {
        Response res{http::status::no_content, req.version()};
        res.set(http::field::access_control_allow_origin, origin);
        res.set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        res.keep_alive(req.keep_alive());
        res.prepare_payload();
        return res;
    }
    const auto parts = split_path(sv(req.target()));
    if (parts.size() == 1 && parts[0] == "session") {
        if (req.method() != http::verb::post) {
            return error_response(req, http::status::method_not_allowed, "use POST", origin);
        }
        return create_session(req);
    }
    if (parts.size() == 1 && parts[0] == "manifest") {
        if (req.method() != http::verb::get) return error_response(req, http::status::method_not_allowed, "use GET", origin);
        try {
            const auto store = query_param(sv(req.target()), "store");
            const std::filesystem::path path = store ? std::filesystem::path(*store) : config_.store;
            if (path.empty()) return error_response(req, http::status::not_found, "no store configured", origin);
            return json_response(req, http::status::ok, manifest_json(open_store(path)->manifest()), origin);
        } catch (const std::exception& e) {
            return error_response(req, http::status::not_found, std::string("cannot open store: ") + e.what(), origin);
        }
    }
    if (parts.size() >= 2 && parts[0] == "session") {
        auto session = find_session(parts[1]);
        if (!session) return error_response(req, http::status::not_found, "unknown session " + parts[1], origin);
        if (parts.size() == 2 && req.method() == http::verb::delete_) {
            reap(parts[1]);
            return json_response(req, http::status::ok, json{{"id", parts[1]}, {"deleted", true}}, origin);
        }
        if (parts.size() == 3 && parts[2] == "stats" && req.method() == http::verb::get) {
            const auto timings = session->runtime->timings();
            const CacheCounters c = session->runtime->cache().counters();
            json frames = json::array();
            for (const auto& t : timings) frames.push_back(to_json(t));
            return json_response(req, http::status::ok,
                                 json{{"id", session->id},
                                  {"summary", to_json(summarize(timings))},
                                  {"cache",
                                   {{"capacity", session->runtime->cache().capacity()},
                                    {"resident", session->runtime->cache().size()},
                                    {"hits", c.hits},
                                    {"misses", c.misses},
                                    {"evictions", c.evictions},
                                    {"loads", c.loads},
                                    {"bytes_loaded", c.bytes_loaded}}},
                                  {"frames", frames}},
                                 origin);
        }
    }
    return error_response(req, http::status::not_found, "no route for " + std::string(req.target()), origin);
}

RenderService::RenderService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

RenderService::~RenderService() { impl_->stop(); }

unsigned short RenderService::start() { return impl_->start(); }
void RenderService::stop() { impl_->stop(); }
void RenderService::wait() { impl_->wait(); }
std::size_t RenderService::session_count() const { return impl_->session_count(); }
unsigned short RenderService::port() const { return impl_->port(); }

}  // namespace microvol
