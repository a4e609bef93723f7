// SPDX-License-Identifier: Apache-2.0
#include <gridshield/errors.hpp>
#include <gridshield/server.hpp>

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace gridshield {

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t w = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (w < 0 && errno == ENOTSOCK) w = ::write(fd, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(w);
  }
  return true;
}

// Feeds newline-terminated frames to the session until EOF, a write error or close.
void pump(Session& session, int in_fd, int out_fd) {
  std::string buf;
  bool discarding = false;  // inside an oversized frame
  char chunk[65536];
  auto reply = [&](const std::string& frame) { return write_all(out_fd, session.handle(frame) + "\n"); };

  for (;;) {
    const ssize_t r = ::read(in_fd, chunk, sizeof chunk);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(r));

    std::size_t start = 0;
    for (std::size_t nl; (nl = buf.find('\n', start)) != std::string::npos; start = nl + 1) {
      if (discarding) {
        discarding = false;
        continue;
      }
      std::string frame = buf.substr(start, nl - start);
      if (!frame.empty() && frame.back() == '\r') frame.pop_back();
      if (frame.find_first_not_of(" \t") == std::string::npos) continue;
      if (!reply(frame) || session.closed()) return;
    }
    buf.erase(0, start);
    if (buf.size() > kMaxFrameBytes) {
      if (!discarding && !reply(buf)) return;  // the session answers with the size error
      discarding = true;
      buf.clear();
    }
  }
  // A final frame without a trailing newline still counts.
  if (!discarding && buf.find_first_not_of(" \t\r") != std::string::npos) reply(buf);
}

}  // namespace

TcpEndpoint parse_endpoint(const std::string& text) {
  std::string rest = text;
  if (rest.rfind("tcp://", 0) == 0) rest = rest.substr(6);
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint '" + text + "' lacks a port");
  TcpEndpoint ep;
  if (colon > 0) ep.host = rest.substr(0, colon);
  const std::string p = rest.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
  if (p.empty() || ec != std::errc() || ptr != p.data() + p.size() || port < 0 || port > 65535)
    throw std::invalid_argument("endpoint '" + text + "' has an invalid port");
  ep.port = port;
  return ep;
}

Server::Server(const Config& config, ExogenousSeries series, const TcpEndpoint& endpoint)
    : config_(config), series_(std::move(series)), cache_(std::make_shared<SafeSetCache>(config.env.grid, config.env.shield.solver)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &res); rc != 0)
    throw IoError("cannot resolve '" + endpoint.host + "': " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(static_cast<std::uint16_t>(endpoint.port));

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw IoError("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

Server::~Server() { stop(); }

void Server::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  ++sessions_;
  try {
    Session session(config_, series_, cache_, [this](const EpisodeTrace& tr) {
      std::lock_guard lock(mutex_);
      traces_.push_back(tr);
    });
    pump(session, fd, fd);
    if (!session.closed()) session.handle(R"({"op":"close"})");
  } catch (...) {
    // Session construction failed; nothing useful to send.
  }
  std::lock_guard lock(mutex_);
  std::erase(open_fds_, fd);
  ::close(fd);
}

void Server::stop() {
  if (stopping_.exchange(true)) {
    wait();
    return;
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(stop_mutex_);
    stopped_ = true;
  }
  stopped_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lock(stop_mutex_);
  stopped_cv_.wait(lock, [this] { return stopped_; });
}

std::vector<EpisodeTrace> Server::traces() const {
  std::lock_guard lock(mutex_);
  return traces_;
}

std::vector<EpisodeTrace> serve_stream(const Config& config, ExogenousSeries series, int in_fd,
                                       int out_fd) {
  std::vector<EpisodeTrace> traces;
  Session session(config, std::move(series), nullptr,
                  [&traces](const EpisodeTrace& tr) { traces.push_back(tr); });
  pump(session, in_fd, out_fd);
  // Flush an episode left open by EOF.
  if (!session.closed()) session.handle(R"({"op":"close"})");
  return traces;
}

}  // namespace gridshield
