// SPDX-License-Identifier: Apache-2.0
//
// Serves the session protocol over TCP (one thread and one session per
// connection) or over a pair of file descriptors.
#pragma once

#include <gridshield/session.hpp>

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gridshield {

/// "host:port", "tcp://host:port" or ":port"; port 0 picks a free port.
struct TcpEndpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};
/// Throws std::invalid_argument.
TcpEndpoint parse_endpoint(const std::string& text);

class Server {
public:
  /// Binds and starts accepting. Throws IoError when the socket cannot be set up.
  Server(const Config& config, ExogenousSeries series, const TcpEndpoint& endpoint);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }
  const Config& config() const { return config_; }
  /// Stops accepting, shuts down open connections and joins all threads.
  void stop();
  /// Blocks until stop() has been called from elsewhere.
  void wait();

  /// Episodes finished or aborted so far, across all sessions.
  std::vector<EpisodeTrace> traces() const;
  std::size_t sessions_served() const { return sessions_; }

private:
  void accept_loop();
  void serve_connection(int fd);

  Config config_;
  ExogenousSeries series_;
  std::shared_ptr<SafeSetCache> cache_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> sessions_{0};
  std::thread acceptor_;
  mutable std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
  std::vector<EpisodeTrace> traces_;
  std::mutex stop_mutex_;
  bool stopped_ = false;
  std::condition_variable stopped_cv_;
};

/// Runs one session reading frames from in_fd and writing replies to out_fd
/// until end of input or a close request. Returns the finished episodes.
std::vector<EpisodeTrace> serve_stream(const Config& config, ExogenousSeries series, int in_fd,
                                       int out_fd);

}  // namespace gridshield
