// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include <gridshield/server.hpp>
#include <gridshield/session.hpp>

#include "json.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <thread>

using namespace gridshield;
using nlohmann::json;
using gstest::Rng;

namespace {

constexpr std::size_t kSteps = 60;

Config short_config() {
  Config c = default_config();
  c.env.grid.horizon_T = static_cast<int>(kSteps);
  c.env.forecast.horizons = {10, 20};
  c.env.forecast.smoothing_window = 12;
  return c;
}

ExogenousSeries short_days(std::size_t days) { return synth_days(8, days, SynthProfile{}, kSteps, 0.4); }

json ask(Session& s, const json& req) { return json::parse(s.handle(req.dump())); }

class Client {
public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }
  ~Client() {
    if (fd_ >= 0) ::close(fd_);
  }
  bool ok() const { return fd_ >= 0; }

  void send_raw(const std::string& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t k = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (k <= 0) return;
      off += static_cast<std::size_t>(k);
    }
  }

  std::string line() {
    for (;;) {
      const std::size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string out = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return out;
      }
      char chunk[4096];
      const ssize_t k = ::recv(fd_, chunk, sizeof chunk, 0);
      if (k <= 0) return "";
      buf_.append(chunk, static_cast<std::size_t>(k));
    }
  }

  json ask(const json& req) {
    send_raw(req.dump() + "\n");
    const std::string reply = line();
    return reply.empty() ? json() : json::parse(reply);
  }

private:
  int fd_ = -1;
  std::string buf_;
};

std::string random_bytes(Rng& rng) {
  std::string s(static_cast<std::size_t>(rng.integer(0, 40)), ' ');
  for (char& c : s) c = static_cast<char>(rng.integer(1, 255));
  for (char& c : s)
    if (c == '\n') c = ' ';
  return s;
}

/// Frames that are wrong in one way: not JSON, wrong shape, bad op, bad types.
std::string malformed_frame(Rng& rng, Eigen::Index action_dim) {
  switch (rng.integer(0, 11)) {
    case 0: return random_bytes(rng);
    case 1: return R"({"op":"step","action":[1,2,3)";
    case 2: return "[" + std::to_string(rng.integer(0, 9)) + "]";
    case 3: return R"({"op":)" + std::to_string(rng.integer(0, 99)) + "}";
    case 4: return R"({"op":"fly"})";
    case 5: return R"({"op":"reset","seed":-)" + std::to_string(rng.integer(1, 99)) + "}";
    case 6: return R"({"op":"reset","seed":"abc"})";
    case 7: return R"({"op":"reset","seed":1,"day":)" + std::to_string(rng.integer(50, 99)) + "}";
    case 8: {
      json a = json::array();
      const int len = rng.coin() ? static_cast<int>(action_dim) + rng.integer(1, 3) : rng.integer(0, static_cast<int>(action_dim) - 1);
      for (int i = 0; i < len; ++i) a.push_back(rng.uniform(-1, 1));
      return json{{"op", "step"}, {"action", a}}.dump();
    }
    case 9: return R"({"op":"step","action":[1,"x",3]})";
    case 10: return R"({"op":"describe","v":)" + std::to_string(rng.integer(2, 9)) + "}";
    default: return R"({"op":"step","action":{"a":1}})";
  }
}

}  // namespace

TEST_CASE("session round trip") {
  const Config c = short_config();
  std::vector<EpisodeTrace> flushed;
  Session s(c, short_days(2), nullptr, [&](const EpisodeTrace& t) { flushed.push_back(t); });

  const json d = ask(s, {{"op", "describe"}});
  CHECK(d["v"] == 1);
  CHECK(d["n"] == 2);
  CHECK(d["action_dim"] == 3);
  CHECK(d["obs_layout"].size() == 2 + 4 + 4 * 2);
  CHECK(d["days"] == 2);
  CHECK(d["mode"] == "full_shield");

  const json e = ask(s, {{"op", "step"}, {"action", {0, 0, 0}}});
  CHECK(e.contains("error"));

  const json r = ask(s, {{"op", "reset"}, {"seed", 5}});
  CHECK(r["v"] == 1);
  CHECK(r["day"] == 1);
  CHECK(r["t"] == 0);
  CHECK(r["obs"].size() == d["obs_layout"].size());

  json last;
  for (std::size_t t = 0; t < kSteps; ++t) {
    last = ask(s, {{"op", "step"}, {"action", {1.0, -1.0, 0.5}}, {"v", 1}});
    REQUIRE(last.contains("info"));
    CHECK(last["info"]["safe_action"].size() == 3);
    CHECK(last["info"]["violation"].get<double>() <= 1e-6);
    CHECK(last["done"] == (t + 1 == kSteps));
  }
  CHECK(flushed.size() == 1);
  CHECK(flushed[0].steps.size() == kSteps);
  CHECK(ask(s, {{"op", "step"}, {"action", {0, 0, 0}}}).contains("error"));

  ask(s, {{"op", "reset"}, {"seed", 1}, {"day", 0}});
  ask(s, {{"op", "step"}, {"action", {0, 0, 0}}});
  const json bye = ask(s, {{"op", "close"}});
  CHECK(bye["closed"] == true);
  CHECK(s.closed());
  CHECK(flushed.size() == 2);
  CHECK(flushed[1].steps.size() == 1);
  CHECK(ask(s, {{"op", "describe"}}).contains("error"));
}

TEST_CASE("property: malformed frames get error replies and leave the session unchanged") {
  const Config c = short_config();
  Session s(c, short_days(2));
  ask(s, {{"op", "reset"}, {"seed", 3}});
  ask(s, {{"op", "step"}, {"action", {0, 0, 0}}});
  const int t = s.env().time();
  const Eigen::VectorXd e = s.env().state();
  Rng rng(81);
  int errors = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string reply = s.handle(malformed_frame(rng, 3));
    const json j = json::parse(reply);
    CHECK(j["v"] == 1);
    if (j.contains("error") && j["error"].is_string()) ++errors;
  }
  CHECK(errors == 1000);
  CHECK(s.env().time() == t);
  CHECK(s.env().state() == e);
  CHECK(s.handle(std::string(kMaxFrameBytes + 1, ' ')).find("1 MiB") != std::string::npos);
  const json ok = ask(s, {{"op", "step"}, {"action", {0, 0, 0}}});
  CHECK(ok.contains("obs"));
  CHECK(s.env().time() == t + 1);
}

TEST_CASE("endpoint parsing") {
  CHECK(parse_endpoint("127.0.0.1:8080").port == 8080);
  CHECK(parse_endpoint("tcp://0.0.0.0:9").host == "0.0.0.0");
  CHECK(parse_endpoint(":0").host == "127.0.0.1");
  CHECK_THROWS_AS(parse_endpoint("localhost"), std::invalid_argument);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), std::invalid_argument);
  CHECK_THROWS_AS(parse_endpoint("h:abc"), std::invalid_argument);
}

TEST_CASE("serve_stream over a pipe") {
  int to_server[2], from_server[2];
  REQUIRE(::pipe(to_server) == 0);
  REQUIRE(::pipe(from_server) == 0);
  const std::string script = std::string(R"({"op":"describe"})") + "\r\n\n" +
                             R"({"op":"reset","seed":2,"day":0})" + "\n" + "oops\n" +
                             R"({"op":"step","action":[0,0,0]})";  // no final newline
  REQUIRE(::write(to_server[1], script.data(), script.size()) == static_cast<ssize_t>(script.size()));
  ::close(to_server[1]);
  const Config c = short_config();
  const std::vector<EpisodeTrace> traces = serve_stream(c, short_days(1), to_server[0], from_server[1]);
  ::close(from_server[1]);
  ::close(to_server[0]);
  std::string out;
  char chunk[4096];
  for (ssize_t k; (k = ::read(from_server[0], chunk, sizeof chunk)) > 0;) out.append(chunk, static_cast<std::size_t>(k));
  ::close(from_server[0]);
  std::vector<json> replies;
  for (std::size_t pos = 0, nl; (nl = out.find('\n', pos)) != std::string::npos; pos = nl + 1)
    replies.push_back(json::parse(out.substr(pos, nl - pos)));
  REQUIRE(replies.size() == 4);
  CHECK(replies[0].contains("obs_layout"));
  CHECK(replies[1]["t"] == 0);
  CHECK(replies[2].contains("error"));
  CHECK(replies[3].contains("reward"));
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].steps.size() == 1);
}

TEST_CASE("TCP sessions are isolated from each other") {
  const Config c = short_config();
  Server server(c, short_days(2), parse_endpoint("127.0.0.1:0"));
  REQUIRE(server.port() > 0);

  constexpr int kClients = 4;
  std::vector<std::vector<double>> first_obs(kClients), final_obs(kClients);
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < kClients; ++k) {
    threads.emplace_back([&, k] {
      Client cl(server.port());
      if (!cl.ok()) {
        ++failures;
        return;
      }
      // Clients 0 and 2 run the same episode, 1 and 3 another one.
      const json r = cl.ask({{"op", "reset"}, {"seed", 40 + k % 2}, {"day", k % 2}});
      if (!r.contains("obs")) {
        ++failures;
        return;
      }
      first_obs[static_cast<std::size_t>(k)] = r["obs"].get<std::vector<double>>();
      for (int t = 0; t < 10; ++t) {
        const double sign = k % 2 ? -1.0 : 1.0;
        const json s = cl.ask({{"op", "step"}, {"action", {sign, sign, 0.0}}});
        if (!s.contains("obs")) {
          ++failures;
          return;
        }
        final_obs[static_cast<std::size_t>(k)] = s["obs"].get<std::vector<double>>();
      }
      cl.ask({{"op", "close"}});
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures == 0);
  CHECK(first_obs[0] == first_obs[2]);
  CHECK(final_obs[0] == final_obs[2]);
  CHECK(final_obs[1] == final_obs[3]);
  CHECK(final_obs[0] != final_obs[1]);

  // A client that hangs up mid-episode still has its episode recorded.
  {
    Client cl(server.port());
    REQUIRE(cl.ok());
    cl.ask({{"op", "reset"}, {"seed", 1}, {"day", 0}});
    cl.ask({{"op", "step"}, {"action", {0, 0, 0}}});
  }
  for (int i = 0; i < 100 && server.sessions_served() < kClients + 1; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  server.stop();
  CHECK(server.sessions_served() == kClients + 1);
  const std::vector<EpisodeTrace> traces = server.traces();
  CHECK(traces.size() == kClients + 1);
  std::size_t short_episodes = 0;
  for (const EpisodeTrace& t : traces) short_episodes += t.steps.size() == 1 ? 1 : 0;
  CHECK(short_episodes == 1);
}
