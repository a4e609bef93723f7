// SPDX-License-Identifier: Apache-2.0
//
// Newline-delimited JSON protocol for driving one environment remotely.
// Every reply carries "v": 1. Requests:
//
//   {"op":"reset","seed":S[,"day":D]}  -> {"v":1,"obs":[...],"day":D,"t":0}
//   {"op":"step","action":[...]}       -> {"v":1,"obs":[...],"reward":r,"done":b,"info":{...}}
//   {"op":"describe"}                  -> {"v":1,"n":..,"m":..,"obs_layout":[...],...}
//   {"op":"close"}                     -> {"v":1,"closed":true}
//
// A malformed request gets {"v":1,"error":"..."} and leaves the session as
// it was. Requests may carry "v"; any value other than 1 is rejected.
#pragma once

#include <gridshield/config.hpp>
#include <gridshield/environment.hpp>

#include <functional>
#include <memory>
#include <string>

namespace gridshield {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

class Session {
public:
  using EpisodeSink = std::function<void(const EpisodeTrace&)>;

  /// `sink`, when set, receives every finished or aborted episode.
  Session(const Config& config, ExogenousSeries series,
          std::shared_ptr<SafeSetCache> cache = nullptr, EpisodeSink sink = {});

  /// One request line in, one reply line out (without the newline). Never throws.
  std::string handle(const std::string& frame);

  bool closed() const { return closed_; }
  const MicrogridEnv& env() const { return env_; }

private:
  std::string dispatch(const std::string& frame);
  void flush_episode();

  Config config_;
  MicrogridEnv env_;
  EpisodeSink sink_;
  bool closed_ = false;
  bool episode_open_ = false;
};

}  // namespace gridshield
