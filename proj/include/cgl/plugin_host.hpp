#pragma once

#include <sys/types.h>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgl/detector.hpp"
#include "cgl/error.hpp"
#include "cgl/imaging.hpp"

namespace cgl {

inline constexpr int kPluginProtocolVersion = 1;

class PluginError : public Error {
 public:
  using Error::Error;
};
// The child could not be started.
class PluginSpawnError : public PluginError {
 public:
  using PluginError::PluginError;
};
// First line was not a valid ready message.
class PluginHandshakeError : public PluginError {
 public:
  using PluginError::PluginError;
};
class PluginHandshakeTimeout : public PluginError {
 public:
  using PluginError::PluginError;
};
class PluginVersionMismatch : public PluginError {
 public:
  using PluginError::PluginError;
  int plugin_version = 0;
};
// No response within the request timeout. The handle is dead afterwards.
class PluginTimeout : public PluginError {
 public:
  using PluginError::PluginError;
};
// Response line failed to parse or validate; `line` holds it verbatim.
class PluginProtocolError : public PluginError {
 public:
  PluginProtocolError(const std::string& what, std::string offending_line)
      : PluginError(what + ": " + offending_line), line(std::move(offending_line)) {}
  std::string line;
};
// The plugin answered with {"id":..., "error":"..."}.
class PluginRemoteError : public PluginError {
 public:
  using PluginError::PluginError;
};
// The handle is dead: the child exited, timed out, or was closed.
class PluginDeadError : public PluginError {
 public:
  using PluginError::PluginError;
};

enum class PluginState { ready, busy, dead };

struct PluginOptions {
  double handshake_timeout_s = 10.0;
  double request_timeout_s = 30.0;
};

// Splits a command line on whitespace, honouring single and double quotes and
// backslash escapes. Throws ArgumentError on an unterminated quote.
std::vector<std::string> split_command_line(std::string_view command);

// base64 (standard alphabet, padded).
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);  // throws ParseError

// One child process speaking newline-delimited JSON on stdin/stdout. Requests
// are serialized: one in flight per handle.
class PluginHandle {
 public:
  ~PluginHandle();
  PluginHandle(const PluginHandle&) = delete;
  PluginHandle& operator=(const PluginHandle&) = delete;

  static std::unique_ptr<PluginHandle> spawn(const std::vector<std::string>& argv, const PluginOptions& options = {});

  // One request, one response. Boxes are clamped to [0, width] x [0, height],
  // labels lowercased and singularized.
  std::vector<Detection> detect_png(const std::vector<std::uint8_t>& png, int width, int height, double threshold);

  PluginState state() const;
  int version() const { return version_; }
  pid_t pid() const { return pid_; }

  // Closes the child's stdin, waits briefly for it to exit, then kills it.
  void close();

 private:
  PluginHandle(pid_t pid, int to_child, int from_child, PluginOptions options);

  // Writes `out` (may be empty) while reading until one full line arrives.
  std::string exchange(const std::string& out, double timeout_s, bool handshake);
  void mark_dead();

  pid_t pid_;
  int to_child_;
  int from_child_;
  PluginOptions options_;
  int version_ = 0;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
  mutable std::mutex mu_;
  PluginState state_ = PluginState::ready;
};

std::unique_ptr<PluginHandle> spawn_plugin(std::string_view command_line, const PluginOptions& options = {});
std::vector<Detection> remote_detect(PluginHandle& handle, const Image& image, double threshold);

// Renders each challenge and ships it to a plugin.
class PluginDetector final : public Detector {
 public:
  PluginDetector(std::string command_line, double threshold = 0.2, PluginOptions options = {});

  std::vector<Detection> detect(const Challenge& challenge, std::uint64_t seed) override;
  double threshold() const override { return threshold_; }
  std::string name() const override { return "plugin:" + command_; }

 private:
  std::string command_;
  double threshold_;
  PluginOptions options_;
  std::unique_ptr<PluginHandle> handle_;
};

}  // namespace cgl
