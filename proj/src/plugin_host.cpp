#include "cgl/plugin_host.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sodium.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "json.hpp"

#include "cgl/instruction.hpp"

extern char** environ;

namespace cgl {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string sys_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

std::string hello_line() {
  nlohmann::ordered_json j{{"hello", "captcha-grid-lab"}, {"version", kPluginProtocolVersion}};
  return j.dump() + "\n";
}

}  // namespace

std::vector<std::string> split_command_line(std::string_view cmd) {
  std::vector<std::string> args;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < cmd.size(); ++i) {
    char c = cmd[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < cmd.size()) {
        cur += cmd[++i];
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < cmd.size()) {
      cur += cmd[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) args.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw ArgumentError("unterminated quote in command line");
  if (in_word) args.push_back(std::move(cur));
  return args;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  if (sodium_init() < 0) throw Error("libsodium failed to initialise");
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (sodium_init() < 0) throw Error("libsodium failed to initialise");
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size())
    throw ParseError("invalid base64 payload");
  out.resize(len);
  return out;
}

PluginHandle::PluginHandle(pid_t pid, int to_child, int from_child, PluginOptions options)
    : pid_(pid), to_child_(to_child), from_child_(from_child), options_(options) {}

PluginHandle::~PluginHandle() { close(); }

std::unique_ptr<PluginHandle> PluginHandle::spawn(const std::vector<std::string>& argv, const PluginOptions& options) {
  if (argv.empty()) throw PluginSpawnError("empty plugin command");
  if (!(options.handshake_timeout_s > 0) || !(options.request_timeout_s > 0))
    throw ConfigError("plugin timeouts must be positive");
  ignore_sigpipe_once();

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw PluginSpawnError(sys_error("pipe"));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw PluginSpawnError(sys_error("pipe"));
  }

  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&fa, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, cargv[0], &fa, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw PluginSpawnError("cannot start '" + argv[0] + "': " + std::strerror(rc));
  }
  ::fcntl(in_pipe[1], F_SETFL, ::fcntl(in_pipe[1], F_GETFL) | O_NONBLOCK);
  ::fcntl(out_pipe[0], F_SETFL, ::fcntl(out_pipe[0], F_GETFL) | O_NONBLOCK);

  std::unique_ptr<PluginHandle> h(new PluginHandle(pid, in_pipe[1], out_pipe[0], options));
  std::string line;
  try {
    line = h->exchange(hello_line(), options.handshake_timeout_s, true);
  } catch (const PluginTimeout&) {
    throw PluginHandshakeTimeout("plugin did not answer the handshake in time");
  } catch (const PluginDeadError& e) {
    throw PluginHandshakeError(std::string("plugin exited during handshake: ") + e.what());
  }

  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("ready") || !j["ready"].is_boolean() || !j["ready"].get<bool>() ||
      !j.contains("version") || !j["version"].is_number_integer()) {
    h->mark_dead();
    throw PluginHandshakeError("unexpected handshake line: " + line);
  }
  int version = j["version"].get<int>();
  if (version != kPluginProtocolVersion) {
    h->mark_dead();
    PluginVersionMismatch err("plugin speaks protocol version " + std::to_string(version) + ", host speaks " +
                              std::to_string(kPluginProtocolVersion));
    err.plugin_version = version;
    throw err;
  }
  h->version_ = version;
  return h;
}

std::string PluginHandle::exchange(const std::string& out, double timeout_s, bool handshake) {
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  std::size_t written = 0;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos && written == out.size()) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto now = Clock::now();
    if (now >= deadline) {
      mark_dead();
      throw PluginTimeout(handshake ? "handshake timed out" : "plugin request timed out");
    }
    const int wait_ms =
        static_cast<int>(std::ceil(std::chrono::duration<double, std::milli>(deadline - now).count()));

    pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
    const nfds_t n = written < out.size() ? 2 : 1;
    int rc = ::poll(fds, n, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      mark_dead();
      throw PluginDeadError(sys_error("poll"));
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[65536];
      ssize_t got = ::read(from_child_, buf, sizeof buf);
      if (got > 0) {
        buffer_.append(buf, static_cast<std::size_t>(got));
      } else if (got == 0) {
        mark_dead();
        throw PluginDeadError("plugin closed its output");
      } else if (errno != EAGAIN && errno != EINTR) {
        mark_dead();
        throw PluginDeadError(sys_error("read"));
      }
    }
    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t put = ::write(to_child_, out.data() + written, out.size() - written);
      if (put > 0) {
        written += static_cast<std::size_t>(put);
      } else if (put < 0 && errno != EAGAIN && errno != EINTR) {
        mark_dead();
        throw PluginDeadError(sys_error("write to plugin"));
      }
    }
  }
}

void PluginHandle::mark_dead() {
  state_ = PluginState::dead;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

PluginState PluginHandle::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

void PluginHandle::close() {
  std::lock_guard lock(mu_);
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    // Give a well-behaved plugin a moment to exit on end of input.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  state_ = PluginState::dead;
}

namespace {

double finite_number(const nlohmann::json& v, const std::string& line, const char* what) {
  if (!v.is_number()) throw PluginProtocolError(std::string(what) + " must be a number", line);
  double d = v.get<double>();
  if (!std::isfinite(d)) throw PluginProtocolError(std::string(what) + " must be finite", line);
  return d;
}

std::vector<Detection> parse_response(const std::string& line, std::uint64_t id, int width, int height) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw PluginProtocolError("response is not a JSON object", line);
  if (!j.contains("id") || !j["id"].is_number_unsigned() || j["id"].get<std::uint64_t>() != id)
    throw PluginProtocolError("response id does not echo request id " + std::to_string(id), line);
  if (j.contains("error")) {
    const auto& e = j["error"];
    throw PluginRemoteError("plugin reported: " + (e.is_string() ? e.get<std::string>() : e.dump()));
  }
  if (!j.contains("detections") || !j["detections"].is_array())
    throw PluginProtocolError("response has no detections array", line);

  std::vector<Detection> out;
  for (const auto& d : j["detections"]) {
    if (!d.is_object()) throw PluginProtocolError("detection is not an object", line);
    if (!d.contains("label") || !d["label"].is_string() || d["label"].get<std::string>().empty())
      throw PluginProtocolError("detection label must be a non-empty string", line);
    if (!d.contains("confidence")) throw PluginProtocolError("detection has no confidence", line);
    double conf = finite_number(d["confidence"], line, "confidence");
    if (conf < 0.0 || conf > 1.0) throw PluginProtocolError("confidence outside [0, 1]", line);
    if (!d.contains("box") || !d["box"].is_array() || d["box"].size() != 4)
      throw PluginProtocolError("box must be [x_min, y_min, x_max, y_max]", line);
    double b[4];
    for (int k = 0; k < 4; ++k) b[k] = finite_number(d["box"][static_cast<std::size_t>(k)], line, "box coordinate");
    if (b[0] > b[2] || b[1] > b[3]) throw PluginProtocolError("box corners out of order", line);
    std::string label = singularize(d["label"].get<std::string>());
    if (label.empty()) throw PluginProtocolError("detection label must be a non-empty string", line);
    out.push_back(Detection::make(label, conf, BoundingBox::clamped(b[0], b[1], b[2], b[3], width, height)));
  }
  return out;
}

}  // namespace

std::vector<Detection> PluginHandle::detect_png(const std::vector<std::uint8_t>& png, int width, int height,
                                                double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
  std::lock_guard lock(mu_);
  if (state_ == PluginState::dead) throw PluginDeadError("plugin handle is dead");
  state_ = PluginState::busy;

  const std::uint64_t id = next_id_++;
  nlohmann::ordered_json req{{"id", id}, {"image", base64_encode(png)}, {"threshold", threshold}};
  std::string line = exchange(req.dump() + "\n", options_.request_timeout_s, false);
  state_ = PluginState::ready;
  return parse_response(line, id, width, height);
}

std::unique_ptr<PluginHandle> spawn_plugin(std::string_view command_line, const PluginOptions& options) {
  return PluginHandle::spawn(split_command_line(command_line), options);
}

std::vector<Detection> remote_detect(PluginHandle& handle, const Image& image, double threshold) {
  return handle.detect_png(encode_png(image), image.width(), image.height(), threshold);
}

PluginDetector::PluginDetector(std::string command_line, double threshold, PluginOptions options)
    : command_(std::move(command_line)), threshold_(threshold), options_(options) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  handle_ = spawn_plugin(command_, options_);
}

std::vector<Detection> PluginDetector::detect(const Challenge& challenge, std::uint64_t) {
  if (!handle_ || handle_->state() == PluginState::dead) handle_ = spawn_plugin(command_, options_);
  return remote_detect(*handle_, challenge.render(), threshold_);
}

}  // namespace cgl
