#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "hinfer/wire.hpp"

namespace hinfer {

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<u8> data;
  bool closed = false;
};

class PipeEnd final : public Channel {
 public:
  PipeEnd(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out) : in_(std::move(in)), out_(std::move(out)) {}
  ~PipeEnd() override { close(); }

  void write_all(std::span<const u8> data) override {
    std::lock_guard lk(out_->mu);
    if (out_->closed) throw Error("pipe: write after close");
    out_->data.insert(out_->data.end(), data.begin(), data.end());
    out_->cv.notify_all();
  }

  void read_exact(std::span<u8> out) override {
    std::size_t got = 0;
    std::unique_lock lk(in_->mu);
    while (got < out.size()) {
      in_->cv.wait(lk, [&] { return !in_->data.empty() || in_->closed; });
      if (in_->data.empty()) throw Error("pipe: peer closed the connection");
      const std::size_t take = std::min(out.size() - got, in_->data.size());
      std::copy_n(in_->data.begin(), take, out.begin() + static_cast<std::ptrdiff_t>(got));
      in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(take));
      got += take;
    }
  }

  void close() override {
    for (auto* q : {in_.get(), out_.get()}) {
      std::lock_guard lk(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Queue> in_;
  std::shared_ptr<Queue> out_;
};

class SocketChannel final : public Channel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~SocketChannel() override { close(); }

  void write_all(std::span<const u8> data) override {
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t k = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
      if (k < 0 && errno == EINTR) continue;
      if (k <= 0) throw Error(std::string("tcp: send failed: ") + std::strerror(errno));
      done += static_cast<std::size_t>(k);
    }
  }

  void read_exact(std::span<u8> out) override {
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t k = ::recv(fd_, out.data() + done, out.size() - done, 0);
      if (k < 0 && errno == EINTR) continue;
      if (k == 0) throw Error("tcp: peer closed the connection");
      if (k < 0) throw Error(std::string("tcp: recv failed: ") + std::strerror(errno));
      done += static_cast<std::size_t>(k);
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

std::pair<std::string, std::string> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error("address must be host:port, got " + address);
  return {address.substr(0, colon), address.substr(colon + 1)};
}

struct AddrInfo {
  addrinfo* res = nullptr;
  AddrInfo(const std::string& host, const std::string& port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw Error("cannot resolve " + host + ":" + port + ": " + gai_strerror(rc));
  }
  ~AddrInfo() {
    if (res) ::freeaddrinfo(res);
  }
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_pipe() {
  auto a = std::make_shared<Queue>();
  auto b = std::make_shared<Queue>();
  return {std::make_unique<PipeEnd>(a, b), std::make_unique<PipeEnd>(b, a)};
}

std::unique_ptr<Channel> tcp_connect(const std::string& address) {
  const auto [host, port] = split_address(address);
  AddrInfo ai(host.empty() ? "127.0.0.1" : host, port, false);
  for (addrinfo* p = ai.res; p; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) return std::make_unique<SocketChannel>(fd);
    ::close(fd);
  }
  throw Error("cannot connect to " + address);
}

TcpListener::TcpListener(const std::string& address) {
  const auto [host, port] = split_address(address);
  AddrInfo ai(host, port, true);
  for (addrinfo* p = ai.res; p; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, p->ai_addr, p->ai_addrlen) == 0 && ::listen(fd, 4) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  if (fd_ < 0) throw Error("cannot listen on " + address);
  sockaddr_storage ss{};
  socklen_t len = sizeof(ss);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
  if (ss.ss_family == AF_INET)
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  else if (ss.ss_family == AF_INET6)
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<SocketChannel>(fd);
    if (errno != EINTR) throw Error(std::string("tcp: accept failed: ") + std::strerror(errno));
  }
}

}  // namespace hinfer
