#include "ikeusb/udp_bridge.hpp"
#include "ikeusb/error.hpp"
#include "ikeusb/netsim.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <future>
#include <mutex>

namespace ikeusb::udp {

namespace {

constexpr std::size_t kMaxDatagram = 65535;

class Socket {
public:
    Socket()
    {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0)
            throw Error(Errc::ConfigError, std::string("socket: ") + std::strerror(errno));
    }
    ~Socket()
    {
        if (fd_ >= 0)
            ::close(fd_);
    }
    Socket(const Socket &) = delete;
    Socket &operator=(const Socket &) = delete;

    void bind_to(const sockaddr_in &addr)
    {
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd_, reinterpret_cast<const sockaddr *>(&addr), sizeof addr) != 0)
            throw Error(Errc::ConfigError, "bind port " + std::to_string(ntohs(addr.sin_port)) + ": " +
                                               std::strerror(errno));
    }

    void set_timeout(int ms)
    {
        timeval tv{ms / 1000, (ms % 1000) * 1000};
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    }

    void send_to(ByteView data, const sockaddr_in &to)
    {
        ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<const sockaddr *>(&to), sizeof to);
    }

    // nullopt on timeout
    std::optional<Bytes> receive(sockaddr_in &from)
    {
        Bytes buf(kMaxDatagram);
        socklen_t len = sizeof from;
        ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr *>(&from), &len);
        if (n < 0)
            return std::nullopt;
        buf.resize(static_cast<std::size_t>(n));
        return buf;
    }

private:
    int fd_ = -1;
};

sockaddr_in address(const std::string &host, std::uint16_t port)
{
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &a.sin_addr) != 1)
        throw Error(Errc::ConfigError, "bad IPv4 address '" + host + "'");
    return a;
}

// Same principal setup as the simulator's default handshake scenario.
protocol::SessionConfig endpoint_config(const UdpOptions &o, const netsim::PrincipalConfig &p,
                                        const token::DeploymentConfig &deployment, bool has_token)
{
    protocol::SessionConfig sc;
    sc.variant = o.variant;
    sc.identity = p.name;
    if (has_token)
        sc.device = token::UsbSlot(token::create_token(view(*p.serial), deployment, p.name));
    crypto::Drbg file_rng(o.seed, "file-credential:" + p.name);
    sc.credential = std::make_shared<token::FileCredential>(p.name, file_rng);
    sc.replay_cache = std::make_shared<protocol::ReplayCache>();
    sc.seed = crypto::Drbg(o.seed, "session:" + p.name + ":0").next_u64();
    return sc;
}

EndpointResult result_of(const protocol::HandshakeSession &s, bool timed_out)
{
    return EndpointResult{s.identity(), s.state(), s.failure(), s.skeyid(), timed_out};
}

class Ladder {
public:
    void add(int message, const std::string &from, const std::string &to, ByteView bytes)
    {
        std::lock_guard lock(mutex_);
        items_.push_back({message, from, to, Bytes(bytes.begin(), bytes.end())});
    }
    std::vector<Datagram> take()
    {
        std::lock_guard lock(mutex_);
        return std::move(items_);
    }

private:
    std::mutex mutex_;
    std::vector<Datagram> items_;
};

EndpointResult run_responder(protocol::SessionConfig sc, Socket &sock, const std::string &peer,
                             Ladder &ladder)
{
    protocol::HandshakeSession session(protocol::Role::Responder, std::move(sc));
    sockaddr_in from{};
    auto msg1 = sock.receive(from);
    if (!msg1)
        return result_of(session, true);
    auto msg2 = session.responder_on_msg1(*msg1);
    if (!msg2)
        return result_of(session, false);
    ladder.add(2, session.identity(), peer, *msg2);
    sock.send_to(*msg2, from);

    sockaddr_in from3{};
    auto msg3 = sock.receive(from3);
    if (!msg3)
        return result_of(session, true);
    session.responder_on_msg3(*msg3);
    return result_of(session, false);
}

EndpointResult run_initiator(protocol::SessionConfig sc, Socket &sock, const sockaddr_in &responder,
                             const std::string &peer, Ladder &ladder)
{
    protocol::HandshakeSession session(protocol::Role::Initiator, std::move(sc));
    auto msg1 = session.initiator_start();
    if (!msg1)
        return result_of(session, false);
    ladder.add(1, session.identity(), peer, *msg1);
    sock.send_to(*msg1, responder);

    sockaddr_in from{};
    auto msg2 = sock.receive(from);
    if (!msg2)
        return result_of(session, true);
    auto msg3 = session.initiator_on_msg2(*msg2);
    if (!msg3)
        return result_of(session, false);
    ladder.add(3, session.identity(), peer, *msg3);
    sock.send_to(*msg3, from);
    return result_of(session, false);
}

} // namespace

EndpointRole parse_endpoint_role(std::string_view name)
{
    if (name == "both")
        return EndpointRole::Both;
    if (name == "initiator")
        return EndpointRole::Initiator;
    if (name == "responder")
        return EndpointRole::Responder;
    throw Error(Errc::ConfigError, "unknown endpoint role '" + std::string(name) + "'");
}

UdpOutcome run_udp_handshake(const UdpOptions &o)
{
    const auto scenario = netsim::default_handshake_scenario(o.variant, o.seed);
    const auto &init_p = scenario.principals.at(0);
    const auto &resp_p = scenario.principals.at(1);
    const auto deployment = token::DeploymentConfig::from_seed(o.seed);
    const sockaddr_in responder_addr = address(o.host, o.port);

    Ladder ladder;
    UdpOutcome out;

    std::optional<Socket> resp_sock;
    if (o.role != EndpointRole::Initiator) {
        resp_sock.emplace();
        resp_sock->bind_to(responder_addr);
        resp_sock->set_timeout(o.timeout_ms);
    }

    std::future<EndpointResult> responder;
    if (resp_sock) {
        auto sc = endpoint_config(o, resp_p, deployment, o.responder_token);
        responder = std::async(std::launch::async, [&, sc]() mutable {
            return run_responder(std::move(sc), *resp_sock, init_p.name, ladder);
        });
    }

    if (o.role != EndpointRole::Responder) {
        Socket sock;
        sock.bind_to(address(o.host, 0));
        sock.set_timeout(o.timeout_ms);
        out.initiator = run_initiator(endpoint_config(o, init_p, deployment, o.initiator_token), sock,
                                      responder_addr, resp_p.name, ladder);
    }
    if (responder.valid())
        out.responder = responder.get();

    out.ladder = ladder.take();
    std::stable_sort(out.ladder.begin(), out.ladder.end(),
                     [](const Datagram &a, const Datagram &b) { return a.message < b.message; });
    return out;
}

} // namespace ikeusb::udp
