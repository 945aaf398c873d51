#include "lowpan/packet.hpp"

#include <cctype>
#include <iomanip>
#include <sstream>

namespace lowpan {

namespace {

constexpr std::size_t kRouteExtSize = 4;

std::size_t addr_width(bool extended)
{
    return extended ? 8 : 2;
}

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u64(std::uint64_t v)
    {
        for (int shift = 56; shift >= 0; shift -= 8)
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    void addr(const NodeAddress& a)
    {
        if (a.is_extended())
            u64(a.value);
        else
            u16(static_cast<std::uint16_t>(a.value));
    }
    void loc(const WireLocation& l)
    {
        u16(l.x_m);
        u16(l.y_m);
    }
    void ext(const std::optional<RouteExt>& e)
    {
        if (!e)
            return;
        u16(e->rreq_id);
        u8(e->weak_links);
        u8(e->hops);
    }
    void bytes(const std::vector<std::uint8_t>& b) { out_.insert(out_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

    std::uint8_t u8()
    {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = (v << 8) | in_[pos_ + i];
        pos_ += 8;
        return v;
    }
    NodeAddress addr(bool extended) { return extended ? NodeAddress::extended(u64()) : NodeAddress::short_addr(u16()); }
    WireLocation loc()
    {
        WireLocation l;
        l.x_m = u16();
        l.y_m = u16();
        return l;
    }
    std::vector<std::uint8_t> bytes(std::size_t n)
    {
        need(n);
        std::vector<std::uint8_t> b(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return b;
    }
    /// Optional discovery extension: present iff exactly its size remains.
    std::optional<RouteExt> ext()
    {
        if (remaining() != kRouteExtSize)
            return std::nullopt;
        RouteExt e;
        e.rreq_id = u16();
        e.weak_links = u8();
        e.hops = u8();
        return e;
    }
    void finish() const
    {
        if (remaining() != 0)
            throw CodecError(CodecErrc::TrailingGarbage, pos_, "decode: " + std::to_string(remaining()) + " trailing byte(s)");
    }

private:
    void need(std::size_t n) const
    {
        if (remaining() < n)
            throw CodecError(CodecErrc::Truncated, in_.size(),
                             "decode: truncated at byte " + std::to_string(in_.size()) + " (needed " + std::to_string(n) + " more at offset " + std::to_string(pos_) + ")");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void check_flags(const AddressFlags& f)
{
    if (f.reserved != 0)
        throw CodecError(CodecErrc::MalformedFlags, 0, "encode: reserved flag bits must be zero");
}

void check_addr(const NodeAddress& a, bool extended_flag, const char* field)
{
    if (a.is_extended() != extended_flag)
        throw CodecError(CodecErrc::InvalidField, 0, std::string("encode: address width of ") + field + " disagrees with flags");
    if (!a.valid())
        throw CodecError(CodecErrc::InvalidField, 0, std::string("encode: ") + field + " does not fit 16 bits");
}

void validate(const RreqPacket& p)
{
    check_flags(p.flags);
    check_addr(p.dest_addr, p.flags.d, "dest_addr");
    check_addr(p.orig_addr, p.flags.o, "orig_addr");
}

void validate(const RrepPacket& p)
{
    check_flags(p.flags);
    check_addr(p.responder_addr, p.flags.d, "responder_addr");
    check_addr(p.orig_addr, p.flags.o, "orig_addr");
}

void validate(const RerrPacket& p)
{
    check_flags(p.flags);
    check_addr(p.unreachable_addr, p.flags.d, "unreachable_addr");
    check_addr(p.orig_addr, p.flags.o, "orig_addr");
}

void validate(const DataPacket& p)
{
    check_flags(p.flags);
    check_addr(p.mesh.final_dest, p.flags.d, "final_dest");
    check_addr(p.mesh.orig, p.flags.o, "orig");
    if (p.payload.size() > kMaxPayload)
        throw CodecError(CodecErrc::Oversize, 0, "encode: payload of " + std::to_string(p.payload.size()) + " bytes exceeds 81");
}

void validate(const ErBeaconPacket& p)
{
    check_flags(p.flags);
    if (p.flags.o)
        throw CodecError(CodecErrc::MalformedFlags, 0, "encode: beacon has no originator field");
    check_addr(p.er_addr, p.flags.d, "er_addr");
}

void validate(const AckPacket& p)
{
    check_flags(p.flags);
    if (p.flags.d || p.flags.o)
        throw CodecError(CodecErrc::MalformedFlags, 0, "encode: ack carries no addresses");
}

std::size_t ext_size(const std::optional<RouteExt>& e)
{
    return e ? kRouteExtSize : 0;
}

std::string loc_str(const WireLocation& l)
{
    return "(" + std::to_string(l.x_m) + ", " + std::to_string(l.y_m) + ")";
}

} // namespace

CodecError::CodecError(CodecErrc code, std::size_t offset, const std::string& what)
    : std::runtime_error(what), code_(code), offset_(offset)
{
}

const char* to_string(PacketType type)
{
    switch (type) {
    case PacketType::Rreq:
        return "RREQ";
    case PacketType::Rrep:
        return "RREP";
    case PacketType::Rerr:
        return "RERR";
    case PacketType::Data:
        return "DATA";
    case PacketType::ErBeacon:
        return "ER-BEACON";
    case PacketType::Ack:
        return "ACK";
    }
    return "?";
}

const char* to_string(CodecErrc code)
{
    switch (code) {
    case CodecErrc::UnknownType:
        return "UnknownType";
    case CodecErrc::Truncated:
        return "Truncated";
    case CodecErrc::MalformedFlags:
        return "MalformedFlags";
    case CodecErrc::TrailingGarbage:
        return "TrailingGarbage";
    case CodecErrc::Oversize:
        return "Oversize";
    case CodecErrc::InvalidField:
        return "InvalidField";
    }
    return "?";
}

WireLocation WireLocation::from(Location loc)
{
    const auto x = round_half_up(loc.x);
    const auto y = round_half_up(loc.y);
    if (x < 0 || y < 0 || x > 0xFFFF || y > 0xFFFF)
        throw CodecError(CodecErrc::InvalidField, 0, "location does not fit 16-bit whole meters");
    return {static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)};
}

PacketType packet_type(const Packet& packet)
{
    return static_cast<PacketType>(packet.index() + 1);
}

std::size_t frame_size(const Packet& packet)
{
    constexpr std::size_t kHead = 2; // type + flags
    return std::visit(
        [](const auto& p) -> std::size_t {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RreqPacket>) {
                return kHead + addr_width(p.flags.d) + 4 + addr_width(p.flags.o) + 4 + ext_size(p.ext);
            } else if constexpr (std::is_same_v<T, RrepPacket>) {
                return kHead + addr_width(p.flags.d) + 4 + 1 + addr_width(p.flags.o) + ext_size(p.ext);
            } else if constexpr (std::is_same_v<T, RerrPacket>) {
                return kHead + addr_width(p.flags.d) + addr_width(p.flags.o);
            } else if constexpr (std::is_same_v<T, DataPacket>) {
                if (p.payload.size() > kMaxPayload)
                    throw CodecError(CodecErrc::Oversize, 0, "frame_size: payload of " + std::to_string(p.payload.size()) + " bytes exceeds 81");
                return kHead + 1 + addr_width(p.flags.d) + addr_width(p.flags.o) + 2 + 1 + p.payload.size();
            } else if constexpr (std::is_same_v<T, ErBeaconPacket>) {
                return kHead + addr_width(p.flags.d) + 4;
            } else {
                return kHead + 2;
            }
        },
        packet);
}

std::vector<std::uint8_t> encode(const Packet& packet)
{
    Writer w;
    w.u8(static_cast<std::uint8_t>(packet_type(packet)));
    std::visit(
        [&w](const auto& p) {
            validate(p);
            w.u8(p.flags.to_octet());
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RreqPacket>) {
                w.addr(p.dest_addr);
                w.loc(p.dest_loc);
                w.addr(p.orig_addr);
                w.loc(p.orig_loc);
                w.ext(p.ext);
            } else if constexpr (std::is_same_v<T, RrepPacket>) {
                w.addr(p.responder_addr);
                w.loc(p.responder_loc);
                w.u8(p.link_lqi.raw);
                w.addr(p.orig_addr);
                w.ext(p.ext);
            } else if constexpr (std::is_same_v<T, RerrPacket>) {
                w.addr(p.unreachable_addr);
                w.addr(p.orig_addr);
            } else if constexpr (std::is_same_v<T, DataPacket>) {
                w.u8(p.mesh.hops_left);
                w.addr(p.mesh.final_dest);
                w.addr(p.mesh.orig);
                w.u16(p.seq);
                w.u8(static_cast<std::uint8_t>(p.payload.size()));
                w.bytes(p.payload);
            } else if constexpr (std::is_same_v<T, ErBeaconPacket>) {
                w.addr(p.er_addr);
                w.loc(p.er_loc);
            } else {
                w.u16(p.seq);
            }
        },
        packet);
    return w.take();
}

Packet decode(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    const std::uint8_t type = r.u8();
    if (type < 1 || type > 6)
        throw CodecError(CodecErrc::UnknownType, 0, "decode: unknown packet type " + std::to_string(type));
    const AddressFlags flags = AddressFlags::from_octet(r.u8());
    if (flags.reserved != 0)
        throw CodecError(CodecErrc::MalformedFlags, 1, "decode: reserved flag bits set");

    Packet out;
    switch (static_cast<PacketType>(type)) {
    case PacketType::Rreq: {
        RreqPacket p;
        p.flags = flags;
        p.dest_addr = r.addr(flags.d);
        p.dest_loc = r.loc();
        p.orig_addr = r.addr(flags.o);
        p.orig_loc = r.loc();
        p.ext = r.ext();
        out = p;
        break;
    }
    case PacketType::Rrep: {
        RrepPacket p;
        p.flags = flags;
        p.responder_addr = r.addr(flags.d);
        p.responder_loc = r.loc();
        p.link_lqi = LqiValue{r.u8()};
        p.orig_addr = r.addr(flags.o);
        p.ext = r.ext();
        out = p;
        break;
    }
    case PacketType::Rerr: {
        RerrPacket p;
        p.flags = flags;
        p.unreachable_addr = r.addr(flags.d);
        p.orig_addr = r.addr(flags.o);
        out = p;
        break;
    }
    case PacketType::Data: {
        DataPacket p;
        p.flags = flags;
        p.mesh.hops_left = r.u8();
        p.mesh.final_dest = r.addr(flags.d);
        p.mesh.orig = r.addr(flags.o);
        p.seq = r.u16();
        const std::size_t len_at = r.pos();
        const std::uint8_t len = r.u8();
        if (len > kMaxPayload)
            throw CodecError(CodecErrc::Oversize, len_at, "decode: payload length " + std::to_string(len) + " exceeds 81");
        p.payload = r.bytes(len);
        out = std::move(p);
        break;
    }
    case PacketType::ErBeacon: {
        if (flags.o)
            throw CodecError(CodecErrc::MalformedFlags, 1, "decode: beacon with O flag set");
        ErBeaconPacket p;
        p.flags = flags;
        p.er_addr = r.addr(flags.d);
        p.er_loc = r.loc();
        out = p;
        break;
    }
    case PacketType::Ack: {
        if (flags.d || flags.o)
            throw CodecError(CodecErrc::MalformedFlags, 1, "decode: ack with address flags set");
        AckPacket p;
        p.flags = flags;
        p.seq = r.u16();
        out = p;
        break;
    }
    }
    r.finish();
    return out;
}

std::string describe(const Packet& packet)
{
    std::ostringstream os;
    const auto row = [&os](const char* name, const std::string& value) { os << "  " << std::left << std::setw(16) << name << value << '\n'; };
    const auto ext_rows = [&row](const std::optional<RouteExt>& e) {
        if (!e)
            return;
        row("rreq_id", std::to_string(e->rreq_id));
        row("weak_links", std::to_string(e->weak_links));
        row("hops", std::to_string(e->hops));
    };
    os << to_string(packet_type(packet)) << " (" << frame_size(packet) << " bytes)\n";
    std::visit(
        [&](const auto& p) {
            row("flags", std::string("D=") + (p.flags.d ? "1" : "0") + " O=" + (p.flags.o ? "1" : "0"));
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RreqPacket>) {
                row("dest_addr", to_string(p.dest_addr));
                row("dest_loc", loc_str(p.dest_loc));
                row("orig_addr", to_string(p.orig_addr));
                row("orig_loc", loc_str(p.orig_loc));
                ext_rows(p.ext);
            } else if constexpr (std::is_same_v<T, RrepPacket>) {
                row("responder_addr", to_string(p.responder_addr));
                row("responder_loc", loc_str(p.responder_loc));
                row("link_lqi", std::to_string(p.link_lqi.raw));
                row("orig_addr", to_string(p.orig_addr));
                ext_rows(p.ext);
            } else if constexpr (std::is_same_v<T, RerrPacket>) {
                row("unreachable", to_string(p.unreachable_addr));
                row("orig_addr", to_string(p.orig_addr));
            } else if constexpr (std::is_same_v<T, DataPacket>) {
                row("hops_left", std::to_string(p.mesh.hops_left));
                row("final_dest", to_string(p.mesh.final_dest));
                row("orig", to_string(p.mesh.orig));
                row("seq", std::to_string(p.seq));
                row("payload_len", std::to_string(p.payload.size()));
                row("payload", to_hex(p.payload));
            } else if constexpr (std::is_same_v<T, ErBeaconPacket>) {
                row("er_addr", to_string(p.er_addr));
                row("er_loc", loc_str(p.er_loc));
            } else {
                row("seq", std::to_string(p.seq));
            }
        },
        packet);
    return os.str();
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(kDigits[b >> 4]);
        s.push_back(kDigits[b & 0xF]);
    }
    return s;
}

std::vector<std::uint8_t> from_hex(const std::string& hex)
{
    std::string digits;
    for (char c : hex)
        if (!std::isspace(static_cast<unsigned char>(c)))
            digits.push_back(c);
    if (digits.size() % 2 != 0)
        throw std::invalid_argument("hex string has odd length");
    const auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
    };
    std::vector<std::uint8_t> out;
    out.reserve(digits.size() / 2);
    for (std::size_t i = 0; i < digits.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(nibble(digits[i]) << 4 | nibble(digits[i + 1])));
    return out;
}

} // namespace lowpan
