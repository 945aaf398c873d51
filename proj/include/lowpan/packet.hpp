#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lowpan/core_model.hpp"

namespace lowpan {

/// Wire value of the type octet.
enum class PacketType : std::uint8_t { Rreq = 1, Rrep = 2, Rerr = 3, Data = 4, ErBeacon = 5, Ack = 6 };

const char* to_string(PacketType type);

inline constexpr std::size_t kMaxPayload = 81;
inline constexpr std::size_t kMaxDataFrame = 102; // mesh + seq + len + payload

/// Flags octet: bit 7 = D (64-bit destination-side address),
/// bit 6 = O (64-bit originator-side address), bits 5..0 reserved.
struct AddressFlags {
    bool d = false;
    bool o = false;
    std::uint8_t reserved = 0;

    std::uint8_t to_octet() const { return static_cast<std::uint8_t>((d ? 0x80 : 0) | (o ? 0x40 : 0) | (reserved & 0x3F)); }
    static AddressFlags from_octet(std::uint8_t b) { return {(b & 0x80) != 0, (b & 0x40) != 0, static_cast<std::uint8_t>(b & 0x3F)}; }
    static AddressFlags for_addresses(const NodeAddress& dest_side, const NodeAddress& orig_side)
    {
        return {dest_side.is_extended(), orig_side.is_extended(), 0};
    }

    friend bool operator==(const AddressFlags&, const AddressFlags&) = default;
};

/// Coordinates rounded to whole meters.
struct WireLocation {
    std::uint16_t x_m = 0;
    std::uint16_t y_m = 0;

    /// Throws CodecError(InvalidField) for coordinates outside [0, 65535].
    static WireLocation from(Location loc);
    Location to_location() const { return {static_cast<double>(x_m), static_cast<double>(y_m)}; }

    friend bool operator==(const WireLocation&, const WireLocation&) = default;
};

/// Discovery bookkeeping appended to LOAD route requests and replies:
/// request id, accumulated weak-link count and hop count.
struct RouteExt {
    std::uint16_t rreq_id = 0;
    std::uint8_t weak_links = 0;
    std::uint8_t hops = 0;

    friend bool operator==(const RouteExt&, const RouteExt&) = default;
};

struct RreqPacket {
    AddressFlags flags;
    NodeAddress dest_addr;
    WireLocation dest_loc;
    NodeAddress orig_addr;
    WireLocation orig_loc;
    std::optional<RouteExt> ext;

    friend bool operator==(const RreqPacket&, const RreqPacket&) = default;
};

struct RrepPacket {
    AddressFlags flags;
    NodeAddress responder_addr;
    WireLocation responder_loc;
    LqiValue link_lqi;
    NodeAddress orig_addr;
    std::optional<RouteExt> ext;

    friend bool operator==(const RrepPacket&, const RrepPacket&) = default;
};

struct RerrPacket {
    AddressFlags flags;
    NodeAddress unreachable_addr;
    NodeAddress orig_addr;

    friend bool operator==(const RerrPacket&, const RerrPacket&) = default;
};

struct MeshHeader {
    std::uint8_t hops_left = 0;
    NodeAddress final_dest;
    NodeAddress orig;

    friend bool operator==(const MeshHeader&, const MeshHeader&) = default;
};

/// Application datagram. The length octet on the wire is payload.size().
struct DataPacket {
    AddressFlags flags;
    MeshHeader mesh;
    std::uint16_t seq = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const DataPacket&, const DataPacket&) = default;
};

struct ErBeaconPacket {
    AddressFlags flags;
    NodeAddress er_addr;
    WireLocation er_loc;

    friend bool operator==(const ErBeaconPacket&, const ErBeaconPacket&) = default;
};

struct AckPacket {
    AddressFlags flags;
    std::uint16_t seq = 0;

    friend bool operator==(const AckPacket&, const AckPacket&) = default;
};

using Packet = std::variant<RreqPacket, RrepPacket, RerrPacket, DataPacket, ErBeaconPacket, AckPacket>;

PacketType packet_type(const Packet& packet);

enum class CodecErrc { UnknownType, Truncated, MalformedFlags, TrailingGarbage, Oversize, InvalidField };

const char* to_string(CodecErrc code);

class CodecError : public std::runtime_error {
public:
    CodecError(CodecErrc code, std::size_t offset, const std::string& what);

    CodecErrc code() const { return code_; }
    /// Byte offset at which decoding failed (0 for encode errors).
    std::size_t offset() const { return offset_; }

private:
    CodecErrc code_;
    std::size_t offset_;
};

/// Big-endian encoding. Throws CodecError when the packet breaks an invariant.
std::vector<std::uint8_t> encode(const Packet& packet);

/// Strict decoding: the whole buffer must be exactly one packet.
Packet decode(std::span<const std::uint8_t> bytes);

/// Encoded length computed from the field widths alone.
std::size_t frame_size(const Packet& packet);

/// Multi-line field dump used by the inspect command.
std::string describe(const Packet& packet);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on odd length or non-hex characters.
std::vector<std::uint8_t> from_hex(const std::string& hex);

} // namespace lowpan
