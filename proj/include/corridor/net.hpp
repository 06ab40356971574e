#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace corridor {

using LinkId = std::size_t;
using RouteId = std::size_t;
using JunctionId = std::size_t;

/// Travel direction of a link. WE runs west to east along the corridor,
/// NS runs north to south along a side road.
enum class Direction { WE, EW, NS, SN };

enum class LinkKind { Entry, Internal, Exit };

/// Incoming approach at a junction, named by the side the traffic comes from.
enum class Approach { W = 0, E = 1, N = 2, S = 3 };

inline constexpr std::array<Approach, 4> kApproaches{Approach::W, Approach::E, Approach::N, Approach::S};

std::string to_string(Direction d);
std::string to_string(LinkKind k);
Direction mirror(Direction d);

/// True for the corridor (horizontal) directions.
constexpr bool is_horizontal(Direction d) { return d == Direction::WE || d == Direction::EW; }

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct CorridorSpec {
    std::size_t n = 3;
    double link_length_m = 300.0;
    double speed_limit_mps = 13.89;
    std::size_t lanes_per_direction = 1;

    void validate() const;
};

struct Link {
    LinkId id = 0;
    std::size_t from_node = 0;
    std::size_t to_node = 0;
    double length_m = 0.0;
    Direction direction = Direction::WE;
    LinkKind kind = LinkKind::Entry;
    /// Junction at the downstream end; empty for exit links.
    std::optional<JunctionId> downstream_junction;
    /// Successor on the (unique, straight-through) route; empty for exit links.
    std::optional<LinkId> next;
    RouteId route = 0;
};

struct Route {
    RouteId id = 0;
    Direction direction = Direction::WE;
    std::vector<LinkId> links;
    /// Side-road routes belong to one junction; corridor routes have none.
    std::optional<JunctionId> junction;
};

struct RouteApproach {
    RouteId route;
    LinkId link;
    Approach approach;
};

struct DemandConfig {
    double lambda_we = 0.0;
    double lambda_ew = 0.0;
    double lambda_ns = 0.0;
    double lambda_sn = 0.0;

    /// veh/h for the entry links of the given direction.
    double rate(Direction d) const;
    DemandConfig mirrored() const { return {lambda_ew, lambda_we, lambda_ns, lambda_sn}; }
    void validate() const;
};

/// Immutable n-junction corridor: one WE and one EW route along the main road,
/// and one NS and one SN side-road route per junction. Every link has one lane.
class CorridorNetwork {
  public:
    explicit CorridorNetwork(const CorridorSpec &spec);

    const CorridorSpec &spec() const { return spec_; }
    std::size_t junction_count() const { return spec_.n; }
    std::size_t node_count() const { return node_names_.size(); }
    const std::string &node_name(std::size_t node) const { return node_names_.at(node); }

    const std::vector<Link> &links() const { return links_; }
    const Link &link(LinkId id) const { return links_.at(id); }
    const std::vector<Route> &routes() const { return routes_; }
    const Route &route(RouteId id) const { return routes_.at(id); }
    const std::vector<LinkId> &entry_links() const { return entry_links_; }

    /// Incoming link at `junction` from side `a`.
    LinkId approach_link(JunctionId junction, Approach a) const;
    /// The four (route, incoming link) pairs at a junction, ordered W, E, N, S.
    std::vector<RouteApproach> routes_through(JunctionId junction) const;

    /// Image of a link under the west/east reflection of the corridor.
    LinkId mirror_link(LinkId id) const { return mirror_.at(id); }
    JunctionId mirror_junction(JunctionId j) const { return spec_.n - 1 - j; }

    RouteId we_route() const { return we_route_; }
    RouteId ew_route() const { return ew_route_; }

  private:
    std::size_t add_node(std::string name);
    LinkId add_link(std::size_t from, std::size_t to, Direction d, LinkKind k, std::optional<JunctionId> downstream);
    void add_route(Direction d, std::vector<LinkId> links, std::optional<JunctionId> junction);

    CorridorSpec spec_;
    std::vector<std::string> node_names_;
    std::vector<Link> links_;
    std::vector<Route> routes_;
    std::vector<LinkId> entry_links_;
    std::vector<std::array<LinkId, 4>> approaches_;
    std::vector<LinkId> mirror_;
    RouteId we_route_ = 0;
    RouteId ew_route_ = 0;
};

CorridorNetwork build_corridor(const CorridorSpec &spec);

} // namespace corridor
