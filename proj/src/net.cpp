#include "corridor/net.hpp"

#include <cmath>

namespace corridor {

std::string to_string(Direction d) {
    switch (d) {
    case Direction::WE: return "WE";
    case Direction::EW: return "EW";
    case Direction::NS: return "NS";
    case Direction::SN: return "SN";
    }
    return "?";
}

std::string to_string(LinkKind k) {
    switch (k) {
    case LinkKind::Entry: return "entry";
    case LinkKind::Internal: return "internal";
    case LinkKind::Exit: return "exit";
    }
    return "?";
}

Direction mirror(Direction d) {
    switch (d) {
    case Direction::WE: return Direction::EW;
    case Direction::EW: return Direction::WE;
    default: return d;
    }
}

void CorridorSpec::validate() const {
    if (n == 0) throw ConfigError("corridor needs at least one junction");
    if (!(link_length_m > 0.0) || !std::isfinite(link_length_m))
        throw ConfigError("link length must be positive");
    if (!(speed_limit_mps > 0.0)) throw ConfigError("speed limit must be positive");
    if (lanes_per_direction != 1) throw ConfigError("only one lane per direction is supported");
}

double DemandConfig::rate(Direction d) const {
    switch (d) {
    case Direction::WE: return lambda_we;
    case Direction::EW: return lambda_ew;
    case Direction::NS: return lambda_ns;
    case Direction::SN: return lambda_sn;
    }
    return 0.0;
}

void DemandConfig::validate() const {
    for (double r : {lambda_we, lambda_ew, lambda_ns, lambda_sn})
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("demand rates must be finite and non-negative");
}

CorridorNetwork::CorridorNetwork(const CorridorSpec &spec) : spec_(spec) {
    spec_.validate();
    const std::size_t n = spec_.n;

    std::vector<std::size_t> junction_node(n), north(n), south(n);
    for (std::size_t i = 0; i < n; ++i) junction_node[i] = add_node("J" + std::to_string(i + 1));
    const std::size_t west_end = add_node("W");
    const std::size_t east_end = add_node("E");
    for (std::size_t i = 0; i < n; ++i) {
        north[i] = add_node("N" + std::to_string(i + 1));
        south[i] = add_node("S" + std::to_string(i + 1));
    }

    approaches_.assign(n, {});

    // Main road, west to east: link k feeds junction k (0-based); link n exits.
    std::vector<LinkId> we, ew;
    for (std::size_t k = 0; k <= n; ++k) {
        const std::size_t from = k == 0 ? west_end : junction_node[k - 1];
        const std::size_t to = k == n ? east_end : junction_node[k];
        const LinkKind kind = k == 0 ? LinkKind::Entry : (k == n ? LinkKind::Exit : LinkKind::Internal);
        we.push_back(add_link(from, to, Direction::WE, kind, k == n ? std::nullopt : std::optional<JunctionId>(k)));
        if (k < n) approaches_[k][static_cast<std::size_t>(Approach::W)] = we.back();
    }
    // East to west: link k feeds junction n-1-k.
    for (std::size_t k = 0; k <= n; ++k) {
        const std::size_t from = k == 0 ? east_end : junction_node[n - k];
        const std::size_t to = k == n ? west_end : junction_node[n - 1 - k];
        const LinkKind kind = k == 0 ? LinkKind::Entry : (k == n ? LinkKind::Exit : LinkKind::Internal);
        const auto downstream = k == n ? std::nullopt : std::optional<JunctionId>(n - 1 - k);
        ew.push_back(add_link(from, to, Direction::EW, kind, downstream));
        if (k < n) approaches_[n - 1 - k][static_cast<std::size_t>(Approach::E)] = ew.back();
    }

    std::vector<std::array<LinkId, 4>> side(n);
    for (std::size_t i = 0; i < n; ++i) {
        side[i][0] = add_link(north[i], junction_node[i], Direction::NS, LinkKind::Entry, i);
        side[i][1] = add_link(junction_node[i], south[i], Direction::NS, LinkKind::Exit, std::nullopt);
        side[i][2] = add_link(south[i], junction_node[i], Direction::SN, LinkKind::Entry, i);
        side[i][3] = add_link(junction_node[i], north[i], Direction::SN, LinkKind::Exit, std::nullopt);
        approaches_[i][static_cast<std::size_t>(Approach::N)] = side[i][0];
        approaches_[i][static_cast<std::size_t>(Approach::S)] = side[i][2];
    }

    add_route(Direction::WE, we, std::nullopt);
    we_route_ = routes_.back().id;
    add_route(Direction::EW, ew, std::nullopt);
    ew_route_ = routes_.back().id;
    for (std::size_t i = 0; i < n; ++i) {
        add_route(Direction::NS, {side[i][0], side[i][1]}, i);
        add_route(Direction::SN, {side[i][2], side[i][3]}, i);
    }

    for (const Route &r : routes_) {
        entry_links_.push_back(r.links.front());
        for (std::size_t k = 0; k < r.links.size(); ++k) {
            Link &l = links_[r.links[k]];
            l.route = r.id;
            if (k + 1 < r.links.size()) l.next = r.links[k + 1];
        }
    }

    mirror_.assign(links_.size(), 0);
    for (std::size_t k = 0; k <= n; ++k) {
        mirror_[we[k]] = ew[k];
        mirror_[ew[k]] = we[k];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < 4; ++s) mirror_[side[i][s]] = side[n - 1 - i][s];
}

std::size_t CorridorNetwork::add_node(std::string name) {
    node_names_.push_back(std::move(name));
    return node_names_.size() - 1;
}

LinkId CorridorNetwork::add_link(std::size_t from, std::size_t to, Direction d, LinkKind k,
                                 std::optional<JunctionId> downstream) {
    Link l;
    l.id = links_.size();
    l.from_node = from;
    l.to_node = to;
    l.length_m = spec_.link_length_m;
    l.direction = d;
    l.kind = k;
    l.downstream_junction = downstream;
    links_.push_back(l);
    return l.id;
}

void CorridorNetwork::add_route(Direction d, std::vector<LinkId> links, std::optional<JunctionId> junction) {
    Route r;
    r.id = routes_.size();
    r.direction = d;
    r.links = std::move(links);
    r.junction = junction;
    routes_.push_back(std::move(r));
}

LinkId CorridorNetwork::approach_link(JunctionId junction, Approach a) const {
    if (junction >= spec_.n) throw std::out_of_range("unknown junction " + std::to_string(junction));
    return approaches_[junction][static_cast<std::size_t>(a)];
}

std::vector<RouteApproach> CorridorNetwork::routes_through(JunctionId junction) const {
    std::vector<RouteApproach> out;
    for (Approach a : kApproaches) {
        const LinkId l = approach_link(junction, a);
        out.push_back({links_[l].route, l, a});
    }
    return out;
}

CorridorNetwork build_corridor(const CorridorSpec &spec) { return CorridorNetwork(spec); }

} // namespace corridor
