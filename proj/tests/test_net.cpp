#include <doctest.h>

#include <set>

#include "corridor/net.hpp"

using namespace corridor;

namespace {

// Independent count of the corridor: n+1 horizontal links per direction, and an
// incoming plus an outgoing side-road link per junction for each of NS and SN.
struct Counts {
    std::size_t links, entries, routes;
};

Counts expected_counts(std::size_t n) {
    std::size_t horizontal = 0;
    for (int dir = 0; dir < 2; ++dir) horizontal += n + 1;
    std::size_t vertical = 0;
    for (std::size_t j = 0; j < n; ++j) vertical += 2 /*NS in, out*/ + 2 /*SN in, out*/;
    const std::size_t entries = 2 + 2 * n;
    return {horizontal + vertical, entries, entries};
}

std::size_t count_kind(const CorridorNetwork &net, LinkKind k) {
    std::size_t c = 0;
    for (const auto &l : net.links()) c += l.kind == k;
    return c;
}

} // namespace

TEST_CASE("link, entry and route counts for the reference corridors") {
    struct Case {
        std::size_t n;
        double l;
        std::size_t links, entries, routes;
    };
    for (const Case &c : {Case{3, 700, 20, 8, 8}, Case{1, 700, 8, 4, 4}, Case{13, 2000, 80, 28, 28}}) {
        const CorridorNetwork net(CorridorSpec{c.n, c.l});
        CHECK(net.links().size() == c.links);
        CHECK(net.entry_links().size() == c.entries);
        CHECK(net.routes().size() == c.routes);
        CHECK(count_kind(net, LinkKind::Entry) == c.entries);
    }
}

TEST_CASE("counts follow the closed forms for n = 1..20") {
    for (std::size_t n = 1; n <= 20; ++n) {
        const CorridorNetwork net(CorridorSpec{n, 250.0});
        const Counts e = expected_counts(n);
        CHECK(net.links().size() == e.links);
        CHECK(net.entry_links().size() == e.entries);
        CHECK(net.routes().size() == e.routes);
        CHECK(count_kind(net, LinkKind::Exit) == e.routes);
        CHECK(count_kind(net, LinkKind::Internal) == 2 * (n - 1));
    }
}

TEST_CASE("every link has the spec length and every route is straight and connected") {
    for (std::size_t n : {1u, 3u, 13u}) {
        const CorridorNetwork net(CorridorSpec{n, 420.0});
        std::set<LinkId> seen;
        for (const auto &l : net.links()) CHECK(l.length_m == 420.0);
        for (const auto &r : net.routes()) {
            REQUIRE(!r.links.empty());
            CHECK(net.link(r.links.front()).kind == LinkKind::Entry);
            CHECK(net.link(r.links.back()).kind == LinkKind::Exit);
            CHECK(!net.link(r.links.back()).next.has_value());
            std::size_t junctions = 0;
            for (std::size_t i = 0; i < r.links.size(); ++i) {
                const Link &l = net.link(r.links[i]);
                CHECK(l.direction == r.direction);
                CHECK(l.route == r.id);
                CHECK(seen.insert(l.id).second);
                junctions += l.downstream_junction.has_value();
                if (i + 1 < r.links.size()) {
                    CHECK(l.next == r.links[i + 1]);
                    CHECK(l.to_node == net.link(r.links[i + 1]).from_node);
                }
            }
            CHECK(junctions == (is_horizontal(r.direction) ? n : 1));
        }
        CHECK(seen.size() == net.links().size());
    }
}

TEST_CASE("routes_through gives four approaches ordered W, E, N, S") {
    const CorridorNetwork net(CorridorSpec{3, 700.0});
    for (JunctionId j = 0; j < 3; ++j) {
        const auto ra = net.routes_through(j);
        REQUIRE(ra.size() == 4);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(ra[k].approach == kApproaches[k]);
            CHECK(ra[k].link == net.approach_link(j, kApproaches[k]));
            CHECK(net.link(ra[k].link).downstream_junction == j);
            CHECK(net.link(ra[k].link).route == ra[k].route);
        }
    }
    CHECK(net.link(net.approach_link(0, Approach::W)).kind == LinkKind::Entry);
    CHECK(net.link(net.approach_link(1, Approach::W)).kind == LinkKind::Internal);
    CHECK(net.link(net.approach_link(2, Approach::E)).kind == LinkKind::Entry);
    CHECK(net.link(net.approach_link(1, Approach::N)).kind == LinkKind::Entry);
    CHECK(net.link(net.approach_link(0, Approach::W)).direction == Direction::WE);
    CHECK(net.link(net.approach_link(0, Approach::N)).direction == Direction::NS);
    CHECK_THROWS(net.routes_through(3));
    CHECK_THROWS(net.approach_link(7, Approach::W));
}

TEST_CASE("west/east mirror maps the network onto itself") {
    for (std::size_t n : {1u, 2u, 3u, 13u}) {
        const CorridorNetwork net(CorridorSpec{n, 300.0});
        for (const auto &l : net.links()) {
            const Link &m = net.link(net.mirror_link(l.id));
            CHECK(net.mirror_link(m.id) == l.id);
            CHECK(m.direction == mirror(l.direction));
            CHECK(m.kind == l.kind);
            if (l.downstream_junction) {
                REQUIRE(m.downstream_junction.has_value());
                CHECK(*m.downstream_junction == net.mirror_junction(*l.downstream_junction));
            }
        }
        for (JunctionId j = 0; j < n; ++j) {
            const JunctionId mj = net.mirror_junction(j);
            CHECK(net.mirror_link(net.approach_link(j, Approach::W)) == net.approach_link(mj, Approach::E));
            CHECK(net.mirror_link(net.approach_link(j, Approach::N)) == net.approach_link(mj, Approach::N));
        }
    }
    const DemandConfig d{100, 200, 300, 400};
    CHECK(d.mirrored().lambda_we == 200);
    CHECK(d.mirrored().lambda_ew == 100);
    CHECK(d.mirrored().mirrored().lambda_we == 100);
    CHECK(d.rate(Direction::SN) == 400);
}

TEST_CASE("invalid specifications are rejected") {
    CHECK_THROWS_AS(CorridorNetwork(CorridorSpec{0, 300.0}), ConfigError);
    CHECK_THROWS_AS(CorridorNetwork(CorridorSpec{3, 0.0}), ConfigError);
    CHECK_THROWS_AS(CorridorNetwork(CorridorSpec{3, -5.0}), ConfigError);
    CorridorSpec two_lanes{3, 300.0};
    two_lanes.lanes_per_direction = 2;
    CHECK_THROWS_AS(two_lanes.validate(), ConfigError);
    CHECK_THROWS_AS((DemandConfig{-1, 0, 0, 0}.validate()), ConfigError);
}
