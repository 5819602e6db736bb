#!/usr/bin/env python3
"""Writes the simulator topologies used by the tests and the CLI examples.

Run from anywhere; files land next to this script. Each topology is layered:
every path from the entry node to the destination has the same length.
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
SOURCE = "192.0.2.1"


class Topo:
    def __init__(self):
        self.nodes = {}
        self.edges = []
        self.next_host = {}

    def addr(self, hop):
        n = self.next_host.get(hop, 0) + 1
        self.next_host[hop] = n
        return f"10.{hop}.{n // 250}.{n % 250 + 1}"

    def node(self, hop, **attrs):
        a = self.addr(hop)
        self.nodes[a] = {"addr": a, **attrs}
        return a

    def layer(self, hop, count, **attrs):
        return [self.node(hop, **attrs) for _ in range(count)]

    def link(self, a, b):
        self.edges.append([a, b])

    def dump(self, name, destination):
        doc = {
            "source": SOURCE,
            "destination": destination,
            "nodes": list(self.nodes.values()),
            "edges": self.edges,
        }
        with open(os.path.join(HERE, name), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")


def fan(t, a, bs):
    for b in bs:
        t.link(a, b)


def fan_in(t, as_, b):
    for a in as_:
        t.link(a, b)


def simple_diamond(name, width):
    t = Topo()
    d = t.node(1)
    mid = t.layer(2, width)
    c = t.node(3)
    fan(t, d, mid)
    fan_in(t, mid, c)
    t.dump(name, c)


def chain(name, length):
    t = Topo()
    prev = t.node(1)
    for h in range(2, length + 1):
        cur = t.node(h)
        t.link(prev, cur)
        prev = cur
    t.dump(name, prev)


def four_two(name, meshed):
    t = Topo()
    d = t.node(1)
    h2 = t.layer(2, 4)
    h3 = t.layer(3, 2)
    c = t.node(4)
    fan(t, d, h2)
    for i, a in enumerate(h2):
        if meshed:
            fan(t, a, h3)
        else:
            t.link(a, h3[i // 2])
    fan_in(t, h3, c)
    t.dump(name, c)


def symmetric():
    t = Topo()
    d = t.node(1)
    h2 = t.layer(2, 5)
    h3 = t.layer(3, 10)
    h4 = t.layer(4, 5)
    c = t.node(5)
    fan(t, d, h2)
    for i, a in enumerate(h2):
        fan(t, a, h3[2 * i:2 * i + 2])
    for j, b in enumerate(h3):
        t.link(b, h4[j // 2])
    fan_in(t, h4, c)
    t.dump("symmetric.json", c)


def asymmetric():
    t = Topo()
    d = t.node(1)
    p = t.layer(2, 2)
    q = t.layer(3, 2)
    x, y = t.layer(4, 2)
    s = t.layer(5, 18)
    z = t.node(5)
    tt = t.layer(6, 10)
    u = t.layer(7, 5)
    v = t.layer(8, 2)
    w = t.layer(9, 2)
    r = t.layer(10, 2)
    c = t.node(11)
    fan(t, d, p)
    t.link(p[0], q[0])
    t.link(p[1], q[1])
    t.link(q[0], x)
    t.link(q[1], y)
    fan(t, x, s)
    t.link(y, z)
    for i, a in enumerate(s):
        t.link(a, tt[i // 2])
    t.link(z, tt[9])
    for i, a in enumerate(tt):
        t.link(a, u[i // 2])
    for i, a in enumerate(u):
        t.link(a, v[0] if i < 3 else v[1])
    t.link(v[0], w[0])
    t.link(v[1], w[1])
    t.link(w[0], r[0])
    t.link(w[1], r[1])
    fan_in(t, r, c)
    t.dump("asymmetric.json", c)


def meshed():
    t = Topo()
    d = t.node(1)
    a = t.layer(2, 4)
    b = t.layer(3, 48)
    cc = t.layer(4, 8)
    dd = t.layer(5, 4)
    e = t.layer(6, 2)
    dest = t.node(7)
    fan(t, d, a)
    for i, ai in enumerate(a):
        fan(t, ai, b[:24] if i < 2 else b[24:])
    for j, bj in enumerate(b):
        t.link(bj, cc[j // 6])
    for k, ck in enumerate(cc):
        t.link(ck, dd[k // 2])
    for k, dk in enumerate(dd):
        t.link(dk, e[k // 2])
    fan_in(t, e, dest)
    t.dump("meshed.json", dest)


def meshing_pair():
    t = Topo()
    d = t.node(1)
    a = t.layer(2, 2)
    b = t.layer(3, 2)
    e = t.node(4)
    fan(t, d, a)
    for ai in a:
        fan(t, ai, b)
    fan_in(t, b, e)
    t.dump("meshing_pair.json", e)


def alias_suite(name, sparse=()):
    """One 15-wide hop whose interfaces belong to routers with known IP-ID,
    TTL and MPLS behaviour. Routers named in `sparse` answer only one probe
    in five, so the trace alone sees few of their IP-IDs."""
    t = Topo()
    d = t.node(1)
    routers = [
        ("R1", 3, {"ipid_mode": "shared-monotonic"}),
        ("R2", 2, {"ipid_mode": "shared-monotonic"}),
        ("R3", 2, {"ipid_mode": "per-interface-monotonic"}),
        ("R4", 2, {"ipid_mode": "constant-zero"}),
        ("R5", 1, {"ipid_mode": "shared-monotonic", "ttl_class": 64, "echo_ttl_class": 64}),
        ("R6", 1, {"ipid_mode": "shared-monotonic", "ttl_class": 64, "echo_ttl_class": 128}),
        ("R7", 2, {"ipid_mode": "shared-monotonic", "mpls": 100}),
        ("R8", 1, {"ipid_mode": "shared-monotonic", "mpls": 200}),
        ("R9", 1, {"ipid_mode": "random"}),
    ]
    mid = []
    for router, count, attrs in routers:
        for _ in range(count):
            extra = {"response_prob": 0.2} if router in sparse else {}
            mid.append(t.node(2, router=router, **extra, **attrs))
    c = t.node(3)
    fan(t, d, mid)
    fan_in(t, mid, c)
    t.dump(name, c)


def collapse_fixtures():
    # Both middle interfaces belong to one router: the diamond disappears.
    t = Topo()
    d = t.node(1)
    mid = t.layer(2, 2, router="R1")
    c = t.node(3)
    fan(t, d, mid)
    fan_in(t, mid, c)
    t.dump("collapse_one_path.json", c)

    # No aliases at all.
    t = Topo()
    d = t.node(1)
    mid = [t.node(2, router="R1"), t.node(2, router="R2")]
    c = t.node(3)
    fan(t, d, mid)
    fan_in(t, mid, c)
    t.dump("collapse_no_change.json", c)

    # Four interfaces on two routers: one narrower diamond.
    t = Topo()
    d = t.node(1)
    mid = t.layer(2, 2, router="R1") + t.layer(2, 2, router="R2")
    c = t.node(3)
    fan(t, d, mid)
    fan_in(t, mid, c)
    t.dump("collapse_single_smaller.json", c)

    # A 4-2-4 diamond whose middle hop is one router: two diamonds in series.
    t = Topo()
    d = t.node(1)
    a = t.layer(2, 2, router="R1") + t.layer(2, 2, router="R2")
    m = t.layer(3, 2, router="M")
    b = t.layer(4, 2, router="R3") + t.layer(4, 2, router="R4")
    c = t.node(5)
    fan(t, d, a)
    fan_in(t, a[:2], m[0])
    fan_in(t, a[2:], m[1])
    fan(t, m[0], b[:2])
    fan(t, m[1], b[2:])
    fan_in(t, b, c)
    t.dump("collapse_multiple_smaller.json", c)


def main():
    simple_diamond("simplest_diamond.json", 2)
    simple_diamond("three_successors.json", 3)
    simple_diamond("max_length_2.json", 28)
    chain("chain.json", 5)
    chain("single_edge.json", 2)
    four_two("four_two_unmeshed.json", meshed=False)
    four_two("four_two_meshed.json", meshed=True)
    symmetric()
    asymmetric()
    meshed()
    meshing_pair()
    alias_suite("alias_suite.json")
    alias_suite("alias_sparse.json", sparse=("R1", "R2", "R7"))
    collapse_fixtures()


if __name__ == "__main__":
    main()
