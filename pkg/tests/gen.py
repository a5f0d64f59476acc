"""Random tables and packets, as plain documents.

Addresses come from a small pool so lookups hit often enough to exercise
every branch.
"""

import random

from hypothesis import strategies as st

ACL_WORDS = ["trust", "monitor", "allow", "block", "block_reset", "interactive_block",
             "interactive_block_reset", "deny"]


def _pool(rng):
    return [f"10.{rng.randrange(4)}.{rng.randrange(4)}.{rng.randrange(4)}" for _ in range(12)]


def random_config(rng: random.Random, pool=None, max_len=4):
    pool = pool or _pool(rng)

    def cidr():
        if rng.random() < 0.1:
            return "0.0.0.0/0"
        n = rng.choice([8, 16, 24, 32])
        addr = rng.choice(pool)
        return f"{addr}/{n}"

    acl = []
    for _ in range(rng.randrange(max_len + 2)):
        word = rng.choice(ACL_WORDS)
        rule = {"source": cidr(), "action": word}
        if word == "trust":
            rule["trust_mode"] = rng.choice(["trusted", "permitted"])
        acl.append(rule)
    return {
        "destinations": list(dict.fromkeys(rng.choice(pool) for _ in range(rng.randrange(max_len)))),
        "nat_table": [rng.choice(pool) for _ in range(rng.randrange(max_len))],
        "routes": [{"match": cidr(), "new_destination": rng.choice(pool)}
                   for _ in range(rng.randrange(max_len))],
        "prefilter": [{"source": cidr(), "action": rng.choice(["fastpath", "analyze", "analyze"])}
                      for _ in range(rng.randrange(max_len))],
        "acl": acl,
    }


def random_packet(rng: random.Random, pid, pool):
    rec = {
        "id": pid,
        "outer": {"src": rng.choice(pool), "dst": rng.choice(pool), "proto": rng.choice(["tcp", "gre"])},
        "payload": [rng.choice(["a b", "cd", " ", ""]) for _ in range(rng.randrange(3))],
        "encrypted": rng.random() < 0.15,
    }
    if rng.random() < 0.5:
        rec["inner"] = {"src": rng.choice(pool), "dst": rng.choice(pool), "proto": "tcp"}
    return rec


def random_cases(seed, configs, per_config):
    """Yield (config, [packet documents]) pairs."""
    rng = random.Random(seed)
    for c in range(configs):
        pool = _pool(rng)
        cfg = random_config(rng, pool)
        yield cfg, [random_packet(rng, f"c{c}p{i}", pool) for i in range(per_config)]


# hypothesis strategies -----------------------------------------------------

octet = st.integers(0, 3)
addresses = st.builds(lambda a, b, c: f"10.{a}.{b}.{c}", octet, octet, octet)
prefixes = st.builds(lambda a, n: f"{a}/{n}", addresses, st.sampled_from([0, 8, 16, 24, 30, 32]))


@st.composite
def acl_rules(draw):
    word = draw(st.sampled_from(ACL_WORDS))
    rule = {"source": draw(prefixes), "action": word}
    if word == "trust":
        rule["trust_mode"] = draw(st.sampled_from(["trusted", "permitted"]))
    return rule


configs = st.fixed_dictionaries({
    "destinations": st.lists(addresses, max_size=4, unique=True),
    "nat_table": st.lists(addresses, max_size=4),
    "routes": st.lists(st.fixed_dictionaries({"match": prefixes, "new_destination": addresses}),
                       max_size=4),
    "prefilter": st.lists(st.fixed_dictionaries(
        {"source": prefixes, "action": st.sampled_from(["fastpath", "analyze"])}), max_size=4),
    "acl": st.lists(acl_rules(), max_size=5),
})

headers = st.fixed_dictionaries({"src": addresses, "dst": addresses,
                                 "proto": st.sampled_from(["tcp", "udp", "gre", "ipip"])})


@st.composite
def packets(draw, pid="p"):
    rec = {"id": pid, "outer": draw(headers),
           "payload": draw(st.lists(st.text("ab \n", max_size=5), max_size=3)),
           "encrypted": draw(st.booleans())}
    if draw(st.booleans()):
        rec["inner"] = draw(headers)
    return rec
