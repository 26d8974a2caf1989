"""Deterministic random-stream derivation.

Every random quantity in the package comes from a counter-based Philox
generator keyed as

    Generator(Philox(SeedSequence((seed, domain, *index))))

so any (seed, domain, index...) tuple names one reproducible stream,
independent of every other tuple.  Replica banks, clock-table rows and
ensemble replicas each get their own domain constant below; the rule is the
whole reproducibility contract, so nothing else in the package may draw
randomness any other way.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "derive_rng",
    "replica_seed",
    "DOMAIN_SIMULATION",
    "DOMAIN_INITIAL",
    "DOMAIN_RECOVERY_CLOCKS",
    "DOMAIN_PAIR_CLOCKS",
    "DOMAIN_REPLICA",
    "DOMAIN_SAMPLING",
]

DOMAIN_SIMULATION = 1  # event generation in the jump-chain simulator
DOMAIN_INITIAL = 2  # initial-state banks (bank 1 is sample_initial)
DOMAIN_RECOVERY_CLOCKS = 3  # per-urn recovery clocks, one stream per bank
DOMAIN_PAIR_CLOCKS = 4  # pair clocks, one stream per (bank, target urn)
DOMAIN_REPLICA = 5  # per-replica master seeds inside an ensemble
DOMAIN_SAMPLING = 6  # auxiliary sampling in reports (pair selection etc.)


def _check_component(value: int) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError("stream key components must be integers")
    if value < 0:
        raise ValueError("stream key components must be nonnegative")
    return int(value)


_check_seed = _check_component


def derive_rng(seed: int, domain: int, *index: int) -> np.random.Generator:
    """The stream for (seed, domain, *index) under the package keying rule.

    SeedSequence zero-pads short keys, so (s, d, k) and (s, d, k, 0) name
    the same stream; every domain therefore uses a fixed key arity.
    """
    key = tuple(_check_component(v) for v in (seed, domain) + index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def replica_seed(master_seed: int, replica: int) -> int:
    """Integer seed for one ensemble replica, derived from the master seed."""
    key = (_check_seed(master_seed), DOMAIN_REPLICA, int(replica))
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])
