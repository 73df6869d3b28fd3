"""
Counter-based random streams.

Every stochastic quantity is drawn from a Philox generator keyed by the master
seed plus a spawn key (path index, stream tag, ...), so a path's draws do not
depend on which worker runs it or in what order.
"""
import numpy as np

# Stream tags keep independent consumers of one path apart
STREAM_WIENER = 1
STREAM_INITIAL = 2
STREAM_ENSEMBLE = 3
STREAM_AUDIT = 4


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *key: int) -> int:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
