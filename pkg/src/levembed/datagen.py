"""Synthetic cluster datasets, oracle-labelled sequence pairs, and TSV I/O.

A dataset is a set of clusters: one reference sequence per cluster plus
reads derived from it through an edit channel (independent per-position
substitution / deletion / insertion). Training samples are pairs of reads
labelled with their exact edit distance; homologous pairs come from one
cluster, non-homologous pairs from two different clusters. Train/test
separation is a partition on clusters, never on individual pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .seqcore import CODE_DTYPE, DNA, Alphabet, Sequence, levenshtein

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EditChannelConfig:
    """Per-position edit probabilities for the synthetic read channel."""

    p_sub: float = 0.01
    p_del: float = 0.01
    p_ins: float = 0.01
    seed: int = 0

    def __post_init__(self):
        for name in ("p_sub", "p_del", "p_ins"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {p}")
        if self.p_sub + self.p_del + self.p_ins > 1.0 + 1e-12:
            raise DataError("p_sub + p_del + p_ins must not exceed 1")


@dataclass
class Cluster:
    id: int
    reference: Sequence
    reads: list[Sequence] = field(default_factory=list)


@dataclass(frozen=True)
class PairSample:
    s: Sequence
    t: Sequence
    d: int
    homologous: bool


@dataclass
class DatasetSplit:
    train: list[PairSample]
    test: list[PairSample]
    train_cluster_ids: set[int]
    test_cluster_ids: set[int]


def random_sequence(length: int, alphabet: Alphabet, rng: np.random.Generator) -> Sequence:
    """Uniform i.i.d. sequence over the non-padding symbols."""
    codes = rng.integers(0, alphabet.size - 1, size=length, dtype=CODE_DTYPE)
    return Sequence(codes, length)


def mutate(
    ref: Sequence,
    cfg: EditChannelConfig,
    rng: np.random.Generator,
    alphabet: Alphabet = DNA,
) -> Sequence:
    """Pass a sequence through the edit channel.

    Per position exactly one of: substitution (uniform over the other
    symbols), deletion, or insertion of a uniform symbol before the
    position. One extra insertion slot follows the last position.
    """
    n_base = alphabet.size - 1
    codes = ref.true_codes()
    n = codes.size
    u = rng.random(n + 1)
    # draw full arrays up front so the stream layout is independent of events
    sub_offsets = rng.integers(0, max(n_base - 1, 1), size=n) if n else np.empty(0, np.int64)
    ins_symbols = rng.integers(0, n_base, size=n + 1)
    if cfg.p_sub > 0 and n_base < 2:
        raise DataError("substitution needs at least two non-padding symbols")
    t_sub = cfg.p_sub
    t_del = t_sub + cfg.p_del
    t_ins = t_del + cfg.p_ins
    out: list[int] = []
    for i in range(n):
        r = u[i]
        c = int(codes[i])
        if r < t_sub:
            s = int(sub_offsets[i])
            out.append(s + (1 if s >= c else 0))
        elif r < t_del:
            continue
        elif r < t_ins:
            out.append(int(ins_symbols[i]))
            out.append(c)
        else:
            out.append(c)
    if u[n] < cfg.p_ins:
        out.append(int(ins_symbols[n]))
    arr = np.asarray(out, dtype=CODE_DTYPE)
    return Sequence(arr, arr.size)


def build_clusters(
    n_clusters: int,
    ref_len: int,
    reads_per_cluster: int,
    cfg: EditChannelConfig,
    rng: np.random.Generator,
    alphabet: Alphabet = DNA,
) -> list[Cluster]:
    if n_clusters <= 0 or ref_len <= 0 or reads_per_cluster < 0:
        raise DataError("cluster counts and reference length must be positive")
    clusters = []
    for cid in range(n_clusters):
        ref = random_sequence(ref_len, alphabet, rng)
        reads = [mutate(ref, cfg, rng, alphabet) for _ in range(reads_per_cluster)]
        clusters.append(Cluster(cid, ref, reads))
    return clusters


def make_pairs(
    clusters: list[Cluster],
    n_homologous: int,
    n_nonhomologous: int,
    rng: np.random.Generator,
) -> list[PairSample]:
    """Sample labelled pairs; distances come from the exact oracle."""
    pairs: list[PairSample] = []
    if n_homologous > 0:
        eligible = [c for c in clusters if len(c.reads) >= 2]
        skipped = len(clusters) - len(eligible)
        if skipped:
            log.warning("%d clusters have fewer than 2 reads; skipped for homologous pairs", skipped)
        if not eligible:
            raise DataError("no cluster has at least 2 reads; cannot sample homologous pairs")
        for _ in range(n_homologous):
            c = eligible[rng.integers(len(eligible))]
            i, j = rng.choice(len(c.reads), size=2, replace=False)
            s, t = c.reads[i], c.reads[j]
            pairs.append(PairSample(s, t, levenshtein(s, t), True))
    if n_nonhomologous > 0:
        populated = [c for c in clusters if c.reads]
        if len(populated) < 2:
            raise DataError("need at least 2 clusters with reads for non-homologous pairs")
        for _ in range(n_nonhomologous):
            ci, cj = rng.choice(len(populated), size=2, replace=False)
            s = populated[ci].reads[rng.integers(len(populated[ci].reads))]
            t = populated[cj].reads[rng.integers(len(populated[cj].reads))]
            pairs.append(PairSample(s, t, levenshtein(s, t), False))
    return pairs


def split_clusters(
    clusters: list[Cluster], test_fraction: float, rng: np.random.Generator
) -> tuple[list[Cluster], list[Cluster]]:
    """Disjoint cluster partition; the pair sets built per side can never leak."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    order = rng.permutation(len(clusters))
    n_test = int(round(len(clusters) * test_fraction))
    if n_test == 0 or n_test == len(clusters):
        raise DataError("test_fraction leaves one side empty")
    test_idx = set(order[:n_test].tolist())
    train = [c for i, c in enumerate(clusters) if i not in test_idx]
    test = [c for i, c in enumerate(clusters) if i in test_idx]
    return train, test


def split_by_cluster(
    clusters: list[Cluster],
    test_fraction: float,
    rng: np.random.Generator,
    *,
    train_pairs: tuple[int, int],
    test_pairs: tuple[int, int],
) -> DatasetSplit:
    """Partition clusters, then sample (homologous, non-homologous) pairs per side."""
    train_clusters, test_clusters = split_clusters(clusters, test_fraction, rng)
    train = make_pairs(train_clusters, train_pairs[0], train_pairs[1], rng)
    test = make_pairs(test_clusters, test_pairs[0], test_pairs[1], rng)
    return DatasetSplit(
        train=train,
        test=test,
        train_cluster_ids={c.id for c in train_clusters},
        test_cluster_ids={c.id for c in test_clusters},
    )


def estimate_mean_distance(
    clusters: list[Cluster], n_samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte-Carlo mean edit distance between sequences of different clusters.

    Returns (mean, standard error). This is the dataset statistic used to
    initialize the embedding scale.
    """
    if len(clusters) < 2:
        raise DataError("mean-distance estimate needs at least 2 clusters")
    if n_samples < 100:
        raise DataError(f"mean-distance estimate needs >= 100 samples, got {n_samples}")
    pools = [c.reads if c.reads else [c.reference] for c in clusters]
    dists = np.empty(n_samples, dtype=np.float64)
    for i in range(n_samples):
        ci, cj = rng.choice(len(clusters), size=2, replace=False)
        s = pools[ci][rng.integers(len(pools[ci]))]
        t = pools[cj][rng.integers(len(pools[cj]))]
        dists[i] = levenshtein(s, t)
    mean = float(dists.mean())
    se = float(dists.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, se


# --- TSV round trips ---------------------------------------------------------
# Pair file: seq_s<TAB>seq_t<TAB>d<TAB>homologous(0|1), one sample per line.
# Cluster file: cluster_id<TAB>sequence; the first line of a cluster is its
# reference, the following lines are its reads.


def save_pairs(path, pairs: list[PairSample], alphabet: Alphabet = DNA) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for p in pairs:
            f.write(
                f"{alphabet.decode(p.s)}\t{alphabet.decode(p.t)}\t{p.d}\t{1 if p.homologous else 0}\n"
            )


def load_pairs(
    path,
    alphabet: Alphabet = DNA,
    verify: bool = False,
    verify_fraction: float = 0.01,
    rng: np.random.Generator | None = None,
) -> list[PairSample]:
    pairs: list[PairSample] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
            try:
                s = alphabet.encode(fields[0])
                t = alphabet.encode(fields[1])
                d = int(fields[2])
                flag = fields[3]
            except (DataError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if d < 0:
                raise DataError(f"{path}:{lineno}: negative distance {d}")
            if flag not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: homologous flag must be 0 or 1, got {flag!r}")
            pairs.append(PairSample(s, t, d, flag == "1"))
    if verify and pairs:
        rng = rng or np.random.default_rng(0)
        n_check = max(1, int(round(verify_fraction * len(pairs))))
        for idx in rng.choice(len(pairs), size=min(n_check, len(pairs)), replace=False):
            p = pairs[idx]
            actual = levenshtein(p.s, p.t)
            if actual != p.d:
                raise DataError(
                    f"{path}:{int(idx) + 1}: stored distance {p.d} but oracle gives {actual}"
                )
    return pairs


def save_clusters(path, clusters: list[Cluster], alphabet: Alphabet = DNA) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for c in clusters:
            f.write(f"{c.id}\t{alphabet.decode(c.reference)}\n")
            for r in c.reads:
                f.write(f"{c.id}\t{alphabet.decode(r)}\n")


def load_clusters(path, alphabet: Alphabet = DNA) -> list[Cluster]:
    clusters: dict[int, Cluster] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(fields)}")
            try:
                cid = int(fields[0])
                seq = alphabet.encode(fields[1])
            except (DataError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if cid not in clusters:
                clusters[cid] = Cluster(cid, seq, [])
            else:
                clusters[cid].reads.append(seq)
    return list(clusters.values())
