"""Approximation-error metrics and statistical diagnostics.

Covers the two headline metrics (mean absolute error over all test pairs
and over homologous pairs only), the variance-versus-distance profile
with its theoretical prediction 2*d*M/n, a goodness-of-fit test of the
scaled predictions against the dilated chi-squared law, per-element
normality checks of the embedding outputs, and a scan for sequences that
systematically receive biased predictions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import DataError
from .seqcore import CODE_DTYPE, DNA, Alphabet, Sequence, levenshtein
from .siamese import EmbeddingModel, _pair_arrays, _pair_distances, predict_distances


# --- prediction plumbing -----------------------------------------------------


def pair_predictions(model: EmbeddingModel, pairs, alphabet: Alphabet = DNA) -> np.ndarray:
    """Eval-mode predicted distances for a list of pair samples."""
    s_codes, t_codes, _, _ = _pair_arrays(pairs, alphabet, model.spec.input_len)
    return _pair_distances(model, s_codes, t_codes)


# --- approximation errors ----------------------------------------------------


def ae_values(dhat: np.ndarray, d: np.ndarray) -> float:
    dhat = np.asarray(dhat, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if dhat.size == 0:
        raise DataError("approximation error over an empty sample set")
    return float(np.abs(dhat - d).mean())


def ae_global(model: EmbeddingModel, pairs, alphabet: Alphabet = DNA) -> float:
    if not pairs:
        raise DataError("ae_global needs a non-empty sample list")
    dhat = pair_predictions(model, pairs, alphabet)
    return ae_values(dhat, np.array([p.d for p in pairs]))


def ae_homologous(model: EmbeddingModel, pairs, alphabet: Alphabet = DNA) -> float:
    hom = [p for p in pairs if p.homologous]
    if not hom:
        raise DataError("ae_homologous needs at least one homologous sample")
    dhat = pair_predictions(model, hom, alphabet)
    return ae_values(dhat, np.array([p.d for p in hom]))


# --- variance profile ---------------------------------------------------------


@dataclass
class VarianceRow:
    d: int
    count: int
    empirical_var: float
    predicted_var: float

    @property
    def ratio(self) -> float:
        return self.empirical_var / self.predicted_var if self.predicted_var > 0 else float("nan")


def variance_profile_values(
    dhat: np.ndarray,
    d: np.ndarray,
    mean_independent_distance: float,
    embedding_dim: int,
    min_count: int = 30,
) -> tuple[list[VarianceRow], list[int]]:
    """Empirical Var(dhat) per distance bucket versus the prediction 2*d*M/n.

    Buckets with fewer than ``min_count`` samples are omitted and listed
    in the second return value.
    """
    dhat = np.asarray(dhat, dtype=np.float64)
    d = np.asarray(d)
    rows: list[VarianceRow] = []
    skipped: list[int] = []
    for value in sorted(set(int(v) for v in d)):
        sel = dhat[d == value]
        if sel.size < min_count:
            skipped.append(value)
            continue
        predicted = 2.0 * value * mean_independent_distance / embedding_dim
        rows.append(VarianceRow(value, int(sel.size), float(sel.var(ddof=1)), predicted))
    return rows, skipped


def variance_profile(
    model: EmbeddingModel,
    pairs,
    alphabet: Alphabet = DNA,
    mean_independent_distance: float | None = None,
    min_count: int = 30,
) -> tuple[list[VarianceRow], list[int]]:
    if mean_independent_distance is None or mean_independent_distance <= 0:
        raise DataError("variance profile needs the positive mean independent distance")
    dhat = pair_predictions(model, pairs, alphabet)
    d = np.array([p.d for p in pairs])
    return variance_profile_values(dhat, d, mean_independent_distance, model.spec.embedding_dim, min_count)


# --- chi-squared goodness of fit ----------------------------------------------


@dataclass
class Chi2Fit:
    d: int
    k: float
    n_samples: int
    statistic: float
    critical: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical


def chi2_fit_values(dhat: np.ndarray, d: int, k: float, alpha: float = 0.01) -> Chi2Fit:
    """KS test of {k * dhat} against the chi-squared law with k*d degrees.

    Requires at least 200 samples at the given distance.
    """
    dhat = np.asarray(dhat, dtype=np.float64)
    if dhat.size < 200:
        raise DataError(f"chi-squared fit needs >= 200 samples at d={d}, got {dhat.size}")
    if k <= 0 or d <= 0:
        raise DataError(f"chi-squared fit needs positive k and d, got k={k}, d={d}")
    dof = k * d
    stat = special.ks_statistic(k * dhat, lambda x: special.chi2_cdf(x, dof))
    crit = special.kolmogorov_critical(alpha, dhat.size)
    return Chi2Fit(d, k, int(dhat.size), stat, crit, alpha)


def chi2_fit(
    model: EmbeddingModel,
    pairs,
    d: int,
    k: float,
    alphabet: Alphabet = DNA,
    alpha: float = 0.01,
) -> Chi2Fit:
    sel = [p for p in pairs if p.d == d]
    dhat = pair_predictions(model, sel, alphabet) if sel else np.empty(0)
    return chi2_fit_values(dhat, d, k, alpha)


# --- element normality ----------------------------------------------------------


@dataclass
class ElementStats:
    index: int
    mean: float
    var: float
    skew: float
    ks: float

    @property
    def flagged(self) -> bool:
        return abs(self.mean) > 0.1 or abs(self.var - 1.0) > 0.2


def element_normality(vectors: np.ndarray, first_m: int | None = None) -> list[ElementStats]:
    """Per-element summary statistics against the standard normal."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise DataError(f"expected (N, n) vectors, got shape {vectors.shape}")
    m = vectors.shape[1] if first_m is None else min(first_m, vectors.shape[1])
    rows = []
    for idx in range(m):
        col = vectors[:, idx]
        ks = special.ks_statistic(col, special.normal_cdf)
        rows.append(
            ElementStats(
                idx,
                float(col.mean()),
                float(col.var(ddof=1)) if col.size > 1 else 0.0,
                special.sample_skewness(col),
                ks,
            )
        )
    return rows


def embedding_normality(
    model: EmbeddingModel,
    sequences: list[Sequence],
    alphabet: Alphabet = DNA,
    first_m: int | None = None,
) -> tuple[list[ElementStats], list[ElementStats]]:
    """Element statistics in eval mode and with batch statistics.

    The batch-statistics pass exists because the unit-normality property
    is stated for batch-normalized outputs; it runs the whole sequence
    set as one batch and restores the running statistics afterwards.
    """
    if len(sequences) < 1000:
        raise DataError(f"normality check needs >= 1000 sequences, got {len(sequences)}")
    eval_vectors = model.embed_sequences(sequences, alphabet, train=False)
    eval_rows = element_normality(eval_vectors, first_m)
    saved = (model.bn.running_mean.copy(), model.bn.running_var.copy())
    try:
        batch_vectors = model.embed_sequences(
            sequences, alphabet, train=True, batch_size=len(sequences)
        )
    finally:
        model.bn.running_mean[...] = saved[0]
        model.bn.running_var[...] = saved[1]
    batch_rows = element_normality(batch_vectors, first_m)
    return eval_rows, batch_rows


# --- outlier scan -----------------------------------------------------------------


@dataclass
class OutlierPair:
    s_text: str
    t_text: str
    d: int
    dhat: float
    run_symbol: str
    run_start: int
    run_length: int

    @property
    def abs_err(self) -> float:
        return abs(self.dhat - self.d)


@dataclass
class OutlierReport:
    mean_d: dict[int, np.ndarray]  # d -> mean predicted distance per scanned sequence
    histograms: dict[int, tuple[np.ndarray, np.ndarray]]  # d -> (bin_edges, counts)
    top: list[OutlierPair]
    n_sequences: int


def longest_run(seq: Sequence, alphabet: Alphabet = DNA) -> tuple[str, int, int]:
    """(symbol, start, length) of the longest homopolymer run."""
    codes = seq.true_codes()
    if codes.size == 0:
        return ("", 0, 0)
    best_start, best_len = 0, 1
    start = 0
    for i in range(1, codes.size + 1):
        if i == codes.size or codes[i] != codes[start]:
            if i - start > best_len:
                best_start, best_len = start, i - start
            start = i
    return (alphabet.symbols[codes[best_start]], best_start, best_len)


def _single_edits(seq: Sequence, alphabet: Alphabet, rng, max_partners: int) -> list[Sequence]:
    codes = seq.true_codes()
    n_base = alphabet.size - 1
    edits: list[np.ndarray] = []
    for i in range(codes.size):  # substitutions
        for sym in range(n_base):
            if sym != codes[i]:
                out = codes.copy()
                out[i] = sym
                edits.append(out)
    for i in range(codes.size):  # deletions
        edits.append(np.delete(codes, i))
    for i in range(codes.size + 1):  # insertions
        for sym in range(n_base):
            edits.append(np.insert(codes, i, sym))
    if len(edits) > max_partners:
        idx = rng.choice(len(edits), size=max_partners, replace=False)
        edits = [edits[i] for i in idx]
    return [Sequence(np.asarray(e, dtype=CODE_DTYPE), len(e)) for e in edits]


def _random_edit(codes: np.ndarray, alphabet: Alphabet, rng) -> np.ndarray:
    n_base = alphabet.size - 1
    op = rng.integers(3) if codes.size > 0 else 2
    if op == 0:  # substitution
        i = rng.integers(codes.size)
        out = codes.copy()
        out[i] = (out[i] + 1 + rng.integers(n_base - 1)) % n_base
        return out
    if op == 1:  # deletion
        return np.delete(codes, rng.integers(codes.size))
    return np.insert(codes, rng.integers(codes.size + 1), rng.integers(n_base))


def _edited_partners(
    seq: Sequence, d: int, alphabet: Alphabet, rng, max_partners: int, max_tries: int = 40
) -> list[Sequence]:
    """Compose d random edits, keeping results the oracle confirms at distance d."""
    partners = []
    for _ in range(max_partners):
        for _ in range(max_tries):
            codes = seq.true_codes().copy()
            for _ in range(d):
                codes = _random_edit(codes, alphabet, rng)
            cand = Sequence(np.asarray(codes, dtype=CODE_DTYPE), len(codes))
            if levenshtein(seq, cand) == d:
                partners.append(cand)
                break
    return partners


def outlier_scan(
    model: EmbeddingModel,
    sequences: list[Sequence],
    alphabet: Alphabet = DNA,
    d_values: tuple[int, ...] = (1, 2, 3),
    partners_per_d: int = 50,
    top_k: int = 20,
    rng: np.random.Generator | None = None,
    predict=None,
    bins: int = 20,
) -> OutlierReport:
    """Mean predicted distance per sequence at small true distances.

    Partners at distance 1 are enumerated single edits (sampled down to
    ``partners_per_d``); larger distances compose random edits verified
    by the exact oracle. ``predict`` may replace the model's pair
    predictor (s_list, t_list) -> dhat array, e.g. for testing.
    """
    rng = rng or np.random.default_rng(0)
    if predict is None:

        def predict(ss, ts):
            emb_s = model.embed_sequences(ss, alphabet, train=False)
            emb_t = model.embed_sequences(ts, alphabet, train=False)
            return predict_distances(model, emb_s, emb_t)

    mean_d: dict[int, list[float]] = {d: [] for d in d_values}
    all_pairs: list[OutlierPair] = []
    for seq in sequences:
        run_sym, run_start, run_len = longest_run(seq, alphabet)
        for d in d_values:
            if d == 1:
                partners = _single_edits(seq, alphabet, rng, partners_per_d)
            else:
                partners = _edited_partners(seq, d, alphabet, rng, partners_per_d)
            if not partners:
                continue
            dhat = predict([seq] * len(partners), partners)
            mean_d[d].append(float(dhat.mean()))
            worst = int(np.argmax(np.abs(dhat - d)))
            all_pairs.append(
                OutlierPair(
                    alphabet.decode(seq),
                    alphabet.decode(partners[worst]),
                    d,
                    float(dhat[worst]),
                    run_sym,
                    run_start,
                    run_len,
                )
            )
    histograms = {}
    mean_arrays = {}
    for d, values in mean_d.items():
        arr = np.asarray(values, dtype=np.float64)
        mean_arrays[d] = arr
        if arr.size:
            counts, edges = np.histogram(arr, bins=bins)
            histograms[d] = (edges, counts)
    all_pairs.sort(key=lambda p: -p.abs_err)
    return OutlierReport(mean_arrays, histograms, all_pairs[:top_k], len(sequences))


# --- synthetic distance harness ---------------------------------------------------
# Draws predicted distances directly from the idealized embedding model
# (independent unit-normal elements), bypassing any network: the
# reference distributions that trained models are tested against.


def synthetic_independent_distances(
    embedding_dim: int, mean_independent_distance: float, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Distances between scaled i.i.d. standard-normal embedding pairs."""
    r2 = mean_independent_distance / (2.0 * embedding_dim)
    u = rng.standard_normal((n_samples, embedding_dim))
    v = rng.standard_normal((n_samples, embedding_dim))
    return r2 * ((u - v) ** 2).sum(axis=1)


def synthetic_related_distances(
    embedding_dim: int,
    mean_independent_distance: float,
    d: float,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Distances for related pairs whose difference has d*n/M free directions.

    With m = d * embedding_dim / M integral, the difference vector is m
    unit normals scaled by sqrt(M/n) under an orthogonal rotation (which
    leaves the squared norm unchanged); fractional m falls back to the
    equivalent gamma draw.
    """
    m = d * embedding_dim / mean_independent_distance
    if m <= 0:
        raise DataError(f"free-direction count must be positive, got {m}")
    if abs(m - round(m)) < 1e-9:
        y = rng.standard_normal((n_samples, int(round(m))))
        s = (y * y).sum(axis=1)
    else:
        s = rng.gamma(shape=m / 2.0, scale=2.0, size=n_samples)
    return (mean_independent_distance / embedding_dim) * s


# --- CSV writers --------------------------------------------------------------------


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def write_errors_csv(path, rows: list[dict]) -> None:
    """rows: dicts with arch, dim, loss, seed, ae_g, ae_h."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["arch", "dim", "loss", "seed", "ae_g", "ae_h"])
        for r in rows:
            w.writerow(
                [r["arch"], r["dim"], r["loss"], r["seed"], f"{r['ae_g']:.6f}", f"{r['ae_h']:.6f}"]
            )


def write_variance_profile_csv(path, rows: list[VarianceRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["d", "count", "empirical_var", "predicted_var", "ratio"])
        for r in rows:
            w.writerow(
                [r.d, r.count, f"{r.empirical_var:.6f}", f"{r.predicted_var:.6f}", f"{r.ratio:.6f}"]
            )


def write_normality_csv(path, rows: list[ElementStats]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["element", "mean", "var", "skew", "ks"])
        for r in rows:
            w.writerow([r.index, f"{r.mean:.6f}", f"{r.var:.6f}", f"{r.skew:.6f}", f"{r.ks:.6f}"])


def write_chi2_csv(path, fits: list[Chi2Fit]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["d", "count", "k", "statistic", "critical", "passed"])
        for r in fits:
            w.writerow(
                [r.d, r.n_samples, f"{r.k:.6f}", f"{r.statistic:.6f}", f"{r.critical:.6f}", int(r.passed)]
            )


def write_outliers_csv(path, report: OutlierReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["rank", "d", "dhat", "abs_err", "seq_s", "seq_t", "run_symbol", "run_start", "run_length"])
        for rank, p in enumerate(report.top, start=1):
            w.writerow(
                [rank, p.d, f"{p.dhat:.4f}", f"{p.abs_err:.4f}", p.s_text, p.t_text, p.run_symbol, p.run_start, p.run_length]
            )


def write_mean_d_hist_csv(path, report: OutlierReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _writer(f)
        w.writerow(["d", "bin_lo", "bin_hi", "count"])
        for d in sorted(report.histograms):
            edges, counts = report.histograms[d]
            for i, c in enumerate(counts):
                w.writerow([d, f"{edges[i]:.6f}", f"{edges[i + 1]:.6f}", int(c)])
