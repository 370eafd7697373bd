"""Embedding-dimension search via covariance spectra of embedding differences.

For unrelated sequences, a well-trained model should produce embedding
differences whose covariance looks like the identity: every direction
carries independent unit-variance information. Once the requested
dimension exceeds what the dataset and architecture can support, the
trailing eigenvalues of that covariance collapse towards zero while the
leading ones stay near 1. The dimension search trains a model per
candidate dimension, computes the spectrum on held-out cluster
representatives, and reads off the plateau of the effective rank: the
early-stopping dimension.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, UsageError
from .seeding import substream
from .seqcore import DNA, Alphabet, Sequence
from .siamese import ArchitectureSpec, EmbeddingModel, TrainConfig, clone_config, train

DEFAULT_TAU = 0.5
DEFAULT_SLACK = 0.1


@dataclass
class Spectrum:
    """Descending eigenvalues of the difference covariance at one dimension."""

    dim: int
    eigenvalues: np.ndarray
    sample_count: int

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        if ev.size != self.dim:
            raise DataError(f"spectrum at dim {self.dim} has {ev.size} eigenvalues")
        if np.any(np.diff(ev) > 1e-12):
            raise DataError("eigenvalues must be sorted in descending order")
        if ev.size and ev[-1] < -1e-6:
            raise DataError(f"eigenvalue {ev[-1]} too negative for a covariance spectrum")
        self.eigenvalues = ev

    def effective_rank(self, tau: float) -> int:
        return int((self.eigenvalues >= tau).sum())

    def spectral_contrast(self) -> float:
        """median / max eigenvalue; mid-range values signal gradual decay."""
        top = float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0
        if top <= 0:
            return 0.0
        return float(np.median(self.eigenvalues)) / top


def diff_covariance(
    embeddings: np.ndarray, sample_pairs: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample covariance of (u_i - u_j)/sqrt(2) over random distinct pairs.

    The 1/sqrt(2) makes independent unit-variance embedding elements give
    unit eigenvalues. Unbiased (N-1) normalization.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n = embeddings.shape[0]
    if n < 2:
        raise DataError(f"difference covariance needs >= 2 embeddings, got {n}")
    if sample_pairs < 2:
        raise DataError(f"need >= 2 sampled pairs, got {sample_pairs}")
    i = rng.integers(0, n, size=sample_pairs)
    j = rng.integers(0, n - 1, size=sample_pairs)
    j = j + (j >= i)  # distinct partner
    diffs = (embeddings[i] - embeddings[j]) / np.sqrt(2.0)
    centered = diffs - diffs.mean(axis=0)
    cov = centered.T @ centered / (sample_pairs - 1)
    return 0.5 * (cov + cov.T)


def sym_eigen(
    a: np.ndarray, tol: float = 1e-10, want_vectors: bool = False, max_sweeps: int = 60
):
    """Eigenvalues (descending) of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    tol * ||A||_F. Optionally returns the orthogonal eigenvector matrix Q
    with A = Q diag(w) Q^T (columns ordered like the eigenvalues).
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = max(np.abs(a).max(), 1.0) if a.size else 1.0
    if np.abs(a - a.T).max() > 1e-8 * scale:
        raise NumericError("matrix is not symmetric within tolerance")
    A = 0.5 * (a + a.T)
    Q = np.eye(n) if want_vectors else None
    norm = np.linalg.norm(A)
    if norm == 0.0 or n == 1:
        w = np.diag(A).copy()
        order = np.argsort(w)[::-1]
        if want_vectors:
            return w[order], (Q[:, order] if Q is not None else None)
        return w[order]

    def off_norm():
        # computed from the entries themselves: the ||A||^2 - sum(diag^2)
        # shortcut cancels catastrophically near convergence
        off = A.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    for _ in range(max_sweeps):
        if off_norm() <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e10:
                    t = 0.5 / theta  # asymptotic root; theta^2 would overflow
                elif theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q: A <- G^T A G
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                if Q is not None:
                    qp = Q[:, p].copy()
                    qq = Q[:, q].copy()
                    Q[:, p] = c * qp - s * qq
                    Q[:, q] = s * qp + c * qq
    else:
        raise NumericError("Jacobi eigensolver did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)[::-1]
    if want_vectors:
        return w[order], Q[:, order]
    return w[order]


def spectrum_of(
    embeddings: np.ndarray, sample_pairs: int, rng: np.random.Generator
) -> Spectrum:
    cov = diff_covariance(embeddings, sample_pairs, rng)
    ev = sym_eigen(cov)
    return Spectrum(dim=cov.shape[0], eigenvalues=ev, sample_count=sample_pairs)


@dataclass
class EsdDetection:
    """Outcome of the effective-rank plateau search over scanned dimensions."""

    n0: int | None
    is_lower_bound: bool
    lower_bound: int | None
    ranks: dict[int, int]
    suspect_dims: tuple[int, ...]
    tau: float
    slack: float

    def describe(self) -> str:
        if self.n0 is not None:
            return f"n0 = {self.n0}"
        if self.is_lower_bound and self.lower_bound is not None:
            return f"n0 >= {self.lower_bound}"
        return "n0 undetermined (low spectral contrast)"


def detect_esd(spectra: list[Spectrum], tau: float = DEFAULT_TAU, slack: float = DEFAULT_SLACK) -> EsdDetection:
    """Find the plateau of effective rank across ascending scan dimensions.

    A dimension is "full" when its effective rank (eigenvalues >= tau)
    reaches dim*(1-slack): the model still uses every direction, so the
    bound lies at or above this dimension. Dimensions past the bound keep
    an effective rank near the bound itself; the plateau value of those
    ranks is the detected dimension. If every scanned dimension is full,
    only the lower bound max(dims) can be reported. Spectra whose decay
    is gradual rather than a sharp collapse (median/max eigenvalue in
    (0.2, 0.8)) are flagged: the rank count is unreliable there, and if
    only flagged spectra are past the bound no value is chosen.
    """
    if not spectra:
        raise DataError("dimension detection needs at least one spectrum")
    dims = [s.dim for s in spectra]
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise DataError(f"scan dimensions must be strictly ascending, got {dims}")
    ranks = {s.dim: s.effective_rank(tau) for s in spectra}
    suspect = tuple(s.dim for s in spectra if 0.2 < s.spectral_contrast() < 0.8)
    full = [s.dim for s in spectra if ranks[s.dim] >= s.dim * (1.0 - slack)]
    saturated = [s for s in spectra if s.dim not in full]
    lower_bound = max(full) if full else None
    if not saturated:
        return EsdDetection(None, True, lower_bound, ranks, suspect, tau, slack)
    usable = [s for s in saturated if s.dim not in suspect]
    if not usable:
        return EsdDetection(None, False, lower_bound, ranks, suspect, tau, slack)
    n0 = int(round(statistics.median(ranks[s.dim] for s in usable)))
    return EsdDetection(n0, False, lower_bound, ranks, suspect, tau, slack)


@dataclass
class EsdReport:
    dims: list[int]
    seeds: list[int]
    tau: float
    slack: float
    spectra: dict[tuple[int, int], Spectrum]  # (seed, dim) -> spectrum
    detections: dict[int, EsdDetection]  # seed -> detection

    @property
    def n0_by_seed(self) -> dict[int, int | None]:
        return {seed: det.n0 for seed, det in self.detections.items()}

    @property
    def n0(self) -> int | None:
        values = [v for v in self.n0_by_seed.values() if v is not None]
        if len(values) != len(self.detections):
            return None
        return int(round(statistics.median(values)))

    @property
    def n0_spread(self) -> int | None:
        values = [v for v in self.n0_by_seed.values() if v is not None]
        if len(values) != len(self.detections):
            return None
        return max(values) - min(values)


def esd_scan(
    train_pairs,
    probe_sequences: list[Sequence],
    alphabet: Alphabet = DNA,
    arch_kind: str = "cnn5",
    dims: list[int] = (40, 80, 120, 160),
    cfg: TrainConfig = TrainConfig(),
    mean_independent_distance: float | None = None,
    tau: float = DEFAULT_TAU,
    slack: float = DEFAULT_SLACK,
    seeds: tuple[int, ...] = (0,),
    cov_pairs: int = 5000,
    input_len: int = 160,
    out_dir=None,
) -> EsdReport:
    """Train one model per (dimension, seed) and detect the rank plateau.

    ``probe_sequences`` must be mutually unrelated (one representative
    per held-out cluster); the spectra are computed from their eval-mode
    embeddings under the frozen trained model.
    """
    dims = list(dims)
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise UsageError(f"scan dimensions must be strictly ascending, got {dims}")
    if len(probe_sequences) < 2:
        raise DataError("dimension scan needs at least 2 probe sequences")
    spectra: dict[tuple[int, int], Spectrum] = {}
    detections: dict[int, EsdDetection] = {}
    for seed in seeds:
        per_dim: list[Spectrum] = []
        for dim in dims:
            spec = ArchitectureSpec(
                kind=arch_kind,
                embedding_dim=dim,
                input_len=input_len,
                alphabet_size=alphabet.size,
            )
            run_cfg = clone_config(cfg, seed=int(substream(cfg.seed, "esd", seed, dim).integers(2**31)))
            model = EmbeddingModel(
                spec,
                substream(run_cfg.seed, "init"),
                mean_independent_distance=mean_independent_distance,
                dtype=np.float32,
            )
            if run_cfg.epochs > 0:
                train(model, train_pairs, alphabet, run_cfg)
            embeddings = model.embed_sequences(probe_sequences, alphabet, train=False)
            sp = spectrum_of(embeddings, cov_pairs, substream(run_cfg.seed, "covpairs"))
            per_dim.append(sp)
            spectra[(seed, dim)] = sp
            if out_dir is not None:
                write_spectrum_csv(f"{out_dir}/spectrum_d{dim}_s{seed}.csv", sp)
        detections[seed] = detect_esd(per_dim, tau, slack)
    return EsdReport(dims, list(seeds), tau, slack, spectra, detections)


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["dim", "index", "eigenvalue"])
        for idx, ev in enumerate(spectrum.eigenvalues):
            writer.writerow([spectrum.dim, idx, f"{ev:.10g}"])
