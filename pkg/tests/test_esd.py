import numpy as np
import pytest

from levembed.datagen import EditChannelConfig, build_clusters, make_pairs
from levembed.errors import DataError, NumericError, UsageError
from levembed.esd import (
    EsdDetection,
    Spectrum,
    detect_esd,
    diff_covariance,
    esd_scan,
    spectrum_of,
    sym_eigen,
    write_spectrum_csv,
)
from levembed.seeding import substream
from levembed.seqcore import DNA
from levembed.siamese import TrainConfig


def flat_spectrum(dim, n_big, sample_count=1000):
    ev = np.concatenate([np.ones(n_big), np.zeros(dim - n_big)])
    return Spectrum(dim, ev, sample_count)


class TestDiffCovariance:
    def test_iid_normal_eigenvalues_near_one(self):
        # the estimate converges to the base set's empirical covariance, so
        # the base sample must be large enough that pair noise dominates
        rng = substream(2, "iid")
        emb = rng.standard_normal((50_000, 40))
        cov = diff_covariance(emb, 10_000, rng)
        ev = sym_eigen(cov)
        assert np.abs(ev - 1.0).max() < 0.15
        assert abs(ev.mean() - 1.0) < 0.05

    def test_identical_embeddings_zero_matrix(self):
        emb = np.tile(np.arange(6.0), (10, 1))
        cov = diff_covariance(emb, 50, substream(1, "z"))
        assert np.abs(cov).max() == 0.0

    def test_subspace_rank(self):
        rng = substream(2, "sub")
        latent = rng.standard_normal((400, 7))
        basis = np.linalg.qr(rng.standard_normal((20, 7)))[0]
        emb = latent @ basis.T
        ev = sym_eigen(diff_covariance(emb, 3000, rng))
        assert (ev < 1e-8).sum() == 20 - 7

    def test_symmetry(self):
        rng = substream(3, "s")
        cov = diff_covariance(rng.standard_normal((50, 8)), 200, rng)
        assert np.abs(cov - cov.T).max() < 1e-9

    def test_preconditions(self):
        with pytest.raises(DataError):
            diff_covariance(np.zeros((1, 4)), 10, substream(4, "p"))
        with pytest.raises(DataError):
            diff_covariance(np.zeros((5, 4)), 1, substream(4, "p"))


class TestSymEigen:
    def test_identity(self):
        assert np.allclose(sym_eigen(np.eye(5)), np.ones(5))

    def test_diagonal(self):
        assert sym_eigen(np.diag([2.0, 1.0, 0.0])).tolist() == [2.0, 1.0, 0.0]

    def test_reconstruction_and_trace(self):
        rng = substream(5, "e")
        b = rng.standard_normal((30, 30))
        a = b.T @ b
        w, q = sym_eigen(a, want_vectors=True)
        assert np.linalg.norm(a - q @ np.diag(w) @ q.T) < 1e-8 * np.linalg.norm(a)
        assert abs(w.sum() - np.trace(a)) < 1e-9 * abs(np.trace(a))

    def test_matches_lapack(self):
        rng = substream(6, "e")
        for n in (2, 7, 25):
            b = rng.standard_normal((n, n))
            a = b + b.T
            mine = sym_eigen(a)
            ref = np.sort(np.linalg.eigvalsh(a))[::-1]
            assert np.abs(mine - ref).max() < 1e-9 * max(1.0, np.abs(ref).max())

    def test_permutation_similarity_invariance(self):
        rng = substream(7, "e")
        b = rng.standard_normal((12, 12))
        a = b.T @ b
        perm = rng.permutation(12)
        p = np.eye(12)[perm]
        assert np.allclose(sym_eigen(a), sym_eigen(p @ a @ p.T), atol=1e-9)

    def test_rejects_asymmetric(self):
        with pytest.raises(NumericError):
            sym_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestDetect:
    def test_plateau_at_120(self):
        spectra = [flat_spectrum(d, d) for d in (40, 60, 80, 100, 120)]
        spectra += [flat_spectrum(d, 120) for d in (140, 160, 180)]
        det = detect_esd(spectra)
        assert det.n0 == 120
        assert det.lower_bound == 120

    def test_all_full_reports_lower_bound(self):
        det = detect_esd([flat_spectrum(40, 40)])
        assert det.n0 is None
        assert det.is_lower_bound and det.lower_bound == 40

    def test_synthetic_rank_r(self):
        rng = substream(8, "rank")
        latent = rng.standard_normal((3000, 12))
        spectra = []
        for dim in (8, 16, 24, 32):
            if dim <= 12:
                emb = latent[:, :dim]
            else:
                basis = np.linalg.qr(rng.standard_normal((dim, 12)))[0]
                emb = latent @ basis.T
            spectra.append(spectrum_of(emb, 4000, rng))
        det = detect_esd(spectra)
        assert det.n0 == 12

    def test_monotone_safe(self):
        spectra = [flat_spectrum(d, d) for d in (20, 40)] + [flat_spectrum(60, 44)]
        base = detect_esd(spectra).n0
        extended = detect_esd(spectra + [flat_spectrum(80, 44)]).n0
        assert base == extended == 44

    def test_gradual_decay_flagged_not_detected(self):
        # geometric decay has mid-range median/max contrast: unreliable rank
        dims = (20, 40)
        spectra = [
            Spectrum(d, np.geomspace(1.0, 0.3, d), 500) for d in dims
        ]
        det = detect_esd(spectra)
        assert set(det.suspect_dims) == {20, 40}
        assert det.n0 is None

    def test_requires_ascending(self):
        with pytest.raises(DataError):
            detect_esd([flat_spectrum(20, 20), flat_spectrum(10, 10)])


class TestSpectrumType:
    def test_rejects_unsorted(self):
        with pytest.raises(DataError):
            Spectrum(3, np.array([0.1, 0.5, 0.2]), 10)

    def test_rejects_wrong_length(self):
        with pytest.raises(DataError):
            Spectrum(3, np.ones(2), 10)

    def test_csv_round_readable(self, tmp_path):
        sp = flat_spectrum(4, 2)
        path = tmp_path / "spectrum.csv"
        write_spectrum_csv(path, sp)
        lines = path.read_text().splitlines()
        assert lines[0] == "dim,index,eigenvalue"
        assert len(lines) == 5
        assert lines[1].startswith("4,0,")


class TestScan:
    def test_zero_epoch_scan_produces_spectra(self):
        cfg = EditChannelConfig(0.02, 0.02, 0.02)
        clusters = build_clusters(24, 24, 2, cfg, substream(9, "c"))
        pairs = make_pairs(clusters, 30, 30, substream(9, "p"))
        probes = [c.reference for c in clusters]
        report = esd_scan(
            pairs, probes, DNA, arch_kind="cnn5", dims=[4],
            cfg=TrainConfig(epochs=0, batch_size=16),
            mean_independent_distance=15.0, seeds=(0,),
            cov_pairs=100, input_len=32,
        )
        assert (0, 4) in report.spectra
        assert report.spectra[(0, 4)].eigenvalues.size == 4

    def test_dims_must_ascend(self):
        with pytest.raises(UsageError):
            esd_scan([], [DNA.encode("A"), DNA.encode("T")], DNA, dims=[8, 4], cfg=TrainConfig())
