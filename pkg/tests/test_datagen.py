import numpy as np
import pytest

from levembed.datagen import (
    Cluster,
    EditChannelConfig,
    PairSample,
    build_clusters,
    estimate_mean_distance,
    load_clusters,
    load_pairs,
    make_pairs,
    mutate,
    random_sequence,
    save_clusters,
    save_pairs,
    split_by_cluster,
    split_clusters,
)
from levembed.errors import DataError
from levembed.seqcore import DNA, Alphabet, levenshtein
from levembed.seeding import substream

# Reference values from 1e5-trial / 1e4-pair simulations with the exact
# oracle (substream(123, ...) streams): see the expected-value comments on
# the individual tests.
CHANNEL_MEAN_150 = 4.462090
CHANNEL_STD_150 = 2.057096
UNIFORM150_4SYM_MEAN = 82.2433
UNIFORM150_4SYM_STD = 3.1400


def small_clusters(seed=0, n=12, ref_len=30, reads=4, p=0.02):
    cfg = EditChannelConfig(p, p, p)
    return build_clusters(n, ref_len, reads, cfg, substream(seed, "clusters"))


class TestChannelConfig:
    def test_probability_bounds(self):
        with pytest.raises(DataError):
            EditChannelConfig(p_sub=-0.1)
        with pytest.raises(DataError):
            EditChannelConfig(p_sub=0.5, p_del=0.4, p_ins=0.2)


class TestMutate:
    def test_zero_rates_identity(self):
        ref = random_sequence(50, DNA, substream(0, "r"))
        out = mutate(ref, EditChannelConfig(0, 0, 0), substream(0, "m"))
        assert out == ref

    def test_all_deletions_empty(self):
        ref = random_sequence(50, DNA, substream(1, "r"))
        out = mutate(ref, EditChannelConfig(0, 1, 0), substream(1, "m"))
        assert out.length == 0

    def test_never_emits_padding(self):
        ref = random_sequence(40, DNA, substream(2, "r"))
        rng = substream(2, "m")
        for _ in range(50):
            out = mutate(ref, EditChannelConfig(0.2, 0.2, 0.2), rng)
            assert (out.codes < DNA.pad_index).all()

    def test_monte_carlo_mean_matches_reference(self):
        # mean over 1e5 trials at p=0.01 each, |ref| = 150: 4.462090 (std 2.057096)
        cfg = EditChannelConfig(0.01, 0.01, 0.01)
        rng = substream(99, "mc")
        trials = 2500
        dists = np.empty(trials)
        for i in range(trials):
            ref = random_sequence(150, DNA, rng)
            dists[i] = levenshtein(ref, mutate(ref, cfg, rng))
        tol = 3.0 * CHANNEL_STD_150 / np.sqrt(trials)
        assert abs(dists.mean() - CHANNEL_MEAN_150) < tol


class TestBuildClusters:
    def test_single_cluster_no_reads(self):
        cs = build_clusters(1, 10, 0, EditChannelConfig(), substream(0, "c"))
        assert len(cs) == 1 and cs[0].reads == []
        assert cs[0].reference.length == 10

    def test_counts(self):
        cs = build_clusters(20, 15, 5, EditChannelConfig(), substream(1, "c"))
        assert len(cs) == 20
        assert sum(len(c.reads) for c in cs) == 100

    def test_determinism(self):
        a = build_clusters(5, 20, 3, EditChannelConfig(), substream(7, "c"))
        b = build_clusters(5, 20, 3, EditChannelConfig(), substream(7, "c"))
        assert all(x.reference == y.reference and x.reads == y.reads for x, y in zip(a, b))

    def test_references_use_all_non_padding_symbols(self):
        cs = build_clusters(10, 200, 0, EditChannelConfig(), substream(3, "c"))
        seen = set()
        for c in cs:
            seen.update(c.reference.codes.tolist())
        assert seen == set(range(DNA.size - 1))


class TestMakePairs:
    def test_only_nonhomologous(self):
        pairs = make_pairs(small_clusters(), 0, 10, substream(0, "p"))
        assert len(pairs) == 10
        assert all(not p.homologous for p in pairs)

    def test_distances_match_oracle(self):
        pairs = make_pairs(small_clusters(), 15, 15, substream(1, "p"))
        for p in pairs:
            assert p.d == levenshtein(p.s, p.t)

    def test_homologous_needs_two_reads(self):
        cs = build_clusters(3, 10, 1, EditChannelConfig(), substream(2, "c"))
        with pytest.raises(DataError):
            make_pairs(cs, 5, 0, substream(2, "p"))

    def test_homologous_far_below_nonhomologous(self):
        cfg = EditChannelConfig(0.01, 0.01, 0.01)
        cs = build_clusters(30, 150, 3, cfg, substream(4, "c"))
        pairs = make_pairs(cs, 60, 60, substream(4, "p"))
        hom = [p.d for p in pairs if p.homologous]
        non = [p.d for p in pairs if not p.homologous]
        assert max(hom) < min(non)


class TestSplit:
    def test_even_partition(self):
        cs = small_clusters(n=10)
        train, test = split_clusters(cs, 0.5, substream(0, "s"))
        assert len(train) == 5 and len(test) == 5

    def test_disjoint_ids(self):
        split = split_by_cluster(
            small_clusters(), 0.4, substream(1, "s"), train_pairs=(10, 10), test_pairs=(5, 5)
        )
        assert split.train_cluster_ids.isdisjoint(split.test_cluster_ids)

    def test_deterministic(self):
        a = split_by_cluster(
            small_clusters(), 0.5, substream(2, "s"), train_pairs=(8, 8), test_pairs=(4, 4)
        )
        b = split_by_cluster(
            small_clusters(), 0.5, substream(2, "s"), train_pairs=(8, 8), test_pairs=(4, 4)
        )
        assert a.train == b.train and a.test == b.test

    def test_no_sequence_leakage(self):
        split = split_by_cluster(
            small_clusters(n=20), 0.5, substream(3, "s"), train_pairs=(40, 40), test_pairs=(20, 20)
        )
        train_seqs = {s for p in split.train for s in (p.s, p.t)}
        test_seqs = {s for p in split.test for s in (p.s, p.t)}
        assert train_seqs.isdisjoint(test_seqs)

    def test_fraction_bounds(self):
        with pytest.raises(DataError):
            split_clusters(small_clusters(), 1.5, substream(4, "s"))
        with pytest.raises(DataError):
            split_clusters(small_clusters(n=3), 0.01, substream(4, "s"))


class TestEstimateMeanDistance:
    def test_constant_cross_distance(self):
        a = Cluster(0, DNA.encode("A" * 80), [DNA.encode("A" * 80)])
        b = Cluster(1, DNA.encode("T" * 80), [DNA.encode("T" * 80)])
        mean, se = estimate_mean_distance([a, b], 100, substream(0, "m"))
        assert mean == 80.0
        assert se == 0.0

    def test_scale_consistency_at_dim_80(self):
        # a mean independent distance of 80 at dimension 80 gives the
        # scale sqrt(2)/2, and 2*n*r^2 recovers 80
        from levembed.siamese import init_scale

        log_r = init_scale(80.0, 80)
        r = np.exp(log_r)
        assert abs(r - np.sqrt(2) / 2) < 1e-12
        assert abs(2 * 80 * r**2 - 80.0) < 1e-9

    def test_uniform_random_pairs_match_reference(self):
        # 1e4-pair oracle run for uniform length-150 4-symbol pairs:
        # mean 82.2433, std 3.1400
        alphabet = Alphabet("ACGT.")
        rng = substream(5, "u")
        clusters = [
            Cluster(i, random_sequence(150, alphabet, rng), []) for i in range(400)
        ]
        mean, se = estimate_mean_distance(clusters, 400, substream(5, "m"))
        assert abs(mean - UNIFORM150_4SYM_MEAN) < 2.0 * UNIFORM150_4SYM_STD / np.sqrt(400) + 2.0 * 0.0314

    def test_preconditions(self):
        cs = small_clusters(n=2)
        with pytest.raises(DataError):
            estimate_mean_distance(cs[:1], 100, substream(6, "m"))
        with pytest.raises(DataError):
            estimate_mean_distance(cs, 99, substream(6, "m"))


class TestPairFiles:
    def test_round_trip(self, tmp_path):
        pairs = make_pairs(small_clusters(), 20, 20, substream(0, "p"))
        path = tmp_path / "pairs.tsv"
        save_pairs(path, pairs)
        loaded = load_pairs(path)
        assert loaded == pairs

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        assert load_pairs(path) == []

    def test_known_line(self, tmp_path):
        path = tmp_path / "one.tsv"
        path.write_text("ACGT\tAGT\t1\t1\n")
        (p,) = load_pairs(path)
        assert p.d == 1 and p.homologous
        assert levenshtein(p.s, p.t) == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("ACGT\tAGT\t1\t1\nACGT\tAGT\n")
        with pytest.raises(DataError, match=":2"):
            load_pairs(path)

    def test_bad_flag_and_distance(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("ACGT\tAGT\t1\t2\n")
        with pytest.raises(DataError):
            load_pairs(path)
        path.write_text("ACGT\tAGT\t-1\t1\n")
        with pytest.raises(DataError):
            load_pairs(path)

    def test_verification_catches_wrong_distance(self, tmp_path):
        path = tmp_path / "wrong.tsv"
        path.write_text("ACGT\tAGT\t3\t1\n")
        assert len(load_pairs(path)) == 1  # without verification
        with pytest.raises(DataError):
            load_pairs(path, verify=True, verify_fraction=1.0)


class TestClusterFiles:
    def test_round_trip(self, tmp_path):
        cs = small_clusters(n=5)
        path = tmp_path / "clusters.tsv"
        save_clusters(path, cs)
        loaded = load_clusters(path)
        assert len(loaded) == 5
        for a, b in zip(cs, loaded):
            assert a.id == b.id and a.reference == b.reference and a.reads == b.reads

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("0\tACGT\nnot-an-int\tACGT\n")
        with pytest.raises(DataError, match=":2"):
            load_clusters(path)
