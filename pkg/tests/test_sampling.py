"""Randomizer distributions against the exact channel rows, plus the wire format."""

import io
import math

import numpy as np
import pytest
from scipy import stats

from subsetldp.channels import brr_channel, ksubset_channel, mrr_channel
from subsetldp.estimation import ksubset_hit_rates
from subsetldp.information import PrivacyParams
from subsetldp.sampling import (
    ViewFormatError,
    brr_randomize,
    brr_randomize_batch,
    derive_rng,
    ksubset_randomize,
    ksubset_randomize_batch,
    make_rng,
    mrr_randomize,
    mrr_randomize_batch,
    read_views,
    write_views,
)

CHI2_P = 0.001


def chi2_pvalue(counts, probs):
    n = counts.sum()
    return stats.chisquare(counts, probs * n).pvalue


def subset_counts(views, d):
    """Histogram of observed subsets keyed by bitmask."""
    masks = (1 << views.astype(np.int64)).sum(axis=1)
    return np.bincount(masks, minlength=1 << d)


class TestKsubsetScalar:
    def test_size_and_membership(self):
        rng = make_rng(0)
        p = PrivacyParams(1.0, 7)
        for _ in range(200):
            view = ksubset_randomize(3, p, 3, rng)
            assert view.shape == (3,)
            assert np.all(np.diff(view) > 0)
            assert view.min() >= 0 and view.max() < 7

    def test_argument_validation(self):
        p = PrivacyParams(1.0, 5)
        rng = make_rng(0)
        with pytest.raises(ValueError):
            ksubset_randomize(5, p, 2, rng)
        with pytest.raises(ValueError):
            ksubset_randomize(0, p, 5, rng)

    def test_determinism(self):
        p = PrivacyParams(0.7, 6)
        a = [ksubset_randomize(2, p, 2, make_rng(99)).tolist() for _ in range(50)]
        rng = make_rng(99)
        b = [ksubset_randomize(2, p, 2, rng).tolist() for _ in range(1)]
        assert a[0] == b[0]
        rng1, rng2 = make_rng(5), make_rng(5)
        seq1 = [ksubset_randomize(1, p, 3, rng1).tolist() for _ in range(100)]
        seq2 = [ksubset_randomize(1, p, 3, rng2).tolist() for _ in range(100)]
        assert seq1 == seq2

    def test_distribution_matches_channel_row(self):
        # reservoir path: every size-2 subset of a 5-symbol domain at its
        # exact probability (goodness of fit over all 10 outcomes)
        p = PrivacyParams(1.0, 5)
        rng = make_rng(42)
        x, trials = 2, 200_000
        views = np.array([ksubset_randomize(x, p, 2, rng) for _ in range(trials)])
        counts = subset_counts(views, 5)
        chan = ksubset_channel(p, 2)
        probs = np.zeros(1 << 5)
        probs[list(chan.output_labels)] = chan.probs[x]
        live = probs > 0
        assert counts[~live].sum() == 0
        assert chi2_pvalue(counts[live], probs[live]) > CHI2_P

    def test_reservoir_complement_uniformity(self):
        # conditioned on the no-secret branch, each non-secret symbol should
        # appear equally often
        p = PrivacyParams(0.5, 6)
        rng = make_rng(3)
        x, m, trials = 4, 3, 60_000
        hits = np.zeros(6)
        kept = 0
        for _ in range(trials):
            view = ksubset_randomize(x, p, m, rng)
            if x not in view:
                kept += 1
                hits[view] += 1
        rate = m / 5.0
        sigma = math.sqrt(rate * (1 - rate) * kept)
        for j in range(6):
            if j == x:
                assert hits[j] == 0
                continue
            assert abs(hits[j] - kept * rate) < 4 * sigma


class TestKsubsetBatch:
    def test_matches_scalar_distribution(self):
        p = PrivacyParams(1.0, 5)
        views = ksubset_randomize_batch(np.full(1_000_000, 2), p, 2, make_rng(1))
        assert views.shape == (1_000_000, 2)
        assert np.all(np.diff(views, axis=1) > 0)
        chan = ksubset_channel(p, 2)
        probs = np.zeros(1 << 5)
        probs[list(chan.output_labels)] = chan.probs[2]
        counts = subset_counts(views, 5)
        live = probs > 0
        assert counts[~live].sum() == 0
        assert chi2_pvalue(counts[live], probs[live]) > CHI2_P

    def test_hit_rate(self):
        p = PrivacyParams(1.0, 6)
        n = 1_000_000
        views = ksubset_randomize_batch(np.full(n, 1), p, 2, make_rng(4))
        hit = float((views == 1).any(axis=1).sum())
        g = ksubset_hit_rates(p, 2).g
        assert abs(hit - n * g) < 3 * math.sqrt(n * g * (1 - g))

    def test_other_symbol_rate(self):
        p = PrivacyParams(1.0, 6)
        n = 400_000
        views = ksubset_randomize_batch(np.full(n, 1), p, 2, make_rng(8))
        h = ksubset_hit_rates(p, 2).h
        hit = float((views == 4).any(axis=1).sum())
        assert abs(hit - n * h) < 4 * math.sqrt(n * h * (1 - h))

    def test_determinism_and_blocking(self):
        p = PrivacyParams(2.0, 300)  # wide domain exercises the block loop
        xs = make_rng(0).integers(0, 300, size=5000)
        a = ksubset_randomize_batch(xs, p, 7, make_rng(11))
        b = ksubset_randomize_batch(xs, p, 7, make_rng(11))
        np.testing.assert_array_equal(a, b)
        assert np.all(np.diff(a, axis=1) > 0)

    def test_rejects_bad_secrets(self):
        p = PrivacyParams(1.0, 4)
        with pytest.raises(ValueError):
            ksubset_randomize_batch(np.array([0, 4]), p, 2, make_rng(0))
        with pytest.raises(ValueError):
            ksubset_randomize_batch(np.array([0.5, 1.5]), p, 2, make_rng(0))


class TestMrr:
    def test_keep_probability(self):
        p = PrivacyParams(1.0, 2)
        outs = mrr_randomize_batch(np.zeros(400_000, dtype=np.int64), p, make_rng(2))
        keep = math.e / (math.e + 1)
        kept = float((outs == 0).sum())
        assert abs(kept - outs.size * keep) < 3 * math.sqrt(outs.size * keep * (1 - keep))

    def test_tiny_budget_near_uniform(self):
        p = PrivacyParams(1e-9, 4)
        outs = mrr_randomize_batch(np.full(400_000, 2), p, make_rng(5))
        counts = np.bincount(outs, minlength=4)
        assert chi2_pvalue(counts, np.full(4, 0.25)) > CHI2_P

    def test_matches_channel_row(self):
        p = PrivacyParams(0.5, 4)
        x = 1
        outs = mrr_randomize_batch(np.full(1_000_000, x), p, make_rng(6))
        counts = np.bincount(outs, minlength=4)
        assert chi2_pvalue(counts, mrr_channel(p).probs[x]) > CHI2_P

    def test_scalar_matches_batch_range(self):
        p = PrivacyParams(1.0, 5)
        rng = make_rng(7)
        outs = {mrr_randomize(3, p, rng) for _ in range(200)}
        assert outs <= set(range(5))
        with pytest.raises(ValueError):
            mrr_randomize(5, p, rng)


class TestBrr:
    def test_own_bit_survival_rate(self):
        p = PrivacyParams(1.0, 3)
        n = 400_000
        bits = brr_randomize_batch(np.full(n, 0), p, make_rng(9))
        keep = math.exp(0.5) / (math.exp(0.5) + 1)
        kept = float(bits[:, 0].sum())
        assert abs(kept - n * keep) < 3 * math.sqrt(n * keep * (1 - keep))

    def test_noiseless_limit(self):
        p = PrivacyParams(40.0, 4)
        bits = brr_randomize_batch(np.full(20_000, 2), p, make_rng(10))
        exact = (bits.sum(axis=1) == 1) & bits[:, 2]
        assert exact.mean() > 0.999

    def test_joint_distribution_matches_channel_row(self):
        p = PrivacyParams(1.0, 3)
        x = 1
        bits = brr_randomize_batch(np.full(1_000_000, x), p, make_rng(12))
        masks = bits @ (1 << np.arange(3))
        counts = np.bincount(masks, minlength=8)
        assert chi2_pvalue(counts, brr_channel(p).probs[x]) > CHI2_P

    def test_scalar_view_is_sorted_indices(self):
        p = PrivacyParams(1.0, 6)
        rng = make_rng(13)
        sizes = set()
        for _ in range(300):
            view = brr_randomize(4, p, rng)
            assert np.all(np.diff(view) > 0)
            sizes.add(view.size)
        assert len(sizes) > 1  # output size genuinely varies


class TestDerivedStreams:
    def test_distinct_paths_differ(self):
        a = derive_rng(0, 1, 0).random(4)
        b = derive_rng(0, 2, 0).random(4)
        assert not np.allclose(a, b)

    def test_same_path_reproduces(self):
        np.testing.assert_array_equal(derive_rng(7, 3, 1).random(8), derive_rng(7, 3, 1).random(8))


class TestViewFiles:
    def test_round_trip_mixed_sizes(self):
        views = [np.array([0, 2, 5]), np.array([], dtype=np.int64), np.array([1])]
        buf = io.BytesIO()
        write_views(buf, views)
        assert buf.getvalue() == b"0,2,5\n\n1\n"
        back = read_views(io.BytesIO(buf.getvalue()), d=6)
        assert [v.tolist() for v in back] == [[0, 2, 5], [], [1]]

    def test_matrix_fast_path_matches_generic(self):
        views = ksubset_randomize_batch(
            np.arange(500) % 9, PrivacyParams(1.0, 9), 3, make_rng(3)
        )
        fast, slow = io.BytesIO(), io.BytesIO()
        write_views(fast, views, d=9)
        write_views(slow, [row for row in views])
        assert fast.getvalue() == slow.getvalue()

    def test_single_symbol_views(self):
        buf = io.BytesIO()
        write_views(buf, np.array([3, 0, 2], dtype=np.int64))
        assert buf.getvalue() == b"3\n0\n2\n"

    def test_membership_matrix_views(self):
        bits = np.array([[True, False, True], [False, False, False]])
        buf = io.BytesIO()
        write_views(buf, bits)
        assert buf.getvalue() == b"0,2\n\n"

    def test_errors_name_the_line(self):
        with pytest.raises(ViewFormatError, match="line 2"):
            read_views(io.BytesIO(b"0,1\n1,x\n"), d=4)
        with pytest.raises(ViewFormatError, match="line 3"):
            read_views(io.BytesIO(b"0\n1\n9\n"), d=4)
        with pytest.raises(ViewFormatError, match="line 1"):
            read_views(io.BytesIO(b"2,1\n"), d=4)
