"""Mixup algebra, the Beta weight sampler, and local neighborhood blends."""
import numpy as np
import pytest

from conftest import fill_buffer, make_spec
from mixreplay.buffer import RingBuffer
from mixreplay.core import Transition
from mixreplay.errors import InvalidInputError
from mixreplay.interpolation import (InterpolationOutcome, MixupParams,
                                     local_mixup, mixup, mixup_batch,
                                     sample_lambda)
from mixreplay.moments import RunningMoments
from mixreplay.neighbors import knn_of_slot


class TestMixupAlgebra:
    def test_identity_at_lambda_one(self):
        """mixup(x1, x2, 1) returns x1 exactly."""
        rng = np.random.default_rng(51)
        for _ in range(200):
            x1 = rng.normal(size=6)
            x2 = rng.normal(size=6)
            np.testing.assert_array_equal(mixup(x1, x2, 1.0), x1)

    def test_other_endpoint_at_lambda_zero(self):
        rng = np.random.default_rng(52)
        x1, x2 = rng.normal(size=4), rng.normal(size=4)
        np.testing.assert_array_equal(mixup(x1, x2, 0.0), x2)

    def test_symmetry_is_bitwise(self):
        """mixup(x1, x2, lam) == mixup(x2, x1, 1 - lam), floats and all.

        Holds because the weights are canonicalized to a pair that is
        invariant under the swap; a naive lam / (1 - lam) split only
        agrees up to rounding.
        """
        rng = np.random.default_rng(53)
        for _ in range(2000):
            x1 = rng.normal(size=5)
            x2 = rng.normal(size=5)
            lam = float(rng.random())
            a = mixup(x1, x2, lam)
            b = mixup(x2, x1, 1.0 - lam)
            np.testing.assert_array_equal(a, b)

    def test_midpoint(self):
        x1 = np.array([0.0, 2.0, -4.0])
        x2 = np.array([2.0, 0.0, 4.0])
        np.testing.assert_array_equal(mixup(x1, x2, 0.5), [1.0, 1.0, 0.0])

    def test_convex_hull(self):
        """Every output component stays inside [min, max] of the endpoints."""
        rng = np.random.default_rng(54)
        for _ in range(2000):
            x1 = rng.normal(size=8) * 10.0
            x2 = rng.normal(size=8) * 10.0
            lam = float(rng.random())
            out = mixup(x1, x2, lam)
            lo = np.minimum(x1, x2)
            hi = np.maximum(x1, x2)
            assert np.all(out >= lo) and np.all(out <= hi)

    def test_batch_matches_scalar_calls(self):
        rng = np.random.default_rng(55)
        X1 = rng.normal(size=(64, 7))
        X2 = rng.normal(size=(64, 7))
        lams = rng.random(64)
        batch = mixup_batch(X1, X2, lams)
        for i in range(64):
            np.testing.assert_array_equal(batch[i], mixup(X1[i], X2[i], lams[i]))

    def test_rejects_bad_lambda_and_shapes(self):
        x = np.zeros(3)
        with pytest.raises(InvalidInputError):
            mixup(x, x, 1.5)
        with pytest.raises(InvalidInputError):
            mixup(x, x, -0.1)
        with pytest.raises(InvalidInputError):
            mixup(x, np.zeros(4), 0.5)
        with pytest.raises(InvalidInputError):
            mixup(x, x, float("nan"))


class TestLambdaSampler:
    def test_alpha_one_is_uniform(self):
        """Beta(1, 1) draws pass a KS test against Uniform[0, 1] at the
        0.001 level (critical D = 1.949 / sqrt(n))."""
        rng = np.random.default_rng(56)
        params = MixupParams(alpha=1.0)
        n = 20_000
        draws = np.sort([sample_lambda(params, rng) for _ in range(n)])
        i = np.arange(1, n + 1)
        d = max(np.max(i / n - draws), np.max(draws - (i - 1) / n))
        assert d < 1.9495 / np.sqrt(n)

    def test_mean_matches_analytic(self):
        """Symmetric Beta has mean 1/2 and sd 1/(2 sqrt(2a + 1))."""
        rng = np.random.default_rng(57)
        for alpha in (0.4, 1.0, 3.0):
            draws = rng.beta(alpha, alpha, size=100_000)
            sd = 0.5 / np.sqrt(2 * alpha + 1)
            assert abs(draws.mean() - 0.5) < 3 * sd / np.sqrt(draws.size)

    def test_range(self):
        rng = np.random.default_rng(59)
        params = MixupParams(alpha=0.2)
        draws = [sample_lambda(params, rng) for _ in range(1000)]
        assert min(draws) >= 0.0 and max(draws) <= 1.0

    def test_bad_alpha_rejected(self):
        with pytest.raises(InvalidInputError):
            MixupParams(alpha=0.0)
        with pytest.raises(InvalidInputError):
            MixupParams(alpha=-1.0)


def _buffer_with_dones(rng, spec, n, done_slots):
    buf = RingBuffer(spec, n)
    moments = RunningMoments(spec.feature_dim)
    for i in range(n):
        t = Transition(rng.normal(size=spec.state_dim),
                       rng.uniform(-1, 1, size=spec.action_dim),
                       float(rng.normal()), rng.normal(size=spec.state_dim),
                       i in done_slots, 0, i)
        slot = buf.insert(t)
        moments.update(buf.features[slot])
    return buf, moments


class TestLocalMixup:
    def test_blend_uses_a_true_neighbor(self):
        """Output lies on the segment between the sample and one of its k
        nearest neighbors, reconstructible from the reported lambda."""
        rng = np.random.default_rng(61)
        buf, moments = fill_buffer(rng, make_spec(), 40)
        out = local_mixup(buf, moments, 3, 5, MixupParams(), rng)
        assert out.was_interpolated
        hood = knn_of_slot(buf, moments, 3, 5)
        assert out.neighbor_slot in hood
        expect = mixup(buf.flats[3], buf.flats[out.neighbor_slot],
                       out.lambda_used)
        np.testing.assert_array_equal(out.flat, expect)
        assert out.done is False

    def test_terminal_sample_passes_through_without_randomness(self):
        """A terminal sample returns unmixed and leaves the rng untouched."""
        rng = np.random.default_rng(62)
        spec = make_spec()
        buf, moments = _buffer_with_dones(rng, spec, 20, done_slots={4})
        probe = np.random.default_rng(63)
        before = probe.bit_generator.state["state"]["state"]
        out = local_mixup(buf, moments, 4, 3, MixupParams(), probe)
        after = probe.bit_generator.state["state"]["state"]
        assert before == after
        assert not out.was_interpolated
        assert out.lambda_used == 1.0
        assert out.done is True
        assert out.neighbor_slot == -1
        np.testing.assert_array_equal(out.flat, buf.flats[4])

    def test_terminal_neighbor_passes_through(self):
        """If the picked neighbor is terminal the sample returns unmixed."""
        spec = make_spec(ds=1, da=1)
        buf = RingBuffer(spec, 4)
        moments = RunningMoments(2)
        rows = [(0.0, False), (0.01, True), (5.0, False), (9.0, False)]
        for i, (v, done) in enumerate(rows):
            t = Transition(np.array([v]), np.array([0.0]), 0.0,
                           np.array([0.0]), done, 0, i)
            buf.insert(t)
            moments.update(buf.features[i])
        rng = np.random.default_rng(64)
        out = local_mixup(buf, moments, 0, 1, MixupParams(), rng)
        # nearest neighbor of slot 0 is the terminal slot 1
        assert not out.was_interpolated
        assert out.lambda_used == 1.0
        np.testing.assert_array_equal(out.flat, buf.flats[0])
        assert out.sample_slot == 0

    def test_seeded_repeatability(self):
        rng = np.random.default_rng(65)
        buf, moments = fill_buffer(rng, make_spec(), 30)
        a = local_mixup(buf, moments, 2, 4, MixupParams(),
                        np.random.default_rng(66))
        b = local_mixup(buf, moments, 2, 4, MixupParams(),
                        np.random.default_rng(66))
        np.testing.assert_array_equal(a.flat, b.flat)
        assert a.neighbor_slot == b.neighbor_slot
        assert a.lambda_used == b.lambda_used

    def test_bad_slot_rejected(self):
        rng = np.random.default_rng(67)
        buf, moments = fill_buffer(rng, make_spec(), 5)
        with pytest.raises(InvalidInputError):
            local_mixup(buf, moments, 5, 2, MixupParams(), rng)
