"""Sampler behavior: blend structure, terminal rules, PER statistics."""
import numpy as np
import pytest

from conftest import fill_buffer, make_spec, random_transition
from mixreplay import strategies
from mixreplay.buffer import RingBuffer
from mixreplay.core import Transition
from mixreplay.errors import InsufficientPopulationError, InvalidConfigError
from mixreplay.interpolation import MixupParams, local_mixup, mixup
from mixreplay.moments import RunningMoments
from mixreplay.neighbors import knn_of_slot
from mixreplay.strategies import (ReplayEngine, StrategyConfig, per_beta,
                                  sample_ct_batch, sample_naive_batch,
                                  sample_nmer_batch, sample_noisy_batch,
                                  sample_per_batch, sample_s4rl_batch,
                                  sample_uniform_batch, update_per_priorities)
from mixreplay.sumtree import SumTree


def recover_lambda(out, x1, x2):
    """Blend weight implied by the output, from the most separated dim."""
    j = int(np.argmax(np.abs(x1 - x2)))
    return (out[j] - x2[j]) / (x1[j] - x2[j])


class TestUniform:
    def test_rows_are_stored_vectors(self):
        rng = np.random.default_rng(81)
        buf, _ = fill_buffer(rng, make_spec(), 30, terminal_every=7)
        batch = sample_uniform_batch(buf, 64, rng)
        for i in range(64):
            s = batch.source_slots[i]
            np.testing.assert_array_equal(batch.flats[i], buf.flats[s])
            assert batch.dones[i] == buf.dones[s]
        assert np.all(batch.importance_weights == 1.0)
        assert not batch.interpolated.any()
        assert np.all(batch.partner_slots == -1)


class TestNmer:
    def test_blends_lie_on_neighbor_segments(self):
        """Each blended row reconstructs as a convex combination of its
        source and a member of the source's true k-neighborhood."""
        rng = np.random.default_rng(82)
        buf, moments = fill_buffer(rng, make_spec(), 60)
        cfg = StrategyConfig(kind="nmer", k=5)
        batch = sample_nmer_batch(buf, moments, cfg, 40, rng)
        assert batch.interpolated.all()  # no terminals in this buffer
        for i in range(40):
            s = int(batch.source_slots[i])
            p = int(batch.partner_slots[i])
            assert p in knn_of_slot(buf, moments, s, 5)
            lam = recover_lambda(batch.flats[i], buf.flats[s], buf.flats[p])
            assert 0.0 <= lam <= 1.0
            np.testing.assert_allclose(
                batch.flats[i], mixup(buf.flats[s], buf.flats[p], lam),
                rtol=0, atol=1e-12)

    def test_single_draw_matches_local_mixup(self):
        """A size-1 batch consumes the stream exactly like a slot draw
        followed by local_mixup."""
        rng = np.random.default_rng(83)
        buf, moments = fill_buffer(rng, make_spec(), 30)
        cfg = StrategyConfig(kind="nmer", k=4)
        a = sample_nmer_batch(buf, moments, cfg, 1, np.random.default_rng(84))
        rng_b = np.random.default_rng(84)
        slot = int(buf.sample_uniform(1, rng_b)[0])
        b = local_mixup(buf, moments, slot, 4, MixupParams(alpha=cfg.alpha),
                        rng_b)
        assert int(a.source_slots[0]) == slot
        np.testing.assert_array_equal(a.flats[0], b.flat)
        assert int(a.partner_slots[0]) == b.neighbor_slot
        assert bool(a.interpolated[0]) == b.was_interpolated

    def test_terminal_sample_rows_pass_through(self):
        rng = np.random.default_rng(85)
        buf, moments = fill_buffer(rng, make_spec(), 40, terminal_every=4)
        cfg = StrategyConfig(kind="nmer", k=3)
        batch = sample_nmer_batch(buf, moments, cfg, 200, rng)
        src_done = buf.dones[batch.source_slots]
        assert src_done.any()  # the draw hit terminals
        for i in np.flatnonzero(src_done):
            assert not batch.interpolated[i]
            assert batch.dones[i]
            assert batch.partner_slots[i] == -1
            np.testing.assert_array_equal(
                batch.flats[i], buf.flats[batch.source_slots[i]])
        # blended rows are never terminal
        assert not batch.dones[batch.interpolated].any()

    def test_interp_fraction_zero_is_uniform(self):
        rng = np.random.default_rng(86)
        buf, moments = fill_buffer(rng, make_spec(), 25)
        cfg = StrategyConfig(kind="nmer", k=3, interp_fraction=0.0)
        a = sample_nmer_batch(buf, moments, cfg, 50, np.random.default_rng(87))
        b = sample_uniform_batch(buf, 50, np.random.default_rng(87))
        np.testing.assert_array_equal(a.flats, b.flats)
        np.testing.assert_array_equal(a.source_slots, b.source_slots)
        assert not a.interpolated.any()

    def test_interp_fraction_gates_expected_share(self):
        """With fraction f, roughly f of non-terminal rows blend."""
        rng = np.random.default_rng(88)
        buf, moments = fill_buffer(rng, make_spec(), 50)
        cfg = StrategyConfig(kind="nmer", k=3, interp_fraction=0.25)
        n = 20_000
        batch = sample_nmer_batch(buf, moments, cfg, n, rng)
        frac = batch.interpolated.mean()
        sd = np.sqrt(0.25 * 0.75 / n)
        assert abs(frac - 0.25) < 4 * sd

    def test_knn1_uses_nearest_neighbor_only(self):
        rng = np.random.default_rng(89)
        buf, moments = fill_buffer(rng, make_spec(), 30)
        cfg = StrategyConfig(kind="knn1_mixup")
        batch = strategies.sample_knn1_batch(buf, moments, cfg, 25, rng)
        for i in range(25):
            s = int(batch.source_slots[i])
            nearest = knn_of_slot(buf, moments, s, 1)[0]
            assert batch.partner_slots[i] == nearest

    def test_insufficient_population_rejected(self):
        rng = np.random.default_rng(90)
        buf, moments = fill_buffer(rng, make_spec(), 5)
        cfg = StrategyConfig(kind="nmer", k=5)  # only 4 others exist
        with pytest.raises(InsufficientPopulationError):
            sample_nmer_batch(buf, moments, cfg, 4, rng)


class TestNaive:
    def test_skip_self_mapping_is_a_bijection(self):
        """pick + (pick >= slot) hits every other slot exactly once."""
        for count in (2, 3, 7):
            for slot in range(count):
                picks = np.arange(count - 1)
                partners = picks + (picks >= slot)
                assert sorted(partners.tolist()) == \
                    [i for i in range(count) if i != slot]

    def test_partner_marginal_matches_widened_nmer(self):
        """Partner frequencies under naive mixup and under nmer with
        k = count - 1 both sit within 4 sd of the uniform marginal."""
        rng = np.random.default_rng(91)
        buf, moments = fill_buffer(rng, make_spec(), 12)
        n = 30_000
        cfg_naive = StrategyConfig(kind="naive_mixup")
        cfg_wide = StrategyConfig(kind="nmer", k=11)
        got_naive = sample_naive_batch(buf, cfg_naive, n, rng).partner_slots
        got_wide = sample_nmer_batch(buf, moments, cfg_wide, n, rng).partner_slots
        p = 1.0 / 12  # marginal over partners is uniform
        sd = np.sqrt(n * p * (1 - p))
        for partners in (got_naive, got_wide):
            counts = np.bincount(partners, minlength=12)
            assert np.all(np.abs(counts - n * p) < 4 * sd)

    def test_partner_never_self_when_excluded(self):
        rng = np.random.default_rng(92)
        buf, _ = fill_buffer(rng, make_spec(), 6)
        cfg = StrategyConfig(kind="naive_mixup", exclude_self=True)
        batch = sample_naive_batch(buf, cfg, 5000, rng)
        assert not np.any(batch.partner_slots == batch.source_slots)

    def test_needs_two_transitions(self):
        rng = np.random.default_rng(93)
        buf, _ = fill_buffer(rng, make_spec(), 1)
        with pytest.raises(InsufficientPopulationError):
            sample_naive_batch(buf, StrategyConfig(kind="naive_mixup"), 1, rng)


class TestCT:
    def _episode_buffer(self, rng, n_eps=4, ep_len=6, capacity=None,
                        terminal_last=False):
        spec = make_spec()
        buf = RingBuffer(spec, capacity or n_eps * ep_len)
        for ep in range(n_eps):
            for st in range(ep_len):
                done = terminal_last and st == ep_len - 1
                buf.insert(random_transition(rng, spec, episode_id=ep,
                                             step_idx=st, done=done))
        return buf

    def test_partners_are_episode_successors(self):
        rng = np.random.default_rng(94)
        buf = self._episode_buffer(rng)
        cfg = StrategyConfig(kind="ct")
        batch = sample_ct_batch(buf, cfg, 300, rng)
        for i in range(300):
            s = int(batch.source_slots[i])
            succ = buf.successor(s)
            if batch.interpolated[i]:
                assert succ is not None
                assert batch.partner_slots[i] == succ
                lam = recover_lambda(batch.flats[i], buf.flats[s],
                                     buf.flats[succ])
                np.testing.assert_allclose(
                    batch.flats[i], mixup(buf.flats[s], buf.flats[succ], lam),
                    rtol=0, atol=1e-12)
            else:
                np.testing.assert_array_equal(batch.flats[i], buf.flats[s])

    def test_last_step_of_episode_passes_through(self):
        """The final stored step has no successor, so it never blends."""
        rng = np.random.default_rng(95)
        buf = self._episode_buffer(rng, n_eps=2, ep_len=4)
        cfg = StrategyConfig(kind="ct")
        batch = sample_ct_batch(buf, cfg, 400, rng)
        last_steps = np.flatnonzero(buf.step_idxs == 3)
        for i in range(400):
            if int(batch.source_slots[i]) in last_steps:
                assert not batch.interpolated[i]

    def test_terminal_endpoints_never_blend(self):
        rng = np.random.default_rng(96)
        buf = self._episode_buffer(rng, terminal_last=True)
        cfg = StrategyConfig(kind="ct")
        batch = sample_ct_batch(buf, cfg, 500, rng)
        # rows whose successor is the terminal step must pass through
        for i in range(500):
            s = int(batch.source_slots[i])
            succ = buf.successor(s)
            if succ is not None and buf.dones[succ]:
                assert not batch.interpolated[i]
        assert not batch.dones[batch.interpolated].any()

    def test_evicted_successor_passes_through(self):
        """Once the ring overwrites a successor, its predecessor stops
        blending instead of pairing with a stranger."""
        rng = np.random.default_rng(97)
        buf = self._episode_buffer(rng, n_eps=3, ep_len=8, capacity=10)
        cfg = StrategyConfig(kind="ct")
        batch = sample_ct_batch(buf, cfg, 500, rng)
        for i in range(500):
            s = int(batch.source_slots[i])
            if buf.successor(s) is None:
                assert not batch.interpolated[i]
                assert batch.partner_slots[i] == -1


class TestS4RL:
    def test_only_state_changes(self):
        rng = np.random.default_rng(98)
        spec = make_spec(ds=3, da=2)
        buf, _ = fill_buffer(rng, spec, 20, terminal_every=5)
        cfg = StrategyConfig(kind="s4rl")
        batch = sample_s4rl_batch(buf, cfg, 100, rng)
        ds, da = 3, 2
        for i in range(100):
            s = int(batch.source_slots[i])
            raw = buf.flats[s]
            out = batch.flats[i]
            np.testing.assert_array_equal(out[ds:ds + da + 1],
                                          raw[ds:ds + da + 1])  # a, r
            np.testing.assert_array_equal(out[ds + da + 1:],
                                          raw[ds + da + 1:])  # s2
            assert batch.dones[i] == buf.dones[s]  # done untouched
            lam = recover_lambda(out[:ds], raw[:ds], raw[ds + da + 1:])
            assert 0.0 <= lam <= 1.0
            np.testing.assert_allclose(
                out[:ds], mixup(raw[:ds], raw[ds + da + 1:], lam),
                rtol=0, atol=1e-12)


class TestNoisy:
    def test_noise_scale_tracks_buffer_spread(self):
        """Per-dimension noise sd lands within 5% of scale * std_j."""
        rng = np.random.default_rng(99)
        spec = make_spec(ds=2, da=1)
        buf = RingBuffer(spec, 200)
        flat_moments = RunningMoments(spec.flat_dim)
        for i in range(200):
            t = random_transition(rng, spec, step_idx=i)
            slot = buf.insert(t)
            flat_moments.update(buf.flats[slot])
        cfg = StrategyConfig(kind="noisy", noise_sigma_scale=0.2)
        n = 100_000
        batch = sample_noisy_batch(buf, flat_moments, cfg, n, rng)
        noise = batch.flats - buf.flats[batch.source_slots]
        got_sd = noise.std(axis=0)
        want_sd = 0.2 * flat_moments.std
        np.testing.assert_allclose(got_sd, want_sd, rtol=0.05)
        assert abs(noise.mean()) < 0.01

    def test_done_untouched(self):
        rng = np.random.default_rng(100)
        buf, _ = fill_buffer(rng, make_spec(), 30, terminal_every=6)
        fm = RunningMoments(buf.spec.flat_dim)
        for i in range(buf.count):
            fm.update(buf.flats[i])
        cfg = StrategyConfig(kind="noisy")
        batch = sample_noisy_batch(buf, fm, cfg, 500, rng)
        np.testing.assert_array_equal(batch.dones,
                                      buf.dones[batch.source_slots])


class TestPER:
    def test_draw_frequencies_proportional(self):
        rng = np.random.default_rng(101)
        buf, _ = fill_buffer(rng, make_spec(), 8)
        tree = SumTree(8)
        pri = np.array([0.5, 1.0, 2.0, 4.0, 0.25, 1.5, 3.0, 0.75])
        tree.set_batch(np.arange(8), pri)
        cfg = StrategyConfig(kind="per")
        n = 80_000
        batch = sample_per_batch(buf, tree, cfg, n, 0, rng)
        counts = np.bincount(batch.source_slots, minlength=8)
        p = pri / pri.sum()
        sd = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3 * sd)

    def test_weights_match_formula_and_cap_at_one(self):
        rng = np.random.default_rng(102)
        buf, _ = fill_buffer(rng, make_spec(), 10)
        tree = SumTree(10)
        pri = rng.uniform(0.1, 5.0, size=10)
        tree.set_batch(np.arange(10), pri)
        cfg = StrategyConfig(kind="per", per_beta_initial=0.4,
                             per_beta_final=0.4)
        batch = sample_per_batch(buf, tree, cfg, 64, 0, rng)
        probs = pri[batch.source_slots] / tree.total
        want = (10 * probs) ** (-0.4)
        want = want / want.max()
        np.testing.assert_allclose(batch.importance_weights, want, rtol=1e-12)
        assert batch.importance_weights.max() == 1.0

    def test_beta_anneal_is_linear_and_clamped(self):
        cfg = StrategyConfig(kind="per", per_beta_initial=0.4,
                             per_beta_final=1.0, per_beta_anneal_steps=20_000)
        assert per_beta(cfg, 0) == 0.4
        assert per_beta(cfg, 10_000) == pytest.approx(0.7)
        assert per_beta(cfg, 20_000) == 1.0
        assert per_beta(cfg, 50_000) == 1.0  # clamps, never overshoots
        flat = StrategyConfig(kind="per")
        assert per_beta(flat, 0) == per_beta(flat, 100_000) == 0.4

    def test_priority_update_math(self):
        """leaf = (|td| + eps)^alpha, bit-for-bit."""
        tree = SumTree(6)
        cfg = StrategyConfig(kind="per", per_alpha=0.6, per_epsilon=1e-6)
        slots = np.array([0, 3, 5])
        tds = np.array([0.5, -2.0, 0.0])
        update_per_priorities(tree, slots, tds, cfg)
        for s, td in zip(slots, tds):
            assert tree.get(int(s)) == (abs(td) + 1e-6) ** 0.6

    def test_fresh_insert_gets_max_priority(self):
        """New transitions enter at max_priority_seen, which starts at 1."""
        rng = np.random.default_rng(103)
        spec = make_spec()
        engine = ReplayEngine(spec, 16, StrategyConfig(kind="per"))
        s0 = engine.insert(random_transition(rng, spec, step_idx=0))
        assert engine.tree.get(s0) == 1.0
        update_per_priorities(engine.tree, np.array([s0]), np.array([9.0]),
                              engine.cfg)
        high = engine.tree.get(s0)
        s1 = engine.insert(random_transition(rng, spec, step_idx=1))
        assert engine.tree.get(s1) == high  # inherits the new maximum


class TestEngine:
    def test_dispatch_every_kind(self):
        rng = np.random.default_rng(104)
        spec = make_spec()
        for kind in strategies.STRATEGY_KINDS:
            engine = ReplayEngine(spec, 64, StrategyConfig(kind=kind, k=3))
            for i in range(40):
                engine.insert(random_transition(rng, spec, episode_id=i // 10,
                                                step_idx=i % 10))
            batch = engine.sample(16, rng, global_step=5)
            assert len(batch) == 16
            assert batch.flats.shape == (16, spec.flat_dim)
            assert np.isfinite(batch.flats).all()

    def test_moments_recompute_after_wrap(self, monkeypatch):
        """Once full, every Nth insert snaps moments to the live rows."""
        monkeypatch.setattr(strategies, "MOMENTS_RECOMPUTE_INTERVAL", 8)
        rng = np.random.default_rng(105)
        spec = make_spec()
        engine = ReplayEngine(spec, 8, StrategyConfig(kind="uniform"))
        for i in range(16):  # wraps at 8, recompute fires at insert 16
            engine.insert(random_transition(rng, spec, step_idx=i))
        live = engine.buffer.features
        np.testing.assert_allclose(engine.feature_moments.mean,
                                   live.mean(axis=0), rtol=1e-13)
        assert engine.feature_moments.count == 8

    def test_update_priorities_noop_without_tree(self):
        rng = np.random.default_rng(106)
        spec = make_spec()
        engine = ReplayEngine(spec, 8, StrategyConfig(kind="uniform"))
        engine.insert(random_transition(rng, spec))
        engine.update_priorities(np.array([0]), np.array([1.0]))  # no error

    def test_same_seed_same_batch_for_every_kind(self):
        rng = np.random.default_rng(107)
        spec = make_spec()
        for kind in strategies.STRATEGY_KINDS:
            engine = ReplayEngine(spec, 64, StrategyConfig(kind=kind, k=3))
            for i in range(50):
                engine.insert(random_transition(rng, spec, episode_id=i // 10,
                                                step_idx=i % 10))
            a = engine.sample(20, np.random.default_rng(314), global_step=3)
            b = engine.sample(20, np.random.default_rng(314), global_step=3)
            np.testing.assert_array_equal(a.flats, b.flats)
            np.testing.assert_array_equal(a.source_slots, b.source_slots)
            np.testing.assert_array_equal(a.importance_weights,
                                          b.importance_weights)


class TestConfigValidation:
    def test_unknown_kind(self):
        with pytest.raises(InvalidConfigError):
            StrategyConfig(kind="fancy")

    def test_bad_numeric_ranges(self):
        with pytest.raises(InvalidConfigError):
            StrategyConfig(kind="nmer", k=0)
        with pytest.raises(InvalidConfigError):
            StrategyConfig(alpha=0.0)
        with pytest.raises(InvalidConfigError):
            StrategyConfig(interp_fraction=1.5)
        with pytest.raises(InvalidConfigError):
            StrategyConfig(per_beta_initial=-0.1)
        with pytest.raises(InvalidConfigError):
            StrategyConfig(per_epsilon=0.0)
        with pytest.raises(InvalidConfigError):
            StrategyConfig(noise_sigma_scale=-1.0)
