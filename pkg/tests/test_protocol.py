import unittest

from assrbci.protocol import (
    ProtocolConfig,
    condition_seed,
    epoch_seed,
    schedule_trials,
    stimulus_timeline,
)
from assrbci.stimgen import Direction, StimulusKind


class TestProtocolConfig(unittest.TestCase):
    def test_defaults(self):
        """check the default protocol"""
        cfg = ProtocolConfig()
        self.assertEqual(cfg.frequency(Direction.left), 25.0)
        self.assertEqual(cfg.frequency(Direction.center), 40.0)
        self.assertEqual(cfg.frequency(Direction.right), 60.0)
        self.assertEqual(cfg.n_trials, 30)
        self.assertEqual(cfg.inter_stimulus_gap, 0.375)
        self.assertEqual(cfg.block_break, 10.0)
        self.assertEqual(len(cfg.conditions), 12)

    def test_conditions_order(self):
        """check conditions list kinds outermost"""
        cfg = ProtocolConfig(
            stimulus_kinds=(StimulusKind.clicks, StimulusKind.sam),
            stimulus_lengths=(3, 0.5),
        )
        self.assertEqual(
            cfg.conditions,
            [
                (StimulusKind.clicks, 3.0),
                (StimulusKind.clicks, 0.5),
                (StimulusKind.sam, 3.0),
                (StimulusKind.sam, 0.5),
            ],
        )

    def test_target_of(self):
        """check block structure of trial targets"""
        cfg = ProtocolConfig()
        self.assertEqual(cfg.target_of(1), Direction.left)
        self.assertEqual(cfg.target_of(10), Direction.left)
        self.assertEqual(cfg.target_of(11), Direction.center)
        self.assertEqual(cfg.target_of(30), Direction.right)
        for trial in (0, 31):
            with self.assertRaises(ValueError):
                cfg.target_of(trial)

    def test_invalid(self):
        """check invalid protocols are rejected"""
        cases = [
            dict(direction_frequencies={Direction.left: 25.0, Direction.right: 60.0}),
            dict(
                direction_frequencies={
                    Direction.left: 25.0,
                    Direction.center: 25.0,
                    Direction.right: 60.0,
                }
            ),
            dict(blocks=(Direction.left, Direction.left, Direction.right)),
            dict(trials_per_block=1),
            dict(inter_stimulus_gap=-0.1),
            dict(block_break=-1),
            dict(stimulus_lengths=()),
            dict(stimulus_lengths=(1.0, 1.0)),
            dict(stimulus_lengths=(0.0,)),
            dict(stimulus_kinds=()),
        ]
        for kwargs in cases:
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ValueError):
                    ProtocolConfig(**kwargs)


class TestSchedule(unittest.TestCase):
    def test_plan_shape(self):
        """check every trial presents each direction once"""
        cfg = ProtocolConfig()
        plan = schedule_trials(cfg, seed=7)
        self.assertEqual(len(plan), 30)
        self.assertEqual([t.index for t in plan], list(range(1, 31)))
        for trial in plan:
            self.assertEqual(sorted(d.code for d in trial.order), [0, 1, 2])
        targets = [t.target for t in plan]
        self.assertEqual(targets.count(Direction.left), 10)
        self.assertEqual(targets[:10], [Direction.left] * 10)
        self.assertEqual(targets[20:], [Direction.right] * 10)

    def test_seeded(self):
        """check plans depend only on the seed"""
        cfg = ProtocolConfig()
        self.assertEqual(schedule_trials(cfg, 3), schedule_trials(cfg, 3))
        orders = {tuple(t.order for t in schedule_trials(cfg, s)) for s in range(5)}
        self.assertGreater(len(orders), 1)

    def test_orders_vary(self):
        """check presentation orders are shuffled across trials"""
        plan = schedule_trials(ProtocolConfig(), seed=0)
        self.assertGreater(len({t.order for t in plan}), 1)

    def test_timeline(self):
        """check onsets follow the gaps and block breaks"""
        cfg = ProtocolConfig(trials_per_block=2)
        plan = schedule_trials(cfg, seed=1)
        timeline = stimulus_timeline(cfg, plan, length=1.0)
        self.assertEqual(len(timeline), 18)
        self.assertEqual(timeline[0].onset, 0.0)
        self.assertAlmostEqual(timeline[1].onset, 1.375)
        # trial 2 follows trial 1 directly
        self.assertAlmostEqual(timeline[3].onset, 3 * 1.375)
        # trial 3 starts a new block
        self.assertAlmostEqual(timeline[6].onset, 6 * 1.375 - 0.375 + 10.0)
        self.assertEqual([e.direction for e in timeline[:3]], list(plan[0].order))


class TestSeeds(unittest.TestCase):
    def test_condition_seed(self):
        """check condition seeds are stable and distinct"""
        a = condition_seed(0, StimulusKind.sam, 0.5)
        self.assertEqual(a, condition_seed(0, StimulusKind.sam, 0.5))
        self.assertNotEqual(a, condition_seed(1, StimulusKind.sam, 0.5))
        self.assertNotEqual(a, condition_seed(0, StimulusKind.fam, 0.5))
        self.assertNotEqual(a, condition_seed(0, StimulusKind.sam, 1.0))

    def test_epoch_seed(self):
        """check epoch seeds depend on trial, direction and salt"""
        base = epoch_seed(123, 1, Direction.left)
        self.assertEqual(base, epoch_seed(123, 1, Direction.left))
        self.assertNotEqual(base, epoch_seed(123, 2, Direction.left))
        self.assertNotEqual(base, epoch_seed(123, 1, Direction.right))
        self.assertNotEqual(base, epoch_seed(123, 1, Direction.left, salt=1))
