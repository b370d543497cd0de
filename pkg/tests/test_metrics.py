import time

import numpy as np
import pytest

from sarsbl.core import ComplexImage, SceneGrid
from sarsbl.metrics import (RegionSpec, TimedRun, background_mode, log_histogram, region_variance,
                            timed, timing_report, to_db)


class TestDb:
    def test_examples(self):
        db = to_db(np.array([2.0, 0.2, 2e-6, 0.0]))
        np.testing.assert_allclose(db, [0.0, -20.0, -100.0, -100.0])

    def test_scale_invariant(self, rng):
        f = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        np.testing.assert_allclose(to_db(f), to_db((3 - 4j) * f), atol=1e-12)

    def test_zero_image(self):
        with pytest.raises(ValueError):
            to_db(np.zeros(4))

    def test_complex_image(self):
        img = ComplexImage(SceneGrid(2, 1, 1.0), [1j, 0.1])
        np.testing.assert_allclose(to_db(img), [[0.0, -20.0]])


class TestRegion:
    def test_constant(self):
        img = np.full((5, 5), 2 * np.exp(1j * 0.3))
        assert region_variance(img, RegionSpec(1, 1, 3, 3)) == pytest.approx(0, abs=1e-28)

    def test_two_values(self):
        img = np.array([[0, 2], [0, -2j]])
        assert region_variance(img, RegionSpec(0, 0, 2, 2)) == pytest.approx(4 / 3)

    def test_phase_invariance(self, rng):
        mag = rng.uniform(0, 1, (6, 6))
        ph = np.exp(1j * rng.uniform(0, 6, (6, 6)))
        r = RegionSpec(1, 0, 4, 5)
        assert region_variance(mag * ph, r) == pytest.approx(region_variance(mag, r))

    def test_invalid(self):
        with pytest.raises(ValueError):
            RegionSpec(0, 0, 1, 1)
        with pytest.raises(ValueError):
            RegionSpec(-1, 0, 2, 2)
        with pytest.raises(ValueError):
            region_variance(np.zeros((4, 4)), RegionSpec(3, 3, 2, 2))
        with pytest.raises(ValueError):
            region_variance(np.zeros(16), RegionSpec(0, 0, 2, 2))

    def test_parse_and_centered(self):
        assert RegionSpec.parse("1, 2,3,4") == RegionSpec(1, 2, 3, 4)
        assert RegionSpec.centered((100, 100), 50) == RegionSpec(25, 25, 50, 50)
        with pytest.raises(ValueError):
            RegionSpec.parse("1,2,3")


class TestHistogram:
    def test_single_bin(self):
        h = log_histogram(np.full(10, 3.0), bins=8)
        assert h.occupied().size == 1 and h.counts.sum() == 10

    def test_two_decades(self):
        h = log_histogram(np.array([1.0] * 5 + [10.0] * 5), bins=10)
        occ = h.occupied()
        assert occ.size == 2 and h.underflow == 0
        centres = 0.5 * (h.edges[occ] + h.edges[occ + 1])
        assert centres[1] - centres[0] == pytest.approx(0.9)
        assert h.edges[occ[0]] == pytest.approx(0.0) and h.edges[occ[1] + 1] == pytest.approx(1.0)

    def test_underflow(self):
        h = log_histogram(np.array([0.0, 0.0, 1.0, 2.0]), bins=4)
        assert h.underflow == 2 and h.counts.sum() == 2

    def test_bins_validated(self):
        with pytest.raises(ValueError):
            log_histogram(np.ones(3), bins=1)

    def test_background_mode(self, rng):
        a = np.concatenate([np.full(900, 1e-3), np.full(100, 1.0)])
        assert background_mode(a) == pytest.approx(-3, abs=0.02)
        assert background_mode(np.zeros(10)) < -300


class TestTiming:
    def test_single(self):
        rep = timing_report([TimedRun("nufft", 1.0)])
        assert len(rep["rows"]) == 1 and rep["ordering_holds"]

    def test_forced_sleep_ordering(self):
        runs = []
        with timed("nufft", runs):
            time.sleep(0.01)
        with timed("l1", runs, workers=2, windows=12):
            time.sleep(0.05)
        rep = timing_report(runs)
        assert [r["method"] for r in rep["rows"]] == ["nufft", "l1"]
        assert rep["ordering_holds"] and rep["rows"][1]["workers"] == 2

    def test_violation_detected(self):
        rep = timing_report([TimedRun("nufft", 2.0), TimedRun("bcd-eps0.1", 1.0)])
        assert not rep["ordering_holds"]

    def test_empty(self):
        with pytest.raises(ValueError):
            timing_report([])
