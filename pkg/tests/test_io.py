import json

import numpy as np
import pytest

from sarsbl import io
from sarsbl.config import ConfigError, RunConfig
from sarsbl.core import ComplexImage, PhaseHistory, SceneGrid, plan_subapertures
from sarsbl.regularizers import identity
from sarsbl.solver import run_all

from conftest import crandn, polar_problem

GOLDEN_DB = np.array([[0, -1, -2, -5],
                      [-25, -30, -40, -45],
                      [-60, -70, -75, -80],
                      [-88, -99, -150, 3]], dtype=float)
# hand-computed round((db + 100) * 2.55), clipped, rows written top = last array row
GOLDEN_PGM = b"P5\n4 4\n255\n" + bytes([31, 3, 0, 255,
                                        102, 76, 64, 51,
                                        191, 178, 153, 140,
                                        255, 252, 250, 242])


def make_ph(rng, shared=True):
    P, K = 7, 5
    az = np.sort(rng.uniform(0, 2 * np.pi, P))
    k = rng.uniform(1, 3, K) if shared else rng.uniform(1, 3, (P, K))
    chirp = {"omega": 6.03e10, "alpha_chirp": 1e12, "tau0": 1e-6, "c": 299792458.0}
    return PhaseHistory(az, k, crandn(rng, P, K), chirp)


class TestPhaseHistoryFile:
    @pytest.mark.parametrize("shared", [True, False])
    def test_round_trip_bit_identical(self, rng, tmp_path, shared):
        ph = make_ph(rng, shared)
        path = tmp_path / "a.sph"
        io.write_phase_history(path, ph)
        back = io.read_phase_history(path)
        for name in ("azimuths", "k", "samples"):
            assert getattr(back, name).tobytes() == getattr(ph, name).tobytes()
        assert back.chirp == ph.chirp

    def test_payload_layout(self, rng, tmp_path):
        ph = make_ph(rng)
        path = tmp_path / "a.sph"
        io.write_phase_history(path, ph)
        raw = path.read_bytes()
        payload = raw[-ph.n_pulses * ph.n_samples * 16:]
        pairs = np.frombuffer(payload, dtype="<f8").reshape(ph.n_pulses, ph.n_samples, 2)
        np.testing.assert_array_equal(pairs[..., 0], ph.samples.real)
        np.testing.assert_array_equal(pairs[..., 1], ph.samples.imag)
        assert raw.startswith(b"SARSBL phase-history 1\n")

    def test_truncated_payload(self, rng, tmp_path):
        path = tmp_path / "a.sph"
        io.write_phase_history(path, make_ph(rng))
        raw = path.read_bytes()
        path.write_bytes(raw[:-20])
        with pytest.raises(io.FormatError, match=f"byte offset {len(raw) - 20}"):
            io.read_phase_history(path)

    def test_trailing_bytes(self, rng, tmp_path):
        path = tmp_path / "a.sph"
        io.write_phase_history(path, make_ph(rng))
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(io.FormatError, match="trailing"):
            io.read_phase_history(path)

    def test_version_mismatch(self, rng, tmp_path):
        path = tmp_path / "a.sph"
        io.write_phase_history(path, make_ph(rng))
        path.write_bytes(path.read_bytes().replace(b"phase-history 1", b"phase-history 9", 1))
        with pytest.raises(io.VersionError, match="version 9"):
            io.read_phase_history(path)

    def test_bad_magic_and_kind(self, rng, tmp_path):
        path = tmp_path / "a.sph"
        path.write_bytes(b"hello\n")
        with pytest.raises(io.FormatError, match="magic"):
            io.read_phase_history(path)
        io.write_image(path, SceneGrid(2, 2, 1.0), np.zeros(4))
        with pytest.raises(io.FormatError, match="phase-history"):
            io.read_phase_history(path)

    def test_dimension_conflict(self, rng, tmp_path):
        path = tmp_path / "a.sph"
        header = {"pulses": 3, "samples": 2, "azimuths": [0.0, 1.0], "k": [1.0, 2.0],
                  "k_shared": True, "chirp": None}
        io.write_container(path, "phase-history", header, {"samples": np.zeros((3, 2), complex)})
        with pytest.raises(io.DimensionError, match="azimuths"):
            io.read_phase_history(path)
        header["azimuths"] = [0.0, 1.0, 2.0]
        io.write_container(path, "phase-history", header, {"samples": np.zeros((2, 3), complex)})
        with pytest.raises(io.DimensionError, match="samples"):
            io.read_phase_history(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "a.sph"
        io.write_container(path, "phase-history", {"pulses": 1}, {})
        with pytest.raises(io.FormatError, match="samples"):
            io.read_phase_history(path)


class TestImagesAndPosteriors:
    def test_image_round_trip(self, rng, tmp_path):
        g = SceneGrid(3, 2, 1.0)
        v = crandn(rng, 2, 3)
        io.write_image(tmp_path / "x.img", g, v, {"kind": "test"})
        g2, v2, meta = io.read_image(tmp_path / "x.img")
        assert g2 == g and v2.tobytes() == v.tobytes() and meta == {"kind": "test"}
        io.write_image(tmp_path / "r.img", g, np.abs(v))
        assert io.read_image(tmp_path / "r.img")[1].dtype == np.float64
        with pytest.raises(io.DimensionError):
            io.write_image(tmp_path / "y.img", g, np.zeros(5))

    def test_posterior_round_trip(self, tmp_path):
        grid, spec, ph = polar_problem(n=16, pulses=90)
        (post,) = run_all(ph, plan_subapertures(ph.azimuths, 360, 0), grid, identity(grid))
        cov = post.covariance_diagonal()
        io.write_posterior(tmp_path / "p.post", post, "bcd", cov)
        back = io.read_posterior(tmp_path / "p.post")
        assert back.mu.values.tobytes() == post.mu.values.tobytes()
        assert back.alpha.tobytes() == post.alpha.tobytes() and back.beta == post.beta
        assert back.theta.diag.tobytes() == post.theta.diag.tobytes()
        assert back.covariance_diagonal().tobytes() == cov.tobytes()
        assert back.trace == post.trace and back.iterations == post.iterations

    def test_point_estimate_round_trip(self, rng, tmp_path):
        img = ComplexImage(SceneGrid(4, 4, 1.0), crandn(rng, 16))
        io.write_posterior(tmp_path / "n.post", img, "nufft")
        back = io.read_posterior(tmp_path / "n.post")
        assert isinstance(back, ComplexImage) and back.values.tobytes() == img.values.tobytes()


class TestGrayscale:
    def test_golden_4x4(self, tmp_path):
        io.write_pgm(tmp_path / "g.pgm", io.db_to_gray(GOLDEN_DB))
        assert (tmp_path / "g.pgm").read_bytes() == GOLDEN_PGM

    def test_endpoints(self):
        np.testing.assert_array_equal(io.db_to_gray([-100.0, 0.0, -50.0]), [0, 255, 128])

    def test_pgm_round_trip(self, tmp_path):
        g = io.db_to_gray(GOLDEN_DB)
        io.write_pgm(tmp_path / "g.pgm", g)
        np.testing.assert_array_equal(io.read_pgm(tmp_path / "g.pgm"), g)

    def test_db_image_and_zero(self, tmp_path):
        io.write_db_image(tmp_path / "z.pgm", np.zeros((2, 3)))
        assert np.all(io.read_pgm(tmp_path / "z.pgm") == 0)
        io.write_db_image(tmp_path / "a.pgm", np.array([[1.0, 0.1]]))
        np.testing.assert_array_equal(io.read_pgm(tmp_path / "a.pgm"), [[255, 204]])


class TestRunConfig:
    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"method": "l1", "span": 30, "overlap": 5, "lam": 0.1}))
        cfg = RunConfig.load(p, {"span": 20.0, "lam": None})
        assert cfg.method == "l1" and cfg.span == 20.0 and cfg.overlap == 5.0 and cfg.lam == 0.1

    @pytest.mark.parametrize("data", [{"method": "fft"}, {"regularizer": "wavelet"},
                                      {"overlap": 50}, {"eps": 0}, {"nx": 0}, {"bogus": 1},
                                      {"nx": 2.5}, {"simulation": []}, {"lam": "x"}])
    def test_invalid(self, data):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "missing.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "bad.json")
