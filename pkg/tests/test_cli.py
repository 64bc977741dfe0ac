import json

import numpy as np
import pytest

from lindyn.cli import main, worker_count
from lindyn.presets import REGISTRY, build_preset, preset_names


def run(args):
    return main(args)


class TestPresetFidelity:
    """Each preset weight satisfies its defining level constraints."""

    rng = np.random.default_rng(2)

    def sample(self, lo=-50.0, hi=50.0, n=1000):
        return self.rng.uniform(lo, hi, n)

    def test_bridge_presets(self):
        cases = {
            "ex3.5": (2.0, 1.0),
            "ex3.6": (0.5, 1.0),
            "ex3.7": (4.0, 2.0),
            "ex4.3a": (2.0, 1.0),
            "ex4.3b": (0.5, 1.0),
        }
        for name, (left, right) in cases.items():
            w = build_preset(name).weight
            ts = self.sample()
            vals = w(ts)
            assert np.all(vals[ts <= -1.0] == left)
            assert np.all(vals[ts >= 1.0] == right)
            mid = ts[(ts > -1) & (ts < 1)]
            expected = left + (mid + 1) / 2 * (right - left)
            assert np.allclose(w(mid), expected, rtol=1e-12, atol=0)

    def test_heavily_pinned_bridge(self):
        # the pinned levels: 4 = M and 2 = 1 + delta with M >= 2 + 2 delta
        w = build_preset("ex3.7").weight
        assert w(0.0) == 3.0

    def test_telescoping_preset(self):
        op = build_preset("ex3.8", depth=200)
        w = op.weight
        ms = np.arange(1, 150)
        assert np.allclose(w(-ms.astype(float)), (ms + 1) / ms, rtol=1e-15)
        ts = self.rng.uniform(0, 50, 500)
        assert np.all(w(ts) == 0.5)

    def test_shift_preset_weights(self):
        s = build_preset("rem3.10")
        assert s.weight_fn(0) == 0.5 and s.weight_fn(7) == 0.5
        assert s.weight_fn(-3) == pytest.approx(4.0 / 3.0)

    def test_names(self):
        for name in preset_names():
            build_preset(name)
        with pytest.raises(KeyError):
            build_preset("nope")


class TestExamplesCommand:
    def test_all_pass(self, capsys):
        code = run(["examples", "ex4.3b", "ex3.12-condition"])
        out = capsys.readouterr().out
        assert code == 0
        assert "3/3 expectations matched" in out

    def test_unknown_id_exits_2(self, capsys):
        assert run(["examples", "not-an-id"]) == 2

    def test_expectation_failure_exits_1(self, capsys, monkeypatch):
        import lindyn.presets as presets
        from dataclasses import replace

        ex = REGISTRY["ex4.3b"]
        flipped = replace(ex.expectations[0],
                          expected="NOT_SATISFIED_UP_TO_HORIZON")
        broken = presets.GoldenExample(ex.example_id, ex.preset, (flipped,),
                                      ex.note)
        monkeypatch.setitem(REGISTRY, "ex4.3b", broken)
        assert run(["examples", "ex4.3b"]) == 1

    def test_registry_covers_required_ids(self):
        required = {"ex3.5", "ex3.6", "ex3.7", "ex3.8", "rem3.10",
                    "ex4.3a", "ex4.3b", "ex3.12-condition"}
        assert required <= set(REGISTRY)


class TestClassifyCommand:
    def config(self, tmp_path, **overrides):
        cfg = {
            "operator": {"preset": "ex3.5"},
            "space": {"kind": "C0"},
            "grid": {"half_width": 64.0, "step": 0.25},
            "window": {"m": 1.0},
            "horizon": 200,
            "tol": 1e-2,
        }
        cfg.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return str(path)

    def test_c0_verdicts(self, tmp_path, capsys):
        code = run(["classify", "--config", self.config(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("SATISFIED") == 2
        assert "NOT_SATISFIED" not in out

    def test_inverse_flag(self, tmp_path, capsys):
        cfg = self.config(tmp_path, operator={"preset": "ex3.6"},
                          tol=2e-2, space={"kind": "L2"})
        code = run(["classify", "--config", cfg, "--inverse"])
        out = capsys.readouterr().out
        assert code == 0
        line = [l for l in out.splitlines() if l.startswith("CESARO_SOLID")]
        assert line and "NOT_SATISFIED" not in line[0]

    def test_supercyclic_both_directions(self, tmp_path, capsys):
        cfg = self.config(tmp_path, operator={"preset": "ex3.7"},
                          space={"kind": "L2"}, window={"m": 2.0}, tol=1e-6)
        run(["classify", "--config", cfg])
        fwd = capsys.readouterr().out
        run(["classify", "--config", cfg, "--inverse"])
        rev = capsys.readouterr().out
        for out in (fwd, rev):
            sup = [l for l in out.splitlines()
                   if l.startswith("SUPERCYCLIC_SOLID")]
            ces = [l for l in out.splitlines()
                   if l.startswith("CESARO_SOLID")]
            assert "NOT_SATISFIED" not in sup[0]
            assert "NOT_SATISFIED" in ces[0]

    def test_jsonl_output_deterministic(self, tmp_path, capsys):
        cfg = self.config(tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run(["classify", "--config", cfg, "--out", str(out_a)])
        run(["classify", "--config", cfg, "--out", str(out_b)])
        capsys.readouterr()
        assert (out_a / "verdicts.jsonl").read_bytes() == \
            (out_b / "verdicts.jsonl").read_bytes()

    def test_config_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["classify", "--config", str(bad)]) == 2
        cfg = self.config(tmp_path, space={"kind": "H1"})
        assert run(["classify", "--config", cfg]) == 2
        cfg = self.config(tmp_path, grid={"half_width": 64.0, "step": 0.3})
        assert run(["classify", "--config", cfg]) == 2

    def test_segal_requires_tau(self, tmp_path, capsys):
        cfg = self.config(tmp_path, space={"kind": "SEGAL"})
        assert run(["classify", "--config", cfg]) == 2

    def test_segal_with_constant_tau(self, tmp_path, capsys):
        cfg = self.config(
            tmp_path,
            space={"kind": "SEGAL",
                   "tau": {"breakpoints": [0.0], "values": [0.25]}},
            window={"m": 1.0, "eps": 0.5},
        )
        assert run(["classify", "--config", cfg]) == 0

    def test_inline_operator(self, tmp_path, capsys):
        cfg = self.config(
            tmp_path,
            operator={
                "alpha": {"kind": "translation", "shift": -1.0},
                "weight": {"breakpoints": [-1.0, 1.0], "values": [2.0, 1.0]},
            },
        )
        assert run(["classify", "--config", cfg]) == 0


class TestOtherCommands:
    def test_orbit_csv(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"operator": {"preset": "ex3.5"},
                                   "horizon": 10}))
        code = run(["orbit", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "orbit.csv").read_text().strip().splitlines()
        assert len(rows) == 11

    def test_adjoint_command(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"operator": {"preset": "ex4.3a"},
                                   "window": {"m": 1.0}, "horizon": 200,
                                   "tol": 1e-2}))
        code = run(["adjoint", "--config", str(cfg), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "ADJOINT_CESARO" in out
        assert (tmp_path / "adjoint.jsonl").exists()

    def test_porosity_modes(self, tmp_path, capsys):
        assert run(["porosity", "--mode", "corollary",
                    "--out", str(tmp_path)]) == 0
        rec = json.loads((tmp_path / "porosity.jsonl").read_text())
        assert rec["floor_holds"] and rec["min_orbit_sup"] >= 1.0
        assert run(["porosity", "--mode", "singleton", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        last = json.loads(out.strip().splitlines()[-1])
        assert last["probe_witness_found"] is True
        assert run(["porosity", "--mode", "theorem", "--seed", "5"]) == 0
        out = capsys.readouterr().out
        rec = json.loads(out.strip().splitlines()[-1])
        assert rec["refill_in_gamma_g"] is True
        assert rec["probe_witness_found"] is False

    def test_porosity_scene_file(self, tmp_path, capsys):
        from lindyn.porosity import random_scene

        scene = random_scene(np.random.default_rng(0))
        path = tmp_path / "scene.json"
        path.write_text(scene.to_json())
        assert run(["porosity", "--scene", str(path)]) == 0
        rec = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert rec["lift_in_gamma_h"] is True


class TestWorkerCount:
    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("LINDYN_THREADS", "2")
        assert worker_count() == 2
        monkeypatch.setenv("LINDYN_THREADS", "junk")
        from lindyn.errors import ConfigError
        with pytest.raises(ConfigError):
            worker_count()

    def test_examples_respect_cap(self, monkeypatch, capsys):
        monkeypatch.setenv("LINDYN_THREADS", "1")
        assert run(["examples", "ex4.3b"]) == 0
