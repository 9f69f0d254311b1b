import json

import numpy as np
import pytest

from nhspectra.cli import load_preset, main, run, validate_config
from nhspectra.errors import ConfigInvalid
from nhspectra.model import model_from_dict

STD_HN = {"type": "one_band", "hops": [[-1, 0.5, 0.0], [1, 2.0, 0.0]]}
TRIPLE = {
    "type": "one_band",
    "hops": [[-2, 0.5, 0.0], [-1, 1.5, 0.0], [1, 0.5, 0.0], [2, 1.5, 0.0]],
}


def cfg(task, model=STD_HN, params=None, out="run"):
    c = {"schemaVersion": 1, "task": task, "model": model, "out": out}
    if params is not None:
        c["params"] = params
    return c


class TestValidation:
    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigInvalid):
            validate_config({**cfg("spectrum"), "mystery": 1})

    def test_unknown_param_rejected(self):
        with pytest.raises(ConfigInvalid):
            validate_config(cfg("spectrum", params={"numQ": 4}))

    def test_bad_schema_version(self):
        c = cfg("spectrum")
        c["schemaVersion"] = 2
        with pytest.raises(ConfigInvalid):
            validate_config(c)

    def test_nonpositive_tolerance_rejected(self):
        with pytest.raises(ConfigInvalid):
            validate_config(cfg("verify", params={"tolE": 0.0}))

    def test_num_k_minimum_is_exit_2(self, tmp_path):
        code, _ = run(cfg("spectrum", params={"numK": 4}, out=str(tmp_path / "x")))
        assert code == 2

    def test_unknown_task(self):
        with pytest.raises(ConfigInvalid):
            validate_config(cfg("resonate"))


class TestTasks:
    def test_spectrum_outputs_and_determinism(self, tmp_path):
        c = cfg("spectrum", params={"numK": 64}, out=str(tmp_path / "a"))
        code, manifest = run(c)
        assert code == 0
        data1 = (tmp_path / "a_pbc.csv").read_bytes()
        assert data1.splitlines()[0] == b"band,k,reE,imE"
        assert len(data1.splitlines()) == 65
        code, _ = run(cfg("spectrum", params={"numK": 64}, out=str(tmp_path / "b")))
        data2 = (tmp_path / "b_pbc.csv").read_bytes()
        assert data1 == data2
        assert manifest["status"] == "ok"
        assert manifest["summary"]["bands"] == 1

    def test_obc_with_thermodynamic(self, tmp_path):
        c = cfg(
            "obc",
            params={"L": 20, "thermodynamic": True, "thetaGrid": 60},
            out=str(tmp_path / "o"),
        )
        code, manifest = run(c)
        assert code == 0
        lines = (tmp_path / "o_obc.csv").read_text().splitlines()
        sources = {ln.split(",")[0] for ln in lines[1:]}
        assert sources == {"finite(20)", "thermodynamic"}

    def test_agbz_task_with_implicit(self, tmp_path):
        c = cfg(
            "agbz",
            params={"thetaGrid": 60, "implicit": True},
            out=str(tmp_path / "g"),
        )
        code, manifest = run(c)
        assert code == 0
        lines = (tmp_path / "g_agbz.csv").read_text().splitlines()
        assert lines[0] == "reBeta,imBeta,labelLow,labelHigh,theta,reE,imE"
        coeffs = json.loads((tmp_path / "g_agbz_implicit.json").read_text())
        assert all(len(row) == 4 for row in coeffs)

    def test_gbz_task(self, tmp_path):
        code, manifest = run(
            cfg("gbz", params={"thetaGrid": 60}, out=str(tmp_path / "z"))
        )
        assert code == 0
        lines = (tmp_path / "z_gbz.csv").read_text().splitlines()
        # standard chain: the whole aGBZ is the GBZ, radius sqrt(t-1/t1)
        for ln in lines[1:]:
            re_b, im_b = (float(v) for v in ln.split(",")[:2])
            assert abs(abs(complex(re_b, im_b)) - 0.5) < 1e-6

    def test_raster_task_value_set(self, tmp_path):
        model = {
            "type": "one_band",
            "hops": [[-2, 0.5, 0], [-1, 1.3, 0], [1, 0.7, 0], [2, 1.5, 0]],
        }
        c = cfg(
            "winding-raster",
            model=model,
            params={"resolution": [48, 48]},
            out=str(tmp_path / "r"),
        )
        code, manifest = run(c)
        assert code == 0
        vals = set()
        for ln in (tmp_path / "r_raster.csv").read_text().splitlines()[1:]:
            w = ln.split(",")[2]
            if w != "NA":
                vals.add(int(w))
        assert vals == {0, 1, 2}
        assert manifest["summary"]["definedValues"] == [0, 1, 2]

    def test_intersections_task_json(self, tmp_path):
        c = cfg(
            "intersections",
            model=TRIPLE,
            params={"numK": 1024},
            out=str(tmp_path / "i"),
        )
        code, manifest = run(c)
        assert code == 0
        report = json.loads((tmp_path / "i_intersections.json").read_text())
        assert len(report) == 1
        assert report[0]["n"] == 3
        assert len(report[0]["kSolutions"]) == 3

    def test_verify_task_manifest(self, tmp_path):
        c = cfg("verify", model=TRIPLE, params={"numK": 1024}, out=str(tmp_path / "v"))
        code, manifest = run(c)
        assert code == 0
        assert manifest["summary"]["correspondence"] == "PASS"
        assert manifest["summary"]["matchedPairs"] == 3
        report = json.loads((tmp_path / "v_verify.json").read_text())
        assert report["passed"] is True

    def test_nfold_generate_roundtrips(self, tmp_path):
        c = {
            "schemaVersion": 1,
            "task": "nfold-generate",
            "params": {"n": 3, "phi": np.pi, "qHops": [[-2, 0.5, 0], [-1, 1.5, 0]]},
            "out": str(tmp_path / "n"),
        }
        code, manifest = run(c)
        assert code == 0
        spec = json.loads((tmp_path / "n_model.json").read_text())
        model = model_from_dict(spec)
        assert set(model.hops) == {-2, -1, 1, 2}


class TestMainEntry:
    def test_config_file_and_overrides(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg("spectrum", params={"numK": 32})))
        code = main(
            [
                "--config",
                str(path),
                "--out",
                str(tmp_path / "m"),
                "--threads",
                "2",
                "--tol-override",
                "numK=64",
            ]
        )
        assert code == 0
        lines = (tmp_path / "m_pbc.csv").read_text().splitlines()
        assert len(lines) == 65  # override took effect

    def test_presets_load(self):
        for name in ("fig2b", "fig2c", "fig2d", "fig3"):
            config = load_preset(name)
            assert config["task"] == "verify"
            model_from_dict(config["model"])

    def test_unknown_preset_exit_2(self, tmp_path, capsys):
        assert main(["--preset", "fig99", "--out", str(tmp_path / "p")]) == 2

    def test_preset_verify_runs(self, tmp_path):
        code = main(["--preset", "fig2c", "--out", str(tmp_path / "f") + "/"])
        assert code == 0
        manifest = json.loads((tmp_path / "f" / "manifest.json").read_text())
        assert manifest["summary"]["correspondence"] == "PASS"
        assert manifest["summary"]["matchedPairs"] == 3
