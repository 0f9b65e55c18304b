import csv
import os
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from bsm.cli import main
from bsm.config import BsmConfig
from bsm.imageio import load_gt_disparity

from .conftest import textured_pair

SMALL = ["--n", "128", "--d-max", "8", "--vote-radius", "5"]


@pytest.fixture
def pair(tmp_path):
    left, right = textured_pair(24, 40, 3, seed=9)
    lp, rp = tmp_path / "left.png", tmp_path / "right.png"
    Image.fromarray(left).save(lp)
    Image.fromarray(right).save(rp)
    return str(lp), str(rp)


def test_match_writes_map_and_sidecar(tmp_path, pair):
    out = str(tmp_path / "disp.pgm")
    assert main(["match", *pair, out, *SMALL]) == 0
    dmap = load_gt_disparity(out, 16)
    assert dmap.shape == (24, 40)
    cfg = BsmConfig.load(out + ".config.json")
    assert cfg.n == 128 and cfg.d_max == 8 and cfg.vote_radius == 5


def test_match_stages(tmp_path, pair):
    out = str(tmp_path / "disp.pgm")
    assert main(["match", *pair, out, *SMALL, "--stages"]) == 0
    for tag in ("stage1_unmasked", "stage2_masked", "stage3_refined"):
        assert os.path.exists(tmp_path / f"disp_{tag}.pgm")
    assert (tmp_path / "disp_stage3_refined.pgm").read_bytes() == (tmp_path / "disp.pgm").read_bytes()


def test_match_size_mismatch(tmp_path, pair, capsys):
    small = tmp_path / "small.png"
    Image.fromarray(np.zeros((10, 10, 3), np.uint8)).save(small)
    assert main(["match", pair[0], str(small), str(tmp_path / "o.pgm"), *SMALL]) != 0
    assert "DimensionMismatch" in capsys.readouterr().err


def test_match_requires_d_max(tmp_path, pair):
    assert main(["match", *pair, str(tmp_path / "o.pgm"), "--n", "64"]) != 0


def test_config_precedence(tmp_path, pair):
    cfg = tmp_path / "c.json"
    BsmConfig(n=64, d_max=6, vote_radius=7).save(cfg)
    out = str(tmp_path / "o.pgm")
    assert main(["match", *pair, out, "--config", str(cfg), "--vote-radius", "3"]) == 0
    eff = BsmConfig.load(out + ".config.json")
    assert (eff.n, eff.d_max, eff.vote_radius) == (64, 6, 3)


def test_pattern_sidecar_reuse(tmp_path, pair):
    a, b = str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")
    pat = str(tmp_path / "pattern.json")
    assert main(["match", *pair, a, *SMALL, "--save-pattern", pat]) == 0
    assert main(["match", *pair, b, *SMALL, "--pattern", pat, "--seed", "1"]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_eval_identity_and_masks(tmp_path, pair, capsys):
    out = str(tmp_path / "disp.pgm")
    main(["match", *pair, out, *SMALL])
    capsys.readouterr()
    assert main(["eval", out, out, "--gt-scale", "16"]) == 0
    text = capsys.readouterr().out
    assert "0.00" in text
    mask = tmp_path / "m.png"
    Image.fromarray(np.full((24, 40), 255, np.uint8)).save(mask)
    csv_path = tmp_path / "r.csv"
    assert main(["eval", out, out, "--gt-scale", "16", "--masks", str(mask), str(mask), str(mask),
                 "--csv", str(csv_path)]) == 0
    rows = list(csv.DictReader(open(csv_path)))
    assert [r["region"] for r in rows] == ["nonocc", "all", "disc"]


def test_eval_missing_gt(tmp_path, pair):
    out = str(tmp_path / "disp.pgm")
    main(["match", *pair, out, *SMALL])
    assert main(["eval", out, str(tmp_path / "missing.pgm")]) != 0


def _scene_dir(tmp_path, name="synth", d_star=3):
    d = tmp_path / name
    d.mkdir()
    left, right = textured_pair(24, 40, d_star, seed=5)
    Image.fromarray(left).save(d / "left.png")
    Image.fromarray(right).save(d / "right.png")
    Image.fromarray(np.full((24, 40), d_star * 4, np.uint8)).save(d / "gt.png")
    (d / "scene.json").write_text('{"d_max": 8, "gt_scale": 4}')
    return str(d)


def test_sweep_single_n(tmp_path, capsys):
    scene = _scene_dir(tmp_path)
    csv_path = tmp_path / "sweep.csv"
    assert main(["sweep", "--scene", scene, "--n-values", "128", "--csv", str(csv_path),
                 "--vote-radius", "5"]) == 0
    rows = list(csv.DictReader(open(csv_path)))
    assert len(rows) == 1 and rows[0]["n"] == "128"


def test_bench_one_line(tmp_path, capsys):
    scene = _scene_dir(tmp_path)
    assert main(["bench", "--scene", scene, "--repetitions", "1", "--n", "128"]) == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()]
    assert len(lines) == 1 and "median_seconds=" in lines[0]


def test_radiometric_nine_entries(tmp_path, capsys):
    root = tmp_path / "Art"
    left, right = textured_pair(24, 40, 3, seed=6)
    for e, gain in enumerate((0.7, 1.0, 1.3)):
        d = root / "Illum2" / f"Exp{e}"
        d.mkdir(parents=True)
        Image.fromarray(np.clip(left * gain, 0, 255).astype(np.uint8)).save(d / "view1.png")
        Image.fromarray(np.clip(right * gain, 0, 255).astype(np.uint8)).save(d / "view5.png")
    Image.fromarray(np.full((24, 40), 3, np.uint8)).save(root / "disp1.png")
    csv_path = tmp_path / "radio.csv"
    assert main(["radiometric", str(root), "--csv", str(csv_path), *SMALL]) == 0
    rows = list(csv.reader(open(csv_path)))
    values = [float(v) for r in rows[1:] for v in r[1:]]
    assert len(values) == 9


def _run_cli(args, threads_env):
    env = dict(os.environ, NUMBA_NUM_THREADS=str(threads_env))
    subprocess.run([sys.executable, "-m", "bsm", *args], check=True, env=env,
                   capture_output=True)


def test_byte_identical_across_thread_counts(tmp_path, pair):
    outs = []
    for threads in (1, 4):
        out = str(tmp_path / f"t{threads}.pgm")
        _run_cli(["match", *pair, out, "--n", "256", "--d-max", "8", "--threads", str(threads),
                  "--stages"], threads_env=4)
        outs.append(out)
    for tag in ("", "_stage1_unmasked", "_stage2_masked"):
        a = open(outs[0].replace(".pgm", f"{tag}.pgm"), "rb").read()
        b = open(outs[1].replace(".pgm", f"{tag}.pgm"), "rb").read()
        assert a == b
    cfg1 = BsmConfig.load(outs[0] + ".config.json")
    cfg4 = BsmConfig.load(outs[1] + ".config.json")
    assert cfg1.replace(threads=4) == cfg4
