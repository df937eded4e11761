import json

import numpy as np
import pytest

from dts import cli
from dts.formats import read_image, read_pfm, write_image, write_pfm
from dts.synthetic import random_guide, two_plane_stereo


@pytest.fixture
def guide_png(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "guide.png"
    write_image(random_guide(rng, 12, 16), path)
    return path


def run(*args):
    return cli.main([str(a) for a in args])


def test_filter_constant(tmp_path, guide_png):
    write_pfm(np.full((12, 16), 2.5, np.float32), tmp_path / "in.pfm")
    assert run("filter", "--guide", guide_png, "--input", tmp_path / "in.pfm", "--out", tmp_path / "o.pfm") == 0
    np.testing.assert_allclose(read_pfm(tmp_path / "o.pfm"), 2.5, atol=1e-6)


def box_blur(values, radius):
    """Spatial box mean with windows truncated at the border."""
    h, w = values.shape
    r = int(np.floor(radius + 1e-9))
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = values[max(0, y - r): y + r + 1, max(0, x - r): x + r + 1].mean()
    return out


def test_filter_huge_sigma_r_is_box_blur(tmp_path, guide_png):
    values = np.random.default_rng(1).random((12, 16)).astype(np.float32)
    write_pfm(values, tmp_path / "in.pfm")
    code = run("filter", "--guide", guide_png, "--input", tmp_path / "in.pfm", "--out", tmp_path / "o.pfm",
               "--sigma-x", 2, "--sigma-y", 2, "--sigma-r", 1e6, "--radius-scale", 1.6)
    assert code == 0
    np.testing.assert_allclose(read_pfm(tmp_path / "o.pfm"), box_blur(values, 3.2), atol=1e-3)


def test_missing_guide_is_io_error(tmp_path):
    write_pfm(np.zeros((4, 4), np.float32), tmp_path / "in.pfm")
    assert run("filter", "--guide", tmp_path / "nope.png", "--input", tmp_path / "in.pfm",
               "--out", tmp_path / "o.pfm") == 2


def test_corrupt_pfm_is_io_error(tmp_path, guide_png):
    (tmp_path / "bad.pfm").write_bytes(b"Pf\n16 12\n-1.0\n" + bytes(10))
    assert run("filter", "--guide", guide_png, "--input", tmp_path / "bad.pfm", "--out", tmp_path / "o.pfm") == 2


def test_size_mismatch_is_numeric_error(tmp_path, guide_png):
    write_pfm(np.zeros((5, 5), np.float32), tmp_path / "in.pfm")
    assert run("filter", "--guide", guide_png, "--input", tmp_path / "in.pfm", "--out", tmp_path / "o.pfm") == 3


def test_stereo_without_target_is_usage_error(tmp_path, guide_png):
    with pytest.raises(SystemExit) as e:
        run("stereo", "--left", guide_png, "--right", guide_png, "--out", tmp_path / "o.pfm")
    assert e.value.code == 1


def test_bad_flag_values_are_usage_errors(tmp_path, guide_png):
    for bad in (["--sigma-x", "0"], ["--sigma-r", "-1"], ["--lambda", "-0.5"]):
        with pytest.raises(SystemExit) as e:
            run("stereo", "--left", guide_png, "--right", guide_png, "--target", "t.pfm",
                "--out", tmp_path / "o.pfm", *bad)
        assert e.value.code == 1


def test_stability_violation_is_usage_error(tmp_path, guide_png):
    write_pfm(np.zeros((12, 16), np.float32), tmp_path / "t.pfm")
    code = run("stereo", "--left", guide_png, "--right", guide_png, "--target", tmp_path / "t.pfm",
               "--out", tmp_path / "o.pfm", "--lambda", 3, "--step", 0.99)
    assert code == 1


def test_stereo_identical_pair_zero_target(tmp_path, guide_png):
    write_pfm(np.zeros((12, 16), np.float32), tmp_path / "t.pfm")
    code = run("stereo", "--left", guide_png, "--right", guide_png, "--target", tmp_path / "t.pfm",
               "--out", tmp_path / "o.pfm", "--iterations", 50, "--preview", tmp_path / "p.png")
    assert code == 0
    assert np.abs(read_pfm(tmp_path / "o.pfm")).max() < 1e-3
    assert (tmp_path / "p.png").exists()


def test_stereo_synthetic_improves(tmp_path):
    scene = two_plane_stereo()
    write_image(scene.left, tmp_path / "l.png")
    write_image(scene.right, tmp_path / "r.png")
    write_pfm(scene.target, tmp_path / "t.pfm")
    assert run("stereo", "--left", tmp_path / "l.png", "--right", tmp_path / "r.png",
               "--target", tmp_path / "t.pfm", "--out", tmp_path / "o.pfm") == 0
    out = read_pfm(tmp_path / "o.pfm")
    before = np.sqrt(np.mean((scene.target - scene.ground_truth) ** 2))
    after = np.sqrt(np.mean((out - scene.ground_truth) ** 2))
    assert after <= 0.5 * before


def test_superres_factor_one_identity(tmp_path, guide_png):
    low = np.random.default_rng(2).random((12, 16)).astype(np.float32) * 100
    write_pfm(low, tmp_path / "low.pfm")
    code = run("superres", "--low-depth", tmp_path / "low.pfm", "--guide", guide_png, "--factor", 1,
               "--iterations", 0, "--out", tmp_path / "o.pfm")
    assert code == 0
    np.testing.assert_array_equal(read_pfm(tmp_path / "o.pfm"), low)


def test_superres_bad_factor(tmp_path, guide_png):
    write_pfm(np.zeros((3, 4), np.float32), tmp_path / "low.pfm")
    assert run("superres", "--low-depth", tmp_path / "low.pfm", "--guide", guide_png, "--factor", 0,
               "--out", tmp_path / "o.pfm") == 1
    assert run("superres", "--low-depth", tmp_path / "low.pfm", "--guide", guide_png, "--factor", 3,
               "--out", tmp_path / "o.pfm") == 3


def test_defocus_aperture_zero(tmp_path, guide_png):
    write_pfm(np.random.default_rng(3).random((12, 16)).astype(np.float32) * 10, tmp_path / "d.pfm")
    code = run("defocus", "--color", guide_png, "--disparity", tmp_path / "d.pfm", "--focal", 4,
               "--aperture", 0, "--out", tmp_path / "o.png")
    assert code == 0
    np.testing.assert_array_equal(read_image(tmp_path / "o.png"), read_image(guide_png))


def test_confidence_constant_input(tmp_path, guide_png):
    write_pfm(np.full((12, 16), 7.0, np.float32), tmp_path / "in.pfm")
    assert run("confidence", "--input", tmp_path / "in.pfm", "--guide", guide_png, "--out", tmp_path / "c.pfm") == 0
    np.testing.assert_array_equal(read_pfm(tmp_path / "c.pfm"), 1.0)


def test_unknown_output_extension(tmp_path, guide_png):
    write_pfm(np.zeros((12, 16), np.float32), tmp_path / "in.pfm")
    assert run("filter", "--guide", guide_png, "--input", tmp_path / "in.pfm", "--out", tmp_path / "o.xyz") == 1


def test_env_override(tmp_path, guide_png, monkeypatch):
    values = np.random.default_rng(4).random((12, 16)).astype(np.float32)
    write_pfm(values, tmp_path / "in.pfm")
    base = ["filter", "--guide", guide_png, "--input", tmp_path / "in.pfm"]
    monkeypatch.setenv("DTS_RADIUS_SCALE", "0")
    assert run(*base, "--out", tmp_path / "env.pfm") == 0
    np.testing.assert_array_equal(read_pfm(tmp_path / "env.pfm"), values)
    # explicit flag wins over the environment
    assert run(*base, "--out", tmp_path / "flag.pfm", "--radius-scale", 1.0) == 0
    assert not np.array_equal(read_pfm(tmp_path / "flag.pfm"), values)


def test_bad_env_value(monkeypatch, tmp_path):
    monkeypatch.setenv("DTS_SIGMA_X", "-3")
    with pytest.raises(SystemExit) as e:
        run("filter", "--guide", "g.png", "--input", "i.pfm", "--out", tmp_path / "o.pfm")
    assert e.value.code == 1


def test_verify_is_deterministic(tmp_path):
    assert run("verify", "--seed", 3, "--out", tmp_path / "a.json") == 0
    assert run("verify", "--seed", 3, "--out", tmp_path / "b.json") == 0
    a = (tmp_path / "a.json").read_text()
    assert a == (tmp_path / "b.json").read_text()
    report = json.loads(a)
    for case in report["degenerate"].values():
        assert case["rms_diff"] == 0.0
    assert "gradient_residual" in report["fixed_point"]


def test_bench_iters_csv(tmp_path):
    assert run("bench", "--mode", "iters", "--out", tmp_path / "i.csv") == 0
    lines = (tmp_path / "i.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["setting", "megapixels", "seconds"]
    settings = [int(float(line.split(",")[0])) for line in lines[1:]]
    assert settings == [0, 10, 30, 100, 300, 1000, 3000]


def test_help_mentions_defaults(capsys):
    with pytest.raises(SystemExit):
        run("stereo", "--help")
    text = capsys.readouterr().out
    for flag in ("--lambda", "--gamma", "--sigma-x", "--sigma-r", "--iterations", "--step"):
        assert flag in text
    assert "default 0.99" in text and "default 0.001" in text
