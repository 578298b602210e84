import numpy as np
import pytest

import untrack


def test_synth_shapes_and_determinism():
    a = untrack.synth("camouflage", count=1, seed=3, frames=5)[0]
    b = untrack.synth("camouflage", count=1, seed=3, frames=5)[0]
    assert a.frames.shape == (5, 8, 128, 128)
    assert a.annotations.shape == (5, 5)
    assert np.array_equal(a.frames, b.frames)
    assert len(a.band_centers) == 8
    rgb = untrack.synth("plain", count=1, seed=3, frames=5, rgb=True)[0]
    assert rgb.frames.shape[1] == 3


def test_evaluate_identity_and_flags():
    gt = np.array([[10, 10, 20, 20, 0], [12, 11, 20, 20, 0], [0, 0, 0, 0, 1]], dtype=float)
    pred = gt[:, :4].copy()
    pred[2] = [500, 500, 3, 3]
    m = untrack.evaluate(pred, gt)
    assert m["frames"] == 2
    assert m["auc"] == 1.0 and m["precision"] == 1.0 and m["norm_precision"] == 1.0


def test_flops_paper_profile():
    sym = untrack.count_flops({"model.profile": "paper", "model.attention": "full", "model.eliminate": "false"})
    asym = untrack.count_flops({"model.profile": "paper", "model.eliminate": "false"})
    pruned = untrack.count_flops({"model.profile": "paper"}, rho=0.7)
    assert sym["flops"] == 2 * sym["macs"]
    assert sym["macs"] > asym["macs"] > pruned["macs"]
    assert abs(sym["macs"] / 1e9 - 169.8) / 169.8 < 0.15


def test_schedule_and_blend():
    assert untrack.keep_ratio(0, 100) == 1.0
    assert untrack.keep_ratio(100, 100) == pytest.approx(0.7)
    assert untrack.keep_count(0.5, 1, 4, 10) == 3
    assert sum(untrack.blend(600.0)) == pytest.approx(1.0)


def test_run_command_and_errors(tmp_path):
    text = untrack.run("synth", {"data.count": "1", "data.frames": "4"}, tmp_path / "data")
    assert "wrote 1 sequences" in text
    seq = untrack.load_sequence(tmp_path / "data" / "plain_000")
    assert len(seq) == 4
    with pytest.raises(untrack.ConfigError):
        untrack.run("synth", {"data.nope": "1"}, tmp_path / "x")
    with pytest.raises(untrack.MissingFileError):
        untrack.run("eval", {"data.root": str(tmp_path / "missing"), "eval.results": str(tmp_path)}, tmp_path / "y")
