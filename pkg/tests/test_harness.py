import json
import math

import numpy as np
import pytest

from turbomud import sysmodel
from turbomud.harness import (BerCurve, curve_rows, ebno_to_sigma2, emit_results,
                              generate_block, get_preset, parse_results, run_monte_carlo,
                              run_preset, sigma2_to_ebno)
from turbomud.harness.cli import main
from turbomud.harness.presets import PRESETS
from turbomud.lsa.transfer import DecoderTransfer, simulate_transfer_point


def test_ebno_conversion():
    # Eb/N0 = 0 dB at rate 1/3 with unit symbol energy: N0 = 3, sigma^2 = 1.5
    assert ebno_to_sigma2(0.0) == pytest.approx(1.5)
    assert ebno_to_sigma2(10.0) == pytest.approx(0.15)
    for db in (-3.0, 0.0, 4.0, 7.5):
        assert sigma2_to_ebno(ebno_to_sigma2(db)) == pytest.approx(db)
    assert ebno_to_sigma2(3.0, rate=1.0) == pytest.approx(0.5 / 10 ** 0.3)


def test_generated_block_is_consistent():
    cfg = sysmodel.SystemConfig(K=3, N=8, M=258, L=2, sigma_n2=0.0, seed=4)
    blk = generate_block(cfg, 0)
    from turbomud import fec
    for k in range(3):
        coded = fec.conv_encode(blk.info_bits[k])
        np.testing.assert_array_equal(blk.symbols[k], fec.bits_to_symbols(blk.interleavers[k].interleave(coded)))
    np.testing.assert_allclose(blk.y, sysmodel.noiseless_received(blk.symbols, blk.h), atol=1e-12)
    again = generate_block(cfg, 0)
    np.testing.assert_array_equal(again.y, blk.y)
    assert not np.array_equal(generate_block(cfg, 1).y, blk.y)


@pytest.mark.parametrize("det", ["map", "rs", "pic"])
def test_noiseless_ber_is_zero(det):
    cfg = sysmodel.SystemConfig(K=2, N=8, M=258, L=2, sigma_n2=1e-6, seed=2)
    c = run_monte_carlo(cfg, det, n_iters=3, min_errors=1, max_bits=10**4, min_bits=10**4)
    assert c.bits >= 10**4
    assert c.errors[-1] == 0
    if det == "map":
        # exact detection separates the noiseless hypotheses from the first pass;
        # the cancellers start from a matched filter that deep fades can defeat
        assert c.errors == [0, 0, 0]


def test_single_user_corridor_at_4db():
    # block fading: errors arrive in bursts, so a bit floor is needed for a stable estimate;
    # N=64 gives enough chip-level diversity (N=16 measures about 1.7e-2 here)
    cfg = sysmodel.SystemConfig(K=1, N=64, M=258, L=1, sigma_n2=ebno_to_sigma2(4.0), seed=5)
    c = run_monte_carlo(cfg, "map", n_iters=1, min_errors=100, max_bits=3 * 10**5,
                        min_bits=3 * 10**5)
    assert 1e-4 <= c.ber[-1] <= 1e-2


def test_worker_count_does_not_change_counters():
    cfg = sysmodel.SystemConfig(K=6, N=8, M=258, L=2, sigma_n2=ebno_to_sigma2(1.0), seed=9)
    kw = dict(n_iters=3, min_errors=60, max_bits=4000, kappa=0.2, batch_size=2)
    a = run_monte_carlo(cfg, "rs", workers=1, **kw)
    b = run_monte_carlo(cfg, "rs", workers=3, **kw)
    assert (a.errors, a.bits, a.blocks) == (b.errors, b.bits, b.blocks)


def test_stopping_rule():
    cfg = sysmodel.SystemConfig(K=2, N=8, M=258, L=2, sigma_n2=ebno_to_sigma2(-2.0), seed=1)
    c = run_monte_carlo(cfg, "pic", n_iters=1, min_errors=50, max_bits=10**6, batch_size=1)
    assert c.errors[-1] >= 50
    assert c.bits < 10**6
    # one block fewer would not have met the target
    short = run_monte_carlo(cfg, "pic", n_iters=1, min_errors=10**9, max_bits=c.bits - 2 * 82,
                            batch_size=1)
    assert short.bits == c.bits - 2 * 82 and short.errors[-1] < 50
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, "zf", n_iters=1, min_errors=1, max_bits=100)


def test_map_guard_propagates():
    cfg = sysmodel.SystemConfig(K=9, N=8, M=258, L=3, sigma_n2=0.5, seed=1)
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, "map", n_iters=1, min_errors=1, max_bits=100)


def test_csv_roundtrip_and_header_only(tmp_path):
    curve = BerCurve({"detector": "rs", "K": 16, "N": 16, "beta": 1.0, "kappa": 0.1,
                      "ebno_db": 4.0}, [120, 17, 3], 10496, 8)
    rows = curve_rows("fig4", curve)
    p = tmp_path / "c.csv"
    text = emit_results(rows, "csv", p)
    assert text.startswith("figure,source,") and "\r\n" in text
    back = parse_results(p)
    assert [r["errors"] for r in back] == [120, 17, 3]
    assert [r["bits"] for r in back] == [10496] * 3
    assert back[1]["ber"] == 17 / 10496
    assert emit_results(rows, "csv") == text     # re-emission idempotent
    empty = tmp_path / "e.csv"
    emit_results([], "csv", empty)
    assert empty.read_text(encoding="utf-8").count("\n") == 1
    assert parse_results(empty) == []
    js = json.loads(emit_results(rows, "json"))
    assert js["rows"][0]["errors"] == 120
    with pytest.raises(ValueError):
        emit_results(rows, "xml")


def test_csv_quotes_awkward_fields(tmp_path):
    rows = [{"figure": 'a,"b"', "source": "sim", "iteration": 1}]
    p = tmp_path / "q.csv"
    emit_results(rows, "csv", p)
    assert parse_results(p)[0]["figure"] == 'a,"b"'


def test_every_preset_grid_point_builds_a_config():
    for name, p in PRESETS.items():
        for K in p.K_values:
            sysmodel.SystemConfig(K=K, N=p.N, M=p.M, L=p.L, lam=p.lam)
        for beta, ebno in p.lsa_points() if p.kind != "sim" else []:
            assert beta > 0 and math.isfinite(ebno)
    with pytest.raises(ValueError):
        get_preset("fig9")


def _tiny_table():
    rng = np.random.default_rng(0)
    grid = np.arange(-6.0, 10.01, 2.0)
    rows = np.array([simulate_transfer_point(s, 20, rng, m_info=20) for s in grid])
    return DecoderTransfer(grid, rows, m_info=20)


def test_run_preset_writes_csv_and_manifest(tmp_path):
    paths = run_preset("custom", 0.001, tmp_path, seed=77, n_iters=2, K_values=(4,), N=8)
    csv_path, man = paths
    rows = parse_results(csv_path)
    assert [r["iteration"] for r in rows] == [1, 2]
    m = json.loads(man.read_text())
    assert m["seed"] == 77 and m["block_length_M"] == 258 and m["min_errors"] == 100
    assert "R = 1/3" in m["ebno_convention"] and "numpy" in m["versions"]
    again = run_preset("custom", 0.001, tmp_path / "b", seed=77, n_iters=2, K_values=(4,), N=8)
    assert again[0].read_bytes() == csv_path.read_bytes()


def test_run_lsa_preset_with_supplied_table(tmp_path):
    csv_path, _ = run_preset("fig8", 1.0, tmp_path, transfer=_tiny_table(), n_iters=3,
                             kappas=(0.5,))
    rows = parse_results(csv_path)
    assert len(rows) == 3 and all(r["source"] == "lsa" for r in rows)
    assert all(0 < r["eta"] <= 1 for r in rows)


def test_cli_success_and_failure(tmp_path, capsys):
    assert main(["--preset", "custom", "--ebno", "3", "--iters", "1", "--beta", "0.5",
                 "--scale", "0.001", "--out", str(tmp_path), "--seed", "3"]) == 0
    rows = parse_results(tmp_path / "custom.csv")
    assert rows[0]["K"] == 8 and rows[0]["ebno_db"] == 3.0
    assert main(["--kappa", "1.5", "--out", str(tmp_path)]) != 0
    assert "kappa" in capsys.readouterr().err
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "custom", "K_values": [2], "N": 4, "detector": "map",
                               "n_iters": 1, "ebno_db": [5.0], "seed": 11, "scale": 0.001}))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "custom.manifest.json").read_text())["seed"] == 11
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["--config", str(cfg)]) != 0
