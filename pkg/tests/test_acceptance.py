"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible with
``pytest -s``; also echoed to the terminal when output is captured).
"""

import time

import numpy as np
import pytest

from esefn import functional as F
from esefn.ablation import VARIANTS
from esefn.attention import CNetParams, MNetParams, cnet_forward, mnet_forward
from esefn.checkpoint import load_checkpoint, save_checkpoint
from esefn.cli import main
from esefn.data import SynthSpec, generate_xor_pair, train_test_split
from esefn.experiments import Dataset, run_ablation
from esefn.fusion import Branch, EseFnParams, LossWeights, fuse_forward, multimodal_loss
from esefn.gradcheck import check_gradients
from esefn.layers import named_parameters
from esefn.tensor import Tensor
from esefn.trainer import OptimConfig, evaluate
from oracles import cnet_oracle, fuse_oracle, mnet_oracle, model_arrays

pytestmark = pytest.mark.slow

SYNTH = SynthSpec(num_classes=4, d1=8, d2=8, noise_sigma=0.1, samples_per_class=100, seed=7)
EPOCHS = 200


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


# 1. gradient oracle


def gradcheck_instance(seed):
    rng = np.random.default_rng(seed)
    model = EseFnParams.create(10, 12, 16, 4, rng)
    for name, p in model.named_parameters():
        if name.endswith("bias"):
            p.data[...] = rng.normal(0.0, 0.1, size=p.shape)
    f_r, f_s = rng.normal(size=(4, 10)), rng.normal(size=(4, 12))
    labels = rng.integers(0, 4, size=4)
    return model, lambda: model.objective(f_r, f_s, labels, LossWeights())


def test_criterion_1_gradient_oracle(verdict):
    start = time.perf_counter()
    seeds = {}
    for seed in range(50):
        model, loss_fn = gradcheck_instance(seed)
        seeds.setdefault(loss_fn().min_branch, seed)
        if len(seeds) == 2:
            break
    assert set(seeds) == {Branch.RGB, Branch.SKELETON}
    worst, groups = 0.0, set()
    for seed in seeds.values():
        model, loss_fn = gradcheck_instance(seed)
        errors = check_gradients(lambda: loss_fn().total, model.named_parameters(), eps=1e-6)
        worst = max(worst, *errors.values())
        groups |= set(errors)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 60
    verdict(1, ok, f"worst rel err {worst:.2e} over {len(groups)} groups, both branches, {elapsed:.1f}s")


# 2. attention bounds


def test_criterion_2_attention_bounds(verdict):
    rng = np.random.default_rng(2)
    failures = 0
    for draw in range(1000):
        scale = float(rng.choice([0.1, 1.0, 5.0, 50.0]))
        mnet, cnet = MNetParams.create(2, 16, rng), CNetParams.create(16, 2, rng)
        for block in (mnet, cnet):
            for _, p in named_parameters(block):
                p.data[...] = rng.normal(scale=scale, size=p.shape)
        f = rng.normal(scale=scale, size=(2, 16))
        h_m, w_m = mnet_forward(Tensor(f), mnet)
        h_mc, w_c = cnet_forward(F.transpose(h_m), cnet)
        ok = all(((g > 0) & (g < 1)).all() for g in (w_m.data, w_c.data))
        ok &= all(np.array_equal(h_m.data[i], f[i] * w_m.data[i]) for i in range(2))
        ht = h_m.data.T
        ok &= all(np.array_equal(h_mc.data[c], ht[c] * w_c.data[c]) for c in range(16))
        failures += not ok
    verdict(2, failures == 0, f"{failures} of 1000 draws violated gate bounds or row/channel identities")


# 3. loss identity


def test_criterion_3_loss_identity(verdict):
    rng = np.random.default_rng(3)
    worst, exact = 0.0, True
    for _ in range(10_000):
        l_r, l_s, l_rs = rng.exponential(2.0, size=3)
        alpha = rng.uniform(0.05, 1.0)
        beta = rng.uniform(0.0, alpha * 0.999)
        out = multimodal_loss(l_r, l_s, l_rs, LossWeights(alpha, beta))
        worst = max(worst, abs(out.l_total - ((alpha - beta) * l_rs + beta * min(l_r, l_s))))
        exact &= multimodal_loss(l_r, l_s, l_rs, LossWeights(alpha, 0.0)).l_total == alpha * l_rs
    verdict(3, worst < 1e-12 and exact, f"max identity gap {worst:.1e}; beta=0 exact: {exact}")


# 4. composition oracles


def randomize_biases(params, rng):
    for name, p in params:
        if name.endswith("bias"):
            p.data[...] = rng.normal(scale=0.3, size=p.shape)


def test_criterion_4_composition_oracles(verdict):
    rng = np.random.default_rng(4)
    gaps = {"mnet": 0.0, "cnet": 0.0, "fuse": 0.0}
    for _ in range(100):
        mnet = MNetParams.create(2, 16, rng)
        randomize_biases(named_parameters(mnet), rng)
        f = rng.normal(size=(2, 16))
        h_m, w_m = mnet_forward(Tensor(f), mnet)
        want_h, want_w = mnet_oracle(f, {k: t.data for k, t in named_parameters(mnet)})
        gaps["mnet"] = max(gaps["mnet"], np.abs(h_m.data - want_h).max(), np.abs(w_m.data - want_w).max())

        cnet = CNetParams.create(16, 2, rng)
        randomize_biases(named_parameters(cnet), rng)
        h = rng.normal(size=(16, 2))
        h_mc, w_c = cnet_forward(Tensor(h), cnet)
        want_h, want_w = cnet_oracle(h, {k: t.data for k, t in named_parameters(cnet)})
        gaps["cnet"] = max(gaps["cnet"], np.abs(h_mc.data - want_h).max(), np.abs(w_c.data - want_w).max())

        model = EseFnParams.create(8, 8, 16, 4, rng)
        randomize_biases(model.named_parameters(), rng)
        f_r, f_s = rng.normal(size=8), rng.normal(size=8)
        f_rs, w_m, w_c = fuse_forward(f_r, f_s, model)
        want_rs, want_wm, want_wc = fuse_oracle(f_r, f_s, model_arrays(model))
        gaps["fuse"] = max(
            gaps["fuse"],
            np.abs(f_rs.data - want_rs).max(),
            np.abs(w_m.data - want_wm).max(),
            np.abs(w_c.data - want_wc).max(),
        )
    ok = max(gaps.values()) <= 1e-12
    verdict(4, ok, "max gaps over 100 instances: " + ", ".join(f"{k} {v:.1e}" for k, v in gaps.items()))


# 5-7 share one ablation run on the synthetic task


@pytest.fixture(scope="module")
def synthetic():
    train, test = train_test_split(generate_xor_pair(SYNTH), 0.25, SYNTH.seed)
    return Dataset(train, test, SYNTH.num_classes)


@pytest.fixture(scope="module")
def ablation(synthetic):
    optim = OptimConfig(epochs=EPOCHS, seed=SYNTH.seed)
    rows, seconds = {}, {}
    for variant in VARIANTS.values():
        start = time.perf_counter()
        (row,) = run_ablation(synthetic, [variant], 16, optim, LossWeights(0.7, 0.3))
        seconds[variant.id] = time.perf_counter() - start
        rows[variant.id] = row
    seconds["all"] = sum(seconds.values())
    return rows, seconds


def test_criterion_5_fusion_superiority(ablation, verdict):
    rows, seconds = ablation
    fused, b1, b2 = rows["B7"].test_acc, rows["B1"].test_acc, rows["B2"].test_acc
    ok = fused >= 0.95 and b1 <= 0.60 and b2 <= 0.60 and seconds["B7"] < 300
    verdict(
        5, ok,
        f"fused {fused:.3f} (>=0.95), B1 {b1:.3f}, B2 {b2:.3f} (<=0.60); "
        f"{EPOCHS} epochs in {seconds['B7']:.1f}s",
    )


def test_criterion_6_ablation_ordering(ablation, verdict, capsys):
    rows, seconds = ablation
    lines = ["", "variant   rgb skel mnet cnet   ml  exp  test_acc"]
    for r in rows.values():
        v = r.variant
        flags = (v.uses_rgb, v.uses_skeleton, v.uses_mnet, v.uses_cnet, v.uses_ml, v.uses_expansion)
        lines.append(f"{v.id:<8}" + "".join(f"{int(x):>5}" for x in flags) + f"  {r.test_acc:.3f}")
    with capsys.disabled():
        print("\n".join(lines))
    single = max(r.test_acc for r in rows.values() if r.variant.is_single_modal)
    fused = min(r.test_acc for r in rows.values() if not r.variant.is_single_modal)
    trend_a = rows["A6"].test_acc >= rows["A3"].test_acc - 0.02
    trend_b = rows["B7"].test_acc >= rows["B3"].test_acc - 0.02
    verdict(
        6, fused >= single + 0.2,
        f"min fused {fused:.3f} vs max single-modal {single:.3f} (+0.2 required); "
        f"reported only: A6>=A3-0.02 {trend_a}, B7>=B3-0.02 {trend_b}; all 13 variants {seconds['all']:.0f}s",
    )


def test_criterion_7_training_curve(ablation, verdict):
    rows, _ = ablation
    curve = rows["B7"].report.column("l_total")
    tail = np.array(curve[-10:])
    spread = (tail.max() - tail.min()) / tail.mean()
    ok = curve[49] < 0.5 * curve[0] and spread < 0.10
    verdict(7, ok, f"l_total epoch 1 {curve[0]:.4f}, epoch 50 {curve[49]:.4f}, last-10 spread {spread:.2%}")


# 8. determinism and persistence


def test_criterion_8_determinism_and_checkpoint(tmp_path, capsys, verdict):
    argv = ["train", "--synthetic", "xor", "--samples-per-class", "25", "--epochs", "20", "--seed", "7"]
    codes = [main([*argv, "--out", str(tmp_path / run)]) for run in ("a", "b")]
    capsys.readouterr()
    same_csv = (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()

    model = EseFnParams.create(8, 8, 16, 4, np.random.default_rng(8))
    randomize_biases(model.named_parameters(), np.random.default_rng(9))
    save_checkpoint(model, tmp_path / "m.ckpt")
    loaded = load_checkpoint(tmp_path / "m.ckpt")
    before, after = model_arrays(model), model_arrays(loaded)
    bit_exact = before.keys() == after.keys() and all(
        before[k].tobytes() == after[k].tobytes() and before[k].shape == after[k].shape for k in before
    )
    test = generate_xor_pair(SynthSpec(samples_per_class=10, seed=8))
    f_r = np.stack([s.f_r for s in test])
    f_s = np.stack([s.f_s for s in test])
    logits_a, logits_b = model.logits(f_r, f_s), loaded.logits(f_r, f_s)
    same_pred = all(np.array_equal(logits_a[h], logits_b[h]) for h in logits_a)
    same_pred &= evaluate(model, test) == evaluate(loaded, test)
    ok = codes == [0, 0] and same_csv and bit_exact and same_pred
    verdict(8, ok, f"report CSVs identical: {same_csv}; checkpoint bit-exact: {bit_exact}; predictions equal: {same_pred}")
