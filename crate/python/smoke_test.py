#!/usr/bin/env python3
"""End-to-end smoke test for the certifair_py extension module.

Builds nothing itself: expects the cdylib at target/{release,debug}/
libcertifair_py.so (build with `cargo build -p certifair-py`). Copies it
next to a temp dir as certifair_py.so so the interpreter can import it,
then exercises the main surface: generators, splits, mixture auditing,
certificates, closed-form bounds, MI estimators, training, encoding,
probing, and model round-trips.

Run: python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def locate_module():
    for profile in ("release", "debug"):
        so = ROOT / "target" / profile / "libcertifair_py.so"
        if so.exists():
            return so
    sys.exit(
        "libcertifair_py.so not found under target/{release,debug}; "
        "run `cargo build -p certifair-py` first"
    )


def import_module():
    so = locate_module()
    tmp = Path(tempfile.mkdtemp(prefix="certifair_py_"))
    shutil.copy2(so, tmp / "certifair_py.so")
    sys.path.insert(0, str(tmp))
    import certifair_py

    return certifair_py


checks = []


def check(name, cond, detail=""):
    checks.append((name, bool(cond)))
    status = "ok" if cond else "FAIL"
    print(f"  {status:4} {name}{': ' + detail if detail else ''}")


def main():
    cf = import_module()
    print(f"imported certifair_py from {cf.__file__}")

    # --- generators and dataset surface -------------------------------
    roll = cf.swiss_roll(600, 3)
    check("swiss roll shape", roll.n == 600 and roll.dim == 3)
    s = roll.sensitive()
    check("swiss roll groups balanced", abs(sum(s) - 300) <= 30, f"n1={sum(s)}")
    again = cf.swiss_roll(600, 3)
    check("swiss roll deterministic", again.features() == roll.features())

    atoms = cf.atom_family(8, 1, 3, 500, 11)
    check("atom family shape", atoms.n == 500 and atoms.dim == 1)

    stair = cf.staircase_dataset(400, 50, 5)
    check("staircase shape", stair.n == 400 and stair.dim == 2)

    parts = roll.split([0.5, 0.25, 0.25], seed=9)
    check(
        "stratified split sizes",
        [p.n for p in parts] == [300, 150, 150],
        str([p.n for p in parts]),
    )
    check(
        "split preserves rows",
        sorted(sum((p.features() for p in parts), [])) == sorted(roll.features()),
    )

    ds = cf.Dataset([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]], [0, 1, 0], [1, 0, 1])
    check("dataset constructor", ds.n == 3 and ds.task_label() == [1, 0, 1])

    # --- discrete MI and closed-form bounds ----------------------------
    sh, chi2 = cf.mi_injective_uniform(16)
    check("injective shannon = ln k", abs(sh - math.log(16)) < 1e-12)
    check("injective chi2 = k-1", abs(chi2 - 15.0) < 1e-9)

    sh_emp, chi2_emp = cf.discrete_mi_from_pairs([(i, i % 4) for i in range(8)])
    check("pair MI dependent > 0", sh_emp > 0.0 and chi2_emp > 0.0)

    sh_st, _ = cf.mi_staircase(1000)
    check("staircase MI bounded", 0.0 < sh_st < 0.5 * math.log(2) + 2.0, f"{sh_st:.4f}")

    check("thm1 at unit information", cf.thm1_lower_bound(50, 1.0) == 0.0)
    check("thm1 divergent information", cf.thm1_lower_bound(50, float("inf")) == 1.0)
    eps = 0.3
    cap = cf.cor_rates_mi_cap(eps, 20)
    check("thm1/cor inversion", abs(cf.thm1_lower_bound(20, cap) - eps) < 1e-12)
    check(
        "thm2 sample-size decay",
        cf.thm2_rate_bound(400, 400, 1.0, 1.0)
        < cf.thm2_rate_bound(100, 100, 1.0, 1.0),
    )
    check(
        "thm3 cap shrinks with sigma",
        cf.thm3_mi_cap(1.0, 2.0) < cf.thm3_mi_cap(1.0, 0.5),
    )
    check(
        "mc mse halves with m",
        abs(cf.mc_mse_bound(1.0, 1.0, 10, 2) - 0.5 * cf.mc_mse_bound(1.0, 1.0, 10, 1))
        < 1e-15,
    )

    # --- mixture auditing ----------------------------------------------
    centers = [[-2.0], [-1.8], [-2.2], [2.0], [1.8], [2.2]]
    groups = [0, 0, 0, 1, 1, 1]
    mix = cf.Mixture.fit(centers, groups, 0.5)
    check("mixture sigma/dim", mix.sigma == 0.5 and mix.dim == 1)
    e0, e1 = mix.posterior([-2.0])
    check("posterior sums to one", abs(e0 + e1 - 1.0) < 1e-12)
    check("posterior points left", e0 > 0.99, f"eta0={e0:.4f}")
    check("plug-in predicts groups", mix.predict([-2.0]) == 0 and mix.predict([2.0]) == 1)
    mix2 = cf.Mixture.from_json(mix.to_json())
    check("mixture JSON round-trip", mix2.log_density([0.3], 1) == mix.log_density([0.3], 1))

    # --- certificates ---------------------------------------------------
    sep = cf.certificate(centers * 40, groups * 40, sigma=0.1, seed=4)
    check("certificate separated ~1", sep["delta_n"] > 0.9, f"{sep['delta_n']:.3f}")
    same = cf.certificate([[0.0]] * 200, [i % 2 for i in range(200)], sigma=0.1, seed=4)
    check("certificate identical ~0", same["delta_n"] < 0.2, f"{same['delta_n']:.3f}")
    with_bounds = cf.certificate(
        centers * 40, groups * 40, sigma=0.5, seed=4, t_inf=2.5
    )
    check(
        "certificate carries channel bounds",
        with_bounds["thm2_bound"] is not None and with_bounds["thm3_mi_bound"] > 0.0,
    )

    # --- training, encoding, probing ------------------------------------
    tr, te = cf.swiss_roll(900, 1).split([2 / 3, 1 / 3], seed=42)
    model = cf.train(
        tr, te, method="awgn", lam=3.0, sigma=0.4, epochs=15, lr=0.005,
        momentum=0.5, seed=7,
    )
    cert = model.test_certificate()
    check("awgn train certificate fields", 0.0 <= cert["delta_n"] <= 1.0 and cert["sigma"] == 0.4)
    check("awgn no adversary", model.adversary_delta is None)

    reps = model.encode(te, with_noise=True, seed=99)
    check("encode keeps labels", reps.sensitive() == te.sensitive() and reps.n == te.n)
    clean = model.encode(te, with_noise=False, seed=0)
    diff = max(
        abs(a - b)
        for ra, rb in zip(reps.features(), clean.features())
        for a, b in zip(ra, rb)
    )
    check("noise channel perturbs encodings", 0.0 < diff < 4.0, f"max |dz|={diff:.3f}")

    pr = cf.probe(reps, target="sensitive", hidden=[16, 16], epochs=20)
    check("probe returns delta/accuracy", 0.0 <= pr["delta"] <= 1.0 and 0.0 < pr["accuracy"] <= 1.0)

    adv = cf.train(
        tr, te, method="adv_ce", lam=2.0, sigma=0.4, epochs=8, lr=0.002,
        adv_lr=0.01, seed=7,
    )
    check("adversarial reports own delta", adv.adversary_delta is not None)

    with tempfile.TemporaryDirectory() as d:
        model.save(d)
        back = cf.TrainedModel.load(d)
        check("model round-trip report", back.report_json() == model.report_json())
        z1 = model.encode(te, with_noise=False, seed=0).features()
        z2 = back.encode(te, with_noise=False, seed=0).features()
        check("model round-trip encodings", z1 == z2)

    check("derive_seed stable", cf.derive_seed(5, 11) == cf.derive_seed(5, 11))
    check("derive_seed separates streams", cf.derive_seed(5, 11) != cf.derive_seed(5, 12))

    # --- sigma selection (tiny) -----------------------------------------
    sel = cf.select_sigma(
        cf.swiss_roll(400, 2), [0.2, 0.6], threshold=1.0, lam=1.0, epochs=4,
        lr=0.005, seed=3,
    )
    check("select_sigma picks from grid", sel["chosen"] in (0.2, 0.6) and len(sel["table"]) == 2)

    failed = [n for n, ok in checks if not ok]
    print(f"\n{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        sys.exit("FAILED: " + ", ".join(failed))


if __name__ == "__main__":
    main()
