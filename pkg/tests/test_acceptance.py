"""Acceptance criteria 1-13, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible in ``pytest -v`` output)
before asserting.
"""
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from hypocopula import (ExposureProfile, ProbitLevel, build_main, check_compatibility,
                        check_lemma_inequalities, example_5_3, gaussian_shift_h,
                        invert_conditional, power_g, probit_value, sample_pairs,
                        sample_threshold_chain, separable_from_G, sine_g, to_normal_pairs)
from hypocopula.errors import AmbiguousContext, PositivityViolated
from hypocopula.models import build_from_config, model_document
from hypocopula.probit import ordering_violations
from hypocopula.validation import (check_copula_axioms, check_density_mass,
                                   check_opposite_symmetry, kendall_tau_report)

LEVEL = 1e-3
N = 100_000


@pytest.fixture
def verdict(capsys, request):
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return _report


@pytest.fixture(scope="module")
def main_sample(corpus):
    return sample_pairs(corpus["main_delta1"], N, 20240601)


def test_criterion_01_normal_pair_with_shift_bound(main_sample, verdict):
    xy = to_normal_pairs(main_sample)
    p_x = stats.kstest(xy[:, 0], "norm").pvalue
    p_y = stats.kstest(xy[:, 1], "norm").pvalue
    worst = float(np.max(xy[:, 1] - xy[:, 0]))
    violations = int(np.sum(xy[:, 1] - xy[:, 0] > 1.0))
    dups = N - len(np.unique(xy, axis=0))
    rho = float(np.corrcoef(xy.T)[0, 1])
    ok = p_x > LEVEL and p_y > LEVEL and violations == 0 and dups == 0 and -1 < rho < 1
    verdict(1, ok, f"KS p=({p_x:.3f}, {p_y:.3f}), max(Y-X)={worst:.6f}, "
                   f"violations={violations}, duplicates={dups}, corr={rho:.4f}")


def test_criterion_02_u0_recorded(verdict):
    errs = []
    for delta in (0.25, 1.0, 3.0):
        cfg = {"type": "prescribed", "construction": "main",
               "H": {"family": "gaussian_shift", "delta": delta}}
        doc = model_document(build_from_config(cfg), cfg)
        errs.append(abs(doc["u0"] - stats.norm.cdf(-delta / 2)))
    verdict(2, max(errs) <= 1e-12, f"max |u0 - Phi(-delta/2)| = {max(errs):.2e}")


def test_criterion_03_axiom_suite(corpus, verdict):
    worst = {"boundary": 0.0, "margins": 0.0, "rect": math.inf, "sym": 0.0, "mass": 0.0}
    failed = []
    for name, c in corpus.items():
        chk = {x.name: x for x in check_copula_axioms(c, 200).checks}
        sym = check_opposite_symmetry(c, 200).checks[0].worst
        mass = check_density_mass(c)
        worst["boundary"] = max(worst["boundary"], chk["boundary_zero"].worst)
        worst["margins"] = max(worst["margins"], chk["margins"].worst)
        worst["rect"] = min(worst["rect"], chk["two_increasing"].worst)
        worst["sym"] = max(worst["sym"], sym)
        worst["mass"] = max(worst["mass"], abs(mass - 1))
        if not (chk["finite"].passed and chk["boundary_zero"].worst <= 1e-8
                and chk["margins"].worst <= 1e-8 and chk["two_increasing"].worst >= -1e-9
                and sym <= 1e-8 and abs(mass - 1) <= 1e-5):
            failed.append(name)
    verdict(3, not failed, f"{len(corpus)} copulas, failed={failed}, boundary={worst['boundary']:.1e}, "
                           f"margins={worst['margins']:.1e}, min rect={worst['rect']:.1e}, "
                           f"symmetry={worst['sym']:.1e}, |mass-1|={worst['mass']:.1e}")


def test_criterion_04_closed_form_regression(verdict):
    u = np.linspace(0, 1, 1002)[1:-1]
    f2 = separable_from_G(power_g(2.0)).F(u)
    want2 = ((1 - u) ** -1 - (1 - u) ** 2) / 3
    e2 = np.max(np.abs(f2 - want2) / np.maximum(1, np.abs(want2)))
    es = np.max(np.abs(separable_from_G(sine_g()).F(u) - 2 * np.sin(np.pi * u / 2) / np.pi))
    c = example_5_3(0.25, 2.0)
    uk = np.linspace(0.25, 1, 1002)[1:-1]
    wk = ((1 - uk) ** -1 - 4 / 3) / 3
    ek = np.max(np.abs(c.K(uk) - wk) / np.maximum(1, np.abs(wk)))
    verdict(4, max(e2, es, ek) <= 1e-8, f"power k=2 F err {e2:.1e}, sine F err {es:.1e}, "
                                        f"piecewise K err {ek:.1e}")


def test_criterion_05_positivity_boundary(verdict):
    accepted = example_5_3(0.25, 1.5).positivity.ok
    try:
        example_5_3(0.25, 1.49)
        rejected = False
    except PositivityViolated:
        rejected = True
    verdict(5, accepted and rejected, f"k=1.5 accepted={accepted}, k=1.49 rejected={rejected}")


def test_criterion_06_ode_residuals(corpus, verdict):
    worst = {}
    for name, c in corpus.items():
        lo = getattr(c, "u0", 0.0)
        u = np.linspace(lo, 1, 1002)[1:-1]
        r = np.asarray(c.ode_residual(u)) / np.maximum(1.0, np.abs(np.asarray(c.F(u))))
        worst[name] = float(np.max(r))
    name = max(worst, key=worst.get)
    verdict(6, worst[name] <= 1e-7, f"max residual {worst[name]:.2e} ({name})")


def test_criterion_07_kendall_tau_triple(corpus, verdict):
    ind = kendall_tau_report(corpus["independence"], N, seed=7)
    ok = (abs(ind.tau_direct) <= 1e-6 and abs(ind.tau_sample) <= 3 * ind.standard_error
          and abs(ind.tau_paper - 1 / 3) <= 1e-6 and "tau_paper_disagrees_with_sample" in ind.flags)
    parts = [f"independence ({ind.tau_paper:.6f}, {ind.tau_direct:.1e}, {ind.tau_sample:.4f}) "
             f"flags={ind.flags}"]
    for name in ("sine", "power_k2", "power_k4"):
        t = kendall_tau_report(corpus[name], N, seed=7)
        dev = abs(t.tau_direct - t.tau_sample)
        ok &= dev <= 3 * t.standard_error
        parts.append(f"{name} direct={t.tau_direct:.4f} sample={t.tau_sample:.4f} "
                     f"({dev / t.standard_error:.2f} SE)")
    verdict(7, ok, "; ".join(parts))


def test_criterion_08_conditional_cdf_consistency(corpus, verdict):
    rng = np.random.default_rng(8)
    u = rng.uniform(0.001, 0.999, 1000)
    v = rng.uniform(0.001, 0.999, 1000)
    t = rng.uniform(0, 1, 1000)
    h = 1e-6
    fd_worst, rt_worst = 0.0, 0.0
    for c in corpus.values():
        fd = (np.asarray(c.cdf(u + h, v)) - np.asarray(c.cdf(u - h, v))) / (2 * h)
        fd_worst = max(fd_worst, float(np.max(np.abs(fd - c.conditional_cdf(u, v)))))
        w = invert_conditional(c, u, t)
        rt = np.abs(np.asarray(c.conditional_cdf(u, w)) - t)
        rt_worst = max(rt_worst, float(np.max(rt)))
    verdict(8, fd_worst <= 1e-4 and rt_worst <= 1e-8,
            f"finite-difference gap {fd_worst:.2e}, inversion residual {rt_worst:.2e}")


def test_criterion_09_opposite_radial_symmetry(corpus, main_sample, verdict):
    a = to_normal_pairs(main_sample)
    b = to_normal_pairs(sample_pairs(corpus["main_delta1"], N, 99))
    refl = np.column_stack([-b[:, 1], -b[:, 0]])
    p_sum = stats.ks_2samp(a[:, 0] + a[:, 1], refl[:, 0] + refl[:, 1]).pvalue
    p_diff = stats.ks_2samp(a[:, 0] - a[:, 1], refl[:, 0] - refl[:, 1]).pvalue
    verdict(9, min(p_sum, p_diff) > LEVEL, f"two-sample KS p: X+Y {p_sum:.3f}, X-Y {p_diff:.3f}")


def test_criterion_10_load_inequalities(verdict):
    rng = np.random.default_rng(10)
    failures, worst_eq = 0, 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 11))
        widths = rng.uniform(0.05, 2.0, k)
        levels = rng.uniform(0.0, 20.0, k)
        levels[rng.integers(k)] += 0.5
        e = ExposureProfile(np.concatenate([[0], np.cumsum(widths)]), levels)
        m = rng.uniform(0.1, 4.0)
        n = m * rng.uniform(1.0, 4.0)
        if not check_lemma_inequalities(e, m, n, e.duration()).both_hold:
            failures += 1
        c0, t0 = rng.uniform(0.01, 50), rng.uniform(0.1, 10)
        r = check_lemma_inequalities(ExposureProfile.constant(c0, t0), m, n, t0)
        worst_eq = max(worst_eq, abs(r.lhs1 - r.rhs1) / max(1, abs(r.rhs1)),
                       abs(r.lhs2 - r.rhs2) / max(1, abs(r.rhs2)))
    verdict(10, failures == 0 and worst_eq <= 1e-12,
            f"violations={failures}/1000, constant-profile gap {worst_eq:.1e}")


E = math.e
# (alpha_i, beta_i, n_i), (alpha_next, beta_next, n_next), context, expected (compatible, delta, case)
TRUTH_TABLE = [
    ((2, 1, 1), (1, 1, 1), {}, (True, 1.0, "equal_n")),
    ((1, 1, 1), (1, 1, 1), {}, (True, 0.0, "equal_n")),
    ((1, 1, 1), (2, 1, 1), {}, (False, -1.0, "equal_n")),
    ((2, 1, 1), (1, 1.5, 1), {}, (False, 1.0, "equal_n")),
    ((0.5, 2, 3), (-0.5, 2, 3), {}, (True, 1.0, "equal_n")),
    ((0, 1, 2), (0, 2, 1), {"t": 1.0}, (True, 0.0, "decreasing_n")),
    ((3, 1, 2), (1, 2, 1), {"t": E}, (True, 1.0, "decreasing_n")),
    ((3, 1, 2), (2.5, 2, 1), {"t": E}, (False, -0.5, "decreasing_n")),
    ((3, 1, 2), (1, 1, 1), {"t": E}, (False, 1.5, "decreasing_n")),
    ((1, 2, 3), (0, 3, 2), {"t": E ** 2}, (False, -1.0, "decreasing_n")),
    ((4, 2, 3), (0, 3, 2), {"t": E ** 2}, (True, 2.0, "decreasing_n")),
    ((1, 1, 2), (0, 2, 1), {"t": 1 / E}, (True, 2.0, "decreasing_n")),
    ((0, 1, 2), (0, 2, 1), {"c_max": 5.0}, AmbiguousContext),
    ((2, 1, 1), (1, 1, 2), {"c_max": 1.0}, (True, 1.0, "increasing_n")),
    ((2, 1, 1), (1, 1, 2), {"c_max": E}, (True, 0.0, "increasing_n")),
    ((2, 1, 1), (1, 1, 2), {"c_max": E ** 2}, (False, -1.0, "increasing_n")),
    ((2, 1, 1), (0, 1, 3), {"c_max": math.exp(0.5)}, (True, 1.0, "increasing_n")),
    ((2, 1, 1), (1, 2, 2), {"c_max": 1.0}, (False, 1.0, "increasing_n")),
    ((5, 0.5, 1), (1, 0.5, 3), {"c_max": E ** 2}, (True, 2.0, "increasing_n")),
    ((2, 1, 1), (1, 1, 2), {"t": 3.0}, AmbiguousContext),
]


def test_criterion_11_compatibility_truth_table(verdict):
    wrong = []
    for k, (a, b, ctx, want) in enumerate(TRUTH_TABLE, 1):
        pa, pb = ProbitLevel(*a), ProbitLevel(*b)
        if want is AmbiguousContext:
            try:
                check_compatibility(pa, pb, ctx)
                wrong.append(k)
            except AmbiguousContext:
                pass
            continue
        r = check_compatibility(pa, pb, ctx)
        if (r.compatible, r.case_tag) != (want[0], want[2]) or abs(r.delta_i - want[1]) > 1e-12:
            wrong.append(k)
    verdict(11, not wrong, f"{len(TRUTH_TABLE)} cases, mismatches={wrong}")


CHAIN_LEVELS = [ProbitLevel(3.0, 1.0, 2.0, "mild"), ProbitLevel(2.5, 2.0, 1.0, "serious"),
                ProbitLevel(1.5 - 2 * math.log(2), 2.0, 2.0, "fatal")]
CHAIN_CTX = {"t": 1.0, "c_max": 2.0}


def _conforming_exposures(rng, count):
    out = []
    for _ in range(count):
        k = int(rng.integers(1, 8))
        widths = rng.uniform(0.05, 1.0, k)
        bps = np.concatenate([[0], np.cumsum(widths)])
        levels = rng.uniform(0.0, CHAIN_CTX["c_max"], k)
        levels[0] = rng.uniform(0.01, CHAIN_CTX["c_max"])
        t = rng.uniform(0.01, min(CHAIN_CTX["t"], bps[-1]))
        out.append((ExposureProfile(bps, levels), t))
    return out


def test_criterion_12_threshold_chains(verdict):
    ch = sample_threshold_chain(CHAIN_LEVELS, CHAIN_CTX, 10_000, 12)
    p = [stats.kstest(ch.gammas[:, j], "norm").pvalue for j in range(3)]
    support = ch.support_violations()
    rng = np.random.default_rng(12)
    exposures = _conforming_exposures(rng, 1000)
    events = ordering_violations(ch, CHAIN_LEVELS, exposures)
    # the exposures are informative only if some agents are injured and some are not
    frac = np.mean([np.mean(ch.gammas[:, j] <= probit_value(lv, e, t))
                    for e, t in exposures[:50] for j, lv in enumerate(CHAIN_LEVELS)])
    ok = (ch.copula_deltas == pytest.approx([0.5, 1.0]) and min(p) > LEVEL
          and int(support.sum()) == 0 and int(events.sum()) == 0)
    deltas = ", ".join(f"{d:.6g}" for d in ch.copula_deltas)
    verdict(12, ok, f"deltas=[{deltas}], KS p=[{', '.join(f'{x:.3f}' for x in p)}], "
                    f"support violations={support.tolist()}, ordering events={int(events.sum())} "
                    f"over {len(exposures)} exposures (mean injured fraction {frac:.2f})")


def test_criterion_13_reproducible_csv(tmp_path, verdict):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"type": "prescribed", "construction": "main",
                               "H": {"family": "gaussian_shift", "delta": 1.0}}))
    model = tmp_path / "m.model"
    run = [sys.executable, "-m", "hypocopula.cli"]
    subprocess.run(run + ["build", str(cfg), "-o", str(model)], check=True, capture_output=True)
    outs = []
    for k, extra in enumerate(([], [], ["--workers", "4"])):
        out = tmp_path / f"s{k}.csv"
        subprocess.run(run + ["sample", str(model), "-n", "50000", "--seed", "13", "--normal",
                              "-o", str(out)] + extra, check=True, capture_output=True)
        outs.append(out.read_bytes())
    same = outs[0] == outs[1] == outs[2]
    verdict(13, same, f"three runs (one with 4 workers), {len(outs[0])} bytes each, identical={same}")
