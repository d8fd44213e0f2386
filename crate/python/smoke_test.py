"""Smoke test for the phisub extension module.

Build and install first:
    pip install maturin
    maturin develop -m crates/python/Cargo.toml --release
"""

import math

import phisub


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert phisub.phi_p(3.0, 0.5) == 0.125
    assert close(phisub.phi_p_inverse(3.0, phisub.phi_p(3.0, 2.0)), 2.0, 1e-12)
    assert close(phisub.conjugate_index(3.0), 1.5, 1e-15)

    value, argmax = phisub.legendre_transform(3.0, 2.0)
    assert close(value, 1.718951416497460, 1e-8), value
    assert close(argmax, math.sqrt(2.0), 1e-6), argmax

    est = phisub.tau_norm("gaussian", 2.0, sigma=3.0)
    assert est.tau == 3.0 and est.method == "Exact", est
    assert close(phisub.tau_norm("rademacher", 2.0).tau, 1.0, 1e-3)
    emp = phisub.tau_norm("empirical", 2.0, samples=[1.0, -1.0, 1.0, -1.0])
    assert emp.tau > 0.0

    try:
        phisub.tau_norm("gaussian", 1.5)
    except ArithmeticError:
        pass
    else:
        raise AssertionError("Gaussian must not be phi_1.5-subgaussian")
    try:
        phisub.phi_p(0.5, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("p < 1 must be rejected")

    assert close(phisub.tail_bound(3.0, 1.0, 2.0), 2.0 * math.exp(-(2.0 ** 1.5 / 1.5 - 1.0 / 1.5 + 0.5)), 1e-12)
    prob, valid = phisub.partial_sum_tail_bound(2.0, 1.0, 0.5, 0.3, 1000)
    assert valid and 0.0 < prob < 1e-18
    prob, valid = phisub.mz_tail_bound(2.0, 1.0, 1.5, 0.5, 10000)
    assert valid and close(prob, 0.135349, 1e-5), prob

    series = phisub.series_sum_bound(2.0, 1.0, 0.5, 1.0)
    assert series.finite and series.upper_bound >= 1.8699
    c, alpha, _, ok = phisub.slln_condition_fit([(1, 1), (4, 2), (16, 4), (64, 8)])
    assert ok and close(c, 1.0, 1e-9) and close(alpha, 0.5, 1e-9)

    xs = phisub.generate_sequence("rademacher", 1000, 3)
    assert len(xs) == 1000 and set(xs) == {-1.0, 1.0}
    assert xs == phisub.generate_sequence("rademacher", 1000, 3)

    report = phisub.convergence_report("rademacher", [100, 1000, 10000], [0.1, 0.3, 0.5], 500, seed=11)
    assert report.violations == 0
    assert report.mean_scale_decreasing
    assert phisub.Report.from_json(report.to_json()) == report
    assert report.to_csv().startswith("n,epsilon,normalization")

    print("phisub smoke test passed")


if __name__ == "__main__":
    main()
