"""Smoke test for the rvcv Python extension."""

import json
import math
import random

import rvcv


def zero_variance_exponential():
    # Exact score with a degree-two basis removes all variance for g(θ) = θ.
    y = 2.0
    rng = random.Random(1)
    spec = rvcv.PolynomialSpec(1, 2)
    thetas = [rng.gammavariate(2.0, 1.0 / y) for _ in range(500)]
    g = list(thetas)
    ms = [spec.monomials([t], [rvcv.exponential_score(y, t)]) for t in thetas]
    est = rvcv.rv_estimate(g, ms)
    assert est.perfect, est
    assert abs(est.mu_controlled - 2.0 / y) < 1e-10, est
    print("zero-variance exponential:", est)


def ising_oracles():
    logz = rvcv.ising_log_partition(0.0, 3, 3)
    assert abs(logz - 9 * math.log(2.0)) < 1e-12, logz
    spins = [1, -1, 1, 1, 1, -1, -1, 1, 1]
    s = rvcv.ising_suff_stat(3, 3, spins)
    grid = [-3.0 + 6.0 * i / 400 for i in range(401)]
    mean, sd, truncated = rvcv.ising_posterior_mean(3, 3, spins, grid, prior_sd=1.0)
    assert sd > 0.0 and not truncated
    print(f"ising 3x3: s={s}, posterior mean={mean:.6f} sd={sd:.6f}")


def ergm_oracle():
    assert abs(rvcv.ergm_log_partition((0.0, 0.0), 3) - 3 * math.log(2.0)) < 1e-12
    print("ergm n=3 log Z(0) ok")


def degenerate_design():
    try:
        rvcv.estimate_optimal_coeffs([1.0, 2.0, 3.0], [[1.0], [1.0], [1.0]])
    except rvcv.DegenerateDesignError as e:
        print("degenerate design raised:", e)
    else:
        raise AssertionError("expected DegenerateDesignError")


def allocation():
    k = rvcv.argmin_r(16, 4, 1e4, 0.99, 0.5)
    assert k == 4, k
    print("argmin_r with 4 cores:", k)


def small_experiment():
    config = """
experiment = "exponential"
seed = 3
replicates = 2
iterations = [200]
k = [1, 4]
degrees = [1, 2]
burn_in = 100
"""
    report = json.loads(rvcv.run_experiment_toml(config, cores=2))
    assert len(report["rows"]) == 4
    row = report["rows"][-1]
    print("experiment row:", row["iterations"], row["k"], row["degree"], row["targets"][0]["r"])


if __name__ == "__main__":
    zero_variance_exponential()
    ising_oracles()
    ergm_oracle()
    degenerate_design()
    allocation()
    small_experiment()
    print("smoke test passed")
