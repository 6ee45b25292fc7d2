"""Finite-state chains as exact ground truth.

For finite chains every population quantity the detector estimates can
be computed by enumeration: the stationary law, the pair-distribution
discrepancy between two chains, and a minorisation certificate.  This
demo uses those oracles to show the windowed estimator converging at
the rate the dependence-aware consistency bound predicts.

Run:  python3 demos/04_finite_chain_oracles.py
"""

import numpy as np

from kcusum import (
    FiniteChain,
    KernelSpec,
    consistency_bound,
    doeblin_of_finite,
    exact_mmd_finite,
    lift,
    lift_chain,
    mmd,
    sigma_from_doeblin,
    simulate_finite,
    stationary_distribution,
)


def main() -> None:
    kernel = KernelSpec.gaussian(1.0)
    states = np.array([[0.0], [1.0]])
    chain_p = FiniteChain(states=states, matrix=np.array([[0.9, 0.1],
                                                          [0.2, 0.8]]))
    chain_q = FiniteChain(states=states, matrix=np.array([[0.8, 0.2],
                                                          [0.2, 0.8]]))

    print("=== 1. Exact population quantities ===")
    pi_p = stationary_distribution(chain_p)
    pi_q = stationary_distribution(chain_q)
    print(f"stationary law of P: {np.round(pi_p, 6)}")
    print(f"stationary law of Q: {np.round(pi_q, 6)}")
    lifted_p, lifted_q = lift_chain(chain_p), lift_chain(chain_q)
    print(f"pair chain of P has {lifted_p.n_states} states "
          f"(supported transitions of a {chain_p.n_states}-state chain)")
    gamma = exact_mmd_finite(kernel, chain_p, chain_q)
    print(f"exact pair-distribution discrepancy gamma = {gamma:.6f}")

    print()
    print("=== 2. Minorisation certificates by enumeration ===")
    for name, chain in (("P", chain_p), ("Q", chain_q),
                        ("pair chain of P", lifted_p)):
        cert = doeblin_of_finite(chain)
        print(f"{name:>15}: lam={cert.lam:.4f} at lag={cert.lag}, "
              f"dependence sum sigma={sigma_from_doeblin(cert):.2f}")

    print()
    print("=== 3. The estimator honours its consistency bound ===")
    sigma_p = sigma_from_doeblin(doeblin_of_finite(lifted_p))
    sigma_q = sigma_from_doeblin(doeblin_of_finite(lifted_q))
    print(f"{'pairs':>6} | {'MC mean':>9} | {'|dev|':>9} | {'bound':>7}")
    for n in (100, 400, 1600):
        estimates = [
            mmd(kernel,
                lift(simulate_finite(chain_p, n + 1, seed=11, stream=2 * i)),
                lift(simulate_finite(chain_q, n + 1, seed=11, stream=2 * i + 1)))
            for i in range(100)
        ]
        mc = float(np.mean(estimates))
        bound = consistency_bound(sigma_p, sigma_q, n, n)
        print(f"{n:>6} | {mc:>9.5f} | {abs(mc - gamma):>9.5f} | "
              f"{bound.value:>7.4f}")
    print("the deviation from gamma shrinks like 1/sqrt(n) and stays far")
    print("inside the closed-form bound, which is what the detector's")
    print("analytic correction mode relies on.")


if __name__ == "__main__":
    main()
