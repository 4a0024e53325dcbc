"""Smoke test for the vilenkin extension module.

Build and install first, e.g.
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/*.whl
"""
import cmath
import json
import random

import vilenkin


def close(a, b, tol=1e-10):
    return all(abs(x - y) <= tol for x, y in zip(a, b)) and len(a) == len(b)


def main():
    sys = vilenkin.RadixSystem.parse("2,3,4", 4)
    assert sys.size == 48 and sys.radices == [2, 3, 4, 2]
    assert sys.digits(11) == [1, 2, 1, 0]
    assert sys.count_n0_band(2) == 3

    rng = random.Random(0)
    f = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(sys.size)]
    fast = vilenkin.fast_transform(sys, f)
    assert close(fast, vilenkin.naive_transform(sys, f))
    assert close(vilenkin.inverse_transform(sys, fast), f)

    # D_{M_2} = M_2 on I_2, zero elsewhere
    d6 = vilenkin.dirichlet_kernel(sys, 6)
    assert close(d6, [6 if i % 6 == 0 else 0 for i in range(sys.size)])

    r0 = vilenkin.character(vilenkin.RadixSystem.dyadic(6), 1)
    assert abs(vilenkin.hardy_quasinorm(vilenkin.RadixSystem.dyadic(6), r0, 1.0) - 1) < 1e-12
    assert abs(r0[1] - cmath.exp(1j * cmath.pi)) < 1e-12

    plan = vilenkin.select_alphas(vilenkin.RadixSystem.dyadic(16), "log", 0.5)
    assert plan.alphas == [2, 4, 8]
    report = json.loads(plan.divergence_json())
    assert len(report["rows"]) == 3
    checks = json.loads(plan.verify_json(weak_stride=5))
    assert checks["flatness_ok"] and checks["coefficients_ok"]

    try:
        vilenkin.select_alphas(vilenkin.RadixSystem.dyadic(16), "log", 0.5, rule="scaled-doubling")
    except ValueError as e:
        assert "resolution" in str(e)
    else:
        raise AssertionError("expected resolution error")

    hardy = json.loads(vilenkin.run_experiment("hardy", radix="2,3,2", resolution=5, trials=20, seed=1))
    assert hardy["config"]["seed"] == 1 and len(hardy["trials"]) == 20
    print("vilenkin smoke test: ok")


if __name__ == "__main__":
    main()
