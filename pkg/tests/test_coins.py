import itertools
import math
import time

import numpy as np
import pytest

from photonwalk import coins as C
from photonwalk.linalg import equal_up_to_global_phase, transpose_residual, unitarity_residual
from conftest import fixture_matrix

PI = math.pi


def test_grover_displays():
    assert np.abs(C.coin(C.CoinSpec("grover", 3)) - np.array([[-1, 2, 2], [2, -1, 2], [2, 2, -1]]) / 3).max() < 1e-15
    g4 = C.coin(C.CoinSpec("grover", 4))
    assert np.abs(g4 - (np.ones((4, 4)) - 2 * np.eye(4)) / 2).max() < 1e-15
    assert np.allclose(np.abs(g4), 0.5)


def test_dft_formula_and_orthonormal():
    f4 = C.coin(C.CoinSpec("dft", 4))
    w = np.exp(-2j * PI / 4)
    expected = np.array([[w ** (j * k) for k in range(4)] for j in range(4)]) / 2
    assert np.abs(f4 - expected).max() < 1e-15
    assert np.abs(f4.conj().T @ f4 - np.eye(4)).max() < 1e-15
    assert np.abs(C.coin(C.CoinSpec("dft", 3, conjugate=True)) - C.coin(C.CoinSpec("dft", 3)).conj()).max() < 1e-15


def test_hadamard():
    h = C.coin(C.CoinSpec("hadamard", 4))
    assert np.abs(h - np.kron(C.coin(C.CoinSpec("hadamard", 2)), C.coin(C.CoinSpec("hadamard", 2)))).max() < 1e-15
    with pytest.raises(ValueError, match="power-of-two"):
        C.CoinSpec("hadamard", 3)
    with pytest.raises(ValueError):
        C.CoinSpec("dft", 1)


def test_coin_invariants():
    for d in range(2, 9):
        for kind in ("grover", "dft"):
            assert unitarity_residual(C.coin(C.CoinSpec(kind, d))) < 1e-12
        g = C.coin(C.CoinSpec("grover", d))
        assert transpose_residual(g) == 0.0
        for perm in itertools.islice(itertools.permutations(range(d)), 30):
            p = np.eye(d)[list(perm)]
            assert np.abs(p @ g @ p.T - g).max() < 1e-15


@pytest.mark.parametrize("name", sorted(C.PUBLISHED_SETTINGS))
def test_published_setting(name):
    family, phases, spec = C.PUBLISHED_SETTINGS[name]
    problem = C.RealizationProblem(family, C.coin(spec), spec.label)
    res = C.verify_realization(problem, phases)
    assert res.ok, f"{name}: residual {res.residual:.3e}"
    assert res.residual <= 1e-9


def test_alternative_quarter_fourier():
    family, phases, spec = C.ALTERNATIVE_SETTINGS["quarter_fourier"]
    res = C.verify_realization(C.RealizationProblem(family, C.coin(spec)), phases)
    assert res.ok and res.residual < 1e-12


def test_cyclic_permutation_bounded_by_transpose_defect(rng):
    target = fixture_matrix("cyclic_permutation3.json")
    problem = C.RealizationProblem(C.Family.UNBIASED_3PORT, target)
    bound = 0.5 * transpose_residual(target)
    for _ in range(200):
        res = C.verify_realization(problem, rng.uniform(0, 2 * PI, 6))
        assert not res.ok
        assert res.residual >= bound - 1e-12
        assert res.transpose_bound == bound


def test_fit_refuses_non_self_transpose():
    problem = C.RealizationProblem(C.Family.UNBIASED_3PORT, fixture_matrix("cyclic_permutation3.json"))
    with pytest.raises(C.NotSelfTransposeError, match="symmetric unitaries"):
        C.fit_phases(problem)


def test_wrong_arity():
    problem = C.RealizationProblem(C.Family.UNBIASED_3PORT, np.eye(3))
    with pytest.raises(ValueError, match="takes 3 or 6"):
        C.verify_realization(problem, (0.0, 1.0))
    with pytest.raises(ValueError):
        C.RealizationProblem(C.Family.UNBIASED_4PORT, np.eye(3))
    with pytest.raises(ValueError, match="unknown"):
        C.RealizationProblem(C.Family.UNBIASED_3PORT, np.eye(3), free=("kz",))


def test_fit_grover3_on_mirrors():
    g3 = C.coin(C.CoinSpec("grover", 3))
    problem = C.RealizationProblem(C.Family.UNBIASED_3PORT, g3, "grover", free=("phi_A", "phi_B", "phi_C"))
    res = C.fit_phases(problem, seed=0)
    assert res.converged and res.residual <= 1e-6
    # two of the three mirrors land on 3pi/2; with those two fixed the third is
    # irrelevant (every phi_C gives Grover up to a global phase)
    mirrors = sorted(res.phases[n] for n in ("phi_A", "phi_B", "phi_C"))
    on_grover = [abs(math.remainder(x - 3 * PI / 2, 2 * PI)) < 1e-3 for x in mirrors]
    assert sum(on_grover) >= 2
    again = C.verify_realization(problem, res.phases)
    assert abs(again.residual - res.residual) < 1e-12


def test_grover3_free_third_mirror(rng):
    g3 = C.coin(C.CoinSpec("grover", 3))
    for x in rng.uniform(0, 2 * PI, 20):
        for mirror in ((3 * PI / 2, 3 * PI / 2, x), (x, 3 * PI / 2, 3 * PI / 2), (3 * PI / 2, x, 3 * PI / 2)):
            assert equal_up_to_global_phase(C.device_matrix(C.Family.UNBIASED_3PORT, mirror), g3, 1e-9)


def test_fit_identity():
    res = C.fit_phases(C.RealizationProblem(C.Family.UNBIASED_3PORT, np.eye(3), "identity"), seed=1)
    assert res.converged and res.residual <= 1e-6


def test_fit_fourier4_on_reversible_quarter():
    f4 = C.coin(C.CoinSpec("dft", 4))
    problem = C.RealizationProblem(C.Family.REVERSIBLE_QUARTER, f4, "dft")
    res = C.fit_phases(problem, seed=0)
    assert res.converged and res.residual <= 1e-6
    assert C.verify_realization(problem, res.phases, tol=1e-6).ok


def test_fit_never_claims_success_above_tol():
    g4 = C.coin(C.CoinSpec("grover", 4))
    problem = C.RealizationProblem(C.Family.UNBIASED_4PORT, g4, free=("phi_A",))
    res = C.fit_phases(problem, restarts=2, budget=50, seed=3, tol=1e-12)
    assert res.converged == (res.residual <= 1e-12)
    assert res.evaluations <= 50 + 1


def test_fit_deterministic():
    g3 = C.coin(C.CoinSpec("grover", 3))
    problem = C.RealizationProblem(C.Family.REVERSIBLE_TRITTER, g3)
    a = C.fit_phases(problem, seed=4, budget=3000)
    b = C.fit_phases(problem, seed=4, budget=3000)
    assert a.to_dict() == b.to_dict()


def test_published_suite_runtime():
    start = time.perf_counter()
    for family, phases, spec in C.PUBLISHED_SETTINGS.values():
        C.verify_realization(C.RealizationProblem(family, C.coin(spec)), phases)
    assert time.perf_counter() - start < 1.0
