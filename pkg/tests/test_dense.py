import numpy as np
import pytest

from hydrospec import dense
from hydrospec.mlspectrum import matching_distance


def test_closed_forms():
    assert np.allclose(dense.eigvals([[2.0]]), [2.0])
    rot = dense.eigvals([[0.0, -1.0], [1.0, 0.0]])
    assert matching_distance(rot, [1j, -1j]) < 1e-14
    tri = np.triu(np.arange(1.0, 17.0).reshape(4, 4))
    assert matching_distance(dense.eigvals(tri), np.diag(tri)) < 1e-12
    assert dense.eigvals(np.zeros((0, 0))).size == 0


def test_companion_matrix_roots():
    roots = np.array([-3.0, -1.0, 0.5, 2.0, 4.0])
    coeffs = np.poly(roots)
    comp = np.zeros((5, 5))
    comp[0, :] = -coeffs[1:]
    comp[1:, :-1] = np.eye(4)
    assert matching_distance(dense.eigvals(comp), roots) < 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_random_against_lapack(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    a = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-2, 2, (n, 1))
    ours = dense.eigvals(a)
    ref = np.linalg.eigvals(a)
    scale = np.linalg.norm(a, 2)
    assert matching_distance(ours, ref) <= 1e-9 * scale


def test_sorted_and_conjugate_closed():
    rng = np.random.default_rng(7)
    w = dense.eigvals(rng.standard_normal((12, 12)))
    assert np.all(np.diff(w.real) >= 0)
    nonreal = w[w.imag != 0]
    assert matching_distance(nonreal, nonreal.conjugate()) < 1e-12


def test_rejects_non_square():
    with pytest.raises(ValueError):
        dense.eigvals(np.ones((2, 3)))
