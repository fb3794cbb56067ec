"""Dense tensors, symmetry classes and curvature algebra."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alecurv.tensor_core import (
    DenseTensor,
    antisymmetric,
    curvature_class,
    curvature_dimension,
    directional_norm_sq,
    kulkarni_nomizu,
    kulkarni_nomizu_array,
    null_space_basis,
    project_to_symmetry,
    random_orthogonal,
    rotate,
    SymmetryClass,
    weyl_class,
    weyl_decompose,
)


def _random_curvature(n, rng):
    b = curvature_class(n).basis()
    return (b @ rng.standard_normal(b.shape[1])).reshape((n,) * 4)


def _traces(rm):
    rc = np.einsum("ijil->jl", rm)
    return rc, np.trace(rc)


def test_dense_tensor_validation():
    with pytest.raises(ValueError):
        DenseTensor(9, 2, np.zeros(81))
    with pytest.raises(ValueError):
        DenseTensor(3, 6, np.zeros(3**6))
    with pytest.raises(ValueError):
        DenseTensor(3, 2, np.zeros(8))
    with pytest.raises(ValueError):
        DenseTensor(2, 2, np.array([0.0, np.nan, 0.0, 0.0]))
    t = DenseTensor.from_array(np.arange(9.0).reshape(3, 3))
    assert t.norm() == pytest.approx(np.sqrt(204.0))
    assert t.contract(0, 1).entries[0] == pytest.approx(12.0)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_curvature_dimension(n):
    # n^2 (n^2 - 1) / 12: independent count of algebraic curvature tensors
    assert curvature_class(n).basis().shape[1] == n * n * (n * n - 1) // 12 == curvature_dimension(n)


@pytest.mark.parametrize("n, dim", [(2, 0), (3, 0), (4, 10), (5, 35), (6, 84)])
def test_weyl_dimension(n, dim):
    # n(n+1)(n+2)(n-3)/12 for n >= 3
    assert weyl_class(n).basis().shape[1] == dim


def test_basis_orthonormal_and_admissible():
    sym = curvature_class(4)
    b = sym.basis()
    assert np.allclose(b.T @ b, np.eye(b.shape[1]), atol=1e-10)
    assert np.max(np.abs(sym.residual(b.T.reshape((-1,) + (4,) * 4)))) < 1e-10


def test_null_space_basis():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    ns = null_space_basis(a)
    assert ns.shape == (3, 1)
    assert np.allclose(a @ ns, 0, atol=1e-14)


def test_projection_idempotent():
    rng = np.random.default_rng(1)
    sym = SymmetryClass(3, 2, (antisymmetric(2, 0, 1),))
    t = DenseTensor(3, 2, rng.standard_normal(9))
    p = project_to_symmetry(t, sym)
    assert np.allclose(p.array, 0.5 * (t.array - t.array.T))
    assert np.allclose(project_to_symmetry(p, sym).entries, p.entries)


def test_kulkarni_nomizu_identity_is_space_form():
    # g ⊙ g = 2 (g_ik g_jl - g_il g_jk): the constant curvature tensor
    g = np.eye(3)
    kn = kulkarni_nomizu(g, g).array
    expect = 2 * (np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g))
    assert np.allclose(kn, expect)


def test_kulkarni_nomizu_rejects_asymmetric():
    with pytest.raises(ValueError):
        kulkarni_nomizu(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_weyl_decomposition_roundtrip(n):
    rng = np.random.default_rng(n)
    rm = _random_curvature(n, rng)
    rc, r = _traces(rm)
    w, a = weyl_decompose(rm, np.eye(n), rc, r)
    assert np.allclose(w.array + kulkarni_nomizu_array(a.array, np.eye(n)), rm, atol=1e-12)
    # Weyl part is totally trace-free and orthogonal to A ⊙ g
    assert np.allclose(np.einsum("ijil->jl", w.array), 0, atol=1e-12)
    assert abs(np.sum(w.array * kulkarni_nomizu_array(a.array, np.eye(n)))) < 1e-10


def test_weyl_decompose_checks_traces():
    rm = _random_curvature(4, np.random.default_rng(0))
    rc, r = _traces(rm)
    with pytest.raises(ValueError):
        weyl_decompose(rm, np.eye(4), rc + 1.0, r)


def test_directional_norm_sq():
    t = np.zeros((2, 2))
    t[1, 0] = 3.0
    assert directional_norm_sq(t, [1.0, 0.0]) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        directional_norm_sq(t, [1.0, 1.0])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_curvature_class_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    n = 4
    rm = _random_curvature(n, rng)
    q = random_orthogonal(n, rng)
    rot = rotate(rm[None], q)[0]
    assert np.max(np.abs(curvature_class(n).residual(rot[None]))) < 1e-10
    assert np.linalg.norm(rot) == pytest.approx(np.linalg.norm(rm), rel=1e-12)
