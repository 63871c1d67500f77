import numpy as np
import pytest

from curlhomog import cell
from curlhomog.coeff import constant_field, make_family
from curlhomog.errors import InvalidArgument

S3 = np.sqrt(3.0)
LAM = make_family("laminate", [2.0, 1.0])


def test_constant_needs_no_corrector():
    M = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.2]])
    c = cell.solve_corrector(constant_field(M), 8)
    assert not np.any(c.chi)
    assert np.allclose(cell.homogenize(constant_field(M), 8).matrix, M, atol=1e-14)
    assert np.allclose(cell.homogenize(make_family("constant", [3.0]), 8).matrix, 3 * np.eye(3), atol=1e-14)


def test_laminate_corrector_structure():
    c = cell.solve_corrector(LAM, 16)
    assert not np.any(c.chi[1:])
    X = c.chi[0].reshape(c.grid.node_shape)
    assert np.abs(X - X[:, :1, :1]).max() < 1e-12 and np.abs(X).max() > 1e-2
    assert abs(np.mean(c.chi[0])) < 1e-14
    assert np.all(c.residuals() <= 10 * 1e-10)


def test_resolution_precondition():
    with pytest.raises(InvalidArgument):
        cell.solve_corrector(LAM, 3)


def test_laminate_oracle():
    H = cell.homogenize(LAM, 64).matrix
    assert np.abs(H - np.diag([S3, 2, 2])).max() <= 1e-4
    A0, B0 = cell.effective_maxwell(LAM, LAM, 64)
    assert np.abs(A0.matrix - np.diag([2, S3, S3])).max() <= 1e-4
    assert np.abs(B0.matrix - np.diag([S3, 2, 2])).max() <= 1e-4
    # H(A^-1) on its own: harmonic mean of 1/a along the lamination, arithmetic across
    assert A0.provenance["H_of_inverse"][0][0] == pytest.approx(0.5, abs=1e-10)
    assert A0.provenance["H_of_inverse"][1][1] == pytest.approx(1 / S3, abs=1e-10)


def test_monotone_resolution_convergence():
    M = make_family("laminate", [2.0, 1.9])
    exact = np.diag([np.sqrt(2.0 ** 2 - 1.9 ** 2), 2.0, 2.0])
    errs = [np.abs(cell.homogenize(M, n).matrix - exact).max() for n in (16, 32, 64)]
    assert errs[0] > errs[1] > errs[2] and errs[2] <= 1e-4


def test_two_phase_limit():
    out = [cell.homogenize(make_family("two_phase", [1.0, 4.0, w]), 64).matrix for w in (0.1, 0.05, 0.025)]
    d11 = [abs(H[0, 0] - 1.6) for H in out]
    assert d11[0] > d11[1] > d11[2] and d11[2] < 0.01
    assert all(abs(H[1, 1] - 2.5) < 1e-9 and abs(H[2, 2] - 2.5) < 1e-9 for H in out)


@pytest.mark.parametrize("name,params", [("trig", [2.0, 1.0]), ("checkerboard", [2.0, 1.0, 0.5]),
                                         ("laminate", [2.0, 1.0, 1])])
def test_voigt_reuss_bounds_and_symmetry(name, params):
    M = make_family(name, params)
    H = cell.homogenize(M, 24).matrix
    harm, arith = cell.laminate_bounds(M, 24 ** 3)
    assert np.linalg.eigvalsh(H - harm).min() >= -1e-10
    assert np.linalg.eigvalsh(arith - H).min() >= -1e-10
    assert np.abs(H - H.T).max() <= 1e-10
    # same ellipticity constant
    ev = np.linalg.eigvalsh(H)
    assert ev[0] >= M.mu and ev[-1] <= 1 / M.mu


def test_constant_skew_passes_through():
    base = make_family("trig", [2.0, 1.0])
    ns = make_family("trig", [2.0, 1.0], skew=[0.3, -0.2, 0.1])
    K = ns(np.zeros((1, 3)))[0] - base(np.zeros((1, 3)))[0]
    H = cell.homogenize(ns, 16).matrix
    assert np.allclose(H, cell.homogenize(base, 16).matrix + K, atol=1e-8)


def test_effective_maxwell_constant_identity_and_estimate():
    M = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.2]])
    a, b = cell.effective_maxwell(constant_field(M), constant_field(M), 8, estimate_error=True)
    assert np.abs(a.matrix - M).max() <= 1e-10 and np.abs(b.matrix - M).max() <= 1e-10
    assert a.error_estimate <= 1e-12
    d = b.as_dict()
    assert d["resolution"] == 8 and "iterations" in d
